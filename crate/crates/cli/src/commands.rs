use crate::io::{
    format_vector, parse_op_spec, parse_sidecar, read_text, read_vector, sidecar, sidecar_path, write_file,
};
use crate::plot::{convergence_svg, sweep_svg, Curve};
use crate::{
    BenchArgs, BoundsArgs, CompressArgs, DecompressArgs, Fault, Format, Loss, ProblemArgs, SelftestArgs, StatsArgs,
    SweepArgs, Usage, Validation,
};
use anyhow::{Context, Result};
use gradcodec::acceptance::{run_selected, Settings, ALL_CRITERIA};
use gradcodec::bitio::Container;
use gradcodec::bounds::{
    avg_lower_bound, dsd_predicted_bits, rsd_predicted_bits, savings_table, up_lower_bound, BoundReport,
};
use gradcodec::compressors::{compress as encode, decompress as decode, OperatorConfig, OperatorKind};
use gradcodec::data::{load_libsvm, read_manifest, SynthSpec};
use gradcodec::geometry::sample_unit_sphere;
use gradcodec::optim::{cgd_run, iteration_ratio_sweep, CgdOptions, Prepared, Problem, RunTrace, SweepFamily};
use gradcodec::rng::StreamKey;
use gradcodec::stats::Summary;
use gradcodec::Error;
use std::path::PathBuf;

const DEFAULT_RUNS: [&str; 5] = ["dsd:nu=0.1", "rsd:nu=0.25", "sc:alpha=0.9", "dither:levels=8", "natural"];
const DEFAULT_OUT: &str = "gradcodec-out";

fn meta(pairs: &[(&str, String)]) -> Vec<(String, String)> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

/// Bits the operator is expected or guaranteed to stay under at dimension `d`.
fn predicted_bits(config: &OperatorConfig, d: usize) -> Option<(&'static str, f64)> {
    match config.kind {
        OperatorKind::Dsd => dsd_predicted_bits(config.nu?.min(1.0), d).ok().map(|b| ("max", b)),
        OperatorKind::Rsd => rsd_predicted_bits(config.nu?, d).ok().map(|b| ("mean", b)),
        OperatorKind::Sc => avg_lower_bound(config.alpha?, d)
            .ok()
            .map(|b| ("mean below", 31.0 + b + 3.0)),
        OperatorKind::Natural => Some(("exact", 9.0 * d as f64)),
        OperatorKind::Identity => Some(("exact", 32.0 * d as f64)),
        _ => None,
    }
}

fn lower_bound(distortion: f64, d: usize) -> Option<f64> {
    if distortion >= 1.0 {
        Some(0.0)
    } else {
        up_lower_bound(distortion, d).ok()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into())
}

pub fn compress(a: &CompressArgs) -> Result<()> {
    let x = read_vector(&a.input)?;
    let d = x.len();
    let config = a.op.config();
    let enc = encode(&config, &x, a.message)?;
    let container = Container {
        tag: config.kind.tag(),
        dim: u32::try_from(d).map_err(|_| Error::InvalidArgument(format!("dimension {d} exceeds 2^32")))?,
        payload: enc.payload.clone(),
    };
    let out = a.out.clone().unwrap_or_else(|| {
        let mut p = a.input.clone().into_os_string();
        p.push(".gcv");
        PathBuf::from(p)
    });
    write_file(&out, container.to_bytes()?)?;
    let side = sidecar(&config, d, a.message, enc.outcome.bits, enc.outcome.distortion);
    write_file(&sidecar_path(&out), serde_json::to_string_pretty(&side)? + "\n")?;
    let dist = enc.outcome.distortion;
    println!("message\t{}", out.display());
    println!("operator\t{}", config.label());
    println!("class\t{}", enc.class);
    println!("d\t{d}");
    println!("bits\t{}", enc.outcome.bits);
    println!("bits_per_coordinate\t{:.4}", enc.outcome.bits as f64 / d as f64);
    println!("binary32_bits\t{}", 32 * d);
    println!("distortion\t{dist:.6e}");
    println!("lower_bound_at_distortion\t{}", fmt_opt(lower_bound(dist, d)));
    if let Some((kind, bits)) = predicted_bits(&config, d) {
        println!("predicted_bits ({kind})\t{bits:.2}");
    }
    if let Some(t) = enc.trials {
        println!("trials\t{t}");
    }
    Ok(())
}

pub fn decompress(a: &DecompressArgs) -> Result<()> {
    let bytes = std::fs::read(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let container = Container::from_bytes(&bytes).with_context(|| format!("decoding {}", a.input.display()))?;
    let kind = OperatorKind::from_tag(container.tag)?;
    let side = sidecar_path(&a.input);
    let (config, recorded) = if side.exists() {
        parse_sidecar(&read_text(&side)?).with_context(|| format!("parsing {}", side.display()))?
    } else {
        let mut c = a.op.config();
        c.kind = kind;
        (c, 0)
    };
    if config.kind != kind {
        return Err(Error::Decode {
            offset: 0,
            reason: format!("container holds {kind} but the metadata describes {}", config.kind),
        }
        .into());
    }
    let message = a.message.unwrap_or(recorded);
    let d = container.dim as usize;
    let values = decode(&config, &container.payload, d, message)?;
    let text = format_vector(
        &meta(&[
            ("operator", config.label()),
            ("seed", config.seed.to_string()),
            ("message", message.to_string()),
            ("source", a.input.display().to_string()),
            ("version", gradcodec::VERSION.to_string()),
        ]),
        &values,
    );
    match &a.out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_rows(header: &[&str], rows: &[Vec<String>], format: Format) -> Result<String> {
    let sep = match format {
        Format::Csv => ",",
        Format::Table => "\t",
        Format::Svg => return Err(Usage("this command writes csv or table output only".into()).into()),
    };
    let mut out = header.join(sep);
    out.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|c| if sep == "," { c.replace(',', ";") } else { c.clone() }).collect();
        out.push_str(&cells.join(sep));
        out.push('\n');
    }
    Ok(out)
}

pub fn stats(a: &StatsArgs) -> Result<()> {
    if a.messages == 0 || a.d == 0 {
        return Err(Usage("--d and --messages must be positive".into()).into());
    }
    let config = a.op.config();
    config.validate(a.d)?;
    let mut bits = Vec::with_capacity(a.messages);
    let mut dist = Vec::with_capacity(a.messages);
    for m in 0..a.messages as u64 {
        let x = sample_unit_sphere(a.d, &mut StreamKey::new(config.seed ^ 0x7374_6174, m).rng());
        let enc = encode(&config, &x, m)?;
        bits.push(enc.outcome.bits as f64);
        dist.push(enc.outcome.distortion);
    }
    let b = Summary::of(&bits);
    let s = Summary::of(&dist);
    let max_dist = dist.iter().copied().fold(0.0, f64::max);
    let predicted = predicted_bits(&config, a.d);
    let row = vec![
        config.label(),
        a.d.to_string(),
        a.messages.to_string(),
        config.seed.to_string(),
        format!("{:.2}", b.mean),
        format!("{:.2}", b.std_dev),
        format!("{:.4}", b.mean / a.d as f64),
        format!("{:.6e}", s.mean),
        format!("{max_dist:.6e}"),
        fmt_opt(lower_bound(s.mean, a.d)),
        predicted.map(|(k, v)| format!("{v:.2} ({k})")).unwrap_or_else(|| "-".into()),
    ];
    let header = [
        "operator",
        "d",
        "messages",
        "seed",
        "mean_bits",
        "sd_bits",
        "bits_per_coordinate",
        "mean_distortion",
        "max_distortion",
        "lower_bound",
        "predicted_bits",
    ];
    print!("{}", emit_rows(&header, &[row], a.format)?);
    Ok(())
}

fn cell<T>(r: &gradcodec::Result<T>, f: impl Fn(&T) -> String) -> String {
    match r {
        Ok(v) => f(v),
        Err(e) => format!("error: {e}"),
    }
}

pub fn bounds(a: &BoundsArgs) -> Result<()> {
    if a.alpha.is_empty() || a.d.is_empty() {
        return Err(Usage("empty --alpha or --d grid".into()).into());
    }
    let mut rows = Vec::new();
    for &p in &a.alpha {
        for &d in &a.d {
            let r = BoundReport::new(p, d);
            rows.push(vec![
                p.to_string(),
                d.to_string(),
                cell(&r.up_lower, |v| format!("{v:.3}")),
                cell(&r.avg_lower, |v| format!("{v:.3}")),
                cell(&r.bstar, |v| format!("{:.3} ± {:.3}", v.estimate, v.band)),
                cell(&r.predicted_dsd_bits, |v| format!("{v:.1}")),
                cell(&r.predicted_rsd_bits, |v| format!("{v:.1}")),
                cell(&r.rsd_savings, |v| format!("{v:.3}")),
            ]);
        }
    }
    let header = [
        "param",
        "d",
        "worst_case_lower_bits",
        "neg_log2_cap_probability",
        "b_star",
        "dsd_bits_nu_param",
        "rsd_bits_omega_param",
        "rsd_savings_omega_param",
    ];
    print!("{}", emit_rows(&header, &rows, a.format)?);
    println!();
    let mut savings = Vec::new();
    for &d in &a.d {
        let k = a.k.unwrap_or((d / 100).max(1)).min(d);
        for r in savings_table(d, k)? {
            savings.push(vec![
                r.method.to_string(),
                d.to_string(),
                format!("{:.1}", r.bits),
                format!("{:.4}", r.iteration_factor),
                format!("{:.4}", r.bit_ratio),
                format!("{:.2}", r.savings),
            ]);
        }
    }
    let header = ["method", "d", "bits", "iteration_factor", "bit_ratio", "savings"];
    print!("{}", emit_rows(&header, &savings, a.format)?);
    Ok(())
}

fn resolve_dataset(p: &ProblemArgs) -> Result<PathBuf> {
    if let Some(m) = &p.manifest {
        if let Some((_, path)) = read_manifest(m)?.into_iter().find(|(name, _)| *name == p.dataset) {
            return Ok(path);
        }
    }
    Ok(PathBuf::from(&p.dataset))
}

pub fn load_problem(p: &ProblemArgs) -> Result<Prepared> {
    let (ds, synth_logistic) = if p.dataset.starts_with("synth:") {
        let spec = SynthSpec::parse(&p.dataset)?;
        (spec.generate(), spec.logistic)
    } else {
        (load_libsvm(&resolve_dataset(p)?)?, false)
    };
    let logistic = match p.loss {
        Some(Loss::Logistic) => true,
        Some(Loss::Ridge) => false,
        None => synth_logistic,
    };
    let problem = if logistic { Problem::logistic(&ds)? } else { Problem::ridge(&ds)? };
    Ok(Prepared::new(problem)?)
}

fn options(p: &ProblemArgs) -> CgdOptions {
    CgdOptions {
        eps: p.eps,
        max_iter: p.max_iter,
        ..CgdOptions::default()
    }
}

fn slug(label: &str) -> String {
    let s: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' })
        .collect();
    s.trim_matches('_').replace("__", "_")
}

fn topk_grid(d: usize) -> Vec<usize> {
    if d <= 64 {
        return (1..=d).collect();
    }
    let mut ks: Vec<usize> = (0..=24)
        .map(|i| (d as f64).powf(i as f64 / 24.0).round() as usize)
        .map(|k| k.clamp(1, d))
        .collect();
    ks.dedup();
    ks
}

/// The Top-k run that reaches `eps` with the fewest bits, or the lowest final error.
fn best_topk(prep: &Prepared, opts: &CgdOptions) -> Result<(usize, RunTrace)> {
    let mut best: Option<(usize, RunTrace)> = None;
    for k in topk_grid(prep.problem.d()) {
        let trace = cgd_run(prep, &OperatorConfig::topk(k), opts)?;
        let key = |t: &RunTrace| {
            let last = t.rows.last().map(|r| r.rel_err).unwrap_or(f64::INFINITY);
            (!t.converged(), if t.converged() { t.total_bits() as f64 } else { last })
        };
        if best.as_ref().is_none_or(|(_, b)| key(&trace) < key(b)) {
            best = Some((k, trace));
        }
    }
    best.ok_or_else(|| anyhow::anyhow!("empty Top-k grid"))
}

fn curve_from_csv(text: &str) -> Result<Curve> {
    let trace = RunTrace::from_csv(text)?;
    Ok(Curve {
        label: trace.label.clone(),
        points: trace.rows.iter().map(|r| (r.bits as f64 / 8.0, r.rel_err)).collect(),
        dashed: false,
    })
}

pub fn bench(a: &BenchArgs) -> Result<()> {
    let prep = load_problem(&a.problem)?;
    let opts = options(&a.problem);
    let specs: Vec<String> = if a.runs.is_empty() {
        DEFAULT_RUNS.iter().map(|s| s.to_string()).collect()
    } else {
        a.runs.clone()
    };
    let configs = specs
        .iter()
        .map(|s| parse_op_spec(s, a.seed))
        .collect::<gradcodec::Result<Vec<_>>>()?;
    let extra = meta(&[("dataset", a.problem.dataset.clone()), ("base_seed", a.seed.to_string())]);
    let mut traces = Vec::new();
    let mut basic = cgd_run(&prep, &OperatorConfig::identity(), &opts)?;
    basic.label = "Basic".into();
    traces.push(basic);
    for config in &configs {
        traces.push(cgd_run(&prep, config, &opts)?);
    }
    let (k, mut best) = best_topk(&prep, &opts)?;
    best.label = "Best Top-k".into();
    best.metadata.push(("best_k".into(), k.to_string()));
    traces.push(best);
    let basic_bits = traces[0].total_bits().max(1) as f64;
    let out_dir = a.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let mut curves = Vec::new();
    println!("label\tstatus\titerations\ttotal_bytes\tbits_vs_basic\tfile");
    for t in traces.iter_mut() {
        t.metadata.extend(extra.iter().cloned());
        let csv = t.to_csv();
        let file = if a.format == Format::Table {
            String::from("-")
        } else {
            let path = out_dir.join(format!("{}.csv", slug(&t.label)));
            write_file(&path, &csv)?;
            path.display().to_string()
        };
        println!(
            "{}\t{}\t{}\t{:.1}\t{:.4}\t{file}",
            t.label,
            t.status,
            t.iterations(),
            t.total_bits() as f64 / 8.0,
            t.total_bits() as f64 / basic_bits
        );
        curves.push(curve_from_csv(&csv)?);
    }
    if a.format == Format::Svg {
        let title = format!("relative error vs bytes, {} (eps = {:e})", a.problem.dataset, opts.eps);
        let mut m = extra.clone();
        m.push(("version".into(), gradcodec::VERSION.into()));
        let svg = convergence_svg(&title, &curves, &m)?;
        let path = out_dir.join("bench.svg");
        write_file(&path, svg)?;
        println!("plot\t{}", path.display());
    }
    Ok(())
}

/// `(param, ratio, total_bits)` rows of a sweep CSV.
fn sweep_points(csv: &str) -> Vec<(f64, Option<f64>, Option<f64>)> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .filter_map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            let param = cols.first()?.parse().ok()?;
            Some((param, cols.get(3)?.parse().ok(), cols.get(5)?.parse().ok()))
        })
        .collect()
}

pub fn sweep(a: &SweepArgs) -> Result<()> {
    let family = SweepFamily::parse(&a.family)?;
    if a.grid.is_empty() {
        return Err(Usage("empty parameter grid; pass --grid with comma separated values".into()).into());
    }
    if a.seeds == 0 {
        return Err(Usage("--seeds must be at least 1".into()).into());
    }
    let prep = load_problem(&a.problem)?;
    let opts = options(&a.problem);
    let table = iteration_ratio_sweep(&prep, family, &a.grid, &opts, a.seed, a.seeds)?;
    let metadata = meta(&[
        ("dataset", a.problem.dataset.clone()),
        ("loss", prep.problem.kind().to_string()),
        ("eps", opts.eps.to_string()),
        ("base_seed", a.seed.to_string()),
        ("seeds", a.seeds.to_string()),
        ("version", gradcodec::VERSION.to_string()),
    ]);
    let mut csv = String::new();
    for (k, v) in &metadata {
        csv.push_str(&format!("# {k}: {v}\n"));
    }
    csv.push_str(&table.to_csv());
    let r2 = table.r_squared();
    if a.format == Format::Table {
        print!("{}", csv.replace(',', "\t"));
    } else {
        let out_dir = a.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        let path = out_dir.join(format!("sweep_{}.csv", a.family));
        write_file(&path, &csv)?;
        println!("csv\t{}", path.display());
        if a.format == Format::Svg {
            let svg = render_sweep(&csv, family, &metadata)?;
            let path = out_dir.join(format!("sweep_{}.svg", a.family));
            write_file(&path, svg)?;
            println!("plot\t{}", path.display());
        }
    }
    println!("r_squared\t{}", r2.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()));
    Ok(())
}

fn render_sweep(csv: &str, family: SweepFamily, metadata: &[(String, String)]) -> Result<String> {
    let points = sweep_points(csv);
    let x_hi = points.iter().map(|p| p.0).fold(0.0, f64::max);
    let overlay_hi = x_hi.clamp(0.05, 0.95);
    let dense: Vec<f64> = (0..=100).map(|i| overlay_hi * i as f64 / 100.0).collect();
    let ratios = vec![
        Curve {
            label: format!("measured ({:?})", family),
            points: points.iter().filter_map(|p| Some((p.0, p.1?))).collect(),
            dashed: false,
        },
        Curve {
            label: "1 + X".into(),
            points: dense.iter().map(|x| (*x, 1.0 + x)).collect(),
            dashed: true,
        },
        Curve {
            label: "1 / (1 - X)".into(),
            points: dense.iter().map(|x| (*x, 1.0 / (1.0 - x))).collect(),
            dashed: true,
        },
    ];
    let bits = vec![Curve {
        label: "total bits".into(),
        points: points.iter().filter_map(|p| Some((p.0, p.2?))).collect(),
        dashed: false,
    }];
    sweep_svg(
        &format!("iterations and bits to reach eps, {:?}", family),
        family.parameter_name(),
        &ratios,
        &bits,
        metadata,
    )
}

pub fn selftest(a: &SelftestArgs) -> Result<()> {
    if !(a.scale > 0.0 && a.scale <= 1.0) {
        return Err(Usage(format!("--scale must lie in (0, 1], got {}", a.scale)).into());
    }
    if let Some(bad) = a.criteria.iter().find(|c| !ALL_CRITERIA.contains(c)) {
        return Err(Usage(format!("no criterion {bad}; choose from 1 to 10")).into());
    }
    let mut settings = Settings::reduced(a.scale);
    if let Some(seed) = a.seed {
        settings.seed = seed;
    }
    settings.faults.corrupt_golomb_rice = a.inject_fault == Some(Fault::GolombRice);
    let ids: Vec<u8> = if a.criteria.is_empty() {
        ALL_CRITERIA.to_vec()
    } else {
        a.criteria.clone()
    };
    println!("# scale: {} seed: {} version: {}", a.scale, settings.seed, gradcodec::VERSION);
    let reports = run_selected(&settings, &ids, |r| println!("{}", r.render()));
    println!();
    for r in &reports {
        println!("{}", r.summary_line());
    }
    let failed: Vec<String> = reports.iter().filter(|r| !r.passed()).map(|r| r.id.to_string()).collect();
    if failed.is_empty() {
        println!("selftest: all {} criteria passed", reports.len());
        Ok(())
    } else {
        Err(Validation(format!(
            "{} of {} criteria failed: {}",
            failed.len(),
            reports.len(),
            failed.join(", ")
        ))
        .into())
    }
}
