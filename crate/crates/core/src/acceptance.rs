//! Acceptance checks shared by the integration suite and the `selftest` command.
//!
//! Each criterion returns a [`CriterionReport`] made of named sub-checks plus a
//! wall-clock budget. Long-running spherical searches run against the budget as
//! a deadline, so an unattainable configuration is reported as a failed check
//! instead of hanging.

use crate::bounds::{savings_factor, theorem2_rhs, theorem2_rhs_ln, up_lower_bound};
use crate::compressors::{
    compress, decompress, sc_compress_until, sc_decompress_with_rice, OperatorConfig,
    OperatorKind, ScParams,
};
use crate::data::{synth_classification, synth_regression};
use crate::error::Error;
use crate::geometry::{cap_probability, mc_cap_probability, sample_unit_sphere, CapParams};
use crate::optim::{
    cgd_run, iteration_ratio_sweep, reference_gd_iterations, CgdOptions, LossKind, Prepared,
    Problem, SweepFamily,
};
use crate::rng::{CounterRng, StreamKey};
use crate::stats::{chi_squared_geometric, Summary, VectorMoments};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Mean bits and mean normalized distortion of one operator configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRecord {
    pub criterion: u8,
    pub label: String,
    pub d: usize,
    pub messages: usize,
    pub mean_bits: f64,
    pub mean_distortion: f64,
}

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: u8,
    pub title: &'static str,
    pub checks: Vec<Check>,
    pub elapsed: Duration,
    pub budget: Duration,
    pub records: Vec<RateRecord>,
}

pub const RUNTIME_CHECK: &str = "runtime";

impl CriterionReport {
    fn new(id: u8, title: &'static str, budget: Duration) -> Self {
        Self {
            id,
            title,
            checks: Vec::new(),
            elapsed: Duration::ZERO,
            budget,
            records: Vec::new(),
        }
    }

    fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, passed, detail));
    }

    fn finish(mut self, start: Instant) -> Self {
        self.elapsed = start.elapsed();
        let within = self.elapsed <= self.budget;
        let detail = format!(
            "{:.1} s of {:.1} s",
            self.elapsed.as_secs_f64(),
            self.budget.as_secs_f64()
        );
        self.check(RUNTIME_CHECK, within, detail);
        self
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// One `PASS`/`FAIL` line for the criterion.
    pub fn summary_line(&self) -> String {
        let failed: Vec<&str> = self.failed().map(|c| c.name.as_str()).collect();
        if failed.is_empty() {
            format!(
                "PASS criterion {}: {} ({} checks, {:.1} s)",
                self.id,
                self.title,
                self.checks.len(),
                self.elapsed.as_secs_f64()
            )
        } else {
            format!(
                "FAIL criterion {}: {} ({} of {} checks failed: {})",
                self.id,
                self.title,
                failed.len(),
                self.checks.len(),
                failed.join("; ")
            )
        }
    }

    /// The summary line followed by one indented line per check.
    pub fn render(&self) -> String {
        let mut out = self.summary_line();
        for c in &self.checks {
            let _ = write!(
                out,
                "\n    [{}] {}: {}",
                if c.passed { "ok" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        out
    }
}

/// Fault injection for exercising the failure paths of the suite.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Faults {
    /// Decode spherical messages with a wrong Golomb-Rice parameter.
    pub corrupt_golomb_rice: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    /// Multiplier on message and trial counts and on time budgets.
    pub scale: f64,
    pub seed: u64,
    pub faults: Faults,
}

impl Default for Settings {
    fn default() -> Self {
        Self::full()
    }
}

impl Settings {
    pub fn full() -> Self {
        Self {
            scale: 1.0,
            seed: 0x5eed,
            faults: Faults::default(),
        }
    }

    pub fn reduced(scale: f64) -> Self {
        Self {
            scale,
            ..Self::full()
        }
    }

    fn count(&self, n: usize, min: usize) -> usize {
        ((n as f64 * self.scale).ceil() as usize).clamp(min.min(n), n.max(min))
    }

    fn budget(&self, secs: f64) -> Duration {
        Duration::from_secs_f64((secs * self.scale.min(1.0)).max(1.0))
    }

    fn key(&self, criterion: u64, stream: u64) -> StreamKey {
        StreamKey::new(self.seed ^ (criterion << 56), stream)
    }
}

fn gaussian(rng: &mut CounterRng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// Gaussian direction with a log-uniform scale in `[1e-3, 1e3]`.
fn random_vector(rng: &mut CounterRng, d: usize) -> Vec<f64> {
    let scale = 10f64.powf(rng.random_range(-3.0..3.0));
    gaussian(rng, d).into_iter().map(|v| v * scale).collect()
}

fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

fn round_trip_configs(d: usize) -> Vec<OperatorConfig> {
    let k = (d / 4).max(1);
    let levels = (d as f64).sqrt().ceil() as u64;
    vec![
        OperatorConfig::identity(),
        OperatorConfig::dsd(0.25),
        OperatorConfig::rsd(0.25),
        OperatorConfig::rsd(0.25).wrapped(0.25),
        OperatorConfig::sc(1.0 - 1.0 / d as f64),
        OperatorConfig::topk(k),
        OperatorConfig::rand_sparse(k),
        OperatorConfig::std_dither(levels),
        OperatorConfig::ternary(),
        OperatorConfig::natural(),
    ]
}

/// Decode-equals-encode, bit for bit, with exact consumption of the payload.
pub fn criterion_1(settings: &Settings) -> CriterionReport {
    let start = Instant::now();
    let mut report = CriterionReport::new(1, "round-trip exactness", settings.budget(60.0));
    let n = settings.count(1000, 10);
    for d in [2usize, 3, 17, 256, 4096] {
        for (c, base) in round_trip_configs(d).into_iter().enumerate() {
            let config = base.with_seed(settings.seed);
            let mut rng = settings.key(1, (d * 100 + c) as u64).rng();
            let mut mismatches = 0usize;
            let mut first_error = None;
            let mut bits = 0.0;
            let mut distortion = 0.0;
            for m in 0..n as u64 {
                let x = random_vector(&mut rng, d);
                let enc = match compress(&config, &x, m) {
                    Ok(enc) => enc,
                    Err(e) => {
                        mismatches += 1;
                        first_error.get_or_insert(format!("encode: {e}"));
                        continue;
                    }
                };
                bits += enc.outcome.bits as f64;
                distortion += enc.outcome.distortion;
                let decoded = if settings.faults.corrupt_golomb_rice && config.kind == OperatorKind::Sc {
                    let alpha = config.alpha.unwrap_or(0.5);
                    let m_rice = ScParams::new(alpha, d).map(|p| p.rice_m + 1).unwrap_or(1);
                    let mut cursor = enc.payload.cursor();
                    sc_decompress_with_rice(&mut cursor, d, alpha, StreamKey::new(config.seed, m), m_rice)
                        .and_then(|v| {
                            if cursor.is_exhausted() {
                                Ok(v)
                            } else {
                                Err(Error::Decode {
                                    offset: cursor.position(),
                                    reason: "trailing bits".into(),
                                })
                            }
                        })
                } else {
                    decompress(&config, &enc.payload, d, m)
                };
                match decoded {
                    Ok(v) if same_bits(&v, &enc.outcome.reconstructed) => {}
                    Ok(_) => {
                        mismatches += 1;
                        first_error.get_or_insert(format!("message {m}: reconstruction differs"));
                    }
                    Err(e) => {
                        mismatches += 1;
                        first_error.get_or_insert(format!("message {m}: {e}"));
                    }
                }
            }
            let label = config.label();
            report.check(
                format!("{label} d={d}"),
                mismatches == 0,
                match first_error {
                    None => format!("{n} messages identical, mean {:.1} bits", bits / n as f64),
                    Some(e) => format!("{mismatches} of {n} failed; first: {e}"),
                },
            );
            report.records.push(RateRecord {
                criterion: 1,
                label,
                d,
                messages: n,
                mean_bits: bits / n as f64,
                mean_distortion: distortion / n as f64,
            });
        }
    }
    report.finish(start)
}

/// Deterministic sparse dithering at `nu = 1/10` stays within `30 + log2 d + 3.35 d + 2` bits
/// and distortion `0.1`.
pub fn criterion_2(settings: &Settings) -> CriterionReport {
    let start = Instant::now();
    let mut report = CriterionReport::new(2, "deterministic sparse dithering bit bound", settings.budget(60.0));
    let n = settings.count(200, 10);
    let config = OperatorConfig::dsd(0.1);
    for d in [100usize, 1_000, 10_000] {
        let bound = 30.0 + (d as f64).log2() + 3.35 * d as f64 + 2.0;
        let mut rng = settings.key(2, d as u64).rng();
        let mut max_bits = 0usize;
        let mut max_dist: f64 = 0.0;
        let mut bits = 0.0;
        let mut dist = 0.0;
        for m in 0..n as u64 {
            let x = sample_unit_sphere(d, &mut rng);
            let enc = compress(&config, &x, m).expect("valid sparse dithering input");
            max_bits = max_bits.max(enc.outcome.bits);
            max_dist = max_dist.max(enc.outcome.distortion);
            bits += enc.outcome.bits as f64;
            dist += enc.outcome.distortion;
        }
        report.check(
            format!("d={d} bits"),
            max_bits as f64 <= bound,
            format!("max {max_bits} <= {bound:.1}"),
        );
        report.check(
            format!("d={d} distortion"),
            max_dist <= 0.1,
            format!("max {max_dist:.5} <= 0.1"),
        );
        report.records.push(RateRecord {
            criterion: 2,
            label: config.label(),
            d,
            messages: n,
            mean_bits: bits / n as f64,
            mean_distortion: dist / n as f64,
        });
    }
    report.finish(start)
}

/// Randomized sparse dithering at `nu = 1/4`, `d = 10^4`: bits, unbiasedness and savings.
pub fn criterion_3(settings: &Settings) -> CriterionReport {
    let start = Instant::now();
    let mut report = CriterionReport::new(3, "randomized sparse dithering", settings.budget(120.0));
    let d = 10_000usize;
    let n = settings.count(200, 20);
    let nu = 0.25;
    let config = OperatorConfig::rsd(nu).with_seed(settings.seed);
    let x = sample_unit_sphere(d, &mut settings.key(3, 0).rng());
    let mut moments = VectorMoments::new(d);
    let mut bits = Vec::with_capacity(n);
    let mut dist = 0.0;
    for m in 0..n as u64 {
        let enc = compress(&config, &x, m).expect("valid sparse dithering input");
        moments.push(&enc.outcome.reconstructed);
        bits.push(enc.outcome.bits as f64);
        dist += enc.outcome.distortion;
    }
    let mean_bits = Summary::of(&bits).mean;
    let bound = 30.0 + (d as f64).log2() + 2.585 * d as f64;
    report.check(
        "mean bits",
        mean_bits <= bound,
        format!("{mean_bits:.1} <= {bound:.1} ({:.4} d)", mean_bits / d as f64),
    );
    let max_z = moments.max_z(&x);
    let se = moments.std_errors();
    let degenerate = se.iter().filter(|s| **s == 0.0).count();
    let beyond = moments
        .mean()
        .iter()
        .zip(&se)
        .zip(&x)
        .filter(|((m, s), t)| (*m - *t).abs() > 4.0 * **s)
        .count();
    report.check(
        "unbiasedness",
        max_z <= 4.0,
        format!(
            "{beyond} of {d} coordinates beyond 4 empirical standard errors \
             ({degenerate} with zero sample variance); max |z| = {max_z:.2}"
        ),
    );
    let savings = savings_factor(nu, mean_bits, d).unwrap_or(f64::NAN);
    report.check("savings", savings >= 9.5, format!("{savings:.3} >= 9.5"));
    report.records.push(RateRecord {
        criterion: 3,
        label: config.label(),
        d,
        messages: n,
        mean_bits,
        mean_distortion: dist / n as f64,
    });
    report.finish(start)
}

/// Spherical compression: bit sandwich, strict contraction and geometric trial counts.
pub fn criterion_4(settings: &Settings) -> CriterionReport {
    let start = Instant::now();
    let budget = settings.budget(180.0);
    let deadline = start + budget;
    let mut report = CriterionReport::new(4, "spherical compression sandwich", budget);
    let n = settings.count(10_000, 200);
    let mut grid: Vec<(f64, usize, f64)> = [0.3, 0.5, 0.7]
        .iter()
        .flat_map(|&a| [3usize, 10, 50].map(|d| (a, d)))
        .map(|(a, d)| (a, d, cap_probability(CapParams::new(a, d).expect("valid cap"))))
        .collect();
    // Cheapest points first, so an expensive point cannot starve the others.
    grid.sort_by(|a, b| b.2.total_cmp(&a.2));
    for (alpha, d, p) in grid {
        let name = format!("alpha={alpha} d={d}");
        let lower = -p.log2();
        if Instant::now() >= deadline {
            report.check(
                name,
                false,
                format!("not started before the deadline; 1/P = {:.3e} trials per message", 1.0 / p),
            );
            continue;
        }
        let mut rng = settings.key(4, d as u64 * 10 + (alpha * 10.0) as u64).rng();
        let mut trials = Vec::with_capacity(n);
        let mut index_bits = 0.0;
        let mut total_bits = 0.0;
        let mut dist = 0.0;
        let mut violations = 0usize;
        let mut stopped = None;
        for m in 0..n as u64 {
            let x = sample_unit_sphere(d, &mut rng);
            match sc_compress_until(&x, alpha, StreamKey::new(settings.seed, m), Some(deadline)) {
                Ok(enc) => {
                    if enc.outcome.distortion > alpha {
                        violations += 1;
                    }
                    trials.push(enc.trials);
                    index_bits += enc.index_bits() as f64;
                    total_bits += enc.payload.len() as f64;
                    dist += enc.outcome.distortion;
                }
                Err(e) => {
                    stopped = Some(e);
                    break;
                }
            }
        }
        let done = trials.len();
        if done > 0 {
            report.records.push(RateRecord {
                criterion: 4,
                label: format!("sc(alpha={alpha})"),
                d,
                messages: done,
                mean_bits: total_bits / done as f64,
                mean_distortion: dist / done as f64,
            });
        }
        if let Some(e) = stopped {
            report.check(
                name,
                false,
                format!(
                    "{done} of {n} messages before stopping ({e}); 1/P = {:.3e} trials per message",
                    1.0 / p
                ),
            );
            continue;
        }
        let mean = index_bits / n as f64;
        report.check(
            format!("{name} sandwich"),
            lower <= mean && mean < lower + 3.0,
            format!("{lower:.3} <= {mean:.3} < {:.3}", lower + 3.0),
        );
        report.check(
            format!("{name} contraction"),
            violations == 0,
            format!("{violations} of {n} messages above alpha"),
        );
        let fit = chi_squared_geometric(&trials, p);
        report.check(
            format!("{name} geometric fit"),
            fit.as_ref().is_ok_and(|f| f.passes(1e-3)),
            match fit {
                Ok(f) => format!("chi2 = {:.2}, dof = {}, p-value = {:.4}", f.statistic, f.dof, f.p_value),
                Err(e) => e.to_string(),
            },
        );
    }
    report.finish(start)
}

/// Monte-Carlo cap probabilities agree with the closed form.
pub fn criterion_5(settings: &Settings) -> CriterionReport {
    let start = Instant::now();
    let mut report = CriterionReport::new(5, "cap probability oracle", settings.budget(120.0));
    let trials = settings.count(1_000_000, 10_000) as u64;
    for alpha in [0.3, 0.5, 0.7] {
        for d in [3usize, 10, 50] {
            let params = CapParams::new(alpha, d).expect("valid cap");
            let p = cap_probability(params);
            let mut rng = settings.key(5, d as u64 * 10 + (alpha * 10.0) as u64).rng();
            let est = mc_cap_probability(params, trials, &mut rng).expect("positive trial count");
            // Standard error of the estimator under the closed-form probability.
            let se = (p * (1.0 - p) / trials as f64).sqrt();
            let gap = (est.estimate - p).abs();
            report.check(
                format!("alpha={alpha} d={d}"),
                gap <= 4.0 * se,
                format!("|{:.6e} - {p:.6e}| = {gap:.2e} <= 4 x {se:.2e}", est.estimate),
            );
        }
    }
    let p3 = cap_probability(CapParams::new(0.5, 3).expect("valid cap"));
    let want3 = 0.5 * (1.0 - 0.5f64.sqrt());
    report.check("P(0.5, 3)", (p3 - want3).abs() <= 1e-9, format!("{p3:.12} vs {want3:.12}"));
    let p2 = cap_probability(CapParams::new(0.5, 2).expect("valid cap"));
    report.check("P(0.5, 2)", (p2 - 0.25).abs() <= 1e-9, format!("{p2:.12} vs 0.25"));
    report.finish(start)
}

/// No configuration beats `(d/2) log2(1/alpha)` bits at its measured distortion.
pub fn criterion_6(records: &[RateRecord]) -> CriterionReport {
    let start = Instant::now();
    let mut report = CriterionReport::new(6, "uncertainty principle holds empirically", Duration::from_secs(1));
    if records.is_empty() {
        report.check("records", false, "no measurements from criteria 1-4");
    }
    for r in records {
        let bound = if r.mean_distortion >= 1.0 {
            0.0
        } else if r.mean_distortion <= 0.0 {
            f64::INFINITY
        } else {
            up_lower_bound(r.mean_distortion, r.d).unwrap_or(f64::INFINITY)
        };
        report.check(
            format!("criterion {} {} d={}", r.criterion, r.label, r.d),
            r.mean_bits >= bound,
            format!(
                "{:.1} bits >= {bound:.1} at distortion {:.3e} over {} messages",
                r.mean_bits, r.mean_distortion, r.messages
            ),
        );
    }
    report.finish(start)
}

fn synth_ridge(d: usize, n: usize) -> Prepared {
    Prepared::new(Problem::ridge(&synth_regression(d, n, 0.1, 7)).expect("synthetic ridge"))
        .expect("ridge is strongly convex")
}

fn synth_logistic(d: usize, n: usize) -> Prepared {
    Prepared::new(Problem::logistic(&synth_classification(d, n, 0.1, 7)).expect("synthetic logistic"))
        .expect("regularized logistic is strongly convex")
}

/// Iteration inflation over GD follows `1/(1 - alpha)` for Top-k and `1 + omega` for wrapped
/// randomized sparse dithering.
pub fn criterion_7(settings: &Settings) -> CriterionReport {
    let start = Instant::now();
    let mut report = CriterionReport::new(7, "iteration ratio laws", settings.budget(300.0));
    let prep = synth_ridge(50, 200);
    let opts = CgdOptions::default();
    let topk_grid: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
    let omega_grid = [0.05, 0.1, 0.25, 0.5, 1.0];
    let seeds = settings.count(5, 1);
    for (name, family, grid) in [
        ("topk", SweepFamily::TopK, &topk_grid[..]),
        ("wrapped rsd", SweepFamily::Rsd, &omega_grid[..]),
    ] {
        match iteration_ratio_sweep(&prep, family, grid, &opts, settings.seed, seeds) {
            Ok(table) => {
                let r2 = table.r_squared();
                let ratios: Vec<String> = table
                    .rows
                    .iter()
                    .map(|r| match r.ratio {
                        Some(v) => format!("{:.2}:{v:.2}/{:.2}", r.param, r.predicted_ratio),
                        None => format!("{:.2}:failed", r.param),
                    })
                    .collect();
                report.check(
                    format!("{name} R^2"),
                    r2.is_some_and(|v| v >= 0.9) && table.rows.iter().all(|r| r.failure.is_none()),
                    format!(
                        "R^2 = {:.4} (param:measured/predicted {}; GD {} iterations)",
                        r2.unwrap_or(f64::NAN),
                        ratios.join(" "),
                        table.gd_iterations
                    ),
                );
            }
            Err(e) => report.check(format!("{name} R^2"), false, e.to_string()),
        }
    }
    report.finish(start)
}

/// Compressed runs reach `1e-4` with fewer bits than binary32 gradient descent.
pub fn criterion_8(settings: &Settings) -> CriterionReport {
    let start = Instant::now();
    let budget = settings.budget(120.0);
    let mut report = CriterionReport::new(8, "fewer bits than uncompressed descent", budget);
    let opts = CgdOptions {
        deadline: Some(start + budget),
        ..CgdOptions::default()
    };
    let problems = [("ridge", synth_ridge(50, 200)), ("logistic", synth_logistic(50, 200))];
    let configs = [
        OperatorConfig::dsd(0.1),
        OperatorConfig::rsd(0.25).with_seed(settings.seed),
        OperatorConfig::sc(0.5).with_seed(settings.seed),
    ];
    // Spherical runs last: they are by far the most expensive.
    for config in &configs {
        for (pname, prep) in &problems {
            let name = format!("{pname} {}", config.label());
            let basic = match reference_gd_iterations(prep, &CgdOptions::default()) {
                Ok(Some(t)) => 32 * prep.problem.d() as u64 * t,
                _ => {
                    report.check(name, false, "uncompressed descent did not converge");
                    continue;
                }
            };
            match cgd_run(prep, config, &opts) {
                Ok(trace) => report.check(
                    name,
                    trace.converged() && trace.total_bits() < basic,
                    format!(
                        "{} after {} iterations, {} bits vs basic {basic}",
                        trace.status,
                        trace.iterations(),
                        trace.total_bits()
                    ),
                ),
                Err(e) => report.check(name, false, e.to_string()),
            }
        }
    }
    report.finish(start)
}

fn random_problem(rng: &mut CounterRng, kind: LossKind) -> Problem {
    let d = rng.random_range(2..=20);
    let n = rng.random_range(5..=40);
    let a = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let labels = match kind {
        LossKind::Ridge => gaussian(rng, n),
        LossKind::Logistic => (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect(),
    };
    Problem::new(a, labels, 1.0 / n as f64, kind).expect("well-formed random problem")
}

/// Analytic gradients agree with central differences and `L` bounds the gradient's variation.
pub fn criterion_9(settings: &Settings) -> CriterionReport {
    let start = Instant::now();
    let mut report = CriterionReport::new(9, "gradient and smoothness correctness", settings.budget(60.0));
    let mut rng = settings.key(9, 0).rng();
    let instances = settings.count(100, 10);
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let kind = if i % 2 == 0 { LossKind::Ridge } else { LossKind::Logistic };
        let p = random_problem(&mut rng, kind);
        let x = gaussian(&mut rng, p.d());
        let g = p.gradient(&x).expect("matching dimension");
        let mut fd = vec![0.0; p.d()];
        for j in 0..p.d() {
            let h = 1e-5 * x[j].abs().max(1.0);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            fd[j] = (p.loss(&xp).expect("dimension") - p.loss(&xm).expect("dimension")) / (2.0 * h);
        }
        let err: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let norm: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst = worst.max(err / norm.max(f64::MIN_POSITIVE));
    }
    report.check(
        "finite differences",
        worst <= 1e-5,
        format!("worst relative error {worst:.2e} over {instances} instances"),
    );
    let pairs = settings.count(1000, 100);
    let mut violations = 0;
    let mut tightest: f64 = 0.0;
    for i in 0..pairs {
        let kind = if i % 2 == 0 { LossKind::Ridge } else { LossKind::Logistic };
        let p = random_problem(&mut rng, kind);
        let l = match p.smoothness() {
            Ok(l) => l,
            Err(_) => {
                violations += 1;
                continue;
            }
        };
        let x = gaussian(&mut rng, p.d());
        let y = gaussian(&mut rng, p.d());
        let gx = p.gradient(&x).expect("dimension");
        let gy = p.gradient(&y).expect("dimension");
        let lhs: f64 = gx.iter().zip(&gy).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let dxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if lhs > l * dxy {
            violations += 1;
        }
        tightest = tightest.max(lhs / (l * dxy));
    }
    report.check(
        "smoothness",
        violations == 0,
        format!("{violations} of {pairs} pairs violate; largest |dg| / (L |dx|) = {tightest:.4}"),
    );
    report.finish(start)
}

pub fn criterion_10() -> CriterionReport {
    let start = Instant::now();
    let mut report = CriterionReport::new(10, "bound constant at d = 1000", Duration::from_secs(1));
    let v = theorem2_rhs(1000).unwrap_or(f64::NAN);
    let ln = theorem2_rhs_ln(1000).unwrap_or(f64::NAN);
    report.check(
        "rhs(1000)",
        (1.04..=1.06).contains(&v),
        format!("{v:.5} in [1.04, 1.06] (natural-log variant {ln:.5})"),
    );
    report.finish(start)
}

/// Identifiers of every criterion, in execution order.
pub const ALL_CRITERIA: [u8; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

/// Runs every criterion in order; criterion 6 uses the measurements of 1-4.
pub fn run_all(settings: &Settings, on_report: impl FnMut(&CriterionReport)) -> Vec<CriterionReport> {
    run_selected(settings, &ALL_CRITERIA, on_report)
}

/// Runs the listed criteria in ascending order. Criterion 6 checks whichever
/// of criteria 1-4 were selected alongside it.
pub fn run_selected(
    settings: &Settings,
    ids: &[u8],
    mut on_report: impl FnMut(&CriterionReport),
) -> Vec<CriterionReport> {
    let mut reports: Vec<CriterionReport> = Vec::new();
    for id in ALL_CRITERIA.into_iter().filter(|id| ids.contains(id)) {
        let report = match id {
            1 => criterion_1(settings),
            2 => criterion_2(settings),
            3 => criterion_3(settings),
            4 => criterion_4(settings),
            5 => criterion_5(settings),
            6 => {
                let records: Vec<RateRecord> = reports.iter().flat_map(|r| r.records.clone()).collect();
                criterion_6(&records)
            }
            7 => criterion_7(settings),
            8 => criterion_8(settings),
            9 => criterion_9(settings),
            _ => criterion_10(),
        };
        on_report(&report);
        reports.push(report);
    }
    reports
}
