use super::Problem;
use crate::compressors::{compress_until, OperatorConfig};
use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::time::Instant;

/// Relative error above which a run is declared diverged.
pub const DIVERGENCE_GUARD: f64 = 1e12;

/// A problem together with its smoothness constant and exact minimizer.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub problem: Problem,
    pub smoothness: f64,
    pub x_star: Vec<f64>,
}

impl Prepared {
    pub fn new(problem: Problem) -> Result<Self> {
        let smoothness = problem.smoothness()?;
        let x_star = problem.minimizer()?;
        Ok(Self {
            problem,
            smoothness,
            x_star,
        })
    }

    fn relative_error(&self, x: &[f64], denom: f64) -> f64 {
        squared_distance(x, &self.x_star) / denom
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgdOptions {
    pub eps: f64,
    pub max_iter: u64,
    /// Starting point, zero when `None`.
    pub x0: Option<Vec<f64>>,
    /// Wall-clock limit; the run stops with [`RunStatus::Deadline`] once it passes.
    pub deadline: Option<Instant>,
}

impl Default for CgdOptions {
    fn default() -> Self {
        Self {
            eps: 1e-4,
            max_iter: 1_000_000,
            x0: None,
            deadline: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    MaxIterations,
    Diverged,
    Deadline,
}

impl std::fmt::Display for RunStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RunStatus::Converged => "converged",
            RunStatus::MaxIterations => "max-iterations",
            RunStatus::Diverged => "diverged",
            RunStatus::Deadline => "deadline",
        })
    }
}

impl std::str::FromStr for RunStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "converged" => Ok(RunStatus::Converged),
            "max-iterations" => Ok(RunStatus::MaxIterations),
            "diverged" => Ok(RunStatus::Diverged),
            "deadline" => Ok(RunStatus::Deadline),
            other => Err(Error::invalid(format!("unknown run status {other:?}"))),
        }
    }
}

/// State after `t` steps. `bits` counts every message sent so far and
/// `distortion` is that of the compression producing this iterate (0 at `t = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: u64,
    pub bits: u64,
    pub rel_err: f64,
    pub distortion: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub label: String,
    pub rows: Vec<TraceRow>,
    pub status: RunStatus,
    /// `key: value` pairs written as `#` comment lines ahead of the CSV header.
    pub metadata: Vec<(String, String)>,
}

pub const CSV_HEADER: &str = "t,bits,rel_err,distortion";

impl RunTrace {
    /// Number of steps taken.
    pub fn iterations(&self) -> u64 {
        self.rows.last().map_or(0, |r| r.t)
    }

    pub fn total_bits(&self) -> u64 {
        self.rows.last().map_or(0, |r| r.bits)
    }

    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# label: {}", self.label);
        let _ = writeln!(out, "# status: {}", self.status);
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}: {v}");
        }
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{:e},{:e}", r.t, r.bits, r.rel_err, r.distortion);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut label = String::new();
        let mut status = None;
        let mut metadata = Vec::new();
        let mut rows = Vec::new();
        let mut seen_header = false;
        for (i, line) in text.lines().enumerate() {
            let err = |reason: String| Error::Parse { line: i + 1, reason };
            if let Some(meta) = line.strip_prefix('#') {
                let (k, v) = meta
                    .trim()
                    .split_once(": ")
                    .ok_or_else(|| err(format!("bad metadata line {line:?}")))?;
                match k {
                    "label" => label = v.to_string(),
                    "status" => status = Some(v.parse().map_err(|e: Error| err(e.to_string()))?),
                    _ => metadata.push((k.to_string(), v.to_string())),
                }
                continue;
            }
            if !seen_header {
                if line.trim() != CSV_HEADER {
                    return Err(err(format!("expected header {CSV_HEADER:?}")));
                }
                seen_header = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(err(format!("expected 4 fields, got {}", f.len())));
            }
            let bad = |what: &str| err(format!("bad {what} in {line:?}"));
            rows.push(TraceRow {
                t: f[0].parse().map_err(|_| bad("t"))?,
                bits: f[1].parse().map_err(|_| bad("bits"))?,
                rel_err: f[2].parse().map_err(|_| bad("rel_err"))?,
                distortion: f[3].parse().map_err(|_| bad("distortion"))?,
            });
        }
        Ok(Self {
            label,
            rows,
            status: status.ok_or_else(|| Error::Parse {
                line: 0,
                reason: "missing status".into(),
            })?,
            metadata,
        })
    }
}

fn start_point(prep: &Prepared, opts: &CgdOptions) -> Result<Vec<f64>> {
    let d = prep.problem.d();
    match &opts.x0 {
        Some(x0) if x0.len() != d => Err(Error::DimensionMismatch {
            expected: d,
            got: x0.len(),
        }),
        Some(x0) => Ok(x0.clone()),
        None => Ok(vec![0.0; d]),
    }
}

/// Compressed gradient descent `x <- x - (1/L) C(grad f(x))`, stopping once
/// `|x - x*|^2 / |x0 - x*|^2 <= eps`. Step `t` compresses message number `t`.
pub fn cgd_run(prep: &Prepared, config: &OperatorConfig, opts: &CgdOptions) -> Result<RunTrace> {
    Ok(cgd_run_with_iterate(prep, config, opts)?.0)
}

/// [`cgd_run`] that also returns the final iterate.
pub fn cgd_run_with_iterate(
    prep: &Prepared,
    config: &OperatorConfig,
    opts: &CgdOptions,
) -> Result<(RunTrace, Vec<f64>)> {
    let d = prep.problem.d();
    config.validate(d)?;
    let mut x = start_point(prep, opts)?;
    let denom = squared_distance(&x, &prep.x_star);
    let step = 1.0 / prep.smoothness;
    let mut rows = vec![TraceRow {
        t: 0,
        bits: 0,
        rel_err: if denom > 0.0 { 1.0 } else { 0.0 },
        distortion: 0.0,
    }];
    let mut bits = 0u64;
    let status = loop {
        let last = rows.last().expect("trace starts with one row");
        if denom == 0.0 || last.rel_err <= opts.eps {
            break RunStatus::Converged;
        }
        if !(last.rel_err <= DIVERGENCE_GUARD) {
            break RunStatus::Diverged;
        }
        if last.t >= opts.max_iter {
            break RunStatus::MaxIterations;
        }
        if opts.deadline.is_some_and(|dl| Instant::now() >= dl) {
            break RunStatus::Deadline;
        }
        let t = last.t + 1;
        let g = prep.problem.gradient(&x)?;
        let enc = match compress_until(config, &g, t - 1, opts.deadline) {
            Ok(enc) => enc,
            Err(Error::Deadline { .. }) => break RunStatus::Deadline,
            Err(e) => return Err(e),
        };
        bits += enc.outcome.bits as u64;
        x.iter_mut()
            .zip(&enc.outcome.reconstructed)
            .for_each(|(xi, ci)| *xi -= step * ci);
        rows.push(TraceRow {
            t,
            bits,
            rel_err: prep.relative_error(&x, denom),
            distortion: enc.outcome.distortion,
        });
    };
    let metadata = vec![
        ("operator".to_string(), config.label()),
        ("seed".to_string(), config.seed.to_string()),
        ("class".to_string(), config.class(d)?.to_string()),
        ("loss".to_string(), prep.problem.kind().to_string()),
        ("n".to_string(), prep.problem.n().to_string()),
        ("d".to_string(), d.to_string()),
        ("lambda".to_string(), prep.problem.lambda().to_string()),
        ("smoothness".to_string(), prep.smoothness.to_string()),
        ("eps".to_string(), opts.eps.to_string()),
        ("version".to_string(), crate::VERSION.to_string()),
    ];
    let trace = RunTrace {
        label: config.label(),
        rows,
        status,
        metadata,
    };
    Ok((trace, x))
}

/// Uncompressed double-precision gradient descent; returns the number of
/// steps needed to reach `eps`, or `None` within `max_iter`.
pub fn reference_gd_iterations(prep: &Prepared, opts: &CgdOptions) -> Result<Option<u64>> {
    let mut x = start_point(prep, opts)?;
    let denom = squared_distance(&x, &prep.x_star);
    if denom == 0.0 {
        return Ok(Some(0));
    }
    let step = 1.0 / prep.smoothness;
    for t in 0..=opts.max_iter {
        let rel = prep.relative_error(&x, denom);
        if rel <= opts.eps {
            return Ok(Some(t));
        }
        if !(rel <= DIVERGENCE_GUARD) {
            return Ok(None);
        }
        let g = prep.problem.gradient(&x)?;
        x.iter_mut().zip(&g).for_each(|(xi, gi)| *xi -= step * gi);
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compressors::OperatorConfig;
    use crate::data::synth_regression;

    fn ridge(d: usize, n: usize) -> Prepared {
        Prepared::new(Problem::ridge(&synth_regression(d, n, 0.1, 7)).unwrap()).unwrap()
    }

    #[test]
    fn identity_and_full_topk_match_gd() {
        let prep = ridge(20, 60);
        let opts = CgdOptions::default();
        let gd = reference_gd_iterations(&prep, &opts).unwrap().unwrap();
        for config in [OperatorConfig::identity(), OperatorConfig::topk(20)] {
            let trace = cgd_run(&prep, &config, &opts).unwrap();
            assert!(trace.converged());
            assert_eq!(trace.iterations(), gd, "{}", config.label());
        }
        let basic = cgd_run(&prep, &OperatorConfig::identity(), &opts).unwrap();
        assert_eq!(basic.total_bits(), 32 * 20 * gd);
    }

    #[test]
    fn eps_one_stops_immediately() {
        let prep = ridge(10, 30);
        let opts = CgdOptions {
            eps: 1.0,
            ..Default::default()
        };
        let trace = cgd_run(&prep, &OperatorConfig::dsd(0.1), &opts).unwrap();
        assert_eq!(trace.iterations(), 0);
        assert_eq!(trace.rows[0].rel_err, 1.0);
    }

    #[test]
    fn trace_invariants_and_determinism() {
        let prep = ridge(15, 40);
        let opts = CgdOptions::default();
        let config = OperatorConfig::rsd(0.25).with_seed(3).wrapped(0.25);
        let (a, x) = cgd_run_with_iterate(&prep, &config, &opts).unwrap();
        let b = cgd_run(&prep, &config, &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.converged());
        assert!(a.rows.windows(2).all(|w| w[0].bits <= w[1].bits));
        let last = a.rows.last().unwrap();
        assert!(last.rel_err <= 1e-4);
        let x0_loss = prep.problem.loss(&vec![0.0; 15]).unwrap();
        assert!(prep.problem.loss(&x).unwrap() < x0_loss);
    }

    #[test]
    fn csv_round_trip() {
        let prep = ridge(8, 20);
        let trace = cgd_run(&prep, &OperatorConfig::dsd(0.1), &CgdOptions::default()).unwrap();
        let csv = trace.to_csv();
        assert!(csv.lines().any(|l| l == CSV_HEADER));
        assert_eq!(RunTrace::from_csv(&csv).unwrap(), trace);
    }

    #[test]
    fn max_iterations_status() {
        let prep = ridge(8, 20);
        let opts = CgdOptions {
            max_iter: 2,
            ..Default::default()
        };
        let trace = cgd_run(&prep, &OperatorConfig::identity(), &opts).unwrap();
        assert_eq!(trace.status, RunStatus::MaxIterations);
        assert_eq!(trace.iterations(), 2);
    }
}
