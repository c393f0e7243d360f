use super::{cgd_run, reference_gd_iterations, CgdOptions, Prepared};
use crate::compressors::OperatorConfig;
use crate::error::{Error, Result};
use crate::stats::r_squared;
use rayon::prelude::*;

/// Operator family swept over its variance parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepFamily {
    /// Parameter `alpha`, run as `k = round((1 - alpha) d)` and reported at `alpha = 1 - k/d`.
    TopK,
    /// Parameter `alpha`.
    Sc,
    /// Parameter `nu`, reported as `alpha = min(nu, 1)`.
    Dsd,
    /// Parameter `omega = nu`, contract-wrapped by `1 / (1 + omega)`.
    Rsd,
}

impl SweepFamily {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "topk" => Ok(SweepFamily::TopK),
            "sc" => Ok(SweepFamily::Sc),
            "dsd" => Ok(SweepFamily::Dsd),
            "rsd" => Ok(SweepFamily::Rsd),
            other => Err(Error::invalid(format!(
                "sweep family must be topk, sc, dsd or rsd, got {other:?}"
            ))),
        }
    }

    pub fn parameter_name(self) -> &'static str {
        match self {
            SweepFamily::Rsd => "omega",
            _ => "alpha",
        }
    }

    /// Predicted iteration inflation over GD: `1 + omega` or `1 / (1 - alpha)`.
    pub fn predicted_ratio(self, param: f64) -> f64 {
        match self {
            SweepFamily::Rsd => 1.0 + param,
            _ => 1.0 / (1.0 - param),
        }
    }

    /// Operator for a grid value, and the parameter it effectively realizes.
    fn config(self, value: f64, d: usize, seed: u64) -> Result<(OperatorConfig, f64)> {
        Ok(match self {
            SweepFamily::TopK => {
                if !(0.0..1.0).contains(&value) {
                    return Err(Error::invalid(format!("alpha must lie in [0, 1), got {value}")));
                }
                let k = (((1.0 - value) * d as f64).round() as usize).clamp(1, d);
                (OperatorConfig::topk(k), 1.0 - k as f64 / d as f64)
            }
            SweepFamily::Sc => (OperatorConfig::sc(value).with_seed(seed), value),
            SweepFamily::Dsd => (OperatorConfig::dsd(value), value.min(1.0)),
            SweepFamily::Rsd => (OperatorConfig::rsd(value).with_seed(seed).wrapped(value), value),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub requested: f64,
    /// Realized `alpha` or `omega`.
    pub param: f64,
    pub label: String,
    /// Mean steps to reach `eps` over the seeds, when every run converged.
    pub iterations: Option<f64>,
    pub ratio: Option<f64>,
    pub predicted_ratio: f64,
    /// Mean total bits over the seeds.
    pub total_bits: Option<f64>,
    /// Why the row has no result, if it has none.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub family: SweepFamily,
    pub gd_iterations: u64,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// `R^2` of the measured ratios against the predicted curve, over rows that converged.
    pub fn r_squared(&self) -> Option<f64> {
        let (obs, pred): (Vec<f64>, Vec<f64>) = self
            .rows
            .iter()
            .filter_map(|r| r.ratio.map(|v| (v, r.predicted_ratio)))
            .unzip();
        (obs.len() >= 2).then(|| r_squared(&obs, &pred))
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# family: {:?}\n# gd_iterations: {}\n{},label,iterations,ratio,predicted_ratio,total_bits,failure\n",
            self.family,
            self.gd_iterations,
            self.family.parameter_name()
        );
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.param,
                r.label,
                opt(r.iterations),
                opt(r.ratio),
                r.predicted_ratio,
                opt(r.total_bits),
                r.failure.clone().unwrap_or_default().replace(',', ";")
            ));
        }
        out
    }
}

/// Iterations to `eps` relative to uncompressed GD, for each grid value.
/// Randomized families average over `seeds` consecutive seeds starting at `base_seed`.
/// Rows run in parallel; failures are recorded per row.
pub fn iteration_ratio_sweep(
    prep: &Prepared,
    family: SweepFamily,
    grid: &[f64],
    opts: &CgdOptions,
    base_seed: u64,
    seeds: usize,
) -> Result<SweepTable> {
    if grid.is_empty() {
        return Err(Error::invalid("empty parameter grid"));
    }
    let gd = reference_gd_iterations(prep, opts)?
        .ok_or_else(|| Error::invalid("uncompressed gradient descent did not reach eps"))?;
    let d = prep.problem.d();
    let seeds = match family {
        SweepFamily::TopK | SweepFamily::Dsd => 1,
        _ => seeds.max(1),
    };
    let rows = grid
        .par_iter()
        .map(|&value| {
            let (config, param) = match family.config(value, d, base_seed) {
                Ok(c) => c,
                Err(e) => {
                    return SweepRow {
                        requested: value,
                        param: value,
                        label: String::new(),
                        iterations: None,
                        ratio: None,
                        predicted_ratio: family.predicted_ratio(value),
                        total_bits: None,
                        failure: Some(e.to_string()),
                    }
                }
            };
            let mut iters = 0.0;
            let mut bits = 0.0;
            let mut failure = None;
            for s in 0..seeds {
                let cfg = config.clone().with_seed(base_seed + s as u64);
                match cgd_run(prep, &cfg, opts) {
                    Ok(trace) if trace.converged() => {
                        iters += trace.iterations() as f64;
                        bits += trace.total_bits() as f64;
                    }
                    Ok(trace) => {
                        failure = Some(format!("seed {}: {}", cfg.seed, trace.status));
                        break;
                    }
                    Err(e) => {
                        failure = Some(format!("seed {}: {e}", cfg.seed));
                        break;
                    }
                }
            }
            let ok = failure.is_none();
            let iterations = ok.then(|| iters / seeds as f64);
            SweepRow {
                requested: value,
                param,
                label: config.label(),
                iterations,
                ratio: iterations.map(|i| if gd == 0 { 1.0 } else { i / gd as f64 }),
                predicted_ratio: family.predicted_ratio(param),
                total_bits: ok.then(|| bits / seeds as f64),
                failure,
            }
        })
        .collect();
    Ok(SweepTable {
        family,
        gd_iterations: gd,
        rows,
    })
}
