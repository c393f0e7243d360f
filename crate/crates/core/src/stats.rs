//! Small statistics helpers for Monte-Carlo checks.

use crate::error::{Error, Result};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub std_dev: f64,
}

impl Summary {
    pub fn of(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self {
                n,
                mean: f64::NAN,
                std_dev: f64::NAN,
            };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            n,
            mean,
            std_dev: var.sqrt(),
        }
    }

    pub fn std_error(&self) -> f64 {
        self.std_dev / (self.n as f64).sqrt()
    }

    /// `|mean - target| <= z` standard errors.
    pub fn within(&self, target: f64, z: f64) -> bool {
        (self.mean - target).abs() <= z * self.std_error()
    }
}

/// Running per-coordinate mean and variance (Welford).
#[derive(Debug, Clone)]
pub struct VectorMoments {
    n: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl VectorMoments {
    pub fn new(d: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; d],
            m2: vec![0.0; d],
        }
    }

    pub fn push(&mut self, v: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &x) in self.mean.iter_mut().zip(&mut self.m2).zip(v) {
            let delta = x - *m;
            *m += delta / n;
            *s += delta * (x - *m);
        }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std_errors(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.m2
            .iter()
            .map(|s| if self.n > 1 { (s / (n - 1.0) / n).sqrt() } else { f64::NAN })
            .collect()
    }

    /// Largest `|mean_i - target_i| / se_i`. Coordinates with zero spread count
    /// only when the mean is off target.
    pub fn max_z(&self, target: &[f64]) -> f64 {
        self.mean
            .iter()
            .zip(self.std_errors())
            .zip(target)
            .map(|((m, se), t)| {
                let gap = (m - t).abs();
                if se > 0.0 {
                    gap / se
                } else if gap <= 1e-12 * t.abs().max(1e-300) {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquaredTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquaredTest {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value >= significance
    }
}

/// Goodness of fit of samples `T >= 1` to `Geometric(p)` on `{1, 2, ...}`.
///
/// Cells are cut at the geometric quantiles `j / k`, so they are close to
/// equiprobable whatever `p` is; cells with expected count below 5 are merged
/// into a neighbour.
pub fn chi_squared_geometric(samples: &[u64], p: f64) -> Result<ChiSquaredTest> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("geometric parameter must lie in (0, 1), got {p}")));
    }
    if samples.contains(&0) {
        return Err(Error::invalid("geometric samples start at 1"));
    }
    let n = samples.len() as f64;
    let k = (samples.len() / 5).min(100);
    if k < 2 {
        return Err(Error::invalid("too few samples for a chi-squared test"));
    }
    let ln_q = (-p).ln_1p();
    let survival = |t: u64| (t as f64 * ln_q).exp();
    // Upper ends of every cell but the last, which is unbounded.
    let mut upper: Vec<u64> = (1..k)
        .map(|j| ((1.0 - j as f64 / k as f64).ln() / ln_q).ceil().max(1.0) as u64)
        .collect();
    upper.dedup();
    let mut expected = Vec::with_capacity(upper.len() + 1);
    let mut prev = 0;
    for &hi in &upper {
        expected.push(n * (survival(prev) - survival(hi)));
        prev = hi;
    }
    expected.push(n * survival(prev));
    // Merge small cells forward, then a small last cell backward.
    let mut i = 0;
    while i + 1 < expected.len() {
        if expected[i] < 5.0 {
            expected[i + 1] += expected[i];
            expected.remove(i);
            upper.remove(i);
        } else {
            i += 1;
        }
    }
    if expected.len() > 1 && expected[expected.len() - 1] < 5.0 {
        let last = expected.pop().unwrap_or(0.0);
        *expected.last_mut().expect("at least one cell") += last;
        upper.pop();
    }
    let cells = expected.len();
    let mut observed = vec![0.0; cells];
    for &t in samples {
        observed[upper.partition_point(|&hi| hi < t)] += 1.0;
    }
    let statistic: f64 = observed
        .iter()
        .zip(&expected)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = cells - 1;
    let p_value = if dof == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64).map_err(|e| Error::invalid(e.to_string()))?;
        1.0 - dist.cdf(statistic)
    };
    Ok(ChiSquaredTest {
        statistic,
        dof,
        p_value,
    })
}

/// Coefficient of determination of `observed` against a fixed curve, with no
/// fitted parameters: `1 - SS_res / SS_tot`.
pub fn r_squared(observed: &[f64], predicted: &[f64]) -> f64 {
    let n = observed.len() as f64;
    let mean = observed.iter().sum::<f64>() / n;
    let ss_tot: f64 = observed.iter().map(|o| (o - mean) * (o - mean)).sum();
    let ss_res: f64 = observed
        .iter()
        .zip(predicted)
        .map(|(o, p)| (o - p) * (o - p))
        .sum();
    if ss_tot == 0.0 {
        return if ss_res == 0.0 { 1.0 } else { f64::NEG_INFINITY };
    }
    1.0 - ss_res / ss_tot
}
