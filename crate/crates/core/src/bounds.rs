//! Closed-form rate-distortion formulas: lower bounds on bits, predicted bit
//! counts of sparse dithering, and bandwidth-savings arithmetic. All logs are
//! base 2.

use crate::bitio::{binomial, bits_for_count};
use crate::error::{Error, Result};
use crate::geometry::{ln_cap_probability, CapParams};

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Worst-case lower bound `(d/2) log2(1/alpha)` for any operator with
/// normalized error `alpha`.
pub fn up_lower_bound(alpha: f64, d: usize) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(d as f64 / 2.0 * (1.0 / alpha).log2())
}

/// Expected-bits lower bound `-log2 P(alpha, d)`.
pub fn avg_lower_bound(alpha: f64, d: usize) -> Result<f64> {
    Ok(-ln_cap_probability(CapParams::new(alpha, d)?) / std::f64::consts::LN_2)
}

/// Central estimate of the optimal worst-case bit budget and its error band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BstarEstimate {
    pub estimate: f64,
    pub band: f64,
}

/// `-log2 P(alpha, d) + log2 d + (1/2) log2 log2 d`, band `(1/2) log2 log2 d`.
pub fn bstar_estimate(alpha: f64, d: usize) -> Result<BstarEstimate> {
    if d < 3 {
        return Err(Error::invalid(format!("b* estimate needs d >= 3, got {d}")));
    }
    let df = d as f64;
    let band = 0.5 * df.log2().log2();
    Ok(BstarEstimate {
        estimate: avg_lower_bound(alpha, d)? + df.log2() + band,
        band,
    })
}

/// Binary entropy in bits.
pub fn binary_entropy(tau: f64) -> f64 {
    if tau <= 0.0 || tau >= 1.0 {
        return 0.0;
    }
    -tau * tau.log2() - (1.0 - tau) * (1.0 - tau).log2()
}

/// Worst-case fraction of zero levels, `1 / (1 + 2^((6 + 1/sqrt(nu)) / 4))`;
/// it maximizes `beta_at(., nu)`.
pub fn tau_star(nu: f64) -> Result<f64> {
    check_positive("nu", nu)?;
    Ok(1.0 / (1.0 + 2f64.powf((6.0 + 1.0 / nu.sqrt()) / 4.0)))
}

/// Per-dimension bit cost `H2(tau) + 1.5 (1 - tau) + (1 - tau/2) / (2 sqrt(nu))`.
pub fn beta_at(tau: f64, nu: f64) -> f64 {
    binary_entropy(tau) + 1.5 * (1.0 - tau) + (1.0 - tau / 2.0) / (2.0 * nu.sqrt())
}

/// `beta(tau*(nu), nu)`.
pub fn beta(nu: f64) -> Result<f64> {
    Ok(beta_at(tau_star(nu)?, nu))
}

/// Upper bound `30 + log2 d + beta(nu) d` on deterministic sparse-dithering bits.
pub fn dsd_predicted_bits(nu: f64, d: usize) -> Result<f64> {
    let df = d as f64;
    Ok(30.0 + df.log2() + beta(nu)? * df)
}

/// Per-dimension coefficient `log2 3 + 1/(2 sqrt(omega))` of randomized sparse dithering.
pub fn rsd_bits_per_dim(omega: f64) -> Result<f64> {
    check_positive("omega", omega)?;
    Ok(3f64.log2() + 1.0 / (2.0 * omega.sqrt()))
}

/// Upper bound `30 + log2 d + (log2 3 + 1/(2 sqrt(omega))) d` on expected bits.
pub fn rsd_predicted_bits(omega: f64, d: usize) -> Result<f64> {
    let df = d as f64;
    Ok(30.0 + df.log2() + rsd_bits_per_dim(omega)? * df)
}

/// Total bandwidth saving `32 d / ((1 + omega) E[bits])` against binary32 GD.
pub fn savings_factor(omega: f64, expected_bits: f64, d: usize) -> Result<f64> {
    if !(omega >= 0.0 && omega.is_finite()) {
        return Err(Error::invalid(format!("omega must be >= 0, got {omega}")));
    }
    check_positive("expected bits", expected_bits)?;
    Ok(32.0 * d as f64 / ((1.0 + omega) * expected_bits))
}

/// Right-hand side `(1600 d^2 log2 d)^(2/d)` of the bound on `alpha 4^(b/d)`.
pub fn theorem2_rhs(d: usize) -> Result<f64> {
    rhs_with_log(d, f64::log2)
}

/// Same bound with the natural logarithm in place of `log2 d`.
pub fn theorem2_rhs_ln(d: usize) -> Result<f64> {
    rhs_with_log(d, f64::ln)
}

fn rhs_with_log(d: usize, log: fn(f64) -> f64) -> Result<f64> {
    if d < 3 {
        return Err(Error::invalid(format!("bound needs d >= 3, got {d}")));
    }
    let df = d as f64;
    // Through logs so large d does not overflow.
    let ln_base = 1600f64.ln() + 2.0 * df.ln() + log(df).ln();
    Ok((ln_base * 2.0 / df).exp())
}

/// Every bound evaluated at one `(alpha or omega, d)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    /// Used as `alpha` for the lower bounds and as `nu = omega` for the dithering predictions.
    pub param: f64,
    pub d: usize,
    pub up_lower: Result<f64>,
    pub avg_lower: Result<f64>,
    pub bstar: Result<BstarEstimate>,
    pub predicted_dsd_bits: Result<f64>,
    pub predicted_rsd_bits: Result<f64>,
    /// Savings of randomized sparse dithering at its predicted bit count.
    pub rsd_savings: Result<f64>,
}

impl BoundReport {
    pub fn new(param: f64, d: usize) -> Self {
        let predicted_rsd_bits = rsd_predicted_bits(param, d);
        let rsd_savings = predicted_rsd_bits
            .clone()
            .and_then(|bits| savings_factor(param, bits, d));
        Self {
            param,
            d,
            up_lower: up_lower_bound(param, d),
            avg_lower: avg_lower_bound(param, d),
            bstar: bstar_estimate(param, d),
            predicted_dsd_bits: dsd_predicted_bits(param, d),
            predicted_rsd_bits,
            rsd_savings,
        }
    }
}

/// One row of the total-communication comparison of unbiased methods.
#[derive(Debug, Clone, PartialEq)]
pub struct SavingsRow {
    pub method: &'static str,
    /// Expected bits per message.
    pub bits: f64,
    /// Iteration inflation, `1 + omega`.
    pub iteration_factor: f64,
    /// `E[b] / 32d`.
    pub bit_ratio: f64,
    /// `32d / ((1 + omega) E[b])`.
    pub savings: f64,
}

impl SavingsRow {
    fn new(method: &'static str, bits: f64, iteration_factor: f64, d: usize) -> Self {
        let bit_ratio = bits / (32.0 * d as f64);
        Self {
            method,
            bits,
            iteration_factor,
            bit_ratio,
            savings: 1.0 / (iteration_factor * bit_ratio),
        }
    }
}

/// Savings comparison at dimension `d`; random sparsification keeps `k` coordinates.
/// Per-dimension rows ignore the `30 + log2 d` overheads, so their savings do not depend on `d`.
pub fn savings_table(d: usize, k: usize) -> Result<Vec<SavingsRow>> {
    if d == 0 || k == 0 || k > d {
        return Err(Error::invalid(format!("need 1 <= k <= d, got k = {k}, d = {d}")));
    }
    let df = d as f64;
    let rand_sparse_bits = 32.0 * k as f64 + bits_for_count(&binomial(d as u64, k as u64)) as f64;
    Ok(vec![
        SavingsRow::new("No compression", 32.0 * df, 1.0, d),
        SavingsRow::new("Random sparsification", rand_sparse_bits, df / k as f64, d),
        SavingsRow::new("Ternary quantization", df * 3f64.log2(), df.sqrt(), d),
        SavingsRow::new("Standard dithering", 2.8 * df, 2.0, d),
        SavingsRow::new("Natural compression", 9.0 * df, 9.0 / 8.0, d),
        SavingsRow::new("Randomized SD (omega=1/4)", rsd_bits_per_dim(0.25)? * df, 1.25, d),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn up_lower_examples() {
        assert!((up_lower_bound(0.25, 100).unwrap() - 100.0).abs() < 1e-12);
        assert!(up_lower_bound(1.0 - 1e-15, 10).unwrap() < 1e-12);
        assert!((up_lower_bound(0.1, 1000).unwrap() - 1660.9640474436812).abs() < 1e-9);
        assert!(up_lower_bound(0.0, 10).is_err());
        assert!(up_lower_bound(1.0, 10).is_err());
    }

    #[test]
    fn avg_lower_examples() {
        assert!((avg_lower_bound(0.5, 3).unwrap() - 2.7715533).abs() < 1e-6);
        assert!((avg_lower_bound(0.5, 2).unwrap() - 2.0).abs() < 1e-12);
        // The cap probability itself underflows here.
        let deep = avg_lower_bound(0.1, 1000).unwrap();
        let worst = up_lower_bound(0.1, 1000).unwrap();
        assert!(deep.is_finite() && deep > worst && deep < worst + 10.0, "{deep}");
    }

    #[test]
    fn bstar() {
        let b = bstar_estimate(0.5, 1024).unwrap();
        let expect = avg_lower_bound(0.5, 1024).unwrap() + 10.0 + 0.5 * 10f64.log2();
        assert!((b.estimate - expect).abs() < 1e-9);
        assert!((b.band - 0.5 * 10f64.log2()).abs() < 1e-12);
        assert!(bstar_estimate(0.5, 2).is_err());
        let mut prev = f64::INFINITY;
        for i in 1..100 {
            let v = bstar_estimate(i as f64 / 100.0, 50).unwrap().estimate;
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn beta_value() {
        let b = beta(0.1).unwrap();
        assert!((b - 3.3495).abs() < 1e-4, "{b}");
        assert!(b < 3.35);
        let d = 10_000;
        let predicted = dsd_predicted_bits(0.1, d).unwrap();
        assert!(predicted <= 30.0 + (d as f64).log2() + 3.35 * d as f64);
        let mut prev = f64::INFINITY;
        for i in 1..200 {
            let v = beta(i as f64 / 50.0).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn tau_star_maximizes_beta() {
        for nu in [0.05, 0.1, 0.25, 1.0, 4.0] {
            let t = tau_star(nu).unwrap();
            let b = beta_at(t, nu);
            for dt in [-1e-3, 1e-3] {
                assert!(beta_at(t + dt, nu) < b);
            }
        }
    }

    #[test]
    fn rsd_and_savings() {
        let c = rsd_bits_per_dim(0.25).unwrap();
        assert!((c - 2.585).abs() < 1e-3);
        let d = 1000;
        let s = savings_factor(0.25, c * d as f64, d).unwrap();
        assert!((s - 9.90).abs() < 0.01, "{s}");
        let dither = savings_factor(1.0, 2.8 * d as f64, d).unwrap();
        assert!((dither - 5.7).abs() < 0.05, "{dither}");
    }

    #[test]
    fn savings_table_rows() {
        let a = savings_table(1000, 10).unwrap();
        let b = savings_table(100_000, 10).unwrap();
        let natural = a.iter().find(|r| r.method.starts_with("Natural")).unwrap();
        assert_eq!(natural.bits, 9000.0);
        assert!((natural.savings - 3.16).abs() < 0.01);
        let rsd = a.iter().find(|r| r.method.starts_with("Randomized SD")).unwrap();
        assert!((rsd.savings - 9.9).abs() < 0.01);
        assert!(a[1].savings < 1.0);
        for (ra, rb) in a.iter().zip(&b) {
            if !matches!(ra.method, "Random sparsification" | "Ternary quantization") {
                assert!((ra.savings - rb.savings).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn theorem2() {
        let v = theorem2_rhs(1000).unwrap();
        assert!((1.04..=1.06).contains(&v), "{v}");
        assert!((v - 1.0481).abs() < 1e-4, "{v}");
        let ln = theorem2_rhs_ln(1000).unwrap();
        assert!((ln - 1.0473).abs() < 1e-4, "{ln}");
        let big = theorem2_rhs(1_000_000).unwrap();
        assert!(big > 1.0 && big < 1.001);
        let mut prev = f64::INFINITY;
        for d in (100..10_000).step_by(100) {
            let v = theorem2_rhs(d).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert!(theorem2_rhs(2).is_err());
    }

    #[test]
    fn report_is_finite() {
        let r = BoundReport::new(0.3, 50);
        assert!(r.up_lower.unwrap().is_finite());
        assert!(r.avg_lower.unwrap().is_finite());
        assert!(r.bstar.unwrap().estimate.is_finite());
        assert!(r.predicted_dsd_bits.unwrap().is_finite());
        assert!(r.rsd_savings.unwrap().is_finite());
    }
}
