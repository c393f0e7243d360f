//! Spherical-cap geometry.
//!
//! `P(alpha, d) = 1/2 I_alpha((d-1)/2, 1/2)` is the fraction of the unit sphere
//! lying within distance `sqrt(alpha)` of the point `sqrt(1-alpha) e_1`, i.e. the
//! probability that a uniform unit vector has `x_1 >= sqrt(1 - alpha)`.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

const MAX_CF_ITER: usize = 500;
const CF_EPS: f64 = 1e-15;
const TINY: f64 = 1e-300;

/// Godfrey's Lanczos coefficients, g = 607/128.
const LANCZOS_G: f64 = 607.0 / 128.0;
const LANCZOS: [f64; 15] = [
    0.999_999_999_999_997_1,
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_746,
    -0.491_913_816_097_620_2,
    3.399_464_998_481_189e-5,
    4.652_362_892_704_857_5e-5,
    -9.837_447_530_487_956e-5,
    1.580_887_032_249_125e-4,
    -2.102_644_417_241_049e-4,
    2.174_396_181_152_126_4e-4,
    -1.643_181_065_367_639e-4,
    8.441_822_398_385_275e-5,
    -2.619_083_840_158_141e-5,
    3.689_918_265_953_162_7e-6,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut series = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        series += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + series.ln()
}

/// Stirling remainder `ln Γ(x) - [(x - 1/2) ln x - x + ln(2π)/2]`, accurate for `x >= 10`.
fn stirling_tail(x: f64) -> f64 {
    let r = 1.0 / (x * x);
    (1.0 / 12.0
        - r * (1.0 / 360.0 - r * (1.0 / 1260.0 - r * (1.0 / 1680.0 - r / 1188.0))))
        / x
}

/// `ln Γ(large + small) - ln Γ(large)` without cancellation for large arguments.
fn ln_gamma_shift(large: f64, small: f64) -> f64 {
    if large < 10.0 {
        return ln_gamma(large + small) - ln_gamma(large);
    }
    let s = large + small;
    (large - 0.5) * (small / large).ln_1p() + small * s.ln() - small + stirling_tail(s)
        - stirling_tail(large)
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    let (small, large) = if a < b { (a, b) } else { (b, a) };
    ln_gamma(small) - ln_gamma_shift(large, small)
}

/// Regularized incomplete beta function `I_p(a, b)`.
pub fn reg_inc_beta(p: f64, a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !(a > 0.0) || !(b > 0.0) || !a.is_finite() || !b.is_finite()
    {
        return Err(Error::invalid(format!(
            "incomplete beta needs p in [0,1] and a, b > 0; got p={p}, a={a}, b={b}"
        )));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    let value = if p < (a + 1.0) / (a + b + 2.0) {
        lower_tail(p, a, b)?
    } else {
        1.0 - lower_tail(1.0 - p, b, a)?
    };
    Ok(value.clamp(0.0, 1.0))
}

/// `ln I_x(a, b)` on the side where the continued fraction converges quickly.
fn ln_lower_tail(x: f64, a: f64, b: f64) -> Result<f64> {
    let ln_series = |sum: f64| a * x.ln() - ln_beta(a, b) + sum.ln();
    if x < 1e-2 {
        if let Some(sum) = power_series(x, a, b) {
            return Ok(ln_series(sum));
        }
    }
    match continued_fraction(x, a, b) {
        Some(cf) => Ok(a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b) - a.ln() + cf.ln()),
        None => power_series(x, a, b).map(ln_series).ok_or(Error::NonConvergence {
            routine: "incomplete beta",
            iterations: MAX_CF_ITER,
        }),
    }
}

fn lower_tail(x: f64, a: f64, b: f64) -> Result<f64> {
    Ok(ln_lower_tail(x, a, b)?.exp())
}

/// Natural log of `I_p(a, b)`, finite where the value itself underflows.
pub fn ln_reg_inc_beta(p: f64, a: f64, b: f64) -> Result<f64> {
    if p > 0.0 && p < (a + 1.0) / (a + b + 2.0) && a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() {
        return ln_lower_tail(p, a, b);
    }
    Ok(reg_inc_beta(p, a, b)?.ln())
}

/// `sum_n (1-b)_n x^n / (n! (a+n))`, so that `B(x; a, b) = x^a * sum`.
fn power_series(x: f64, a: f64, b: f64) -> Option<f64> {
    let mut term = 1.0;
    let mut sum = 1.0 / a;
    for n in 1..=MAX_CF_ITER {
        let n = n as f64;
        term *= (n - b) * x / n;
        let contribution = term / (a + n);
        sum += contribution;
        if contribution.abs() < CF_EPS * sum.abs() {
            return Some(sum);
        }
    }
    None
}

/// Modified Lentz evaluation of the incomplete beta continued fraction.
fn continued_fraction(x: f64, a: f64, b: f64) -> Option<f64> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let clamp = |v: f64| if v.abs() < TINY { TINY } else { v };

    let mut c = 1.0;
    let mut d = 1.0 / clamp(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=MAX_CF_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let even = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / clamp(1.0 + even * d);
        c = clamp(1.0 + even / c);
        h *= d * c;
        let odd = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / clamp(1.0 + odd * d);
        c = clamp(1.0 + odd / c);
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < CF_EPS {
            return Some(h);
        }
    }
    None
}

/// Normalized variance `alpha` and dimension `d` of a cap query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapParams {
    alpha: f64,
    d: usize,
}

impl CapParams {
    pub fn new(alpha: f64, d: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if d < 2 {
            return Err(Error::invalid(format!("cap probability needs d >= 2, got {d}")));
        }
        Ok(Self { alpha, d })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Height of the cap boundary, `sqrt(1 - alpha)`.
    pub fn threshold(&self) -> f64 {
        (1.0 - self.alpha).sqrt()
    }
}

pub fn cap_probability(params: CapParams) -> f64 {
    let a = (params.d as f64 - 1.0) / 2.0;
    // Parameters are validated by CapParams, so the incomplete beta cannot fail
    // apart from non-convergence, which does not occur for b = 1/2.
    0.5 * reg_inc_beta(params.alpha, a, 0.5).expect("incomplete beta on a validated cap")
}

/// `ln P(alpha, d)`, accurate far below the smallest positive `f64`.
pub fn ln_cap_probability(params: CapParams) -> f64 {
    let a = (params.d as f64 - 1.0) / 2.0;
    0.5f64.ln() + ln_reg_inc_beta(params.alpha, a, 0.5).expect("incomplete beta on a validated cap")
}

/// Uniform point on the unit sphere of R^d: a normalized standard Gaussian vector.
pub fn sample_unit_sphere<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    assert!(d >= 1, "sphere dimension must be positive");
    loop {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
            return v;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub trials: u64,
}

/// Monte-Carlo estimate of the cap probability: fraction of uniform unit vectors
/// `x` with `|x - c|^2 <= alpha`, `c = sqrt(1 - alpha) e_1`.
pub fn mc_cap_probability<R: Rng + ?Sized>(
    params: CapParams,
    trials: u64,
    rng: &mut R,
) -> Result<McEstimate> {
    if trials == 0 {
        return Err(Error::invalid("Monte-Carlo cap estimate needs at least one trial"));
    }
    let c = params.threshold();
    let mut hits = 0u64;
    let mut g = vec![0.0; params.d];
    for _ in 0..trials {
        let norm = loop {
            g.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
            let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 0.0 {
                break n;
            }
        };
        let x1 = g[0] / norm;
        // |x - c|^2 = 1 + (1 - alpha) - 2 c x1
        if 2.0 - params.alpha - 2.0 * c * x1 <= params.alpha {
            hits += 1;
        }
    }
    let estimate = hits as f64 / trials as f64;
    Ok(McEstimate {
        estimate,
        std_error: (estimate * (1.0 - estimate) / trials as f64).sqrt(),
        trials,
    })
}
