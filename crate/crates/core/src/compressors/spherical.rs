//! Spherical compression.
//!
//! Encoder and decoder share a seeded sequence of i.i.d. points `x^t` on the
//! sphere of radius `sqrt(1 - alpha)`. The encoder sends the norm of `x` and the
//! index `T` of the first point within `sqrt(alpha)` of the direction of `x`;
//! the decoder regenerates `x^T` directly from the seed. `T` is geometric with
//! success probability `P(alpha, d)` and is Golomb-Rice coded.
//!
//! Payload: `[|x|: 31][Golomb-Rice(T, m)]`, with `m` derived from `P(alpha, d)`.
//! The zero vector is sent as a zero norm and nothing else.

use super::sparse_dither::l2_norm;
use super::{check_finite, CompressionOutcome};
use crate::bitio::{golomb_rice_params, round_float_magnitude, BitCursor, BitString};
use crate::error::{Error, Result};
use crate::geometry::{cap_probability, CapParams};
use crate::rng::{StreamKey, SubstreamKey};
use rand::Rng;
use rand_distr::StandardNormal;
use std::time::Instant;

/// Trial cap as a multiple of the expected trial count `1 / P(alpha, d)`.
const CAP_MULTIPLE: u64 = 50;

/// Trials between deadline checks.
const DEADLINE_STRIDE: u64 = 1 << 14;

/// Relative slack on the early-rejection threshold. The exact acceptance test
/// always runs on surviving candidates, so this only has to absorb rounding.
const REJECT_SLACK: f64 = 1e-9;

/// Quantities both sides derive from `(alpha, d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScParams {
    pub alpha: f64,
    pub d: usize,
    pub probability: f64,
    pub rice_m: u32,
    pub trial_cap: u64,
}

impl ScParams {
    pub fn new(alpha: f64, d: usize) -> Result<Self> {
        let cap = CapParams::new(alpha, d)?;
        let probability = cap_probability(cap);
        Ok(Self {
            alpha,
            d,
            probability,
            rice_m: golomb_rice_params(probability)?,
            trial_cap: sc_trial_cap(probability),
        })
    }
}

/// `50 * ceil(1 / p)`: giving up has probability at most `(1 - p)^(50/p) <= e^-50`.
pub fn sc_trial_cap(probability: f64) -> u64 {
    let expected = (1.0 / probability).ceil();
    if expected >= (u64::MAX / CAP_MULTIPLE) as f64 {
        u64::MAX
    } else {
        CAP_MULTIPLE * expected as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphericalEncoding {
    pub payload: BitString,
    pub outcome: CompressionOutcome,
    /// Index `T >= 1` of the accepted trial; 0 for the zero message.
    pub trials: u64,
}

impl SphericalEncoding {
    /// Payload bits spent on `T`, excluding the 31 norm bits.
    pub fn index_bits(&self) -> usize {
        self.payload.len() - 31
    }
}

#[inline]
fn coordinate_normal(trial: &SubstreamKey, index: usize) -> f64 {
    trial.coordinate(index as u64).sample(StandardNormal)
}

/// Point number `t` of the shared sequence, scaled to radius `radius`.
fn trial_point(key: StreamKey, t: u64, d: usize, radius: f64) -> Vec<f64> {
    let trial = key.substream(t);
    let g: Vec<f64> = (0..d).map(|i| coordinate_normal(&trial, i)).collect();
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return vec![0.0; d];
    }
    let scale = radius / norm;
    g.into_iter().map(|v| v * scale).collect()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// Coordinate order and tail norms for the early-rejection bound.
struct RejectionPlan {
    order: Vec<usize>,
    weights: Vec<f64>,
    /// `tail_gap[j] = sqrt(c^2 - |u_rest|^2)` after visiting `order[..=j]`, or
    /// `NaN` while the remaining mass still admits any outcome.
    tail_gap: Vec<f64>,
}

impl RejectionPlan {
    fn new(u: &[f64], threshold: f64) -> Self {
        let mut order: Vec<usize> = (0..u.len()).collect();
        order.sort_by(|&a, &b| u[b].abs().total_cmp(&u[a].abs()).then(a.cmp(&b)));
        let weights: Vec<f64> = order.iter().map(|&i| u[i]).collect();
        let mut tail = vec![0.0; u.len()];
        let mut acc = 0.0;
        for j in (0..u.len()).rev() {
            tail[j] = acc;
            acc += weights[j] * weights[j];
        }
        let c2 = threshold * threshold;
        let tail_gap = tail
            .iter()
            .map(|&rest| if rest < c2 { (c2 - rest).sqrt() } else { f64::NAN })
            .collect();
        Self {
            order,
            weights,
            tail_gap,
        }
    }

    /// `false` when no completion of the partially drawn Gaussian vector can
    /// satisfy `<g, u> >= c |g|`. With partial sums `dot` and `sq`, the best
    /// completion reaches `dot - sqrt(sq) sqrt(c^2 - |u_rest|^2)` by Cauchy-Schwarz.
    fn may_accept(&self, trial: &SubstreamKey) -> bool {
        let mut dot = 0.0;
        let mut sq = 0.0;
        for (j, (&i, &w)) in self.order.iter().zip(&self.weights).enumerate() {
            let g = coordinate_normal(trial, i);
            dot += w * g;
            sq += g * g;
            let gap = self.tail_gap[j];
            if gap.is_nan() {
                continue;
            }
            if dot < sq.sqrt() * gap {
                return false;
            }
        }
        true
    }
}

pub fn sc_compress(x: &[f64], alpha: f64, key: StreamKey) -> Result<SphericalEncoding> {
    sc_compress_until(x, alpha, key, None)
}

/// [`sc_compress`] that stops with [`Error::Deadline`] once `deadline` passes.
pub fn sc_compress_until(
    x: &[f64],
    alpha: f64,
    key: StreamKey,
    deadline: Option<Instant>,
) -> Result<SphericalEncoding> {
    check_finite(x)?;
    let d = x.len();
    let params = ScParams::new(alpha, d)?;
    let norm = l2_norm(x);
    let mut payload = BitString::new();
    if norm == 0.0 {
        payload.push_float_magnitude(0.0)?;
        let outcome = CompressionOutcome::new(x, vec![0.0; d], payload.len());
        return Ok(SphericalEncoding {
            payload,
            outcome,
            trials: 0,
        });
    }
    let sent_norm = round_float_magnitude(norm)?;
    if sent_norm == 0.0 {
        return Err(Error::invalid(format!("norm {norm} underflows binary32")));
    }
    let radius = sent_norm * (1.0 - alpha).sqrt();
    let u: Vec<f64> = x.iter().map(|v| v / norm).collect();
    let plan = RejectionPlan::new(&u, (1.0 - alpha).sqrt() * (1.0 - REJECT_SLACK));
    let budget = alpha * norm * norm;

    for t in 1..=params.trial_cap {
        if let Some(deadline) = deadline {
            if t % DEADLINE_STRIDE == 0 && Instant::now() >= deadline {
                return Err(Error::Deadline { trials: t });
            }
        }
        if !plan.may_accept(&key.substream(t)) {
            continue;
        }
        let candidate = trial_point(key, t, d, radius);
        if squared_distance(&candidate, x) <= budget {
            payload.push_float_magnitude(sent_norm)?;
            payload.push_golomb_rice(t, params.rice_m)?;
            let outcome = CompressionOutcome::new(x, candidate, payload.len());
            return Ok(SphericalEncoding {
                payload,
                outcome,
                trials: t,
            });
        }
    }
    Err(Error::GiveUp {
        trials: params.trial_cap,
    })
}

pub fn sc_decompress(
    cursor: &mut BitCursor<'_>,
    d: usize,
    alpha: f64,
    key: StreamKey,
) -> Result<Vec<f64>> {
    let params = ScParams::new(alpha, d)?;
    sc_decompress_with_rice(cursor, d, alpha, key, params.rice_m)
}

/// Decoder with an explicit Golomb-Rice parameter, used for fault injection.
pub(crate) fn sc_decompress_with_rice(
    cursor: &mut BitCursor<'_>,
    d: usize,
    alpha: f64,
    key: StreamKey,
    rice_m: u32,
) -> Result<Vec<f64>> {
    let sent_norm = cursor.read_float_magnitude()?;
    if sent_norm == 0.0 {
        return Ok(vec![0.0; d]);
    }
    let t = cursor.read_golomb_rice(rice_m)?;
    Ok(trial_point(key, t, d, sent_norm * (1.0 - alpha).sqrt()))
}
