//! Sparse dithering.
//!
//! The unit direction `u = x / |x|` is quantized onto levels `2 k h` with
//! half-step `h = sqrt(nu / d)`, and the message carries the triple
//! `(gamma, s, k)` with `C(x) = gamma * s * k`:
//!
//! ```text
//! [gamma: 31][n0: ceil(log2(d+1))][zero positions: ceil(log2 C(d, n0))]
//! [signs: d - n0][unary levels: sum k_i]
//! ```
//!
//! The deterministic variant rounds to the nearest level and rescales
//! optimally; the randomized variant rounds stochastically to one of the two
//! neighbouring levels and rescales by the norm, which makes it unbiased.

use super::{check_finite, CompressionOutcome};
use crate::bitio::{
    bits_for_count, round_float_magnitude, BitCursor, BitString, SubsetCoder,
};
use crate::error::{Error, Result};
use num_bigint::BigUint;
use rand::Rng;

/// Decoded sparse-dithering message.
#[derive(Debug, Clone, PartialEq)]
pub struct SdMessage {
    /// Scale, already rounded to binary32.
    pub gamma: f64,
    pub n0: usize,
    pub zero_positions: Vec<usize>,
    /// `true` for a negative coordinate, one per nonzero level.
    pub signs: Vec<bool>,
    /// Levels `k_i >= 1` of the nonzero coordinates, in index order.
    pub levels: Vec<u64>,
}

pub(crate) fn n0_width(d: usize) -> u32 {
    bits_for_count(&BigUint::from(d as u64 + 1)) as u32
}

/// Exact payload length for `n0` zero levels and level sum `sum_k`.
pub fn sd_bit_count(d: usize, n0: usize, sum_k: u64) -> usize {
    31 + n0_width(d) as usize
        + SubsetCoder::new(d, n0).width() as usize
        + (d - n0)
        + sum_k as usize
}

impl SdMessage {
    pub fn zero(d: usize) -> Self {
        Self {
            gamma: 0.0,
            n0: d,
            zero_positions: (0..d).collect(),
            signs: Vec::new(),
            levels: Vec::new(),
        }
    }

    /// Builds a message from per-coordinate signed levels; all-zero levels give the zero message.
    fn from_levels(gamma: f64, negative: &[bool], levels: &[u64]) -> Result<Self> {
        let d = levels.len();
        if levels.iter().all(|&k| k == 0) {
            return Ok(Self::zero(d));
        }
        let mut msg = Self {
            gamma: round_float_magnitude(gamma)?,
            n0: 0,
            zero_positions: Vec::new(),
            signs: Vec::new(),
            levels: Vec::new(),
        };
        for (i, (&k, &neg)) in levels.iter().zip(negative).enumerate() {
            if k == 0 {
                msg.zero_positions.push(i);
            } else {
                msg.signs.push(neg);
                msg.levels.push(k);
            }
        }
        msg.n0 = msg.zero_positions.len();
        Ok(msg)
    }

    pub fn reconstruct(&self, d: usize) -> Vec<f64> {
        let mut out = vec![0.0; d];
        if self.n0 == d {
            return out;
        }
        let mut zeros = self.zero_positions.iter().copied().peekable();
        let mut nonzero = self.signs.iter().zip(&self.levels);
        for (i, slot) in out.iter_mut().enumerate() {
            if zeros.peek() == Some(&i) {
                zeros.next();
                continue;
            }
            let (&neg, &k) = nonzero.next().expect("level count matches d - n0");
            let sign = if neg { -1.0 } else { 1.0 };
            *slot = self.gamma * sign * k as f64;
        }
        out
    }

    pub fn bit_count(&self, d: usize) -> usize {
        sd_bit_count(d, self.n0, self.levels.iter().sum())
    }

    pub fn encode(&self, d: usize) -> Result<BitString> {
        let mut out = BitString::with_capacity(self.bit_count(d));
        out.push_float_magnitude(self.gamma)?;
        out.push_fixed(self.n0 as u64, n0_width(d))?;
        SubsetCoder::new(d, self.n0).write(&self.zero_positions, &mut out)?;
        for &neg in &self.signs {
            out.push_bit(neg);
        }
        for &k in &self.levels {
            out.push_unary(k)?;
        }
        Ok(out)
    }

    pub fn decode(cursor: &mut BitCursor<'_>, d: usize) -> Result<Self> {
        let gamma = cursor.read_float_magnitude()?;
        let at = cursor.position();
        let n0 = cursor.read_fixed(n0_width(d))? as usize;
        if n0 > d {
            return Err(Error::Decode {
                offset: at,
                reason: format!("zero count {n0} exceeds dimension {d}"),
            });
        }
        let zero_positions = SubsetCoder::new(d, n0).read(cursor)?;
        let signs = (0..d - n0)
            .map(|_| cursor.read_bit())
            .collect::<Result<Vec<_>>>()?;
        let levels = (0..d - n0)
            .map(|_| cursor.read_unary())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            gamma,
            n0,
            zero_positions,
            signs,
            levels,
        })
    }
}

/// Euclidean norm that does not overflow for large finite coordinates.
pub(crate) fn l2_norm(x: &[f64]) -> f64 {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * x.iter().map(|v| (v / scale) * (v / scale)).sum::<f64>().sqrt()
}

fn check_nu(nu: f64) -> Result<()> {
    if nu > 0.0 && nu.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("nu must be positive and finite, got {nu}")))
    }
}

/// Nearest-level indices `k_i` of the deterministic scheme. Exact midpoints go to the lower level.
pub fn dsd_levels(x: &[f64], nu: f64) -> Vec<u64> {
    let norm = l2_norm(x);
    if norm == 0.0 {
        return vec![0; x.len()];
    }
    let step = 2.0 * (nu / x.len() as f64).sqrt();
    x.iter()
        .map(|&v| {
            let t = (v / norm).abs() / step;
            (t - 0.5).ceil().max(0.0) as u64
        })
        .collect()
}

fn finish(x: &[f64], msg: SdMessage) -> Result<(BitString, CompressionOutcome)> {
    let payload = msg.encode(x.len())?;
    let reconstructed = msg.reconstruct(x.len());
    debug_assert_eq!(payload.len(), msg.bit_count(x.len()));
    let bits = payload.len();
    Ok((payload, CompressionOutcome::new(x, reconstructed, bits)))
}

/// Deterministic sparse dithering with the optimal rescaling
/// `gamma* = <x, u_hat> / |u_hat|^2`.
pub fn dsd_compress(x: &[f64], nu: f64) -> Result<(BitString, CompressionOutcome)> {
    check_finite(x)?;
    check_nu(nu)?;
    let levels = dsd_levels(x, nu);
    let negative: Vec<bool> = x.iter().map(|v| *v < 0.0).collect();
    // With u_hat = 2h s k, gamma = 2h gamma* reduces to <|x|, k> / |k|^2.
    let num: f64 = x.iter().zip(&levels).map(|(v, &k)| v.abs() * k as f64).sum();
    let den: f64 = levels.iter().map(|&k| (k * k) as f64).sum();
    let gamma = if den > 0.0 { num / den } else { 0.0 };
    finish(x, SdMessage::from_levels(gamma, &negative, &levels)?)
}

pub fn dsd_decompress(cursor: &mut BitCursor<'_>, d: usize) -> Result<Vec<f64>> {
    Ok(SdMessage::decode(cursor, d)?.reconstruct(d))
}

/// Randomized sparse dithering: `k_i` or `k_i + 1` with probabilities that keep
/// `E u_hat = u`, reconstruction `|x| u_hat`.
pub fn rsd_compress<R: Rng + ?Sized>(
    x: &[f64],
    nu: f64,
    rng: &mut R,
) -> Result<(BitString, CompressionOutcome)> {
    check_finite(x)?;
    check_nu(nu)?;
    let d = x.len();
    let norm = l2_norm(x);
    if norm == 0.0 {
        return finish(x, SdMessage::zero(d));
    }
    let h = (nu / d as f64).sqrt();
    let step = 2.0 * h;
    let levels: Vec<u64> = x
        .iter()
        .map(|&v| {
            let t = (v / norm).abs() / step;
            let lower = t.floor();
            let up = rng.random::<f64>() < t - lower;
            lower as u64 + up as u64
        })
        .collect();
    let negative: Vec<bool> = x.iter().map(|v| *v < 0.0).collect();
    finish(x, SdMessage::from_levels(step * norm, &negative, &levels)?)
}

pub fn rsd_decompress(cursor: &mut BitCursor<'_>, d: usize) -> Result<Vec<f64>> {
    dsd_decompress(cursor, d)
}
