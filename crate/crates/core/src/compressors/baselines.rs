//! Reference operators used for comparison: Top-k, random sparsification,
//! standard (QSGD-style) dithering, ternary quantization, natural compression
//! and the uncompressed binary32 identity.

use super::sparse_dither::{l2_norm, n0_width};
use super::{check_finite, CompressionOutcome};
use crate::bitio::{round_float_magnitude, BitCursor, BitString, SubsetCoder};
use crate::error::{Error, Result};
use rand::Rng;

fn check_k(k: usize, d: usize) -> Result<()> {
    if k == 0 || k > d {
        return Err(Error::invalid(format!("k must lie in [1, {d}], got {k}")));
    }
    Ok(())
}

/// Rounds to binary32, failing on overflow.
fn to_f32(v: f64) -> Result<f32> {
    let single = v as f32;
    if !single.is_finite() {
        return Err(Error::invalid(format!("value {v} overflows binary32")));
    }
    Ok(single)
}

fn push_f32(out: &mut BitString, v: f32) -> Result<()> {
    out.push_fixed(v.to_bits() as u64, 32)
}

fn read_f32(cursor: &mut BitCursor<'_>) -> Result<f64> {
    let offset = cursor.position();
    let v = f32::from_bits(cursor.read_fixed(32)? as u32);
    if !v.is_finite() {
        return Err(Error::Decode {
            offset,
            reason: "non-finite binary32 value".into(),
        });
    }
    Ok(v as f64)
}

/// `[k values as binary32, in index order][rank of the k positions]`.
fn sparse_values(
    x: &[f64],
    mut positions: Vec<usize>,
    scale: f64,
) -> Result<(BitString, CompressionOutcome)> {
    let d = x.len();
    positions.sort_unstable();
    let coder = SubsetCoder::new(d, positions.len());
    let mut payload = BitString::with_capacity(32 * positions.len() + coder.width() as usize);
    let mut reconstructed = vec![0.0; d];
    for &i in &positions {
        let v = to_f32(x[i] * scale)?;
        push_f32(&mut payload, v)?;
        reconstructed[i] = v as f64;
    }
    coder.write(&positions, &mut payload)?;
    let bits = payload.len();
    Ok((payload, CompressionOutcome::new(x, reconstructed, bits)))
}

/// Keeps the `k` largest magnitudes; ties go to the lower index.
pub fn topk_compress(x: &[f64], k: usize) -> Result<(BitString, CompressionOutcome)> {
    check_finite(x)?;
    check_k(k, x.len())?;
    let mut order: Vec<usize> = (0..x.len()).collect();
    let by_magnitude = |a: &usize, b: &usize| x[*b].abs().total_cmp(&x[*a].abs()).then(a.cmp(b));
    if k < order.len() {
        order.select_nth_unstable_by(k - 1, by_magnitude);
    }
    order.truncate(k);
    sparse_values(x, order, 1.0)
}

/// Keeps a uniformly random `k`-subset, rescaled by `d / k`.
pub fn random_sparsify<R: Rng + ?Sized>(
    x: &[f64],
    k: usize,
    rng: &mut R,
) -> Result<(BitString, CompressionOutcome)> {
    check_finite(x)?;
    let d = x.len();
    check_k(k, d)?;
    let positions = rand::seq::index::sample(rng, d, k).into_vec();
    sparse_values(x, positions, d as f64 / k as f64)
}

/// Decoder shared by Top-k and random sparsification.
pub fn sparse_values_decompress(cursor: &mut BitCursor<'_>, d: usize, k: usize) -> Result<Vec<f64>> {
    check_k(k, d)?;
    let values = (0..k).map(|_| read_f32(cursor)).collect::<Result<Vec<_>>>()?;
    let positions = SubsetCoder::new(d, k).read(cursor)?;
    let mut out = vec![0.0; d];
    for (i, v) in positions.into_iter().zip(values) {
        out[i] = v;
    }
    Ok(out)
}

/// Random dithering with `s` uniform levels on `|x_i| / |x|`.
///
/// ```text
/// [|x|: 31][nonzeros: ceil(log2(d+1))] then per nonzero, in index order:
/// [Elias-gamma(gap to previous nonzero)][sign][Elias-gamma(level)]
/// ```
pub fn std_dither<R: Rng + ?Sized>(
    x: &[f64],
    s: u64,
    rng: &mut R,
) -> Result<(BitString, CompressionOutcome)> {
    check_finite(x)?;
    if s == 0 {
        return Err(Error::invalid("dithering needs at least one level"));
    }
    let d = x.len();
    let mut payload = BitString::new();
    let norm = round_float_magnitude(l2_norm(x))?;
    payload.push_float_magnitude(norm)?;
    if norm == 0.0 {
        if l2_norm(x) > 0.0 {
            return Err(Error::invalid("norm underflows binary32"));
        }
        let bits = payload.len();
        return Ok((payload, CompressionOutcome::new(x, vec![0.0; d], bits)));
    }
    let sf = s as f64;
    let levels: Vec<u64> = x
        .iter()
        .map(|&v| {
            let t = sf * v.abs() / norm;
            let lower = t.floor();
            lower as u64 + (rng.random::<f64>() < t - lower) as u64
        })
        .collect();
    let nonzero = levels.iter().filter(|&&l| l > 0).count();
    payload.push_fixed(nonzero as u64, n0_width(d))?;
    let mut reconstructed = vec![0.0; d];
    let mut prev: i64 = -1;
    for (i, &l) in levels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        payload.push_elias_gamma((i as i64 - prev) as u64)?;
        payload.push_bit(x[i] < 0.0);
        payload.push_elias_gamma(l)?;
        prev = i as i64;
        let magnitude = norm * l as f64 / sf;
        reconstructed[i] = if x[i] < 0.0 { -magnitude } else { magnitude };
    }
    let bits = payload.len();
    Ok((payload, CompressionOutcome::new(x, reconstructed, bits)))
}

pub fn std_dither_decompress(cursor: &mut BitCursor<'_>, d: usize, s: u64) -> Result<Vec<f64>> {
    if s == 0 {
        return Err(Error::invalid("dithering needs at least one level"));
    }
    let mut out = vec![0.0; d];
    let norm = cursor.read_float_magnitude()?;
    if norm == 0.0 {
        return Ok(out);
    }
    let offset = cursor.position();
    let nonzero = cursor.read_fixed(n0_width(d))? as usize;
    if nonzero > d {
        return Err(Error::Decode {
            offset,
            reason: format!("{nonzero} nonzeros in dimension {d}"),
        });
    }
    let mut pos: i64 = -1;
    for _ in 0..nonzero {
        let offset = cursor.position();
        pos += cursor.read_elias_gamma()? as i64;
        if pos >= d as i64 {
            return Err(Error::Decode {
                offset,
                reason: format!("position {pos} out of range for dimension {d}"),
            });
        }
        let negative = cursor.read_bit()?;
        let level = cursor.read_elias_gamma()?;
        let magnitude = norm * level as f64 / s as f64;
        out[pos as usize] = if negative { -magnitude } else { magnitude };
    }
    Ok(out)
}

/// Standard dithering with a single level: values in `{-|x|, 0, |x|}`.
pub fn ternary<R: Rng + ?Sized>(x: &[f64], rng: &mut R) -> Result<(BitString, CompressionOutcome)> {
    std_dither(x, 1, rng)
}

const NATURAL_BIAS: i32 = 127;
const NATURAL_MIN_EXP: i32 = -126;
const NATURAL_MAX_EXP: i32 = 127;

/// Stochastic rounding of `|v|` to a neighbouring power of two; returns the
/// biased 8-bit exponent (0 for zero). Below `2^-126` the neighbours are 0 and `2^-126`.
fn natural_exponent<R: Rng + ?Sized>(v: f64, rng: &mut R) -> Result<u64> {
    let a = v.abs();
    if a == 0.0 {
        return Ok(0);
    }
    let min = 2f64.powi(NATURAL_MIN_EXP);
    let e = if a < min {
        if rng.random::<f64>() < a / min {
            NATURAL_MIN_EXP
        } else {
            return Ok(0);
        }
    } else {
        let floor_exp = ((a.to_bits() >> 52) & 0x7ff) as i32 - 1023;
        let low = 2f64.powi(floor_exp);
        floor_exp + (rng.random::<f64>() < (a - low) / low) as i32
    };
    if e > NATURAL_MAX_EXP {
        return Err(Error::invalid(format!("value {v} overflows the natural exponent range")));
    }
    Ok((e + NATURAL_BIAS) as u64)
}

fn natural_value(negative: bool, biased: u64) -> f64 {
    if biased == 0 {
        return 0.0;
    }
    let m = 2f64.powi(biased as i32 - NATURAL_BIAS);
    if negative {
        -m
    } else {
        m
    }
}

/// Natural compression: each coordinate becomes `[sign][8-bit biased exponent]`,
/// rounded stochastically between the two neighbouring powers of two.
pub fn natural<R: Rng + ?Sized>(x: &[f64], rng: &mut R) -> Result<(BitString, CompressionOutcome)> {
    check_finite(x)?;
    let mut payload = BitString::with_capacity(9 * x.len());
    let mut reconstructed = Vec::with_capacity(x.len());
    for &v in x {
        let biased = natural_exponent(v, rng)?;
        let negative = biased != 0 && v < 0.0;
        payload.push_bit(negative);
        payload.push_fixed(biased, 8)?;
        reconstructed.push(natural_value(negative, biased));
    }
    let bits = payload.len();
    Ok((payload, CompressionOutcome::new(x, reconstructed, bits)))
}

pub fn natural_decompress(cursor: &mut BitCursor<'_>, d: usize) -> Result<Vec<f64>> {
    (0..d)
        .map(|_| {
            let negative = cursor.read_bit()?;
            let offset = cursor.position();
            let biased = cursor.read_fixed(8)?;
            if biased == 255 {
                return Err(Error::Decode {
                    offset,
                    reason: "reserved natural exponent 255".into(),
                });
            }
            Ok(natural_value(negative, biased))
        })
        .collect()
}

/// Uncompressed binary32 transmission, 32 bits per coordinate.
pub fn identity_compress(x: &[f64]) -> Result<(BitString, CompressionOutcome)> {
    check_finite(x)?;
    let mut payload = BitString::with_capacity(32 * x.len());
    let mut reconstructed = Vec::with_capacity(x.len());
    for &v in x {
        let single = to_f32(v)?;
        push_f32(&mut payload, single)?;
        reconstructed.push(single as f64);
    }
    let bits = payload.len();
    Ok((payload, CompressionOutcome::new(x, reconstructed, bits)))
}

pub fn identity_decompress(cursor: &mut BitCursor<'_>, d: usize) -> Result<Vec<f64>> {
    (0..d).map(|_| read_f32(cursor)).collect()
}
