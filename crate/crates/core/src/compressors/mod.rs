//! Compression operators as encode/decode pairs with exact bit accounting.
//!
//! Every encoder returns the payload together with the reconstruction the
//! decoder will produce from it, so the two sides agree bit for bit.

mod baselines;
mod sparse_dither;
mod spherical;

pub use baselines::{
    identity_compress, identity_decompress, natural, natural_decompress, random_sparsify,
    sparse_values_decompress, std_dither, std_dither_decompress, ternary, topk_compress,
};
pub use sparse_dither::{
    dsd_compress, dsd_decompress, dsd_levels, rsd_compress, rsd_decompress, sd_bit_count,
    SdMessage,
};
pub use spherical::{
    sc_compress, sc_compress_until, sc_decompress, sc_trial_cap, ScParams, SphericalEncoding,
};
pub(crate) use spherical::sc_decompress_with_rice;

use crate::bitio::BitString;
use crate::error::{Error, Result};
use crate::rng::StreamKey;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    Identity,
    Dsd,
    Rsd,
    Sc,
    TopK,
    RandSparse,
    StdDither,
    Ternary,
    Natural,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 9] = [
        OperatorKind::Identity,
        OperatorKind::Dsd,
        OperatorKind::Rsd,
        OperatorKind::Sc,
        OperatorKind::TopK,
        OperatorKind::RandSparse,
        OperatorKind::StdDither,
        OperatorKind::Ternary,
        OperatorKind::Natural,
    ];

    /// Operator tag byte of the message container.
    pub fn tag(self) -> u8 {
        match self {
            OperatorKind::Identity => 0,
            OperatorKind::Dsd => 1,
            OperatorKind::Rsd => 2,
            OperatorKind::Sc => 3,
            OperatorKind::TopK => 4,
            OperatorKind::RandSparse => 5,
            OperatorKind::StdDither => 6,
            OperatorKind::Ternary => 7,
            OperatorKind::Natural => 8,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.tag() == tag)
            .ok_or_else(|| Error::Decode {
                offset: 0,
                reason: format!("unknown operator tag {tag}"),
            })
    }

    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::Identity => "identity",
            OperatorKind::Dsd => "dsd",
            OperatorKind::Rsd => "rsd",
            OperatorKind::Sc => "sc",
            OperatorKind::TopK => "topk",
            OperatorKind::RandSparse => "randsparse",
            OperatorKind::StdDither => "dither",
            OperatorKind::Ternary => "ternary",
            OperatorKind::Natural => "natural",
        }
    }

    pub fn is_randomized(self) -> bool {
        matches!(
            self,
            OperatorKind::Rsd
                | OperatorKind::Sc
                | OperatorKind::RandSparse
                | OperatorKind::StdDither
                | OperatorKind::Ternary
                | OperatorKind::Natural
        )
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown operator {s:?}")))
    }
}

/// Variance class an operator belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorClass {
    /// `E C(x) = x` and `E |C(x) - x|^2 <= omega |x|^2`.
    Unbiased { omega: f64 },
    /// `E |C(x) - x|^2 <= alpha |x|^2`.
    Contractive { alpha: f64 },
    /// `|C(x) - x|^2 <= alpha |x|^2` for every realization.
    StrictlyContractive { alpha: f64 },
}

impl fmt::Display for OperatorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorClass::Unbiased { omega } => write!(f, "U({omega})"),
            OperatorClass::Contractive { alpha } => write!(f, "B({alpha})"),
            OperatorClass::StrictlyContractive { alpha } => write!(f, "C({alpha})"),
        }
    }
}

/// Tagged operator description. Only the parameters of `kind` are set.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorConfig {
    pub kind: OperatorKind,
    pub nu: Option<f64>,
    pub alpha: Option<f64>,
    pub k: Option<usize>,
    pub levels: Option<u64>,
    /// Post-scale an unbiased operator by `1 / (1 + omega)`.
    pub wrap_omega: Option<f64>,
    /// Base seed; message `t` uses the stream `(seed, t)`.
    pub seed: u64,
}

impl OperatorConfig {
    fn bare(kind: OperatorKind) -> Self {
        Self {
            kind,
            nu: None,
            alpha: None,
            k: None,
            levels: None,
            wrap_omega: None,
            seed: 0,
        }
    }

    pub fn identity() -> Self {
        Self::bare(OperatorKind::Identity)
    }

    pub fn dsd(nu: f64) -> Self {
        Self {
            nu: Some(nu),
            ..Self::bare(OperatorKind::Dsd)
        }
    }

    pub fn rsd(nu: f64) -> Self {
        Self {
            nu: Some(nu),
            ..Self::bare(OperatorKind::Rsd)
        }
    }

    pub fn sc(alpha: f64) -> Self {
        Self {
            alpha: Some(alpha),
            ..Self::bare(OperatorKind::Sc)
        }
    }

    pub fn topk(k: usize) -> Self {
        Self {
            k: Some(k),
            ..Self::bare(OperatorKind::TopK)
        }
    }

    pub fn rand_sparse(k: usize) -> Self {
        Self {
            k: Some(k),
            ..Self::bare(OperatorKind::RandSparse)
        }
    }

    pub fn std_dither(levels: u64) -> Self {
        Self {
            levels: Some(levels),
            ..Self::bare(OperatorKind::StdDither)
        }
    }

    pub fn ternary() -> Self {
        Self::bare(OperatorKind::Ternary)
    }

    pub fn natural() -> Self {
        Self::bare(OperatorKind::Natural)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn wrapped(mut self, omega: f64) -> Self {
        self.wrap_omega = Some(omega);
        self
    }

    fn require<T: Copy>(value: Option<T>, name: &str, kind: OperatorKind) -> Result<T> {
        value.ok_or_else(|| Error::invalid(format!("operator {kind} needs parameter {name}")))
    }

    pub fn nu(&self) -> Result<f64> {
        Self::require(self.nu, "nu", self.kind)
    }

    pub fn alpha(&self) -> Result<f64> {
        Self::require(self.alpha, "alpha", self.kind)
    }

    pub fn k(&self) -> Result<usize> {
        Self::require(self.k, "k", self.kind)
    }

    pub fn levels(&self) -> Result<u64> {
        Self::require(self.levels, "levels", self.kind)
    }

    /// Checks that exactly the parameters of `kind` are set and valid for dimension `d`.
    pub fn validate(&self, d: usize) -> Result<()> {
        if d == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        let (nu, alpha, k, levels) = match self.kind {
            OperatorKind::Dsd | OperatorKind::Rsd => (true, false, false, false),
            OperatorKind::Sc => (false, true, false, false),
            OperatorKind::TopK | OperatorKind::RandSparse => (false, false, true, false),
            OperatorKind::StdDither => (false, false, false, true),
            _ => (false, false, false, false),
        };
        let check = |set: bool, wanted: bool, name: &str| {
            if set != wanted {
                let verb = if wanted { "needs" } else { "does not take" };
                Err(Error::invalid(format!("operator {} {verb} parameter {name}", self.kind)))
            } else {
                Ok(())
            }
        };
        check(self.nu.is_some(), nu, "nu")?;
        check(self.alpha.is_some(), alpha, "alpha")?;
        check(self.k.is_some(), k, "k")?;
        check(self.levels.is_some(), levels, "levels")?;
        if let Some(nu) = self.nu {
            if !(nu > 0.0 && nu.is_finite()) {
                return Err(Error::invalid(format!("nu must be positive, got {nu}")));
            }
        }
        if let Some(alpha) = self.alpha {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
            }
            if d < 2 {
                return Err(Error::invalid("spherical compression needs d >= 2"));
            }
        }
        if let Some(k) = self.k {
            if k == 0 || k > d {
                return Err(Error::invalid(format!("k must lie in [1, {d}], got {k}")));
            }
        }
        if let Some(levels) = self.levels {
            if levels == 0 {
                return Err(Error::invalid("dithering needs at least one level"));
            }
        }
        if let Some(omega) = self.wrap_omega {
            if !(omega >= 0.0 && omega.is_finite()) {
                return Err(Error::invalid(format!("wrap omega must be >= 0, got {omega}")));
            }
            if !matches!(self.base_class(d)?, OperatorClass::Unbiased { .. }) {
                return Err(Error::invalid(format!(
                    "only unbiased operators can be contract-wrapped, {} is not",
                    self.kind
                )));
            }
        }
        Ok(())
    }

    fn base_class(&self, d: usize) -> Result<OperatorClass> {
        let df = d as f64;
        Ok(match self.kind {
            OperatorKind::Identity => OperatorClass::Unbiased { omega: 0.0 },
            OperatorKind::Dsd => OperatorClass::StrictlyContractive {
                alpha: self.nu()?.min(1.0),
            },
            OperatorKind::Rsd => OperatorClass::Unbiased { omega: self.nu()? },
            OperatorKind::Sc => OperatorClass::StrictlyContractive {
                alpha: self.alpha()?,
            },
            OperatorKind::TopK => OperatorClass::StrictlyContractive {
                alpha: 1.0 - self.k()? as f64 / df,
            },
            OperatorKind::RandSparse => OperatorClass::Unbiased {
                omega: df / self.k()? as f64 - 1.0,
            },
            OperatorKind::StdDither => {
                let s = self.levels()? as f64;
                OperatorClass::Unbiased {
                    omega: (df / (s * s)).min(df.sqrt() / s),
                }
            }
            OperatorKind::Ternary => OperatorClass::Unbiased { omega: df.sqrt() },
            OperatorKind::Natural => OperatorClass::Unbiased { omega: 1.0 / 8.0 },
        })
    }

    /// Class of the configured operator, after the optional contract wrap.
    pub fn class(&self, d: usize) -> Result<OperatorClass> {
        let base = self.base_class(d)?;
        Ok(match (self.wrap_omega, base) {
            (Some(omega), OperatorClass::Unbiased { .. }) => OperatorClass::Contractive {
                alpha: omega / (1.0 + omega),
            },
            _ => base,
        })
    }

    /// Short human-readable label, e.g. `rsd(nu=0.25)/wrap(0.25)`.
    pub fn label(&self) -> String {
        let mut s = match self.kind {
            OperatorKind::Dsd | OperatorKind::Rsd => format!("{}(nu={})", self.kind, self.nu.unwrap_or(f64::NAN)),
            OperatorKind::Sc => format!("sc(alpha={})", self.alpha.unwrap_or(f64::NAN)),
            OperatorKind::TopK | OperatorKind::RandSparse => {
                format!("{}(k={})", self.kind, self.k.unwrap_or(0))
            }
            OperatorKind::StdDither => format!("dither(s={})", self.levels.unwrap_or(0)),
            other => other.name().to_string(),
        };
        if let Some(omega) = self.wrap_omega {
            s.push_str(&format!("/wrap({omega})"));
        }
        s
    }
}

/// Result of compressing one vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressionOutcome {
    pub reconstructed: Vec<f64>,
    pub bits: usize,
    /// `|C(x) - x|^2 / |x|^2`, zero for `x = 0`.
    pub distortion: f64,
}

impl CompressionOutcome {
    pub(crate) fn new(x: &[f64], reconstructed: Vec<f64>, bits: usize) -> Self {
        let distortion = distortion(x, &reconstructed);
        Self {
            reconstructed,
            bits,
            distortion,
        }
    }
}

/// Payload plus encoder-side outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub payload: BitString,
    pub outcome: CompressionOutcome,
    pub class: OperatorClass,
    /// Number of spherical trials, for spherical compression.
    pub trials: Option<u64>,
}

pub fn distortion(x: &[f64], reconstructed: &[f64]) -> f64 {
    let norm_sq: f64 = x.iter().map(|v| v * v).sum();
    if norm_sq == 0.0 {
        return 0.0;
    }
    let err: f64 = x
        .iter()
        .zip(reconstructed)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    err / norm_sq
}

pub(crate) fn check_finite(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::invalid("cannot compress an empty vector"));
    }
    match x.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::invalid(format!("coordinate {i} is not finite: {}", x[i]))),
        None => Ok(()),
    }
}

/// Scales the reconstruction of an unbiased operator by `1 / (1 + omega)`.
/// The payload and its length are unchanged; only the decoder post-scales.
pub fn contract_wrap(x: &[f64], outcome: CompressionOutcome, omega: f64) -> CompressionOutcome {
    let scale = 1.0 / (1.0 + omega);
    let reconstructed: Vec<f64> = outcome.reconstructed.iter().map(|v| v * scale).collect();
    CompressionOutcome::new(x, reconstructed, outcome.bits)
}

fn wrap_decoded(config: &OperatorConfig, mut v: Vec<f64>) -> Vec<f64> {
    if let Some(omega) = config.wrap_omega {
        let scale = 1.0 / (1.0 + omega);
        v.iter_mut().for_each(|x| *x *= scale);
    }
    v
}

/// Encodes `x` as message number `message` of the configured operator.
pub fn compress(config: &OperatorConfig, x: &[f64], message: u64) -> Result<Encoded> {
    compress_until(config, x, message, None)
}

/// [`compress`] with a deadline for the spherical trial search.
pub fn compress_until(
    config: &OperatorConfig,
    x: &[f64],
    message: u64,
    deadline: Option<Instant>,
) -> Result<Encoded> {
    config.validate(x.len())?;
    let key = StreamKey::new(config.seed, message);
    let mut trials = None;
    let (payload, outcome) = match config.kind {
        OperatorKind::Identity => identity_compress(x)?,
        OperatorKind::Dsd => dsd_compress(x, config.nu()?)?,
        OperatorKind::Rsd => rsd_compress(x, config.nu()?, &mut key.rng())?,
        OperatorKind::Sc => {
            let enc = sc_compress_until(x, config.alpha()?, key, deadline)?;
            trials = Some(enc.trials);
            (enc.payload, enc.outcome)
        }
        OperatorKind::TopK => topk_compress(x, config.k()?)?,
        OperatorKind::RandSparse => random_sparsify(x, config.k()?, &mut key.rng())?,
        OperatorKind::StdDither => std_dither(x, config.levels()?, &mut key.rng())?,
        OperatorKind::Ternary => ternary(x, &mut key.rng())?,
        OperatorKind::Natural => natural(x, &mut key.rng())?,
    };
    let outcome = match config.wrap_omega {
        Some(omega) => contract_wrap(x, outcome, omega),
        None => outcome,
    };
    Ok(Encoded {
        payload,
        outcome,
        class: config.class(x.len())?,
        trials,
    })
}

/// Decodes a payload produced by [`compress`] with the same configuration and message index.
/// The payload must be consumed exactly.
pub fn decompress(
    config: &OperatorConfig,
    payload: &BitString,
    d: usize,
    message: u64,
) -> Result<Vec<f64>> {
    config.validate(d)?;
    let mut cursor = payload.cursor();
    let decoded = match config.kind {
        OperatorKind::Identity => identity_decompress(&mut cursor, d)?,
        OperatorKind::Dsd => dsd_decompress(&mut cursor, d)?,
        OperatorKind::Rsd => rsd_decompress(&mut cursor, d)?,
        OperatorKind::Sc => sc_decompress(
            &mut cursor,
            d,
            config.alpha()?,
            StreamKey::new(config.seed, message),
        )?,
        OperatorKind::TopK | OperatorKind::RandSparse => {
            sparse_values_decompress(&mut cursor, d, config.k()?)?
        }
        OperatorKind::StdDither => std_dither_decompress(&mut cursor, d, config.levels()?)?,
        OperatorKind::Ternary => std_dither_decompress(&mut cursor, d, 1)?,
        OperatorKind::Natural => natural_decompress(&mut cursor, d)?,
    };
    if !cursor.is_exhausted() {
        return Err(Error::Decode {
            offset: cursor.position(),
            reason: format!("{} trailing bits after the message", cursor.remaining()),
        });
    }
    Ok(wrap_decoded(config, decoded))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_round_trip() {
        for kind in OperatorKind::ALL {
            assert_eq!(OperatorKind::from_tag(kind.tag()).unwrap(), kind);
            assert_eq!(kind.name().parse::<OperatorKind>().unwrap(), kind);
        }
        assert!(OperatorKind::from_tag(200).is_err());
        assert!("bogus".parse::<OperatorKind>().is_err());
    }

    #[test]
    fn validation() {
        assert!(OperatorConfig::dsd(0.1).validate(4).is_ok());
        assert!(OperatorConfig::dsd(0.0).validate(4).is_err());
        assert!(OperatorConfig::sc(1.0).validate(4).is_err());
        assert!(OperatorConfig::sc(0.5).validate(1).is_err());
        assert!(OperatorConfig::topk(0).validate(4).is_err());
        assert!(OperatorConfig::topk(5).validate(4).is_err());
        assert!(OperatorConfig::std_dither(0).validate(4).is_err());
        let mut mixed = OperatorConfig::dsd(0.1);
        mixed.k = Some(2);
        assert!(mixed.validate(4).is_err());
        assert!(OperatorConfig::dsd(0.1).wrapped(0.1).validate(4).is_err());
        assert!(OperatorConfig::rsd(0.25).wrapped(0.25).validate(4).is_ok());
    }

    #[test]
    fn wrapping_flips_the_class_label() {
        let cfg = OperatorConfig::rsd(0.25);
        assert_eq!(cfg.class(10).unwrap(), OperatorClass::Unbiased { omega: 0.25 });
        let wrapped = cfg.wrapped(0.25);
        assert_eq!(wrapped.class(10).unwrap(), OperatorClass::Contractive { alpha: 0.2 });
    }

    #[test]
    fn wrapping_identity_is_a_no_op() {
        let x = [0.5, -1.25, 3.0];
        let plain = compress(&OperatorConfig::identity(), &x, 0).unwrap();
        let wrapped = compress(&OperatorConfig::identity().wrapped(0.0), &x, 0).unwrap();
        assert_eq!(plain.outcome, wrapped.outcome);
        assert_eq!(plain.payload, wrapped.payload);
    }

    #[test]
    fn trailing_bits_are_rejected() {
        let cfg = OperatorConfig::dsd(0.1);
        let mut enc = compress(&cfg, &[3.0, 4.0], 0).unwrap();
        enc.payload.push_bit(false);
        assert!(matches!(
            decompress(&cfg, &enc.payload, 2, 0),
            Err(Error::Decode { .. })
        ));
    }

    #[test]
    fn distortion_of_zero_input_is_zero() {
        assert_eq!(distortion(&[0.0, 0.0], &[1.0, 1.0]), 0.0);
        assert!((distortion(&[1.0, -3.0, 2.0], &[0.0, -3.0, 0.0]) - 5.0 / 14.0).abs() < 1e-15);
    }
}
