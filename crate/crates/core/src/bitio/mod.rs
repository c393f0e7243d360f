//! Bit-exact serialization primitives shared by every codec.
//!
//! Bits are stored in append order, which is also transmission order.
//! Fixed-width fields are written most-significant bit first.

mod container;
mod subset;

pub use container::{Container, MAGIC};
pub use subset::{binomial, bits_for_count, subset_rank, subset_unrank, SubsetCoder};

use crate::error::{Error, Result};
use num_bigint::BigUint;

/// Finite bit sequence with an exact length (not byte padded).
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    bytes: Vec<u8>,
    len: usize,
}

impl std::fmt::Debug for BitString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.len <= 128 {
            write!(f, "BitString(\"{}\")", self.to_bit_chars())
        } else {
            write!(f, "BitString({} bits)", self.len)
        }
    }
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            bytes: Vec::with_capacity(bits.div_ceil(8)),
            len: 0,
        }
    }

    /// Parses a string of `'0'`/`'1'` characters. Other characters are rejected.
    pub fn from_bit_chars(s: &str) -> Result<Self> {
        let mut out = Self::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => out.push_bit(false),
                '1' => out.push_bit(true),
                other => return Err(Error::invalid(format!("not a bit character: {other:?}"))),
            }
        }
        Ok(out)
    }

    /// Rebuilds a bit string from byte-padded storage.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        if len > bytes.len() * 8 {
            return Err(Error::invalid(format!(
                "bit length {len} exceeds {} available bits",
                bytes.len() * 8
            )));
        }
        let mut out = Self {
            bytes: bytes[..len.div_ceil(8)].to_vec(),
            len,
        };
        // Padding bits are always zero.
        if !len.is_multiple_of(8) {
            let last = out.bytes.len() - 1;
            out.bytes[last] &= 0xFFu8 << (8 - len % 8);
        }
        Ok(out)
    }

    pub fn to_bit_chars(&self) -> String {
        self.iter().map(|b| if b { '1' } else { '0' }).collect()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Byte storage, zero padded up to the next byte boundary.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn get(&self, index: usize) -> Option<bool> {
        (index < self.len).then(|| self.bytes[index / 8] & (0x80 >> (index % 8)) != 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.bytes[i / 8] & (0x80 >> (i % 8)) != 0)
    }

    pub fn cursor(&self) -> BitCursor<'_> {
        BitCursor::new(self)
    }

    #[inline]
    pub fn push_bit(&mut self, bit: bool) {
        if self.len.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit {
            let last = self.bytes.len() - 1;
            self.bytes[last] |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
    }

    fn push_repeated(&mut self, bit: bool, count: usize) {
        for _ in 0..count {
            self.push_bit(bit);
        }
    }

    pub fn append(&mut self, other: &BitString) {
        if self.len.is_multiple_of(8) {
            self.bytes.extend_from_slice(&other.bytes);
            self.len += other.len;
        } else {
            for bit in other.iter() {
                self.push_bit(bit);
            }
        }
    }

    pub fn concat(mut self, other: &BitString) -> BitString {
        self.append(other);
        self
    }

    /// `k - 1` ones followed by a zero.
    pub fn push_unary(&mut self, k: u64) -> Result<()> {
        if k == 0 {
            return Err(Error::invalid("unary code needs k >= 1"));
        }
        self.push_repeated(true, (k - 1) as usize);
        self.push_bit(false);
        Ok(())
    }

    pub fn push_fixed(&mut self, value: u64, width: u32) -> Result<()> {
        if width > 64 || (width < 64 && value >> width != 0) {
            return Err(Error::Overflow { value, width });
        }
        for shift in (0..width).rev() {
            self.push_bit((value >> shift) & 1 == 1);
        }
        Ok(())
    }

    /// Writes an arbitrary precision integer in exactly `width` bits, MSB first.
    pub fn push_biguint(&mut self, value: &BigUint, width: u64) -> Result<()> {
        let needed = value.bits();
        if needed > width {
            return Err(Error::invalid(format!(
                "integer needs {needed} bits but the field has {width}"
            )));
        }
        self.push_repeated(false, (width - needed) as usize);
        for i in (0..needed).rev() {
            self.push_bit(value.bit(i));
        }
        Ok(())
    }

    /// Golomb-Rice code of `value >= 1`: `q` zeros, a one, then `r` in `m` bits,
    /// where `value = 2^m q + r`.
    pub fn push_golomb_rice(&mut self, value: u64, m: u32) -> Result<()> {
        if value == 0 {
            return Err(Error::invalid("Golomb-Rice coded values start at 1"));
        }
        if m >= 64 {
            return Err(Error::invalid(format!("Golomb-Rice parameter m = {m} too large")));
        }
        let q = value >> m;
        let r = value & ((1u64 << m) - 1);
        self.push_repeated(false, q as usize);
        self.push_bit(true);
        self.push_fixed(r, m)
    }

    /// Elias gamma code of `value >= 1`: `N` zeros then `value` in `N + 1` bits,
    /// `N = floor(log2 value)`.
    pub fn push_elias_gamma(&mut self, value: u64) -> Result<()> {
        if value == 0 {
            return Err(Error::invalid("Elias gamma coded values start at 1"));
        }
        let width = 64 - value.leading_zeros();
        self.push_repeated(false, (width - 1) as usize);
        self.push_fixed(value, width)
    }

    /// Non-negative binary32 value without its sign bit (31 bits).
    pub fn push_float_magnitude(&mut self, gamma: f64) -> Result<()> {
        let bits = float_magnitude_bits(gamma)?;
        self.push_fixed(bits as u64, 31)
    }
}

fn float_magnitude_bits(gamma: f64) -> Result<u32> {
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::invalid(format!(
            "float magnitude must be finite and non-negative, got {gamma}"
        )));
    }
    let single = gamma as f32;
    if !single.is_finite() {
        return Err(Error::invalid(format!("magnitude {gamma} overflows binary32")));
    }
    Ok(single.to_bits() & 0x7FFF_FFFF)
}

/// Rounds a magnitude exactly as the 31-bit float field does.
pub fn round_float_magnitude(gamma: f64) -> Result<f64> {
    Ok(f32::from_bits(float_magnitude_bits(gamma)?) as f64)
}

pub fn write_unary(k: u64) -> Result<BitString> {
    let mut out = BitString::new();
    out.push_unary(k)?;
    Ok(out)
}

pub fn write_fixed(value: u64, width: u32) -> Result<BitString> {
    let mut out = BitString::new();
    out.push_fixed(value, width)?;
    Ok(out)
}

pub fn golomb_rice_encode(value: u64, m: u32) -> Result<BitString> {
    let mut out = BitString::new();
    out.push_golomb_rice(value, m)?;
    Ok(out)
}

pub fn write_float_magnitude(gamma: f64) -> Result<BitString> {
    let mut out = BitString::new();
    out.push_float_magnitude(gamma)?;
    Ok(out)
}

/// The unique `m` with `1/(2p) <= 2^m < 1/p`, for `0 < p < 1/2`.
pub fn golomb_rice_params(p: f64) -> Result<u32> {
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::invalid(format!(
            "Golomb-Rice success probability must lie in (0, 1/2), got {p}"
        )));
    }
    let inv = 1.0 / p;
    // 2^m >= inv / 2  <=>  m >= log2(inv) - 1
    let mut m = (inv.log2() - 1.0).ceil().max(0.0) as u32;
    // Guard against log2 rounding at exact powers of two.
    while m > 0 && ((m - 1) as f64).exp2() >= inv / 2.0 {
        m -= 1;
    }
    while (m as f64).exp2() < inv / 2.0 {
        m += 1;
    }
    if (m as f64).exp2() >= inv {
        return Err(Error::invalid(format!("no Golomb-Rice parameter for p = {p}")));
    }
    Ok(m)
}

/// Single-consumer read position over a [`BitString`].
#[derive(Debug, Clone)]
pub struct BitCursor<'a> {
    source: &'a BitString,
    position: usize,
}

impl<'a> BitCursor<'a> {
    pub fn new(source: &'a BitString) -> Self {
        Self {
            source,
            position: 0,
        }
    }

    pub fn position(&self) -> usize {
        self.position
    }

    pub fn remaining(&self) -> usize {
        self.source.len() - self.position
    }

    pub fn is_exhausted(&self) -> bool {
        self.position == self.source.len()
    }

    #[inline]
    pub fn read_bit(&mut self) -> Result<bool> {
        let bit = self.source.get(self.position).ok_or(Error::TruncatedStream {
            offset: self.position,
        })?;
        self.position += 1;
        Ok(bit)
    }

    pub fn read_unary(&mut self) -> Result<u64> {
        let mut k = 1u64;
        while self.read_bit()? {
            k += 1;
        }
        Ok(k)
    }

    pub fn read_fixed(&mut self, width: u32) -> Result<u64> {
        if width > 64 {
            return Err(Error::invalid(format!("fixed field of {width} bits exceeds 64")));
        }
        if self.remaining() < width as usize {
            return Err(Error::TruncatedStream {
                offset: self.source.len(),
            });
        }
        let mut value = 0u64;
        for _ in 0..width {
            value = (value << 1) | self.read_bit()? as u64;
        }
        Ok(value)
    }

    pub fn read_biguint(&mut self, width: u64) -> Result<BigUint> {
        if (self.remaining() as u64) < width {
            return Err(Error::TruncatedStream {
                offset: self.source.len(),
            });
        }
        let mut value = BigUint::default();
        value.set_bit(width, false);
        for i in (0..width).rev() {
            if self.read_bit()? {
                value.set_bit(i, true);
            }
        }
        Ok(value)
    }

    pub fn read_golomb_rice(&mut self, m: u32) -> Result<u64> {
        let start = self.position;
        let mut q = 0u64;
        while !self.read_bit()? {
            q += 1;
        }
        let r = self.read_fixed(m)?;
        let value = q
            .checked_shl(m)
            .filter(|v| v >> m == q)
            .and_then(|v| v.checked_add(r))
            .ok_or_else(|| Error::MalformedCode {
                offset: start,
                reason: "Golomb-Rice value overflows 64 bits".into(),
            })?;
        if value == 0 {
            return Err(Error::MalformedCode {
                offset: start,
                reason: "Golomb-Rice value 0 is outside the code domain".into(),
            });
        }
        Ok(value)
    }

    pub fn read_elias_gamma(&mut self) -> Result<u64> {
        let start = self.position;
        let mut zeros = 0u32;
        while !self.read_bit()? {
            zeros += 1;
            if zeros > 63 {
                return Err(Error::MalformedCode {
                    offset: start,
                    reason: "Elias gamma prefix longer than 63 bits".into(),
                });
            }
        }
        let rest = self.read_fixed(zeros)?;
        Ok((1u64 << zeros) | rest)
    }

    pub fn read_float_magnitude(&mut self) -> Result<f64> {
        let bits = self.read_fixed(31)? as u32;
        Ok(f32::from_bits(bits) as f64)
    }
}

pub fn read_unary(cursor: &mut BitCursor<'_>) -> Result<u64> {
    cursor.read_unary()
}

pub fn golomb_rice_decode(cursor: &mut BitCursor<'_>, m: u32) -> Result<u64> {
    cursor.read_golomb_rice(m)
}

pub fn read_float_magnitude(cursor: &mut BitCursor<'_>) -> Result<f64> {
    cursor.read_float_magnitude()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(s: &str) -> BitString {
        BitString::from_bit_chars(s).unwrap()
    }

    #[test]
    fn unary_examples() {
        assert_eq!(write_unary(1).unwrap(), bits("0"));
        assert_eq!(write_unary(3).unwrap(), bits("110"));
        assert_eq!(write_unary(2).unwrap(), bits("10"));
        assert!(matches!(write_unary(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn read_unary_consumes_exactly_k_bits() {
        let s = bits("1101");
        let mut c = s.cursor();
        assert_eq!(read_unary(&mut c).unwrap(), 3);
        assert_eq!(c.position(), 3);

        let s = bits("0111");
        assert_eq!(s.cursor().read_unary().unwrap(), 1);

        let s = bits("1111");
        assert_eq!(
            s.cursor().read_unary(),
            Err(Error::TruncatedStream { offset: 4 })
        );
    }

    #[test]
    fn fixed_examples() {
        assert_eq!(write_fixed(5, 4).unwrap(), bits("0101"));
        assert_eq!(write_fixed(0, 3).unwrap(), bits("000"));
        assert_eq!(write_fixed(8, 3), Err(Error::Overflow { value: 8, width: 3 }));
        assert_eq!(write_fixed(u64::MAX, 64).unwrap().len(), 64);
    }

    #[test]
    fn golomb_rice_parameter_examples() {
        assert_eq!(golomb_rice_params(0.4).unwrap(), 1);
        assert_eq!(golomb_rice_params(0.25).unwrap(), 1);
        assert_eq!(golomb_rice_params(0.146447).unwrap(), 2);
        for bad in [0.0, 0.5, 0.7, -0.1, f64::NAN] {
            assert!(golomb_rice_params(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn golomb_rice_parameter_satisfies_window() {
        let mut p = 0.4999;
        while p > 1e-15 {
            let m = golomb_rice_params(p).unwrap();
            let two_m = (m as f64).exp2();
            assert!(1.0 / (2.0 * p) <= two_m && two_m < 1.0 / p, "p = {p}, m = {m}");
            p *= 0.77;
        }
    }

    #[test]
    fn golomb_rice_examples() {
        assert_eq!(golomb_rice_encode(5, 2).unwrap(), bits("0101"));
        assert_eq!(golomb_rice_encode(1, 2).unwrap(), bits("101"));
        assert_eq!(golomb_rice_encode(1, 0).unwrap(), bits("01"));
        assert_eq!(golomb_rice_decode(&mut bits("0101").cursor(), 2).unwrap(), 5);
        assert_eq!(golomb_rice_decode(&mut bits("101").cursor(), 2).unwrap(), 1);
        assert!(matches!(
            golomb_rice_decode(&mut bits("100").cursor(), 2),
            Err(Error::MalformedCode { offset: 0, .. })
        ));
        assert!(matches!(
            golomb_rice_decode(&mut bits("0001").cursor(), 2),
            Err(Error::TruncatedStream { .. })
        ));
    }

    #[test]
    fn elias_gamma_codes() {
        let mut s = BitString::new();
        for v in [1u64, 2, 3, 4, 9] {
            s.push_elias_gamma(v).unwrap();
        }
        assert_eq!(s.to_bit_chars(), "1010011001000001001");
        let mut c = s.cursor();
        for v in [1u64, 2, 3, 4, 9] {
            assert_eq!(c.read_elias_gamma().unwrap(), v);
        }
        assert!(c.is_exhausted());
        assert!(BitString::new().push_elias_gamma(0).is_err());
        let mut big = BitString::new();
        big.push_elias_gamma(u64::MAX).unwrap();
        assert_eq!(big.len(), 127);
        assert_eq!(big.cursor().read_elias_gamma().unwrap(), u64::MAX);
    }

    #[test]
    fn float_magnitude_layout() {
        assert_eq!(write_float_magnitude(0.0).unwrap(), bits(&"0".repeat(31)));
        let one = write_float_magnitude(1.0).unwrap();
        assert_eq!(one.to_bit_chars(), format!("01111111{}", "0".repeat(23)));
        assert!(write_float_magnitude(-1.0).is_err());
        assert!(write_float_magnitude(f64::INFINITY).is_err());
        assert!(write_float_magnitude(1e300).is_err());
    }

    #[test]
    fn float_magnitude_round_trip_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..1000 {
            let g: f64 = rng.random_range(0.0..1e6);
            let s = write_float_magnitude(g).unwrap();
            assert_eq!(s.len(), 31);
            let back = s.cursor().read_float_magnitude().unwrap();
            assert_eq!(back, g as f32 as f64);
        }
    }

    #[test]
    fn from_bytes_masks_padding() {
        let s = BitString::from_bytes(&[0b1011_1111], 3).unwrap();
        assert_eq!(s, bits("101"));
        assert!(BitString::from_bytes(&[0], 9).is_err());
    }

    #[test]
    fn biguint_field_round_trip() {
        let v = BigUint::from(0x1234_5678_9abc_def0_u64) << 70u32;
        let mut s = BitString::new();
        s.push_biguint(&v, 140).unwrap();
        assert_eq!(s.len(), 140);
        assert_eq!(s.cursor().read_biguint(140).unwrap(), v);
        assert!(s.clone().push_biguint(&v, 100).is_err());
    }

    proptest! {
        #[test]
        fn concat_is_length_additive_and_associative(
            a in proptest::collection::vec(any::<bool>(), 0..40),
            b in proptest::collection::vec(any::<bool>(), 0..40),
            c in proptest::collection::vec(any::<bool>(), 0..40),
        ) {
            let mk = |v: &[bool]| { let mut s = BitString::new(); v.iter().for_each(|&x| s.push_bit(x)); s };
            let (a, b, c) = (mk(&a), mk(&b), mk(&c));
            let left = a.clone().concat(&b).concat(&c);
            let right = a.clone().concat(&b.clone().concat(&c));
            prop_assert_eq!(left.len(), a.len() + b.len() + c.len());
            prop_assert_eq!(left, right);
        }

        #[test]
        fn codes_round_trip_with_exact_lengths(
            t in 1u64..100_000, m in 0u32..12, k in 1u64..300, v in any::<u32>()
        ) {
            let mut s = BitString::new();
            s.push_golomb_rice(t, m).unwrap();
            prop_assert_eq!(s.len() as u64, (t >> m) + 1 + m as u64);
            s.push_unary(k).unwrap();
            s.push_fixed(v as u64, 32).unwrap();
            let mut c = s.cursor();
            prop_assert_eq!(c.read_golomb_rice(m).unwrap(), t);
            prop_assert_eq!(c.read_unary().unwrap(), k);
            prop_assert_eq!(c.read_fixed(32).unwrap(), v as u64);
            prop_assert!(c.is_exhausted());
        }
    }

    #[test]
    fn golomb_rice_mean_length_under_geometric() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Geometric};
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for p in [0.4, 0.146_446_6, 0.01, 0.000_5] {
            let m = golomb_rice_params(p).unwrap();
            let geo = Geometric::new(p).unwrap();
            let n = 100_000;
            let total: u64 = (0..n)
                .map(|_| {
                    let t = geo.sample(&mut rng) + 1;
                    golomb_rice_encode(t, m).unwrap().len() as u64
                })
                .sum();
            let mean = total as f64 / n as f64;
            assert!(mean <= -p.log2() + 3.0, "p = {p}: mean length {mean}");
        }
    }
}
