//! Lexicographic ranking of k-subsets of `[0, d)` in the combinatorial number system.

use super::{BitCursor, BitString};
use crate::error::{Error, Result};
use num_bigint::BigUint;
use num_traits::{One, Zero};

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Width of a fixed field that can hold any of `count` values: `ceil(log2(count))`.
pub fn bits_for_count(count: &BigUint) -> u64 {
    if count.is_zero() {
        0
    } else {
        (count - 1u32).bits()
    }
}

/// Walks positions `0..d` keeping `C(d-1-j, remaining-1)` up to date with exact
/// integer updates, so each step costs one small multiply and one small divide.
struct Walk {
    n: u64,
    t: u64,
    block: BigUint,
}

impl Walk {
    fn new(d: u64, k: u64) -> Self {
        Self {
            n: d - 1,
            t: k - 1,
            block: binomial(d - 1, k - 1),
        }
    }

    fn take(&mut self) {
        if self.n > 0 {
            self.block *= self.t;
            self.block /= self.n;
            self.n -= 1;
            self.t = self.t.saturating_sub(1);
        }
    }

    fn skip(&mut self) {
        if self.n > 0 {
            self.block *= self.n - self.t;
            self.block /= self.n;
            self.n -= 1;
        }
    }
}

/// Rank of a strictly increasing index list among all `positions.len()`-subsets of `[0, d)`.
pub fn subset_rank(positions: &[usize], d: usize) -> Result<BigUint> {
    validate_positions(positions, d)?;
    let k = positions.len();
    let mut rank = BigUint::zero();
    if k == 0 || k == d {
        return Ok(rank);
    }
    let mut walk = Walk::new(d as u64, k as u64);
    let mut next = positions.iter().copied().peekable();
    for j in 0..d {
        match next.peek() {
            None => break,
            Some(&p) if p == j => {
                next.next();
                if next.peek().is_none() {
                    break;
                }
                walk.take();
            }
            Some(_) => {
                rank += &walk.block;
                walk.skip();
            }
        }
    }
    Ok(rank)
}

pub fn subset_unrank(rank: &BigUint, d: usize, k: usize) -> Result<Vec<usize>> {
    if k > d {
        return Err(Error::invalid(format!("cannot choose {k} of {d} positions")));
    }
    let total = binomial(d as u64, k as u64);
    if rank >= &total {
        return Err(Error::invalid(format!(
            "subset rank {rank} out of range for C({d}, {k}) = {total}"
        )));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    if k == d {
        return Ok((0..d).collect());
    }
    let mut rank = rank.clone();
    let mut out = Vec::with_capacity(k);
    let mut walk = Walk::new(d as u64, k as u64);
    for j in 0..d {
        if rank < walk.block {
            out.push(j);
            if out.len() == k {
                break;
            }
            walk.take();
        } else {
            rank -= &walk.block;
            walk.skip();
        }
    }
    debug_assert_eq!(out.len(), k);
    Ok(out)
}

fn validate_positions(positions: &[usize], d: usize) -> Result<()> {
    if positions.len() > d {
        return Err(Error::invalid(format!(
            "{} positions exceed dimension {d}",
            positions.len()
        )));
    }
    for w in positions.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::invalid(format!(
                "positions must be strictly increasing, found {} then {}",
                w[0], w[1]
            )));
        }
    }
    if let Some(&last) = positions.last() {
        if last >= d {
            return Err(Error::invalid(format!("position {last} out of range for d = {d}")));
        }
    }
    Ok(())
}

/// Fixed-width position code: `ceil(log2 C(d, k))` bits holding the subset rank.
#[derive(Debug, Clone, Copy)]
pub struct SubsetCoder {
    pub d: usize,
    pub k: usize,
}

impl SubsetCoder {
    pub fn new(d: usize, k: usize) -> Self {
        Self { d, k }
    }

    pub fn width(&self) -> u64 {
        bits_for_count(&binomial(self.d as u64, self.k as u64))
    }

    pub fn write(&self, positions: &[usize], out: &mut BitString) -> Result<()> {
        if positions.len() != self.k {
            return Err(Error::invalid(format!(
                "expected {} positions, got {}",
                self.k,
                positions.len()
            )));
        }
        let rank = subset_rank(positions, self.d)?;
        out.push_biguint(&rank, self.width())
    }

    pub fn read(&self, cursor: &mut BitCursor<'_>) -> Result<Vec<usize>> {
        let start = cursor.position();
        let rank = cursor.read_biguint(self.width())?;
        subset_unrank(&rank, self.d, self.k).map_err(|e| Error::Decode {
            offset: start,
            reason: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// All k-subsets of [0, d) in lexicographic order, by brute force.
    fn enumerate(d: usize, k: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for mask in 0u32..(1 << d) {
            if mask.count_ones() as usize == k {
                out.push((0..d).filter(|i| mask & (1 << i) != 0).collect::<Vec<_>>());
            }
        }
        out.sort();
        out
    }

    #[test]
    fn examples() {
        assert_eq!(subset_rank(&[0, 1], 4).unwrap(), BigUint::from(0u32));
        assert_eq!(subset_rank(&[2, 3], 4).unwrap(), BigUint::from(5u32));
        for (i, s) in enumerate(4, 2).iter().enumerate() {
            assert_eq!(subset_rank(s, 4).unwrap(), BigUint::from(i));
            assert_eq!(&subset_unrank(&BigUint::from(i), 4, 2).unwrap(), s);
        }
    }

    #[test]
    fn bijection_exhaustive_up_to_eight() {
        for d in 1..=8 {
            for k in 0..=d {
                let all = enumerate(d, k);
                assert_eq!(BigUint::from(all.len()), binomial(d as u64, k as u64));
                for (i, s) in all.iter().enumerate() {
                    assert_eq!(subset_rank(s, d).unwrap(), BigUint::from(i), "d={d} k={k} {s:?}");
                    assert_eq!(&subset_unrank(&BigUint::from(i), d, k).unwrap(), s);
                }
            }
        }
    }

    #[test]
    fn errors() {
        assert!(subset_rank(&[1, 1], 4).is_err());
        assert!(subset_rank(&[2, 1], 4).is_err());
        assert!(subset_rank(&[0, 4], 4).is_err());
        assert!(subset_unrank(&BigUint::from(6u32), 4, 2).is_err());
        assert!(subset_unrank(&BigUint::from(0u32), 4, 5).is_err());
    }

    #[test]
    fn widths() {
        assert_eq!(bits_for_count(&BigUint::from(1u32)), 0);
        assert_eq!(bits_for_count(&BigUint::from(2u32)), 1);
        assert_eq!(bits_for_count(&BigUint::from(3u32)), 2);
        assert_eq!(bits_for_count(&BigUint::from(4u32)), 2);
        assert_eq!(bits_for_count(&BigUint::from(5u32)), 3);
        assert_eq!(SubsetCoder::new(4, 2).width(), 3);
    }

    #[test]
    fn large_dimension_round_trip() {
        use rand::{seq::index::sample, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let d = 4096;
        for k in [1, 17, 700, 2048, 4000] {
            let mut pos = sample(&mut rng, d, k).into_vec();
            pos.sort_unstable();
            let coder = SubsetCoder::new(d, k);
            let mut s = BitString::new();
            coder.write(&pos, &mut s).unwrap();
            assert_eq!(s.len() as u64, coder.width());
            assert_eq!(coder.read(&mut s.cursor()).unwrap(), pos);
        }
        // Extremes of the rank range.
        let last: Vec<usize> = (d - 3..d).collect();
        let top = binomial(d as u64, 3) - 1u32;
        assert_eq!(subset_rank(&last, d).unwrap(), top);
        assert_eq!(subset_unrank(&top, d, 3).unwrap(), last);
    }
}
