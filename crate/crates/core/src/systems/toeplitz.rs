//! Toeplitz points with one unfilled residue class per dyadic level.
//!
//! A point is given by a 2-adic hole path `kappa` (`k_n = kappa mod 2^n`) and
//! fill values `f_1, f_2, ...`. Level `n >= 1` fills the residue class
//! `k_n XOR 2^{n-1} (mod 2^n)`, i.e. the half of the previous hole class
//! that is not the new hole, with the constant `f_n`. Position `j` is
//! therefore filled at level `1 + (index of the first binary digit where j
//! and kappa differ)`, which is a trailing-zeros count.

use std::any::Any;

use crate::error::{Error, Result};
use crate::point::{DigitTail, OdometerPoint, Symbol, SymbolSource, SymbolicPoint};
use crate::rng::splitmix64;

/// Levels scanned beyond the 64 machine digits before giving up.
const MAX_LEVELS: u64 = 4096;

/// How a bit stream continues after its explicit prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitTail {
    Constant(u8),
    /// `first, !first, first, ...` starting right after the prefix.
    Alternating(u8),
    /// Pseudo-random bits, a function of `(seed, index)`.
    Hashed(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitStream {
    pub prefix: Vec<u8>,
    pub tail: BitTail,
}

impl BitStream {
    pub fn new(prefix: Vec<u8>, tail: BitTail) -> Self {
        BitStream { prefix, tail }
    }

    #[inline]
    pub fn bit(&self, i: u64) -> u8 {
        if let Some(&b) = self.prefix.get(i as usize) {
            return b & 1;
        }
        match self.tail {
            BitTail::Constant(c) => c & 1,
            BitTail::Alternating(first) => (first ^ ((i - self.prefix.len() as u64) & 1) as u8) & 1,
            BitTail::Hashed(seed) => (splitmix64(seed ^ i.wrapping_mul(0x9e37_79b9_7f4a_7c15)) >> 17) as u8 & 1,
        }
    }

    /// Bits `0..64` packed little-endian.
    fn low_word(&self) -> u64 {
        (0..64).fold(0u64, |w, i| w | ((self.bit(i) as u64) << i))
    }

    /// The stream is eventually constant equal to `c` from index `from` on.
    fn constant_from(&self, from: u64) -> Option<u8> {
        match self.tail {
            BitTail::Constant(c) if from >= self.prefix.len() as u64 => Some(c & 1),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToeplitzParams {
    /// Digits of the hole path `kappa`.
    pub hole: BitStream,
    /// `fills.bit(n - 1)` is the fill value of level `n`.
    pub fills: BitStream,
    /// Value at the never-filled position, when `kappa` is an integer.
    pub limit_value: Option<u8>,
}

impl ToeplitzParams {
    /// Builds the hole path from residues `k_1, k_2, ..., k_L` with
    /// `k_n < 2^n` and `k_{n+1} = k_n (mod 2^n)`.
    pub fn from_residues(
        residues: &[u64],
        fills: &[u8],
        hole_tail: BitTail,
        fill_tail: BitTail,
        limit_value: Option<u8>,
    ) -> Result<Self> {
        if residues.len() > 64 {
            return Err(Error::invalid("at most 64 explicit residues; continue with a hole tail"));
        }
        let mut digits = Vec::with_capacity(residues.len());
        let mut previous = 0u64;
        for (i, &k) in residues.iter().enumerate() {
            let n = i as u32 + 1;
            if n < 64 && k >> n != 0 {
                return Err(Error::invalid(format!("residue k_{n} = {k} is not below 2^{n}")));
            }
            let mask = if n > 64 { u64::MAX } else { (1u64 << (n - 1)) - 1 };
            if k & mask != previous & mask {
                return Err(Error::invalid(format!(
                    "k_{n} = {k} is not congruent to k_{} = {previous} mod 2^{}",
                    n - 1,
                    n - 1
                )));
            }
            digits.push(((k >> (n - 1).min(63)) & 1) as u8);
            previous = k;
        }
        if let Some(v) = limit_value {
            if v > 1 {
                return Err(Error::invalid("limit value must be a bit"));
            }
        }
        Ok(ToeplitzParams {
            hole: BitStream::new(digits, hole_tail),
            fills: BitStream::new(fills.to_vec(), fill_tail),
            limit_value,
        })
    }

    /// `k_n = 2^n - 1` with alternating fills `0, 1, 0, ...`; the hole path
    /// is the 2-adic `-1` so position `-1` is never filled.
    pub fn canonical() -> Self {
        ToeplitzParams {
            hole: BitStream::new(Vec::new(), BitTail::Constant(1)),
            fills: BitStream::new(Vec::new(), BitTail::Alternating(0)),
            limit_value: Some(0),
        }
    }

    /// `k_n = kappa mod 2^n`, for `n <= 64`.
    pub fn hole_residue(&self, n: u32) -> u64 {
        let w = self.hole.low_word();
        if n >= 64 {
            w
        } else {
            w & ((1u64 << n) - 1)
        }
    }

    /// The hole path as an odometer point resolved to `depth` digits.
    pub fn hole_point(&self, depth: u32) -> OdometerPoint {
        let digits: Vec<u8> = (0..depth as u64).map(|i| self.hole.bit(i)).collect();
        let tail = match self.hole.constant_from(depth as u64) {
            Some(0) => DigitTail::Zeros,
            Some(_) => DigitTail::Ones,
            None => DigitTail::Unresolved,
        };
        OdometerPoint::from_digits(&digits, tail)
    }

    /// The integer position that is never filled, if `kappa` is an integer.
    pub fn limit_position(&self) -> Option<i64> {
        self.hole.constant_from(self.hole.prefix.len() as u64)?;
        if self.hole.prefix.len() > 63 {
            return None;
        }
        self.hole_point(64).to_i64()
    }

    /// Whether the fill values take both values at levels beyond `n` within
    /// `lookahead` levels; this is what makes the hole class at level `n`
    /// non-periodic.
    pub fn fills_vary_beyond(&self, n: u64, lookahead: u64) -> bool {
        let first = self.fills.bit(n);
        (n + 1..n + lookahead).any(|i| self.fills.bit(i) != first)
    }
}

#[derive(Debug, Clone)]
pub struct ToeplitzSource {
    params: ToeplitzParams,
    hole_low: u64,
}

impl ToeplitzSource {
    pub fn new(params: ToeplitzParams) -> Self {
        let hole_low = params.hole.low_word();
        ToeplitzSource { params, hole_low }
    }

    pub fn params(&self) -> &ToeplitzParams {
        &self.params
    }

    /// Level (>= 1) at which position `j` is filled, or `None` for the
    /// never-filled position.
    pub fn fill_level(&self, j: i64) -> Result<Option<u64>> {
        let diff = (j as u64) ^ self.hole_low;
        if diff != 0 {
            return Ok(Some(diff.trailing_zeros() as u64 + 1));
        }
        let sign = (j < 0) as u8;
        let hole = &self.params.hole;
        if let Some(c) = hole.constant_from(64) {
            return Ok(if c == sign {
                None
            } else {
                Some(hole.prefix.len().max(64) as u64 + 1)
            });
        }
        for i in 64..MAX_LEVELS {
            if hole.bit(i) != sign {
                return Ok(Some(i + 1));
            }
            if let Some(c) = hole.constant_from(i + 1) {
                return Ok(if c == sign { None } else { Some(i + 2) });
            }
        }
        Err(Error::exhausted(j, format!("hole path agrees with the index for {MAX_LEVELS} levels")))
    }
}

impl SymbolSource for ToeplitzSource {
    fn alphabet_size(&self) -> u8 {
        2
    }

    #[inline]
    fn symbol(&self, j: i64) -> Result<Symbol> {
        match self.fill_level(j)? {
            Some(level) => Ok(self.params.fills.bit(level - 1)),
            None => self
                .params
                .limit_value
                .ok_or_else(|| Error::exhausted(j, "never-filled limit position without a value")),
        }
    }

    fn describe(&self) -> String {
        let k: String = (0..8).map(|i| char::from(b'0' + self.params.hole.bit(i))).collect();
        let f: String = (0..8).map(|i| char::from(b'0' + self.params.fills.bit(i))).collect();
        format!("toeplitz(kappa={k}.., fills={f}..)")
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

pub fn toeplitz_point(params: ToeplitzParams) -> SymbolicPoint {
    SymbolicPoint::from_source(ToeplitzSource::new(params))
}

/// Constructor from residues `k_1..k_L`, fills `f_1..f_L`, with the
/// hole path and fills continued by the given tails.
pub fn toeplitz_point_from_residues(
    residues: &[u64],
    fills: &[u8],
    hole_tail: BitTail,
    fill_tail: BitTail,
    limit_value: Option<u8>,
) -> Result<SymbolicPoint> {
    Ok(toeplitz_point(ToeplitzParams::from_residues(
        residues,
        fills,
        hole_tail,
        fill_tail,
        limit_value,
    )?))
}

/// The constructed Toeplitz source behind a (possibly shifted) point.
pub fn toeplitz_source(x: &SymbolicPoint) -> Option<&ToeplitzSource> {
    x.source().as_any().downcast_ref::<ToeplitzSource>()
}

/// Residues `r in [0, p)` whose positions in `[lo, lo + p*reps)` all carry
/// the same symbol: the windowed estimate of `Per(x, p)`.
pub fn periodic_part(x: &SymbolicPoint, p: u64, lo: i64, reps: u64) -> Result<Vec<bool>> {
    if p == 0 || reps == 0 {
        return Err(Error::invalid("period and repetitions must be positive"));
    }
    let mut periodic = vec![true; p as usize];
    let mut first = vec![0u8; p as usize];
    for m in 0..reps {
        for r in 0..p {
            let j = lo + (m * p + r) as i64;
            let s = x.symbol(j)?;
            let idx = (j.rem_euclid(p as i64)) as usize;
            if m == 0 {
                first[idx] = s;
            } else if s != first[idx] {
                periodic[idx] = false;
            }
        }
    }
    Ok(periodic)
}

/// Residues in `[0, 2^n)` outside the windowed periodic parts of all points.
pub fn uncovered_residues(points: &[&SymbolicPoint], n: u32, lo: i64, reps: u64) -> Result<Vec<u64>> {
    let p = 1u64 << n;
    let mut covered = vec![false; p as usize];
    for x in points {
        for (r, per) in periodic_part(x, p, lo, reps)?.into_iter().enumerate() {
            covered[r] |= per;
        }
    }
    Ok((0..p).filter(|&r| !covered[r as usize]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent level-by-level fill: walk levels and assign classes.
    fn fill_oracle(residues: &[u64], fills: &[u8], lo: i64, hi: i64) -> Vec<Option<u8>> {
        let mut out = vec![None; (hi - lo + 1) as usize];
        for (i, &k) in residues.iter().enumerate() {
            let n = i as u32 + 1;
            let modulus = 1i64 << n;
            // the lift of k_{n-1} that is not the new hole k_n
            let class = (k ^ (1 << (n - 1))) as i64;
            for j in lo..=hi {
                let slot = &mut out[(j - lo) as usize];
                if slot.is_none() && j.rem_euclid(modulus) == class {
                    *slot = Some(fills[i]);
                }
            }
        }
        out
    }

    #[test]
    fn canonical_member_first_symbols() {
        let x = toeplitz_point(ToeplitzParams::canonical());
        assert_eq!(x.word(0, 6).unwrap(), vec![0, 1, 0, 0, 0, 1, 0]);
        let residues: Vec<u64> = (1..=12).map(|n| (1u64 << n) - 1).collect();
        let fills: Vec<u8> = (0..12).map(|i| (i % 2) as u8).collect();
        let oracle = fill_oracle(&residues, &fills, -100, 100);
        for (j, o) in (-100..=100).zip(oracle) {
            if let Some(v) = o {
                assert_eq!(x.symbol(j).unwrap(), v, "j = {j}");
            }
        }
        assert_eq!(x.symbol(-1).unwrap(), 0);
    }

    #[test]
    fn even_integers_are_2_periodic_and_one_hole_per_level() {
        let x = toeplitz_point(ToeplitzParams::canonical());
        let per2 = periodic_part(&x, 2, 0, 64).unwrap();
        assert!(per2[0]);
        assert!(!per2[1]);
        for n in 1..=8u32 {
            let holes = uncovered_residues(&[&x], n, 0, 4).unwrap();
            assert_eq!(holes, vec![(1u64 << n) - 1], "n = {n}");
        }
    }

    #[test]
    fn strict_growth_of_periodic_parts() {
        let params = ToeplitzParams::from_residues(&[1, 3, 3, 11, 27], &[1, 0, 1, 1, 0], BitTail::Hashed(9), BitTail::Alternating(1), None).unwrap();
        let x = toeplitz_point(params.clone());
        for n in 1..=8u32 {
            let p = 1u64 << n;
            let small = periodic_part(&x, p, 0, 4).unwrap();
            let big = periodic_part(&x, 2 * p, 0, 2).unwrap();
            assert!(small.iter().any(|&b| b));
            // Per(x, 2^n) is a subset of Per(x, 2^{n+1}), strictly
            for r in 0..2 * p {
                if small[(r % p) as usize] {
                    assert!(big[r as usize]);
                }
            }
            assert!(big.iter().filter(|&&b| b).count() > 2 * small.iter().filter(|&&b| b).count());
            let holes: Vec<u64> = (0..p).filter(|&r| !small[r as usize]).collect();
            assert_eq!(holes, vec![params.hole_residue(n)]);
        }
    }

    #[test]
    fn incompatible_residues_rejected() {
        assert!(ToeplitzParams::from_residues(&[1, 2], &[0, 1], BitTail::Constant(0), BitTail::Constant(0), None).is_err());
        assert!(ToeplitzParams::from_residues(&[2], &[0], BitTail::Constant(0), BitTail::Constant(0), None).is_err());
    }

    #[test]
    fn limit_position_needs_a_value() {
        let mut params = ToeplitzParams::canonical();
        params.limit_value = None;
        let x = toeplitz_point(params.clone());
        assert!(matches!(x.symbol(-1), Err(Error::OracleExhausted { index: -1, .. })));
        assert_eq!(params.limit_position(), Some(-1));
        assert!(x.symbol(-2).is_ok());
    }

    #[test]
    fn shared_skeleton_prefix_agrees_on_window() {
        let base = |tail_seed: u64, fill_seed: u64| {
            let hole: Vec<u8> = vec![0, 1, 1, 0, 1, 0, 0, 1, 1, 0];
            let fills: Vec<u8> = vec![1, 0, 0, 1, 1, 0, 1, 0, 0, 1];
            toeplitz_point(ToeplitzParams {
                hole: BitStream::new(hole, BitTail::Hashed(tail_seed)),
                fills: BitStream::new(fills, BitTail::Hashed(fill_seed)),
                limit_value: None,
            })
        };
        let x1 = base(1, 2);
        let x2 = base(3, 4);
        // positions not congruent to the common level-10 hole must agree
        let hole10 = ToeplitzParams {
            hole: BitStream::new(vec![0, 1, 1, 0, 1, 0, 0, 1, 1, 0], BitTail::Constant(0)),
            fills: BitStream::new(vec![], BitTail::Constant(0)),
            limit_value: None,
        }
        .hole_residue(10) as i64;
        for j in -2048..2048i64 {
            if j.rem_euclid(1024) != hole10 {
                assert_eq!(x1.symbol(j).unwrap(), x2.symbol(j).unwrap(), "j = {j}");
            }
        }
    }
}
