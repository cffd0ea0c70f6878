//! Exact accumulation of nonnegative reals in 80-bit binary fixed point.
//!
//! Window sums built from the same prefix table are bitwise consistent, so
//! max-over-windows estimators inherit exact monotonicity and translation
//! identities, and sums are independent of how work was partitioned.

pub const FRAC_BITS: i32 = 80;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fixed(pub u128);

impl Fixed {
    /// Truncating conversion; exact for dyadic values with at most 80
    /// fractional bits. Values must lie in `[0, 2^40)`.
    #[inline]
    pub fn from_f64(v: f64) -> Fixed {
        debug_assert!((0.0..1.099_511_627_776e12).contains(&v), "fixed-point value {v} out of range");
        Fixed((v * 2f64.powi(FRAC_BITS)) as u128)
    }

    /// `2^-m`, zero below the fixed-point resolution.
    #[inline]
    pub fn pow2_neg(m: u64) -> Fixed {
        if m > FRAC_BITS as u64 {
            Fixed(0)
        } else {
            Fixed(1u128 << (FRAC_BITS as u64 - m))
        }
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 * 2f64.powi(-FRAC_BITS)
    }
}

/// `sums[i] = x_0 + ... + x_{i-1}`.
#[derive(Debug, Clone)]
pub struct PrefixSums {
    sums: Vec<u128>,
}

impl PrefixSums {
    pub fn new(values: impl IntoIterator<Item = Fixed>) -> Self {
        let iter = values.into_iter();
        let mut sums = Vec::with_capacity(iter.size_hint().0 + 1);
        let mut acc = 0u128;
        sums.push(0);
        for v in iter {
            acc += v.0;
            sums.push(acc);
        }
        PrefixSums { sums }
    }

    pub fn len(&self) -> usize {
        self.sums.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sum of entries `[a, b)`.
    #[inline]
    pub fn range(&self, a: usize, b: usize) -> Fixed {
        Fixed(self.sums[b] - self.sums[a])
    }

    /// Mean of entries `[a, a + len)`.
    pub fn mean(&self, a: usize, len: usize) -> f64 {
        self.range(a, a + len).to_f64() / len as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_values_are_exact() {
        for m in 0..=80 {
            assert_eq!(Fixed::from_f64((-(m as f64)).exp2()), Fixed::pow2_neg(m));
        }
        assert_eq!(Fixed::pow2_neg(81), Fixed(0));
        assert_eq!(Fixed::from_f64(0.75).to_f64(), 0.75);
    }

    #[test]
    fn window_sums() {
        let p = PrefixSums::new([1.0, 0.5, 0.25, 0.125].map(Fixed::from_f64));
        assert_eq!(p.range(1, 3).to_f64(), 0.75);
        assert_eq!(p.mean(0, 2), 0.75);
        assert_eq!(p.len(), 4);
    }
}
