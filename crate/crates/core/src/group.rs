//! The acting group (Z, with Z^2 as a parameterized extension) and Følner
//! window families.
//!
//! Haar measure on a discrete group is counting measure, so every average in
//! the crate is a finite sum divided by the window cardinality.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An element of Z (dim 1) or Z^2 (dim 2). Unused coordinates are zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupElement {
    dim: u8,
    coords: [i64; 2],
}

impl GroupElement {
    pub const fn z(n: i64) -> Self {
        GroupElement {
            dim: 1,
            coords: [n, 0],
        }
    }

    pub const fn z2(a: i64, b: i64) -> Self {
        GroupElement {
            dim: 2,
            coords: [a, b],
        }
    }

    pub fn zero(dim: u8) -> Self {
        match dim {
            1 => Self::z(0),
            _ => Self::z2(0, 0),
        }
    }

    pub fn from_coords(coords: &[i64]) -> Result<Self> {
        match *coords {
            [n] => Ok(Self::z(n)),
            [a, b] => Ok(Self::z2(a, b)),
            _ => Err(Error::invalid(format!(
                "group elements have 1 or 2 coordinates, got {}",
                coords.len()
            ))),
        }
    }

    pub fn dim(&self) -> u8 {
        self.dim
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords[..self.dim as usize]
    }

    /// The integer of a Z element.
    pub fn as_z(&self) -> Result<i64> {
        if self.dim == 1 {
            Ok(self.coords[0])
        } else {
            Err(Error::Mismatch(format!("expected a Z element, got {self}")))
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coords == [0, 0]
    }

    /// Sum of absolute coordinates.
    pub fn norm1(&self) -> u64 {
        self.coords.iter().map(|c| c.unsigned_abs()).sum()
    }

    fn check_dim(&self, other: &Self) {
        assert_eq!(
            self.dim, other.dim,
            "group elements of different dimension combined"
        );
    }
}

impl Add for GroupElement {
    type Output = GroupElement;

    fn add(self, rhs: Self) -> Self {
        self.check_dim(&rhs);
        GroupElement {
            dim: self.dim,
            coords: [self.coords[0] + rhs.coords[0], self.coords[1] + rhs.coords[1]],
        }
    }
}

impl Neg for GroupElement {
    type Output = GroupElement;

    fn neg(self) -> Self {
        GroupElement {
            dim: self.dim,
            coords: [-self.coords[0], -self.coords[1]],
        }
    }
}

impl Sub for GroupElement {
    type Output = GroupElement;

    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.dim {
            1 => write!(f, "{}", self.coords[0]),
            _ => write!(f, "({},{})", self.coords[0], self.coords[1]),
        }
    }
}

/// A finite window: the interval `[start, start + len)` in Z, or the box
/// `[a, a + l0) x [b, b + l1)` in Z^2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    start: GroupElement,
    lengths: [u64; 2],
}

impl Window {
    pub fn interval(start: i64, len: u64) -> Result<Self> {
        if len == 0 {
            return Err(Error::invalid("window length must be at least 1"));
        }
        Ok(Window {
            start: GroupElement::z(start),
            lengths: [len, 1],
        })
    }

    pub fn square(start: (i64, i64), side: u64) -> Result<Self> {
        Self::rect(start, (side, side))
    }

    pub fn rect(start: (i64, i64), sides: (u64, u64)) -> Result<Self> {
        if sides.0 == 0 || sides.1 == 0 {
            return Err(Error::invalid("box sides must be at least 1"));
        }
        Ok(Window {
            start: GroupElement::z2(start.0, start.1),
            lengths: [sides.0, sides.1],
        })
    }

    pub fn dim(&self) -> u8 {
        self.start.dim()
    }

    pub fn start(&self) -> GroupElement {
        self.start
    }

    /// Side lengths; a single entry for Z.
    pub fn lengths(&self) -> &[u64] {
        &self.lengths[..self.dim() as usize]
    }

    /// Cardinality |F|.
    pub fn len(&self) -> u64 {
        self.lengths[0] * self.lengths[1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// For Z windows, the pair `(start, len)`.
    pub fn as_interval(&self) -> Option<(i64, u64)> {
        (self.dim() == 1).then(|| (self.start.coords[0], self.lengths[0]))
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        g.dim() == self.dim()
            && g.coords()
                .iter()
                .zip(self.start.coords())
                .zip(self.lengths())
                .all(|((&c, &s), &l)| c >= s && ((c - s) as u64) < l)
    }

    pub fn translate(&self, s: GroupElement) -> Window {
        Window {
            start: self.start + s,
            lengths: self.lengths,
        }
    }

    /// Elements in row-major order (first coordinate fastest).
    pub fn elements(&self) -> impl Iterator<Item = GroupElement> + '_ {
        let [l0, l1] = self.lengths;
        let start = self.start;
        (0..l1).flat_map(move |j| {
            (0..l0).map(move |i| {
                let offset = if start.dim() == 1 {
                    GroupElement::z(i as i64)
                } else {
                    GroupElement::z2(i as i64, j as i64)
                };
                start + offset
            })
        })
    }
}

/// `|gF △ F| / |F|`, computed exactly. The value lies in `[0, 2]`.
///
/// For boxes, `|gF ∩ F|` is the product of the per-axis overlaps and
/// `|gF △ F| = 2 (|F| - |gF ∩ F|)`.
pub fn foelner_defect(window: &Window, g: &GroupElement) -> Result<Ratio<u64>> {
    if g.dim() != window.dim() {
        return Err(Error::Mismatch(format!(
            "element {g} does not act on a dimension-{} window",
            window.dim()
        )));
    }
    let overlap: u64 = window
        .lengths()
        .iter()
        .zip(g.coords())
        .map(|(&l, &c)| l.saturating_sub(c.unsigned_abs()))
        .product();
    let size = window.len();
    Ok(Ratio::new(2 * (size - overlap), size))
}

/// An indexed family of windows `n -> F_n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoelnerFamily {
    windows: Vec<Window>,
}

impl FoelnerFamily {
    pub fn from_windows(windows: Vec<Window>) -> Result<Self> {
        let Some(first) = windows.first() else {
            return Err(Error::invalid("a Følner family needs at least one window"));
        };
        let dim = first.dim();
        if windows.iter().any(|w| w.dim() != dim) {
            return Err(Error::invalid("all windows of a family share one dimension"));
        }
        Ok(FoelnerFamily { windows })
    }

    /// The canonical family `[0, 2^n)` for `n = 0..levels` (boxes `[0, 2^n)^2` in Z^2).
    pub fn dyadic(levels: u32, dim: u8) -> Result<Self> {
        if levels == 0 || levels > 62 {
            return Err(Error::invalid("dyadic family needs 1..=62 levels"));
        }
        let windows = (0..levels)
            .map(|n| match dim {
                1 => Window::interval(0, 1 << n),
                2 => Window::square((0, 0), 1 << n),
                _ => Err(Error::invalid("group dimension must be 1 or 2")),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_windows(windows)
    }

    /// Intervals `[0, base^n)` for `n = 0..levels`.
    pub fn geometric(base: u64, levels: u32) -> Result<Self> {
        if base < 2 {
            return Err(Error::invalid("geometric family needs base >= 2"));
        }
        let mut len = 1u64;
        let mut windows = Vec::with_capacity(levels as usize);
        for _ in 0..levels {
            windows.push(Window::interval(0, len)?);
            len = len
                .checked_mul(base)
                .ok_or_else(|| Error::invalid("geometric family overflows u64"))?;
        }
        Self::from_windows(windows)
    }

    pub fn dim(&self) -> u8 {
        self.windows[0].dim()
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn window(&self, n: usize) -> Result<&Window> {
        self.windows.get(n).ok_or_else(|| {
            Error::invalid(format!(
                "family has {} windows, index {n} requested",
                self.windows.len()
            ))
        })
    }

    pub fn windows(&self) -> &[Window] {
        &self.windows
    }

    /// The family `F_n + s`.
    pub fn translate(&self, s: GroupElement) -> FoelnerFamily {
        FoelnerFamily {
            windows: self.windows.iter().map(|w| w.translate(s)).collect(),
        }
    }
}

/// `F_n = [starts_n, starts_n + lengths_n)`.
pub fn make_interval_foelner(lengths: &[i64], starts: &[i64]) -> Result<FoelnerFamily> {
    if lengths.is_empty() {
        return Err(Error::invalid("lengths must be nonempty"));
    }
    if lengths.len() != starts.len() {
        return Err(Error::invalid(format!(
            "{} lengths but {} starts",
            lengths.len(),
            starts.len()
        )));
    }
    let windows = lengths
        .iter()
        .zip(starts)
        .map(|(&len, &start)| {
            if len < 1 {
                return Err(Error::invalid(format!("window length {len} is not positive")));
            }
            Window::interval(start, len as u64)
        })
        .collect::<Result<Vec<_>>>()?;
    FoelnerFamily::from_windows(windows)
}

pub fn translate_foelner(family: &FoelnerFamily, s: GroupElement) -> FoelnerFamily {
    family.translate(s)
}

/// A closed range `[n_min, n_max]` of family indices over which limsup and
/// liminf are truncated to max and min.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tail {
    pub n_min: usize,
    pub n_max: usize,
}

impl Tail {
    pub fn new(n_min: usize, n_max: usize) -> Result<Self> {
        if n_min > n_max {
            return Err(Error::invalid(format!("empty tail [{n_min}, {n_max}]")));
        }
        Ok(Tail { n_min, n_max })
    }

    pub fn single(n: usize) -> Self {
        Tail { n_min: n, n_max: n }
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.n_min..=self.n_max
    }

    pub fn check(&self, family: &FoelnerFamily) -> Result<()> {
        if self.n_max >= family.len() {
            return Err(Error::invalid(format!(
                "tail reaches index {} but the family has {} windows",
                self.n_max,
                family.len()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn set_defect(window: &Window, g: &GroupElement) -> Ratio<u64> {
        let f: BTreeSet<_> = window.elements().collect();
        let gf: BTreeSet<_> = window.elements().map(|t| t + *g).collect();
        let sym = f.symmetric_difference(&gf).count() as u64;
        Ratio::new(sym, f.len() as u64)
    }

    #[test]
    fn interval_family_construction() {
        let fam = make_interval_foelner(&[1, 2, 4], &[0, 0, 0]).unwrap();
        let f2: Vec<_> = fam.window(2).unwrap().elements().collect();
        assert_eq!(f2, (0..4).map(GroupElement::z).collect::<Vec<_>>());

        let fam = make_interval_foelner(&[10], &[5]).unwrap();
        let w = fam.window(0).unwrap();
        assert_eq!(w.len(), 10);
        assert_eq!(
            w.elements().collect::<Vec<_>>(),
            (5..15).map(GroupElement::z).collect::<Vec<_>>()
        );
    }

    #[test]
    fn rejects_nonpositive_lengths() {
        assert!(matches!(
            make_interval_foelner(&[1, 0], &[0, 0]),
            Err(Error::InvalidParameter(_))
        ));
        assert!(make_interval_foelner(&[-3], &[0]).is_err());
        assert!(make_interval_foelner(&[], &[]).is_err());
    }

    #[test]
    fn dyadic_lengths_double() {
        let fam = FoelnerFamily::dyadic(12, 1).unwrap();
        for w in fam.windows().windows(2) {
            assert_eq!(w[1].len(), 2 * w[0].len());
        }
    }

    #[test]
    fn defect_examples() {
        let w = Window::interval(0, 10).unwrap();
        assert_eq!(foelner_defect(&w, &GroupElement::z(1)).unwrap(), Ratio::new(2, 10));
        assert_eq!(foelner_defect(&w, &GroupElement::z(0)).unwrap(), Ratio::new(0, 1));
        assert_eq!(foelner_defect(&w, &GroupElement::z(25)).unwrap(), Ratio::new(2, 1));
    }

    #[test]
    fn dyadic_defect_matches_set_arithmetic_and_decays() {
        let fam = FoelnerFamily::dyadic(21, 1).unwrap();
        let g = GroupElement::z(1);
        let mut previous = Ratio::new(2u64, 1);
        for n in 1..=20usize {
            let w = fam.window(n).unwrap();
            let d = foelner_defect(w, &g).unwrap();
            if n <= 12 {
                assert_eq!(d, set_defect(w, &g));
            }
            assert_eq!(d, Ratio::new(2, 1u64 << n));
            assert!(d < previous);
            previous = d;
        }
    }

    #[test]
    fn box_defect_matches_set_arithmetic() {
        let w = Window::square((-2, 3), 6).unwrap();
        for g in [GroupElement::z2(1, 0), GroupElement::z2(2, -3), GroupElement::z2(7, 1)] {
            assert_eq!(foelner_defect(&w, &g).unwrap(), set_defect(&w, &g));
        }
    }

    #[test]
    fn translation_keeps_defect_and_inverts() {
        let fam = FoelnerFamily::dyadic(8, 1).unwrap();
        let s = GroupElement::z(5);
        let moved = translate_foelner(&fam, s);
        assert_eq!(moved.window(3).unwrap().as_interval(), Some((5, 8)));
        for (a, b) in fam.windows().iter().zip(moved.windows()) {
            assert_eq!(a.len(), b.len());
            for g in -3..=3 {
                let g = GroupElement::z(g);
                assert_eq!(foelner_defect(a, &g).unwrap(), foelner_defect(b, &g).unwrap());
            }
        }
        assert_eq!(moved.translate(-s), fam);
    }

    #[test]
    fn group_laws() {
        let a = GroupElement::z2(3, -4);
        let b = GroupElement::z2(-7, 2);
        let c = GroupElement::z2(11, 5);
        assert_eq!((a + b) + c, a + (b + c));
        assert_eq!(a + GroupElement::zero(2), a);
        assert!((a + (-a)).is_zero());
    }

    #[test]
    fn mixed_dimensions_rejected() {
        let w = Window::interval(0, 4).unwrap();
        assert!(foelner_defect(&w, &GroupElement::z2(1, 1)).is_err());
    }
}
