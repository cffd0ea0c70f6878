//! Elements of the topological full group of the dyadic odometer that are
//! locally integer translations on depth-`n` cylinders.
//!
//! Adding an integer maps a depth-`n` cylinder onto a depth-`n` cylinder,
//! so an element is a bijection exactly when `c -> c + t_c (mod 2^n)`
//! permutes the residues.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::FactorMap;
use crate::point::{odometer_metric, pow2_neg, OdometerPoint, Point};

pub const MAX_DEPTH: u32 = 20;

/// `theta -> theta + translations[theta mod 2^depth]`, stored at the
/// smallest depth that represents it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FullGroupElement {
    depth: u32,
    translations: Vec<i64>,
}

impl FullGroupElement {
    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Translation on the cylinder of residue `c` mod `2^depth`.
    pub fn translations(&self) -> &[i64] {
        &self.translations
    }

    pub fn translation_at(&self, residue: u64) -> i64 {
        self.translations[(residue & ((1u64 << self.depth) - 1)) as usize]
    }

    /// The odometer map `theta -> theta + t`.
    pub fn translation(t: i64) -> Self {
        FullGroupElement {
            depth: 0,
            translations: vec![t],
        }
    }

    pub fn identity() -> Self {
        Self::translation(0)
    }

    /// The element that adds 2 on `1*` and fixes `0*`.
    pub fn add_two_on_odd() -> Self {
        make_element(1, &[0, 2]).expect("valid element")
    }

    /// Translations indexed by the residue at a larger depth.
    fn refined(&self, depth: u32) -> Vec<i64> {
        (0..1u64 << depth).map(|c| self.translation_at(c)).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.depth == 0 && self.translations[0] == 0
    }
}

/// Merges cylinder pairs `c`, `c + 2^(n-1)` with equal translations.
fn minimize(mut depth: u32, mut t: Vec<i64>) -> FullGroupElement {
    while depth > 0 {
        let half = 1usize << (depth - 1);
        if (0..half).any(|c| t[c] != t[c + half]) {
            break;
        }
        t.truncate(half);
        depth -= 1;
    }
    FullGroupElement {
        depth,
        translations: t,
    }
}

fn bit_length(v: u64) -> u32 {
    64 - v.leading_zeros()
}

/// Refinement depth `depth + bitlen(max |t|) + 2` at which bijectivity is
/// also checked; it agrees with the check at `depth`.
pub fn refinement_depth(depth: u32, translations: &[i64]) -> u32 {
    let max = translations.iter().map(|t| t.unsigned_abs()).max().unwrap_or(0);
    depth + bit_length(max) + 2
}

fn is_permutation(depth: u32, t: &[i64]) -> bool {
    let m = 1u64 << depth;
    let mut hit = vec![false; m as usize];
    for c in 0..m {
        let image = (c as i64).wrapping_add(t[c as usize]) as u64 & (m - 1);
        if std::mem::replace(&mut hit[image as usize], true) {
            return false;
        }
    }
    true
}

pub fn make_element(depth: u32, translations: &[i64]) -> Result<FullGroupElement> {
    if depth > MAX_DEPTH {
        return Err(Error::invalid(format!("cylinder depth {depth} exceeds {MAX_DEPTH}")));
    }
    if translations.len() != 1 << depth {
        return Err(Error::InvalidElement(format!(
            "depth {depth} needs {} translations, got {}",
            1u64 << depth,
            translations.len()
        )));
    }
    if !is_permutation(depth, translations) {
        return Err(Error::InvalidElement(format!(
            "cylinder images do not tile the odometer: {:?}",
            translations
        )));
    }
    Ok(minimize(depth, translations.to_vec()))
}

pub fn apply_element(e: &FullGroupElement, theta: &OdometerPoint) -> Result<OdometerPoint> {
    if e.depth > 64 {
        return Err(Error::invalid("element depth exceeds 64 digits"));
    }
    let r = theta.residue(e.depth)?;
    Ok(theta.add_integer(e.translation_at(r)))
}

/// `e1 after e2`.
pub fn compose(e1: &FullGroupElement, e2: &FullGroupElement) -> Result<FullGroupElement> {
    let depth = e1.depth.max(e2.depth);
    let t2 = e2.refined(depth);
    let t: Vec<i64> = (0..1u64 << depth)
        .map(|c| {
            let mid = (c as i64).wrapping_add(t2[c as usize]) as u64;
            t2[c as usize]
                .checked_add(e1.translation_at(mid))
                .ok_or_else(|| Error::invalid("composed translation overflows"))
        })
        .collect::<Result<_>>()?;
    Ok(minimize(depth, t))
}

/// The image of cylinder `c` is the cylinder `c + t_c`, translated back.
pub fn inverse(e: &FullGroupElement) -> Result<FullGroupElement> {
    let m = 1u64 << e.depth;
    let mut t = vec![0i64; m as usize];
    for c in 0..m {
        let tc = e.translations[c as usize];
        let image = (c as i64).wrapping_add(tc) as u64 & (m - 1);
        t[image as usize] = tc.checked_neg().ok_or_else(|| Error::invalid("translation overflows"))?;
    }
    Ok(minimize(e.depth, t))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsometryReport {
    pub isometric: bool,
    pub max_distortion: f64,
    pub pairs: usize,
}

/// `max |d(e a, e b) - d(a, b)|` over the pairs, odometer metric at `depth`.
pub fn isometry_check(e: &FullGroupElement, pairs: &[(OdometerPoint, OdometerPoint)], depth: u32) -> Result<IsometryReport> {
    let mut max: f64 = 0.0;
    for (a, b) in pairs {
        let before = odometer_metric(a, b, depth)?.value;
        let after = odometer_metric(&apply_element(e, a)?, &apply_element(e, b)?, depth)?.value;
        max = max.max((after - before).abs());
    }
    Ok(IsometryReport {
        isometric: max == 0.0,
        max_distortion: max,
        pairs: pairs.len(),
    })
}

/// `e x = sigma^{t(h(x))} x` for a factor `h` onto the odometer.
pub fn act_on_extension(e: &FullGroupElement, x: &Point, factor: &dyn FactorMap) -> Result<Point> {
    let needed = pow2_neg(e.depth as u64);
    if factor.resolution() > needed {
        return Err(Error::ResolutionTooCoarse {
            resolution: factor.resolution(),
            tolerance: needed,
        });
    }
    let h = factor.apply(x)?.point;
    let t = e.translation_at(h.as_odometer()?.residue(e.depth)?);
    Ok(Point::Symbolic(x.as_symbolic()?.shift(t)))
}

impl fmt::Display for FullGroupElement {
    /// `depth:n;c=t,...` with each cylinder written as digits
    /// `theta_0 theta_1 ...`, or `*` at depth 0.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "depth:{};", self.depth)?;
        for (c, t) in self.translations.iter().enumerate() {
            if c > 0 {
                f.write_str(",")?;
            }
            if self.depth == 0 {
                f.write_str("*")?;
            }
            for i in 0..self.depth {
                write!(f, "{}", (c >> i) & 1)?;
            }
            write!(f, "={t}")?;
        }
        Ok(())
    }
}

impl FromStr for FullGroupElement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::invalid(format!("element literal {s:?}: {why}"));
        let (head, body) = s.trim().split_once(';').ok_or_else(|| bad("expected depth:n;cyl=trans,..."))?;
        let depth: u32 = head
            .trim()
            .strip_prefix("depth:")
            .ok_or_else(|| bad("missing depth:"))?
            .trim()
            .parse()
            .map_err(|_| bad("depth is not an integer"))?;
        if depth > MAX_DEPTH {
            return Err(bad("depth too large"));
        }
        let mut t: Vec<Option<i64>> = vec![None; 1 << depth];
        for entry in body.split(',').map(str::trim).filter(|e| !e.is_empty()) {
            let (cyl, trans) = entry.split_once('=').ok_or_else(|| bad("entry without '='"))?;
            let cyl = cyl.trim();
            let trans: i64 = trans.trim().trim_start_matches('+').parse().map_err(|_| bad("bad translation"))?;
            let c = if cyl == "*" && depth == 0 {
                0
            } else {
                if cyl.len() != depth as usize || !cyl.bytes().all(|b| b == b'0' || b == b'1') {
                    return Err(bad("cylinder must be a binary word of length depth"));
                }
                cyl.bytes().enumerate().fold(0usize, |r, (i, b)| r | (((b - b'0') as usize) << i))
            };
            if t[c].replace(trans).is_some() {
                return Err(bad("cylinder listed twice"));
            }
        }
        let t: Vec<i64> = t
            .into_iter()
            .collect::<Option<_>>()
            .ok_or_else(|| bad("every cylinder needs a translation"))?;
        make_element(depth, &t)
    }
}

pub fn parse_element(s: &str) -> Result<FullGroupElement> {
    s.parse()
}
