//! Sturmian codings of an irrational rotation: `x_n = 1` iff
//! `{theta + n*alpha}` lies in the half-open arc `[0, alpha)`.

use std::any::Any;

use crate::error::{Error, Result};
use crate::point::{CirclePoint, RotationNumber, Symbol, SymbolSource, SymbolicPoint};

/// Which endpoint of the coding arc is closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcCoding {
    /// `[0, alpha)`, raising boundary ambiguity near either endpoint.
    Guarded,
    /// `[0, alpha)` with no guard; for exactly known phases.
    Lower,
    /// `(0, alpha]` with no guard; the other point of a doubled fiber.
    Upper,
}

#[derive(Debug, Clone)]
pub struct SturmianSource {
    alpha: RotationNumber,
    theta: CirclePoint,
    coding: ArcCoding,
}

impl SturmianSource {
    pub fn new(alpha: RotationNumber, theta: CirclePoint, coding: ArcCoding) -> Result<Self> {
        if alpha.phase.0 == 0 {
            return Err(Error::invalid("rotation number must be nonzero mod 1"));
        }
        Ok(SturmianSource {
            alpha,
            theta,
            coding,
        })
    }

    pub fn alpha(&self) -> &RotationNumber {
        &self.alpha
    }

    pub fn theta(&self) -> CirclePoint {
        self.theta
    }

    pub fn coding(&self) -> ArcCoding {
        self.coding
    }

    /// `{theta + n*alpha}` at storage precision.
    #[inline]
    pub fn phase(&self, n: i64) -> CirclePoint {
        self.theta + self.alpha.phase.times(n)
    }
}

impl SymbolSource for SturmianSource {
    fn alphabet_size(&self) -> u8 {
        2
    }

    #[inline]
    fn symbol(&self, n: i64) -> Result<Symbol> {
        let phase = self.phase(n);
        let a = self.alpha.phase;
        match self.coding {
            ArcCoding::Guarded => {
                let eps = self.alpha.orbit_error_units(n);
                if phase.raw_distance(CirclePoint(0)) <= eps || phase.raw_distance(a) <= eps {
                    return Err(Error::BoundaryAmbiguity {
                        index: n,
                        epsilon: eps as f64 / 2f64.powi(64),
                    });
                }
                Ok((phase.0 < a.0) as Symbol)
            }
            ArcCoding::Lower => Ok((phase.0 < a.0) as Symbol),
            ArcCoding::Upper => Ok((phase.0 > 0 && phase.0 <= a.0) as Symbol),
        }
    }

    fn describe(&self) -> String {
        format!(
            "sturmian(alpha={}, theta={:.17})",
            self.alpha.label,
            self.theta.phase()
        )
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// The guarded coding of `theta` under rotation by `alpha`.
pub fn sturmian_point(alpha: &RotationNumber, theta: CirclePoint) -> Result<SymbolicPoint> {
    Ok(SymbolicPoint::from_source(SturmianSource::new(
        alpha.clone(),
        theta,
        ArcCoding::Guarded,
    )?))
}

pub fn sturmian_point_with(
    alpha: &RotationNumber,
    theta: CirclePoint,
    coding: ArcCoding,
) -> Result<SymbolicPoint> {
    Ok(SymbolicPoint::from_source(SturmianSource::new(
        alpha.clone(),
        theta,
        coding,
    )?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> RotationNumber {
        RotationNumber::golden_default()
    }

    #[test]
    fn first_symbols_by_direct_phase() {
        let x = sturmian_point(&golden(), CirclePoint::from_f64(0.1)).unwrap();
        // oracle: plain floating point phases
        let a = (5f64.sqrt() - 1.0) / 2.0;
        for n in -50i64..50 {
            let p = (0.1 + n as f64 * a).rem_euclid(1.0);
            assert_eq!(x.symbol(n).unwrap(), (p < a) as u8, "n = {n}");
        }
        assert_eq!(x.word(0, 2).unwrap(), vec![1, 0, 1]);
    }

    #[test]
    fn frequency_matches_mechanical_word_count() {
        let alpha = golden();
        let theta = 0.1;
        let x = sturmian_point(&alpha, CirclePoint::from_f64(theta)).unwrap();
        let n = 1_000_000i64;
        let ones = (0..n).filter(|&k| x.symbol(k).unwrap() == 1).count() as i64;
        // telescoping floor count for the arc [0, alpha)
        let a = alpha.value();
        let rho = theta + 1.0 - a;
        let oracle = ((n as f64) * a + rho).floor() as i64 - rho.floor() as i64;
        assert!((ones - oracle).abs() <= 1, "{ones} vs {oracle}");
        assert!((ones as f64 / n as f64 - a).abs() < 1e-4);
    }

    #[test]
    fn boundary_orbit_is_ambiguous() {
        let alpha = golden();
        let x = sturmian_point(&alpha, CirclePoint(0)).unwrap();
        assert!(matches!(x.symbol(0), Err(Error::BoundaryAmbiguity { index: 0, .. })));
        // theta = -3 alpha puts index 3 on the endpoint 0
        let x = sturmian_point(&alpha, alpha.phase.times(-3)).unwrap();
        assert!(x.symbol(2).is_ok());
        assert!(matches!(x.symbol(3), Err(Error::BoundaryAmbiguity { index: 3, .. })));
    }

    #[test]
    fn lower_and_upper_codings_differ_only_at_boundary_hits() {
        let alpha = golden();
        let lo = sturmian_point_with(&alpha, CirclePoint(0), ArcCoding::Lower).unwrap();
        let up = sturmian_point_with(&alpha, CirclePoint(0), ArcCoding::Upper).unwrap();
        let diffs: Vec<i64> = (-1000..1000)
            .filter(|&k| lo.symbol(k).unwrap() != up.symbol(k).unwrap())
            .collect();
        assert_eq!(diffs, vec![0, 1]);
    }
}
