//! Example systems, each exposed as a [`SystemHandle`]: an action, a
//! compatible metric and a seeded point sampler.

pub mod catalog;
pub mod substitution;
pub mod sturmian;
pub mod toeplitz;

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::point::{
    cantor_metric, circle_metric, complement, odometer_metric, CirclePoint, Distance,
    OdometerPoint, Periodic, Point, RotationNumber, SymbolicPoint,
};
use crate::rng;

pub use substitution::{substitution_fixed_point, SubstitutionRule, TwoSidedExtension};
pub use sturmian::{sturmian_point, sturmian_point_with, ArcCoding};
pub use toeplitz::{toeplitz_point, toeplitz_point_from_residues, BitStream, BitTail, ToeplitzParams};

/// A topological dynamical system `(X, G)` with `G = Z` or `Z^2`.
pub trait System: Send + Sync {
    fn label(&self) -> &str;

    fn group_dim(&self) -> u8 {
        1
    }

    /// `g . p`.
    fn act(&self, g: &GroupElement, p: &Point) -> Result<Point>;

    /// The system metric, resolving symbolic comparisons up to `horizon`.
    fn distance(&self, p: &Point, q: &Point, horizon: u64) -> Result<Distance>;

    /// A point drawn deterministically from `seed`.
    fn sample(&self, seed: u64) -> Result<Point>;

    /// Whether the system acts on symbolic points by the shift, enabling
    /// coordinate-level fast paths.
    fn is_shift(&self) -> bool {
        false
    }
}

pub type SystemHandle = Arc<dyn System>;

impl fmt::Debug for dyn System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "System({})", self.label())
    }
}

/// `n . p` for Z-actions.
pub fn act_z(sys: &dyn System, n: i64, p: &Point) -> Result<Point> {
    sys.act(&GroupElement::z(n), p)
}

fn z_of(sys: &dyn System, g: &GroupElement) -> Result<i64> {
    g.as_z()
        .map_err(|_| Error::Mismatch(format!("{} is a Z-action, got element {g}", sys.label())))
}

/// A subshift of `A^Z` under the left shift, sampled as shifted copies of a
/// few base points.
pub struct SubshiftSystem {
    label: String,
    base_points: Vec<SymbolicPoint>,
    shift_range: i64,
}

impl SubshiftSystem {
    pub fn new(label: &str, base_points: Vec<SymbolicPoint>, shift_range: i64) -> Result<Self> {
        if base_points.is_empty() {
            return Err(Error::invalid("a subshift sampler needs at least one base point"));
        }
        Ok(SubshiftSystem {
            label: label.to_string(),
            base_points,
            shift_range: shift_range.max(0),
        })
    }

    pub fn base_points(&self) -> &[SymbolicPoint] {
        &self.base_points
    }
}

impl System for SubshiftSystem {
    fn label(&self) -> &str {
        &self.label
    }

    fn act(&self, g: &GroupElement, p: &Point) -> Result<Point> {
        let n = z_of(self, g)?;
        Ok(Point::Symbolic(p.as_symbolic()?.shift(n)))
    }

    fn distance(&self, p: &Point, q: &Point, horizon: u64) -> Result<Distance> {
        cantor_metric(p.as_symbolic()?, q.as_symbolic()?, horizon)
    }

    fn sample(&self, seed: u64) -> Result<Point> {
        let mut r = rng::rng(seed);
        let base = &self.base_points[r.gen_range(0..self.base_points.len())];
        let s = if self.shift_range > 0 {
            r.gen_range(-self.shift_range..=self.shift_range)
        } else {
            0
        };
        Ok(Point::Symbolic(base.shift(s)))
    }

    fn is_shift(&self) -> bool {
        true
    }
}

/// The shift on the subshift generated by a substitution fixed point.
///
/// Samples are shifted copies of the two-sided fixed point; the Cantor rule
/// also samples the constant-1 point and binary primitive rules also sample
/// the complement of the fixed point.
pub fn subshift_system(
    label: &str,
    rule: &SubstitutionRule,
    seed_symbol: u8,
    extension: TwoSidedExtension,
    shift_range: i64,
) -> Result<SystemHandle> {
    let fixed = substitution_fixed_point(rule, seed_symbol, extension)?;
    let mut base = vec![fixed.clone()];
    if !rule.is_primitive() {
        for a in 0..rule.alphabet_size() {
            if rule.image(a).iter().all(|&b| b == a) {
                base.push(SymbolicPoint::from_source(Periodic::constant(rule.alphabet_size(), a)?));
            }
        }
    } else if rule.alphabet_size() == 2 && is_complement_closed(rule) {
        base.push(complement(&fixed));
    }
    Ok(Arc::new(SubshiftSystem::new(label, base, shift_range)?))
}

/// Binary rules that commute with the letter swap (Thue-Morse) generate
/// complement-closed subshifts.
fn is_complement_closed(rule: &SubstitutionRule) -> bool {
    let swap = |w: &[u8]| w.iter().map(|&b| 1 - b).collect::<Vec<_>>();
    swap(rule.image(0)) == rule.image(1)
}

/// The Sturmian subshift for `alpha`, sampled at guarded codings of uniform phases.
pub struct SturmianSystem {
    alpha: RotationNumber,
}

impl SturmianSystem {
    pub fn new(alpha: RotationNumber) -> Self {
        SturmianSystem { alpha }
    }

    pub fn alpha(&self) -> &RotationNumber {
        &self.alpha
    }
}

impl System for SturmianSystem {
    fn label(&self) -> &str {
        "sturmian"
    }

    fn act(&self, g: &GroupElement, p: &Point) -> Result<Point> {
        let n = z_of(self, g)?;
        Ok(Point::Symbolic(p.as_symbolic()?.shift(n)))
    }

    fn distance(&self, p: &Point, q: &Point, horizon: u64) -> Result<Distance> {
        cantor_metric(p.as_symbolic()?, q.as_symbolic()?, horizon)
    }

    fn sample(&self, seed: u64) -> Result<Point> {
        let theta = CirclePoint(rng::rng(seed).gen());
        Ok(Point::Symbolic(sturmian_point(&self.alpha, theta)?))
    }

    fn is_shift(&self) -> bool {
        true
    }
}

/// The closure of the Toeplitz family with one hole per dyadic level,
/// sampled at members with pseudo-random hole paths and fills.
pub struct ToeplitzSystem;

impl System for ToeplitzSystem {
    fn label(&self) -> &str {
        "toeplitz-ex5"
    }

    fn act(&self, g: &GroupElement, p: &Point) -> Result<Point> {
        let n = z_of(self, g)?;
        Ok(Point::Symbolic(p.as_symbolic()?.shift(n)))
    }

    fn distance(&self, p: &Point, q: &Point, horizon: u64) -> Result<Distance> {
        cantor_metric(p.as_symbolic()?, q.as_symbolic()?, horizon)
    }

    fn sample(&self, seed: u64) -> Result<Point> {
        let params = ToeplitzParams {
            hole: BitStream::new(Vec::new(), BitTail::Hashed(rng::derive(seed, 0))),
            fills: BitStream::new(Vec::new(), BitTail::Hashed(rng::derive(seed, 1))),
            limit_value: None,
        };
        Ok(Point::Symbolic(toeplitz_point(params)))
    }

    fn is_shift(&self) -> bool {
        true
    }
}

/// The dyadic odometer: `n` acts by `theta -> theta + n`.
pub struct OdometerSystem {
    sample_depth: u32,
}

impl OdometerSystem {
    pub fn new(sample_depth: u32) -> Self {
        OdometerSystem { sample_depth }
    }
}

impl System for OdometerSystem {
    fn label(&self) -> &str {
        "odometer"
    }

    fn act(&self, g: &GroupElement, p: &Point) -> Result<Point> {
        let n = z_of(self, g)?;
        Ok(Point::Odometer(p.as_odometer()?.add_integer(n)))
    }

    /// Digit metric to `min(horizon, resolved depth)`; agreement beyond the
    /// resolved digits is reported flagged at the resolved depth.
    fn distance(&self, p: &Point, q: &Point, horizon: u64) -> Result<Distance> {
        let (a, b) = (p.as_odometer()?, q.as_odometer()?);
        let resolved = |o: &OdometerPoint| if o.is_integer() { u32::MAX } else { o.depth() };
        let depth = (horizon.min(u32::MAX as u64) as u32)
            .min(resolved(a))
            .min(resolved(b));
        odometer_metric(a, b, depth)
    }

    fn sample(&self, seed: u64) -> Result<Point> {
        Ok(Point::Odometer(OdometerPoint::random(self.sample_depth, seed)))
    }
}

pub fn odometer_system() -> SystemHandle {
    Arc::new(OdometerSystem::new(128))
}

/// Rotation `theta -> theta + alpha` on the circle.
pub struct RotationSystem {
    alpha: RotationNumber,
}

impl RotationSystem {
    pub fn new(alpha: RotationNumber) -> Self {
        RotationSystem { alpha }
    }

    pub fn alpha(&self) -> &RotationNumber {
        &self.alpha
    }
}

impl System for RotationSystem {
    fn label(&self) -> &str {
        "rotation"
    }

    fn act(&self, g: &GroupElement, p: &Point) -> Result<Point> {
        let n = z_of(self, g)?;
        Ok(Point::Circle(p.as_circle()? + self.alpha.phase.times(n)))
    }

    fn distance(&self, p: &Point, q: &Point, _horizon: u64) -> Result<Distance> {
        Ok(Distance::exact(circle_metric(p.as_circle()?, q.as_circle()?)))
    }

    fn sample(&self, seed: u64) -> Result<Point> {
        Ok(Point::Circle(CirclePoint(rng::rng(seed).gen())))
    }
}

/// Commuting rotations of the circle by `alpha` and `beta`: a Z^2-action.
pub struct RotationZ2System {
    alpha: RotationNumber,
    beta: RotationNumber,
}

impl RotationZ2System {
    pub fn new(alpha: RotationNumber, beta: RotationNumber) -> Self {
        RotationZ2System { alpha, beta }
    }
}

impl System for RotationZ2System {
    fn label(&self) -> &str {
        "rotation-z2"
    }

    fn group_dim(&self) -> u8 {
        2
    }

    fn act(&self, g: &GroupElement, p: &Point) -> Result<Point> {
        let [a, b] = match g.coords() {
            &[a, b] => [a, b],
            _ => return Err(Error::Mismatch(format!("rotation-z2 needs a Z^2 element, got {g}"))),
        };
        let shift = self.alpha.phase.times(a) + self.beta.phase.times(b);
        Ok(Point::Circle(p.as_circle()? + shift))
    }

    fn distance(&self, p: &Point, q: &Point, _horizon: u64) -> Result<Distance> {
        Ok(Distance::exact(circle_metric(p.as_circle()?, q.as_circle()?)))
    }

    fn sample(&self, seed: u64) -> Result<Point> {
        Ok(Point::Circle(CirclePoint(rng::rng(seed).gen())))
    }
}

/// `F(x, theta) = (x, theta + x)` on `C x S^1`, with `C` a finite sample of
/// base phases. Points are `Product(Circle(x), Circle(theta))`.
pub struct SkewProductSystem {
    base: Vec<CirclePoint>,
}

impl SkewProductSystem {
    pub fn new(base: Vec<CirclePoint>) -> Result<Self> {
        if base.is_empty() {
            return Err(Error::invalid("skew product needs at least one base point"));
        }
        Ok(SkewProductSystem { base })
    }

    pub fn point(x: CirclePoint, theta: CirclePoint) -> Point {
        Point::product(Point::Circle(x), Point::Circle(theta))
    }
}

impl System for SkewProductSystem {
    fn label(&self) -> &str {
        "skew-product"
    }

    fn act(&self, g: &GroupElement, p: &Point) -> Result<Point> {
        let n = z_of(self, g)?;
        let (x, theta) = p.as_product()?;
        let x = x.as_circle()?;
        Ok(Self::point(x, theta.as_circle()? + x.times(n)))
    }

    fn distance(&self, p: &Point, q: &Point, _horizon: u64) -> Result<Distance> {
        let (px, pt) = p.as_product()?;
        let (qx, qt) = q.as_product()?;
        let d = circle_metric(px.as_circle()?, qx.as_circle()?)
            .max(circle_metric(pt.as_circle()?, qt.as_circle()?));
        Ok(Distance::exact(d))
    }

    fn sample(&self, seed: u64) -> Result<Point> {
        let mut r = rng::rng(seed);
        let x = self.base[r.gen_range(0..self.base.len())];
        Ok(Self::point(x, CirclePoint(r.gen())))
    }
}

pub fn skew_product_system(base_points: Vec<CirclePoint>) -> Result<SystemHandle> {
    Ok(Arc::new(SkewProductSystem::new(base_points)?))
}

/// The diagonal action `g(x, y) = (gx, gy)` on `X x Y` with the max metric.
pub struct ProductSystem {
    label: String,
    left: SystemHandle,
    right: SystemHandle,
}

impl ProductSystem {
    pub fn components(&self) -> (&SystemHandle, &SystemHandle) {
        (&self.left, &self.right)
    }
}

impl System for ProductSystem {
    fn label(&self) -> &str {
        &self.label
    }

    fn group_dim(&self) -> u8 {
        self.left.group_dim()
    }

    fn act(&self, g: &GroupElement, p: &Point) -> Result<Point> {
        let (a, b) = p.as_product()?;
        Ok(Point::product(self.left.act(g, a)?, self.right.act(g, b)?))
    }

    fn distance(&self, p: &Point, q: &Point, horizon: u64) -> Result<Distance> {
        let (pa, pb) = p.as_product()?;
        let (qa, qb) = q.as_product()?;
        let da = self.left.distance(pa, qa, horizon)?;
        let db = self.right.distance(pb, qb, horizon)?;
        Ok(Distance {
            value: da.value.max(db.value),
            flagged: da.flagged || db.flagged,
        })
    }

    fn sample(&self, seed: u64) -> Result<Point> {
        Ok(Point::product(
            self.left.sample(rng::derive(seed, 0))?,
            self.right.sample(rng::derive(seed, 1))?,
        ))
    }
}

pub fn product_system(a: &SystemHandle, b: &SystemHandle) -> Result<SystemHandle> {
    if a.group_dim() != b.group_dim() {
        return Err(Error::Mismatch(format!(
            "cannot pair a dimension-{} action with a dimension-{} action",
            a.group_dim(),
            b.group_dim()
        )));
    }
    Ok(Arc::new(ProductSystem {
        label: format!("{}x{}", a.label(), b.label()),
        left: Arc::clone(a),
        right: Arc::clone(b),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(p: &Point) -> &SymbolicPoint {
        p.as_symbolic().unwrap()
    }

    #[test]
    fn shift_action_definition_and_inverse() {
        let sys = catalog::thue_morse(1 << 20).unwrap();
        let x = sys.sample(3).unwrap();
        let y = act_z(sys.as_ref(), 1, &x).unwrap();
        for k in -50..50 {
            assert_eq!(sym(&y).symbol(k).unwrap(), sym(&x).symbol(k + 1).unwrap());
        }
        let back = act_z(sys.as_ref(), 3, &act_z(sys.as_ref(), -3, &x).unwrap()).unwrap();
        assert_eq!(sym(&back).word(-64, 64).unwrap(), sym(&x).word(-64, 64).unwrap());
    }

    #[test]
    fn cantor_subshift_contains_constant_one() {
        let sys = catalog::cantor_substitution(1000).unwrap();
        let found = (0..64).any(|s| {
            let p = sys.sample(s).unwrap();
            sym(&p).word(-30, 30).unwrap().iter().all(|&b| b == 1)
        });
        assert!(found);
        // blocks 1^(3^k) occur in the fixed point: the constant point is a limit
        let x = substitution_fixed_point(&SubstitutionRule::cantor(), 0, TwoSidedExtension::OneSided).unwrap();
        for k in 1..8u32 {
            let start = 3i64.pow(k);
            assert!((start..2 * start).all(|j| x.symbol(j).unwrap() == 1));
        }
    }

    #[test]
    fn odometer_carries_and_inverse() {
        let sys = odometer_system();
        let zero = Point::Odometer(OdometerPoint::from_integer(0));
        let one = act_z(sys.as_ref(), 1, &zero).unwrap();
        assert_eq!(one.as_odometer().unwrap().digits(4).unwrap(), vec![1, 0, 0, 0]);
        let seven = Point::Odometer(OdometerPoint::from_integer(7));
        let eight = act_z(sys.as_ref(), 1, &seven).unwrap();
        assert_eq!(eight.as_odometer().unwrap().digits(5).unwrap(), vec![0, 0, 0, 1, 0]);
        let theta = sys.sample(11).unwrap();
        let back = act_z(sys.as_ref(), -1, &act_z(sys.as_ref(), 1, &theta).unwrap()).unwrap();
        assert_eq!(back.as_odometer().unwrap(), theta.as_odometer().unwrap());
    }

    #[test]
    fn skew_product_orbits() {
        let x = RotationNumber::golden_default().phase;
        let sys = skew_product_system(vec![x]).unwrap();
        let p = SkewProductSystem::point(x, CirclePoint(0));
        let q = act_z(sys.as_ref(), 2, &p).unwrap();
        let (qx, qt) = q.as_product().unwrap();
        assert_eq!(qx.as_circle().unwrap(), x);
        assert_eq!(qt.as_circle().unwrap(), x.times(2));
        for n in [-5i64, 17, 1000] {
            let r = act_z(sys.as_ref(), n, &p).unwrap();
            assert_eq!(r.as_product().unwrap().0.as_circle().unwrap(), x);
        }
    }

    #[test]
    fn product_system_acts_diagonally() {
        let a = catalog::thue_morse(1000).unwrap();
        let b = odometer_system();
        let prod = product_system(&a, &b).unwrap();
        let p = prod.sample(5).unwrap();
        let q = act_z(prod.as_ref(), 4, &p).unwrap();
        let (pa, pb) = p.as_product().unwrap();
        let (qa, qb) = q.as_product().unwrap();
        assert_eq!(sym(qa).word(-8, 8).unwrap(), sym(&act_z(a.as_ref(), 4, pa).unwrap()).word(-8, 8).unwrap());
        assert_eq!(qb.as_odometer().unwrap(), act_z(b.as_ref(), 4, pb).unwrap().as_odometer().unwrap());
        let z2 = Arc::new(RotationZ2System::new(RotationNumber::golden_default(), RotationNumber::silver_default())) as SystemHandle;
        assert!(product_system(&a, &z2).is_err());
    }

    #[test]
    fn diagonal_pairs_stay_diagonal() {
        let a = catalog::thue_morse(1000).unwrap();
        let prod = product_system(&a, &a).unwrap();
        let x = a.sample(2).unwrap();
        let p = Point::product(x.clone(), x.clone());
        for n in [-7i64, 0, 9, 300] {
            let q = act_z(prod.as_ref(), n, &p).unwrap();
            let (l, r) = q.as_product().unwrap();
            assert_eq!(sym(l).word(-16, 16).unwrap(), sym(r).word(-16, 16).unwrap());
        }
        let y = a.sample(9).unwrap();
        let d_prod = prod
            .distance(&Point::product(x.clone(), x.clone()), &Point::product(y.clone(), y.clone()), 64)
            .unwrap();
        assert_eq!(d_prod, a.distance(&x, &y, 64).unwrap());
    }

    #[test]
    fn z2_rotation_is_an_action() {
        let sys = RotationZ2System::new(RotationNumber::golden_default(), RotationNumber::silver_default());
        let p = sys.sample(1).unwrap();
        let g = GroupElement::z2(3, -4);
        let h = GroupElement::z2(-10, 7);
        let lhs = sys.act(&(g + h), &p).unwrap().as_circle().unwrap();
        let rhs = sys.act(&g, &sys.act(&h, &p).unwrap()).unwrap().as_circle().unwrap();
        assert_eq!(lhs, rhs);
        assert!(sys.act(&GroupElement::z(1), &p).is_err());
    }
}
