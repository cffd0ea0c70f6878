//! Catalog points and spectral sums against closed-form oracles.

use num_complex::Complex64;

use mequi::ergodic::Observable;
use mequi::spectrum::weyl_sum;
use mequi::systems::catalog::{self, fixed_point, SystemSpec};
use mequi::systems::sturmian_point;
use mequi::{CirclePoint, Point, RotationNumber};

fn ternary_has_one(mut k: u64) -> bool {
    while k > 0 {
        if k % 3 == 1 {
            return true;
        }
        k /= 3;
    }
    false
}

#[test]
fn thue_morse_is_popcount_parity_with_complemented_reflection() {
    let x = fixed_point("thue-morse").unwrap();
    for k in 0..5000u64 {
        let t = (k.count_ones() & 1) as u8;
        assert_eq!(x.symbol(k as i64).unwrap(), t, "k = {k}");
        assert_eq!(x.symbol(-1 - k as i64).unwrap(), 1 - t, "k = -1-{k}");
    }
}

#[test]
fn period_doubling_is_two_adic_valuation_parity() {
    let x = fixed_point("period-doubling").unwrap();
    for k in 0..5000u64 {
        assert_eq!(x.symbol(k as i64).unwrap(), ((k + 1).trailing_zeros() & 1) as u8, "k = {k}");
    }
}

#[test]
fn cantor_substitution_marks_the_middle_third_digits() {
    let x = fixed_point("cantor-substitution").unwrap();
    for k in 0..6561u64 {
        assert_eq!(x.symbol(k as i64).unwrap(), ternary_has_one(k) as u8, "k = {k}");
    }
    for k in 1..200 {
        assert_eq!(x.symbol(-k).unwrap(), 1);
    }
}

#[test]
fn sturmian_coding_matches_floating_rotation_away_from_endpoints() {
    let alpha = RotationNumber::golden_default();
    let a = (5f64.sqrt() - 1.0) / 2.0;
    let theta = 0.3141592653589793;
    let x = sturmian_point(&alpha, CirclePoint::from_f64(theta)).unwrap();
    let mut checked = 0;
    for k in -3000i64..3000 {
        let phase = (theta + k as f64 * a).rem_euclid(1.0);
        if phase.min((phase - a).abs()).min(1.0 - phase) < 1e-9 {
            continue;
        }
        assert_eq!(x.symbol(k).unwrap(), (phase < a) as u8, "k = {k}");
        checked += 1;
    }
    assert!(checked > 5900);
}

#[test]
fn weyl_sums_match_direct_summation() {
    let sys = catalog::build(&SystemSpec::new("period-doubling")).unwrap();
    let x = fixed_point("period-doubling").unwrap();
    let n = 4096u64;
    for alpha in [0.0, 0.25, 0.5, 1.0 / 3.0, 0.123456789] {
        let direct: Complex64 = (0..n)
            .map(|k| {
                let sign = if x.symbol(k as i64).unwrap() == 0 { 1.0 } else { -1.0 };
                Complex64::from_polar(sign, -2.0 * std::f64::consts::PI * alpha * k as f64)
            })
            .sum::<Complex64>()
            / n as f64;
        let s = weyl_sum(sys.as_ref(), &Observable::sign(), &Point::Symbolic(x.clone()), alpha, n).unwrap();
        let value = Complex64::from_polar(s.modulus, s.phase);
        assert!((value - direct).norm() < 1e-12, "alpha = {alpha}: {value} vs {direct}");
    }
}
