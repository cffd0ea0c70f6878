//! The acceptance criteria, each evaluated with fixed parameters.
//!
//! Every criterion derives its randomness from the run seed and returns a
//! [`Check`]; errors become failing checks.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use mequi::ergodic::{birkhoff_average, unique_ergodicity_test, Observable, Verdict};
use mequi::factor::{fiber_statistics, FactorMap, ThueMorseCode};
use mequi::fullgroup::{apply_element, compose, isometry_check, FullGroupElement};
use mequi::group::make_interval_foelner;
use mequi::mean_equi::{
    besicovitch_pseudometric, dn_pseudometric, hamming_pseudometric, invariance_check, mean_equi_scan,
    product_pointwise_ue_check, shared_skeleton_pair, weyl_pseudometric, Integrand, PseudometricEstimate,
    SturmianFiberSampler, WordSearchSampler,
};
use mequi::point::{cantor_metric, circle_metric, modify, pow2_neg};
use mequi::rng::{derive, rng};
use mequi::spectrum::{eigenvalue_scan, ScanOptions};
use mequi::systems::catalog::{self, fixed_point};
use mequi::systems::toeplitz::uncovered_residues;
use mequi::systems::{
    odometer_system, product_system, skew_product_system, sturmian_point, toeplitz_point, BitStream, BitTail,
    SkewProductSystem, SturmianSystem, ToeplitzParams,
};
use mequi::{CirclePoint, FoelnerFamily, OdometerPoint, Point, Result, RotationNumber, SymbolicPoint, System, Tail};
use rand::Rng;

use crate::config::RunConfig;
use crate::report::{Check, Status};

pub const CRITERIA: u32 = 13;

pub const NAMES: [&str; 13] = [
    "toeplitz closure bound",
    "toeplitz skeleton coverage",
    "cantor substitution density",
    "sturmian disagreement density",
    "sturmian modulus decay",
    "thue-morse non-decay",
    "thue-morse fiber constancy",
    "skew-product discontinuity",
    "weyl invariance",
    "spectrum peaks",
    "full-group witnesses",
    "pseudometric axioms",
    "determinism",
];

/// Parameters the suite reads from the run configuration.
#[derive(Debug, Clone)]
pub struct SuiteParams {
    pub seed: u64,
    pub toeplitz_tail_max: usize,
}

impl SuiteParams {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        Ok(SuiteParams {
            seed: cfg.seed()?,
            toeplitz_tail_max: cfg.get("toeplitz-tail-max")?,
        })
    }
}

impl Default for SuiteParams {
    fn default() -> Self {
        SuiteParams {
            seed: 0,
            toeplitz_tail_max: 16,
        }
    }
}

type Measured = BTreeMap<String, Value>;

fn verdict(id: u32, ok: bool, detail: String, measured: Measured) -> Check {
    Check::new(id, NAMES[id as usize - 1], if ok { Status::Pass } else { Status::Fail }, detail, measured)
}

fn errored(id: u32, e: mequi::Error) -> Check {
    Check::new(id, NAMES[id as usize - 1], Status::Fail, format!("error: {e}"), Measured::new())
}

/// Criteria `1..=12`; criterion 13 needs whole-suite reruns, see [`determinism`].
pub fn run_criterion(id: u32, p: &SuiteParams) -> Check {
    let seed = derive(p.seed, id as u64);
    let out = match id {
        1 => toeplitz_bound(p.toeplitz_tail_max, seed),
        2 => toeplitz_coverage(seed),
        3 => cantor_density(seed),
        4 => sturmian_density(seed),
        5 => sturmian_decay(seed),
        6 => thue_morse_non_decay(seed),
        7 => thue_morse_fibers(seed),
        8 => skew_product(seed),
        9 => weyl_invariance(seed),
        10 => spectrum_peaks(seed),
        11 => full_group(seed),
        12 => axioms(seed),
        _ => {
            return Check::new(
                id,
                "unknown",
                Status::Fail,
                format!("no criterion {id} outside the whole-suite run"),
                Measured::new(),
            )
        }
    };
    out.unwrap_or_else(|e| errored(id, e))
}

/// Criteria `1..=12` in order.
pub fn run_core(p: &SuiteParams) -> Vec<Check> {
    (1..CRITERIA).map(|id| run_criterion(id, p)).collect()
}

/// Serialized results of the same suite under different worker counts.
/// The counts themselves stay out of the check so the report is invariant.
pub fn determinism(runs: &[String]) -> Check {
    let identical = runs.iter().all(|r| *r == runs[0]);
    let mut m = Measured::new();
    m.insert("runs".into(), json!(runs.len()));
    m.insert("bytes".into(), json!(runs.first().map_or(0, String::len)));
    verdict(
        13,
        identical && runs.len() >= 2,
        format!(
            "{} runs under different worker counts {}",
            runs.len(),
            if identical { "are byte-identical" } else { "differ" }
        ),
        m,
    )
}

fn measured(entries: Vec<(&str, Value)>) -> Measured {
    entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// `y` in the closure with integer hole `2^(L-1)`; `x` a member sharing the
/// hole digits and fills of levels `1..=L`, `L = 2^n + 2`.
pub fn toeplitz_closure_pair(n: u32, seed: u64) -> (SymbolicPoint, SymbolicPoint) {
    let level = (1usize << n) + 2;
    let mut hole = vec![0u8; level];
    hole[level - 1] = 1;
    let fills: Vec<u8> = (0..level).map(|i| (i & 1) as u8).collect();
    let y = ToeplitzParams {
        hole: BitStream::new(hole.clone(), BitTail::Constant(0)),
        fills: BitStream::new(fills.clone(), BitTail::Alternating((level & 1) as u8)),
        limit_value: Some(1),
    };
    let x = ToeplitzParams {
        hole: BitStream::new(hole, BitTail::Hashed(derive(seed, 0))),
        fills: BitStream::new(fills, BitTail::Hashed(derive(seed, 1))),
        limit_value: None,
    };
    (toeplitz_point(x), toeplitz_point(y))
}

fn toeplitz_bound(tail_max: usize, seed: u64) -> Result<Check> {
    let sys = catalog::build(&catalog::SystemSpec::new("toeplitz-ex5"))?;
    let family = FoelnerFamily::dyadic(tail_max.max(1) as u32 + 1, 1)?;
    let mut rows = Vec::new();
    let mut ok = true;
    let mut inconclusive = Vec::new();
    for n in 2u32..=5 {
        let (x, y) = toeplitz_closure_pair(n, derive(seed, n as u64));
        let close = cantor_metric(&x, &y, (1 << n) - 1)?;
        let bound = 8.0 * pow2_neg(n as u64);
        if tail_max < n as usize + 2 {
            inconclusive.push(n);
            rows.push(json!({"n": n, "status": "inconclusive", "reason": "tail ends before n + 2"}));
            continue;
        }
        let est = besicovitch_pseudometric(
            sys.as_ref(),
            &Point::Symbolic(x),
            &Point::Symbolic(y),
            &family,
            Tail::new(n as usize + 2, tail_max)?,
        )?;
        let pass = close.flagged && est.value <= bound;
        ok &= pass;
        rows.push(json!({
            "n": n,
            "cantor_distance_within": pow2_neg(1 << n),
            "agreement_radius_reached": close.flagged,
            "estimate": est.value,
            "bound": bound,
            "pass": pass,
        }));
    }
    let m = measured(vec![("rows", json!(rows))]);
    if !inconclusive.is_empty() {
        return Ok(Check::new(
            1,
            NAMES[0],
            Status::Inconclusive,
            format!("tail [n+2, {tail_max}] is empty for n = {inconclusive:?}"),
            m,
        ));
    }
    Ok(verdict(1, ok, format!("D_F(x_n, y) <= 2^(3-n) for n = 2..5 with tail [n+2, {tail_max}]"), m))
}

fn toeplitz_coverage(seed: u64) -> Result<Check> {
    let mut rows = Vec::new();
    let mut ok = true;
    for n in 1u32..=8 {
        let level = (1usize << n) + 2;
        let (x1, x2) = shared_skeleton_pair(level, derive(seed, n as u64))?;
        let close = cantor_metric(&x1, &x2, (1 << n) - 1)?;
        // a residue other than the level-n hole is filled at a level <= n
        let holes: std::collections::BTreeSet<u64> = [&x1, &x2]
            .iter()
            .map(|x| {
                mequi::systems::toeplitz::toeplitz_source(x)
                    .expect("constructed member")
                    .params()
                    .hole_residue(n)
            })
            .collect();
        let scanned = uncovered_residues(&[&x1, &x2], n, -(1i64 << (n + 6)), 128)?;
        let consistent = scanned.iter().all(|r| holes.contains(r));
        let pass = close.flagged && holes.len() <= 2 && consistent && scanned.len() <= 2;
        ok &= pass;
        rows.push(json!({
            "n": n,
            "agreement_radius_reached": close.flagged,
            "uncovered_scanned": scanned,
            "hole_residues": holes,
            "pass": pass,
        }));
    }
    Ok(verdict(
        2,
        ok,
        "at most two residues mod 2^n outside Per(x1) and Per(x2) for n = 1..8".into(),
        measured(vec![("rows", json!(rows))]),
    ))
}

fn cantor_density(seed: u64) -> Result<Check> {
    let fp = fixed_point("cantor-substitution")?;
    let prefix = fp.word(0, 3i64.pow(12) - 1)?;
    let mut exact = true;
    let mut counts = Vec::new();
    for k in 0..=12u32 {
        let zeros = prefix[..3usize.pow(k)].iter().filter(|&&s| s == 0).count() as u64;
        exact &= zeros == 2u64.pow(k);
        counts.push(zeros);
    }
    let sys = catalog::cantor_substitution(3i64.pow(12))?;
    let family = FoelnerFamily::geometric(3, 13)?;
    let tail = Tail::new(10, 12)?;
    let mut points = vec![Point::Symbolic(fp.clone())];
    points.push(Point::Symbolic(SymbolicPoint::from_source(mequi::point::Periodic::constant(2, 1)?)));
    for i in 0..4 {
        points.push(sys.sample(derive(seed, i))?);
    }
    let observables = [
        Observable::symbol_indicator(1),
        Observable::symbol_indicator(0),
        Observable::cylinder(0, vec![1, 1]),
    ];
    let tol = 0.05;
    let ue = unique_ergodicity_test(sys.as_ref(), &observables, &points, &family, tail, tol)?;
    let window = family.window(10)?;
    let avg = birkhoff_average(sys.as_ref(), &observables[0], &points[0], window)?.re;
    let ones = prefix[..3usize.pow(10)].iter().filter(|&&s| s == 1).count() as u64;
    let bound_exact = ones >= 3u64.pow(10) - 2u64.pow(10);
    let ok = exact && ue.verdict == Verdict::Unique && bound_exact;
    Ok(verdict(
        3,
        ok,
        format!(
            "zeros in [0, 3^k) = 2^k for k <= 12: {exact}; verdict {:?}; average of 1[x0=1] on [0, 3^10) = {avg:.6}",
            ue.verdict
        ),
        measured(vec![
            ("zero_counts", json!(counts)),
            ("verdict", json!(ue.verdict)),
            ("max_spread", json!(ue.max_spread)),
            ("tol", json!(tol)),
            ("indicator_average", json!(avg)),
            ("bound", json!(1.0 - (2.0f64 / 3.0).powi(10))),
        ]),
    ))
}

fn sturmian_density(seed: u64) -> Result<Check> {
    let alpha = RotationNumber::golden_default();
    let sys = SturmianSystem::new(alpha.clone());
    let family = make_interval_foelner(&[1_000_000], &[0])?;
    let rows = (0..20u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng(derive(seed, i));
            for _ in 0..16 {
                let theta = CirclePoint(r.gen());
                let t = r.gen_range(1e-3..1e-1);
                let other = theta + CirclePoint::from_f64(t);
                let (Ok(x), Ok(y)) = (sturmian_point(&alpha, theta), sturmian_point(&alpha, other)) else {
                    continue;
                };
                let d = circle_metric(theta, other);
                let est = hamming_pseudometric(
                    &sys,
                    &Point::Symbolic(x),
                    &Point::Symbolic(y),
                    &family,
                    Tail::single(0),
                    Some(1000),
                )?;
                return Ok((d, est.value));
            }
            Err(mequi::Error::SamplerExhausted("no admissible phase pair".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = rows.iter().map(|(t, v)| (v - 2.0 * t).abs()).fold(0.0, f64::max);
    Ok(verdict(
        4,
        worst <= 2e-3,
        format!("max |D_H - 2t| = {worst:.3e} over 20 pairs (tolerance 2e-3)"),
        measured(vec![
            ("pairs", json!(rows.iter().map(|(t, v)| json!({"t": t, "estimate": v})).collect::<Vec<_>>())),
            ("max_error", json!(worst)),
        ]),
    ))
}

fn sturmian_decay(seed: u64) -> Result<Check> {
    let alpha = RotationNumber::golden_default();
    let sys = SturmianSystem::new(alpha.clone());
    let sampler = SturmianFiberSampler::new(alpha);
    let deltas: Vec<f64> = (4..=10).map(pow2_neg).collect();
    let family = FoelnerFamily::dyadic(15, 1)?;
    let table = mean_equi_scan(
        &sys,
        &sampler,
        &deltas,
        &Integrand::Metric,
        &family,
        Tail::new(12, 14)?,
        Some(1 << 10),
        50,
        seed,
    )?;
    let factor = table.decay_factor();
    Ok(verdict(
        5,
        factor >= 8.0,
        format!("max_D decays by {factor:.2} from delta 2^-4 to 2^-10 (need 8)"),
        measured(vec![("table", json!(table))]),
    ))
}

fn thue_morse_non_decay(seed: u64) -> Result<Check> {
    let sys = catalog::thue_morse(0)?;
    let sampler = WordSearchSampler::new("thue-morse", fixed_point("thue-morse")?, 1 << 16)?;
    let exponents = [1u64, 2, 4, 8, 16, 24, 32, 40, 48, 56, 64];
    let deltas: Vec<f64> = exponents.iter().map(|&k| pow2_neg(k)).collect();
    let family = FoelnerFamily::dyadic(17, 1)?;
    let table = mean_equi_scan(
        sys.as_ref(),
        &sampler,
        &deltas,
        &Integrand::Hamming,
        &family,
        Tail::single(16),
        Some(1 << 10),
        10,
        seed,
    )?;
    let floor = table.rows.iter().map(|r| r.max_d).fold(f64::INFINITY, f64::min);
    Ok(verdict(
        6,
        floor >= 0.1,
        format!("smallest max_D over deltas 2^-1..2^-64 is {floor:.4} (need 0.1)"),
        measured(vec![("table", json!(table)), ("min_max_d", json!(floor))]),
    ))
}

fn thue_morse_fibers(seed: u64) -> Result<Check> {
    let sys = catalog::thue_morse(1 << 20)?;
    let code = ThueMorseCode::new(64)?;
    let tolerance = 2.0 * code.resolution();
    let report = fiber_statistics(&code, &|s| sys.sample(s), tolerance, 1000, seed, 64)?;
    let ok = report.histogram.len() == 1 && report.histogram.get(&2) == Some(&1000);
    Ok(verdict(
        7,
        ok,
        format!("fiber-size histogram {:?} over 1000 points", report.histogram),
        measured(vec![
            ("histogram", json!(report.histogram)),
            ("regularity", json!(report.regularity)),
            ("tolerance", json!(tolerance)),
        ]),
    ))
}

fn skew_product(seed: u64) -> Result<Check> {
    let golden = RotationNumber::golden_default().phase;
    let silver = RotationNumber::silver_default();
    let split = golden + CirclePoint::from_f64(pow2_neg(21) * (1.0 + silver.value()));
    let skew = skew_product_system(vec![golden, silver.phase, split])?;
    let pair_sys = product_system(&skew, &skew)?;
    let f = Observable::fiber_character(1, -1);
    let mut r = rng(seed);
    let (ta, tb) = (CirclePoint(r.gen()), CirclePoint(r.gen()));
    let pair = |x1: CirclePoint, x2: CirclePoint| {
        Point::product(SkewProductSystem::point(x1, ta), SkewProductSystem::point(x2, tb))
    };
    let window = make_interval_foelner(&[100_000], &[0])?;
    let independent = birkhoff_average(pair_sys.as_ref(), &f, &pair(golden, silver.phase), window.window(0)?)?.norm();
    let diagonal = birkhoff_average(pair_sys.as_ref(), &f, &pair(golden, golden), window.window(0)?)?.norm();
    let family = FoelnerFamily::dyadic(25, 1)?;
    let ue = product_pointwise_ue_check(
        pair_sys.as_ref(),
        &[pair(golden, golden), pair(golden, split)],
        &[f],
        &family,
        Tail::new(22, 24)?,
        0.05,
        2,
        64,
    )?;
    let row = &ue.continuity[0];
    let ok = independent <= 0.05
        && (diagonal - 1.0).abs() <= 1e-12
        && row.measure_distance >= 0.3
        && row.input_distance <= pow2_neg(20);
    Ok(verdict(
        8,
        ok,
        format!(
            "independent |A| = {independent:.2e}, diagonal |A| - 1 = {:.1e}, measure distance {:.3} at base distance {:.2e}",
            diagonal - 1.0,
            row.measure_distance,
            row.input_distance
        ),
        measured(vec![
            ("independent_modulus", json!(independent)),
            ("diagonal_modulus", json!(diagonal)),
            ("measure_distance", json!(row.measure_distance)),
            ("base_distance", json!(row.input_distance)),
            ("verdicts", json!(ue.verdicts.iter().map(|v| v.verdict).collect::<Vec<_>>())),
        ]),
    ))
}

fn weyl_invariance(seed: u64) -> Result<Check> {
    let alpha = RotationNumber::golden_default();
    let sys = SturmianSystem::new(alpha.clone());
    let od = odometer_system();
    let family = FoelnerFamily::dyadic(16, 1)?;
    let tail = Tail::new(14, 15)?;
    let gs = [1i64, -1, 7, -33, 64, 100, -100];
    let mut worst_ratio: f64 = 0.0;
    let mut odometer_max: f64 = 0.0;
    let mut rows = Vec::new();
    for i in 0..4u64 {
        let x = sys.sample(derive(seed, 2 * i))?;
        let y = sys.sample(derive(seed, 2 * i + 1))?;
        let a = Point::Odometer(OdometerPoint::random(128, derive(seed, 100 + 2 * i)));
        let b = Point::Odometer(OdometerPoint::random(128, derive(seed, 101 + 2 * i)));
        for &g in &gs {
            let s = invariance_check(&sys, &x, &y, g, &Integrand::Metric, &family, tail, Some(1 << 12))?;
            let o = invariance_check(od.as_ref(), &a, &b, g, &Integrand::Metric, &family, tail, Some(1 << 12))?;
            worst_ratio = worst_ratio.max(s.discrepancy / s.bound);
            odometer_max = odometer_max.max(o.discrepancy);
            rows.push(json!({"g": g, "sturmian": s, "odometer_discrepancy": o.discrepancy}));
        }
    }
    Ok(verdict(
        9,
        worst_ratio <= 1.0 && odometer_max == 0.0,
        format!(
            "max discrepancy / (2|g|/2^14) = {worst_ratio:.3} on Sturmian pairs; odometer max discrepancy {odometer_max:e}"
        ),
        measured(vec![
            ("rows", json!(rows)),
            ("worst_ratio", json!(worst_ratio)),
            ("odometer_max", json!(odometer_max)),
        ]),
    ))
}

/// `x_n = v_2(n + 1) mod 2`, the one-sided period-doubling fixed point.
fn period_doubling_oracle(n: u64) -> u8 {
    ((n + 1).trailing_zeros() & 1) as u8
}

fn spectrum_peaks(seed: u64) -> Result<Check> {
    // period doubling: engine against direct sums at N = 2^10, then N = 2^16
    let pd = catalog::period_doubling(0)?;
    let x = Point::Symbolic(fixed_point("period-doubling")?);
    let f = Observable::sign();
    let m = 1usize << 12;
    let small = eigenvalue_scan(pd.as_ref(), &f, &x, m as u64, 1 << 10, &ScanOptions::default())?;
    let oracle_values: Vec<f64> = (0..1u64 << 10)
        .map(|n| if period_doubling_oracle(n) == 0 { 1.0 } else { -1.0 })
        .collect();
    let engine_mismatch = small.grid[..m]
        .par_iter()
        .enumerate()
        .map(|(j, g)| {
            let s: Complex64 = oracle_values
                .iter()
                .enumerate()
                .map(|(n, v)| {
                    let k = ((j as u128 * n as u128) % m as u128) as f64;
                    Complex64::cis(-std::f64::consts::TAU * k / m as f64) * v
                })
                .sum::<Complex64>()
                / oracle_values.len() as f64;
            (s.norm() - g.modulus).abs()
        })
        .reduce(|| 0.0, f64::max);
    let options = ScanOptions {
        dyadic_depth: 4,
        ..ScanOptions::default()
    };
    let big = eigenvalue_scan(pd.as_ref(), &f, &x, m as u64, 1 << 16, &options)?;
    let half = big.peak_near(0.5, 1.0 / m as f64);
    let pd_ok = engine_mismatch <= 1e-9 && half.as_ref().is_some_and(|p| p.modulus >= 1.0 / 3.0);

    // Sturmian golden rotation
    let alpha = RotationNumber::golden_default();
    let st = SturmianSystem::new(alpha.clone());
    let xs = st.sample(seed)?;
    let fs = Observable::centered_coordinate(alpha.value());
    let resolution = 1u64 << 21;
    let scan = eigenvalue_scan(&st, &fs, &xs, resolution, 1_000_000, &ScanOptions::default())?;
    let radius = 2.0 / resolution as f64;
    let at_alpha = scan.peak_near(alpha.value(), radius);
    let at_mirror = scan.peak_near(1.0 - alpha.value(), radius);
    let st_ok = at_alpha.as_ref().is_some_and(|p| p.modulus >= 0.1)
        && at_mirror.as_ref().is_some_and(|p| p.modulus >= 0.1)
        && scan.off_peak_median <= 0.02;
    let modulus = |p: &Option<mequi::spectrum::GridValue>| p.as_ref().map(|g| g.modulus).unwrap_or(0.0);
    Ok(verdict(
        10,
        pd_ok && st_ok,
        format!(
            "period doubling |S(1/2)| = {:.4}, engine vs direct {engine_mismatch:.1e}; Sturmian peaks {:.4} and {:.4}, off-peak median {:.2e}",
            modulus(&half),
            modulus(&at_alpha),
            modulus(&at_mirror),
            scan.off_peak_median
        ),
        measured(vec![
            ("period_doubling_half", json!(half)),
            ("period_doubling_peaks", json!(big.peaks)),
            ("engine_vs_direct", json!(engine_mismatch)),
            ("sturmian_alpha_peak", json!(at_alpha)),
            ("sturmian_mirror_peak", json!(at_mirror)),
            ("sturmian_off_peak_median", json!(scan.off_peak_median)),
            ("sturmian_threshold", json!(scan.threshold)),
        ]),
    ))
}

fn full_group(seed: u64) -> Result<Check> {
    let s = FullGroupElement::add_two_on_odd();
    let plus = FullGroupElement::translation(1);
    let at = |e: &FullGroupElement, n: i64| apply_element(e, &OdometerPoint::from_integer(n)).map(|p| p.to_i64());
    let s1 = at(&s, 1)?;
    let s2 = at(&s, 2)?;
    let s_after_plus = at(&compose(&s, &plus)?, 1)?;
    let plus_after_s = at(&compose(&plus, &s)?, 1)?;
    let pairs: Vec<(OdometerPoint, OdometerPoint)> = (0..1000u64)
        .map(|i| {
            (
                OdometerPoint::random(96, derive(seed, 2 * i)),
                OdometerPoint::random(96, derive(seed, 2 * i + 1)),
            )
        })
        .collect();
    let iso = isometry_check(&s, &pairs, 96)?;
    let ok = s1 == Some(3)
        && s2 == Some(2)
        && s_after_plus == Some(2)
        && plus_after_s == Some(4)
        && iso.isometric
        && iso.max_distortion == 0.0;
    Ok(verdict(
        11,
        ok,
        format!(
            "s(1) = {s1:?}, s(2) = {s2:?}, s(1 + 1) = {s_after_plus:?} vs 1 + s(1) = {plus_after_s:?}, distortion {} on 1000 pairs",
            iso.max_distortion
        ),
        measured(vec![
            ("s_of_1", json!(s1)),
            ("s_of_2", json!(s2)),
            ("s_of_theta_plus_1", json!(s_after_plus)),
            ("one_plus_s_of_theta", json!(plus_after_s)),
            ("isometry", json!(iso)),
        ]),
    ))
}

const DN_LEVEL: u32 = 8;
const AXIOM_BUDGET: u64 = 64;

/// The four estimators with shared parameters.
struct Estimators {
    sys: mequi::SystemHandle,
    family: FoelnerFamily,
    tail: Tail,
}

impl Estimators {
    fn all(&self, x: &Point, y: &Point) -> Result<[PseudometricEstimate; 4]> {
        let (xs, ys) = (x.as_symbolic()?, y.as_symbolic()?);
        Ok([
            dn_pseudometric(xs, ys, DN_LEVEL)?,
            besicovitch_pseudometric(self.sys.as_ref(), x, y, &self.family, self.tail)?,
            weyl_pseudometric(self.sys.as_ref(), x, y, &self.family, self.tail, Some(AXIOM_BUDGET))?,
            hamming_pseudometric(self.sys.as_ref(), x, y, &self.family, self.tail, Some(AXIOM_BUDGET))?,
        ])
    }
}

/// Points of mixed closeness: a sample, a sparse modification of it, and
/// an independent sample of the same system.
fn axiom_triple(systems: &[mequi::SystemHandle], seed: u64) -> Result<(usize, [Point; 3])> {
    let mut r = rng(seed);
    let k = r.gen_range(0..systems.len());
    let sys = &systems[k];
    let x = sys.sample(r.gen())?;
    let xs = x.as_symbolic()?;
    let changes: Vec<(i64, u8)> = (0..r.gen_range(1..4))
        .map(|_| {
            let at = r.gen_range(-20i64..300);
            Ok((at, 1 - xs.symbol(at)?))
        })
        .collect::<Result<_>>()?;
    let y = Point::Symbolic(modify(xs, &changes)?);
    let z = if r.gen_bool(0.5) {
        sys.sample(r.gen())?
    } else {
        Point::Symbolic(xs.shift(r.gen_range(1..8)))
    };
    Ok((k, [x, y, z]))
}

fn axioms(seed: u64) -> Result<Check> {
    let labels = ["thue-morse", "sturmian", "toeplitz-ex5", "period-doubling"];
    let systems = labels
        .iter()
        .map(|l| catalog::build(&catalog::SystemSpec::new(l)))
        .collect::<Result<Vec<_>>>()?;
    let estimators: Vec<Estimators> = systems
        .iter()
        .map(|s| {
            Ok(Estimators {
                sys: s.clone(),
                family: FoelnerFamily::dyadic(DN_LEVEL + 1, 1)?,
                tail: Tail::new(6, DN_LEVEL as usize)?,
            })
        })
        .collect::<Result<_>>()?;
    let names = ["dn", "besicovitch", "weyl", "hamming"];
    // (symmetry failures, triangle failures, worst triangle excess) per estimator
    let triples: Vec<[(bool, bool, f64); 4]> = (0..10_000u64)
        .into_par_iter()
        .map(|i| {
            let (k, [x, y, z]) = axiom_triple(&systems, derive(seed, i))?;
            let e = &estimators[k];
            let (xy, yx) = (e.all(&x, &y)?, e.all(&y, &x)?);
            let (yz, xz) = (e.all(&y, &z)?, e.all(&x, &z)?);
            let zy = e.all(&z, &y)?;
            let mut out = [(true, true, 0.0); 4];
            for j in 0..4 {
                let symmetric = xy[j].value == yx[j].value && yz[j].value == zy[j].value;
                let slack = 2.0 * (xy[j].slack + yz[j].slack + xz[j].slack);
                let excess = xz[j].value - xy[j].value - yz[j].value;
                out[j] = (symmetric, excess <= slack, excess);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let domination: Vec<bool> = (0..1000u64)
        .into_par_iter()
        .map(|i| {
            let (k, [x, y, _]) = axiom_triple(&systems, derive(seed, 1 << 40 | i))?;
            let v = estimators[k].all(&x, &y)?;
            Ok(v[0].value <= v[1].value && v[1].value <= v[2].value)
        })
        .collect::<Result<_>>()?;
    let mut ok = true;
    let mut per = Vec::new();
    for (j, name) in names.iter().enumerate() {
        let asym = triples.iter().filter(|t| !t[j].0).count();
        let tri = triples.iter().filter(|t| !t[j].1).count();
        let worst = triples.iter().map(|t| t[j].2).fold(f64::NEG_INFINITY, f64::max);
        ok &= asym == 0 && tri == 0;
        per.push(json!({"estimator": name, "asymmetric": asym, "triangle_failures": tri, "max_excess": worst}));
    }
    let dom_fail = domination.iter().filter(|d| !**d).count();
    ok &= dom_fail == 0;
    Ok(verdict(
        12,
        ok,
        format!(
            "10000 triples: symmetry and triangle violations {:?}; domination violations {dom_fail}/1000",
            per.iter()
                .map(|p| (p["asymmetric"].as_u64().unwrap_or(0), p["triangle_failures"].as_u64().unwrap_or(0)))
                .collect::<Vec<_>>()
        ),
        measured(vec![("estimators", json!(per)), ("domination_failures", json!(dom_fail))]),
    ))
}
