//! Subcommand implementations: each maps a resolved configuration to a report.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde_json::json;

use mequi::ergodic::{unique_ergodicity_test, Observable};
use mequi::factor::{
    continuity_fit, fiber_statistics, FactorMap, IdentityFactor, SturmianFactor, ThueMorseCode, ToeplitzFactor,
};
use mequi::fullgroup::{apply_element, compose, inverse, isometry_check, FullGroupElement};
use mequi::mean_equi::{
    dn_pseudometric, mean_equi_scan, product_pointwise_ue_check, pseudometric, CircleSampler, EstimatorKind,
    Integrand, OdometerSampler, PairSampler, SturmianFiberSampler, ToeplitzSkeletonSampler, WordSearchSampler,
};
use mequi::point::pow2_neg;
use mequi::rng::derive;
use mequi::spectrum::{eigenvalue_scan, ScanOptions};
use mequi::systems::catalog::{self, fixed_point, parse_rotation_number, SystemSpec};
use mequi::systems::{act_z, sturmian_point, toeplitz_point, SkewProductSystem, ToeplitzParams};
use mequi::{CirclePoint, Error, FoelnerFamily, OdometerPoint, Point, Result, RotationNumber, SystemHandle, Tail};

use crate::acceptance::{self, SuiteParams};
use crate::config::RunConfig;
use crate::report::{to_json, Check, Report};

pub const SUBCOMMANDS: [(&str, &str); 10] = [
    ("gen", "print a window of a catalog point"),
    ("dfest", "estimate pseudometrics between two points"),
    ("scan", "modulus-of-continuity table of the Weyl estimate"),
    ("ue-test", "three-valued unique ergodicity test"),
    ("product-check", "pointwise unique ergodicity of skew-product pairs"),
    ("spectrum", "Weyl-sum eigenvalue scan"),
    ("factor", "fiber statistics of the maximal equicontinuous factor"),
    ("fullgroup", "full group element witnesses"),
    ("accept", "run the acceptance suite"),
    ("defaults", "print every configuration key with its default"),
];

/// Output of a subcommand: the report plus an optional table for `csv`.
pub struct Outcome {
    pub report: Report,
    pub table: Option<String>,
}

fn rotation(cfg: &RunConfig) -> Result<RotationNumber> {
    parse_rotation_number(cfg.str("alpha"))
}

fn phase(text: &str) -> Result<CirclePoint> {
    match text {
        "golden" | "silver" => Ok(parse_rotation_number(text)?.phase),
        other => other
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(|v| CirclePoint::from_f64(v.rem_euclid(1.0)))
            .ok_or_else(|| Error::invalid(format!("phase {other:?} is not a number"))),
    }
}

pub fn system(cfg: &RunConfig) -> Result<SystemHandle> {
    let mut spec = SystemSpec::new(cfg.str("system"));
    spec.alpha = rotation(cfg)?;
    let mut base = vec![phase(cfg.str("base1"))?];
    let b2 = phase(cfg.str("base2"))?;
    if b2 != base[0] {
        base.push(b2);
    }
    spec.skew_base = base;
    catalog::build(&spec)
}

/// Point `which` (1 or 2) of the configured system.
pub fn point(cfg: &RunConfig, sys: &SystemHandle, which: u8) -> Result<Point> {
    let key = |k: &str| format!("{k}{which}");
    let shift: i64 = cfg.get(&key("shift"))?;
    let theta = cfg.str(&key("theta"));
    let label = cfg.str("system");
    let p = match label {
        "cantor-substitution" | "thue-morse" | "period-doubling" => Point::Symbolic(fixed_point(label)?),
        "sturmian" => Point::Symbolic(sturmian_point(&rotation(cfg)?, phase(theta)?)?),
        "toeplitz-ex5" => Point::Symbolic(toeplitz_point(ToeplitzParams::canonical())),
        "odometer" => match theta.parse::<i64>() {
            Ok(n) => Point::Odometer(OdometerPoint::from_integer(n)),
            Err(_) => Point::Odometer(OdometerPoint::random(128, derive(cfg.seed()?, which as u64))),
        },
        "rotation" => Point::Circle(phase(theta)?),
        "skew-product" => SkewProductSystem::point(phase(cfg.str(&key("base")))?, phase(theta)?),
        other => return Err(Error::invalid(format!("no point constructor for {other:?}"))),
    };
    act_z(sys.as_ref(), shift, &p)
}

fn is_symbolic(label: &str) -> bool {
    !matches!(label, "odometer" | "rotation" | "skew-product")
}

pub fn observable(cfg: &RunConfig) -> Result<Observable> {
    let label = cfg.str("system");
    let circle = |f: Observable| {
        if label == "skew-product" {
            Observable::on_component(&f, true)
        } else {
            f
        }
    };
    Ok(match cfg.str("observable") {
        "coordinate" => Observable::coordinate(),
        "sign" => Observable::sign(),
        "centered" => {
            let mean = if label == "sturmian" { rotation(cfg)?.value() } else { 0.5 };
            Observable::centered_coordinate(mean)
        }
        "indicator0" => Observable::symbol_indicator(0),
        "indicator1" => Observable::symbol_indicator(1),
        "character" => circle(Observable::character(1)),
        other => return Err(Error::invalid(format!("unknown observable {other:?}"))),
    })
}

fn family(cfg: &RunConfig) -> Result<FoelnerFamily> {
    let levels: u32 = cfg.get("levels")?;
    match cfg.str("family") {
        "dyadic" => FoelnerFamily::dyadic(levels, 1),
        "triadic" => FoelnerFamily::geometric(3, levels),
        other => Err(Error::invalid(format!("unknown family {other:?}"))),
    }
}

fn tail(cfg: &RunConfig) -> Result<Tail> {
    Tail::new(cfg.get("tail-min")?, cfg.get("tail-max")?)
}

fn integrand(cfg: &RunConfig) -> Result<Integrand> {
    Ok(match cfg.str("integrand") {
        "metric" => Integrand::Metric,
        "hamming" => Integrand::Hamming,
        "observable" => Integrand::Observable(observable(cfg)?),
        other => return Err(Error::invalid(format!("unknown integrand {other:?}"))),
    })
}

fn deltas(cfg: &RunConfig) -> Result<Vec<f64>> {
    let r = cfg.range("delta-exponents")?;
    if *r.start() < 0 || *r.end() > 1000 {
        return Err(Error::invalid("delta exponents must lie in 0..=1000"));
    }
    Ok(r.map(|k| pow2_neg(k as u64)).collect())
}

fn sampler(cfg: &RunConfig) -> Result<Box<dyn PairSampler>> {
    let label = cfg.str("system");
    Ok(match label {
        "sturmian" => Box::new(SturmianFiberSampler::new(rotation(cfg)?)),
        "cantor-substitution" | "thue-morse" | "period-doubling" => {
            Box::new(WordSearchSampler::new(label, fixed_point(label)?, cfg.get("segment")?)?)
        }
        "toeplitz-ex5" => Box::new(ToeplitzSkeletonSampler),
        "odometer" => Box::new(OdometerSampler { depth: 128 }),
        "rotation" => Box::new(CircleSampler),
        other => return Err(Error::invalid(format!("no pair sampler for {other:?}"))),
    })
}

fn new_report(command: &str, cfg: &RunConfig) -> Report {
    Report::new(command, cfg.values().clone())
}

fn gen(cfg: &RunConfig) -> Result<Outcome> {
    let sys = system(cfg)?;
    let p = point(cfg, &sys, 1)?;
    let w = cfg.range("window")?;
    let mut report = new_report("gen", cfg);
    match &p {
        Point::Symbolic(s) => {
            let record = s.to_record(*w.start(), *w.end())?;
            report.push("point", &record);
            return Ok(Outcome {
                report,
                table: Some(format!("{}\n", record.symbols)),
            });
        }
        other => report.push("point", &json!({"describe": other.describe()})),
    }
    Ok(Outcome { report, table: None })
}

fn dfest(cfg: &RunConfig) -> Result<Outcome> {
    let sys = system(cfg)?;
    let (x, y) = (point(cfg, &sys, 1)?, point(cfg, &sys, 2)?);
    let fam = family(cfg)?;
    let t = tail(cfg)?;
    let budget: Option<u64> = cfg.optional("budget")?;
    let integ = integrand(cfg)?;
    let kinds: Vec<&str> = match cfg.str("estimator") {
        "all" => vec!["dn", "besicovitch", "weyl", "observable"],
        one => vec![one],
    };
    let mut report = new_report("dfest", cfg);
    for kind in kinds {
        let est = match kind {
            "dn" => dn_pseudometric(x.as_symbolic()?, y.as_symbolic()?, cfg.get("dn-level")?)?,
            "besicovitch" => pseudometric(sys.as_ref(), &integ, &x, &y, &fam, t, budget, EstimatorKind::Besicovitch)?,
            "weyl" => pseudometric(sys.as_ref(), &integ, &x, &y, &fam, t, budget, EstimatorKind::Weyl)?,
            "observable" => {
                let integ = match &integ {
                    Integrand::Metric => Integrand::Hamming,
                    other => other.clone(),
                };
                pseudometric(sys.as_ref(), &integ, &x, &y, &fam, t, budget, EstimatorKind::Observable)?
            }
            other => return Err(Error::invalid(format!("unknown estimator {other:?}"))),
        };
        report.push(&format!("pseudometric/{kind}"), &est);
    }
    Ok(Outcome { report, table: None })
}

fn scan(cfg: &RunConfig) -> Result<Outcome> {
    let sys = system(cfg)?;
    let s = sampler(cfg)?;
    let table = mean_equi_scan(
        sys.as_ref(),
        s.as_ref(),
        &deltas(cfg)?,
        &integrand(cfg)?,
        &family(cfg)?,
        tail(cfg)?,
        cfg.optional("budget")?,
        cfg.get("pairs")?,
        cfg.seed()?,
    )?;
    let mut report = new_report("scan", cfg);
    report.push("modulus-table", &table);
    report.push("decay-factor", &table.decay_factor());
    Ok(Outcome {
        table: Some(table.csv()),
        report,
    })
}

fn default_observables(cfg: &RunConfig) -> Result<Vec<Observable>> {
    let label = cfg.str("system");
    Ok(match label {
        "odometer" => (0..3)
            .map(|i| {
                Observable::new(&format!("digit{i}"), 1.0, move |p| {
                    Ok(Complex64::new(p.as_odometer()?.digit(i)? as f64, 0.0))
                })
            })
            .collect(),
        "rotation" => vec![Observable::character(1), Observable::character(2)],
        "skew-product" => vec![
            Observable::on_component(&Observable::character(1), true),
            Observable::on_component(&Observable::character(1), false),
        ],
        _ if is_symbolic(label) => vec![
            Observable::symbol_indicator(1),
            Observable::cylinder(0, vec![1, 1]),
            Observable::cylinder(0, vec![0, 1]),
        ],
        other => return Err(Error::invalid(format!("no observables for {other:?}"))),
    })
}

fn ue_test(cfg: &RunConfig) -> Result<Outcome> {
    let sys = system(cfg)?;
    let starts: usize = cfg.get("starts")?;
    let seed = cfg.seed()?;
    let points = (0..starts.max(2) as u64)
        .map(|i| sys.sample(derive(seed, i)))
        .collect::<Result<Vec<_>>>()?;
    let r = unique_ergodicity_test(
        sys.as_ref(),
        &default_observables(cfg)?,
        &points,
        &family(cfg)?,
        tail(cfg)?,
        cfg.get("tol")?,
    )?;
    let mut report = new_report("ue-test", cfg);
    report.push("unique-ergodicity", &r);
    Ok(Outcome { report, table: None })
}

fn product_check(cfg: &RunConfig) -> Result<Outcome> {
    if cfg.str("system") != "skew-product" {
        return Err(Error::invalid("product-check runs on system = skew-product"));
    }
    let skew = system(cfg)?;
    let pair_sys = mequi::systems::product_system(&skew, &skew)?;
    let (b1, b2) = (phase(cfg.str("base1"))?, phase(cfg.str("base2"))?);
    let (t1, t2) = (phase(cfg.str("theta1"))?, phase(cfg.str("theta2"))?);
    let diagonal = Point::product(SkewProductSystem::point(b1, t1), SkewProductSystem::point(b1, t2));
    let split = Point::product(SkewProductSystem::point(b1, t1), SkewProductSystem::point(b2, t2));
    let r = product_pointwise_ue_check(
        pair_sys.as_ref(),
        &[diagonal, split],
        &[Observable::fiber_character(1, -1)],
        &family(cfg)?,
        tail(cfg)?,
        cfg.get("tol")?,
        cfg.get("starts")?,
        cfg.get("horizon")?,
    )?;
    let mut report = new_report("product-check", cfg);
    report.push("product-unique-ergodicity", &r);
    Ok(Outcome { report, table: None })
}

fn spectrum(cfg: &RunConfig) -> Result<Outcome> {
    let sys = system(cfg)?;
    let x = point(cfg, &sys, 1)?;
    let f = observable(cfg)?;
    let options = ScanOptions {
        threshold: cfg.optional("threshold")?,
        dyadic_depth: cfg.get("dyadic-depth")?,
        ..ScanOptions::default()
    };
    let s = eigenvalue_scan(sys.as_ref(), &f, &x, cfg.get("resolution")?, cfg.get("n")?, &options)?;
    let mut report = new_report("spectrum", cfg);
    report.push(
        "spectrum",
        &json!({
            "observable": s.observable,
            "n": s.n,
            "resolution": s.resolution,
            "threshold": s.threshold,
            "median": s.median,
            "off_peak_median": s.off_peak_median,
            "variance": s.variance,
            "parseval_excess": s.parseval_excess(),
            "peaks": s.peaks,
        }),
    );
    Ok(Outcome {
        table: Some(s.csv()),
        report,
    })
}

fn factor_map(cfg: &RunConfig) -> Result<Box<dyn FactorMap>> {
    let depth: u32 = cfg.get("factor-depth")?;
    Ok(match cfg.str("system") {
        "sturmian" => Box::new(SturmianFactor {
            alpha: rotation(cfg)?,
            depth: depth as u64,
        }),
        "toeplitz-ex5" => Box::new(ToeplitzFactor { depth }),
        "thue-morse" => Box::new(ThueMorseCode::new(depth as u64)?),
        "odometer" => Box::new(IdentityFactor {
            target: mequi::systems::odometer_system(),
        }),
        other => return Err(Error::invalid(format!("no explicit factor map for {other:?}"))),
    })
}

fn factor(cfg: &RunConfig) -> Result<Outcome> {
    let sys = system(cfg)?;
    let f = factor_map(cfg)?;
    let tolerance = match cfg.optional::<f64>("threshold")? {
        Some(t) => t,
        None => 2.0 * f.resolution(),
    };
    let horizon: u64 = cfg.get("horizon")?;
    let seed = cfg.seed()?;
    let fibers = fiber_statistics(
        f.as_ref(),
        &|s| sys.sample(s),
        tolerance,
        cfg.get("sample-size")?,
        seed,
        horizon,
    )?;
    let mut report = new_report("factor", cfg);
    report.push("fibers", &fibers);
    if let Ok(s) = sampler(cfg) {
        let pairs = deltas(cfg)?
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                let p = s.sample_pair(d, derive(seed, 1 << 32 | i as u64))?;
                Ok((p.x, p.y))
            })
            .collect::<Result<Vec<_>>>()?;
        report.push("continuity-fit", &continuity_fit(f.as_ref(), &pairs, horizon)?);
    }
    Ok(Outcome { report, table: None })
}

fn fullgroup(cfg: &RunConfig) -> Result<Outcome> {
    let e: FullGroupElement = cfg.str("element").parse()?;
    let g: FullGroupElement = cfg.str("compose-with").parse()?;
    let points: Vec<i64> = cfg.list("odometer-points")?;
    let at = |e: &FullGroupElement, n: i64| -> Result<Option<i64>> {
        Ok(apply_element(e, &OdometerPoint::from_integer(n))?.to_i64())
    };
    let (eg, ge) = (compose(&e, &g)?, compose(&g, &e)?);
    let rows = points
        .iter()
        .map(|&n| {
            Ok(json!({
                "theta": n,
                "e": at(&e, n)?,
                "e_after_g": at(&eg, n)?,
                "g_after_e": at(&ge, n)?,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let seed = cfg.seed()?;
    let pairs: Vec<(OdometerPoint, OdometerPoint)> = (0..1000u64)
        .map(|i| {
            (
                OdometerPoint::random(96, derive(seed, 2 * i)),
                OdometerPoint::random(96, derive(seed, 2 * i + 1)),
            )
        })
        .collect();
    let mut report = new_report("fullgroup", cfg);
    report.push(
        "element",
        &json!({
            "element": e.to_string(),
            "compose_with": g.to_string(),
            "inverse": inverse(&e)?.to_string(),
            "e_after_g": eg.to_string(),
            "g_after_e": ge.to_string(),
            "commute": eg == ge,
            "witnesses": rows,
        }),
    );
    report.push("isometry", &isometry_check(&e, &pairs, 96)?);
    Ok(Outcome { report, table: None })
}

/// Criteria 1..=12, then a rerun under a different worker count for 13.
pub fn accept(cfg: &RunConfig) -> Result<Outcome> {
    let params = SuiteParams::from_config(cfg)?;
    let checks = acceptance::run_core(&params);
    let here = rayon::current_num_threads();
    let other = if here == 1 { 2 } else { 1 };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(other)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let rerun = pool.install(|| acceptance::run_core(&params));
    let mut report = new_report("accept", cfg);
    report.checks = checks;
    report.checks.push(acceptance::determinism(&[to_json(&report.checks), to_json(&rerun)]));
    Ok(Outcome { report, table: None })
}

pub fn defaults(cfg: &RunConfig) -> Result<Outcome> {
    let mut report = new_report("defaults", cfg);
    let described: BTreeMap<&str, &str> = crate::config::DEFAULTS.iter().map(|(k, _, m)| (*k, *m)).collect();
    report.push("keys", &described);
    Ok(Outcome {
        report,
        table: Some(RunConfig::defaults_text()),
    })
}

pub fn run(command: &str, cfg: &RunConfig) -> Result<Outcome> {
    match command {
        "gen" => gen(cfg),
        "dfest" => dfest(cfg),
        "scan" => scan(cfg),
        "ue-test" => ue_test(cfg),
        "product-check" => product_check(cfg),
        "spectrum" => spectrum(cfg),
        "factor" => factor(cfg),
        "fullgroup" => fullgroup(cfg),
        "accept" => accept(cfg),
        "defaults" => defaults(cfg),
        other => Err(Error::invalid(format!("unknown subcommand {other:?}"))),
    }
}

/// Checks attached to a report for display.
pub fn check_lines(checks: &[Check]) -> String {
    checks.iter().map(|c| c.line() + "\n").collect()
}
