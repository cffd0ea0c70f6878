//! Besicovitch, Weyl, observable and `D^n` pseudometrics, modulus scans and
//! the diagnostics built on them.
//!
//! Every estimator evaluates one integrand table `t -> d(tx, ty)` over the
//! union of its windows and sums it in exact fixed point, so symmetry, the
//! domination chain `dn <= besicovitch <= weyl` and window-shift identities
//! hold bit for bit.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ergodic::{unique_ergodicity_test, Observable, UniqueErgodicityReport};
use crate::error::{Error, Result};
use crate::fixed::{Fixed, PrefixSums, FRAC_BITS};
use crate::group::{FoelnerFamily, GroupElement, Tail};
use crate::point::{pow2_neg, CirclePoint, OdometerPoint, Point, RotationNumber, SymbolicPoint};
use crate::rng;
use crate::systems::sturmian::sturmian_point;
use crate::systems::toeplitz::{toeplitz_point, BitStream, BitTail, ToeplitzParams};
use crate::systems::{act_z, System};

/// Per-term horizons are clamped here; finer terms vanish in fixed point.
pub const MAX_TERM_HORIZON: u64 = FRAC_BITS as u64;

const CHUNK: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Besicovitch,
    Weyl,
    Observable,
    Dn,
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EstimatorKind::Besicovitch => "besicovitch",
            EstimatorKind::Weyl => "weyl",
            EstimatorKind::Observable => "observable",
            EstimatorKind::Dn => "dn",
        };
        f.write_str(s)
    }
}

/// What is averaged along the windows.
#[derive(Debug, Clone)]
pub enum Integrand {
    /// The system metric with per-term horizon `min(L_n, MAX_TERM_HORIZON)`.
    Metric,
    /// `1[x_t != y_t]` on symbolic points.
    Hamming,
    /// `|f(tx) - f(ty)|`.
    Observable(Observable),
}

impl Integrand {
    fn label(&self) -> String {
        match self {
            Integrand::Metric => "metric".into(),
            Integrand::Hamming => "hamming".into(),
            Integrand::Observable(f) => format!("|f(tx)-f(ty)|, f={}", f.label()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudometricEstimate {
    pub value: f64,
    pub kind: EstimatorKind,
    pub tail: Tail,
    pub translate_budget: u64,
    /// Some term resolved only to its horizon.
    pub agreement_flagged: bool,
    /// Upper bound on the contribution of horizon truncation and rounding.
    pub slack: f64,
    /// Window index and start offset attaining the value.
    pub argmax: (usize, u64),
    pub provenance: String,
}

/// Parallel evaluation of `f` on `lo..lo+len`, in index order.
fn par_range<T: Send>(lo: i64, len: usize, f: impl Fn(i64) -> Result<T> + Sync) -> Result<Vec<T>> {
    let chunks: Vec<usize> = (0..len.div_ceil(CHUNK)).collect();
    let parts: Vec<Result<Vec<T>>> = chunks
        .par_iter()
        .map(|&c| {
            let a = c * CHUNK;
            let b = (a + CHUNK).min(len);
            (a..b).map(|i| f(lo + i as i64)).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(len);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Prefix sums of the integrand over `[lo, lo + len)` for one horizon cap.
#[derive(Clone)]
struct Table {
    lo: i64,
    sums: PrefixSums,
    flagged: bool,
}

impl Table {
    fn window_sum(&self, start: i64, len: u64) -> Fixed {
        let a = (start - self.lo) as usize;
        self.sums.range(a, a + len as usize)
    }
}

fn symbolic_pair<'a>(x: &'a Point, y: &'a Point) -> Option<(&'a SymbolicPoint, &'a SymbolicPoint)> {
    match (x, y) {
        (Point::Symbolic(a), Point::Symbolic(b)) => Some((a, b)),
        _ => None,
    }
}

/// Disagreement indicators of two symbolic points on `[lo, lo + len)`.
fn disagreements(x: &SymbolicPoint, y: &SymbolicPoint, lo: i64, len: usize) -> Result<Vec<bool>> {
    par_range(lo, len, |k| Ok(x.symbol(k)? != y.symbol(k)?))
}

/// Cantor-metric terms `d(sigma^t x, sigma^t y)` on `[lo, lo + len)`, one
/// table per horizon cap, from the distance to the nearest disagreement.
fn cantor_tables(x: &SymbolicPoint, y: &SymbolicPoint, lo: i64, len: usize, caps: &[u64]) -> Result<Vec<Table>> {
    let h = *caps.iter().max().expect("at least one cap") as i64;
    let diff = disagreements(x, y, lo - h, len + 2 * h as usize)?;
    let n = diff.len();
    let mut nearest = vec![u64::MAX; n];
    let mut last: Option<usize> = None;
    for i in 0..n {
        if diff[i] {
            last = Some(i);
        }
        if let Some(l) = last {
            nearest[i] = (i - l) as u64;
        }
    }
    let mut next: Option<usize> = None;
    for i in (0..n).rev() {
        if diff[i] {
            next = Some(i);
        }
        if let Some(r) = next {
            nearest[i] = nearest[i].min((r - i) as u64);
        }
    }
    let core = &nearest[h as usize..h as usize + len];
    Ok(caps
        .iter()
        .map(|&cap| {
            let flagged = core.iter().any(|&k| k > cap);
            let sums = PrefixSums::new(core.iter().map(|&k| Fixed::pow2_neg(k.min(cap + 1))));
            Table { lo, sums, flagged }
        })
        .collect())
}

fn integrand_tables(
    sys: &dyn System,
    x: &Point,
    y: &Point,
    integrand: &Integrand,
    lo: i64,
    len: usize,
    caps: &[u64],
) -> Result<Vec<Table>> {
    let shift_pair = if sys.is_shift() { symbolic_pair(x, y) } else { None };
    match integrand {
        Integrand::Metric => {
            if let Some((a, b)) = shift_pair {
                return cantor_tables(a, b, lo, len, caps);
            }
            caps.iter()
                .map(|&cap| {
                    let terms = par_range(lo, len, |t| {
                        let d = sys.distance(&act_z(sys, t, x)?, &act_z(sys, t, y)?, cap)?;
                        Ok((Fixed::from_f64(d.value), d.flagged))
                    })?;
                    Ok(Table {
                        lo,
                        flagged: terms.iter().any(|t| t.1),
                        sums: PrefixSums::new(terms.into_iter().map(|t| t.0)),
                    })
                })
                .collect()
        }
        Integrand::Hamming => {
            let (a, b) = symbolic_pair(x, y)
                .ok_or_else(|| Error::Mismatch("the Hamming integrand needs symbolic points".into()))?;
            let diff = disagreements(a, b, lo, len)?;
            let sums = PrefixSums::new(diff.into_iter().map(|d| Fixed((d as u128) << FRAC_BITS)));
            Ok(vec![Table { lo, sums, flagged: false }; caps.len()])
        }
        Integrand::Observable(f) => {
            let terms = par_range(lo, len, |t| {
                let (p, q) = match shift_pair {
                    Some((a, b)) => (Point::Symbolic(a.shift(t)), Point::Symbolic(b.shift(t))),
                    None => (act_z(sys, t, x)?, act_z(sys, t, y)?),
                };
                Ok(Fixed::from_f64((f.eval(&p)? - f.eval(&q)?).norm()))
            })?;
            let sums = PrefixSums::new(terms);
            Ok(vec![Table { lo, sums, flagged: false }; caps.len()])
        }
    }
}

/// Max over `n` in the tail and `s` in `[0, budget]` of the mean of the
/// integrand over `F_n + s`.
#[allow(clippy::too_many_arguments)]
fn estimate(
    sys: &dyn System,
    x: &Point,
    y: &Point,
    integrand: &Integrand,
    family: &FoelnerFamily,
    tail: Tail,
    budget: u64,
    kind: EstimatorKind,
) -> Result<PseudometricEstimate> {
    tail.check(family)?;
    if family.dim() != 1 || sys.group_dim() != 1 {
        return Err(Error::invalid("pseudometric estimators are implemented for Z"));
    }
    let windows: Vec<(usize, i64, u64)> = tail
        .indices()
        .map(|n| {
            let (a, l) = family.window(n)?.as_interval().expect("dimension checked");
            Ok((n, a, l))
        })
        .collect::<Result<_>>()?;
    let lo = windows.iter().map(|w| w.1).min().expect("nonempty tail");
    let hi = windows
        .iter()
        .map(|w| w.1 + w.2 as i64 + budget as i64)
        .max()
        .expect("nonempty tail");
    let cap_of = |l: u64| l.min(MAX_TERM_HORIZON);
    let mut caps: Vec<u64> = windows.iter().map(|w| cap_of(w.2)).collect();
    caps.sort_unstable();
    caps.dedup();
    let tables = integrand_tables(sys, x, y, integrand, lo, (hi - lo) as usize, &caps)?;
    let mut best = (0u128, windows[0].0, 0u64);
    let mut best_value = -1.0f64;
    let mut flagged = false;
    let mut min_cap = u64::MAX;
    for &(n, a, l) in &windows {
        let cap = cap_of(l);
        let table = &tables[caps.binary_search(&cap).expect("cap present")];
        flagged |= table.flagged;
        min_cap = min_cap.min(cap);
        for s in 0..=budget {
            // floor division keeps means monotone in the sums
            let mean = table.window_sum(a + s as i64, l).0 / l as u128;
            let v = Fixed(mean).to_f64();
            if v > best_value {
                best_value = v;
                best = (mean, n, s);
            }
        }
    }
    let truncation = if matches!(integrand, Integrand::Metric) && flagged {
        pow2_neg(min_cap + 1)
    } else {
        0.0
    };
    Ok(PseudometricEstimate {
        value: Fixed(best.0).to_f64(),
        kind,
        tail,
        translate_budget: budget,
        agreement_flagged: flagged,
        slack: truncation + 2f64.powi(-FRAC_BITS) + best_value * f64::EPSILON,
        argmax: (best.1, best.2),
        provenance: format!(
            "{}: x={}, y={}, integrand={}",
            sys.label(),
            x.describe(),
            y.describe(),
            integrand.label()
        ),
    })
}

/// `max_{n in tail} (1/|F_n|) sum_{t in F_n} d(tx, ty)`.
pub fn besicovitch_pseudometric(
    sys: &dyn System,
    x: &Point,
    y: &Point,
    family: &FoelnerFamily,
    tail: Tail,
) -> Result<PseudometricEstimate> {
    estimate(sys, x, y, &Integrand::Metric, family, tail, 0, EstimatorKind::Besicovitch)
}

/// Sup over window starts `s in [0, S]` of the Besicovitch terms; `None`
/// uses the largest window length in the tail.
pub fn weyl_pseudometric(
    sys: &dyn System,
    x: &Point,
    y: &Point,
    family: &FoelnerFamily,
    tail: Tail,
    translate_budget: Option<u64>,
) -> Result<PseudometricEstimate> {
    let s = resolve_budget(family, tail, translate_budget)?;
    estimate(sys, x, y, &Integrand::Metric, family, tail, s, EstimatorKind::Weyl)
}

/// The Weyl scheme with integrand `|f(tx) - f(ty)|`.
pub fn observable_pseudometric(
    sys: &dyn System,
    f: &Observable,
    x: &Point,
    y: &Point,
    family: &FoelnerFamily,
    tail: Tail,
    translate_budget: Option<u64>,
) -> Result<PseudometricEstimate> {
    let s = resolve_budget(family, tail, translate_budget)?;
    estimate(
        sys,
        x,
        y,
        &Integrand::Observable(f.clone()),
        family,
        tail,
        s,
        EstimatorKind::Observable,
    )
}

/// Disagreement density: the Weyl scheme with the Hamming integrand.
pub fn hamming_pseudometric(
    sys: &dyn System,
    x: &Point,
    y: &Point,
    family: &FoelnerFamily,
    tail: Tail,
    translate_budget: Option<u64>,
) -> Result<PseudometricEstimate> {
    let s = resolve_budget(family, tail, translate_budget)?;
    estimate(sys, x, y, &Integrand::Hamming, family, tail, s, EstimatorKind::Observable)
}

/// General entry point used by the scan and the command line.
#[allow(clippy::too_many_arguments)]
pub fn pseudometric(
    sys: &dyn System,
    integrand: &Integrand,
    x: &Point,
    y: &Point,
    family: &FoelnerFamily,
    tail: Tail,
    translate_budget: Option<u64>,
    kind: EstimatorKind,
) -> Result<PseudometricEstimate> {
    let s = match kind {
        EstimatorKind::Besicovitch | EstimatorKind::Dn => 0,
        _ => resolve_budget(family, tail, translate_budget)?,
    };
    estimate(sys, x, y, integrand, family, tail, s, kind)
}

fn resolve_budget(family: &FoelnerFamily, tail: Tail, budget: Option<u64>) -> Result<u64> {
    tail.check(family)?;
    match budget {
        Some(s) => Ok(s),
        None => Ok(family.window(tail.n_max)?.len()),
    }
}

/// `D^n(x, y) = 2^-n sum_{l < 2^n} d(sigma^l x, sigma^l y)` with Cantor
/// terms at horizon `2^n`.
pub fn dn_pseudometric(x: &SymbolicPoint, y: &SymbolicPoint, n: u32) -> Result<PseudometricEstimate> {
    if n > 40 {
        return Err(Error::invalid("D^n is evaluated for n <= 40"));
    }
    let sys = crate::systems::SubshiftSystem::new("dn", vec![x.clone()], 0)?;
    let family = FoelnerFamily::dyadic(n + 1, 1)?;
    estimate(
        &sys,
        &Point::Symbolic(x.clone()),
        &Point::Symbolic(y.clone()),
        &Integrand::Metric,
        &family,
        Tail::single(n as usize),
        0,
        EstimatorKind::Dn,
    )
}

/// A pair sampled at a requested distance scale.
#[derive(Debug, Clone)]
pub struct SampledPair {
    pub x: Point,
    pub y: Point,
    /// Distance at the sampler's scale; always below the requested delta.
    pub distance: f64,
}

/// Produces pairs closer than `delta` in the sampler's own scale.
pub trait PairSampler: Send + Sync {
    fn label(&self) -> String;
    fn sample_pair(&self, delta: f64, seed: u64) -> Result<SampledPair>;
}

const SAMPLE_ATTEMPTS: u64 = 32;

/// Sturmian fiber pairs: codings of phases `theta` and `theta + t` with
/// `t in [delta/2, delta)`, so the scale is circle distance.
pub struct SturmianFiberSampler {
    alpha: RotationNumber,
}

impl SturmianFiberSampler {
    pub fn new(alpha: RotationNumber) -> Self {
        SturmianFiberSampler { alpha }
    }
}

impl PairSampler for SturmianFiberSampler {
    fn label(&self) -> String {
        format!("sturmian-fiber(alpha={})", self.alpha.label)
    }

    fn sample_pair(&self, delta: f64, seed: u64) -> Result<SampledPair> {
        if !(delta > 0.0 && delta <= 0.5) {
            return Err(Error::invalid(format!("circle scale {delta} outside (0, 1/2]")));
        }
        for attempt in 0..SAMPLE_ATTEMPTS {
            let mut r = rng::rng(rng::derive(seed, attempt));
            let theta = CirclePoint(r.gen());
            let t = r.gen_range(delta / 2.0..delta);
            let other = theta + CirclePoint::from_f64(t);
            let (Ok(x), Ok(y)) = (sturmian_point(&self.alpha, theta), sturmian_point(&self.alpha, other)) else {
                continue;
            };
            return Ok(SampledPair {
                x: Point::Symbolic(x),
                y: Point::Symbolic(y),
                distance: crate::point::circle_metric(theta, other),
            });
        }
        Err(Error::SamplerExhausted(format!("no admissible Sturmian phases at scale {delta}")))
    }
}

/// Smallest `r` with `2^-r <= delta`.
fn radius_for(delta: f64) -> Result<u64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::invalid(format!("Cantor scale {delta} outside (0, 1]")));
    }
    Ok((-delta.log2()).ceil().max(0.0) as u64)
}

/// Pairs `(sigma^i x, sigma^j x)` whose central words of radius `r` agree,
/// found in one precomputed orbit segment. Cantor distance `< 2^-r <= delta`.
pub struct WordSearchSampler {
    label: String,
    base: SymbolicPoint,
    segment: Vec<u8>,
}

impl WordSearchSampler {
    pub fn new(label: &str, base: SymbolicPoint, segment_len: usize) -> Result<Self> {
        let segment = (0..segment_len as i64).map(|k| base.symbol(k)).collect::<Result<_>>()?;
        Ok(WordSearchSampler {
            label: label.to_string(),
            base,
            segment,
        })
    }
}

impl PairSampler for WordSearchSampler {
    fn label(&self) -> String {
        format!("word-search({}, segment={})", self.label, self.segment.len())
    }

    fn sample_pair(&self, delta: f64, seed: u64) -> Result<SampledPair> {
        let r = radius_for(delta)? as usize;
        let n = self.segment.len();
        if n < 4 * (2 * r + 1) {
            return Err(Error::SamplerExhausted(format!("segment too short for radius {r}")));
        }
        let w = 2 * r + 1;
        let mut rg = rng::rng(seed);
        for _ in 0..SAMPLE_ATTEMPTS {
            let i = rg.gen_range(0..n / 2);
            let word = &self.segment[i..i + w];
            if let Some(off) = (i + 1..=n - w).find(|&j| &self.segment[j..j + w] == word) {
                let ci = (i + r) as i64;
                let cj = (off + r) as i64;
                return Ok(SampledPair {
                    x: Point::Symbolic(self.base.shift(ci)),
                    y: Point::Symbolic(self.base.shift(cj)),
                    distance: pow2_neg(r as u64 + 1),
                });
            }
        }
        Err(Error::SamplerExhausted(format!(
            "no repeated central word of radius {r} in a segment of length {n}"
        )))
    }
}

/// Toeplitz pairs sharing hole path and fills through level `L`, with the
/// level-`L` hole class kept at distance `>= 2^(L-2)` from the origin.
pub struct ToeplitzSkeletonSampler;

impl PairSampler for ToeplitzSkeletonSampler {
    fn label(&self) -> String {
        "toeplitz-skeleton".into()
    }

    fn sample_pair(&self, delta: f64, seed: u64) -> Result<SampledPair> {
        let r = radius_for(delta)?;
        // agreement radius 2^(L-2) - 1 must exceed r
        let mut level = 3u64;
        while (1u64 << (level - 2)) <= r + 1 {
            level += 1;
        }
        if level > 60 {
            return Err(Error::SamplerExhausted(format!("scale {delta} needs skeleton depth {level}")));
        }
        let (x, y) = shared_skeleton_pair(level as usize, seed)?;
        let d = crate::point::cantor_metric(&x, &y, r + 1)?;
        if d.value >= delta {
            return Err(Error::SamplerExhausted(format!("skeleton pair at depth {level} not within {delta}")));
        }
        Ok(SampledPair {
            x: Point::Symbolic(x),
            y: Point::Symbolic(y),
            distance: d.value,
        })
    }
}

/// Two pseudo-random Toeplitz members that share hole digits and fills for
/// levels `1..=level`; the shared hole residue has top digits `0, 1`.
pub fn shared_skeleton_pair(level: usize, seed: u64) -> Result<(SymbolicPoint, SymbolicPoint)> {
    if level < 2 {
        return Err(Error::invalid("skeleton depth must be at least 2"));
    }
    let mut r = rng::rng(seed);
    let mut hole: Vec<u8> = (0..level).map(|_| r.gen_range(0..2)).collect();
    hole[level - 2] = 0;
    hole[level - 1] = 1;
    let fills: Vec<u8> = (0..level).map(|_| r.gen_range(0..2)).collect();
    let member = |stream: u64| ToeplitzParams {
        hole: BitStream::new(hole.clone(), BitTail::Hashed(rng::derive(seed, 2 * stream))),
        fills: BitStream::new(fills.clone(), BitTail::Hashed(rng::derive(seed, 2 * stream + 1))),
        limit_value: None,
    };
    Ok((toeplitz_point(member(1)), toeplitz_point(member(2))))
}

/// Odometer pairs `(theta, theta + 2^k u)` with `u` odd: distance exactly `2^-k < delta`.
pub struct OdometerSampler {
    pub depth: u32,
}

impl PairSampler for OdometerSampler {
    fn label(&self) -> String {
        format!("odometer(depth={})", self.depth)
    }

    fn sample_pair(&self, delta: f64, seed: u64) -> Result<SampledPair> {
        let k = radius_for(delta)? as u32 + 1;
        if k >= 62 || k >= self.depth {
            return Err(Error::SamplerExhausted(format!("odometer scale {delta} below sample depth")));
        }
        let mut r = rng::rng(seed);
        let theta = OdometerPoint::random(self.depth, r.gen());
        let u: i64 = r.gen_range(0..1i64 << 20) * 2 + 1;
        let other = theta.add_integer(u << k);
        Ok(SampledPair {
            x: Point::Odometer(theta),
            y: Point::Odometer(other),
            distance: pow2_neg(k as u64),
        })
    }
}

/// Circle pairs `(theta, theta + t)`, `t in [delta/2, delta)`.
pub struct CircleSampler;

impl PairSampler for CircleSampler {
    fn label(&self) -> String {
        "circle".into()
    }

    fn sample_pair(&self, delta: f64, seed: u64) -> Result<SampledPair> {
        if !(delta > 0.0 && delta <= 0.5) {
            return Err(Error::invalid(format!("circle scale {delta} outside (0, 1/2]")));
        }
        let mut r = rng::rng(seed);
        let theta = CirclePoint(r.gen());
        let other = theta + CirclePoint::from_f64(r.gen_range(delta / 2.0..delta));
        Ok(SampledPair {
            x: Point::Circle(theta),
            y: Point::Circle(other),
            distance: crate::point::circle_metric(theta, other),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusRow {
    pub delta: f64,
    pub pair_count: usize,
    pub max_d: f64,
    pub mean_d: f64,
    pub flagged_fraction: f64,
}

/// Empirical modulus of mean equicontinuity; data only, never a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusTable {
    pub sampler: String,
    pub integrand: String,
    pub tail: Tail,
    pub translate_budget: u64,
    pub rows: Vec<ModulusRow>,
}

impl ModulusTable {
    pub fn csv(&self) -> String {
        let mut out = String::from("delta,pairs,max_D,mean_D,flagged_fraction\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:.16e},{},{:.16e},{:.16e},{:.16e}\n",
                r.delta, r.pair_count, r.max_d, r.mean_d, r.flagged_fraction
            ));
        }
        out
    }

    /// `max_D` of the first row over `max_D` of the last row.
    pub fn decay_factor(&self) -> f64 {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) if b.max_d > 0.0 => a.max_d / b.max_d,
            (Some(_), Some(_)) => f64::INFINITY,
            _ => 1.0,
        }
    }
}

/// Weyl estimates of sampled pairs at each scale of a strictly decreasing grid.
#[allow(clippy::too_many_arguments)]
pub fn mean_equi_scan(
    sys: &dyn System,
    sampler: &dyn PairSampler,
    deltas: &[f64],
    integrand: &Integrand,
    family: &FoelnerFamily,
    tail: Tail,
    translate_budget: Option<u64>,
    pairs_per_delta: usize,
    seed: u64,
) -> Result<ModulusTable> {
    if deltas.is_empty() || deltas.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Less)) {
        return Err(Error::invalid("delta grid must be nonempty and strictly decreasing"));
    }
    if pairs_per_delta == 0 {
        return Err(Error::invalid("need at least one pair per delta"));
    }
    let budget = resolve_budget(family, tail, translate_budget)?;
    let mut rows = Vec::with_capacity(deltas.len());
    for (row, &delta) in deltas.iter().enumerate() {
        let estimates: Vec<Result<PseudometricEstimate>> = (0..pairs_per_delta)
            .into_par_iter()
            .map(|i| {
                let pair = sampler.sample_pair(delta, rng::derive(seed, ((row as u64) << 32) | i as u64))?;
                estimate(sys, &pair.x, &pair.y, integrand, family, tail, budget, EstimatorKind::Weyl)
            })
            .collect();
        let estimates = estimates.into_iter().collect::<Result<Vec<_>>>()?;
        let max_d = estimates.iter().map(|e| e.value).fold(0.0, f64::max);
        let mean_d = estimates.iter().map(|e| e.value).sum::<f64>() / estimates.len() as f64;
        let flagged = estimates.iter().filter(|e| e.agreement_flagged).count();
        rows.push(ModulusRow {
            delta,
            pair_count: estimates.len(),
            max_d,
            mean_d,
            flagged_fraction: flagged as f64 / estimates.len() as f64,
        });
    }
    Ok(ModulusTable {
        sampler: sampler.label(),
        integrand: integrand.label(),
        tail,
        translate_budget: budget,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub g: i64,
    pub discrepancy: f64,
    /// `2 |g| diam / L_{n_min}` with diameter 1.
    pub bound: f64,
    pub before: f64,
    pub after: f64,
}

/// `|W(gx, gy) - W(x, y)|` for the Weyl scheme with identical parameters.
#[allow(clippy::too_many_arguments)]
pub fn invariance_check(
    sys: &dyn System,
    x: &Point,
    y: &Point,
    g: i64,
    integrand: &Integrand,
    family: &FoelnerFamily,
    tail: Tail,
    translate_budget: Option<u64>,
) -> Result<InvarianceReport> {
    let before = pseudometric(sys, integrand, x, y, family, tail, translate_budget, EstimatorKind::Weyl)?;
    let gx = sys.act(&GroupElement::z(g), x)?;
    let gy = sys.act(&GroupElement::z(g), y)?;
    let after = pseudometric(sys, integrand, &gx, &gy, family, tail, translate_budget, EstimatorKind::Weyl)?;
    let l_min = family.window(tail.n_min)?.len();
    Ok(InvarianceReport {
        g,
        discrepancy: (after.value - before.value).abs(),
        bound: 2.0 * g.unsigned_abs() as f64 / l_min as f64,
        before: before.value,
        after: after.value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityRow {
    pub i: usize,
    pub j: usize,
    pub input_distance: f64,
    /// Max over observables of the difference of the averages.
    pub measure_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductUeReport {
    pub verdicts: Vec<UniqueErgodicityReport>,
    /// Averages along each pair's own orbit, per observable.
    pub measures: Vec<Vec<[f64; 2]>>,
    pub continuity: Vec<ContinuityRow>,
}

/// Runs the unique-ergodicity test on each product point from `starts`
/// start points `k L_{n_min}` along its orbit, then compares the resulting
/// measure estimates of all pairs with their input distances.
#[allow(clippy::too_many_arguments)]
pub fn product_pointwise_ue_check(
    sys: &dyn System,
    pairs: &[Point],
    observables: &[Observable],
    family: &FoelnerFamily,
    tail: Tail,
    tol: f64,
    starts: usize,
    horizon: u64,
) -> Result<ProductUeReport> {
    if starts < 2 {
        return Err(Error::invalid("need at least two start points per orbit"));
    }
    tail.check(family)?;
    let step = family.window(tail.n_min)?.len() as i64;
    let mut verdicts = Vec::with_capacity(pairs.len());
    let mut measures: Vec<Vec<[f64; 2]>> = Vec::with_capacity(pairs.len());
    for p in pairs {
        let points = (0..starts)
            .map(|k| act_z(sys, k as i64 * step, p))
            .collect::<Result<Vec<_>>>()?;
        let report = unique_ergodicity_test(sys, observables, &points, family, tail, tol)?;
        measures.push(report.observables.iter().map(|o| o.finals[0]).collect());
        verdicts.push(report);
    }
    let mut continuity = Vec::new();
    for i in 0..pairs.len() {
        for j in i + 1..pairs.len() {
            let input_distance = sys.distance(&pairs[i], &pairs[j], horizon)?.value;
            let measure_distance = measures[i]
                .iter()
                .zip(&measures[j])
                .map(|(a, b)| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt())
                .fold(0.0, f64::max);
            continuity.push(ContinuityRow {
                i,
                j,
                input_distance,
                measure_distance,
            });
        }
    }
    Ok(ProductUeReport {
        verdicts,
        measures,
        continuity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::{modify, Periodic};
    use crate::systems::{catalog, odometer_system, SturmianSystem};

    fn zero() -> SymbolicPoint {
        SymbolicPoint::from_source(Periodic::constant(2, 0).unwrap())
    }

    fn shift_sys() -> crate::systems::SubshiftSystem {
        crate::systems::SubshiftSystem::new("test", vec![zero()], 0).unwrap()
    }

    #[test]
    fn single_disagreement_two_term_average() {
        let x = zero();
        let y = modify(&x, &[(0, 1)]).unwrap();
        let fam = FoelnerFamily::dyadic(4, 1).unwrap();
        let (px, py) = (Point::Symbolic(x.clone()), Point::Symbolic(y.clone()));
        let b = besicovitch_pseudometric(&shift_sys(), &px, &py, &fam, Tail::single(1)).unwrap();
        assert_eq!(b.value, 0.75);
        assert_eq!(dn_pseudometric(&x, &y, 1).unwrap().value, 0.75);
    }

    #[test]
    fn identical_points_are_flagged_near_zero() {
        let x = Point::Symbolic(zero());
        let fam = FoelnerFamily::dyadic(8, 1).unwrap();
        for e in [
            besicovitch_pseudometric(&shift_sys(), &x, &x, &fam, Tail::new(3, 7).unwrap()).unwrap(),
            weyl_pseudometric(&shift_sys(), &x, &x, &fam, Tail::new(3, 7).unwrap(), None).unwrap(),
        ] {
            assert!(e.agreement_flagged);
            assert!(e.value <= pow2_neg(9));
        }
    }

    #[test]
    fn complement_pair_has_full_density() {
        let sys = catalog::thue_morse(0).unwrap();
        let x = sys.sample(0).unwrap();
        let y = Point::Symbolic(crate::point::complement(x.as_symbolic().unwrap()));
        let fam = FoelnerFamily::dyadic(12, 1).unwrap();
        let tail = Tail::new(8, 11).unwrap();
        assert_eq!(weyl_pseudometric(sys.as_ref(), &x, &y, &fam, tail, None).unwrap().value, 1.0);
        assert_eq!(hamming_pseudometric(sys.as_ref(), &x, &y, &fam, tail, None).unwrap().value, 1.0);
        let f = Observable::constant(num_complex::Complex64::new(2.0, 0.0));
        assert_eq!(observable_pseudometric(sys.as_ref(), &f, &x, &y, &fam, tail, None).unwrap().value, 0.0);
    }

    #[test]
    fn sturmian_disagreement_density_is_twice_the_phase_gap() {
        let alpha = RotationNumber::golden_default();
        let sys = SturmianSystem::new(alpha.clone());
        let fam = FoelnerFamily::geometric(10, 6).unwrap();
        let t = 0.01;
        let x = Point::Symbolic(sturmian_point(&alpha, CirclePoint::from_f64(0.1)).unwrap());
        let y = Point::Symbolic(sturmian_point(&alpha, CirclePoint::from_f64(0.1 + t)).unwrap());
        let e = hamming_pseudometric(&sys, &x, &y, &fam, Tail::single(5), Some(100)).unwrap();
        assert!((e.value - 2.0 * t).abs() < 2e-3, "{}", e.value);
    }

    #[test]
    fn domination_chain_is_exact() {
        let sys = catalog::thue_morse(1000).unwrap();
        let fam = FoelnerFamily::dyadic(10, 1).unwrap();
        for seed in 0..20 {
            let x = sys.sample(seed).unwrap();
            let y = sys.sample(seed + 100).unwrap();
            let tail = Tail::new(4, 9).unwrap();
            let b = besicovitch_pseudometric(sys.as_ref(), &x, &y, &fam, tail).unwrap();
            let w = weyl_pseudometric(sys.as_ref(), &x, &y, &fam, tail, Some(64)).unwrap();
            let d = dn_pseudometric(x.as_symbolic().unwrap(), y.as_symbolic().unwrap(), 6).unwrap();
            assert!(d.value <= b.value && b.value <= w.value);
            let w2 = weyl_pseudometric(sys.as_ref(), &y, &x, &fam, tail, Some(64)).unwrap();
            assert_eq!(w.value, w2.value);
        }
    }

    #[test]
    fn odometer_weyl_equals_distance() {
        let sys = odometer_system();
        let sampler = OdometerSampler { depth: 96 };
        let fam = FoelnerFamily::dyadic(10, 1).unwrap();
        for seed in 0..5 {
            let p = sampler.sample_pair(pow2_neg(5), seed).unwrap();
            let w = weyl_pseudometric(sys.as_ref(), &p.x, &p.y, &fam, Tail::new(6, 9).unwrap(), None).unwrap();
            assert_eq!(w.value, p.distance);
            let inv = invariance_check(sys.as_ref(), &p.x, &p.y, 37, &Integrand::Metric, &fam, Tail::new(6, 9).unwrap(), None)
                .unwrap();
            assert_eq!(inv.discrepancy, 0.0);
        }
    }

    #[test]
    fn word_search_pairs_agree_on_the_radius() {
        let sys = catalog::thue_morse(0).unwrap();
        let base = sys.sample(0).unwrap().as_symbolic().unwrap().clone();
        let sampler = WordSearchSampler::new("thue-morse", base, 1 << 14).unwrap();
        let p = sampler.sample_pair(pow2_neg(20), 3).unwrap();
        let d = crate::point::cantor_metric(p.x.as_symbolic().unwrap(), p.y.as_symbolic().unwrap(), 40).unwrap();
        assert!(d.value < pow2_neg(20));
    }

    #[test]
    fn toeplitz_skeleton_pairs_are_close() {
        for seed in 0..10 {
            let p = ToeplitzSkeletonSampler.sample_pair(pow2_neg(12), seed).unwrap();
            assert!(p.distance < pow2_neg(12));
        }
    }

    #[test]
    fn scan_rejects_unsorted_grids() {
        let sys = odometer_system();
        let fam = FoelnerFamily::dyadic(6, 1).unwrap();
        let r = mean_equi_scan(
            sys.as_ref(),
            &OdometerSampler { depth: 64 },
            &[0.1, 0.2],
            &Integrand::Metric,
            &fam,
            Tail::single(5),
            None,
            2,
            0,
        );
        assert!(r.is_err());
    }

    #[test]
    fn odometer_scan_is_bounded_by_delta() {
        let sys = odometer_system();
        let fam = FoelnerFamily::dyadic(8, 1).unwrap();
        let deltas: Vec<f64> = (2..8).map(pow2_neg).collect();
        let t = mean_equi_scan(
            sys.as_ref(),
            &OdometerSampler { depth: 64 },
            &deltas,
            &Integrand::Metric,
            &fam,
            Tail::new(5, 7).unwrap(),
            None,
            4,
            9,
        )
        .unwrap();
        for r in &t.rows {
            assert!(r.max_d <= r.delta);
        }
        assert!(t.csv().starts_with("delta,pairs,max_D,mean_D,flagged_fraction\n"));
    }
}
