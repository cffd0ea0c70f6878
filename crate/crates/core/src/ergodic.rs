//! Birkhoff averages along Følner windows, empirical cylinder measures, and
//! unique-ergodicity and generic-point tests.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{FoelnerFamily, GroupElement, Tail, Window};
use crate::point::{Point, SymbolicPoint};
use crate::systems::System;

/// Terms per partial sum; partial sums are combined in index order, so the
/// result does not depend on the number of worker threads.
const CHUNK: u64 = 1 << 14;

type EvalFn = dyn Fn(&Point) -> Result<Complex64> + Send + Sync;

/// A bounded continuous function `X -> C`. The bound is declared, not inspected.
#[derive(Clone)]
pub struct Observable {
    label: String,
    bound: f64,
    eval: Arc<EvalFn>,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Observable({}, |f| <= {})", self.label, self.bound)
    }
}

impl Observable {
    pub fn new<F>(label: &str, bound: f64, eval: F) -> Self
    where
        F: Fn(&Point) -> Result<Complex64> + Send + Sync + 'static,
    {
        Observable {
            label: label.to_string(),
            bound,
            eval: Arc::new(eval),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    #[inline]
    pub fn eval(&self, p: &Point) -> Result<Complex64> {
        (self.eval)(p)
    }

    pub fn constant(c: Complex64) -> Self {
        Observable::new(&format!("const({c})"), c.norm(), move |_| Ok(c))
    }

    /// `x_0` as a real number.
    pub fn coordinate() -> Self {
        Observable::new("x0", 35.0, |p| Ok(Complex64::new(p.as_symbolic()?.symbol(0)? as f64, 0.0)))
    }

    /// `1[x_0 = s]`.
    pub fn symbol_indicator(s: u8) -> Self {
        Observable::new(&format!("1[x0={s}]"), 1.0, move |p| {
            Ok(Complex64::new((p.as_symbolic()?.symbol(0)? == s) as u8 as f64, 0.0))
        })
    }

    /// Indicator of the cylinder `x_{offset..offset+len} = word`.
    pub fn cylinder(offset: i64, word: Vec<u8>) -> Self {
        let text: String = word.iter().map(|b| char::from(b'0' + b)).collect();
        Observable::new(&format!("[{text}]@{offset}"), 1.0, move |p| {
            let x = p.as_symbolic()?;
            for (i, &s) in word.iter().enumerate() {
                if x.symbol(offset + i as i64)? != s {
                    return Ok(Complex64::new(0.0, 0.0));
                }
            }
            Ok(Complex64::new(1.0, 0.0))
        })
    }

    /// `(-1)^{x_0}` on a binary alphabet.
    pub fn sign() -> Self {
        Observable::new("(-1)^x0", 1.0, |p| {
            let s = p.as_symbolic()?.symbol(0)?;
            Ok(Complex64::new(if s == 0 { 1.0 } else { -1.0 }, 0.0))
        })
    }

    /// `x_0 - mean`.
    pub fn centered_coordinate(mean: f64) -> Self {
        let bound = mean.abs().max((1.0 - mean).abs());
        Observable::new(&format!("x0-{mean}"), bound, move |p| {
            Ok(Complex64::new(p.as_symbolic()?.symbol(0)? as f64 - mean, 0.0))
        })
    }

    /// `e^{2 pi i k theta}` on circle points.
    pub fn character(k: i64) -> Self {
        Observable::new(&format!("e(k={k})"), 1.0, move |p| {
            let theta = p.as_circle()?;
            Ok(Complex64::cis(TAU * theta.times(k).phase()))
        })
    }

    /// Indicator of the half-open arc `[lo, hi)`, `0 <= lo < hi <= 1`.
    pub fn arc_indicator(lo: f64, hi: f64) -> Self {
        Observable::new(&format!("1[{lo},{hi})"), 1.0, move |p| {
            let t = p.as_circle()?.phase();
            Ok(Complex64::new((t >= lo && t < hi) as u8 as f64, 0.0))
        })
    }

    /// `f` evaluated on the left or right component of a product point.
    pub fn on_component(f: &Observable, right: bool) -> Self {
        let inner = f.clone();
        let side = if right { "R" } else { "L" };
        Observable::new(&format!("{side}:{}", f.label), f.bound, move |p| {
            let (a, b) = p.as_product()?;
            inner.eval(if right { b } else { a })
        })
    }

    /// `e^{2 pi i (k1 theta_1 + k2 theta_2)}` on pairs of skew-product points
    /// `((x1, theta_1), (x2, theta_2))`.
    pub fn fiber_character(k1: i64, k2: i64) -> Self {
        Observable::new(&format!("e(theta1*{k1}+theta2*{k2})"), 1.0, move |p| {
            let (a, b) = p.as_product()?;
            let t1 = a.as_product()?.1.as_circle()?;
            let t2 = b.as_product()?.1.as_circle()?;
            let phase = t1.times(k1) + t2.times(k2);
            Ok(Complex64::cis(TAU * phase.phase()))
        })
    }

    /// `a f + b g`.
    pub fn affine(a: f64, f: &Observable, b: f64, g: &Observable) -> Self {
        let (f2, g2) = (f.clone(), g.clone());
        Observable::new(
            &format!("{a}*{}+{b}*{}", f.label, g.label),
            a.abs() * f.bound + b.abs() * g.bound,
            move |p| Ok(f2.eval(p)? * a + g2.eval(p)? * b),
        )
    }
}

/// Sum of `f(g x)` over the window, reduced chunkwise in index order.
fn window_sum(sys: &dyn System, f: &Observable, x: &Point, window: &Window) -> Result<Complex64> {
    if let Some((start, len)) = window.as_interval() {
        let chunks: Vec<u64> = (0..len.div_ceil(CHUNK)).collect();
        let partial: Vec<Result<Complex64>> = chunks
            .par_iter()
            .map(|&c| {
                let lo = c * CHUNK;
                let hi = (lo + CHUNK).min(len);
                let mut acc = Complex64::new(0.0, 0.0);
                for i in lo..hi {
                    let g = GroupElement::z(start + i as i64);
                    acc += f.eval(&sys.act(&g, x)?)?;
                }
                Ok(acc)
            })
            .collect();
        let mut total = Complex64::new(0.0, 0.0);
        for p in partial {
            total += p?;
        }
        Ok(total)
    } else {
        let mut total = Complex64::new(0.0, 0.0);
        for g in window.elements() {
            total += f.eval(&sys.act(&g, x)?)?;
        }
        Ok(total)
    }
}

/// `f(t x)` for `t in [start, start + len)`, in order.
pub fn orbit_values(sys: &dyn System, f: &Observable, x: &Point, start: i64, len: u64) -> Result<Vec<Complex64>> {
    let shift = match x {
        Point::Symbolic(s) if sys.is_shift() => Some(s),
        _ => None,
    };
    let chunks: Vec<u64> = (0..len.div_ceil(CHUNK)).collect();
    let parts: Vec<Result<Vec<Complex64>>> = chunks
        .par_iter()
        .map(|&c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(len);
            (lo..hi)
                .map(|i| {
                    let t = start + i as i64;
                    match shift {
                        Some(s) => f.eval(&Point::Symbolic(s.shift(t))),
                        None => f.eval(&sys.act(&GroupElement::z(t), x)?),
                    }
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(len as usize);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// `A(F, f)(x) = (1/|F|) sum_{t in F} f(t x)`.
pub fn birkhoff_average(
    sys: &dyn System,
    f: &Observable,
    x: &Point,
    window: &Window,
) -> Result<Complex64> {
    if window.dim() != sys.group_dim() {
        return Err(Error::Mismatch(format!(
            "dimension-{} window for a dimension-{} action",
            window.dim(),
            sys.group_dim()
        )));
    }
    Ok(window_sum(sys, f, x, window)? / window.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub n: usize,
    pub window_start: i64,
    pub window_len: u64,
    pub value_re: f64,
    pub value_im: f64,
}

impl TracePoint {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.value_re, self.value_im)
    }
}

/// Averages `A_n` over a tail of the family; limsup and liminf are taken on
/// the real part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageTrace {
    pub observable: String,
    pub tail: Tail,
    pub values: Vec<TracePoint>,
    pub limsup_est: f64,
    pub liminf_est: f64,
}

impl AverageTrace {
    /// `max |A_n - A_m|` over the tail.
    pub fn spread(&self) -> f64 {
        let mut s: f64 = 0.0;
        for a in &self.values {
            for b in &self.values {
                s = s.max((a.value() - b.value()).norm());
            }
        }
        s
    }

    pub fn last(&self) -> Complex64 {
        self.values.last().map(|t| t.value()).unwrap_or_default()
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("n,window_start,window_len,value_re,value_im\n");
        for t in &self.values {
            out.push_str(&format!(
                "{},{},{},{:.16e},{:.16e}\n",
                t.n, t.window_start, t.window_len, t.value_re, t.value_im
            ));
        }
        out
    }
}

pub fn average_trace(
    sys: &dyn System,
    f: &Observable,
    x: &Point,
    family: &FoelnerFamily,
    tail: Tail,
) -> Result<AverageTrace> {
    tail.check(family)?;
    let windows = tail.indices().map(|n| family.window(n)).collect::<Result<Vec<_>>>()?;
    let shared = shared_chunk_sums(sys, f, x, &windows)?;
    let mut values = Vec::with_capacity(windows.len());
    for (n, w) in tail.indices().zip(windows) {
        let v = match &shared {
            Some(partial) => {
                let k = (w.len() / CHUNK) as usize;
                partial[..k].iter().fold(Complex64::new(0.0, 0.0), |acc, p| acc + p) / w.len() as f64
            }
            None => birkhoff_average(sys, f, x, w)?,
        };
        let start = w.start().coords()[0];
        values.push(TracePoint {
            n,
            window_start: start,
            window_len: w.len(),
            value_re: v.re,
            value_im: v.im,
        });
    }
    let limsup_est = values.iter().map(|t| t.value_re).fold(f64::NEG_INFINITY, f64::max);
    let liminf_est = values.iter().map(|t| t.value_re).fold(f64::INFINITY, f64::min);
    Ok(AverageTrace {
        observable: f.label().to_string(),
        tail,
        values,
        limsup_est,
        liminf_est,
    })
}

/// Chunk sums of the longest window when every window is an interval from
/// a common start with length a multiple of the chunk size; prefix totals
/// then coincide with [`birkhoff_average`] bit for bit.
fn shared_chunk_sums(sys: &dyn System, f: &Observable, x: &Point, windows: &[&Window]) -> Result<Option<Vec<Complex64>>> {
    if sys.group_dim() != 1 {
        return Ok(None);
    }
    let intervals: Option<Vec<(i64, u64)>> = windows.iter().map(|w| w.as_interval()).collect();
    let Some(intervals) = intervals else {
        return Ok(None);
    };
    let start = intervals[0].0;
    if intervals.len() < 2 || intervals.iter().any(|&(s, l)| s != start || l % CHUNK != 0) {
        return Ok(None);
    }
    let longest = intervals.iter().map(|&(_, l)| l).max().unwrap_or(0);
    let partial = (0..longest / CHUNK)
        .into_par_iter()
        .map(|c| {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in c * CHUNK..(c + 1) * CHUNK {
                acc += f.eval(&sys.act(&GroupElement::z(start + i as i64), x)?)?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(partial))
}

type LetterFn<'a> = Box<dyn Fn(i64) -> Result<u16> + Sync + 'a>;

/// Symbols of a symbolic point or of a product of two symbolic points,
/// read as one alphabet.
fn letter_reader(x: &Point) -> Result<(LetterFn<'_>, u16)> {
    match x {
        Point::Symbolic(s) => Ok((Box::new(move |k| Ok(s.symbol(k)? as u16)), s.alphabet_size() as u16)),
        Point::Product(a, b) => {
            let (a, b) = (a.as_symbolic()?, b.as_symbolic()?);
            let nb = b.alphabet_size() as u16;
            Ok((
                Box::new(move |k| Ok(a.symbol(k)? as u16 * nb + b.symbol(k)? as u16)),
                a.alphabet_size() as u16 * nb,
            ))
        }
        other => Err(Error::Mismatch(format!(
            "cylinder measures need symbolic points, got {}",
            other.kind()
        ))),
    }
}

/// Frequencies of centered words of length `2j + 1`, `j = 0..=depth`,
/// along shift positions of a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub depth: usize,
    pub horizon: u64,
    pub window_start: i64,
    pub alphabet: u16,
    /// `counts[j][word]`; frequencies are `count / horizon`.
    pub counts: Vec<BTreeMap<Vec<u16>, u64>>,
}

impl EmpiricalMeasure {
    pub fn frequency(&self, word: &[u16]) -> f64 {
        let j = word.len() / 2;
        if word.len().is_multiple_of(2) || j > self.depth {
            return 0.0;
        }
        self.counts[j].get(word).copied().unwrap_or(0) as f64 / self.horizon as f64
    }

    /// Sums the depth-`j` table over its outermost coordinates.
    pub fn marginal(&self, j: usize) -> BTreeMap<Vec<u16>, u64> {
        let mut out = BTreeMap::new();
        for (w, &c) in &self.counts[j] {
            *out.entry(w[1..w.len() - 1].to_vec()).or_insert(0) += c;
        }
        out
    }
}

pub fn empirical_cylinder_measure(x: &Point, depth: usize, horizon: u64) -> Result<EmpiricalMeasure> {
    empirical_cylinder_measure_on(x, depth, &Window::interval(0, horizon)?)
}

/// Cylinder frequencies over the positions of an interval window.
pub fn empirical_cylinder_measure_on(x: &Point, depth: usize, window: &Window) -> Result<EmpiricalMeasure> {
    let (start, len) = window
        .as_interval()
        .ok_or_else(|| Error::invalid("cylinder measures use interval windows"))?;
    let (read, alphabet) = letter_reader(x)?;
    let d = depth as i64;
    let span = len as i64 + 2 * d;
    let letters: Vec<u16> = (0..span).map(|i| read(start - d + i)).collect::<Result<_>>()?;
    let mut tables: Vec<HashMap<&[u16], u64>> = vec![HashMap::new(); depth + 1];
    for t in 0..len as usize {
        let center = t + depth;
        for (j, table) in tables.iter_mut().enumerate() {
            *table.entry(&letters[center - j..=center + j]).or_insert(0) += 1;
        }
    }
    let counts = tables
        .into_iter()
        .map(|t| t.into_iter().map(|(w, c)| (w.to_vec(), c)).collect())
        .collect();
    Ok(EmpiricalMeasure {
        depth,
        horizon: len,
        window_start: start,
        alphabet,
        counts,
    })
}

/// `sum_{j <= depth} 2^-(j+1) sum_w |f1(w) - f2(w)|`.
pub fn weakstar_distance(m1: &EmpiricalMeasure, m2: &EmpiricalMeasure) -> Result<f64> {
    if m1.depth != m2.depth {
        return Err(Error::Mismatch(format!(
            "measure depths {} and {} differ",
            m1.depth, m2.depth
        )));
    }
    let mut total = 0.0;
    for j in 0..=m1.depth {
        let mut tv = 0.0;
        let (a, b) = (&m1.counts[j], &m2.counts[j]);
        for (w, &c) in a {
            let other = b.get(w).copied().unwrap_or(0);
            tv += (c as f64 / m1.horizon as f64 - other as f64 / m2.horizon as f64).abs();
        }
        for (w, &c) in b {
            if !a.contains_key(w) {
                tv += c as f64 / m2.horizon as f64;
            }
        }
        total += tv * 0.5f64.powi(j as i32 + 1);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Unique,
    NotUnique,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSpread {
    pub observable: String,
    /// Largest `max |A_n - A_m|` over the tail, across points.
    pub internal_spread: f64,
    /// Largest difference of final averages between points.
    pub cross_spread: f64,
    /// Final averages per point.
    pub finals: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniqueErgodicityReport {
    pub verdict: Verdict,
    pub max_spread: f64,
    pub tol: f64,
    pub tail: Tail,
    pub observables: Vec<ObservableSpread>,
}

/// Unique if every trace and every cross-point difference is within `tol`;
/// not unique if two internally converged points end more than `3 tol` apart.
pub fn unique_ergodicity_test(
    sys: &dyn System,
    observables: &[Observable],
    points: &[Point],
    family: &FoelnerFamily,
    tail: Tail,
    tol: f64,
) -> Result<UniqueErgodicityReport> {
    if points.len() < 2 || observables.is_empty() {
        return Err(Error::invalid("need at least two points and one observable"));
    }
    let mut rows = Vec::with_capacity(observables.len());
    let mut separated = false;
    let mut max_spread: f64 = 0.0;
    for f in observables {
        let traces = points
            .iter()
            .map(|x| average_trace(sys, f, x, family, tail))
            .collect::<Result<Vec<_>>>()?;
        let spreads: Vec<f64> = traces.iter().map(AverageTrace::spread).collect();
        let finals: Vec<Complex64> = traces.iter().map(AverageTrace::last).collect();
        let mut cross: f64 = 0.0;
        for (i, a) in finals.iter().enumerate() {
            for (j, b) in finals.iter().enumerate() {
                let d = (a - b).norm();
                cross = cross.max(d);
                if spreads[i] <= tol && spreads[j] <= tol && d > 3.0 * tol {
                    separated = true;
                }
            }
        }
        let internal = spreads.iter().copied().fold(0.0, f64::max);
        max_spread = max_spread.max(internal).max(cross);
        rows.push(ObservableSpread {
            observable: f.label().to_string(),
            internal_spread: internal,
            cross_spread: cross,
            finals: finals.iter().map(|c| [c.re, c.im]).collect(),
        });
    }
    let verdict = if max_spread <= tol {
        Verdict::Unique
    } else if separated {
        Verdict::NotUnique
    } else {
        Verdict::Inconclusive
    };
    Ok(UniqueErgodicityReport {
        verdict,
        max_spread,
        tol,
        tail,
        observables: rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenericPointReport {
    pub generic: bool,
    /// Largest distance to the reference over the tail windows.
    pub distance: f64,
    pub distances: Vec<f64>,
}

/// Compares the cylinder measure of `x` along each tail window with the
/// reference; the tail selects the subsequence of the family.
pub fn generic_point_check(
    x: &Point,
    reference: &EmpiricalMeasure,
    family: &FoelnerFamily,
    tail: Tail,
    tol: f64,
) -> Result<GenericPointReport> {
    tail.check(family)?;
    let distances = tail
        .indices()
        .map(|n| {
            let m = empirical_cylinder_measure_on(x, reference.depth, family.window(n)?)?;
            weakstar_distance(&m, reference)
        })
        .collect::<Result<Vec<_>>>()?;
    let distance = distances.iter().copied().fold(0.0, f64::max);
    Ok(GenericPointReport {
        generic: distance <= tol,
        distance,
        distances,
    })
}

/// Shifted copies `sigma^{s} x` of a symbolic point, as generic `Point`s.
pub fn shifted_points(x: &SymbolicPoint, shifts: &[i64]) -> Vec<Point> {
    shifts.iter().map(|&s| Point::Symbolic(x.shift(s))).collect()
}
