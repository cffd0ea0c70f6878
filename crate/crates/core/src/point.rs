//! Point representations and the metrics evaluated along orbits.
//!
//! Infinite points are never materialized. Symbolic points carry a lazy
//! coordinate oracle, odometer points carry a finite digit prefix plus a tail
//! policy, and circle phases are 64-bit fixed point so that `theta + n*alpha`
//! is exact modulo 1 at the storage precision.

use std::any::Any;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Symbol = u8;

const TWO_POW_64: f64 = 18_446_744_073_709_551_616.0;

/// A distance value together with whether it is a true value or only the
/// agreement-to-horizon surrogate `2^-(horizon+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    pub value: f64,
    pub flagged: bool,
}

impl Distance {
    pub fn exact(value: f64) -> Self {
        Distance {
            value,
            flagged: false,
        }
    }

    pub fn agreement(horizon: u64) -> Self {
        Distance {
            value: pow2_neg(horizon + 1),
            flagged: true,
        }
    }
}

/// `2^-m`, saturating to zero below the subnormal range.
pub fn pow2_neg(m: u64) -> f64 {
    if m > 1074 {
        0.0
    } else {
        (-(m as f64)).exp2()
    }
}

/// A two-sided sequence `k -> x_k` that may be infinite.
///
/// Implementations must be deterministic and safe for concurrent reads.
pub trait SymbolSource: Send + Sync + fmt::Debug {
    fn alphabet_size(&self) -> u8;

    fn symbol(&self, k: i64) -> Result<Symbol>;

    /// Window `[lo, hi]` on which `symbol` is guaranteed to succeed.
    fn declared_window(&self) -> (i64, i64) {
        (i64::MIN, i64::MAX)
    }

    fn describe(&self) -> String;

    fn as_any(&self) -> &dyn Any;
}

/// A point of `A^Z`: a shared source read at an offset, so that shifting is O(1).
#[derive(Clone)]
pub struct SymbolicPoint {
    source: Arc<dyn SymbolSource>,
    offset: i64,
}

impl fmt::Debug for SymbolicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymbolicPoint({})", self.describe())
    }
}

impl SymbolicPoint {
    pub fn new(source: Arc<dyn SymbolSource>) -> Self {
        SymbolicPoint { source, offset: 0 }
    }

    pub fn from_source<S: SymbolSource + 'static>(source: S) -> Self {
        Self::new(Arc::new(source))
    }

    pub fn alphabet_size(&self) -> u8 {
        self.source.alphabet_size()
    }

    /// `x_k`.
    #[inline]
    pub fn symbol(&self, k: i64) -> Result<Symbol> {
        let j = k
            .checked_add(self.offset)
            .ok_or_else(|| Error::exhausted(k, "index overflow"))?;
        self.source.symbol(j)
    }

    /// `sigma^n x`, i.e. `(sigma^n x)_k = x_{k+n}`.
    pub fn shift(&self, n: i64) -> Self {
        SymbolicPoint {
            source: Arc::clone(&self.source),
            offset: self.offset + n,
        }
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn source(&self) -> &Arc<dyn SymbolSource> {
        &self.source
    }

    /// The declared resolvable window in this point's own coordinates.
    pub fn declared_window(&self) -> (i64, i64) {
        let (lo, hi) = self.source.declared_window();
        (lo.saturating_sub(self.offset), hi.saturating_sub(self.offset))
    }

    pub fn describe(&self) -> String {
        if self.offset == 0 {
            self.source.describe()
        } else {
            format!("shift({}, {})", self.offset, self.source.describe())
        }
    }

    pub fn word(&self, lo: i64, hi: i64) -> Result<Vec<Symbol>> {
        (lo..=hi).map(|k| self.symbol(k)).collect()
    }

    pub fn to_record(&self, lo: i64, hi: i64) -> Result<SymbolicRecord> {
        if lo > hi {
            return Err(Error::invalid(format!("empty window [{lo}, {hi}]")));
        }
        let symbols = self
            .word(lo, hi)?
            .into_iter()
            .map(symbol_char)
            .collect::<String>();
        Ok(SymbolicRecord {
            alphabet_size: self.alphabet_size(),
            window: [lo, hi],
            symbols,
        })
    }

    pub fn from_record(record: &SymbolicRecord) -> Result<Self> {
        let [lo, hi] = record.window;
        let symbols = record
            .symbols
            .chars()
            .map(|c| {
                c.to_digit(36)
                    .map(|d| d as Symbol)
                    .ok_or_else(|| Error::invalid(format!("bad symbol character {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if hi < lo || (hi - lo + 1) as usize != symbols.len() {
            return Err(Error::invalid(format!(
                "window [{lo}, {hi}] does not match {} symbols",
                symbols.len()
            )));
        }
        Ok(Self::from_source(ExplicitWord::new(
            record.alphabet_size,
            lo,
            symbols,
        )?))
    }
}

fn symbol_char(s: Symbol) -> char {
    std::char::from_digit(s as u32, 36).unwrap_or('?')
}

/// Serialized window of a symbolic point: `{alphabet_size, window: [lo, hi], symbols}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolicRecord {
    pub alphabet_size: u8,
    pub window: [i64; 2],
    pub symbols: String,
}

fn check_alphabet(alphabet_size: u8) -> Result<()> {
    if !(2..=36).contains(&alphabet_size) {
        return Err(Error::invalid(format!(
            "alphabet size {alphabet_size} outside 2..=36"
        )));
    }
    Ok(())
}

/// A finite word placed at `[lo, lo + len)`; every other index is exhausted.
#[derive(Debug, Clone)]
pub struct ExplicitWord {
    alphabet_size: u8,
    lo: i64,
    symbols: Vec<Symbol>,
}

impl ExplicitWord {
    pub fn new(alphabet_size: u8, lo: i64, symbols: Vec<Symbol>) -> Result<Self> {
        check_alphabet(alphabet_size)?;
        if symbols.is_empty() {
            return Err(Error::invalid("explicit word must be nonempty"));
        }
        if let Some(bad) = symbols.iter().find(|&&s| s >= alphabet_size) {
            return Err(Error::invalid(format!(
                "symbol {bad} outside alphabet of size {alphabet_size}"
            )));
        }
        Ok(ExplicitWord {
            alphabet_size,
            lo,
            symbols,
        })
    }
}

impl SymbolSource for ExplicitWord {
    fn alphabet_size(&self) -> u8 {
        self.alphabet_size
    }

    fn symbol(&self, k: i64) -> Result<Symbol> {
        let idx = k.checked_sub(self.lo).filter(|&i| i >= 0);
        idx.and_then(|i| self.symbols.get(i as usize).copied())
            .ok_or_else(|| Error::exhausted(k, "outside explicit window"))
    }

    fn declared_window(&self) -> (i64, i64) {
        (self.lo, self.lo + self.symbols.len() as i64 - 1)
    }

    fn describe(&self) -> String {
        format!("word@{}[{}]", self.lo, self.symbols.len())
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// A periodic point `x_k = pattern[k mod p]`; constant points have `p = 1`.
#[derive(Debug, Clone)]
pub struct Periodic {
    alphabet_size: u8,
    pattern: Vec<Symbol>,
}

impl Periodic {
    pub fn new(alphabet_size: u8, pattern: Vec<Symbol>) -> Result<Self> {
        check_alphabet(alphabet_size)?;
        if pattern.is_empty() || pattern.iter().any(|&s| s >= alphabet_size) {
            return Err(Error::invalid("periodic pattern must be a nonempty word over the alphabet"));
        }
        Ok(Periodic {
            alphabet_size,
            pattern,
        })
    }

    pub fn constant(alphabet_size: u8, symbol: Symbol) -> Result<Self> {
        Self::new(alphabet_size, vec![symbol])
    }
}

impl SymbolSource for Periodic {
    fn alphabet_size(&self) -> u8 {
        self.alphabet_size
    }

    fn symbol(&self, k: i64) -> Result<Symbol> {
        let p = self.pattern.len() as i64;
        Ok(self.pattern[k.rem_euclid(p) as usize])
    }

    fn describe(&self) -> String {
        let word: String = self.pattern.iter().copied().map(symbol_char).collect();
        format!("periodic({word})")
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// The symbol permutation `s -> (alphabet_size - 1 - s)` applied to a point;
/// for a binary alphabet this is the bitwise complement.
#[derive(Debug, Clone)]
pub struct Complement {
    inner: SymbolicPoint,
}

impl Complement {
    pub fn new(inner: SymbolicPoint) -> Self {
        Complement { inner }
    }
}

impl SymbolSource for Complement {
    fn alphabet_size(&self) -> u8 {
        self.inner.alphabet_size()
    }

    fn symbol(&self, k: i64) -> Result<Symbol> {
        Ok(self.alphabet_size() - 1 - self.inner.symbol(k)?)
    }

    fn declared_window(&self) -> (i64, i64) {
        self.inner.declared_window()
    }

    fn describe(&self) -> String {
        format!("complement({})", self.inner.describe())
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

pub fn complement(x: &SymbolicPoint) -> SymbolicPoint {
    SymbolicPoint::from_source(Complement::new(x.clone()))
}

/// A point that agrees with `base` except at finitely many listed indices.
#[derive(Debug, Clone)]
pub struct Modified {
    base: SymbolicPoint,
    changes: BTreeMap<i64, Symbol>,
}

impl Modified {
    pub fn new(base: SymbolicPoint, changes: BTreeMap<i64, Symbol>) -> Result<Self> {
        let a = base.alphabet_size();
        if changes.values().any(|&s| s >= a) {
            return Err(Error::invalid("modified symbol outside the alphabet"));
        }
        Ok(Modified { base, changes })
    }
}

impl SymbolSource for Modified {
    fn alphabet_size(&self) -> u8 {
        self.base.alphabet_size()
    }

    fn symbol(&self, k: i64) -> Result<Symbol> {
        match self.changes.get(&k) {
            Some(&s) => Ok(s),
            None => self.base.symbol(k),
        }
    }

    fn declared_window(&self) -> (i64, i64) {
        self.base.declared_window()
    }

    fn describe(&self) -> String {
        format!("modified({}, {} sites)", self.base.describe(), self.changes.len())
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

pub fn modify(x: &SymbolicPoint, changes: &[(i64, Symbol)]) -> Result<SymbolicPoint> {
    Ok(SymbolicPoint::from_source(Modified::new(
        x.clone(),
        changes.iter().copied().collect(),
    )?))
}

/// A phase in `[0, 1)` stored as a 64-bit binary fraction; `+` and `-` are modulo 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CirclePoint(pub u64);

impl std::ops::Add for CirclePoint {
    type Output = CirclePoint;

    fn add(self, other: CirclePoint) -> CirclePoint {
        CirclePoint(self.0.wrapping_add(other.0))
    }
}

impl std::ops::Sub for CirclePoint {
    type Output = CirclePoint;

    fn sub(self, other: CirclePoint) -> CirclePoint {
        CirclePoint(self.0.wrapping_sub(other.0))
    }
}

impl CirclePoint {
    pub fn from_f64(phase: f64) -> Self {
        let reduced = phase - phase.floor();
        // 1 - tiny rounds to 2^64; wrap it to 0
        let scaled = reduced * TWO_POW_64;
        if scaled >= TWO_POW_64 {
            CirclePoint(0)
        } else {
            CirclePoint(scaled as u64)
        }
    }

    pub fn phase(&self) -> f64 {
        self.0 as f64 / TWO_POW_64
    }

    /// `n * self` modulo 1.
    pub fn times(self, n: i64) -> Self {
        CirclePoint(self.0.wrapping_mul(n as u64))
    }

    /// Arc-length distance in 2^-64 units.
    pub fn raw_distance(self, other: CirclePoint) -> u64 {
        let d = self.0.wrapping_sub(other.0);
        d.min(d.wrapping_neg())
    }
}

/// A rotation number together with a bound on its storage error.
///
/// Irrational numbers are supplied by continued-fraction partial quotients;
/// the stored phase is the rounded value of the last convergent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationNumber {
    pub label: String,
    pub phase: CirclePoint,
    pub numerator: u128,
    pub denominator: u128,
    /// Upper bound on `|stored - true value|`.
    pub error_bound: f64,
}

impl RotationNumber {
    /// The number `[a0; a1, a2, ...]`. `error_bound` uses `1/(q_k q_{k+1})`
    /// with `q_{k+1} >= q_k + q_{k-1}`, valid when the expansion continues.
    pub fn from_partial_quotients(label: &str, quotients: &[u64]) -> Result<Self> {
        if quotients.len() < 2 {
            return Err(Error::invalid("need at least two partial quotients"));
        }
        let (mut p_prev, mut q_prev) = (1u128, 0u128);
        let (mut p, mut q) = (quotients[0] as u128, 1u128);
        for &a in &quotients[1..] {
            if a == 0 {
                return Err(Error::invalid("partial quotients after the first must be positive"));
            }
            let p_next = (a as u128)
                .checked_mul(p)
                .and_then(|v| v.checked_add(p_prev))
                .ok_or_else(|| Error::invalid("convergent overflows"))?;
            let q_next = (a as u128)
                .checked_mul(q)
                .and_then(|v| v.checked_add(q_prev))
                .ok_or_else(|| Error::invalid("convergent overflows"))?;
            (p_prev, q_prev, p, q) = (p, q, p_next, q_next);
        }
        let frac = p % q;
        if frac >= 1 << 64 || q > (1 << 64) {
            return Err(Error::invalid("convergent denominator exceeds 2^64"));
        }
        // round(frac * 2^64 / q)
        let scaled = ((frac << 64) + q / 2) / q;
        let phase = CirclePoint(scaled as u64);
        let next_q = q + q_prev;
        let error_bound = 1.0 / (q as f64 * next_q as f64) + 1.0 / TWO_POW_64;
        Ok(RotationNumber {
            label: label.to_string(),
            phase,
            numerator: frac,
            denominator: q,
            error_bound,
        })
    }

    /// `(sqrt(5) - 1) / 2 = [0; 1, 1, 1, ...]` with `terms` quotients after the first.
    pub fn golden(terms: usize) -> Result<Self> {
        let mut q = vec![0];
        q.extend(std::iter::repeat_n(1, terms));
        Self::from_partial_quotients("golden", &q)
    }

    /// `sqrt(2) - 1 = [0; 2, 2, ...]`.
    pub fn silver(terms: usize) -> Result<Self> {
        let mut q = vec![0];
        q.extend(std::iter::repeat_n(2, terms));
        Self::from_partial_quotients("silver", &q)
    }

    /// Default-precision golden mean: stored error below 2^-63.
    pub fn golden_default() -> Self {
        Self::golden(90).expect("golden convergent fits")
    }

    /// Default-precision silver mean; the 48th convergent has denominator below 2^61.
    pub fn silver_default() -> Self {
        Self::silver(48).expect("silver convergent fits")
    }

    /// A dyadic rotation number taken verbatim from a float.
    pub fn from_f64(alpha: f64) -> Self {
        let phase = CirclePoint::from_f64(alpha);
        RotationNumber {
            label: format!("{alpha}"),
            phase,
            numerator: phase.0 as u128,
            denominator: 1 << 64,
            error_bound: 0.0,
        }
    }

    /// This number plus a dyadic offset; the error bound is unchanged.
    pub fn offset_by(&self, delta: CirclePoint, label: &str) -> Self {
        RotationNumber {
            label: label.to_string(),
            phase: self.phase + delta,
            numerator: 0,
            denominator: 0,
            error_bound: self.error_bound,
        }
    }

    pub fn value(&self) -> f64 {
        self.phase.phase()
    }

    /// Conservative bound on the error of `theta + n*alpha` in 2^-64 units.
    pub fn orbit_error_units(&self, n: i64) -> u64 {
        let per_step = (self.error_bound * TWO_POW_64).ceil().max(1.0);
        let total = per_step * (n.unsigned_abs() as f64 + 1.0) + 2.0;
        if total >= TWO_POW_64 {
            u64::MAX
        } else {
            total as u64
        }
    }
}

/// What the digits beyond the resolved prefix of an odometer point are.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DigitTail {
    Zeros,
    Ones,
    Unresolved,
}

/// A 2-adic integer `theta = (theta_0, theta_1, ...)` in the dyadic odometer.
///
/// Integers embed with their two's-complement digits; `-1` is all ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OdometerPoint {
    words: Vec<u64>,
    depth: u32,
    tail: DigitTail,
}

impl OdometerPoint {
    pub fn from_integer(n: i64) -> Self {
        OdometerPoint {
            words: vec![n as u64],
            depth: 64,
            tail: if n < 0 {
                DigitTail::Ones
            } else {
                DigitTail::Zeros
            },
        }
    }

    /// A point known only to `digits.len()` digits.
    pub fn from_digits(digits: &[u8], tail: DigitTail) -> Self {
        let depth = digits.len() as u32;
        let mut words = vec![0u64; digits.len().div_ceil(64).max(1)];
        for (i, &d) in digits.iter().enumerate() {
            if d & 1 == 1 {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        let mut p = OdometerPoint { words, depth, tail };
        p.normalize();
        p
    }

    pub fn random(depth: u32, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let digits: Vec<u8> = (0..depth).map(|_| rng.gen_range(0..2)).collect();
        Self::from_digits(&digits, DigitTail::Unresolved)
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn tail(&self) -> DigitTail {
        self.tail
    }

    /// Digits beyond the prefix are known.
    pub fn is_integer(&self) -> bool {
        self.tail != DigitTail::Unresolved
    }

    pub fn digit(&self, i: u32) -> Result<u8> {
        if i < self.depth {
            return Ok(((self.words[(i / 64) as usize] >> (i % 64)) & 1) as u8);
        }
        match self.tail {
            DigitTail::Zeros => Ok(0),
            DigitTail::Ones => Ok(1),
            DigitTail::Unresolved => Err(Error::exhausted(
                i as i64,
                format!("odometer digit beyond resolved depth {}", self.depth),
            )),
        }
    }

    pub fn digits(&self, count: u32) -> Result<Vec<u8>> {
        (0..count).map(|i| self.digit(i)).collect()
    }

    /// `theta mod 2^bits` for `bits <= 64`.
    pub fn residue(&self, bits: u32) -> Result<u64> {
        if bits > 64 {
            return Err(Error::invalid("residue needs at most 64 bits"));
        }
        let mut r = 0u64;
        for i in 0..bits {
            r |= (self.digit(i)? as u64) << i;
        }
        Ok(r)
    }

    /// The integer value when the point is an integer in i64 range.
    pub fn to_i64(&self) -> Option<i64> {
        let fill = match self.tail {
            DigitTail::Zeros => 0u64,
            DigitTail::Ones => u64::MAX,
            DigitTail::Unresolved => return None,
        };
        let m = self.materialized(self.depth.max(64) + 64);
        let low = m.words[0];
        if m.words[1..].iter().all(|&w| w == fill) && ((low >> 63) == (fill & 1)) {
            Some(low as i64)
        } else {
            None
        }
    }

    /// Copy with a known tail spelled out to at least `bits` digits.
    fn materialized(&self, bits: u32) -> OdometerPoint {
        let fill = match self.tail {
            DigitTail::Zeros => 0u64,
            DigitTail::Ones => u64::MAX,
            DigitTail::Unresolved => return self.clone(),
        };
        let bits = bits.max(self.depth);
        let nwords = (bits as usize).div_ceil(64);
        let mut words = self.words.clone();
        words.resize(nwords, fill);
        // digits between depth and the end of its word follow the tail
        if !self.depth.is_multiple_of(64) {
            let w = (self.depth / 64) as usize;
            let keep = (1u64 << (self.depth % 64)) - 1;
            words[w] = (words[w] & keep) | (fill & !keep);
        }
        OdometerPoint {
            depth: (nwords * 64) as u32,
            words,
            tail: self.tail,
        }
    }

    fn normalize(&mut self) {
        let nwords = (self.depth as usize).div_ceil(64).max(1);
        self.words.resize(nwords, 0);
        if !self.depth.is_multiple_of(64) {
            let w = (self.depth / 64) as usize;
            self.words[w] &= (1u64 << (self.depth % 64)) - 1;
        }
    }

    /// `theta + n` with carries.
    pub fn add_integer(&self, n: i64) -> OdometerPoint {
        let ext = if n < 0 { u64::MAX } else { 0 };
        match self.tail {
            DigitTail::Unresolved => {
                let mut out = self.clone();
                add_words(&mut out.words, n as u64, ext);
                out.normalize();
                out
            }
            _ => {
                // one spare word of tail digits absorbs the carry; the result
                // tail is then the new top bit
                let mut m = self.materialized(self.depth.max(64) + 128);
                add_words(&mut m.words, n as u64, ext);
                let top = *m.words.last().unwrap();
                m.tail = if top >> 63 == 1 {
                    DigitTail::Ones
                } else {
                    DigitTail::Zeros
                };
                m.compact();
                m
            }
        }
    }

    /// `-theta`.
    pub fn negate(&self) -> OdometerPoint {
        match self.tail {
            DigitTail::Unresolved => {
                let mut out = self.clone();
                for w in &mut out.words {
                    *w = !*w;
                }
                add_words(&mut out.words, 1, 0);
                out.normalize();
                out
            }
            tail => {
                let mut m = self.materialized(self.depth.max(64) + 128);
                for w in &mut m.words {
                    *w = !*w;
                }
                m.tail = if tail == DigitTail::Zeros {
                    DigitTail::Ones
                } else {
                    DigitTail::Zeros
                };
                m.add_integer(1)
            }
        }
    }

    /// Drop trailing words that repeat the tail.
    fn compact(&mut self) {
        let fill = match self.tail {
            DigitTail::Zeros => 0u64,
            DigitTail::Ones => u64::MAX,
            DigitTail::Unresolved => return,
        };
        while self.words.len() > 1 && *self.words.last().unwrap() == fill {
            self.words.pop();
        }
        self.depth = (self.words.len() * 64) as u32;
    }

    /// Truncate knowledge to the first `depth` digits.
    pub fn truncate(&self, depth: u32) -> Result<OdometerPoint> {
        let digits = self.digits(depth)?;
        Ok(Self::from_digits(&digits, DigitTail::Unresolved))
    }

    pub fn describe(&self) -> String {
        if let Some(n) = self.to_i64() {
            return format!("odometer({n})");
        }
        let shown = self.depth.min(16);
        let digits: String = (0..shown)
            .map(|i| char::from(b'0' + self.digit(i).unwrap_or(0)))
            .collect();
        format!("odometer({digits}..;depth={})", self.depth)
    }
}

fn add_words(words: &mut [u64], low: u64, ext: u64) {
    let mut carry = 0u64;
    for (i, w) in words.iter_mut().enumerate() {
        let addend = if i == 0 { low } else { ext };
        let (s1, c1) = w.overflowing_add(addend);
        let (s2, c2) = s1.overflowing_add(carry);
        *w = s2;
        carry = (c1 as u64) + (c2 as u64);
    }
}

/// A point of any supported kind.
#[derive(Debug, Clone)]
pub enum Point {
    Symbolic(SymbolicPoint),
    Circle(CirclePoint),
    Odometer(OdometerPoint),
    Product(Box<Point>, Box<Point>),
}

impl Point {
    pub fn product(left: Point, right: Point) -> Point {
        Point::Product(Box::new(left), Box::new(right))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Point::Symbolic(_) => "symbolic",
            Point::Circle(_) => "circle",
            Point::Odometer(_) => "odometer",
            Point::Product(..) => "product",
        }
    }

    pub fn as_symbolic(&self) -> Result<&SymbolicPoint> {
        match self {
            Point::Symbolic(x) => Ok(x),
            other => Err(Error::Mismatch(format!("expected symbolic point, got {}", other.kind()))),
        }
    }

    pub fn as_circle(&self) -> Result<CirclePoint> {
        match self {
            Point::Circle(c) => Ok(*c),
            other => Err(Error::Mismatch(format!("expected circle point, got {}", other.kind()))),
        }
    }

    pub fn as_odometer(&self) -> Result<&OdometerPoint> {
        match self {
            Point::Odometer(o) => Ok(o),
            other => Err(Error::Mismatch(format!("expected odometer point, got {}", other.kind()))),
        }
    }

    pub fn as_product(&self) -> Result<(&Point, &Point)> {
        match self {
            Point::Product(a, b) => Ok((a, b)),
            other => Err(Error::Mismatch(format!("expected product point, got {}", other.kind()))),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Point::Symbolic(x) => x.describe(),
            Point::Circle(c) => format!("circle({:.17})", c.phase()),
            Point::Odometer(o) => o.describe(),
            Point::Product(a, b) => format!("({}, {})", a.describe(), b.describe()),
        }
    }
}

/// `2^-m` for the smallest `|k| <= horizon` with `x_k != y_k`, or the
/// flagged surrogate `2^-(horizon+1)` when the points agree to the horizon.
pub fn cantor_metric(x: &SymbolicPoint, y: &SymbolicPoint, horizon: u64) -> Result<Distance> {
    for m in 0..=horizon {
        let m_i = m as i64;
        if x.symbol(m_i)? != y.symbol(m_i)? {
            return Ok(Distance::exact(pow2_neg(m)));
        }
        if m > 0 && x.symbol(-m_i)? != y.symbol(-m_i)? {
            return Ok(Distance::exact(pow2_neg(m)));
        }
    }
    Ok(Distance::agreement(horizon))
}

/// `min(|a - b|, 1 - |a - b|)`.
pub fn circle_metric(a: CirclePoint, b: CirclePoint) -> f64 {
    a.raw_distance(b) as f64 / TWO_POW_64
}

/// `2^-m` for the first differing digit index `m < depth`.
pub fn odometer_metric(a: &OdometerPoint, b: &OdometerPoint, depth: u32) -> Result<Distance> {
    for i in 0..depth {
        if a.digit(i)? != b.digit(i)? {
            return Ok(Distance::exact(pow2_neg(i as u64)));
        }
    }
    Ok(Distance::agreement(depth as u64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProductMode {
    Max,
    Sum,
}

/// Distance between points of the same kind, using the kind's own metric.
/// `horizon` bounds symbolic and odometer comparisons.
pub fn point_distance(p: &Point, q: &Point, horizon: u64) -> Result<Distance> {
    match (p, q) {
        (Point::Symbolic(x), Point::Symbolic(y)) => cantor_metric(x, y, horizon),
        (Point::Circle(a), Point::Circle(b)) => Ok(Distance::exact(circle_metric(*a, *b))),
        (Point::Odometer(a), Point::Odometer(b)) => {
            odometer_metric(a, b, horizon.min(u32::MAX as u64) as u32)
        }
        (Point::Product(..), Point::Product(..)) => product_metric(p, q, ProductMode::Max, horizon),
        _ => Err(Error::Mismatch(format!(
            "cannot compare {} with {}",
            p.kind(),
            q.kind()
        ))),
    }
}

/// Max or sum of the component distances; flags propagate.
pub fn product_metric(p: &Point, q: &Point, mode: ProductMode, horizon: u64) -> Result<Distance> {
    let (pa, pb) = p.as_product()?;
    let (qa, qb) = q.as_product()?;
    let da = point_distance(pa, qa, horizon)?;
    let db = point_distance(pb, qb, horizon)?;
    let value = match mode {
        ProductMode::Max => da.value.max(db.value),
        ProductMode::Sum => da.value + db.value,
    };
    Ok(Distance {
        value,
        flagged: da.flagged || db.flagged,
    })
}

/// `1` iff `x_0 != y_0`.
pub fn hamming_observable(x: &SymbolicPoint, y: &SymbolicPoint) -> Result<u8> {
    Ok((x.symbol(0)? != y.symbol(0)?) as u8)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn word_point(lo: i64, s: &str) -> SymbolicPoint {
        let symbols = s.bytes().map(|b| b - b'0').collect();
        SymbolicPoint::from_source(ExplicitWord::new(2, lo, symbols).unwrap())
    }

    fn constant(s: Symbol) -> SymbolicPoint {
        SymbolicPoint::from_source(Periodic::constant(2, s).unwrap())
    }

    #[test]
    fn cantor_metric_identity_is_flagged() {
        let x = word_point(-5, "01101001011");
        let d = cantor_metric(&x, &x.clone(), 5).unwrap();
        assert!(d.flagged);
        assert_eq!(d.value, 2f64.powi(-6));
    }

    #[test]
    fn cantor_metric_origin_disagreement() {
        let x = constant(0);
        let y = modify(&x, &[(0, 1)]).unwrap();
        assert_eq!(cantor_metric(&x, &y, 10).unwrap(), Distance::exact(1.0));
    }

    #[test]
    fn cantor_metric_first_disagreement_by_enumeration() {
        let x = constant(0);
        let y = modify(&x, &[(-3, 1), (6, 1)]).unwrap();
        // oracle: smallest |k| over the listed disagreement sites
        let m = [-3i64, 6].iter().map(|k| k.unsigned_abs()).min().unwrap();
        let d = cantor_metric(&x, &y, 20).unwrap();
        assert_eq!(d, Distance::exact(pow2_neg(m)));
        assert_eq!(d.value, 0.125);
    }

    #[test]
    fn cantor_metric_reports_exhaustion() {
        let x = word_point(-2, "01010");
        let y = word_point(-2, "01010");
        assert!(matches!(
            cantor_metric(&x, &y, 3),
            Err(Error::OracleExhausted { .. })
        ));
    }

    #[test]
    fn circle_metric_examples() {
        let c = CirclePoint::from_f64;
        assert!((circle_metric(c(0.1), c(0.9)) - 0.2).abs() < 1e-15);
        assert_eq!(circle_metric(c(0.3), c(0.3)), 0.0);
        assert_eq!(circle_metric(c(0.25), c(0.75)), 0.5);
    }

    #[test]
    fn odometer_metric_examples() {
        let o = OdometerPoint::from_integer;
        assert_eq!(odometer_metric(&o(1), &o(3), 16).unwrap(), Distance::exact(0.5));
        assert_eq!(odometer_metric(&o(0), &o(1), 16).unwrap(), Distance::exact(1.0));
        let same = odometer_metric(&o(5), &o(5), 16).unwrap();
        assert!(same.flagged);
        assert_eq!(same.value, pow2_neg(17));
    }

    #[test]
    fn odometer_addition_matches_integers() {
        for a in [-300i64, -9, -1, 0, 1, 7, 255, 1 << 40] {
            for n in [-513i64, -1, 0, 1, 2, 100] {
                let got = OdometerPoint::from_integer(a).add_integer(n);
                assert_eq!(got.to_i64(), Some(a + n), "{a} + {n}");
                assert_eq!(got.digits(80).unwrap(), OdometerPoint::from_integer(a + n).digits(80).unwrap());
            }
        }
        let seven = OdometerPoint::from_digits(&[1, 1, 1], DigitTail::Zeros);
        assert_eq!(seven.add_integer(1).digits(5).unwrap(), vec![0, 0, 0, 1, 0]);
        assert_eq!(OdometerPoint::from_integer(-1).digits(70).unwrap(), vec![1; 70]);
    }

    #[test]
    fn odometer_unresolved_tail_keeps_prefix_arithmetic() {
        let p = OdometerPoint::random(40, 7);
        let q = p.add_integer(-37).add_integer(37);
        assert_eq!(p.digits(40).unwrap(), q.digits(40).unwrap());
        assert!(p.digit(40).is_err());
        let neg = p.negate();
        let sum_digits = {
            // -p + p = 0 mod 2^40
            let mut words = neg.words.clone();
            let mut carry = 0u64;
            for (w, &v) in words.iter_mut().zip(&p.words) {
                let (s1, c1) = w.overflowing_add(v);
                let (s2, c2) = s1.overflowing_add(carry);
                *w = s2;
                carry = c1 as u64 + c2 as u64;
            }
            words[0] & ((1 << 40) - 1)
        };
        assert_eq!(sum_digits, 0);
    }

    #[test]
    fn negation_of_integers() {
        for a in [-5i64, -1, 0, 1, 12345] {
            assert_eq!(OdometerPoint::from_integer(a).negate().to_i64(), Some(-a));
        }
    }

    #[test]
    fn product_metric_modes() {
        let c = |x: f64| Point::Circle(CirclePoint::from_f64(x));
        let p = Point::product(c(0.0), c(0.0));
        let q = Point::product(c(0.2), c(0.3));
        let max = product_metric(&p, &q, ProductMode::Max, 8).unwrap().value;
        let sum = product_metric(&p, &q, ProductMode::Sum, 8).unwrap().value;
        assert!((max - 0.3).abs() < 1e-15);
        assert!((sum - 0.5).abs() < 1e-15);
        assert_eq!(product_metric(&p, &p, ProductMode::Max, 8).unwrap().value, 0.0);
        let mixed = Point::product(c(0.0), Point::Odometer(OdometerPoint::from_integer(0)));
        assert!(matches!(
            product_metric(&p, &mixed, ProductMode::Max, 8),
            Err(Error::Mismatch(_))
        ));
    }

    #[test]
    fn hamming_examples() {
        let zero = constant(0);
        let one = constant(1);
        assert_eq!(hamming_observable(&zero, &zero).unwrap(), 0);
        assert_eq!(hamming_observable(&zero, &one).unwrap(), 1);
        let x = word_point(-20, "0110100110010110011010010110100110010110");
        let xc = complement(&x);
        for t in -20..20 {
            assert_eq!(hamming_observable(&x.shift(t), &xc.shift(t)).unwrap(), 1);
        }
    }

    #[test]
    fn record_round_trip() {
        let x = word_point(-3, "0110100");
        let rec = x.to_record(-3, 3).unwrap();
        assert_eq!(rec.symbols, "0110100");
        let y = SymbolicPoint::from_record(&rec).unwrap();
        assert_eq!(y.word(-3, 3).unwrap(), x.word(-3, 3).unwrap());
        assert!(y.symbol(4).is_err());
    }

    #[test]
    fn golden_rotation_number() {
        let g = RotationNumber::golden_default();
        let exact = (5f64.sqrt() - 1.0) / 2.0;
        assert!((g.value() - exact).abs() < 1e-15);
        assert!(g.error_bound < 1e-18);
        let s = RotationNumber::silver_default();
        assert!((s.value() - (2f64.sqrt() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn shifting_symbolic_points() {
        assert!(ExplicitWord::new(2, 0, vec![0, 1, 2]).is_err());
        let x = word_point(0, "0110");
        let s = x.shift(2);
        assert_eq!(s.symbol(0).unwrap(), 1);
        assert_eq!(s.symbol(1).unwrap(), 0);
        assert_eq!(s.shift(-2).word(0, 3).unwrap(), x.word(0, 3).unwrap());
    }
}
