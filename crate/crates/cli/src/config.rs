//! Flat `key = value` run configuration: built-in defaults, then a config
//! file, then command-line flags.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::ops::RangeInclusive;
use std::str::FromStr;

use mequi::{Error, Result};

/// `(key, default, meaning)`; every key is also a `--key` flag.
pub const DEFAULTS: &[(&str, &str, &str)] = &[
    ("seed", "0", "64-bit master seed"),
    ("system", "thue-morse", "catalog label"),
    ("alpha", "golden", "rotation number: golden, silver or a decimal"),
    ("theta1", "0.1", "phase (or odometer integer) of the first point"),
    ("theta2", "0.11", "phase (or odometer integer) of the second point"),
    ("base1", "golden", "skew-product base phase of the first point"),
    ("base2", "golden", "skew-product base phase of the second point"),
    ("shift1", "0", "shift applied to the first point"),
    ("shift2", "1", "shift applied to the second point"),
    ("window", "-8..8", "coordinate window for gen"),
    ("family", "dyadic", "dyadic ([0,2^n)) or triadic ([0,3^n))"),
    ("levels", "17", "number of windows in the family"),
    ("tail-min", "10", "first window index of the limsup tail"),
    ("tail-max", "14", "last window index of the limsup tail"),
    ("budget", "default", "translate budget; default is the largest tail window"),
    ("horizon", "80", "metric resolution horizon"),
    ("estimator", "weyl", "besicovitch, weyl, observable, dn or all"),
    ("integrand", "metric", "metric, hamming or observable"),
    ("observable", "coordinate", "coordinate, sign, centered, indicator0, indicator1 or character"),
    ("dn-level", "10", "n for the D^n estimator"),
    ("delta-exponents", "4..10", "scan scales 2^-k for k in the range"),
    ("pairs", "20", "pairs per scale"),
    ("segment", "65536", "orbit segment length for word-search pair sampling"),
    ("tol", "0.02", "verdict tolerance"),
    ("starts", "2", "orbit start points per product point"),
    ("resolution", "4096", "spectrum grid size M"),
    ("n", "65536", "Weyl-sum horizon N"),
    ("dyadic-depth", "0", "dyadic eigenvalue seeds k/2^m up to this m"),
    ("threshold", "auto", "peak threshold; auto is max(5 median, floor)"),
    ("factor-depth", "32", "factor map resolution depth"),
    ("sample-size", "200", "points sampled for fiber statistics"),
    ("element", "depth:1;0=0,1=2", "full group element literal"),
    ("compose-with", "depth:0;*=1", "second element for composition witnesses"),
    ("odometer-points", "0,1,2,3", "integers the element is applied to"),
    ("csv", "none", "path for the tabular output"),
    ("toeplitz-tail-max", "16", "largest window index for the Toeplitz closure bound"),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            values: DEFAULTS
                .iter()
                .map(|(k, v, _)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }
}

impl RunConfig {
    pub fn is_key(key: &str) -> bool {
        DEFAULTS.iter().any(|(k, _, _)| *k == key)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !Self::is_key(key) {
            return Err(Error::invalid(format!("unknown config key {key:?}")));
        }
        self.values.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("config line {}: expected key = value", i + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn str(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        let raw = self.str(key);
        raw.parse()
            .map_err(|e| Error::invalid(format!("config {key} = {raw:?}: {e}")))
    }

    /// `None` for the keywords `default`, `auto` and `none`.
    pub fn optional<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        match self.str(key) {
            "default" | "auto" | "none" | "" => Ok(None),
            _ => self.get(key).map(Some),
        }
    }

    pub fn range(&self, key: &str) -> Result<RangeInclusive<i64>> {
        let raw = self.str(key);
        let bad = || Error::invalid(format!("config {key} = {raw:?}: expected lo..hi"));
        let (lo, hi) = raw.split_once("..").ok_or_else(bad)?;
        let lo: i64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: i64 = hi.trim().parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        Ok(lo..=hi)
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: Display,
    {
        self.str(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|e| Error::invalid(format!("config {key}: {s:?}: {e}"))))
            .collect()
    }

    pub fn seed(&self) -> Result<u64> {
        self.get("seed")
    }

    /// `key = value` lines for every key, with the meaning as a comment.
    pub fn defaults_text() -> String {
        DEFAULTS
            .iter()
            .map(|(k, v, m)| format!("{k} = {v}  # {m}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layering_and_parsing() {
        let mut c = RunConfig::default();
        c.apply_text("# comment\nseed = 42\n\ntail-min=3 # inline\n").unwrap();
        c.set("window", "-4..4").unwrap();
        assert_eq!(c.seed().unwrap(), 42);
        assert_eq!(c.get::<usize>("tail-min").unwrap(), 3);
        assert_eq!(c.range("window").unwrap(), -4..=4);
        assert_eq!(c.optional::<u64>("budget").unwrap(), None);
        assert_eq!(c.list::<i64>("odometer-points").unwrap(), vec![0, 1, 2, 3]);
        assert!(c.set("nope", "1").is_err());
        assert!(c.apply_text("seed 1").is_err());
        c.set("seed", "x").unwrap();
        assert!(c.seed().is_err());
    }

    #[test]
    fn defaults_text_round_trips() {
        let mut c = RunConfig::default();
        c.set("seed", "9").unwrap();
        c.apply_text(&RunConfig::defaults_text()).unwrap();
        assert_eq!(c, RunConfig::default());
    }
}
