//! Structured reports with fixed top-level fields and 17-significant-digit floats.

use std::collections::BTreeMap;
use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub id: u32,
    pub name: String,
    pub status: Status,
    pub passed: bool,
    pub detail: String,
    pub measured: BTreeMap<String, Value>,
}

impl Check {
    pub fn new(id: u32, name: &str, status: Status, detail: String, measured: BTreeMap<String, Value>) -> Self {
        Check {
            id,
            name: name.to_string(),
            status,
            passed: status == Status::Pass,
            detail,
            measured,
        }
    }

    /// `criterion <id> <name>: PASS (<detail>)`.
    pub fn line(&self) -> String {
        let word = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
        };
        format!("criterion {:>2} {}: {} ({})", self.id, self.name, word, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperationResult {
    pub operation: String,
    pub data: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub version: String,
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub results: Vec<OperationResult>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(command: &str, config: BTreeMap<String, String>) -> Self {
        Report {
            version: VERSION.to_string(),
            command: command.to_string(),
            config,
            results: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn push<T: Serialize>(&mut self, operation: &str, data: &T) {
        let data = serde_json::to_value(data).unwrap_or_else(|e| Value::String(format!("unserializable: {e}")));
        self.results.push(OperationResult {
            operation: operation.to_string(),
            data,
        });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }
}

/// Pretty printing with every float written as `d.dddddddddddddddde±x`.
struct SciFloats<'a>(PrettyFormatter<'a>);

impl Formatter for SciFloats<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFloats(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("reports serialize to memory");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json writes UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_digits() {
        let s = to_json(&serde_json::json!({"a": 0.1, "b": [1.0, -2.5e-300], "n": 3}));
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("1.0000000000000000e0"));
        assert!(s.contains("-2.5000000000000000e-300"));
        assert!(s.contains("\"n\": 3"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"].as_f64(), Some(0.1));
    }

    #[test]
    fn report_has_fixed_fields() {
        let mut r = Report::new("defaults", BTreeMap::from([("seed".into(), "7".into())]));
        r.push("x", &1.5f64);
        r.checks.push(Check::new(1, "c", Status::Fail, "why".into(), BTreeMap::new()));
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["version", "config", "results", "checks"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["config"]["seed"], "7");
        assert_eq!(v["checks"][0]["status"], "fail");
        assert!(!r.all_passed());
        assert!(r.checks[0].line().contains("FAIL"));
    }
}
