//! Structured results of the verification suites.
//!
//! Reports serialize to JSON with `"schema": 1`. Non-finite numbers are
//! written as the strings `"inf"`, `"-inf"` and `"nan"` so that a diverging
//! measurement survives a round trip. There is no timestamp: the same
//! configuration and seed give byte-identical output.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// An `f64` whose JSON form keeps infinities and NaN.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Num(pub f64);

impl From<f64> for Num {
    fn from(v: f64) -> Self {
        Num(v)
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

struct NumVisitor;

impl Visitor<'_> for NumVisitor {
    type Value = Num;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Num, E> {
        Ok(Num(v))
    }
    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Num, E> {
        Ok(Num(v as f64))
    }
    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Num, E> {
        Ok(Num(v as f64))
    }
    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Num, E> {
        match v {
            "inf" => Ok(Num(f64::INFINITY)),
            "-inf" => Ok(Num(f64::NEG_INFINITY)),
            "nan" => Ok(Num(f64::NAN)),
            _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        d.deserialize_any(NumVisitor)
    }
}

/// One measured quantity and its verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub params: BTreeMap<String, Num>,
    pub measured: Num,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<Num>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, measured: f64, pass: bool) -> Self {
        Self {
            name: name.into(),
            params: BTreeMap::new(),
            measured: Num(measured),
            expected: None,
            tolerance: None,
            pass,
            note: None,
        }
    }

    pub fn param(mut self, key: &str, v: f64) -> Self {
        self.params.insert(key.to_string(), Num(v));
        self
    }

    pub fn expected(mut self, v: f64) -> Self {
        self.expected = Some(Num(v));
        self
    }

    pub fn tolerance(mut self, v: f64) -> Self {
        self.tolerance = Some(Num(v));
        self
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        self.note = Some(s.into());
        self
    }

    /// `measured <= bound`; NaN fails.
    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::new(name, measured, measured <= bound).tolerance(bound)
    }

    /// `measured >= bound`; NaN fails.
    pub fn at_least(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::new(name, measured, measured >= bound).tolerance(bound)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub schema: u32,
    pub suite: String,
    /// The resolved configuration the suite ran with.
    pub config: serde_json::Value,
    pub checks: Vec<CheckRecord>,
    pub pass: bool,
}

impl ProbeReport {
    pub fn new(suite: impl Into<String>) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            suite: suite.into(),
            config: serde_json::Value::Null,
            checks: Vec::new(),
            pass: true,
        }
    }

    pub fn with_config(mut self, config: serde_json::Value) -> Self {
        self.config = config;
        self
    }

    pub fn push(&mut self, rec: CheckRecord) {
        self.pass &= rec.pass;
        self.checks.push(rec);
    }

    pub fn extend(&mut self, other: ProbeReport) {
        for rec in other.checks {
            self.push(rec);
        }
    }

    /// Worst measured value among checks whose name starts with `prefix`.
    pub fn max_measured(&self, prefix: &str) -> Option<f64> {
        self.checks
            .iter()
            .filter(|c| c.name.starts_with(prefix))
            .map(|c| c.measured.0)
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        // Serialization of these plain types cannot fail.
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut s = self.to_json();
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_pass_tracks_records() {
        let mut r = ProbeReport::new("x");
        r.push(CheckRecord::new("a", 1.0, true));
        assert!(r.pass);
        r.push(CheckRecord::at_most("b", f64::NAN, 1.0));
        assert!(!r.pass);
        assert_eq!(r.failures().count(), 1);
    }

    #[test]
    fn non_finite_round_trip() {
        let mut r = ProbeReport::new("x");
        r.push(CheckRecord::new("inf", f64::INFINITY, false).param("q", f64::NEG_INFINITY));
        r.push(CheckRecord::new("nan", f64::NAN, false).expected(2.5));
        let back = ProbeReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back.checks[0].measured.0, f64::INFINITY);
        assert_eq!(back.checks[0].params["q"].0, f64::NEG_INFINITY);
        assert!(back.checks[1].measured.0.is_nan());
        assert_eq!(back.checks[1].expected, Some(Num(2.5)));
        assert!(r.to_json().contains("\"schema\": 1"));
    }
}
