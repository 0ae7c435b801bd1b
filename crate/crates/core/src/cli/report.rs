//! Machine-readable reports. Output is deterministic: maps are ordered, there
//! are no timestamps, and non-finite numbers are written as the strings
//! `"inf"`, `"-inf"` and `"nan"`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Serialize, Serializer};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::opspace::Tolerances;

/// An `f64` that serializes non-finite values as strings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

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

/// JSON value for a number, keeping non-finite values readable.
pub fn num(v: f64) -> Value {
    serde_json::to_value(Num(v)).expect("number serializes")
}

pub fn nums(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: Num,
    pub relation: Relation,
    pub bound: Num,
    pub pass: bool,
}

impl Check {
    /// Passes when `measured ≤ bound`.
    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            measured: Num(measured),
            relation: Relation::AtMost,
            bound: Num(bound),
            pass: measured <= bound,
        }
    }

    /// Passes when `measured ≥ bound`.
    pub fn at_least(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            measured: Num(measured),
            relation: Relation::AtLeast,
            bound: Num(bound),
            pass: measured >= bound,
        }
    }

    /// A yes/no condition recorded as `1 ≥ 1` or `0 ≥ 1`.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::at_least(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }

    /// Signed distance to the bound; negative means failure.
    pub fn margin(&self) -> f64 {
        match self.relation {
            Relation::AtMost => self.bound.0 - self.measured.0,
            Relation::AtLeast => self.measured.0 - self.bound.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The multiplier is singular, so there is nothing to invert.
    NonInvertible,
    /// A perturbation hypothesis (`μ < √A` or `μ < 1`) is not met.
    ConditionNotMet,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ToleranceRecord {
    pub rank: f64,
    pub invert: f64,
}

impl From<Tolerances> for ToleranceRecord {
    fn from(t: Tolerances) -> Self {
        ToleranceRecord {
            rank: t.rank,
            invert: t.invert,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportFile {
    pub command: String,
    pub input_digest: String,
    pub seed: Option<u64>,
    pub tolerances: ToleranceRecord,
    pub checks: Vec<Check>,
    pub values: BTreeMap<String, Value>,
    pub verdict: Verdict,
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl ReportFile {
    pub fn new(command: impl Into<String>, input_digest: String, seed: Option<u64>, tolerances: Tolerances) -> Self {
        ReportFile {
            command: command.into(),
            input_digest,
            seed,
            tolerances: tolerances.into(),
            checks: Vec::new(),
            values: BTreeMap::new(),
            verdict: Verdict::Pass,
        }
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn value(&mut self, key: &str, v: impl Serialize) {
        self.values
            .insert(key.to_string(), serde_json::to_value(v).expect("value serializes"));
    }

    pub fn number(&mut self, key: &str, v: f64) {
        self.values.insert(key.to_string(), num(v));
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// `Pass` or `Fail` from the checks, unless a special verdict was set.
    pub fn finish(mut self) -> Self {
        if self.verdict == Verdict::Pass && !self.all_pass() {
            self.verdict = Verdict::Fail;
        }
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Plain-text summary: one line per check, then the verdict.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} ({})",
            self.command,
            &self.input_digest[..12.min(self.input_digest.len())]
        );
        for (k, v) in &self.values {
            if let Value::Number(_) | Value::Bool(_) | Value::String(_) = v {
                let _ = writeln!(out, "  {k} = {v}");
            }
        }
        for c in &self.checks {
            let rel = match c.relation {
                Relation::AtMost => "<=",
                Relation::AtLeast => ">=",
            };
            let _ = writeln!(
                out,
                "  [{}] {}: {:.6e} {rel} {:.6e}",
                if c.pass { "pass" } else { "FAIL" },
                c.name,
                c.measured.0,
                c.bound.0
            );
        }
        let verdict = serde_json::to_value(self.verdict).expect("verdict serializes");
        let _ = writeln!(out, "verdict: {}", verdict.as_str().unwrap_or("?"));
        out
    }
}
