//! The `stl-report/1` verification report.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::spec::InputEcho;

pub const SCHEMA: &str = "stl-report/1";

/// How a measured value is compared with its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// Pass when the maximum residual is below the threshold.
    Below,
    /// Pass when the measured value (a minimum for positivity checks) exceeds the threshold.
    Above,
    /// Pass when a minimum count reaches the threshold; not scaled by `--tol`.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub id: String,
    pub anchor: String,
    pub samples: usize,
    /// Max over samples for `below`, the reduced value otherwise.
    pub max_residual: Option<f64>,
    pub rule: Rule,
    pub threshold: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerance {
    pub base: f64,
    pub effective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema: String,
    pub command: String,
    pub input: InputEcho,
    pub seed: u64,
    pub tol: f64,
    pub tolerances: BTreeMap<String, Tolerance>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub values: BTreeMap<String, serde_json::Value>,
    pub pass: bool,
    pub wall_time_s: f64,
}

impl Report {
    pub fn new(command: &str, input: InputEcho, seed: u64, tol: f64) -> Self {
        Report {
            schema: SCHEMA.into(),
            command: command.into(),
            input,
            seed,
            tol,
            tolerances: BTreeMap::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            values: BTreeMap::new(),
            pass: true,
            wall_time_s: 0.0,
        }
    }

    /// Records a check; `measured` is the max (or min count) over `samples`.
    pub fn check(&mut self, id: &str, anchor: &str, rule: Rule, base: f64, samples: usize, measured: Result<f64, String>) {
        let threshold = match rule {
            Rule::AtLeast => base,
            _ => base * self.tol,
        };
        self.tolerances.insert(id.into(), Tolerance { base, effective: threshold });
        let (max_residual, pass, error) = match measured {
            Ok(v) => {
                let pass = match rule {
                    Rule::Below => v < threshold,
                    Rule::Above => v > threshold,
                    Rule::AtLeast => v >= threshold,
                };
                (v.is_finite().then_some(v), pass, (!v.is_finite()).then(|| "non-finite residual".to_string()))
            }
            Err(e) => (None, false, Some(e)),
        };
        self.checks.push(Check { id: id.into(), anchor: anchor.into(), samples, max_residual, rule, threshold, pass, error });
        self.pass = self.checks.iter().all(|c| c.pass);
    }

    pub fn value<V: Serialize>(&mut self, key: &str, v: V) {
        self.values.insert(key.into(), serde_json::to_value(v).unwrap_or(serde_json::Value::Null));
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} ({})", self.command, SCHEMA);
        let src = match (&self.input.preset, &self.input.conn_file) {
            (Some(p), _) => format!("preset {p}"),
            (_, Some(f)) => format!("file {f}"),
            _ => "-".into(),
        };
        let _ = writeln!(s, "input: {src}   seed: {}   tol: {}", self.seed, self.tol);
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<26} {:<46} {:>7} {:>12} {:>6} {:>10} {:<4}", "check", "anchor", "samples", "measured", "rule", "threshold", "pass");
        let _ = writeln!(s, "{}", "-".repeat(117));
        for c in &self.checks {
            let m = c.max_residual.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "error".into());
            let rule = match c.rule {
                Rule::Below => "<",
                Rule::Above => ">",
                Rule::AtLeast => ">=",
            };
            let _ = writeln!(
                s,
                "{:<26} {:<46} {:>7} {:>12} {:>6} {:>10.1e} {:<4}",
                clip(&c.id, 26),
                clip(&c.anchor, 46),
                c.samples,
                m,
                rule,
                c.threshold,
                if c.pass { "ok" } else { "FAIL" }
            );
            if let Some(e) = &c.error {
                let _ = writeln!(s, "    error: {e}");
            }
        }
        if !self.values.is_empty() {
            let _ = writeln!(s);
            for (k, v) in &self.values {
                let _ = writeln!(s, "{k:<26} {}", clip(&v.to_string(), 200));
            }
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "overall: {}   ({:.2} s)", if self.pass { "PASS" } else { "FAIL" }, self.wall_time_s);
        s
    }
}

fn clip(s: &str, w: usize) -> String {
    if s.chars().count() <= w {
        s.to_string()
    } else {
        let mut t: String = s.chars().take(w - 1).collect();
        t.push('~');
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn echo() -> InputEcho {
        InputEcho { preset: Some("trivial".into()), conn_file: None, spec: None, args: BTreeMap::new() }
    }

    #[test]
    fn overall_is_conjunction() {
        let mut r = Report::new("x", echo(), 1, 2.0);
        r.check("a", "anchor", Rule::Below, 1e-9, 3, Ok(1.5e-9));
        assert!(r.pass && r.checks[0].threshold == 2e-9);
        r.check("b", "anchor", Rule::Above, 1e-3, 3, Ok(1e-3));
        assert!(!r.pass);
        let mut r = Report::new("x", echo(), 1, 1.0);
        r.check("c", "anchor", Rule::AtLeast, 1.0, 3, Ok(1.0));
        r.check("d", "anchor", Rule::Below, 1.0, 3, Err("outside".into()));
        assert!(!r.pass && r.checks[1].max_residual.is_none());
        assert_eq!(r.tolerances["c"].effective, 1.0);
    }

    #[test]
    fn json_round_trip_and_unknown_fields() {
        let mut r = Report::new("x", echo(), 1, 1.0);
        r.check("a", "anchor", Rule::Below, 1e-9, 3, Ok(f64::NAN));
        assert!(!r.pass);
        r.value("k", 3);
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        let mut v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        v["extra"] = serde_json::json!(1);
        assert!(serde_json::from_value::<Report>(v).is_err());
        assert!(r.to_table().contains("FAIL"));
    }
}
