//! Report assembly and JSON / CSV emission.

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sumprod_core::checks::ExactCheck;
use sumprod_core::decompose::DEFAULT_SOLS_CAP;
use sumprod_core::energy::DEFAULT_SIGMA_CAP;
use sumprod_core::incidence::DEFAULT_INCIDENCE_CAP;
use sumprod_core::soft::SoftCheck;
use sumprod_core::stats::POOL_VERSION;
use sumprod_core::{Error, Result};

use crate::exponents::ExponentTable;

/// Brute-force limits shared by every subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    /// Largest `|A||B||C|` grid searched for σ.
    pub sigma: usize,
    /// Largest `max(|P|, |B|)` for quotient-equation solution counts.
    pub sols: usize,
    /// Largest number of point/line membership tests.
    pub incidence: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { sigma: DEFAULT_SIGMA_CAP, sols: DEFAULT_SOLS_CAP, incidence: DEFAULT_INCIDENCE_CAP as u64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub verdict: Verdict,
    pub lhs: String,
    pub rhs: String,
}

impl From<ExactCheck> for CheckRow {
    fn from(c: ExactCheck) -> Self {
        CheckRow { name: c.name, verdict: if c.holds { Verdict::Pass } else { Verdict::Fail }, lhs: c.lhs, rhs: c.rhs }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftRow {
    /// Sweep point label, when the report covers several sets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<String>,
    pub name: String,
    pub value: String,
    pub reference: String,
    pub exponent: Option<String>,
    pub ratio: String,
    pub statement: String,
}

impl SoftRow {
    pub fn new(check: SoftCheck, statement: &str) -> Self {
        SoftRow {
            point: None,
            name: check.name,
            value: check.value,
            reference: check.reference,
            exponent: check.exponent,
            ratio: check.ratio,
            statement: statement.to_string(),
        }
    }

    pub fn from_certificate(check: SoftCheck, prefix: &str, table: &ExponentTable) -> Self {
        let statement = table.statement_for(&check.name);
        let mut row = SoftRow::new(check, statement);
        row.name = format!("{prefix}.{}", row.name);
        row
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub version: String,
    pub seed: Option<u64>,
    pub pool_version: String,
    pub caps: Caps,
    /// Wall-clock milliseconds per phase; the only nondeterministic field.
    pub timings: IndexMap<String, f64>,
}

impl Meta {
    pub fn new(seed: Option<u64>, caps: Caps) -> Self {
        Meta {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            pool_version: POOL_VERSION.to_string(),
            caps,
            timings: IndexMap::new(),
        }
    }

    pub fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = std::time::Instant::now();
        let out = f();
        let ms = start.elapsed().as_secs_f64() * 1e3;
        self.timings.insert(phase.to_string(), (ms * 1e3).round() / 1e3);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub input: Value,
    pub quantities: IndexMap<String, Value>,
    pub certificates: IndexMap<String, Value>,
    pub exact_checks: Vec<CheckRow>,
    pub soft_checks: Vec<SoftRow>,
    pub meta: Meta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Config(format!("unknown format `{other}` (json|csv)"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Csv => "csv",
        })
    }
}

/// Serialises anything into a JSON value; exact integers are already strings
/// or machine integers, so this cannot lose precision.
pub fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report values serialise")
}

impl Report {
    pub fn new(input: Value, meta: Meta) -> Self {
        Report {
            input,
            quantities: IndexMap::new(),
            certificates: IndexMap::new(),
            exact_checks: Vec::new(),
            soft_checks: Vec::new(),
            meta,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.exact_checks.iter().all(|c| c.verdict == Verdict::Pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRow> {
        self.exact_checks.iter().filter(|c| c.verdict == Verdict::Fail)
    }

    pub fn push_check(&mut self, c: ExactCheck) {
        self.exact_checks.push(c.into());
    }

    /// A stored certificate, deserialised back into its type.
    pub fn certificate<T: DeserializeOwned>(&self, key: &str) -> Result<T> {
        let v = self.certificates.get(key).ok_or_else(|| Error::Config(format!("no certificate `{key}`")))?;
        serde_json::from_value(v.clone()).map_err(|e| Error::Config(format!("certificate `{key}`: {e}")))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    /// JSON with the timing fields removed, for comparing runs.
    pub fn to_json_without_timings(&self) -> String {
        let mut r = self.clone();
        r.meta.timings.clear();
        r.to_json()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Input { line: e.line(), message: e.to_string() })
    }

    /// One row per flattened quantity and per soft check.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let write = |w: &mut csv::Writer<Vec<u8>>, row: [&str; 7]| w.write_record(row).expect("in-memory csv write");
        write(&mut w, ["section", "point", "name", "value", "reference", "exponent", "ratio"]);
        let mut flat = Vec::new();
        for (k, v) in &self.quantities {
            flatten(k, v, &mut flat);
        }
        for (k, v) in flat {
            write(&mut w, ["quantity", "", &k, &v, "", "", ""]);
        }
        for s in &self.soft_checks {
            write(
                &mut w,
                [
                    "soft",
                    s.point.as_deref().unwrap_or(""),
                    &s.name,
                    &s.value,
                    &s.reference,
                    s.exponent.as_deref().unwrap_or(""),
                    &s.ratio,
                ],
            );
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
    }

    pub fn emit(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&format!("{prefix}.{k}"), x, out);
            }
        }
        Value::Array(xs) if xs.iter().any(|x| x.is_object() || x.is_array()) => {
            for (i, x) in xs.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), x, out);
            }
        }
        Value::Array(xs) => {
            let parts: Vec<String> = xs.iter().map(scalar).collect();
            out.push((prefix.to_string(), parts.join(" ")));
        }
        other => out.push((prefix.to_string(), scalar(other))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn csv_flattens_nested_quantities() {
        let mut r = Report::new(json!({"set": "{1, 2}"}), Meta::new(None, Caps::default()));
        r.quantities.insert("n".into(), json!(2));
        r.quantities.insert("shift".into(), json!({"value": 3, "at": "1/2"}));
        r.quantities.insert("set".into(), json!(["1", "2"]));
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "quantity,,n,2,,,");
        assert_eq!(lines[2], "quantity,,shift.value,3,,,");
        assert_eq!(lines[3], "quantity,,shift.at,1/2,,,");
        assert_eq!(lines[4], "quantity,,set,1 2,,,");
    }

    #[test]
    fn json_round_trip_and_timing_strip() {
        let mut meta = Meta::new(Some(7), Caps::default());
        meta.time("x", || ());
        let mut r = Report::new(json!(null), meta);
        r.push_check(ExactCheck::eq("e", 1, 1));
        let back = Report::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(!r.to_json_without_timings().contains("\"x\""));
        assert!(r.all_pass());
    }
}
