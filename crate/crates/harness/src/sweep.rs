//! Family sweeps: quantities, decompositions and soft ratios per size, with
//! a trend table of ratios.

use std::str::FromStr;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sumprod_core::corpus::{balog_wooley_for, RANDOM_UNIVERSE};
use sumprod_core::families::{generate, FamilySpec};
use sumprod_core::{Error, Result};

use crate::exponents::ExponentTable;
use crate::quantities::compute_quantities;
use crate::report::{Caps, CheckRow, Meta, Report, SoftRow};
use crate::verify::{decompose, DecomposeMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Ap,
    Gp,
    BalogWooley,
    RandomSubset,
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ap" => Ok(Family::Ap),
            "gp" => Ok(Family::Gp),
            "balog_wooley" | "bw" => Ok(Family::BalogWooley),
            "random_subset" | "random" => Ok(Family::RandomSubset),
            other => Err(Error::Config(format!("unknown family `{other}` (ap|gp|balog_wooley|random_subset)"))),
        }
    }
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Ap => "ap",
            Family::Gp => "gp",
            Family::BalogWooley => "balog_wooley",
            Family::RandomSubset => "random_subset",
        }
    }

    /// The family member with `n` elements.
    ///
    /// Balog–Wooley sets take `s = p², n = p³` when `n` is a cube and the
    /// corpus parameters when `n` is a power of two. Random subsets draw
    /// from `{1, …, max(1000, 4n)}` with seed `seed + n`.
    pub fn spec(self, n: usize, seed: u64) -> Result<FamilySpec> {
        let spec = match self {
            Family::Ap => FamilySpec::ap(n),
            Family::Gp => FamilySpec::gp(n),
            Family::BalogWooley => {
                let p = (n as f64).cbrt().round() as usize;
                if p >= 2 && p * p * p == n {
                    FamilySpec::BalogWooley { s: p * p, p }
                } else if n >= 2 && n.is_power_of_two() {
                    balog_wooley_for(n)
                } else {
                    return Err(Error::Config(format!("balog_wooley size {n} must be a cube or a power of two ≥ 2")));
                }
            }
            Family::RandomSubset => FamilySpec::RandomSubset {
                universe: RANDOM_UNIVERSE.max(4 * n as u64),
                n,
                seed: seed.wrapping_add(n as u64),
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub families: Vec<Family>,
    pub sizes: Vec<usize>,
    pub seed: u64,
    /// Run the three decompositions at every point whose set avoids zero.
    pub decompose: bool,
    pub caps: Caps,
}

impl SweepConfig {
    pub fn new(families: Vec<Family>, sizes: Vec<usize>, seed: u64) -> Self {
        SweepConfig { families, sizes, seed, decompose: true, caps: Caps::default() }
    }

    /// Points ordered by size, then family.
    pub fn points(&self) -> Result<Vec<(usize, Family, FamilySpec)>> {
        if self.families.is_empty() || self.sizes.is_empty() {
            return Err(Error::Config("sweep needs at least one family and one size".into()));
        }
        let mut sizes = self.sizes.clone();
        sizes.sort_unstable();
        sizes.dedup();
        let mut families = self.families.clone();
        families.sort_unstable();
        families.dedup();
        let mut out = Vec::new();
        for &n in &sizes {
            for &f in &families {
                out.push((n, f, f.spec(n, self.seed)?));
            }
        }
        Ok(out)
    }
}

struct PointResult {
    label: String,
    quantities: Value,
    soft: Vec<SoftRow>,
    checks: Vec<CheckRow>,
    timing_ms: f64,
}

fn skip(e: &Error) -> Value {
    json!({ "skipped": e.to_string() })
}

fn run_point(
    n: usize,
    family: Family,
    spec: &FamilySpec,
    cfg: &SweepConfig,
    table: &ExponentTable,
) -> Result<PointResult> {
    let start = std::time::Instant::now();
    let label = format!("{}-{n}", family.name());
    let set = generate(spec)?;
    let mut q = serde_json::Map::new();
    q.insert("family".into(), json!(family.name()));
    q.insert("spec".into(), serde_json::to_value(spec).expect("spec serialises"));
    let mut soft = Vec::new();
    let mut checks = Vec::new();
    match compute_quantities(&set, table) {
        Ok(f) => {
            for (k, v) in f.quantities {
                q.insert(k, v);
            }
            soft.extend(f.soft_checks);
        }
        Err(e @ Error::ResourceLimit { .. }) => {
            q.insert("quantities".into(), skip(&e));
        }
        Err(e) => return Err(e),
    }
    if cfg.decompose && !set.contains_zero() {
        let mut decomps = serde_json::Map::new();
        for mode in DecomposeMode::ALL {
            match decompose(&set, mode, &cfg.caps, table) {
                Ok(d) => {
                    checks.extend(d.checks.into_iter().map(|mut c| {
                        c.name = format!("{label}.{}", c.name);
                        CheckRow::from(c)
                    }));
                    decomps.insert(mode.key().into(), d.summary);
                    soft.extend(d.soft_checks);
                }
                Err(e @ Error::ResourceLimit { .. }) => {
                    decomps.insert(mode.key().into(), skip(&e));
                }
                Err(e) => return Err(e),
            }
        }
        q.insert("decompositions".into(), Value::Object(decomps));
    }
    for s in &mut soft {
        s.point = Some(label.clone());
    }
    Ok(PointResult {
        label,
        quantities: Value::Object(q),
        soft,
        checks,
        timing_ms: (start.elapsed().as_secs_f64() * 1e6).round() / 1e3,
    })
}

/// Runs every point on the current rayon pool; output order is fixed by
/// [`SweepConfig::points`] regardless of scheduling.
pub fn sweep(cfg: &SweepConfig, table: &ExponentTable) -> Result<Report> {
    let points = cfg.points()?;
    let mut meta = Meta::new(Some(cfg.seed), cfg.caps);
    let results: Vec<Result<PointResult>> =
        meta.time("total", || points.par_iter().map(|(n, f, spec)| run_point(*n, *f, spec, cfg, table)).collect());
    let input = json!({
        "families": cfg.families.iter().map(|f| f.name()).collect::<Vec<_>>(),
        "sizes": cfg.sizes,
        "seed": cfg.seed,
        "decompose": cfg.decompose,
    });
    let mut report = Report::new(input, Meta::new(Some(cfg.seed), cfg.caps));
    let mut by_point = serde_json::Map::new();
    let mut trend = Vec::new();
    for ((n, family, _), r) in points.iter().zip(results) {
        let r = r?;
        let mut row: IndexMap<String, Value> = IndexMap::new();
        row.insert("point".into(), json!(r.label));
        row.insert("family".into(), json!(family.name()));
        row.insert("n".into(), json!(n));
        for s in &r.soft {
            row.insert(s.name.clone(), json!(s.ratio));
        }
        trend.push(row);
        report.exact_checks.extend(r.checks);
        by_point.insert(r.label.clone(), r.quantities);
        report.soft_checks.extend(r.soft);
        meta.timings.insert(r.label, r.timing_ms);
    }
    report.quantities.insert("points".into(), Value::Object(by_point));
    report.quantities.insert("trend".into(), serde_json::to_value(trend).expect("trend serialises"));
    report.meta = meta;
    Ok(report)
}

/// The trend table as CSV: one row per point, one column per soft ratio.
pub fn trend_csv(report: &Report) -> String {
    let rows = report.quantities.get("trend").and_then(Value::as_array).cloned().unwrap_or_default();
    let mut columns: Vec<String> = Vec::new();
    for r in &rows {
        if let Some(o) = r.as_object() {
            for k in o.keys() {
                if !columns.contains(k) {
                    columns.push(k.clone());
                }
            }
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&columns).expect("in-memory csv write");
    for r in &rows {
        let cells: Vec<String> = columns
            .iter()
            .map(|c| match r.get(c) {
                Some(Value::String(s)) => s.clone(),
                Some(Value::Null) | None => String::new(),
                Some(v) => v.to_string(),
            })
            .collect();
        w.write_record(&cells).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
}
