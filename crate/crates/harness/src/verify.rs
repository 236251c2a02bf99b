//! Every exact check the core crate supports, run against one set.

use std::str::FromStr;

use num_bigint::BigUint;
use serde_json::{json, Value};
use sumprod_core::checks::{self, ExactCheck};
use sumprod_core::decompose::{self, CoverCertificate, PartitionCertificate, UnionMode, UnionVerdict};
use sumprod_core::energy::{self, RepHistogram};
use sumprod_core::incidence::{self, check_config, IncidenceCheck};
use sumprod_core::kernel::CountStrategy;
use sumprod_core::setfile::{format_set, parse_set};
use sumprod_core::sets::{combine, dilate, int};
use sumprod_core::stats::{self, DKind, WitnessPool};
use sumprod_core::{Error, FiniteRealSet, Result, SetOp};

use crate::exponents::ExponentTable;
use crate::report::{to_value, Caps, Meta, Report, SoftRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecomposeMode {
    /// Sum–product cover `X ∪ Y = A`.
    Main,
    /// Additive/multiplicative partition `B ⊔ C = A`.
    Partition,
    /// Fourth-moment cover.
    Fourth,
}

impl FromStr for DecomposeMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "main" => Ok(DecomposeMode::Main),
            "partition" => Ok(DecomposeMode::Partition),
            "fourth" => Ok(DecomposeMode::Fourth),
            other => Err(Error::Config(format!("unknown decomposition mode `{other}` (main|partition|fourth)"))),
        }
    }
}

impl DecomposeMode {
    pub const ALL: [DecomposeMode; 3] = [DecomposeMode::Main, DecomposeMode::Fourth, DecomposeMode::Partition];

    pub fn key(self) -> &'static str {
        match self {
            DecomposeMode::Main => "sum_product_cover",
            DecomposeMode::Partition => "partition",
            DecomposeMode::Fourth => "fourth_moment_cover",
        }
    }
}

/// A decomposition with its postcondition checks and soft ratios.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub mode: DecomposeMode,
    pub certificate: Value,
    pub summary: Value,
    pub checks: Vec<ExactCheck>,
    pub soft_checks: Vec<SoftRow>,
}

fn cover_checks(name: &str, a: &FiniteRealSet, c: &CoverCertificate) -> Vec<ExactCheck> {
    let half = a.len().div_ceil(2);
    let mut out = vec![
        ExactCheck::eq(format!("{name}.union_is_source"), c.x.union(&c.y), a),
        ExactCheck::le(format!("{name}.x_at_least_half"), &BigUint::from(half), &BigUint::from(c.x.len())),
        ExactCheck::le(format!("{name}.y_at_least_half"), &BigUint::from(half), &BigUint::from(c.y.len())),
    ];
    out.push(revalidate_flag(name, c.revalidate()));
    out.push(round_trip_flag::<CoverCertificate>(name, c));
    out
}

fn partition_checks(a: &FiniteRealSet, p: &PartitionCertificate) -> Vec<ExactCheck> {
    let name = "partition";
    vec![
        ExactCheck::eq(format!("{name}.union_is_source"), p.b.union(&p.c), a),
        ExactCheck::flag(
            format!("{name}.disjoint"),
            p.b.is_disjoint(&p.c),
            format!("|B| = {}, |C| = {}", p.b.len(), p.c.len()),
        ),
        ExactCheck::le(
            format!("{name}.outer_iterations"),
            &BigUint::from(p.outer_iterations),
            &BigUint::from(p.iteration_bound),
        ),
        revalidate_flag(name, p.revalidate()),
        round_trip_flag::<PartitionCertificate>(name, p),
    ]
}

fn revalidate_flag(name: &str, r: Result<()>) -> ExactCheck {
    match r {
        Ok(()) => ExactCheck::flag(format!("{name}.revalidates"), true, "revalidated"),
        Err(e) => ExactCheck::flag(format!("{name}.revalidates"), false, e),
    }
}

fn round_trip_flag<T>(name: &str, c: &T) -> ExactCheck
where
    T: serde::Serialize + serde::de::DeserializeOwned + PartialEq,
{
    let back: std::result::Result<T, _> = serde_json::from_value(to_value(c));
    let ok = back.as_ref().is_ok_and(|b| b == c);
    ExactCheck::flag(format!("{name}.json_round_trip"), ok, if ok { "identical" } else { "differs" })
}

pub fn decompose(a: &FiniteRealSet, mode: DecomposeMode, caps: &Caps, table: &ExponentTable) -> Result<Decomposition> {
    let pool = WitnessPool::default();
    let prefix = mode.key();
    let soft = |checks: &[sumprod_core::soft::SoftCheck]| -> Vec<SoftRow> {
        checks.iter().map(|s| SoftRow::from_certificate(s.clone(), prefix, table)).collect()
    };
    Ok(match mode {
        DecomposeMode::Main | DecomposeMode::Fourth => {
            let c = if mode == DecomposeMode::Main {
                decompose::sum_product_cover_with(a, &pool)?
            } else {
                decompose::fourth_moment_cover_with(a, &pool, Some(caps.sols))?
            };
            let summary = json!({
                "k": c.k,
                "x_len": c.x.len(),
                "y_len": c.y.len(),
                "step_sizes": c.steps.iter().map(|s| s.extraction.extracted.len()).collect::<Vec<_>>(),
            });
            Decomposition {
                mode,
                checks: cover_checks(prefix, a, &c),
                soft_checks: soft(&c.soft_checks),
                certificate: to_value(&c),
                summary,
            }
        }
        DecomposeMode::Partition => {
            let p = decompose::additive_multiplicative_partition_with(a, &pool)?;
            let summary = json!({
                "b_len": p.b.len(),
                "c_len": p.c.len(),
                "outer_iterations": p.outer_iterations,
                "iteration_bound": p.iteration_bound,
                "additive_energy_b": p.additive_energy_b.to_string(),
                "multiplicative_energy_c": p.multiplicative_energy_c.to_string(),
                "additive_energy_b_a": p.additive_energy_b_a.to_string(),
                "multiplicative_energy_c_a": p.multiplicative_energy_c_a.to_string(),
            });
            Decomposition {
                mode,
                checks: partition_checks(a, &p),
                soft_checks: soft(&p.soft_checks),
                certificate: to_value(&p),
                summary,
            }
        }
    })
}

/// Tracks checks that could not run, with the reason.
#[derive(Default)]
struct Skips(Vec<Value>);

impl Skips {
    fn push(&mut self, what: &str, reason: impl ToString) {
        self.0.push(json!({ "check": what, "skipped": reason.to_string() }));
    }

    /// Resource-limit errors become skip markers; others propagate.
    fn attempt<T>(&mut self, what: &str, r: Result<T>) -> Result<Option<T>> {
        match r {
            Ok(v) => Ok(Some(v)),
            Err(e @ Error::ResourceLimit { .. }) => {
                self.push(what, e);
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }
}

fn union_check(name: &str, v: &UnionVerdict) -> ExactCheck {
    let root = v.root;
    ExactCheck {
        name: name.to_string(),
        holds: v.holds,
        lhs: format!("{}^(1/{root})", v.union_value),
        rhs: v.part_values.iter().map(|p| format!("{p}^(1/{root})")).collect::<Vec<_>>().join(" + "),
    }
}

fn incidence_checks(name: &str, c: &IncidenceCheck) -> [ExactCheck; 2] {
    [
        ExactCheck::le(format!("{name}.floor"), &BigUint::from(c.floor), &BigUint::from(c.count)),
        ExactCheck {
            name: format!("{name}.szemeredi_trotter"),
            holds: c.bound_holds,
            lhs: c.count.to_string(),
            rhs: format!("4·{}^(2/3)·{}^(2/3) + 4·{} + {} ≈ {}", c.points, c.lines, c.points, c.lines, c.bound.approx),
        },
    ]
}

/// Parts of `A` by index modulo `k`.
fn round_robin(a: &FiniteRealSet, k: usize) -> Vec<FiniteRealSet> {
    let k = k.clamp(1, a.len());
    (0..k).map(|j| FiniteRealSet::new(a.iter().skip(j).step_by(k).cloned())).collect()
}

/// Number of random incidence configurations fuzzed per verification run.
pub const RANDOM_INCIDENCE_CONFIGS: u64 = 20;
/// Most quotients `λ` scanned for the slice-product inclusion.
pub const KATZ_KOESTER_LIMIT: usize = 4096;

pub fn verify_suite(a: &FiniteRealSet, caps: &Caps, seed: u64, table: &ExponentTable) -> Result<Report> {
    if a.is_empty() {
        return Err(Error::Domain("verification needs a nonempty set".into()));
    }
    let mut meta = Meta::new(Some(seed), *caps);
    let mut report = Report::new(json!({ "set": a, "n": a.len() }), Meta::new(Some(seed), *caps));
    let mut skips = Skips::default();
    let mut checks: Vec<ExactCheck> = Vec::new();
    let n = a.len();
    let nonzero = !a.contains_zero();
    if !nonzero {
        skips.push("multiplicative checks", "0 ∈ A");
    }
    let ops: Vec<SetOp> = if nonzero {
        vec![SetOp::Sum, SetOp::Diff, SetOp::Prod, SetOp::Quot]
    } else {
        vec![SetOp::Sum, SetOp::Diff, SetOp::Prod]
    };

    meta.time("histograms", || -> Result<()> {
        for &op in &ops {
            let hashed = RepHistogram::build_with(a, a, op, CountStrategy::Hashed)?;
            let sorted = RepHistogram::build_with(a, a, op, CountStrategy::SortMerge)?;
            checks.push(ExactCheck::eq(format!("mass_identity.{}", op.name()), hashed.total_mass(), n * n));
            checks.push(ExactCheck::flag(
                format!("strategies_agree.{}", op.name()),
                hashed == sorted,
                format!("{} distinct values", hashed.support_len()),
            ));
        }
        Ok(())
    })?;

    meta.time("energy_inequalities", || -> Result<()> {
        checks.extend(checks::energy_chain(a)?);
        checks.extend(checks::moment_monotonicity(a, a, SetOp::Diff)?);
        if nonzero {
            checks.extend(checks::moment_monotonicity(a, a, SetOp::Quot)?);
            let shifted = combine(a, &FiniteRealSet::singleton(int(1)), SetOp::Sum)?.without_zero();
            let dilated = dilate(a, &int(2))?.union(&FiniteRealSet::singleton(int(1)));
            for (label, b) in [("shift", shifted), ("dilate", dilated)] {
                if !b.is_empty() {
                    let mut c = checks::cross_energy_bound(a, &b)?;
                    c.name = format!("{}.{label}", c.name);
                    checks.push(c);
                }
            }
        }
        for op in [SetOp::Sum, SetOp::Diff] {
            let tails = stats::chebyshev_all(a, a, op)?;
            let bad: Vec<u64> = tails.iter().filter(|t| !t.holds).map(|t| t.tau).collect();
            checks.push(ExactCheck::eq(format!("chebyshev_tails.{}.violations", op.name()), bad.len(), 0));
        }
        Ok(())
    })?;

    meta.time("unions", || -> Result<()> {
        let parts = round_robin(a, 3);
        checks
            .push(union_check("union_l3.diff", &decompose::union_triangle_check(&parts, Some(a), UnionMode::L3Diff)?));
        if nonzero {
            checks.push(union_check(
                "union_l3.quot",
                &decompose::union_triangle_check(&parts, Some(a), UnionMode::L3Quot)?,
            ));
            checks.push(union_check(
                "union_l4.mult_energy",
                &decompose::union_triangle_check(&parts, None, UnionMode::L4MultEnergy)?,
            ));
        }
        Ok(())
    })?;

    if nonzero {
        meta.time("popular_quotients", || -> Result<()> {
            let spec = energy::popular_spectrum(a)?;
            checks.push(ExactCheck::le(
                "popular_spectrum.pigeonhole",
                &spec.energy,
                &(&spec.best_value * BigUint::from(spec.pigeonhole_constant)),
            ));
            let aa = combine(a, a, SetOp::Prod)?;
            let quotients = RepHistogram::build(a, a, SetOp::Quot)?.by_popularity();
            let scanned = quotients.len().min(KATZ_KOESTER_LIMIT);
            let mut bad = 0usize;
            for (lambda, _) in quotients.iter().take(scanned) {
                if !energy::katz_koester_with_products(a, &aa, lambda)?.holds() {
                    bad += 1;
                }
            }
            checks.push(ExactCheck::eq(format!("slice_product_inclusion.violations_of_{scanned}"), bad, 0));
            Ok(())
        })?;
    }

    meta.time("incidences", || -> Result<()> {
        let cap = Some(caps.incidence as u128);
        if nonzero {
            let cfg = incidence::elekes_config(a)?;
            if let Some(c) = skips.attempt("incidence.elekes", check_config(&cfg, cap))? {
                checks.extend(incidence_checks("incidence.elekes", &c));
            }
            let w = stats::product_witness(a, a)?;
            let cfg = incidence::dstar_config(&w.q, &w.r, a, a, w.t, 1)?;
            if let Some(c) = skips.attempt("incidence.covering", check_config(&cfg, cap))? {
                checks.extend(incidence_checks("incidence.covering", &c));
            }
        }
        let mut bad = 0usize;
        for i in 0..RANDOM_INCIDENCE_CONFIGS {
            let cfg = incidence::random_config(seed.wrapping_add(i), 200, 200);
            if !check_config(&cfg, cap)?.bound_holds {
                bad += 1;
            }
        }
        checks.push(ExactCheck::eq(format!("incidence.random_{RANDOM_INCIDENCE_CONFIGS}.violations"), bad, 0));
        Ok(())
    })?;

    meta.time("sigma", || -> Result<()> {
        let side = (1..=n).take_while(|k| k * k * k <= caps.sigma).last().unwrap_or(0);
        if side == 0 {
            skips.push("sigma", "σ cap below one grid point");
            return Ok(());
        }
        let t = a.take(side);
        let Some(w) = skips.attempt("sigma", energy::sigma_sup(&t, &t, &t, Some(caps.sigma)))? else {
            return Ok(());
        };
        let recount = energy::sigma_count(&t, &t, &t, &w.sigma1, &w.sigma2, &w.sigma3)?;
        checks.push(ExactCheck::eq("sigma.recount", recount, w.count));
        let s2 = &w.sigma2 / &w.sigma1;
        let s3 = &w.sigma3 / &w.sigma1;
        let coefficient_pairs = [(s2, s3), (int(1), int(-2)), (int(-1), int(1))];
        for (i, (s2, s3)) in coefficient_pairs.iter().enumerate() {
            let b = stats::sigma_bound_check(&t, &t, &t, s2, s3, Some(caps.sigma))?;
            checks.push(ExactCheck::flag(
                format!("sigma.holder_chain.{i}"),
                b.holds && b.holder_step && b.extension_step,
                format!("N = {} for (1, {s2}, {s3})", b.count),
            ));
        }
        report.quantities.insert("sigma".into(), json!({ "grid_side": side, "witness": w }));
        Ok(())
    })?;

    meta.time("structure_statistics", || -> Result<()> {
        let kinds: &[DKind] = if nonzero { &[DKind::DPlus, DKind::DTimes, DKind::D4Plus] } else { &[DKind::DPlus, DKind::D4Plus] };
        let mut bounds = serde_json::Map::new();
        for &kind in kinds {
            let d = stats::d_lower(a, kind, &WitnessPool::default())?;
            let name = match kind {
                DKind::DPlus => "d_plus",
                DKind::DTimes => "d_times",
                DKind::D4Plus => "d4_plus",
            };
            checks.push(ExactCheck {
                name: format!("d_lower.{name}.in_range"),
                holds: d.value >= int(1) && d.value <= int(n as i64),
                lhs: d.value.to_string(),
                rhs: format!("[1, {n}]"),
            });
            checks.push(revalidate_flag(&format!("d_lower.{name}"), d.revalidate(a)));
            if kind == DKind::DPlus {
                let d4 = stats::d_lower_for_witness(a, DKind::D4Plus, &d.witness)?;
                checks.push(ExactCheck {
                    name: "d_lower.fourth_below_third".into(),
                    holds: d4.value <= d.value,
                    lhs: d4.value.to_string(),
                    rhs: d.value.to_string(),
                });
            }
            bounds.insert(name.to_string(), json!({ "value": d.value.to_string(), "witness_len": d.witness_len }));
        }
        report.quantities.insert("d_lower".into(), Value::Object(bounds));
        if nonzero {
            let w = stats::product_witness(a, a)?;
            let v = stats::validate_d_witness(a, &w)?;
            checks.push(ExactCheck::eq("d_witness.product.value", &v, w.claimed_value(n)));
            let probe = stats::key_inequality_probe(a, &WitnessPool::default())?;
            report.quantities.insert(
                "key_probe".into(),
                json!({ "d_plus_lower": probe.d_plus_lower.value.to_string(), "d_times_upper": probe.upper_value.to_string(), "ratio": probe.ratio.to_string() }),
            );
        }
        Ok(())
    })?;

    if nonzero {
        meta.time("decompositions", || -> Result<()> {
            for mode in DecomposeMode::ALL {
                let d = decompose(a, mode, caps, table)?;
                checks.extend(d.checks);
                report.soft_checks.extend(d.soft_checks);
                report.certificates.insert(mode.key().into(), d.certificate);
            }
            Ok(())
        })?;
    }

    let parsed = parse_set(&format_set(a))?;
    checks.push(ExactCheck::eq("set_file.round_trip", &parsed, a));

    report.exact_checks = checks.into_iter().map(Into::into).collect();
    if !skips.0.is_empty() {
        report.quantities.insert("skipped".into(), Value::Array(skips.0));
    }
    report.meta = meta;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use sumprod_core::families::{generate, FamilySpec};

    fn run(a: &FiniteRealSet) -> Report {
        verify_suite(a, &Caps::default(), 0, &ExponentTable::standard()).unwrap()
    }

    #[test]
    fn progression_passes() {
        let r = run(&generate(&FamilySpec::ap(16)).unwrap());
        assert!(r.all_pass(), "{:?}", r.failures().collect::<Vec<_>>());
        assert!(r.exact_checks.len() > 30);
        assert_eq!(r.certificates.len(), 3);
    }

    #[test]
    fn geometric_progression_passes() {
        let r = run(&generate(&FamilySpec::gp(16)).unwrap());
        assert!(r.all_pass(), "{:?}", r.failures().collect::<Vec<_>>());
    }

    #[test]
    fn singleton_and_zero() {
        assert!(run(&FiniteRealSet::from_integers([1])).all_pass());
        let r = run(&FiniteRealSet::from_integers([0, 1, 5]));
        assert!(r.all_pass());
        assert!(r.quantities.contains_key("skipped"));
    }
}
