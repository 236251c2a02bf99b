//! Exact sum–product and expander quantities of a single set, with soft
//! ratios against the exponent table.

use indexmap::IndexMap;
use num_bigint::BigUint;
use serde_json::{json, Value};
use sumprod_core::energy::{additive_energy, multiplicative_energy};
use sumprod_core::exact::log10_big;
use sumprod_core::kernel::distinct_count;
use sumprod_core::sets::combine;
use sumprod_core::soft::SoftCheck;
use sumprod_core::stats::{d_lower, DKind, WitnessPool};
use sumprod_core::{Error, FiniteRealSet, Rational, Result, SetOp};

use crate::exponents::ExponentTable;
use crate::report::SoftRow;

#[derive(Debug, Clone, Default)]
pub struct QuantityFragment {
    pub quantities: IndexMap<String, Value>,
    pub soft_checks: Vec<SoftRow>,
}

impl QuantityFragment {
    pub fn get_u64(&self, key: &str) -> Option<u64> {
        self.quantities.get(key).and_then(Value::as_u64)
    }
}

fn size(a: &FiniteRealSet, b: &FiniteRealSet, op: SetOp) -> Result<usize> {
    distinct_count(a, b, op)
}

fn log10(x: usize) -> f64 {
    (x as f64).log10()
}

/// `max_{a ∈ A} |A(A ± a)|` with the smallest maximising `a`.
fn max_shift(a: &FiniteRealSet, op: SetOp) -> Result<(usize, Rational)> {
    let mut best: Option<(usize, Rational)> = None;
    for x in a {
        let shifted = combine(a, &FiniteRealSet::singleton(x.clone()), op)?;
        let s = size(a, &shifted, SetOp::Prod)?;
        if best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s, x.clone()));
        }
    }
    Ok(best.expect("nonempty set"))
}

struct SoftBuilder<'a> {
    table: &'a ExponentTable,
    n: usize,
    out: Vec<SoftRow>,
}

impl SoftBuilder<'_> {
    /// `value / n^e`, with the value's decimal logarithm supplied.
    fn power(&mut self, entry: &str, value: String, log10_value: f64) {
        let e = self.table.get(entry).expect("exponent table entry");
        let ef = rational_f64(&e.value);
        let check = SoftCheck::from_log10(
            entry,
            value,
            format!("n^({})", e.value),
            Some(e.value.to_string()),
            log10_value - ef * log10(self.n),
        );
        self.out.push(SoftRow::new(check, e.statement));
    }

    /// `value / (n^e · d^f)` with `d` a pool lower bound for `d⁺(A)`.
    fn power_with_d(&mut self, entry: &str, value: String, log10_value: f64, d: &Rational) {
        let e = self.table.get(entry).expect("exponent table entry");
        let f = e.d_exponent.as_ref().expect("entry has a d exponent");
        let log_d = log10_big(&d.numer().magnitude().clone()) - log10_big(&d.denom().magnitude().clone());
        let reference_log = rational_f64(&e.value) * log10(self.n) + rational_f64(f) * log_d;
        let check = SoftCheck::from_log10(
            entry,
            value,
            format!("n^({})·d^({}) with d = {d}", e.value, f),
            Some(e.value.to_string()),
            log10_value - reference_log,
        );
        self.out.push(SoftRow::new(check, e.statement));
    }
}

fn rational_f64(x: &Rational) -> f64 {
    num_traits::ToPrimitive::to_f64(x).expect("small exponent")
}

fn skipped(e: &Error) -> Value {
    json!({ "skipped": e.to_string() })
}

/// Set sizes, energies, expander sizes and the shift scan. Items that need
/// `0 ∉ A` are recorded as skip markers when `0 ∈ A`.
pub fn compute_quantities(a: &FiniteRealSet, table: &ExponentTable) -> Result<QuantityFragment> {
    if a.is_empty() {
        return Err(Error::Domain("quantities need a nonempty set".into()));
    }
    let n = a.len();
    let mut q = IndexMap::new();
    let mut soft = SoftBuilder { table, n, out: Vec::new() };
    let sums = combine(a, a, SetOp::Sum)?;
    let diffs = combine(a, a, SetOp::Diff)?;
    let prods = size(a, a, SetOp::Prod)?;
    let (s, d) = (sums.len(), diffs.len());
    q.insert("n".into(), json!(n));
    q.insert("sumset".into(), json!(s));
    q.insert("difference_set".into(), json!(d));
    q.insert("product_set".into(), json!(prods));
    let expander_sum = size(a, &sums, SetOp::Prod)?;
    let expander_diff = size(a, &diffs, SetOp::Prod)?;
    q.insert("a_times_sumset".into(), json!(expander_sum));
    q.insert("a_times_difference_set".into(), json!(expander_diff));
    let (shift_sum, at_sum) = max_shift(a, SetOp::Sum)?;
    let (shift_diff, at_diff) = max_shift(a, SetOp::Diff)?;
    q.insert("max_a_times_shift_sum".into(), json!({ "value": shift_sum, "a": at_sum.to_string() }));
    q.insert("max_a_times_shift_difference".into(), json!({ "value": shift_diff, "a": at_diff.to_string() }));
    let e_plus = additive_energy(a)?;
    q.insert("additive_energy".into(), json!(e_plus.to_string()));

    let quot = if a.contains_zero() {
        Err(Error::Domain("multiplicative quantities need 0 ∉ A".into()))
    } else {
        size(a, a, SetOp::Quot)
    };
    let e_times = if a.contains_zero() {
        Err(Error::Domain("multiplicative quantities need 0 ∉ A".into()))
    } else {
        multiplicative_energy(a)
    };
    match &quot {
        Ok(v) => q.insert("quotient_set".into(), json!(v)),
        Err(e) => q.insert("quotient_set".into(), skipped(e)),
    };
    match &e_times {
        Ok(v) => q.insert("multiplicative_energy".into(), json!(v.to_string())),
        Err(e) => q.insert("multiplicative_energy".into(), skipped(e)),
    };
    let scan = match &e_times {
        Ok(et) => Ok(Some(shift_scan(n, shift_sum, at_sum.clone(), et))),
        Err(e) => Err(e.clone()),
    };
    match &scan {
        Ok(Some((b, size, ratio))) => q.insert(
            "shift_scan".into(),
            json!({ "b": b.to_string(), "a_times_shift": size, "ratio": ratio.to_string() }),
        ),
        Ok(None) => None,
        Err(e) => q.insert("shift_scan".into(), skipped(e)),
    };

    let d_plus = d_lower(a, DKind::DPlus, &WitnessPool::default())?;
    q.insert(
        "d_plus_pool_lower".into(),
        json!({ "value": d_plus.value.to_string(), "witness_len": d_plus.witness_len }),
    );
    if !a.contains_zero() {
        let d_times = d_lower(a, DKind::DTimes, &WitnessPool::default())?;
        q.insert(
            "d_times_pool_lower".into(),
            json!({ "value": d_times.value.to_string(), "witness_len": d_times.witness_len }),
        );
    }

    soft.power("sum_product_four_thirds", (s + prods).to_string(), log10(s + prods));
    soft.power("sum_product", (s + prods).to_string(), log10(s + prods));
    soft.power("difference_product", (d + prods).to_string(), log10(d + prods));
    let mixed = BigUint::from(d).pow(35) * BigUint::from(prods).pow(37);
    soft.power("difference_product_mixed", mixed.to_string(), log10_big(&mixed));
    if let Ok(qs) = quot {
        let four = s + d + prods + qs;
        soft.power("four_set_sum_product", four.to_string(), log10(four));
        soft.power("difference_quotient", (d + qs).to_string(), log10(d + qs));
        soft.power("difference_quotient_product", (d * qs).to_string(), log10(d) + log10(qs));
    }
    soft.power("expander_difference", expander_diff.to_string(), log10(expander_diff));
    soft.power("expander_sum", expander_sum.to_string(), log10(expander_sum));
    soft.power("expander_shift", shift_sum.max(shift_diff).to_string(), log10(shift_sum.max(shift_diff)));
    if let (Ok(et), Ok(Some((_, size, _)))) = (&e_times, &scan) {
        let v = BigUint::from(*size).pow(2) * et;
        soft.power("shift_energy", v.to_string(), log10_big(&v));
    }
    soft.power("elekes", (s * prods).to_string(), log10(s) + log10(prods));
    soft.power_with_d("sumset_d_plus", s.to_string(), log10(s), &d_plus.value);
    soft.power_with_d("difference_d_plus", d.to_string(), log10(d), &d_plus.value);
    soft.power_with_d("energy_d_plus", e_plus.to_string(), log10_big(&e_plus), &d_plus.value);

    Ok(QuantityFragment { quantities: q, soft_checks: soft.out })
}

/// The `b ∈ A` maximising `|A(A+b)|` (smallest on ties) and the exact
/// `|A|⁶ / (|A(A+b)|²·E×(A))`.
fn shift_scan(n: usize, size: usize, b: Rational, e_times: &BigUint) -> (Rational, usize, Rational) {
    let num = BigUint::from(n).pow(6);
    let den = BigUint::from(size).pow(2) * e_times;
    (b, size, Rational::new(num.into(), den.into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use sumprod_core::sets::int;

    fn get(f: &QuantityFragment, k: &str) -> u64 {
        f.get_u64(k).unwrap_or_else(|| panic!("{k}"))
    }

    #[test]
    fn small_examples() {
        let t = ExponentTable::standard();
        let f = compute_quantities(&FiniteRealSet::from_integers([1, 2]), &t).unwrap();
        assert_eq!(get(&f, "sumset"), 3);
        assert_eq!(get(&f, "product_set"), 3);
        assert_eq!(get(&f, "a_times_sumset"), 5);
        let f = compute_quantities(&FiniteRealSet::from_integers([1, 2, 3]), &t).unwrap();
        assert_eq!(get(&f, "difference_set"), 5);
        assert_eq!(get(&f, "quotient_set"), 7);
        let f = compute_quantities(&FiniteRealSet::singleton(int(1)), &t).unwrap();
        for k in ["sumset", "difference_set", "product_set", "quotient_set", "a_times_sumset", "a_times_difference_set"]
        {
            assert_eq!(get(&f, k), 1, "{k}");
        }
    }

    #[test]
    fn shift_scan_value() {
        // A = {1,2}: A(A+1) = {2,3,4,6}, A(A+2) = {3,4,6,8}; both size 4, b = 1.
        // E×({1,2}) = 6, so the ratio is 64 / (16·6) = 2/3.
        let f = compute_quantities(&FiniteRealSet::from_integers([1, 2]), &ExponentTable::standard()).unwrap();
        let s = &f.quantities["shift_scan"];
        assert_eq!(s["b"], "1");
        assert_eq!(s["a_times_shift"], 4);
        assert_eq!(s["ratio"], "2/3");
    }

    #[test]
    fn zero_marks_multiplicative_items_skipped() {
        let f = compute_quantities(&FiniteRealSet::from_integers([0, 1, 3]), &ExponentTable::standard()).unwrap();
        assert!(f.quantities["quotient_set"]["skipped"].is_string());
        assert!(f.quantities["multiplicative_energy"]["skipped"].is_string());
        assert_eq!(get(&f, "sumset"), 6);
        assert!(!f.soft_checks.iter().any(|s| s.name == "difference_quotient"));
    }
}
