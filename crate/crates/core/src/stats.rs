//! Certified one-sided bounds for the structure statistics.
//!
//! `d⁺`, `d×` and `d₄⁺` are suprema over all finite `B`; any single witness
//! `B` certifies a lower bound `E_m(A,B) / (|A||B|^{m−1})`, and
//! [`d_lower`] searches a fixed, versioned [`WitnessPool`]. `D⁺` and `D×`
//! are infima over coverings of `A` by popular differences / quotients; a
//! [`DUpperWitness`] that passes [`validate_d_witness`] certifies an upper
//! bound.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{self, RepHistogram};
use crate::error::{Error, Result};
use crate::exact;
use crate::sets::{combine, inverse_set, popular_slice, FiniteRealSet, Rational, SetOp};

pub const POOL_VERSION: &str = "pool-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DKind {
    DPlus,
    DTimes,
    D4Plus,
}

impl DKind {
    pub fn op(self) -> SetOp {
        match self {
            DKind::DTimes => SetOp::Quot,
            DKind::DPlus | DKind::D4Plus => SetOp::Diff,
        }
    }

    pub fn moment(self) -> u32 {
        match self {
            DKind::D4Plus => 4,
            DKind::DPlus | DKind::DTimes => 3,
        }
    }

    fn multiplicative(self) -> bool {
        self == DKind::DTimes
    }
}

/// Which candidate witnesses `B` [`d_lower`] tries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessPool {
    /// `B = A`.
    pub include_self: bool,
    /// `B = −A` (additive) or `B = A⁻¹` (multiplicative).
    pub include_reflection: bool,
    /// Most popular elements of `A−A` (or `A/A`), `factor·|A|` of them per entry.
    pub truncation_factors: Vec<usize>,
    /// Dyadic level sets of `r_{A−A}` (or `r_{A/A}`).
    pub dyadic_levels: bool,
    /// Number of slices `A ∩ (A + x)` (or `A ∩ λA`) at the most popular nontrivial shifts.
    pub slices: usize,
    /// One singleton witness, which always certifies the value 1.
    pub singleton: bool,
    /// Candidates larger than `max_witness_factor·|A|` are skipped.
    pub max_witness_factor: usize,
    pub extra: Vec<FiniteRealSet>,
}

impl Default for WitnessPool {
    fn default() -> Self {
        WitnessPool {
            include_self: true,
            include_reflection: true,
            truncation_factors: vec![2],
            dyadic_levels: true,
            slices: 3,
            singleton: true,
            max_witness_factor: 4,
            extra: Vec::new(),
        }
    }
}

impl WitnessPool {
    /// The pool restricted to witnesses no larger than `A` itself.
    pub fn bounded_by_source() -> Self {
        WitnessPool { max_witness_factor: 1, truncation_factors: vec![1], ..Self::default() }
    }

    /// Candidate witnesses for `A`, deduplicated, in deterministic order.
    pub fn candidates(&self, a: &FiniteRealSet, kind: DKind) -> Result<Vec<FiniteRealSet>> {
        let op = kind.op();
        let limit = self.max_witness_factor.saturating_mul(a.len()).max(1);
        let mut out: Vec<FiniteRealSet> = Vec::new();
        let mut push = |b: FiniteRealSet| {
            let b = if kind.multiplicative() { b.without_zero() } else { b };
            if !b.is_empty() && b.len() <= limit && !out.contains(&b) {
                out.push(b);
            }
        };
        if self.include_self {
            push(a.clone());
        }
        if self.include_reflection {
            push(if kind.multiplicative() { inverse_set(a) } else { a.neg() });
        }
        let self_hist = RepHistogram::build(a, a, op)?;
        let popular = self_hist.by_popularity();
        for f in &self.truncation_factors {
            let k = f.saturating_mul(a.len());
            push(popular.iter().take(k).map(|(x, _)| x.clone()).collect());
        }
        if self.dyadic_levels {
            for (_, level) in self_hist.dyadic_levels().into_iter().rev() {
                push(level);
            }
        }
        if self.slices > 0 {
            let trivial = if kind.multiplicative() { Rational::one() } else { Rational::zero() };
            for (x, _) in popular.iter().filter(|(x, _)| *x != trivial).take(self.slices) {
                let slice = if kind.multiplicative() {
                    popular_slice(a, x)?
                } else {
                    let shifted: FiniteRealSet = a.iter().map(|y| y + x).collect();
                    a.intersection(&shifted)
                };
                push(slice);
            }
        }
        if self.singleton {
            let unit = if kind.multiplicative() { Rational::one() } else { Rational::zero() };
            push(FiniteRealSet::singleton(unit));
        }
        for b in &self.extra {
            push(b.clone());
        }
        if out.is_empty() {
            return Err(Error::Config("witness pool produced no candidates".into()));
        }
        Ok(out)
    }
}

/// A certified lower bound `E_m(A,B) / (|A||B|^{m−1})` for `d⁺`, `d×` or `d₄⁺`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DLowerBound {
    pub kind: DKind,
    #[serde(with = "exact::serde_rational")]
    pub value: Rational,
    pub witness: FiniteRealSet,
    #[serde(with = "exact::serde_biguint")]
    pub moment_value: BigUint,
    pub source_len: usize,
    pub witness_len: usize,
}

impl DLowerBound {
    /// Recomputes the bound from scratch for `a` and compares.
    pub fn revalidate(&self, a: &FiniteRealSet) -> Result<()> {
        let fresh = d_lower_for_witness(a, self.kind, &self.witness)?;
        if fresh != *self {
            return Err(Error::invariant(format!("{:?} lower bound does not recompute", self.kind)));
        }
        Ok(())
    }
}

/// The bound certified by one witness `B`.
pub fn d_lower_for_witness(a: &FiniteRealSet, kind: DKind, b: &FiniteRealSet) -> Result<DLowerBound> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("d bounds need nonempty A and B"));
    }
    if kind.multiplicative() && (a.contains_zero() || b.contains_zero()) {
        return Err(Error::domain("multiplicative d bounds need 0 ∉ A, B"));
    }
    let m = kind.moment();
    let moment_value = RepHistogram::build(a, b, kind.op())?.moment(m);
    let denom = BigUint::from(a.len()) * BigUint::from(b.len()).pow(m - 1);
    let value = Rational::new(moment_value.clone().into(), denom.into());
    Ok(DLowerBound { kind, value, witness: b.clone(), moment_value, source_len: a.len(), witness_len: b.len() })
}

fn better_lower(x: &DLowerBound, y: &DLowerBound) -> bool {
    x.value > y.value
        || (x.value == y.value
            && (x.witness_len < y.witness_len || (x.witness_len == y.witness_len && x.witness < y.witness)))
}

/// Best certified lower bound over the pool.
pub fn d_lower(a: &FiniteRealSet, kind: DKind, pool: &WitnessPool) -> Result<DLowerBound> {
    if a.is_empty() {
        return Err(Error::domain("d bounds need a nonempty set"));
    }
    if kind.multiplicative() && a.contains_zero() {
        return Err(Error::domain("multiplicative d bounds need 0 ∉ A"));
    }
    let candidates = pool.candidates(a, kind)?;
    let evaluated: Vec<DLowerBound> =
        candidates.par_iter().map(|b| d_lower_for_witness(a, kind, b)).collect::<Result<_>>()?;
    let mut best: Option<DLowerBound> = None;
    for cand in evaluated {
        if best.as_ref().is_none_or(|b| better_lower(&cand, b)) {
            best = Some(cand);
        }
    }
    Ok(best.expect("pool is nonempty"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DUpperKind {
    DPlus,
    DTimes,
}

impl DUpperKind {
    pub fn op(self) -> SetOp {
        match self {
            DUpperKind::DPlus => SetOp::Diff,
            DUpperKind::DTimes => SetOp::Quot,
        }
    }
}

/// `(Q, R, t)` with `A ⊆ {x : r_{Q∘R}(x) ≥ t}`; certifies `D(A) ≤ |Q|²|R|²|A|⁻¹t⁻³`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DUpperWitness {
    pub kind: DUpperKind,
    pub q: FiniteRealSet,
    pub r: FiniteRealSet,
    pub t: u64,
}

impl DUpperWitness {
    /// `|Q|²|R|²|A|⁻¹t⁻³` without checking the constraints.
    pub fn claimed_value(&self, a_len: usize) -> Rational {
        d_value(self.q.len(), self.r.len(), a_len, self.t)
    }
}

pub(crate) fn d_value(q: usize, r: usize, a: usize, t: u64) -> Rational {
    let num = BigUint::from(q).pow(2) * BigUint::from(r).pow(2);
    let den = BigUint::from(a) * BigUint::from(t).pow(3);
    Rational::new(num.into(), den.into())
}

/// Checks every constraint of the witness exactly and returns its value.
pub fn validate_d_witness(a: &FiniteRealSet, w: &DUpperWitness) -> Result<Rational> {
    if a.is_empty() || w.q.is_empty() || w.r.is_empty() {
        return Err(Error::InvalidWitness("A, Q and R must be nonempty".into()));
    }
    if w.kind == DUpperKind::DTimes && w.r.contains_zero() {
        return Err(Error::InvalidWitness("0 ∈ R for a quotient witness".into()));
    }
    if w.r.len() > w.q.len() {
        return Err(Error::InvalidWitness(format!("|R| ≤ |Q| fails: {} > {}", w.r.len(), w.q.len())));
    }
    if w.t < 1 {
        return Err(Error::InvalidWitness("t ≥ 1 fails".into()));
    }
    let t_sq_a = BigUint::from(w.t).pow(2) * BigUint::from(a.len());
    let qr_sq = BigUint::from(w.q.len()) * BigUint::from(w.r.len()).pow(2);
    if t_sq_a > qr_sq {
        return Err(Error::InvalidWitness(format!("t²|A| ≤ |Q||R|² fails: {t_sq_a} > {qr_sq}")));
    }
    let hist = RepHistogram::build(&w.q, &w.r, w.kind.op())?;
    if let Some(x) = a.iter().find(|x| hist.count(x) < w.t) {
        return Err(Error::InvalidWitness(format!(
            "covering fails: r(x) = {} < t = {} at x = {x}",
            hist.count(x),
            w.t
        )));
    }
    Ok(w.claimed_value(a.len()))
}

/// `(Q, R, t) = (AB, B, |B|)`, valid for any nonempty `B` with `0 ∉ B`.
pub fn product_witness(a: &FiniteRealSet, b: &FiniteRealSet) -> Result<DUpperWitness> {
    Ok(DUpperWitness { kind: DUpperKind::DTimes, q: combine(a, b, SetOp::Prod)?, r: b.clone(), t: b.len() as u64 })
}

/// Best `d⁺` lower bound against the best `D×` upper bound found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyProbe {
    pub d_plus_lower: DLowerBound,
    pub d_times_upper: DUpperWitness,
    #[serde(with = "exact::serde_rational")]
    pub upper_value: Rational,
    /// `lower(d⁺) / upper(D×)`; a diagnostic only.
    #[serde(with = "exact::serde_rational")]
    pub ratio: Rational,
}

pub fn key_inequality_probe(a: &FiniteRealSet, pool: &WitnessPool) -> Result<KeyProbe> {
    if a.is_empty() || a.contains_zero() {
        return Err(Error::domain("key inequality probe needs nonempty A with 0 ∉ A"));
    }
    let lower = d_lower(a, DKind::DPlus, pool)?;
    let mut bases: Vec<FiniteRealSet> = vec![FiniteRealSet::singleton(Rational::one()), a.clone(), inverse_set(a)];
    let quot = RepHistogram::build(a, a, SetOp::Quot)?;
    for (lambda, _) in quot.by_popularity().iter().filter(|(x, _)| !num_traits::One::is_one(x)).take(pool.slices) {
        bases.push(popular_slice(a, lambda)?);
    }
    for (_, level) in quot.dyadic_levels() {
        if level.len() <= pool.max_witness_factor.saturating_mul(a.len()) {
            bases.push(level);
        }
    }
    let mut best: Option<(Rational, DUpperWitness)> = None;
    for b in bases {
        let w = product_witness(a, &b)?;
        let v = validate_d_witness(a, &w)?;
        let better = match &best {
            None => true,
            Some((bv, bw)) => v < *bv || (v == *bv && (w.r.len(), &w.r) < (bw.r.len(), &bw.r)),
        };
        if better {
            best = Some((v, w));
        }
    }
    let (upper_value, d_times_upper) = best.expect("at least the singleton base");
    let ratio = &lower.value / &upper_value;
    Ok(KeyProbe { d_plus_lower: lower, d_times_upper, upper_value, ratio })
}

/// `#{x : r(x) ≥ τ}` against `E₃/τ³`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TailCheck {
    pub tau: u64,
    pub tail_count: usize,
    #[serde(with = "exact::serde_biguint")]
    pub third_moment: BigUint,
    pub holds: bool,
}

fn tail_from_hist(hist: &RepHistogram, e3: &BigUint, tau: u64) -> TailCheck {
    let tail_count = hist.tail_count(tau);
    let holds = BigUint::from(tail_count) * BigUint::from(tau).pow(3) <= *e3;
    TailCheck { tau, tail_count, third_moment: e3.clone(), holds }
}

pub fn chebyshev_tail(a: &FiniteRealSet, b: &FiniteRealSet, op: SetOp, tau: u64) -> Result<TailCheck> {
    if tau == 0 {
        return Err(Error::domain("τ must be positive"));
    }
    let hist = RepHistogram::build(a, b, op)?;
    Ok(tail_from_hist(&hist, &hist.moment(3), tau))
}

/// Tail checks for every `τ ∈ 1..=max r`.
pub fn chebyshev_all(a: &FiniteRealSet, b: &FiniteRealSet, op: SetOp) -> Result<Vec<TailCheck>> {
    let hist = RepHistogram::build(a, b, op)?;
    let e3 = hist.moment(3);
    Ok((1..=hist.max_count()).map(|tau| tail_from_hist(&hist, &e3, tau)).collect())
}

/// The Hölder chain for fixed coefficients `(1, σ₂, σ₃)`:
/// `N ≤ |C|^{3/4}(Σ_c N_c⁴)^{1/4} ≤ |C|^{3/4}(Σ_x r_{A+σ₂B}(x)⁴)^{1/4}`,
/// checked as `N⁴ ≤ |C|³·Σ_c N_c⁴` and `Σ_c N_c⁴ ≤ Σ_x r⁴`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigmaBound {
    #[serde(with = "exact::serde_rational")]
    pub sigma2: Rational,
    #[serde(with = "exact::serde_rational")]
    pub sigma3: Rational,
    pub count: u64,
    #[serde(with = "exact::serde_biguint")]
    pub per_c_fourth_sum: BigUint,
    #[serde(with = "exact::serde_biguint")]
    pub fourth_moment: BigUint,
    pub c_len: usize,
    /// `Σ r⁴ / (|A||B|³)`: the `d₄⁺(A)` lower bound from the witness `−σ₂B`.
    #[serde(with = "exact::serde_rational")]
    pub d4_witness_value: Rational,
    pub holder_step: bool,
    pub extension_step: bool,
    pub holds: bool,
}

pub fn sigma_bound_check(
    a: &FiniteRealSet,
    b: &FiniteRealSet,
    c: &FiniteRealSet,
    sigma2: &Rational,
    sigma3: &Rational,
    cap: Option<usize>,
) -> Result<SigmaBound> {
    if a.is_empty() || b.is_empty() || c.is_empty() {
        return Err(Error::domain("σ bound needs nonempty sets"));
    }
    let cap = cap.unwrap_or(energy::DEFAULT_SIGMA_CAP);
    let size = a.len() as u128 * b.len() as u128 * c.len() as u128;
    if size > cap as u128 {
        return Err(Error::ResourceLimit { what: "sigma grid |A||B||C|", needed: size, cap: cap as u128 });
    }
    let scaled_b = crate::sets::dilate(b, sigma2)?;
    if sigma3.is_zero() {
        return Err(Error::domain("σ₃ must be nonzero"));
    }
    let hist = RepHistogram::build(a, &scaled_b, SetOp::Sum)?;
    let per_c: Vec<u64> = c.iter().map(|z| hist.count(&(-(sigma3 * z)))).collect();
    let count: u64 = per_c.iter().sum();
    let direct = energy::sigma_count(a, b, c, &Rational::one(), sigma2, sigma3)?;
    if direct != count {
        return Err(Error::invariant(format!("σ count mismatch: histogram {count} vs direct {direct}")));
    }
    let per_c_fourth_sum = exact::power_sum(per_c.iter().copied(), 4);
    let fourth_moment = hist.moment(4);
    let c_cubed = BigUint::from(c.len()).pow(3);
    let n4 = BigUint::from(count).pow(4);
    let holder_step = n4 <= &c_cubed * &per_c_fourth_sum;
    let extension_step = per_c_fourth_sum <= fourth_moment;
    let holds = n4 <= &c_cubed * &fourth_moment;
    let d4_witness_value =
        Rational::new(fourth_moment.clone().into(), (BigUint::from(a.len()) * BigUint::from(b.len()).pow(3)).into());
    Ok(SigmaBound {
        sigma2: sigma2.clone(),
        sigma3: sigma3.clone(),
        count,
        per_c_fourth_sum,
        fourth_moment,
        c_len: c.len(),
        d4_witness_value,
        holder_step,
        extension_step,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::{int, rat};

    fn set(v: &[i64]) -> FiniteRealSet {
        FiniteRealSet::from_integers(v.iter().copied())
    }

    #[test]
    fn witness_values_match_hand_counts() {
        let ap = set(&[1, 2, 3, 4]);
        let d = d_lower_for_witness(&ap, DKind::DPlus, &ap).unwrap();
        assert_eq!(d.moment_value, BigUint::from(136u32));
        assert_eq!(d.value, rat(17, 8));
        let d4 = d_lower_for_witness(&ap, DKind::D4Plus, &ap).unwrap();
        assert_eq!(d4.moment_value, BigUint::from(452u32));
        assert_eq!(d4.value, rat(113, 64));
        let gp = set(&[1, 2, 4, 8]);
        let dt = d_lower_for_witness(&gp, DKind::DTimes, &gp).unwrap();
        assert_eq!(dt.moment_value, BigUint::from(136u32));
        assert_eq!(dt.value, rat(17, 8));
    }

    #[test]
    fn pool_search_is_at_least_self_witness_and_at_most_size() {
        let ap = FiniteRealSet::from_integers(1..=12);
        for kind in [DKind::DPlus, DKind::DTimes, DKind::D4Plus] {
            let best = d_lower(&ap, kind, &WitnessPool::default()).unwrap();
            let own = d_lower_for_witness(&ap, kind, &ap).unwrap();
            assert!(best.value >= own.value);
            assert!(best.value >= int(1) && best.value <= int(12));
            best.revalidate(&ap).unwrap();
        }
        let single = set(&[5]);
        assert_eq!(d_lower(&single, DKind::DPlus, &WitnessPool::default()).unwrap().value, int(1));
    }

    #[test]
    fn empty_pool_is_a_configuration_error() {
        let pool = WitnessPool {
            include_self: false,
            include_reflection: false,
            truncation_factors: vec![],
            dyadic_levels: false,
            slices: 0,
            singleton: false,
            max_witness_factor: 4,
            extra: vec![],
        };
        assert!(matches!(d_lower(&set(&[1, 2]), DKind::DPlus, &pool), Err(Error::Config(_))));
    }

    #[test]
    fn d_witness_validation() {
        let a = set(&[1, 2, 4, 8]);
        let trivial = product_witness(&a, &set(&[1])).unwrap();
        assert_eq!(validate_d_witness(&a, &trivial).unwrap(), int(4));
        let w = product_witness(&a, &a).unwrap();
        assert_eq!(w.q.len(), 7);
        assert_eq!(validate_d_witness(&a, &w).unwrap(), rat(49, 16));

        let too_popular = DUpperWitness { t: 6, ..w.clone() };
        let err = validate_d_witness(&a, &too_popular).unwrap_err();
        assert!(matches!(&err, Error::InvalidWitness(m) if m.contains("t²|A|")), "{err}");

        let swapped = DUpperWitness { q: w.r.clone(), r: w.q.clone(), ..w.clone() };
        assert!(matches!(validate_d_witness(&a, &swapped), Err(Error::InvalidWitness(m)) if m.contains("|R| ≤ |Q|")));

        let uncovered = DUpperWitness { q: set(&[1, 2, 4, 16]), r: set(&[1]), t: 1, kind: DUpperKind::DTimes };
        assert!(matches!(validate_d_witness(&a, &uncovered), Err(Error::InvalidWitness(m)) if m.contains("covering")));
    }

    #[test]
    fn key_probe_on_singleton_and_progressions() {
        let p = key_inequality_probe(&set(&[3]), &WitnessPool::default()).unwrap();
        assert_eq!(p.d_plus_lower.value, int(1));
        assert_eq!(p.upper_value, int(1));
        assert_eq!(p.ratio, int(1));
        let ap = FiniteRealSet::from_integers(1..=16);
        let p = key_inequality_probe(&ap, &WitnessPool::default()).unwrap();
        assert_eq!(validate_d_witness(&ap, &p.d_times_upper).unwrap(), p.upper_value);
    }

    #[test]
    fn chebyshev_examples() {
        let a = set(&[1, 2, 3]);
        let t = chebyshev_tail(&a, &a, SetOp::Diff, 2).unwrap();
        assert_eq!(t.tail_count, 3);
        assert_eq!(t.third_moment, BigUint::from(45u32));
        assert!(t.holds);
        let t1 = chebyshev_tail(&a, &a, SetOp::Diff, 1).unwrap();
        assert_eq!(t1.tail_count, 5);
        let t9 = chebyshev_tail(&a, &a, SetOp::Diff, 9).unwrap();
        assert_eq!(t9.tail_count, 0);
        assert!(chebyshev_all(&a, &a, SetOp::Diff).unwrap().iter().all(|t| t.holds));
        assert!(chebyshev_tail(&a, &a, SetOp::Diff, 0).is_err());
    }

    #[test]
    fn sigma_bound_examples() {
        let two = set(&[1, 2]);
        let s = sigma_bound_check(&two, &two, &two, &int(1), &int(-2), None).unwrap();
        assert_eq!(s.count, 2);
        assert_eq!(s.fourth_moment, BigUint::from(18u32));
        assert!(s.holds && s.holder_step && s.extension_step);

        let three = set(&[1, 2, 3]);
        let s = sigma_bound_check(&three, &three, &three, &int(1), &int(-2), None).unwrap();
        assert_eq!(s.count, 5);
        assert_eq!(s.fourth_moment, BigUint::from(115u32));
        assert!(s.holds);

        let s = sigma_bound_check(&three, &two, &set(&[7]), &rat(3, 2), &rat(3, 2), None).unwrap();
        assert_eq!(s.c_len, 1);
        assert!(s.holds);
    }
}
