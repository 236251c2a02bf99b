//! Constructive decompositions driven by dyadic pigeonholing.
//!
//! An extraction takes `T` and a witness `B`, picks the dominant dyadic
//! level `P` of `r_{T∘B}`, then the dominant level of the secondary count
//! `a ↦ #{(b, x) ∈ B×P : b ⋆ x = a}` on `T`, and returns that level as
//! `A′ ⊆ T`. Iterating extractions on the shrinking remainder gives the
//! half/half covers and the additive/multiplicative partition below. Every
//! certificate carries the exact quantities it was built from and can be
//! recomputed from scratch.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_integer::Roots;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::energy::{self, dyadic_bucket_count, dyadic_floor, RepHistogram};
use crate::error::{Error, Result};
use crate::exact::{self, compare_root_sum};
use crate::sets::{inverse_set, FiniteRealSet, Rational, SetOp};
use crate::soft::SoftCheck;
use crate::stats::{self, d_lower, DKind, DUpperKind, DUpperWitness, WitnessPool, POOL_VERSION};

/// Cap on `max(|P|, |B|)` for counting solutions of `(p+b)/(q+c) = (p′+b′)/(q′+c′)`.
pub const DEFAULT_SOLS_CAP: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionMode {
    /// Third moment of `r_{T/B}`; secondary count `r_{B·P}`.
    ThirdMult,
    /// Third moment of `r_{T−B}`; secondary count `r_{B+P}`.
    ThirdAdd,
    /// Fourth moment of `r_{T−B}`; secondary count `r_{B+P}`.
    FourthAdd,
}

impl ExtractionMode {
    pub fn primary_op(self) -> SetOp {
        match self {
            ExtractionMode::ThirdMult => SetOp::Quot,
            ExtractionMode::ThirdAdd | ExtractionMode::FourthAdd => SetOp::Diff,
        }
    }

    pub fn secondary_op(self) -> SetOp {
        match self {
            ExtractionMode::ThirdMult => SetOp::Prod,
            ExtractionMode::ThirdAdd | ExtractionMode::FourthAdd => SetOp::Sum,
        }
    }

    pub fn moment(self) -> u32 {
        match self {
            ExtractionMode::FourthAdd => 4,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SideCondition {
    pub name: String,
    pub holds: bool,
}

/// Upper-bound witness for `D(A′)` built from `(B, P)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DWitnessReport {
    pub witness: DUpperWitness,
    /// `|B|²|P|²q⁻³|A′|⁻¹`.
    #[serde(with = "exact::serde_rational")]
    pub claimed_value: Rational,
    /// Value of the witness as validated; differs from the claim when `t < q`.
    #[serde(with = "exact::serde_rational")]
    pub validated_value: Rational,
    pub t_lowered: bool,
}

/// Solutions of `(p+b)/(q+c) = (p′+b′)/(q′+c′)` over `P⁴ × B⁴`, zero denominators excluded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolsCount {
    pub p_len: usize,
    pub b_len: usize,
    #[serde(with = "exact::serde_biguint")]
    pub count: BigUint,
    /// `|P|³|B|³`.
    #[serde(with = "exact::serde_biguint")]
    pub reference: BigUint,
    pub ratio: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionCertificate {
    pub mode: ExtractionMode,
    pub source: FiniteRealSet,
    pub witness: FiniteRealSet,
    pub delta: u64,
    /// `P = {x : Δ ≤ r_{T∘B}(x) < 2Δ}`.
    pub level_set: FiniteRealSet,
    /// `E_m(T, B)`.
    #[serde(with = "exact::serde_biguint")]
    pub moment_value: BigUint,
    /// `|P|Δ^m`.
    #[serde(with = "exact::serde_biguint")]
    pub level_value: BigUint,
    /// `2^m·(⌊log₂ max r⌋ + 1)`; `level_value·level_constant ≥ moment_value`.
    pub level_constant: u64,
    pub q: u64,
    /// `A′ = {a ∈ T : q ≤ s(a) < 2q}` for the secondary count `s`.
    pub extracted: FiniteRealSet,
    /// `Σ_{x∈P} r_{T∘B}(x)`, which equals `Σ_{a∈T} s(a)`.
    pub level_mass: u64,
    /// `Σ_{a∈A′} s(a)`.
    pub extracted_mass: u64,
    /// `2·(⌊log₂ max s⌋ + 1)`; `|A′|·q·q_constant ≥ level_mass`.
    pub q_constant: u64,
    pub side_conditions: Vec<SideCondition>,
    pub d_witness: Option<DWitnessReport>,
    pub sols: Option<SolsCount>,
    pub sols_skipped: Option<String>,
}

fn pow_u64(x: u64, m: u32) -> BigUint {
    BigUint::from(x).pow(m)
}

fn extract(t: &FiniteRealSet, b: &FiniteRealSet, mode: ExtractionMode) -> Result<ExtractionCertificate> {
    if t.is_empty() || b.is_empty() {
        return Err(Error::domain("extraction needs nonempty T and B"));
    }
    if mode == ExtractionMode::ThirdMult && (t.contains_zero() || b.contains_zero()) {
        return Err(Error::domain("multiplicative extraction needs 0 ∉ T, B"));
    }
    let m = mode.moment();
    let hist = RepHistogram::build(t, b, mode.primary_op())?;
    let moment_value = hist.moment(m);

    let mut best: Option<(BigUint, u64, FiniteRealSet)> = None;
    for (delta, level) in hist.dyadic_levels() {
        let v = BigUint::from(level.len()) * pow_u64(delta, m);
        if best.as_ref().is_none_or(|(bv, _, _)| v > *bv) {
            best = Some((v, delta, level));
        }
    }
    let (level_value, delta, level_set) = best.expect("nonempty histogram has a level");
    let level_constant = (1u64 << m) * dyadic_bucket_count(hist.max_count());
    let level_mass: u64 = level_set.iter().map(|x| hist.count(x)).sum();

    let secondary = RepHistogram::build(b, &level_set, mode.secondary_op())?;
    let counts: Vec<(&Rational, u64)> = t.iter().map(|a| (a, secondary.count(a))).filter(|(_, s)| *s > 0).collect();
    let total: u64 = counts.iter().map(|(_, s)| s).sum();
    if total != level_mass {
        return Err(Error::invariant(format!("mass identity fails: level {level_mass} vs secondary {total}")));
    }
    let mut bucket_mass: std::collections::BTreeMap<u64, u64> = Default::default();
    for (_, s) in &counts {
        *bucket_mass.entry(dyadic_floor(*s)).or_default() += s;
    }
    let mut q = 0u64;
    let mut extracted_mass = 0u64;
    for (&k, &mass) in &bucket_mass {
        if mass > extracted_mass {
            q = k;
            extracted_mass = mass;
        }
    }
    let extracted: FiniteRealSet =
        counts.iter().filter(|(_, s)| *s >= q && *s < 2 * q).map(|(a, _)| (*a).clone()).collect();
    let max_s = counts.iter().map(|(_, s)| *s).max().unwrap_or(0);
    let q_constant = 2 * dyadic_bucket_count(max_s);

    let mut side_conditions = vec![SideCondition { name: "Δ ≤ |B|".into(), holds: delta <= b.len() as u64 }];
    match mode {
        ExtractionMode::FourthAdd => {
            side_conditions.push(SideCondition { name: "q ≤ |T|".into(), holds: q <= t.len() as u64 });
        }
        _ => side_conditions
            .push(SideCondition {
                name: "q ≤ min(|B|, |P|)".into(), holds: q <= b.len().min(level_set.len()) as u64
            }),
    }

    let d_witness = match mode {
        ExtractionMode::FourthAdd => None,
        _ => Some(d_witness_for(mode, b, &level_set, q, &extracted)?),
    };

    let cert = ExtractionCertificate {
        mode,
        source: t.clone(),
        witness: b.clone(),
        delta,
        level_set,
        moment_value,
        level_value,
        level_constant,
        q,
        extracted,
        level_mass,
        extracted_mass,
        q_constant,
        side_conditions,
        d_witness,
        sols: None,
        sols_skipped: None,
    };
    cert.check_guarantees()?;
    Ok(cert)
}

fn d_witness_for(
    mode: ExtractionMode,
    b: &FiniteRealSet,
    p: &FiniteRealSet,
    q: u64,
    a_prime: &FiniteRealSet,
) -> Result<DWitnessReport> {
    let (big, small) = if p.len() > b.len() { (p, b) } else { (b, p) };
    let (kind, r) = match mode {
        ExtractionMode::ThirdMult => (DUpperKind::DTimes, inverse_set(small)),
        _ => (DUpperKind::DPlus, small.neg()),
    };
    let room = big.len() as u128 * (r.len() as u128).pow(2) / a_prime.len() as u128;
    let t = (q as u128).min(room.sqrt()) as u64;
    let witness = DUpperWitness { kind, q: big.clone(), r, t };
    let validated_value = stats::validate_d_witness(a_prime, &witness)?;
    let claimed_value = stats::d_value(b.len(), p.len(), a_prime.len(), q);
    Ok(DWitnessReport { witness, claimed_value, validated_value, t_lowered: t < q })
}

impl ExtractionCertificate {
    fn check_guarantees(&self) -> Result<()> {
        if self.extracted.is_empty() || !self.extracted.is_subset(&self.source) {
            return Err(Error::invariant("extracted set must be a nonempty subset of the source"));
        }
        if &self.level_value * BigUint::from(self.level_constant) < self.moment_value {
            return Err(Error::invariant("level pigeonhole bound fails"));
        }
        let lhs = self.extracted.len() as u128 * self.q as u128 * self.q_constant as u128;
        if lhs < self.level_mass as u128 {
            return Err(Error::invariant("secondary pigeonhole bound fails"));
        }
        if self.mode != ExtractionMode::FourthAdd {
            if let Some(c) = self.side_conditions.iter().find(|c| !c.holds) {
                return Err(Error::invariant(format!("side condition {} fails", c.name)));
            }
        }
        Ok(())
    }

    /// Rebuilds the certificate from `(mode, source, witness)` and compares
    /// every recorded quantity; also re-validates the D-witness.
    pub fn revalidate(&self) -> Result<()> {
        let fresh = extract(&self.source, &self.witness, self.mode)?;
        let strip = |c: &ExtractionCertificate| ExtractionCertificate { sols: None, sols_skipped: None, ..c.clone() };
        if strip(self) != fresh {
            return Err(Error::invariant("extraction certificate does not recompute"));
        }
        self.check_guarantees()?;
        if let Some(d) = &self.d_witness {
            if stats::validate_d_witness(&self.extracted, &d.witness)? != d.validated_value {
                return Err(Error::invariant("D-witness value does not recompute"));
            }
        }
        if let Some(s) = &self.sols {
            let again = count_quotient_solutions(&self.level_set, &self.witness, usize::MAX)?;
            if again != *s {
                return Err(Error::invariant("solution count does not recompute"));
            }
        }
        Ok(())
    }

    pub fn side_conditions_hold(&self) -> bool {
        self.side_conditions.iter().all(|c| c.holds)
    }
}

/// Third-moment extraction of `A′ ⊆ T` against the witness `B`.
pub fn extract_third_moment(
    t: &FiniteRealSet,
    b: &FiniteRealSet,
    mode: ExtractionMode,
) -> Result<ExtractionCertificate> {
    if mode == ExtractionMode::FourthAdd {
        return Err(Error::Config("use extract_fourth_moment for the fourth-moment mode".into()));
    }
    extract(t, b, mode)
}

/// Fourth-moment extraction of `A′ ⊆ A` against `B`. With `sols_cap`, also
/// counts the quotient-equation solutions over `(P, B)`; exceeding the cap
/// skips the count and records why.
pub fn extract_fourth_moment(
    a: &FiniteRealSet,
    b: &FiniteRealSet,
    sols_cap: Option<usize>,
) -> Result<ExtractionCertificate> {
    let mut cert = extract(a, b, ExtractionMode::FourthAdd)?;
    if let Some(cap) = sols_cap {
        match count_quotient_solutions(&cert.level_set, b, cap) {
            Ok(s) => cert.sols = Some(s),
            Err(e @ Error::ResourceLimit { .. }) => cert.sols_skipped = Some(e.to_string()),
            Err(e) => return Err(e),
        }
    }
    Ok(cert)
}

/// Counts `(p+b)/(q+c) = (p′+b′)/(q′+c′)` with `p, q, p′, q′ ∈ P`, `b, c, b′, c′ ∈ B`
/// and nonzero denominators, as `Σ_x w(x)²` where `w` is the weighted quotient
/// histogram of the multiset `P + B`.
pub fn count_quotient_solutions(p: &FiniteRealSet, b: &FiniteRealSet, cap: usize) -> Result<SolsCount> {
    if p.is_empty() || b.is_empty() {
        return Err(Error::domain("solution count needs nonempty P and B"));
    }
    let size = p.len().max(b.len());
    if size > cap {
        return Err(Error::ResourceLimit {
            what: "quotient-equation count max(|P|, |B|)",
            needed: size as u128,
            cap: cap as u128,
        });
    }
    let sums = RepHistogram::build(p, b, SetOp::Sum)?;
    let mut weights: HashMap<Rational, u128> = HashMap::new();
    for (u, mu) in sums.entries() {
        for (v, mv) in sums.entries().iter().filter(|(v, _)| !v.is_zero()) {
            *weights.entry(u / v).or_insert(0) += *mu as u128 * *mv as u128;
        }
    }
    let count: BigUint = weights.values().map(|w| BigUint::from(*w).pow(2)).sum();
    let reference = BigUint::from(p.len()).pow(3) * BigUint::from(b.len()).pow(3);
    let ratio = SoftCheck::against_value(
        "sols",
        &Rational::new(count.clone().into(), 1.into()),
        &Rational::new(reference.clone().into(), 1.into()),
    )
    .ratio;
    Ok(SolsCount { p_len: p.len(), b_len: b.len(), count, reference, ratio })
}

// ---------------------------------------------------------------------------
// Covers

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverMode {
    /// Third-moment quotient extractions; `X` is their union.
    SumProduct,
    /// Fourth-moment difference extractions; `Y` is their union.
    FourthMoment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverStep {
    pub remainder_len: usize,
    /// Pool lower bound of `d×` (or `d₄⁺`) of the remainder, certified by the step's witness.
    #[serde(with = "exact::serde_rational")]
    pub witness_value: Rational,
    pub extraction: ExtractionCertificate,
}

/// `X ∪ Y = A` with `|X|, |Y| ≥ |A|/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverCertificate {
    pub mode: CoverMode,
    pub source: FiniteRealSet,
    pub steps: Vec<CoverStep>,
    pub x: FiniteRealSet,
    pub y: FiniteRealSet,
    pub k: usize,
    pub pool_version: String,
    pub soft_checks: Vec<SoftCheck>,
}

fn cover(a: &FiniteRealSet, mode: CoverMode, pool: &WitnessPool, sols_cap: Option<usize>) -> Result<CoverCertificate> {
    if a.is_empty() {
        return Err(Error::domain("decomposition needs a nonempty set"));
    }
    if a.contains_zero() {
        return Err(Error::domain("decomposition needs 0 ∉ A"));
    }
    let (kind, pool) = match mode {
        CoverMode::SumProduct => (DKind::DTimes, pool.clone()),
        CoverMode::FourthMoment => (DKind::D4Plus, WitnessPool { max_witness_factor: 1, ..pool.clone() }),
    };
    let mut steps: Vec<CoverStep> = Vec::new();
    let mut removed = FiniteRealSet::empty();
    let mut before_last = FiniteRealSet::empty();
    while 2 * removed.len() < a.len() {
        let remainder = a.difference(&removed);
        let lower = d_lower(&remainder, kind, &pool)?;
        let extraction = match mode {
            CoverMode::SumProduct => extract_third_moment(&remainder, &lower.witness, ExtractionMode::ThirdMult)?,
            CoverMode::FourthMoment => extract_fourth_moment(&remainder, &lower.witness, sols_cap)?,
        };
        before_last = removed.clone();
        removed = removed.union(&extraction.extracted);
        steps.push(CoverStep { remainder_len: remainder.len(), witness_value: lower.value, extraction });
        if steps.len() > a.len().div_ceil(2) {
            return Err(Error::invariant("cover iteration exceeded ⌈|A|/2⌉ extractions"));
        }
    }
    let union_all = removed;
    let rest = a.difference(&before_last);
    let (x, y) = match mode {
        CoverMode::SumProduct => (union_all, rest),
        CoverMode::FourthMoment => (rest, union_all),
    };
    let k = steps.len();
    let mut cert = CoverCertificate {
        mode,
        source: a.clone(),
        steps,
        x,
        y,
        k,
        pool_version: POOL_VERSION.to_string(),
        soft_checks: Vec::new(),
    };
    cert.check_structure()?;
    cert.soft_checks = cover_soft_checks(&cert, &pool)?;
    Ok(cert)
}

fn cover_soft_checks(c: &CoverCertificate, pool: &WitnessPool) -> Result<Vec<SoftCheck>> {
    let n = c.source.len();
    let mut out = Vec::new();
    match c.mode {
        CoverMode::SumProduct => {
            let dx = d_lower(&c.x, DKind::DPlus, pool)?.value;
            let dy = d_lower(&c.y, DKind::DTimes, pool)?.value;
            out.push(SoftCheck::against_power("d_plus_x_times_d_times_y", &(&dx * &dy), n, 1, 1));
            let y_side = Rational::from(num_bigint::BigInt::from(c.y.len())) * &dy;
            let chain = c
                .steps
                .iter()
                .map(|s| Rational::from(num_bigint::BigInt::from(s.remainder_len)) * &s.witness_value)
                .min()
                .expect("at least one step");
            out.push(SoftCheck::against_value("remainder_d_times_mass_chain", &chain, &y_side));
        }
        CoverMode::FourthMoment => {
            let dx = d_lower(&c.x, DKind::D4Plus, pool)?.value;
            let ey = energy::multiplicative_energy(&c.y)?;
            let prod = dx * Rational::new(ey.into(), 1.into());
            out.push(SoftCheck::against_power("d4_plus_x_times_mult_energy_y", &prod, n, 3, 1));
        }
    }
    let worst = c
        .steps
        .iter()
        .map(|s| Rational::new((s.extraction.extracted.len() as i64).into(), 1.into()) / &s.witness_value)
        .min()
        .expect("at least one step");
    out.push(SoftCheck::against_value("extracted_size_over_witness_value", &worst, &Rational::from_integer(1.into())));
    Ok(out)
}

impl CoverCertificate {
    fn check_structure(&self) -> Result<()> {
        let a = &self.source;
        if self.x.union(&self.y) != *a {
            return Err(Error::invariant("X ∪ Y ≠ A"));
        }
        if 2 * self.x.len() < a.len() || 2 * self.y.len() < a.len() {
            return Err(Error::invariant("cover halves must each hold at least |A|/2 elements"));
        }
        if self.k != self.steps.len() || self.k == 0 || self.k > a.len().div_ceil(2) {
            return Err(Error::invariant("bad step count"));
        }
        let mut removed = FiniteRealSet::empty();
        let mut before_last = FiniteRealSet::empty();
        for s in &self.steps {
            let remainder = a.difference(&removed);
            if s.extraction.source != remainder || s.remainder_len != remainder.len() {
                return Err(Error::invariant("step source is not the current remainder"));
            }
            if s.extraction.extracted.is_empty() || !s.extraction.extracted.is_disjoint(&removed) {
                return Err(Error::invariant("extracted sets must be nonempty and pairwise disjoint"));
            }
            before_last = removed.clone();
            removed = removed.union(&s.extraction.extracted);
        }
        if 2 * before_last.len() >= a.len() || 2 * removed.len() < a.len() {
            return Err(Error::invariant("stopping rule violated"));
        }
        let (ext, rest) = match self.mode {
            CoverMode::SumProduct => (&self.x, &self.y),
            CoverMode::FourthMoment => (&self.y, &self.x),
        };
        if *ext != removed || *rest != a.difference(&before_last) {
            return Err(Error::invariant("cover halves do not match the extracted sets"));
        }
        if self.mode == CoverMode::FourthMoment && !self.steps.iter().all(|s| s.extraction.side_conditions_hold()) {
            return Err(Error::invariant("fourth-moment side condition q ≤ |T| fails"));
        }
        Ok(())
    }

    pub fn revalidate(&self) -> Result<()> {
        self.check_structure()?;
        let kind = match self.mode {
            CoverMode::SumProduct => DKind::DTimes,
            CoverMode::FourthMoment => DKind::D4Plus,
        };
        for s in &self.steps {
            s.extraction.revalidate()?;
            let w = stats::d_lower_for_witness(&s.extraction.source, kind, &s.extraction.witness)?;
            if w.value != s.witness_value {
                return Err(Error::invariant("step witness value does not recompute"));
            }
        }
        Ok(())
    }
}

/// `X ∪ Y = A`, halves of size `≥ |A|/2`, built from quotient extractions
/// so that `d⁺(X)·d×(Y)` is small.
pub fn sum_product_cover(a: &FiniteRealSet) -> Result<CoverCertificate> {
    sum_product_cover_with(a, &WitnessPool::default())
}

pub fn sum_product_cover_with(a: &FiniteRealSet, pool: &WitnessPool) -> Result<CoverCertificate> {
    cover(a, CoverMode::SumProduct, pool, None)
}

/// `X ∪ Y = A`, halves of size `≥ |A|/2`, built from fourth-moment
/// difference extractions so that `d₄⁺(X)·E×(Y)` is small.
pub fn fourth_moment_cover(a: &FiniteRealSet) -> Result<CoverCertificate> {
    fourth_moment_cover_with(a, &WitnessPool::default(), None)
}

/// `sols_cap` bounds the solution counts recorded per extraction (default [`DEFAULT_SOLS_CAP`]).
pub fn fourth_moment_cover_with(
    a: &FiniteRealSet,
    pool: &WitnessPool,
    sols_cap: Option<usize>,
) -> Result<CoverCertificate> {
    cover(a, CoverMode::FourthMoment, pool, sols_cap)
}

// ---------------------------------------------------------------------------
// Partition

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Part joins `B` (small `d⁺`).
    Additive,
    /// Part joins `C` (small `d×`).
    Multiplicative,
    /// Remainder with `|R|² ≤ |A|` joins `B`, since `d⁺(R) ≤ |R|`.
    Small,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionRound {
    pub remainder_len: usize,
    pub branch: Branch,
    pub part: FiniteRealSet,
    #[serde(with = "exact::serde_opt_rational")]
    pub d_plus_lower: Option<Rational>,
    #[serde(with = "exact::serde_opt_rational")]
    pub d_times_lower: Option<Rational>,
    pub cover: Option<CoverCertificate>,
}

/// Disjoint `B ∪ C = A` with `d⁺(B)` and `d×(C)` both small.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionCertificate {
    pub source: FiniteRealSet,
    pub rounds: Vec<PartitionRound>,
    pub b: FiniteRealSet,
    pub c: FiniteRealSet,
    pub outer_iterations: usize,
    /// `⌈log₂|A|⌉ + 1`.
    pub iteration_bound: usize,
    #[serde(with = "exact::serde_opt_rational")]
    pub d_plus_b_lower: Option<Rational>,
    #[serde(with = "exact::serde_opt_rational")]
    pub d_times_c_lower: Option<Rational>,
    #[serde(with = "exact::serde_biguint")]
    pub additive_energy_b: BigUint,
    #[serde(with = "exact::serde_biguint")]
    pub multiplicative_energy_c: BigUint,
    #[serde(with = "exact::serde_biguint")]
    pub additive_energy_b_a: BigUint,
    #[serde(with = "exact::serde_biguint")]
    pub multiplicative_energy_c_a: BigUint,
    pub pool_version: String,
    pub soft_checks: Vec<SoftCheck>,
}

fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

pub fn additive_multiplicative_partition(a: &FiniteRealSet) -> Result<PartitionCertificate> {
    additive_multiplicative_partition_with(a, &WitnessPool::default())
}

pub fn additive_multiplicative_partition_with(a: &FiniteRealSet, pool: &WitnessPool) -> Result<PartitionCertificate> {
    if a.is_empty() {
        return Err(Error::domain("partition needs a nonempty set"));
    }
    if a.contains_zero() {
        return Err(Error::domain("partition needs 0 ∉ A"));
    }
    let n = a.len();
    let iteration_bound = ceil_log2(n) + 1;
    let mut rounds = Vec::new();
    let mut b = FiniteRealSet::empty();
    let mut c = FiniteRealSet::empty();
    let mut remainder = a.clone();
    while !remainder.is_empty() {
        if rounds.len() >= iteration_bound {
            return Err(Error::invariant("partition exceeded ⌈log₂|A|⌉ + 1 outer iterations"));
        }
        if remainder.len() * remainder.len() <= n {
            b = b.union(&remainder);
            rounds.push(PartitionRound {
                remainder_len: remainder.len(),
                branch: Branch::Small,
                part: remainder.clone(),
                d_plus_lower: None,
                d_times_lower: None,
                cover: None,
            });
            break;
        }
        let cov = sum_product_cover_with(&remainder, pool)?;
        let dp = d_lower(&cov.x, DKind::DPlus, pool)?.value;
        let dt = d_lower(&cov.y, DKind::DTimes, pool)?.value;
        let (branch, part) =
            if dp <= dt { (Branch::Additive, cov.x.clone()) } else { (Branch::Multiplicative, cov.y.clone()) };
        match branch {
            Branch::Multiplicative => c = c.union(&part),
            _ => b = b.union(&part),
        }
        let len = remainder.len();
        remainder = remainder.difference(&part);
        rounds.push(PartitionRound {
            remainder_len: len,
            branch,
            part,
            d_plus_lower: Some(dp),
            d_times_lower: Some(dt),
            cover: Some(cov),
        });
    }

    let d_plus_b_lower = if b.is_empty() { None } else { Some(d_lower(&b, DKind::DPlus, pool)?.value) };
    let d_times_c_lower = if c.is_empty() { None } else { Some(d_lower(&c, DKind::DTimes, pool)?.value) };
    let energy_or_zero = |s: &FiniteRealSet, t: &FiniteRealSet, op: SetOp| -> Result<BigUint> {
        if s.is_empty() {
            Ok(BigUint::zero())
        } else {
            Ok(RepHistogram::build(s, t, op)?.moment(2))
        }
    };
    let additive_energy_b = energy_or_zero(&b, &b, SetOp::Diff)?;
    let multiplicative_energy_c = energy_or_zero(&c, &c, SetOp::Quot)?;
    let additive_energy_b_a = energy_or_zero(&b, a, SetOp::Diff)?;
    let multiplicative_energy_c_a = energy_or_zero(&c, a, SetOp::Quot)?;

    let big = |x: &BigUint| Rational::new(x.clone().into(), 1.into());
    let mut soft_checks = Vec::new();
    if let Some(v) = &d_plus_b_lower {
        soft_checks.push(SoftCheck::against_power("d_plus_b_lower", v, n, 1, 2));
    }
    if let Some(v) = &d_times_c_lower {
        soft_checks.push(SoftCheck::against_power("d_times_c_lower", v, n, 1, 2));
    }
    soft_checks.push(SoftCheck::against_power("additive_energy_b", &big(&additive_energy_b), n, 71, 26));
    soft_checks.push(SoftCheck::against_power("multiplicative_energy_c", &big(&multiplicative_energy_c), n, 71, 26));
    soft_checks.push(SoftCheck::against_power("additive_energy_b_a", &big(&additive_energy_b_a), n, 11, 4));
    soft_checks.push(SoftCheck::against_power("multiplicative_energy_c_a", &big(&multiplicative_energy_c_a), n, 11, 4));

    let cert = PartitionCertificate {
        source: a.clone(),
        outer_iterations: rounds.len(),
        rounds,
        b,
        c,
        iteration_bound,
        d_plus_b_lower,
        d_times_c_lower,
        additive_energy_b,
        multiplicative_energy_c,
        additive_energy_b_a,
        multiplicative_energy_c_a,
        pool_version: POOL_VERSION.to_string(),
        soft_checks,
    };
    cert.check_structure()?;
    Ok(cert)
}

impl PartitionCertificate {
    fn check_structure(&self) -> Result<()> {
        if !self.b.is_disjoint(&self.c) || self.b.union(&self.c) != self.source {
            return Err(Error::invariant("B and C must partition A"));
        }
        if self.outer_iterations != self.rounds.len() || self.outer_iterations > self.iteration_bound {
            return Err(Error::invariant("partition iteration count out of bounds"));
        }
        let mut covered = FiniteRealSet::empty();
        let (mut b, mut c) = (FiniteRealSet::empty(), FiniteRealSet::empty());
        for r in &self.rounds {
            if r.part.is_empty() || !r.part.is_disjoint(&covered) {
                return Err(Error::invariant("partition parts must be nonempty and disjoint"));
            }
            if r.remainder_len != self.source.len() - covered.len() {
                return Err(Error::invariant("round remainder size mismatch"));
            }
            covered = covered.union(&r.part);
            match r.branch {
                Branch::Multiplicative => c = c.union(&r.part),
                _ => b = b.union(&r.part),
            }
        }
        if b != self.b || c != self.c {
            return Err(Error::invariant("B, C do not match the recorded rounds"));
        }
        Ok(())
    }

    pub fn revalidate(&self) -> Result<()> {
        self.check_structure()?;
        for r in &self.rounds {
            if let Some(cov) = &r.cover {
                cov.revalidate()?;
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Union inequalities

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnionMode {
    /// `E₃⁺(∪A_j, B)^{1/3} ≤ Σ E₃⁺(A_j, B)^{1/3}`.
    L3Diff,
    /// `E₃×(∪A_j, B)^{1/3} ≤ Σ E₃×(A_j, B)^{1/3}`.
    L3Quot,
    /// `E×(∪A_j)^{1/4} ≤ Σ E×(A_j)^{1/4}`.
    L4MultEnergy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnionVerdict {
    pub mode: UnionMode,
    #[serde(with = "exact::serde_biguint")]
    pub union_value: BigUint,
    pub part_values: Vec<String>,
    pub root: u32,
    /// `less`, `equal` or `greater` for the union side against the sum of roots.
    pub comparison: String,
    pub holds: bool,
}

pub fn union_triangle_check(
    parts: &[FiniteRealSet],
    b: Option<&FiniteRealSet>,
    mode: UnionMode,
) -> Result<UnionVerdict> {
    if parts.is_empty() || parts.iter().any(|p| p.is_empty()) {
        return Err(Error::domain("union check needs nonempty parts"));
    }
    let union = parts.iter().fold(FiniteRealSet::empty(), |acc, p| acc.union(p));
    if union.len() != parts.iter().map(|p| p.len()).sum::<usize>() {
        return Err(Error::domain("union check needs pairwise disjoint parts"));
    }
    type Measure = Box<dyn Fn(&FiniteRealSet) -> Result<BigUint>>;
    let (root, value): (u32, Measure) = match mode {
        UnionMode::L3Diff | UnionMode::L3Quot => {
            let b = b.ok_or_else(|| Error::domain("third-moment union check needs B"))?;
            if b.is_empty() {
                return Err(Error::domain("third-moment union check needs nonempty B"));
            }
            let op = if mode == UnionMode::L3Diff { SetOp::Diff } else { SetOp::Quot };
            let b = b.clone();
            (3, Box::new(move |s| Ok(RepHistogram::build(s, &b, op)?.moment(3))))
        }
        UnionMode::L4MultEnergy => {
            if union.contains_zero() {
                return Err(Error::domain("multiplicative energy needs 0 ∉ parts"));
            }
            (4, Box::new(energy::multiplicative_energy))
        }
    };
    let union_value = value(&union)?;
    let terms: Vec<BigUint> = parts.iter().map(value).collect::<Result<_>>()?;
    let ord = compare_root_sum(&union_value, &terms, root);
    let comparison = match ord {
        std::cmp::Ordering::Less => "less",
        std::cmp::Ordering::Equal => "equal",
        std::cmp::Ordering::Greater => "greater",
    };
    Ok(UnionVerdict {
        mode,
        union_value,
        part_values: terms.iter().map(|t| t.to_string()).collect(),
        root,
        comparison: comparison.to_string(),
        holds: ord != std::cmp::Ordering::Greater,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[i64]) -> FiniteRealSet {
        FiniteRealSet::from_integers(v.iter().copied())
    }

    #[test]
    fn extraction_on_pair() {
        let t = set(&[1, 2]);
        let c = extract_third_moment(&t, &t, ExtractionMode::ThirdMult).unwrap();
        assert_eq!(c.delta, 2);
        assert_eq!(c.level_set, set(&[1]));
        assert_eq!(c.q, 1);
        assert_eq!(c.extracted, t);
        c.revalidate().unwrap();
        let d = c.d_witness.as_ref().unwrap();
        assert_eq!(d.validated_value, d.claimed_value);
    }

    #[test]
    fn extraction_on_singleton_and_gp() {
        let s = set(&[5]);
        for mode in [ExtractionMode::ThirdMult, ExtractionMode::ThirdAdd] {
            let c = extract_third_moment(&s, &s, mode).unwrap();
            assert_eq!(c.extracted, s);
            assert_eq!(c.level_set.len(), 1);
        }
        let f = extract_fourth_moment(&s, &set(&[2]), Some(DEFAULT_SOLS_CAP)).unwrap();
        assert_eq!(f.level_set, set(&[3]));
        assert_eq!((f.delta, f.q), (1, 1));
        assert_eq!(f.extracted, s);

        let gp = set(&[1, 2, 4, 8]);
        for mode in [ExtractionMode::ThirdMult, ExtractionMode::ThirdAdd] {
            let c = extract_third_moment(&gp, &gp, mode).unwrap();
            assert!(!c.extracted.is_empty());
            assert!(c.side_conditions_hold());
            c.revalidate().unwrap();
        }
    }

    #[test]
    fn fourth_moment_extraction_with_counting() {
        let a = set(&[1, 2]);
        let c = extract_fourth_moment(&a, &a, Some(DEFAULT_SOLS_CAP)).unwrap();
        assert!(!c.extracted.is_empty());
        assert!(c.sols.is_some());
        c.revalidate().unwrap();
        let big = FiniteRealSet::from_integers(1..=40);
        let c = extract_fourth_moment(&big, &big, Some(4)).unwrap();
        assert!(c.sols.is_none());
        assert!(c.sols_skipped.as_deref().unwrap().contains("resource limit"));
    }

    #[test]
    fn tampered_certificate_is_rejected() {
        let gp = set(&[1, 2, 4, 8]);
        let mut c = extract_third_moment(&gp, &gp, ExtractionMode::ThirdMult).unwrap();
        c.q += 1;
        assert!(c.revalidate().is_err());
    }

    #[test]
    fn covers() {
        let one = set(&[7]);
        let c = sum_product_cover(&one).unwrap();
        assert_eq!((c.x.clone(), c.y.clone(), c.k), (one.clone(), one.clone(), 1));
        let f = fourth_moment_cover(&one).unwrap();
        assert_eq!((f.x.clone(), f.y.clone()), (one.clone(), one.clone()));

        let a = set(&[1, 2, 3, 4, 6, 8, 12, 24]);
        let c = sum_product_cover(&a).unwrap();
        assert_eq!(c.x.union(&c.y), a);
        assert!(c.x.len() >= 4 && c.y.len() >= 4);
        c.revalidate().unwrap();

        let gp = FiniteRealSet::new((0..8).map(|k| crate::sets::int(1 << k)));
        let f = fourth_moment_cover(&gp).unwrap();
        assert_eq!(f.x.union(&f.y), gp);
        assert!(f.x.len() >= 4 && f.y.len() >= 4);
        f.revalidate().unwrap();

        assert!(matches!(sum_product_cover(&set(&[0, 1])), Err(Error::Domain(_))));
    }

    #[test]
    fn partitions() {
        for a in [set(&[3]), set(&[1, 2]), set(&[2, 4, 6, 12, 10, 20, 14, 28])] {
            let p = additive_multiplicative_partition(&a).unwrap();
            assert!(p.b.is_disjoint(&p.c));
            assert_eq!(p.b.union(&p.c), a);
            assert!(p.outer_iterations <= p.iteration_bound);
            p.revalidate().unwrap();
        }
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(8), 3);
        assert_eq!(ceil_log2(9), 4);
    }

    #[test]
    fn union_examples() {
        let v = union_triangle_check(&[set(&[1]), set(&[2])], Some(&set(&[1, 2])), UnionMode::L3Diff).unwrap();
        assert_eq!(v.union_value, BigUint::from(10u32));
        assert_eq!(v.part_values, vec!["2", "2"]);
        assert_eq!(v.comparison, "less");
        assert!(v.holds);
        let v = union_triangle_check(&[set(&[1, 2]), set(&[3])], None, UnionMode::L4MultEnergy).unwrap();
        assert_eq!(v.union_value, BigUint::from(15u32));
        assert_eq!(v.part_values, vec!["6", "1"]);
        assert!(v.holds);
        let v = union_triangle_check(&[set(&[1, 2, 3])], Some(&set(&[1, 5])), UnionMode::L3Quot).unwrap();
        assert_eq!(v.comparison, "equal");
        assert!(matches!(
            union_triangle_check(&[set(&[1, 2]), set(&[2])], None, UnionMode::L4MultEnergy),
            Err(Error::Domain(_))
        ));
    }
}
