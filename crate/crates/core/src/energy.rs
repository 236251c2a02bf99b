//! Representation functions and their moments.
//!
//! `r_{A∘B}(x)` counts pairs `(a, b)` with `a ∘ b = x`; the energies are its
//! power sums. This module also houses the trilinear count `σ(A, B, C)`, the
//! dyadic spectrum of popular quotients, and the slice-product inclusion
//! `A_λ A_λ ⊆ AA ∩ λAA`.

use std::collections::HashMap;
use std::hash::Hash;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, power_sum};
use crate::kernel::{self, CountStrategy};
use crate::sets::{self, combine, FiniteRealSet, Rational, SetOp};

/// Default cap on `|A||B||C|` for the σ search.
pub const DEFAULT_SIGMA_CAP: usize = 12 * 12 * 12;

/// `2^⌊log₂ r⌋` for `r ≥ 1`: the lower end of the dyadic bucket holding `r`.
pub fn dyadic_floor(r: u64) -> u64 {
    debug_assert!(r >= 1);
    1 << (63 - r.leading_zeros())
}

/// `⌊log₂ r⌋ + 1`, the number of dyadic buckets up to `r`.
pub fn dyadic_bucket_count(r: u64) -> u64 {
    if r == 0 {
        0
    } else {
        64 - r.leading_zeros() as u64
    }
}

/// Exact representation counts for `{a ∘ b}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepHistogram {
    pub op: SetOp,
    #[serde(with = "entries_serde")]
    entries: Vec<(Rational, u64)>,
    pub source_sizes: (usize, usize),
}

mod entries_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::sets::{parse_rational, Rational};

    pub fn serialize<S: Serializer>(v: &[(Rational, u64)], s: S) -> Result<S::Ok, S::Error> {
        let raw: Vec<(String, u64)> = v.iter().map(|(x, c)| (x.to_string(), *c)).collect();
        raw.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(Rational, u64)>, D::Error> {
        let raw: Vec<(String, u64)> = Vec::deserialize(d)?;
        raw.into_iter()
            .map(|(x, c)| {
                parse_rational(&x)
                    .map(|r| (r, c))
                    .ok_or_else(|| serde::de::Error::custom(format!("bad rational `{x}`")))
            })
            .collect()
    }
}

impl RepHistogram {
    pub fn build(a: &FiniteRealSet, b: &FiniteRealSet, op: SetOp) -> Result<Self> {
        Self::build_with(a, b, op, CountStrategy::default())
    }

    pub fn build_with(a: &FiniteRealSet, b: &FiniteRealSet, op: SetOp, strategy: CountStrategy) -> Result<Self> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::domain("representation histogram needs nonempty sets"));
        }
        let entries = kernel::pair_counts(a, b, op, strategy)?;
        Ok(RepHistogram { op, entries, source_sizes: (a.len(), b.len()) })
    }

    /// `(value, count)` pairs in increasing value order.
    pub fn entries(&self) -> &[(Rational, u64)] {
        &self.entries
    }

    pub fn count(&self, x: &Rational) -> u64 {
        self.entries.binary_search_by(|(k, _)| k.cmp(x)).map(|i| self.entries[i].1).unwrap_or(0)
    }

    pub fn support(&self) -> FiniteRealSet {
        FiniteRealSet::from_sorted_unchecked(self.entries.iter().map(|(x, _)| x.clone()).collect())
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn total_mass(&self) -> u64 {
        self.entries.iter().map(|(_, c)| c).sum()
    }

    pub fn max_count(&self) -> u64 {
        self.entries.iter().map(|(_, c)| *c).max().unwrap_or(0)
    }

    /// `Σ_x r(x)^m`.
    pub fn moment(&self, m: u32) -> BigUint {
        power_sum(self.entries.iter().map(|(_, c)| *c), m)
    }

    /// `#{x : r(x) ≥ τ}`.
    pub fn tail_count(&self, tau: u64) -> usize {
        self.entries.iter().filter(|(_, c)| *c >= tau).count()
    }

    /// `{x : lower ≤ r(x) < 2·lower}`.
    pub fn level_set(&self, lower: u64) -> FiniteRealSet {
        let upper = lower.saturating_mul(2);
        FiniteRealSet::from_sorted_unchecked(
            self.entries.iter().filter(|(_, c)| *c >= lower && *c < upper).map(|(x, _)| x.clone()).collect(),
        )
    }

    /// `{x : r(x) ≥ lower}`.
    pub fn level_set_at_least(&self, lower: u64) -> FiniteRealSet {
        FiniteRealSet::from_sorted_unchecked(
            self.entries.iter().filter(|(_, c)| *c >= lower).map(|(x, _)| x.clone()).collect(),
        )
    }

    /// Nonempty dyadic level sets `(2^k, {x : 2^k ≤ r(x) < 2^{k+1}})`, increasing in `k`.
    pub fn dyadic_levels(&self) -> Vec<(u64, FiniteRealSet)> {
        let mut buckets: std::collections::BTreeMap<u64, Vec<Rational>> = Default::default();
        for (x, c) in &self.entries {
            buckets.entry(dyadic_floor(*c)).or_default().push(x.clone());
        }
        buckets.into_iter().map(|(t, xs)| (t, FiniteRealSet::from_sorted_unchecked(xs))).collect()
    }

    /// Values sorted by decreasing count, ties broken by increasing value.
    pub fn by_popularity(&self) -> Vec<(Rational, u64)> {
        let mut v = self.entries.clone();
        v.sort_by(|x, y| y.1.cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
        v
    }
}

/// `r_{A∘B}` as a histogram.
pub fn rep_histogram(a: &FiniteRealSet, b: &FiniteRealSet, op: SetOp) -> Result<RepHistogram> {
    RepHistogram::build(a, b, op)
}

/// An energy moment `Σ_x r(x)^moment`, exact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyValue {
    pub moment: u32,
    #[serde(with = "exact::serde_biguint")]
    pub value: BigUint,
}

pub fn energy(a: &FiniteRealSet, b: &FiniteRealSet, op: SetOp, moment: u32) -> Result<EnergyValue> {
    if !(1..=4).contains(&moment) {
        return Err(Error::Config(format!("energy moment must be in 1..=4, got {moment}")));
    }
    let hist = RepHistogram::build(a, b, op)?;
    Ok(EnergyValue { moment, value: hist.moment(moment) })
}

/// `E⁺(A) = Σ r_{A−A}²` as a plain integer.
pub fn additive_energy(a: &FiniteRealSet) -> Result<BigUint> {
    Ok(energy(a, a, SetOp::Diff, 2)?.value)
}

/// `E×(A) = Σ r_{A/A}²` as a plain integer.
pub fn multiplicative_energy(a: &FiniteRealSet) -> Result<BigUint> {
    Ok(energy(a, a, SetOp::Quot, 2)?.value)
}

// ---------------------------------------------------------------------------
// σ(A, B, C)

/// Coefficients `(1, σ₂, σ₃)` and the solutions of `a + σ₂b + σ₃c = 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigmaWitness {
    #[serde(with = "exact::serde_rational")]
    pub sigma1: Rational,
    #[serde(with = "exact::serde_rational")]
    pub sigma2: Rational,
    #[serde(with = "exact::serde_rational")]
    pub sigma3: Rational,
    pub count: u64,
    pub triples: Option<Vec<[String; 3]>>,
}

/// All `(a, b, c) ∈ A×B×C` with `σ₁a + σ₂b + σ₃c = 0`, by direct enumeration.
pub fn sigma_solutions(
    a: &FiniteRealSet,
    b: &FiniteRealSet,
    c: &FiniteRealSet,
    s1: &Rational,
    s2: &Rational,
    s3: &Rational,
) -> Result<Vec<(Rational, Rational, Rational)>> {
    if s1.is_zero() || s2.is_zero() || s3.is_zero() {
        return Err(Error::domain("σ coefficients must be nonzero"));
    }
    let mut out = Vec::new();
    for x in a {
        for y in b {
            let z = -(s1 * x + s2 * y) / s3;
            if c.contains(&z) {
                out.push((x.clone(), y.clone(), z));
            }
        }
    }
    Ok(out)
}

pub fn sigma_count(
    a: &FiniteRealSet,
    b: &FiniteRealSet,
    c: &FiniteRealSet,
    s1: &Rational,
    s2: &Rational,
    s3: &Rational,
) -> Result<u64> {
    Ok(sigma_solutions(a, b, c, s1, s2, s3)?.len() as u64)
}

/// Integer arithmetic needed by the plane search; implemented by `i128` and `BigInt`.
trait GridInt: Clone + Ord + Hash + Integer + Signed + From<i64> {}
impl GridInt for i128 {}
impl GridInt for BigInt {}

type Vec3<T> = [T; 3];

fn cross<T: GridInt>(p: &Vec3<T>, q: &Vec3<T>) -> Vec3<T> {
    [
        p[1].clone() * q[2].clone() - p[2].clone() * q[1].clone(),
        p[2].clone() * q[0].clone() - p[0].clone() * q[2].clone(),
        p[0].clone() * q[1].clone() - p[1].clone() * q[0].clone(),
    ]
}

/// Divides out the content and makes the first nonzero coordinate positive.
fn primitive<T: GridInt>(v: Vec3<T>) -> Vec3<T> {
    let g = v[0].gcd(&v[1]).gcd(&v[2]);
    if g.is_zero() {
        return v;
    }
    let mut out = [v[0].clone() / g.clone(), v[1].clone() / g.clone(), v[2].clone() / g];
    if out.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) {
        for x in out.iter_mut() {
            *x = -x.clone();
        }
    }
    out
}

/// A normal with no zero coordinate orthogonal to direction `d`, if one exists.
fn nonzero_normal_for<T: GridInt>(d: &Vec3<T>) -> Option<Vec3<T>> {
    let [a, b, c] = d.clone();
    let n = if !b.is_zero() && !c.is_zero() {
        if !(a.clone() + c.clone()).is_zero() {
            [b.clone(), -(a + c), b]
        } else {
            let two = T::from(2);
            [b.clone(), -(a + two.clone() * c), two * b]
        }
    } else if b.is_zero() && !c.is_zero() && !a.is_zero() {
        [c, T::one(), -a]
    } else if c.is_zero() && !b.is_zero() && !a.is_zero() {
        [b, -a, T::one()]
    } else {
        return None;
    };
    Some(primitive(n))
}

/// Best integer normal over the grid of scaled points, with its point count.
fn best_plane<T: GridInt>(points: &[Vec3<T>], origin_present: bool) -> Option<(usize, Vec3<T>)> {
    let extra = usize::from(origin_present);
    let dirs: Vec<Vec3<T>> = points.iter().map(|p| primitive(p.clone())).collect();
    let mut line_count: HashMap<&Vec3<T>, usize> = HashMap::new();
    for d in &dirs {
        *line_count.entry(d).or_insert(0) += 1;
    }
    let mut best: Option<(usize, Vec3<T>)> = None;
    let mut offer = |count: usize, normal: Vec3<T>| {
        let better = match &best {
            None => true,
            Some((c, n)) => count > *c || (count == *c && normal < *n),
        };
        if better {
            best = Some((count, normal));
        }
    };
    let mut lines: Vec<(&Vec3<T>, usize)> = line_count.iter().map(|(d, c)| (*d, *c)).collect();
    lines.sort();
    for (d, c) in lines {
        if let Some(n) = nonzero_normal_for(d) {
            offer(c + extra, n);
        }
    }
    for i in 0..points.len() {
        let mut local: HashMap<Vec3<T>, usize> = HashMap::new();
        for j in (i + 1)..points.len() {
            if dirs[i] == dirs[j] {
                continue;
            }
            let n = primitive(cross(&points[i], &points[j]));
            if n.iter().all(|x| !x.is_zero()) {
                *local.entry(n).or_insert(0) += 1;
            }
        }
        let on_line = line_count[&dirs[i]];
        let mut found: Vec<(Vec3<T>, usize)> = local.into_iter().collect();
        found.sort();
        for (n, c) in found {
            offer(on_line + c + extra, n);
        }
    }
    best
}

fn common_denominator(s: &FiniteRealSet) -> BigInt {
    s.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

fn scaled<T: GridInt>(s: &FiniteRealSet, scale: &BigInt, conv: impl Fn(BigInt) -> Option<T>) -> Option<Vec<T>> {
    s.iter().map(|x| conv(x.numer() * (scale / x.denom()))).collect()
}

fn grid<T: GridInt>(
    a: &FiniteRealSet,
    b: &FiniteRealSet,
    c: &FiniteRealSet,
    scales: &[BigInt; 3],
    conv: impl Fn(BigInt) -> Option<T> + Copy,
) -> Option<(Vec<Vec3<T>>, bool)> {
    let (xa, xb, xc) = (scaled(a, &scales[0], conv)?, scaled(b, &scales[1], conv)?, scaled(c, &scales[2], conv)?);
    let mut pts = Vec::with_capacity(xa.len() * xb.len() * xc.len());
    let mut origin = false;
    for x in &xa {
        for y in &xb {
            for z in &xc {
                if x.is_zero() && y.is_zero() && z.is_zero() {
                    origin = true;
                } else {
                    pts.push([x.clone(), y.clone(), z.clone()]);
                }
            }
        }
    }
    Some((pts, origin))
}

/// `σ(A, B, C) = sup_{σᵢ≠0} #{(a,b,c) : σ₁a + σ₂b + σ₃c = 0}`, exactly.
///
/// With `σ₁ = 1`, each coefficient vector is the normal of a plane through the
/// origin in `ℚ³`. Any plane holding two grid points that are not collinear
/// with the origin is spanned by them, so it appears among the cross products
/// of grid-point pairs; planes whose grid points lie on one line through the
/// origin are covered by the per-line candidates; and a plane with at most one
/// grid point is dominated by either. Candidates with a zero normal coordinate
/// are discarded. The winner is recounted by direct enumeration.
pub fn sigma_sup(a: &FiniteRealSet, b: &FiniteRealSet, c: &FiniteRealSet, cap: Option<usize>) -> Result<SigmaWitness> {
    if a.is_empty() || b.is_empty() || c.is_empty() {
        return Err(Error::domain("σ needs nonempty sets"));
    }
    let cap = cap.unwrap_or(DEFAULT_SIGMA_CAP);
    let size = a.len() as u128 * b.len() as u128 * c.len() as u128;
    if size > cap as u128 {
        return Err(Error::ResourceLimit { what: "sigma grid |A||B||C|", needed: size, cap: cap as u128 });
    }
    let scales = [common_denominator(a), common_denominator(b), common_denominator(c)];
    let small = |x: BigInt| x.to_i64().filter(|v| v.unsigned_abs() < (1 << 40)).map(i128::from);
    let normal: Option<Vec3<BigInt>> = match grid::<i128>(a, b, c, &scales, small) {
        Some((pts, origin)) => best_plane(&pts, origin).map(|(_, n)| n.map(BigInt::from)),
        None => {
            let (pts, origin) = grid::<BigInt>(a, b, c, &scales, Some).expect("big conversion is total");
            best_plane(&pts, origin).map(|(_, n)| n)
        }
    };
    // n·(La·a, Lb·b, Lc·c) = 0  ⇔  a + (n₂Lb / n₁La)·b + (n₃Lc / n₁La)·c = 0
    let (s2, s3) = match normal {
        Some(n) => {
            let lead = &n[0] * &scales[0];
            (Rational::new(&n[1] * &scales[1], lead.clone()), Rational::new(&n[2] * &scales[2], lead))
        }
        None => (Rational::one(), Rational::one()),
    };
    let s1 = Rational::one();
    let sols = sigma_solutions(a, b, c, &s1, &s2, &s3)?;
    let triples = sols.iter().map(|(x, y, z)| [x.to_string(), y.to_string(), z.to_string()]).collect();
    Ok(SigmaWitness { sigma1: s1, sigma2: s2, sigma3: s3, count: sols.len() as u64, triples: Some(triples) })
}

// ---------------------------------------------------------------------------
// Popular quotients

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectrumLevel {
    /// Lower end of the dyadic band `t ≤ r_{A/A}(λ) < 2t`.
    pub t: u64,
    pub members: FiniteRealSet,
}

/// Dyadic level sets `S_t` of `r_{A/A}` plus the pigeonholed dominant level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PopularSpectrum {
    pub source: FiniteRealSet,
    pub levels: Vec<SpectrumLevel>,
    #[serde(with = "exact::serde_biguint")]
    pub energy: BigUint,
    /// `t` maximising `|S_t|·t²` (smallest on ties).
    pub best_t: u64,
    #[serde(with = "exact::serde_biguint")]
    pub best_value: BigUint,
    /// `4·(⌊log₂|A|⌋ + 1)`.
    pub pigeonhole_constant: u64,
    /// `|S_t|·t²·constant ≥ E×(A)` for the dominant level.
    pub pigeonhole_holds: bool,
}

pub fn popular_spectrum(a: &FiniteRealSet) -> Result<PopularSpectrum> {
    if a.is_empty() {
        return Err(Error::domain("popular spectrum needs a nonempty set"));
    }
    if a.contains_zero() {
        return Err(Error::domain("popular spectrum needs 0 ∉ A"));
    }
    let hist = RepHistogram::build(a, a, SetOp::Quot)?;
    let levels: Vec<SpectrumLevel> =
        hist.dyadic_levels().into_iter().map(|(t, members)| SpectrumLevel { t, members }).collect();
    let mut best: Option<(BigUint, u64)> = None;
    for l in &levels {
        let v = BigUint::from(l.members.len()) * BigUint::from(l.t) * BigUint::from(l.t);
        if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
            best = Some((v, l.t));
        }
    }
    let (best_value, best_t) = best.expect("nonempty histogram");
    let energy = hist.moment(2);
    let pigeonhole_constant = 4 * dyadic_bucket_count(a.len() as u64);
    let pigeonhole_holds = &best_value * BigUint::from(pigeonhole_constant) >= energy;
    Ok(PopularSpectrum { source: a.clone(), levels, energy, best_t, best_value, pigeonhole_constant, pigeonhole_holds })
}

/// Outcome of checking `A_λ A_λ ⊆ AA ∩ λAA`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KatzKoester {
    #[serde(with = "exact::serde_rational")]
    pub lambda: Rational,
    pub slice: FiniteRealSet,
    pub slice_product_len: usize,
    #[serde(with = "exact::serde_opt_rational")]
    pub violation: Option<Rational>,
}

impl KatzKoester {
    pub fn holds(&self) -> bool {
        self.violation.is_none()
    }
}

pub fn katz_koester_check(a: &FiniteRealSet, lambda: &Rational) -> Result<KatzKoester> {
    if a.contains_zero() {
        return Err(Error::domain("slice-product inclusion needs 0 ∉ A"));
    }
    let aa = combine(a, a, SetOp::Prod)?;
    katz_koester_with_products(a, &aa, lambda)
}

/// Same as [`katz_koester_check`] with `AA` supplied, for scanning many `λ`.
pub fn katz_koester_with_products(a: &FiniteRealSet, aa: &FiniteRealSet, lambda: &Rational) -> Result<KatzKoester> {
    if lambda.is_zero() {
        return Err(Error::domain("λ must be nonzero"));
    }
    let slice = sets::popular_slice(a, lambda)?;
    if slice.is_empty() {
        return Err(Error::domain(format!("λ = {lambda} is not in A/A")));
    }
    let prod = combine(&slice, &slice, SetOp::Prod)?;
    let violation = prod.iter().find(|x| !(aa.contains(x) && aa.contains(&(*x / lambda)))).cloned();
    Ok(KatzKoester { lambda: lambda.clone(), slice, slice_product_len: prod.len(), violation })
}
