//! Exact rationals and finite sets of them.
//!
//! A [`FiniteRealSet`] is a strictly increasing vector of canonical rationals,
//! so equality, membership and hashing are all exact. The pairwise operations
//! ([`combine`]) and the multiplicative helpers ([`inverse_set`], [`dilate`],
//! [`popular_slice`]) are the building blocks for every other module.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::kernel::{self, CountStrategy};

/// Arbitrary-precision rational in canonical form (positive denominator, lowest terms).
pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `num / den`, reduced. Panics on a zero denominator.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses a decimal integer or `p/q` with a strictly positive integer `q`.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    let parse_int = |t: &str| -> Option<BigInt> {
        let digits = t.strip_prefix('-').or_else(|| t.strip_prefix('+')).unwrap_or(t);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        BigInt::from_str(t).ok()
    };
    match s.split_once('/') {
        None => parse_int(s).map(Rational::from_integer),
        Some((p, q)) => {
            let p = parse_int(p)?;
            if q.starts_with('-') || q.starts_with('+') {
                return None;
            }
            let q = parse_int(q)?;
            if !q.is_positive() {
                return None;
            }
            Some(Rational::new(p, q))
        }
    }
}

/// Pairwise set operation `a ∘ b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetOp {
    Sum,
    Diff,
    Prod,
    Quot,
}

impl SetOp {
    pub fn apply(self, a: &Rational, b: &Rational) -> Rational {
        match self {
            SetOp::Sum => a + b,
            SetOp::Diff => a - b,
            SetOp::Prod => a * b,
            SetOp::Quot => a / b,
        }
    }

    pub fn is_multiplicative(self) -> bool {
        matches!(self, SetOp::Prod | SetOp::Quot)
    }

    pub fn name(self) -> &'static str {
        match self {
            SetOp::Sum => "sum",
            SetOp::Diff => "diff",
            SetOp::Prod => "prod",
            SetOp::Quot => "quot",
        }
    }
}

impl FromStr for SetOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(SetOp::Sum),
            "diff" => Ok(SetOp::Diff),
            "prod" => Ok(SetOp::Prod),
            "quot" => Ok(SetOp::Quot),
            other => Err(Error::Config(format!("unknown set operation `{other}`"))),
        }
    }
}

/// A finite set of rationals, stored sorted and deduplicated.
#[derive(Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct FiniteRealSet {
    elems: Vec<Rational>,
}

impl FiniteRealSet {
    pub fn new(values: impl IntoIterator<Item = Rational>) -> Self {
        let mut elems: Vec<Rational> = values.into_iter().collect();
        elems.sort_unstable();
        elems.dedup();
        FiniteRealSet { elems }
    }

    pub fn from_integers(values: impl IntoIterator<Item = i64>) -> Self {
        Self::new(values.into_iter().map(int))
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn singleton(x: Rational) -> Self {
        FiniteRealSet { elems: vec![x] }
    }

    /// Wraps a vector already known to be strictly increasing.
    pub(crate) fn from_sorted_unchecked(elems: Vec<Rational>) -> Self {
        debug_assert!(elems.windows(2).all(|w| w[0] < w[1]));
        FiniteRealSet { elems }
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Rational> {
        self.elems.iter()
    }

    pub fn as_slice(&self) -> &[Rational] {
        &self.elems
    }

    pub fn contains(&self, x: &Rational) -> bool {
        self.elems.binary_search(x).is_ok()
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(&Rational::zero())
    }

    pub fn without_zero(&self) -> Self {
        let zero = Rational::zero();
        Self::from_sorted_unchecked(self.elems.iter().filter(|x| **x != zero).cloned().collect())
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.len() && j < other.len() {
            match self.elems[i].cmp(&other.elems[j]) {
                std::cmp::Ordering::Less => {
                    out.push(self.elems[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(other.elems[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(self.elems[i].clone());
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.elems[i..]);
        out.extend_from_slice(&other.elems[j..]);
        Self::from_sorted_unchecked(out)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let (small, big) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        Self::from_sorted_unchecked(small.elems.iter().filter(|x| big.contains(x)).cloned().collect())
    }

    pub fn difference(&self, other: &Self) -> Self {
        Self::from_sorted_unchecked(self.elems.iter().filter(|x| !other.contains(x)).cloned().collect())
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.len() <= other.len() && self.elems.iter().all(|x| other.contains(x))
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        let (small, big) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        !small.elems.iter().any(|x| big.contains(x))
    }

    /// `−A`.
    pub fn neg(&self) -> Self {
        Self::from_sorted_unchecked(self.elems.iter().rev().map(|x| -x).collect())
    }

    /// Keeps the elements satisfying `keep`, preserving order.
    pub fn filter(&self, mut keep: impl FnMut(&Rational) -> bool) -> Self {
        Self::from_sorted_unchecked(self.elems.iter().filter(|x| keep(x)).cloned().collect())
    }

    /// The first `k` elements in increasing order.
    pub fn take(&self, k: usize) -> Self {
        Self::from_sorted_unchecked(self.elems.iter().take(k).cloned().collect())
    }
}

impl fmt::Debug for FiniteRealSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for FiniteRealSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, x) in self.elems.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{x}")?;
        }
        f.write_str("}")
    }
}

impl<'a> IntoIterator for &'a FiniteRealSet {
    type Item = &'a Rational;
    type IntoIter = std::slice::Iter<'a, Rational>;

    fn into_iter(self) -> Self::IntoIter {
        self.elems.iter()
    }
}

impl FromIterator<Rational> for FiniteRealSet {
    fn from_iter<I: IntoIterator<Item = Rational>>(iter: I) -> Self {
        Self::new(iter)
    }
}

impl Serialize for FiniteRealSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.elems.iter().map(|x| x.to_string()))
    }
}

impl<'de> Deserialize<'de> for FiniteRealSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw: Vec<String> = Vec::deserialize(deserializer)?;
        raw.iter()
            .map(|s| parse_rational(s).ok_or_else(|| serde::de::Error::custom(format!("bad rational `{s}`"))))
            .collect()
    }
}

/// Canonical set from arbitrary values.
pub fn make_set(values: impl IntoIterator<Item = Rational>) -> FiniteRealSet {
    FiniteRealSet::new(values)
}

/// `{a ∘ b : a ∈ A, b ∈ B}`. Quotients require `0 ∉ B`.
pub fn combine(a: &FiniteRealSet, b: &FiniteRealSet, op: SetOp) -> Result<FiniteRealSet> {
    let counts = kernel::pair_counts(a, b, op, CountStrategy::default())?;
    Ok(FiniteRealSet::from_sorted_unchecked(counts.into_iter().map(|(x, _)| x).collect()))
}

/// `{a⁻¹ : a ∈ A}` with `0⁻¹ = 0`.
pub fn inverse_set(a: &FiniteRealSet) -> FiniteRealSet {
    a.iter().map(|x| if x.is_zero() { Rational::zero() } else { x.recip() }).collect()
}

/// `λA`; `λ = 0` is rejected.
pub fn dilate(a: &FiniteRealSet, lambda: &Rational) -> Result<FiniteRealSet> {
    if lambda.is_zero() {
        return Err(Error::DegenerateDilation);
    }
    if lambda.is_one() {
        return Ok(a.clone());
    }
    let mut elems: Vec<Rational> = a.iter().map(|x| x * lambda).collect();
    if lambda.is_negative() {
        elems.reverse();
    }
    Ok(FiniteRealSet::from_sorted_unchecked(elems))
}

/// `A_λ = A ∩ λA`; its size is `r_{A/A}(λ)`.
pub fn popular_slice(a: &FiniteRealSet, lambda: &Rational) -> Result<FiniteRealSet> {
    let scaled = dilate(a, lambda)?;
    Ok(a.intersection(&scaled))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[i64]) -> FiniteRealSet {
        FiniteRealSet::from_integers(v.iter().copied())
    }

    #[test]
    fn make_set_dedups_and_canonicalises() {
        assert_eq!(make_set([int(1), int(1), int(2)]), set(&[1, 2]));
        let half = make_set([rat(1, 2), rat(2, 4)]);
        assert_eq!(half.len(), 1);
        assert!(half.contains(&rat(1, 2)));
        assert!(make_set(Vec::new()).is_empty());
    }

    #[test]
    fn combine_small_examples() {
        let a = set(&[1, 2, 3]);
        assert_eq!(combine(&a, &a, SetOp::Sum).unwrap(), set(&[2, 3, 4, 5, 6]));
        assert_eq!(combine(&a, &a, SetOp::Prod).unwrap(), set(&[1, 2, 3, 4, 6, 9]));
        let quot = combine(&a, &a, SetOp::Quot).unwrap();
        let expected = make_set([rat(1, 3), rat(1, 2), rat(2, 3), int(1), rat(3, 2), int(2), int(3)]);
        assert_eq!(quot, expected);
        assert_eq!(combine(&a, &set(&[0]), SetOp::Sum).unwrap(), a);
    }

    #[test]
    fn quotient_by_zero_is_rejected() {
        let a = set(&[1, 2]);
        assert_eq!(combine(&a, &set(&[0, 1]), SetOp::Quot), Err(Error::DivisorZero));
    }

    #[test]
    fn inverse_honours_zero_convention() {
        assert_eq!(inverse_set(&set(&[1, 2, 4])), make_set([rat(1, 4), rat(1, 2), int(1)]));
        assert_eq!(inverse_set(&set(&[0, 1])), set(&[0, 1]));
        assert!(inverse_set(&FiniteRealSet::empty()).is_empty());
        let mixed = make_set([rat(-3, 2), int(0), rat(5, 7)]);
        assert_eq!(inverse_set(&inverse_set(&mixed)), mixed);
    }

    #[test]
    fn dilation() {
        assert_eq!(dilate(&set(&[1, 2, 4]), &int(2)).unwrap(), set(&[2, 4, 8]));
        assert_eq!(dilate(&set(&[1, 3]), &rat(1, 3)).unwrap(), make_set([rat(1, 3), int(1)]));
        assert_eq!(dilate(&set(&[1, 3]), &int(-1)).unwrap(), set(&[-3, -1]));
        assert_eq!(dilate(&set(&[1]), &int(0)), Err(Error::DegenerateDilation));
    }

    #[test]
    fn slices() {
        let a = set(&[1, 2, 4]);
        assert_eq!(popular_slice(&a, &int(2)).unwrap(), set(&[2, 4]));
        assert_eq!(popular_slice(&a, &int(1)).unwrap(), a);
        assert!(popular_slice(&a, &int(3)).unwrap().is_empty());
        assert_eq!(popular_slice(&a, &int(0)), Err(Error::DegenerateDilation));
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("7"), Some(int(7)));
        assert_eq!(parse_rational("-7"), Some(int(-7)));
        assert_eq!(parse_rational("2/4"), Some(rat(1, 2)));
        assert_eq!(parse_rational(" -3/9 "), Some(rat(-1, 3)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("1/-2"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational("1.5"), None);
        assert_eq!(parse_rational(""), None);
    }

    #[test]
    fn set_algebra() {
        let a = set(&[1, 2, 3, 4]);
        let b = set(&[3, 4, 5]);
        assert_eq!(a.union(&b), set(&[1, 2, 3, 4, 5]));
        assert_eq!(a.intersection(&b), set(&[3, 4]));
        assert_eq!(a.difference(&b), set(&[1, 2]));
        assert!(set(&[3]).is_subset(&b));
        assert!(!a.is_disjoint(&b));
        assert_eq!(a.neg(), set(&[-4, -3, -2, -1]));
    }
}
