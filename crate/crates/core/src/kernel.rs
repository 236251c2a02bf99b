//! Pair-counting kernel behind every sumset and representation histogram.
//!
//! When all elements of `A ∪ B` share a common denominator `L` whose scaled
//! numerators fit comfortably in 62 bits, pairs are counted on integer keys
//! (`La ± Lb`, `L²ab`, or the reduced fraction `La / Lb`) and converted back
//! to rationals only once per distinct value. Otherwise the kernel counts
//! `BigRational` keys directly. Either path can use a hash table or a
//! sort-and-merge pass; all four combinations produce identical output.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::hash::Hash;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{Error, Result};
use crate::sets::{FiniteRealSet, Rational, SetOp};

const SCALED_LIMIT: i64 = 1 << 62;

/// How pair values are aggregated into counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CountStrategy {
    /// Associative table keyed by the exact value.
    #[default]
    Hashed,
    /// Materialise every pair value, sort, and run-length encode.
    SortMerge,
}

/// Reduced fraction `p/q` (`q > 0`) of scaled integers, ordered by value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Frac(i128, i128);

impl Frac {
    fn new(p: i128, q: i128) -> Self {
        let g = p.gcd(&q);
        let (p, q) = (p / g, q / g);
        if q < 0 {
            Frac(-p, -q)
        } else {
            Frac(p, q)
        }
    }
}

impl Ord for Frac {
    fn cmp(&self, other: &Self) -> Ordering {
        // both components are below 2^62 in magnitude, so the products fit
        (self.0 * other.1).cmp(&(other.0 * self.1))
    }
}

impl PartialOrd for Frac {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Scaled {
    scale: BigInt,
    a: Vec<i64>,
    b: Vec<i64>,
}

fn common_scale(a: &FiniteRealSet, b: &FiniteRealSet) -> BigInt {
    let mut scale = BigInt::one();
    for x in a.iter().chain(b.iter()) {
        if !x.denom().is_one() {
            scale = scale.lcm(x.denom());
        }
    }
    scale
}

fn scale_pair(a: &FiniteRealSet, b: &FiniteRealSet) -> Option<Scaled> {
    let scale = common_scale(a, b);
    let to_scaled = |x: &Rational| -> Option<i64> {
        let v = (x.numer() * (&scale / x.denom())).to_i64()?;
        (v.unsigned_abs() < SCALED_LIMIT as u64).then_some(v)
    };
    let a: Option<Vec<i64>> = a.iter().map(to_scaled).collect();
    let b: Option<Vec<i64>> = b.iter().map(to_scaled).collect();
    Some(Scaled { scale, a: a?, b: b? })
}

fn count_keys<K: Ord + Hash + Eq>(keys: impl Iterator<Item = K>, strategy: CountStrategy) -> Vec<(K, u64)> {
    match strategy {
        CountStrategy::Hashed => {
            let mut table: FxHashMap<K, u64> = FxHashMap::default();
            for k in keys {
                *table.entry(k).or_insert(0) += 1;
            }
            let mut out: Vec<(K, u64)> = table.into_iter().collect();
            out.sort_unstable_by(|x, y| x.0.cmp(&y.0));
            out
        }
        CountStrategy::SortMerge => {
            let mut all: Vec<K> = keys.collect();
            all.sort_unstable();
            let mut out: Vec<(K, u64)> = Vec::new();
            for k in all {
                match out.last_mut() {
                    Some((last, c)) if *last == k => *c += 1,
                    _ => out.push((k, 1)),
                }
            }
            out
        }
    }
}

fn scaled_counts(s: &Scaled, op: SetOp, strategy: CountStrategy) -> Vec<(Rational, u64)> {
    let pairs = || s.a.iter().flat_map(move |&x| s.b.iter().map(move |&y| (x as i128, y as i128)));
    let linear = |keys: Vec<(i128, u64)>, denom: BigInt| -> Vec<(Rational, u64)> {
        keys.into_iter().map(|(k, c)| (Rational::new(BigInt::from(k), denom.clone()), c)).collect()
    };
    match op {
        SetOp::Sum => linear(count_keys(pairs().map(|(x, y)| x + y), strategy), s.scale.clone()),
        SetOp::Diff => linear(count_keys(pairs().map(|(x, y)| x - y), strategy), s.scale.clone()),
        SetOp::Prod => linear(count_keys(pairs().map(|(x, y)| x * y), strategy), &s.scale * &s.scale),
        SetOp::Quot => count_keys(pairs().map(|(x, y)| Frac::new(x, y)), strategy)
            .into_iter()
            .map(|(Frac(p, q), c)| (Rational::new(BigInt::from(p), BigInt::from(q)), c))
            .collect(),
    }
}

/// Sums, differences and products on `BigInt` keys over the common
/// denominator, avoiding a gcd per pair.
fn scaled_big_counts(a: &FiniteRealSet, b: &FiniteRealSet, op: SetOp, strategy: CountStrategy) -> Vec<(Rational, u64)> {
    let scale = common_scale(a, b);
    let scaled = |s: &FiniteRealSet| -> Vec<BigInt> { s.iter().map(|x| x.numer() * (&scale / x.denom())).collect() };
    let (xa, xb) = (scaled(a), scaled(b));
    let keys = xa.iter().flat_map(|x| {
        xb.iter().map(move |y| match op {
            SetOp::Sum => x + y,
            SetOp::Diff => x - y,
            SetOp::Prod => x * y,
            SetOp::Quot => unreachable!("quotients use rational keys"),
        })
    });
    let denom = if op == SetOp::Prod { &scale * &scale } else { scale.clone() };
    count_keys(keys, strategy).into_iter().map(|(k, c)| (Rational::new(k, denom.clone()), c)).collect()
}

fn big_counts(a: &FiniteRealSet, b: &FiniteRealSet, op: SetOp, strategy: CountStrategy) -> Vec<(Rational, u64)> {
    let values = a.iter().flat_map(|x| b.iter().map(move |y| op.apply(x, y)));
    match strategy {
        CountStrategy::Hashed => {
            let mut table: HashMap<Rational, u64> = HashMap::new();
            for v in values {
                *table.entry(v).or_insert(0) += 1;
            }
            let mut out: Vec<(Rational, u64)> = table.into_iter().collect();
            out.sort_unstable_by(|x, y| x.0.cmp(&y.0));
            out
        }
        CountStrategy::SortMerge => count_keys(values, CountStrategy::SortMerge),
    }
}

/// Sorted `(value, #pairs)` for `{a ∘ b}`; every count is at least one and
/// the counts sum to `|A||B|`.
pub fn pair_counts(
    a: &FiniteRealSet,
    b: &FiniteRealSet,
    op: SetOp,
    strategy: CountStrategy,
) -> Result<Vec<(Rational, u64)>> {
    if op == SetOp::Quot && b.iter().any(|x| x.is_zero()) {
        return Err(Error::DivisorZero);
    }
    if a.is_empty() || b.is_empty() {
        return Ok(Vec::new());
    }
    Ok(match scale_pair(a, b) {
        Some(s) => scaled_counts(&s, op, strategy),
        None if op != SetOp::Quot => scaled_big_counts(a, b, op, strategy),
        None => big_counts(a, b, op, strategy),
    })
}

/// `|{a ∘ b}|` without materialising the values.
pub fn distinct_count(a: &FiniteRealSet, b: &FiniteRealSet, op: SetOp) -> Result<usize> {
    fn distinct<K: Hash + Eq>(keys: impl Iterator<Item = K>) -> usize {
        keys.collect::<FxHashSet<K>>().len()
    }
    if op == SetOp::Quot && b.iter().any(|x| x.is_zero()) {
        return Err(Error::DivisorZero);
    }
    if let Some(s) = scale_pair(a, b) {
        let pairs = || s.a.iter().flat_map(|&x| s.b.iter().map(move |&y| (x as i128, y as i128)));
        return Ok(match op {
            SetOp::Sum => distinct(pairs().map(|(x, y)| x + y)),
            SetOp::Diff => distinct(pairs().map(|(x, y)| x - y)),
            SetOp::Prod => distinct(pairs().map(|(x, y)| x * y)),
            SetOp::Quot => distinct(pairs().map(|(x, y)| Frac::new(x, y))),
        });
    }
    if op == SetOp::Quot {
        return Ok(distinct(a.iter().flat_map(|x| b.iter().map(move |y| x / y))));
    }
    let scale = common_scale(a, b);
    let scaled = |s: &FiniteRealSet| -> Vec<BigInt> { s.iter().map(|x| x.numer() * (&scale / x.denom())).collect() };
    let (xa, xb) = (scaled(a), scaled(b));
    let pairs = || xa.iter().flat_map(|x| xb.iter().map(move |y| (x, y)));
    Ok(match op {
        SetOp::Sum => distinct(pairs().map(|(x, y)| x + y)),
        SetOp::Diff => distinct(pairs().map(|(x, y)| x - y)),
        _ => distinct(pairs().map(|(x, y)| x * y)),
    })
}

/// Same as [`pair_counts`] but never takes the scaled-integer path.
pub fn pair_counts_big(
    a: &FiniteRealSet,
    b: &FiniteRealSet,
    op: SetOp,
    strategy: CountStrategy,
) -> Result<Vec<(Rational, u64)>> {
    if op == SetOp::Quot && b.iter().any(|x| x.is_zero()) {
        return Err(Error::DivisorZero);
    }
    Ok(big_counts(a, b, op, strategy))
}
