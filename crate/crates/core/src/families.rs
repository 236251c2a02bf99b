//! Deterministic and seeded set generators.
//!
//! `random_subset` is reproducible across platforms: the generator is
//! ChaCha8 seeded with `seed_from_u64(seed)`, bounded draws take raw
//! `next_u64` outputs with rejection of the biased top zone, and the subset
//! is the first `n` entries of a sparse Fisher–Yates shuffle of `1..=N`.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact;
use crate::sets::{FiniteRealSet, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    Ap {
        n: usize,
        #[serde(with = "exact::serde_rational")]
        start: Rational,
        #[serde(with = "exact::serde_rational")]
        step: Rational,
    },
    Gp {
        n: usize,
        #[serde(with = "exact::serde_rational")]
        start: Rational,
        #[serde(with = "exact::serde_rational")]
        ratio: Rational,
    },
    /// `{(2m − 1)·2^j : 1 ≤ m ≤ s, 1 ≤ j ≤ p}`.
    BalogWooley { s: usize, p: usize },
    /// `n` distinct elements of `{1, …, universe}`.
    RandomSubset { universe: u64, n: usize, seed: u64 },
}

impl FamilySpec {
    pub fn ap(n: usize) -> Self {
        FamilySpec::Ap { n, start: Rational::one(), step: Rational::one() }
    }

    pub fn gp(n: usize) -> Self {
        FamilySpec::Gp { n, start: Rational::one(), ratio: Rational::from_integer(2.into()) }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::Ap { .. } => "ap",
            FamilySpec::Gp { .. } => "gp",
            FamilySpec::BalogWooley { .. } => "balog_wooley",
            FamilySpec::RandomSubset { .. } => "random_subset",
        }
    }

    /// Number of elements the spec produces.
    pub fn size(&self) -> usize {
        match self {
            FamilySpec::Ap { n, .. } | FamilySpec::Gp { n, .. } | FamilySpec::RandomSubset { n, .. } => *n,
            FamilySpec::BalogWooley { s, p } => s * p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        match self {
            FamilySpec::Ap { n, step, .. } => {
                if *n == 0 {
                    return bad("ap needs n ≥ 1");
                }
                if step.is_zero() && *n > 1 {
                    return bad("ap step must be nonzero");
                }
            }
            FamilySpec::Gp { n, start, ratio } => {
                if *n == 0 {
                    return bad("gp needs n ≥ 1");
                }
                if start.is_zero() {
                    return bad("gp start must be nonzero");
                }
                let one = Rational::one();
                if ratio.is_zero() || *ratio == one || *ratio == -one {
                    return bad("gp ratio must not be 0, 1 or -1");
                }
            }
            FamilySpec::BalogWooley { s, p } => {
                if *s == 0 || *p == 0 {
                    return bad("balog_wooley needs s, p ≥ 1");
                }
            }
            FamilySpec::RandomSubset { universe, n, .. } => {
                if *n == 0 {
                    return bad("random_subset needs n ≥ 1");
                }
                if *n as u64 > *universe {
                    return bad("random_subset needs n ≤ universe");
                }
            }
        }
        Ok(())
    }
}

pub fn generate(spec: &FamilySpec) -> Result<FiniteRealSet> {
    spec.validate()?;
    let set = match spec {
        FamilySpec::Ap { n, start, step } => {
            FiniteRealSet::new((0..*n).map(|k| start + step * Rational::from_integer(BigInt::from(k))))
        }
        FamilySpec::Gp { n, start, ratio } => {
            let mut cur = start.clone();
            let mut out = Vec::with_capacity(*n);
            for _ in 0..*n {
                out.push(cur.clone());
                cur = &cur * ratio;
            }
            FiniteRealSet::new(out)
        }
        FamilySpec::BalogWooley { s, p } => FiniteRealSet::new(
            (1..=*s).flat_map(|m| (1..=*p).map(move |j| Rational::from_integer(BigInt::from(2 * m - 1) << j))),
        ),
        FamilySpec::RandomSubset { universe, n, seed } => random_subset(*universe, *n, *seed),
    };
    if set.len() != spec.size() {
        return Err(Error::invariant(format!(
            "{} produced {} elements, expected {}",
            spec.name(),
            set.len(),
            spec.size()
        )));
    }
    Ok(set)
}

/// Uniform draw from `0..bound` by rejection on raw 64-bit outputs.
fn draw_below(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    let zone = (1u128 << 64) / bound as u128 * bound as u128;
    loop {
        let v = rng.next_u64();
        if (v as u128) < zone {
            return v % bound;
        }
    }
}

fn random_subset(universe: u64, n: usize, seed: u64) -> FiniteRealSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut swapped: HashMap<u64, u64> = HashMap::new();
    let mut picked = Vec::with_capacity(n);
    for i in 0..n as u64 {
        let j = i + draw_below(&mut rng, universe - i);
        let at_j = *swapped.get(&j).unwrap_or(&j);
        let at_i = *swapped.get(&i).unwrap_or(&i);
        swapped.insert(j, at_i);
        picked.push(at_j + 1);
    }
    FiniteRealSet::new(picked.into_iter().map(|v| Rational::from_integer(BigInt::from(v))))
}
