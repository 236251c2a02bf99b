//! The default test corpus: AP, GP, Balog–Wooley and random sets at
//! power-of-two sizes.

use crate::error::Result;
use crate::families::{generate, FamilySpec};
use crate::sets::FiniteRealSet;

pub const CORPUS_SIZES: [usize; 6] = [4, 8, 16, 32, 64, 128];
pub const RANDOM_UNIVERSE: u64 = 1000;

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub label: String,
    pub spec: FamilySpec,
    pub set: FiniteRealSet,
}

/// Balog–Wooley parameters with `s·p = n` for `n = 2^e`: `p = 2^⌈e/3⌉`.
pub fn balog_wooley_for(n: usize) -> FamilySpec {
    assert!(n.is_power_of_two() && n >= 2);
    let e = n.trailing_zeros() as usize;
    let p = 1usize << e.div_ceil(3);
    FamilySpec::BalogWooley { s: n / p, p }
}

pub fn random_for(n: usize) -> FamilySpec {
    FamilySpec::RandomSubset { universe: RANDOM_UNIVERSE, n, seed: 1000 + n as u64 }
}

pub fn corpus_specs(sizes: &[usize]) -> Vec<FamilySpec> {
    let mut out = Vec::new();
    for &n in sizes {
        out.push(FamilySpec::ap(n));
    }
    for &n in sizes {
        out.push(FamilySpec::gp(n));
    }
    for &n in sizes {
        out.push(balog_wooley_for(n));
    }
    for &n in sizes {
        out.push(random_for(n));
    }
    out
}

pub fn default_corpus() -> Result<Vec<CorpusEntry>> {
    corpus(&CORPUS_SIZES)
}

pub fn corpus(sizes: &[usize]) -> Result<Vec<CorpusEntry>> {
    corpus_specs(sizes)
        .into_iter()
        .map(|spec| {
            let set = generate(&spec)?;
            Ok(CorpusEntry { label: format!("{}-{}", spec.name(), set.len()), spec, set })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_match() {
        let c = default_corpus().unwrap();
        assert_eq!(c.len(), 24);
        for e in &c {
            assert_eq!(e.set.len(), e.spec.size(), "{}", e.label);
            assert!(CORPUS_SIZES.contains(&e.set.len()));
        }
        assert_eq!(balog_wooley_for(64), FamilySpec::BalogWooley { s: 16, p: 4 });
    }
}
