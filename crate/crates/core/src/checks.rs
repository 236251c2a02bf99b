//! Exact inequality checks with both sides recorded as integers.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::energy::RepHistogram;
use crate::error::{Error, Result};
use crate::sets::{combine, FiniteRealSet, SetOp};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactCheck {
    pub name: String,
    pub holds: bool,
    pub lhs: String,
    pub rhs: String,
}

impl ExactCheck {
    pub fn le(name: impl Into<String>, lhs: &BigUint, rhs: &BigUint) -> Self {
        ExactCheck { name: name.into(), holds: lhs <= rhs, lhs: lhs.to_string(), rhs: rhs.to_string() }
    }

    pub fn eq(name: impl Into<String>, lhs: impl ToString, rhs: impl ToString) -> Self {
        let (lhs, rhs) = (lhs.to_string(), rhs.to_string());
        ExactCheck { name: name.into(), holds: lhs == rhs, lhs, rhs }
    }

    pub fn flag(name: impl Into<String>, holds: bool, detail: impl ToString) -> Self {
        ExactCheck { name: name.into(), holds, lhs: detail.to_string(), rhs: "true".into() }
    }
}

/// `|A|⁴/|A+A| ≤ E⁺(A) ≤ E₃⁺(A)^{1/2}·|A|`, as `|A|⁴ ≤ E⁺·|A+A|` and `E⁺² ≤ E₃⁺·|A|²`.
pub fn energy_chain(a: &FiniteRealSet) -> Result<[ExactCheck; 2]> {
    if a.is_empty() {
        return Err(Error::domain("energy chain needs a nonempty set"));
    }
    let n = BigUint::from(a.len());
    let hist = RepHistogram::build(a, a, SetOp::Diff)?;
    let e2 = hist.moment(2);
    let e3 = hist.moment(3);
    let sums = combine(a, a, SetOp::Sum)?.len();
    Ok([
        ExactCheck::le("energy_chain_sumset", &n.pow(4), &(&e2 * BigUint::from(sums))),
        ExactCheck::le("energy_chain_third_moment", &e2.pow(2), &(&e3 * n.pow(2))),
    ])
}

/// `E×(A,B)² ≤ E×(A)·E×(B)`.
pub fn cross_energy_bound(a: &FiniteRealSet, b: &FiniteRealSet) -> Result<ExactCheck> {
    if a.contains_zero() || b.contains_zero() {
        return Err(Error::domain("multiplicative energies need 0 ∉ A, B"));
    }
    let cross = RepHistogram::build(a, b, SetOp::Quot)?.moment(2);
    let ea = RepHistogram::build(a, a, SetOp::Quot)?.moment(2);
    let eb = RepHistogram::build(b, b, SetOp::Quot)?.moment(2);
    Ok(ExactCheck::le("cross_energy_bound", &cross.pow(2), &(ea * eb)))
}

/// `E₄/(|A||B|³) ≤ E₃/(|A||B|²) ≤ E₂/(|A||B|)`, as `E₄ ≤ |B|·E₃` and `E₃ ≤ |B|·E₂`.
pub fn moment_monotonicity(a: &FiniteRealSet, b: &FiniteRealSet, op: SetOp) -> Result<[ExactCheck; 2]> {
    let hist = RepHistogram::build(a, b, op)?;
    let nb = BigUint::from(b.len());
    let (e2, e3, e4) = (hist.moment(2), hist.moment(3), hist.moment(4));
    Ok([
        ExactCheck::le("moment_monotone_fourth_third", &e4, &(&nb * &e3)),
        ExactCheck::le("moment_monotone_third_second", &e3, &(&nb * &e2)),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_example() {
        let a = FiniteRealSet::from_integers([1, 2, 3]);
        let [lo, hi] = energy_chain(&a).unwrap();
        // 81 ≤ 19·5 and 19² ≤ 45·9
        assert_eq!((lo.lhs.as_str(), lo.rhs.as_str()), ("81", "95"));
        assert_eq!((hi.lhs.as_str(), hi.rhs.as_str()), ("361", "405"));
        assert!(lo.holds && hi.holds);
    }

    #[test]
    fn cross_and_monotone() {
        let a = FiniteRealSet::from_integers([1, 2, 4, 8]);
        let b = FiniteRealSet::from_integers([1, 3, 9]);
        assert!(cross_energy_bound(&a, &b).unwrap().holds);
        assert!(moment_monotonicity(&a, &b, SetOp::Diff).unwrap().iter().all(|c| c.holds));
        assert!(cross_energy_bound(&a, &FiniteRealSet::from_integers([0, 1])).is_err());
    }
}
