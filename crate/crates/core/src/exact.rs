//! Exact integer helpers shared across modules: power sums, comparison of
//! sums of n-th roots without floating point, and serde adapters that render
//! big numbers as decimal strings.

use std::cmp::Ordering;

use num_bigint::BigUint;
use num_traits::{One, Pow, ToPrimitive, Zero};

/// `Σ c^m` over the given counts.
pub fn power_sum(counts: impl IntoIterator<Item = u64>, m: u32) -> BigUint {
    let mut acc: u128 = 0;
    let mut spill = BigUint::zero();
    for c in counts {
        match (c as u128).checked_pow(m) {
            Some(p) => match acc.checked_add(p) {
                Some(v) => acc = v,
                None => {
                    spill += BigUint::from(acc);
                    acc = p;
                }
            },
            None => spill += BigUint::from(c).pow(m),
        }
    }
    spill + BigUint::from(acc)
}

fn exact_root(x: &BigUint, n: u32) -> Option<BigUint> {
    let r = x.nth_root(n);
    (Pow::pow(&r, n) == *x).then_some(r)
}

/// Compares `lhs^(1/n)` with `Σ terms_j^(1/n)` exactly.
///
/// If every `term·lhs^(n−1)` is a perfect n-th power the comparison reduces
/// to an integer one. Otherwise the two sides cannot be equal (n-th roots of
/// distinct n-th-power-free integers are linearly independent over ℚ), and
/// dyadic interval refinement terminates.
pub fn compare_root_sum(lhs: &BigUint, terms: &[BigUint], n: u32) -> Ordering {
    assert!(n >= 1);
    let terms: Vec<&BigUint> = terms.iter().filter(|t| !t.is_zero()).collect();
    if lhs.is_zero() {
        return if terms.is_empty() { Ordering::Equal } else { Ordering::Less };
    }
    if terms.is_empty() {
        return Ordering::Greater;
    }
    let weight = Pow::pow(lhs, n - 1);
    let roots: Option<Vec<BigUint>> = terms.iter().map(|t| exact_root(&(*t * &weight), n)).collect();
    if let Some(roots) = roots {
        let total: BigUint = roots.iter().sum();
        return lhs.cmp(&total);
    }
    let mut bits: u32 = 32;
    loop {
        let scale = BigUint::one() << (bits as usize * n as usize);
        let bounds = |x: &BigUint| {
            let scaled = x * &scale;
            let lo = scaled.nth_root(n);
            let hi = if Pow::pow(&lo, n) == scaled { lo.clone() } else { &lo + 1u32 };
            (lo, hi)
        };
        let (c_lo, c_hi) = bounds(lhs);
        let (mut s_lo, mut s_hi) = (BigUint::zero(), BigUint::zero());
        for t in &terms {
            let (lo, hi) = bounds(t);
            s_lo += lo;
            s_hi += hi;
        }
        if c_hi <= s_lo {
            return Ordering::Less;
        }
        if c_lo >= s_hi {
            return Ordering::Greater;
        }
        bits = bits.checked_mul(2).expect("root comparison failed to separate");
    }
}

/// Decimal rendering with 12 significant digits; scientific notation
/// outside `[1e-4, 1e12)`.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..12).contains(&mag) {
        return format!("{:.11e}", x);
    }
    let decimals = (11 - mag).max(0) as usize;
    format!("{:.*}", decimals, x)
}

/// Same as [`sig12`] for a value given by its base-10 logarithm, so that
/// ratios far outside `f64` range still render.
pub fn sig12_from_log10(log10: f64) -> String {
    if log10.is_finite() && log10.abs() < 300.0 {
        return sig12(10f64.powf(log10));
    }
    let exp = log10.floor();
    let mantissa = 10f64.powf(log10 - exp);
    format!("{:.11}e{}", mantissa, exp as i64)
}

/// `log10` of a big integer; exact enough for 12-digit ratio rendering.
pub fn log10_big(x: &BigUint) -> f64 {
    if let Some(v) = x.to_f64().filter(|v| v.is_finite()) {
        return v.log10();
    }
    let bits = x.bits();
    let shift = bits.saturating_sub(60);
    let top = (x >> shift).to_f64().unwrap_or(f64::MAX);
    top.log10() + shift as f64 * std::f64::consts::LOG10_2
}

pub mod serde_rational {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::sets::{parse_rational, Rational};

    pub fn serialize<S: Serializer>(x: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(x)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let raw = String::deserialize(d)?;
        parse_rational(&raw).ok_or_else(|| serde::de::Error::custom(format!("bad rational `{raw}`")))
    }
}

pub mod serde_opt_rational {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::sets::{parse_rational, Rational};

    pub fn serialize<S: Serializer>(x: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => s.collect_str(v),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        let raw = Option::<String>::deserialize(d)?;
        raw.map(|r| parse_rational(&r).ok_or_else(|| serde::de::Error::custom(format!("bad rational `{r}`"))))
            .transpose()
    }
}

pub mod serde_biguint {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(x)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(|_| serde::de::Error::custom(format!("bad integer `{raw}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(x: u64) -> BigUint {
        BigUint::from(x)
    }

    #[test]
    fn power_sums() {
        assert_eq!(power_sum([3, 2, 2, 1, 1], 2), b(19));
        assert_eq!(power_sum([3, 2, 2, 1, 1], 3), b(45));
        assert_eq!(power_sum([3, 2, 2, 1, 1], 4), b(115));
        let huge = power_sum([u64::MAX, u64::MAX], 4);
        assert_eq!(huge, BigUint::from(u64::MAX).pow(4u32) * 2u32);
    }

    #[test]
    fn root_sums_integer_and_irrational() {
        // 10^(1/3) vs 2·2^(1/3): 10 < 16
        assert_eq!(compare_root_sum(&b(10), &[b(2), b(2)], 3), Ordering::Less);
        // 16^(1/3) = 2·2^(1/3) exactly
        assert_eq!(compare_root_sum(&b(16), &[b(2), b(2)], 3), Ordering::Equal);
        assert_eq!(compare_root_sum(&b(17), &[b(2), b(2)], 3), Ordering::Greater);
        // 15 vs (6^(1/4) + 1)^4 ≈ 43.3
        assert_eq!(compare_root_sum(&b(15), &[b(6), b(1)], 4), Ordering::Less);
        assert_eq!(compare_root_sum(&b(44), &[b(6), b(1)], 4), Ordering::Greater);
        assert_eq!(compare_root_sum(&b(7), &[b(7)], 3), Ordering::Equal);
        assert_eq!(compare_root_sum(&b(0), &[], 3), Ordering::Equal);
        assert_eq!(compare_root_sum(&b(1), &[b(0)], 3), Ordering::Greater);
    }

    #[test]
    fn sig12_rendering() {
        assert_eq!(sig12(1.0), "1.00000000000");
        assert_eq!(sig12(16.2), "16.2000000000");
        assert_eq!(sig12(0.5), "0.500000000000");
        assert_eq!(sig12_from_log10(2.0), "100.000000000");
        assert!(sig12_from_log10(400.5).ends_with("e400"));
    }
}
