//! Diagnostics reported against asymptotic targets whose constants are unknown.
//! They never fail; the value and ratio are recorded for inspection.

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::exact::{log10_big, sig12_from_log10};
use crate::sets::Rational;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftCheck {
    pub name: String,
    /// Exact value, rendered in full.
    pub value: String,
    /// What the value is compared against.
    pub reference: String,
    /// Exponent of `n` in the reference, when it is a power of `n`.
    pub exponent: Option<String>,
    /// `value / reference` to 12 significant digits.
    pub ratio: String,
}

fn log10_rational(x: &Rational) -> Option<f64> {
    if !x.is_positive() {
        return None;
    }
    let mag = |v: &BigInt| log10_big(&v.magnitude().clone());
    Some(mag(x.numer()) - mag(x.denom()))
}

impl SoftCheck {
    /// `value` against `base^(num/den)`.
    pub fn against_power(name: &str, value: &Rational, base: usize, num: i64, den: i64) -> Self {
        let exponent = num as f64 / den as f64;
        let reference_log = log10_big(&BigUint::from(base)) * exponent;
        let ratio = match log10_rational(value) {
            Some(l) => sig12_from_log10(l - reference_log),
            None => "0".to_string(),
        };
        let exp = Rational::new(num.into(), den.into()).to_string();
        SoftCheck {
            name: name.to_string(),
            value: value.to_string(),
            reference: format!("{base}^({exp})"),
            exponent: Some(exp),
            ratio,
        }
    }

    pub fn against_value(name: &str, value: &Rational, reference: &Rational) -> Self {
        let ratio = if reference.is_zero() {
            "inf".to_string()
        } else {
            match log10_rational(&(value / reference)) {
                Some(l) => sig12_from_log10(l),
                None => "0".to_string(),
            }
        };
        SoftCheck {
            name: name.to_string(),
            value: value.to_string(),
            reference: reference.to_string(),
            exponent: None,
            ratio,
        }
    }

    /// Built from a precomputed `log10(value / reference)`.
    pub fn from_log10(
        name: &str,
        value: String,
        reference: String,
        exponent: Option<String>,
        log10_ratio: f64,
    ) -> Self {
        let ratio = if log10_ratio == f64::NEG_INFINITY { "0".to_string() } else { sig12_from_log10(log10_ratio) };
        SoftCheck { name: name.to_string(), value, reference, exponent, ratio }
    }
}
