//! Reference exponents for the soft checks, stored exactly.

use serde::Serialize;
use sumprod_core::exact::serde_rational;
use sumprod_core::Rational;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exponent {
    pub name: &'static str,
    /// Exponent of `n = |A|` in the reference.
    #[serde(with = "serde_rational")]
    pub value: Rational,
    /// Exponent of the pool lower bound for `d⁺(A)`, for references that involve it.
    #[serde(skip_serializing_if = "Option::is_none", with = "sumprod_core::exact::serde_opt_rational")]
    pub d_exponent: Option<Rational>,
    pub statement: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentTable {
    pub entries: Vec<Exponent>,
}

fn r(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}

impl ExponentTable {
    pub fn standard() -> Self {
        let e = |name, value, statement| Exponent { name, value, d_exponent: None, statement };
        let ed = |name, value, d: Rational, statement| Exponent { name, value, d_exponent: Some(d), statement };
        let four_thirds = r(4, 3);
        let three_halves = r(3, 2);
        ExponentTable {
            entries: vec![
                e("sum_product_four_thirds", four_thirds.clone(), "|A+A| + |AA| ≥ n^(4/3) scale"),
                e("sum_product", &four_thirds + r(5, 5277), "|A+A| + |AA| ≳ n^e"),
                e("four_set_sum_product", &four_thirds + r(1, 753), "|A+A| + |A−A| + |AA| + |AA⁻¹| ≳ n^e"),
                e("difference_quotient", r(1, 1) + r(3, 10), "|A−A| + |AA⁻¹| ≳ n^e"),
                e("difference_product", r(1, 1) + r(7, 24), "|A−A| + |AA| ≳ n^e"),
                e("difference_quotient_product", r(13, 5), "|A−A|·|AA⁻¹| ≳ n^e"),
                e("difference_product_mixed", r(93, 1), "|A−A|^35·|AA|^37 ≳ n^e"),
                e("expander_difference", &three_halves + r(7, 226), "|A(A−A)| ≳ n^e"),
                e("expander_sum", &three_halves + r(1, 46), "|A(A+A)| ≳ n^e"),
                e("expander_shift", &three_halves + r(1, 182), "max_a |A(A±a)| ≳ n^e"),
                e("shift_energy", r(6, 1), "|A(A+b)|²·E×(A) ≳ n^e"),
                e("elekes", r(5, 2), "|A+A|·|AA| ≳ n^e"),
                ed("sumset_d_plus", r(58, 37), r(-21, 37), "|A+A| ≳ n^e·d⁺(A)^f"),
                ed("difference_d_plus", r(8, 5), r(-3, 5), "|A−A| ≳ n^e·d⁺(A)^f"),
                ed("energy_d_plus", r(32, 13), r(7, 13), "E⁺(A) ≲ n^e·d⁺(A)^f"),
                e("partition_structure", r(1, 2), "d⁺(B), d×(C) ≲ n^e with δ = 1/4"),
                e("partition_energy", r(71, 26), "E⁺(B), E×(C) ≲ n^e with δ = 1/4"),
                e("partition_cross_energy", r(11, 4), "E⁺(B,A), E×(C,A) ≲ n^e with δ = 1/4"),
                e("cover_product", r(1, 1), "d⁺(X)·d×(Y) ≲ n^e"),
                e("fourth_cover_product", r(3, 1), "d₄⁺(X)·E×(Y) ≲ n^e"),
            ],
        }
    }

    pub fn get(&self, name: &str) -> Option<&Exponent> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Statement for a soft check emitted by a decomposition certificate.
    pub fn statement_for(&self, check: &str) -> &'static str {
        let entry = match check {
            "d_plus_x_times_d_times_y" => "cover_product",
            "d4_plus_x_times_mult_energy_y" => "fourth_cover_product",
            "d_plus_b_lower" | "d_times_c_lower" => "partition_structure",
            "additive_energy_b" | "multiplicative_energy_c" => "partition_energy",
            "additive_energy_b_a" | "multiplicative_energy_c_a" => "partition_cross_energy",
            "remainder_d_times_mass_chain" => return "min over steps of |T|·d×(T) against |Y|·d×(Y)",
            "extracted_size_over_witness_value" => return "min over steps of |A′| against the step's d value",
            other => other,
        };
        self.get(entry).map(|e| e.statement).unwrap_or("")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_values() {
        let t = ExponentTable::standard();
        assert_eq!(t.get("sum_product").unwrap().value, r(7041, 5277));
        assert_eq!(t.get("four_set_sum_product").unwrap().value, r(1005, 753));
        assert_eq!(t.get("difference_product").unwrap().value, r(31, 24));
        assert_eq!(t.get("expander_difference").unwrap().value, r(173, 113));
        assert_eq!(t.get("expander_sum").unwrap().value, r(35, 23));
        assert_eq!(t.get("expander_shift").unwrap().value, r(137, 91));
        // δ = 1/4: 1 − 2δ, 3 − 14δ/13, 3 − δ
        let d = r(1, 4);
        assert_eq!(t.get("partition_structure").unwrap().value, r(1, 1) - &d * r(2, 1));
        assert_eq!(t.get("partition_energy").unwrap().value, r(3, 1) - &d * r(14, 13));
        assert_eq!(t.get("partition_cross_energy").unwrap().value, r(3, 1) - &d);
        let names: std::collections::BTreeSet<_> = t.entries.iter().map(|e| e.name).collect();
        assert_eq!(names.len(), t.entries.len());
    }
}
