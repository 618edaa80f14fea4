//! Fisher's combination of per-SNV trend P-values.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;

use super::{clamp_probability, Method, TestResult};
use crate::data::{PhenotypeVector, UnitMatrix};
use crate::error::Result;
use crate::stats::trend::per_snv_trend_z;

/// Two-sided normal tail `P(|Z| >= |z|)`.
pub fn two_sided_normal_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2)
}

/// Combines P-values: `X = -2 sum ln p_j`, upper tail of chi-square with
/// `2k` degrees of freedom. Zero inputs are clamped to the smallest positive
/// double and reported through the flag.
pub fn combine_p_values(p_values: &[f64]) -> (f64, f64, bool) {
    let mut clamped = false;
    let x: f64 = -2.0
        * p_values
            .iter()
            .map(|&p| {
                if p <= 0.0 {
                    clamped = true;
                    f64::MIN_POSITIVE.ln()
                } else {
                    p.min(1.0).ln()
                }
            })
            .sum::<f64>();
    let x = x.max(0.0);
    let dist = ChiSquared::new(2.0 * p_values.len() as f64).expect("positive degrees of freedom");
    let (p, c) = clamp_probability(dist.sf(x));
    (x, p, clamped || c)
}

pub fn fisher_combined(unit: &UnitMatrix, phenotype: &PhenotypeVector) -> Result<TestResult> {
    let mut p_values = Vec::with_capacity(unit.n_variants());
    for j in 0..unit.n_variants() {
        p_values.push(two_sided_normal_p(per_snv_trend_z(&unit.column(j), phenotype)?));
    }
    let (statistic, p_value, clamped) = combine_p_values(&p_values);
    Ok(TestResult {
        method: Method::Fisher,
        statistic,
        p_value,
        n_variants: unit.n_variants(),
        n_permutations: None,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_p_is_identity() {
        for p in [0.9, 0.5, 0.05, 1e-5, 1e-12] {
            let (_, out, _) = combine_p_values(&[p]);
            assert!((out - p).abs() < 1e-12 * p.max(1e-3), "{p} -> {out}");
        }
    }

    #[test]
    fn two_p_values_closed_form() {
        let (x, p, _) = combine_p_values(&[0.05, 0.05]);
        let oracle_x = -4.0 * 0.05f64.ln();
        assert!((x - oracle_x).abs() < 1e-12);
        assert!((x - 11.982929094215963).abs() < 1e-9);
        let oracle = (-x / 2.0).exp() * (1.0 + x / 2.0);
        assert!((p - oracle).abs() < 1e-10);
        assert!((p - 1.75e-2).abs() < 5e-5);
    }

    #[test]
    fn all_ones() {
        let (x, p, _) = combine_p_values(&[1.0, 1.0, 1.0]);
        assert_eq!(x, 0.0);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn zero_p_clamped_and_flagged() {
        let (_, p, clamped) = combine_p_values(&[0.0, 0.5]);
        assert!(clamped);
        assert!(p > 0.0);
    }
}
