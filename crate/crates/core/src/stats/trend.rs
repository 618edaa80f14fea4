//! Cochran-Armitage trend statistic in signed z form.

use crate::data::PhenotypeVector;
use crate::error::{Error, Result};

/// Trend z of one dosage column: `(mean_case - mean_control) / se` with the
/// null standard error `s * sqrt(n / (n_case * n_control))`, where `s^2` is
/// the population variance of the column over all samples. Positive means
/// more minor alleles in cases. A constant column gives 0.
pub fn per_snv_trend_z(column: &[f64], phenotype: &PhenotypeVector) -> Result<f64> {
    if column.len() != phenotype.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} dosages for {} phenotypes",
            column.len(),
            phenotype.len()
        )));
    }
    let (n1, n0) = phenotype.require_both_classes()?;
    let n = column.len() as f64;
    let mean = column.iter().sum::<f64>() / n;
    let var = column.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / n;
    if var <= 0.0 {
        return Ok(0.0);
    }
    let case_sum: f64 = column
        .iter()
        .zip(phenotype.labels())
        .filter(|(_, s)| s.is_case())
        .map(|(g, _)| g)
        .sum();
    let score = case_sum - n1 as f64 * mean;
    Ok(score / null_score_sd(var, n1, n0))
}

/// Null standard deviation of the case-sum score `sum_case g - n1 * mean`.
pub(crate) fn null_score_sd(population_var: f64, n1: usize, n0: usize) -> f64 {
    let n = (n1 + n0) as f64;
    (n1 as f64 * n0 as f64 * population_var / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Trend chi-square from a 2 x 3 table with scores (0, 1, 2):
    /// T = sum_i t_i (case_i R0 - control_i R1),
    /// Var(T) = R1 R0 / N [sum_i t_i^2 C_i (N - C_i) - 2 sum_{i<j} t_i t_j C_i C_j].
    fn table_chi2(case: [f64; 3], control: [f64; 3]) -> f64 {
        let t = [0.0, 1.0, 2.0];
        let r1: f64 = case.iter().sum();
        let r0: f64 = control.iter().sum();
        let n = r1 + r0;
        let c: Vec<f64> = (0..3).map(|i| case[i] + control[i]).collect();
        let stat: f64 = (0..3).map(|i| t[i] * (case[i] * r0 - control[i] * r1)).sum();
        let mut inner = 0.0;
        for i in 0..3 {
            inner += t[i] * t[i] * c[i] * (n - c[i]);
            for j in (i + 1)..3 {
                inner -= 2.0 * t[i] * t[j] * c[i] * c[j];
            }
        }
        stat * stat / (r1 * r0 / n * inner)
    }

    fn expand(case: [usize; 3], control: [usize; 3]) -> (Vec<f64>, PhenotypeVector) {
        let mut col = Vec::new();
        let mut flags = Vec::new();
        for (g, &k) in case.iter().enumerate() {
            col.extend(std::iter::repeat_n(g as f64, k));
            flags.extend(std::iter::repeat_n(true, k));
        }
        for (g, &k) in control.iter().enumerate() {
            col.extend(std::iter::repeat_n(g as f64, k));
            flags.extend(std::iter::repeat_n(false, k));
        }
        (col, PhenotypeVector::from_case_flags(&flags))
    }

    #[test]
    fn matches_contingency_table_oracle() {
        let tables = [
            ([3, 2, 1], [5, 1, 0]),
            ([1, 4, 2], [4, 2, 1]),
            ([0, 1, 3], [2, 2, 0]),
            ([6, 0, 1], [3, 3, 2]),
        ];
        for (case, control) in tables {
            let (col, ph) = expand(case, control);
            let z = per_snv_trend_z(&col, &ph).unwrap();
            let oracle = table_chi2(case.map(|x| x as f64), control.map(|x| x as f64));
            assert!((z * z - oracle).abs() < 1e-10, "{case:?} {control:?}: {} vs {oracle}", z * z);
        }
    }

    #[test]
    fn identical_distributions_give_zero() {
        let (col, ph) = expand([2, 3, 1], [2, 3, 1]);
        assert_eq!(per_snv_trend_z(&col, &ph).unwrap(), 0.0);
    }

    #[test]
    fn flip_negates() {
        let (col, ph) = expand([1, 4, 2], [4, 2, 1]);
        let flipped: Vec<f64> = col.iter().map(|g| 2.0 - g).collect();
        let a = per_snv_trend_z(&col, &ph).unwrap();
        let b = per_snv_trend_z(&flipped, &ph).unwrap();
        assert!(a > 0.0);
        assert!((a + b).abs() < 1e-12);
    }

    #[test]
    fn constant_column_and_single_class() {
        let ph = PhenotypeVector::from_case_flags(&[true, false, true]);
        assert_eq!(per_snv_trend_z(&[1.0, 1.0, 1.0], &ph).unwrap(), 0.0);
        let all_cases = PhenotypeVector::from_case_flags(&[true, true]);
        assert!(matches!(per_snv_trend_z(&[0.0, 1.0], &all_cases), Err(Error::NoControls)));
    }
}
