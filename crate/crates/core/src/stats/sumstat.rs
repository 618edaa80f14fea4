//! Sumstat burden test: sum of per-SNV trend z values, permutation P-value
//! with a two-sided absolute tail.

use super::{Method, ScoreSet, TestResult};
use crate::data::{PhenotypeVector, UnitMatrix};
use crate::error::Result;
use crate::perm::{empirical_p, PermutationPlan, Tail};

pub fn sumstat_test(unit: &UnitMatrix, phenotype: &PhenotypeVector, plan: &PermutationPlan) -> Result<TestResult> {
    let scores = ScoreSet::compute(unit, phenotype, plan)?;
    Ok(sumstat_from_scores(&scores))
}

fn sum_z(scores: &ScoreSet, u: &[f64]) -> f64 {
    scores.to_z(u).iter().sum()
}

pub(crate) fn sumstat_from_scores(scores: &ScoreSet) -> TestResult {
    let observed = sum_z(scores, scores.observed());
    let null: Vec<f64> = scores.null_rows().map(|u| sum_z(scores, u)).collect();
    let p = empirical_p(observed, &null, Tail::TwoSidedAbs);
    TestResult {
        method: Method::Sumstat,
        statistic: observed,
        p_value: p.p,
        n_variants: scores.n_variants(),
        n_permutations: Some(p.n_permutations),
        clamped: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_signal_gives_zero_and_p_one() {
        // Each column has the same dosage multiset in cases and controls.
        let unit = UnitMatrix::from_columns(&[vec![0.0, 1.0, 0.0, 1.0], vec![2.0, 0.0, 2.0, 0.0]]).unwrap();
        let ph = PhenotypeVector::from_case_flags(&[true, true, false, false]);
        let plan = PermutationPlan::for_phenotype(1, 50, &ph).unwrap();
        let r = sumstat_test(&unit, &ph, &plan).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn opposite_effects_cancel() {
        let a = vec![2.0, 1.0, 1.0, 0.0, 0.0, 0.0];
        let b: Vec<f64> = a.iter().map(|g| 2.0 - g).collect();
        let unit = UnitMatrix::from_columns(&[a, b]).unwrap();
        let ph = PhenotypeVector::from_case_flags(&[true, true, true, false, false, false]);
        let plan = PermutationPlan::for_phenotype(1, 50, &ph).unwrap();
        let r = sumstat_test(&unit, &ph, &plan).unwrap();
        assert!(r.statistic.abs() < 1e-12);
    }
}
