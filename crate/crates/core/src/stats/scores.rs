//! Per-SNV score vectors under the observed labels and under every
//! permutation of a plan.
//!
//! The score of SNV `j` is `U_j = sum_{i in cases} g_ij - n_case * mean_j`,
//! i.e. `(y - ybar)' g_j`. Only the case sums change between permutations, so
//! each permutation costs one pass over the nonzero dosages of the selected
//! class. All downstream statistics are functions of these sums, which keeps
//! ties between relabelings exact for integer dosages.

use rayon::prelude::*;

use super::trend::null_score_sd;
use crate::data::{PhenotypeVector, UnitMatrix};
use crate::error::{Error, Result};
use crate::perm::{PermutationPlan, Selected};

const CHUNK: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreSet {
    n_variants: usize,
    n_permutations: usize,
    observed: Vec<f64>,
    null: Vec<f64>,
    null_sd: Vec<f64>,
}

/// Nonzero dosages per sample.
struct SparseRows {
    start: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseRows {
    fn new(unit: &UnitMatrix) -> Self {
        let mut start = Vec::with_capacity(unit.n_samples() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        start.push(0);
        for i in 0..unit.n_samples() {
            for (j, &v) in unit.row(i).iter().enumerate() {
                if v != 0.0 {
                    cols.push(j as u32);
                    vals.push(v);
                }
            }
            start.push(cols.len());
        }
        SparseRows { start, cols, vals }
    }

    fn accumulate(&self, samples: &[usize], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for &i in samples {
            for k in self.start[i]..self.start[i + 1] {
                out[self.cols[k] as usize] += self.vals[k];
            }
        }
    }
}

struct ScoreKernel<'a> {
    rows: SparseRows,
    col_sum: Vec<f64>,
    shift: Vec<f64>,
    plan: &'a PermutationPlan,
}

impl ScoreKernel<'_> {
    /// Scores from the summed dosages of the plan's selected class.
    fn finish(&self, selected_sum: &[f64], out: &mut [f64]) {
        for j in 0..out.len() {
            let case_sum = match self.plan.selected_class() {
                Selected::Cases => selected_sum[j],
                Selected::Controls => self.col_sum[j] - selected_sum[j],
            };
            out[j] = case_sum - self.shift[j];
        }
    }
}

impl ScoreSet {
    pub fn compute(unit: &UnitMatrix, phenotype: &PhenotypeVector, plan: &PermutationPlan) -> Result<ScoreSet> {
        let n = unit.n_samples();
        let m = unit.n_variants();
        if phenotype.len() != n {
            return Err(Error::DimensionMismatch(format!("{n} samples, {} phenotypes", phenotype.len())));
        }
        let (n1, n0) = phenotype.require_both_classes()?;
        if plan.n_case != n1 || plan.n_control != n0 {
            return Err(Error::InvalidConfig(format!(
                "permutation plan is for {} cases / {} controls, phenotype has {n1} / {n0}",
                plan.n_case, plan.n_control
            )));
        }
        if m == 0 {
            return Err(Error::InvalidConfig("unit has no variants".into()));
        }

        let mut col_sum = vec![0.0; m];
        for i in 0..n {
            for (s, v) in col_sum.iter_mut().zip(unit.row(i)) {
                *s += v;
            }
        }
        let means: Vec<f64> = col_sum.iter().map(|s| s / n as f64).collect();
        let mut var = vec![0.0; m];
        for i in 0..n {
            for (j, v) in unit.row(i).iter().enumerate() {
                var[j] += (v - means[j]) * (v - means[j]);
            }
        }
        let null_sd = var.iter().map(|v| null_score_sd(v / n as f64, n1, n0)).collect();
        let kernel = ScoreKernel {
            rows: SparseRows::new(unit),
            shift: means.iter().map(|mu| n1 as f64 * mu).collect(),
            col_sum,
            plan,
        };

        let selected_is_case = plan.selected_class() == Selected::Cases;
        let observed_sel: Vec<usize> = (0..n)
            .filter(|&i| phenotype.labels()[i].is_case() == selected_is_case)
            .collect();
        let mut sums = vec![0.0; m];
        kernel.rows.accumulate(&observed_sel, &mut sums);
        let mut observed = vec![0.0; m];
        kernel.finish(&sums, &mut observed);

        let b = plan.n_permutations;
        let mut null = vec![0.0; b * m];
        null.par_chunks_mut(CHUNK * m).enumerate().for_each(|(chunk, block)| {
            let mut scratch = Vec::with_capacity(n);
            let mut sel = Vec::with_capacity(n);
            let mut sums = vec![0.0; m];
            for (k, out) in block.chunks_mut(m).enumerate() {
                plan.selected_indices(chunk * CHUNK + k, &mut scratch, &mut sel);
                kernel.rows.accumulate(&sel, &mut sums);
                kernel.finish(&sums, out);
            }
        });

        Ok(ScoreSet {
            n_variants: m,
            n_permutations: b,
            observed,
            null,
            null_sd,
        })
    }

    pub fn n_variants(&self) -> usize {
        self.n_variants
    }

    pub fn n_permutations(&self) -> usize {
        self.n_permutations
    }

    /// Observed scores `U`.
    pub fn observed(&self) -> &[f64] {
        &self.observed
    }

    /// Scores under permutation `b`.
    pub fn null(&self, b: usize) -> &[f64] {
        &self.null[b * self.n_variants..(b + 1) * self.n_variants]
    }

    pub fn null_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.null.chunks(self.n_variants)
    }

    /// Null standard deviation of each score (0 for constant columns).
    pub fn null_sd(&self) -> &[f64] {
        &self.null_sd
    }

    /// Standardizes a score vector into trend z values.
    pub fn to_z(&self, scores: &[f64]) -> Vec<f64> {
        scores
            .iter()
            .zip(&self.null_sd)
            .map(|(u, sd)| if *sd > 0.0 { u / sd } else { 0.0 })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::trend::per_snv_trend_z;

    fn toy() -> (UnitMatrix, PhenotypeVector) {
        let cols = vec![
            vec![0.0, 1.0, 2.0, 0.0, 1.0, 0.0, 0.0, 2.0],
            vec![1.0, 1.0, 0.0, 0.0, 0.0, 2.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        ];
        let ph = PhenotypeVector::from_case_flags(&[true, true, false, true, false, false, true, false]);
        (UnitMatrix::from_columns(&cols).unwrap(), ph)
    }

    #[test]
    fn observed_z_matches_trend() {
        let (unit, ph) = toy();
        let plan = PermutationPlan::for_phenotype(3, 10, &ph).unwrap();
        let set = ScoreSet::compute(&unit, &ph, &plan).unwrap();
        let z = set.to_z(set.observed());
        for (j, zj) in z.iter().enumerate() {
            let direct = per_snv_trend_z(&unit.column(j), &ph).unwrap();
            assert!((zj - direct).abs() < 1e-12);
        }
        assert_eq!(z[2], 0.0);
    }

    #[test]
    fn null_rows_match_relabeled_trend() {
        let (unit, ph) = toy();
        let plan = PermutationPlan::for_phenotype(11, 25, &ph).unwrap();
        let set = ScoreSet::compute(&unit, &ph, &plan).unwrap();
        for b in 0..25 {
            let relabeled = plan.assignment(b);
            let z = set.to_z(set.null(b));
            for (j, zj) in z.iter().enumerate() {
                let direct = per_snv_trend_z(&unit.column(j), &relabeled).unwrap();
                assert!((zj - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn more_cases_than_controls() {
        let (unit, ph) = toy();
        let flipped = PhenotypeVector::from_case_flags(&[true, true, true, true, false, true, true, false]);
        let plan = PermutationPlan::for_phenotype(5, 8, &flipped).unwrap();
        let set = ScoreSet::compute(&unit, &flipped, &plan).unwrap();
        for b in 0..8 {
            let relabeled = plan.assignment(b);
            let z = set.to_z(set.null(b));
            let direct = per_snv_trend_z(&unit.column(0), &relabeled).unwrap();
            assert!((z[0] - direct).abs() < 1e-12);
        }
        let _ = ph;
    }

    #[test]
    fn plan_mismatch_rejected() {
        let (unit, ph) = toy();
        let plan = PermutationPlan::new(1, 10, 3, 5).unwrap();
        assert!(ScoreSet::compute(&unit, &ph, &plan).is_err());
    }
}
