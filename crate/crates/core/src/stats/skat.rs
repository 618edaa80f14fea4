//! SKAT variance-component score test and its SKAT-O combination with the
//! weighted burden statistic. Both use permutation P-values.
//!
//! With scores `U_j = (y - ybar)' g_j`:
//!
//! ```text
//! Q_skat   = sum_j w_j^2 U_j^2
//! Q_burden = (sum_j w_j U_j)^2
//! Q_rho    = (1 - rho) Q_skat + rho Q_burden
//! ```
//!
//! SKAT-O takes the minimum over the rho grid of the per-rho permutation
//! P-values and calibrates that minimum against the same permutations.

use statrs::function::beta::ln_beta;

use super::{Method, ScoreSet, TestResult};
use crate::data::{minor_allele_frequency_real, PhenotypeVector, UnitMatrix};
use crate::error::{Error, Result};
use crate::perm::{empirical_p, PermutationPlan, Tail, TIE_TOLERANCE};

pub const DEFAULT_RHO_GRID: [f64; 8] = [0.0, 0.01, 0.04, 0.09, 0.16, 0.25, 0.5, 1.0];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightScheme {
    /// Beta density of the MAF with shape parameters `(a, b)`.
    BetaMaf { a: f64, b: f64 },
    Flat,
}

impl Default for WeightScheme {
    fn default() -> Self {
        WeightScheme::BetaMaf { a: 1.0, b: 25.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SkatWeights {
    w: Vec<f64>,
}

impl SkatWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if let Some(bad) = w.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::InvalidWeights(format!("weight {bad} is not positive")));
        }
        Ok(SkatWeights { w })
    }

    pub fn flat(m: usize) -> Self {
        SkatWeights { w: vec![1.0; m] }
    }

    pub fn for_unit(unit: &UnitMatrix, scheme: WeightScheme) -> Result<Self> {
        match scheme {
            WeightScheme::Flat => Ok(Self::flat(unit.n_variants())),
            WeightScheme::BetaMaf { a, b } => {
                let norm = ln_beta(a, b);
                let w = (0..unit.n_variants())
                    .map(|j| {
                        let maf = minor_allele_frequency_real(&unit.column(j))?.maf;
                        // x^(a-1) is 1 for a = 1, including x = 0.
                        let head = if a == 1.0 { 0.0 } else { (a - 1.0) * maf.ln() };
                        Ok((head + (b - 1.0) * (1.0 - maf).ln() - norm).exp())
                    })
                    .collect::<Result<Vec<f64>>>()?;
                Self::new(w)
            }
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

fn check_weights(weights: &SkatWeights, m: usize) -> Result<()> {
    if weights.len() != m {
        return Err(Error::InvalidWeights(format!("{} weights for {m} variants", weights.len())));
    }
    Ok(())
}

/// `(y - ybar)' G W^2 G' (y - ybar)`, computed directly from the data.
pub fn skat_q(unit: &UnitMatrix, phenotype: &PhenotypeVector, weights: &SkatWeights) -> Result<f64> {
    phenotype.require_both_classes()?;
    check_weights(weights, unit.n_variants())?;
    if unit.n_samples() != phenotype.len() {
        return Err(Error::DimensionMismatch("samples vs phenotypes".into()));
    }
    let y = phenotype.indicator();
    let ybar = y.iter().sum::<f64>() / y.len() as f64;
    let mut u = vec![0.0; unit.n_variants()];
    for (i, yi) in y.iter().enumerate() {
        for (uj, g) in u.iter_mut().zip(unit.row(i)) {
            *uj += (yi - ybar) * g;
        }
    }
    Ok(q_skat(&u, weights.as_slice()))
}

fn q_skat(u: &[f64], w: &[f64]) -> f64 {
    u.iter().zip(w).map(|(u, w)| (w * u) * (w * u)).sum()
}

fn q_burden(u: &[f64], w: &[f64]) -> f64 {
    let s: f64 = u.iter().zip(w).map(|(u, w)| w * u).sum();
    s * s
}

pub fn skat_test(
    unit: &UnitMatrix,
    phenotype: &PhenotypeVector,
    weights: &SkatWeights,
    plan: &PermutationPlan,
) -> Result<TestResult> {
    check_weights(weights, unit.n_variants())?;
    let scores = ScoreSet::compute(unit, phenotype, plan)?;
    Ok(skat_from_scores(&scores, weights))
}

pub(crate) fn skat_from_scores(scores: &ScoreSet, weights: &SkatWeights) -> TestResult {
    let w = weights.as_slice();
    let observed = q_skat(scores.observed(), w);
    let null: Vec<f64> = scores.null_rows().map(|u| q_skat(u, w)).collect();
    let p = empirical_p(observed, &null, Tail::Upper);
    TestResult {
        method: Method::Skat,
        statistic: observed,
        p_value: p.p,
        n_variants: scores.n_variants(),
        n_permutations: Some(p.n_permutations),
        clamped: false,
    }
}

pub fn skato_test(
    unit: &UnitMatrix,
    phenotype: &PhenotypeVector,
    weights: &SkatWeights,
    rho_grid: &[f64],
    plan: &PermutationPlan,
    unscaled_burden: bool,
) -> Result<TestResult> {
    check_weights(weights, unit.n_variants())?;
    validate_grid(rho_grid)?;
    let scores = ScoreSet::compute(unit, phenotype, plan)?;
    skato_from_scores(&scores, weights, rho_grid, unscaled_burden)
}

fn validate_grid(rho_grid: &[f64]) -> Result<()> {
    if rho_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(&bad) = rho_grid.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(Error::InvalidRho(bad));
    }
    Ok(())
}

/// Number of pool values tied with or above each value, for a pool sorted
/// ascending.
fn count_at_least(sorted: &[f64], value: f64) -> usize {
    let threshold = value - TIE_TOLERANCE * value.abs();
    sorted.len() - sorted.partition_point(|&x| x < threshold)
}

pub(crate) fn skato_from_scores(
    scores: &ScoreSet,
    weights: &SkatWeights,
    rho_grid: &[f64],
    unscaled_burden: bool,
) -> Result<TestResult> {
    validate_grid(rho_grid)?;
    let w = weights.as_slice();
    let b = scores.n_permutations();
    // Pool index 0 is the observed labeling.
    let pool: Vec<(f64, f64)> = std::iter::once(scores.observed())
        .chain(scores.null_rows())
        .map(|u| (q_skat(u, w), q_burden(u, w)))
        .collect();

    // Smallest per-rho tail count of each pool member; count / (B + 1) is its
    // per-rho permutation P-value, the observed one matching the add-one rule.
    let mut min_count = vec![usize::MAX; pool.len()];
    let mut q_rho = vec![0.0; pool.len()];
    for &rho in rho_grid {
        for (q, &(skat, burden)) in q_rho.iter_mut().zip(&pool) {
            *q = if unscaled_burden {
                (1.0 - rho) * skat + burden
            } else {
                (1.0 - rho) * skat + rho * burden
            };
        }
        let mut sorted = q_rho.clone();
        sorted.sort_by(f64::total_cmp);
        for (mc, &q) in min_count.iter_mut().zip(&q_rho) {
            *mc = (*mc).min(count_at_least(&sorted, q));
        }
    }
    let observed = min_count[0];
    let as_extreme = min_count[1..].iter().filter(|&&c| c <= observed).count();
    Ok(TestResult {
        method: Method::Skato,
        statistic: observed as f64 / (b + 1) as f64,
        p_value: (1 + as_extreme) as f64 / (1 + b) as f64,
        n_variants: scores.n_variants(),
        n_permutations: Some(b),
        clamped: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_weights_default() {
        let unit = UnitMatrix::from_columns(&[vec![0.0, 1.0, 0.0, 0.0, 0.0], vec![0.0; 5]]).unwrap();
        let w = SkatWeights::for_unit(&unit, WeightScheme::default()).unwrap();
        // MAF 0.1 -> 25 * 0.9^24; MAF 0 -> 25.
        assert!((w.as_slice()[0] - 25.0 * 0.9f64.powi(24)).abs() < 1e-10);
        assert!((w.as_slice()[1] - 25.0).abs() < 1e-10);
    }

    #[test]
    fn q_zero_when_orthogonal() {
        // Case and control column sums equal with equal class sizes.
        let unit = UnitMatrix::from_columns(&[vec![1.0, 0.0, 0.0, 1.0]]).unwrap();
        let ph = PhenotypeVector::from_case_flags(&[true, true, false, false]);
        assert_eq!(skat_q(&unit, &ph, &SkatWeights::flat(1)).unwrap(), 0.0);
    }

    #[test]
    fn invalid_grid_and_weights() {
        assert!(matches!(validate_grid(&[]), Err(Error::EmptyGrid)));
        assert!(matches!(validate_grid(&[0.5, 1.5]), Err(Error::InvalidRho(_))));
        assert!(SkatWeights::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn count_at_least_ties() {
        let sorted = [1.0, 2.0, 2.0, 3.0];
        assert_eq!(count_at_least(&sorted, 2.0), 3);
        assert_eq!(count_at_least(&sorted, 2.0 * (1.0 + 1e-13)), 3);
        assert_eq!(count_at_least(&sorted, 0.5), 4);
        assert_eq!(count_at_least(&sorted, 3.5), 0);
    }
}
