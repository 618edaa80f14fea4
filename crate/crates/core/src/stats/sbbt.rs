//! Statistic-space boundary based test (S-BBT).
//!
//! The observed trend-z vector `s~` anchors a rejection domain
//!
//! ```text
//! Gamma(s~) = { s : sign(s~_j) (s_j - s~_j) > 0 for every j with s~_j != 0 }
//! ```
//!
//! i.e. the open orthant beyond `s~` in the direction of its signs. The test
//! runs on a pool made of the observed vector and the `B` permuted vectors:
//!
//! 1. the pool covariance is eigendecomposed and every vector is whitened,
//!    `v -> Lambda^{-1/2} U' v`, dropping components with eigenvalue below
//!    `eigen_floor * lambda_max`;
//! 2. each pool member gets a tail mass `q` of its own domain, estimated from
//!    the other `B` members (see [`DomainMass`]);
//! 3. the P-value is the add-one fraction of permuted members whose `q` is no
//!    larger than the observed one.
//!
//! Steps 2-3 treat the observed and permuted vectors symmetrically, so the
//! P-value is a valid permutation P-value.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{Method, ScoreSet, TestResult};
use crate::data::{PhenotypeVector, UnitMatrix};
use crate::error::{Error, Result};
use crate::perm::PermutationPlan;

/// How the null mass of a rejection domain is estimated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DomainMass {
    /// Product over whitened coordinates of the one-sided marginal tail
    /// fractions `(1 + c_j) / (1 + B)`.
    #[default]
    Factorized,
    /// `(1 + #members inside the orthant) / (1 + B)`. Resolves only about
    /// `log2(B)` dimensions; with more coordinates nearly every count is zero.
    Joint,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SbbtConfig {
    pub eigen_floor: f64,
    pub domain: DomainMass,
    pub min_permutations: usize,
}

impl Default for SbbtConfig {
    fn default() -> Self {
        SbbtConfig {
            eigen_floor: 1e-8,
            domain: DomainMass::Factorized,
            min_permutations: 100,
        }
    }
}

pub fn sbbt_test(
    unit: &UnitMatrix,
    phenotype: &PhenotypeVector,
    plan: &PermutationPlan,
    config: &SbbtConfig,
) -> Result<TestResult> {
    check_permutations(plan.n_permutations, config)?;
    let scores = ScoreSet::compute(unit, phenotype, plan)?;
    sbbt_from_scores(&scores, config)
}

fn check_permutations(b: usize, config: &SbbtConfig) -> Result<()> {
    if b < config.min_permutations {
        return Err(Error::TooFewPermutations {
            got: b,
            min: config.min_permutations,
        });
    }
    Ok(())
}

pub(crate) fn sbbt_from_scores(scores: &ScoreSet, config: &SbbtConfig) -> Result<TestResult> {
    let b = scores.n_permutations();
    check_permutations(b, config)?;
    let observed = scores.to_z(scores.observed());
    let pool: Vec<Vec<f64>> = std::iter::once(observed.clone())
        .chain(scores.null_rows().map(|u| scores.to_z(u)))
        .collect();
    let outcome = sbbt_on_pool(&pool, config);
    Ok(TestResult {
        method: Method::Sbbt,
        statistic: outcome.observed_mass,
        p_value: outcome.p_value,
        n_variants: scores.n_variants(),
        n_permutations: Some(b),
        clamped: false,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SbbtOutcome {
    /// Estimated null mass `q(s~)` of the observed domain.
    pub observed_mass: f64,
    pub p_value: f64,
    /// Number of whitened coordinates kept.
    pub n_components: usize,
}

/// Runs the whitening, domain-mass and calibration steps on a pool whose first
/// vector is the observed statistic and the rest its permutation replicates.
pub fn sbbt_on_pool(pool: &[Vec<f64>], config: &SbbtConfig) -> SbbtOutcome {
    if pool[0].iter().all(|&x| x == 0.0) {
        return SbbtOutcome {
            observed_mass: 1.0,
            p_value: 1.0,
            n_components: 0,
        };
    }
    let whitener = Whitener::fit(&pool_covariance(pool), config.eigen_floor);
    let white: Vec<Vec<f64>> = pool.iter().map(|v| whitener.apply(v)).collect();
    let log_mass = match config.domain {
        DomainMass::Joint => joint_log_mass(&white),
        DomainMass::Factorized => factorized_log_mass(&white),
    };
    SbbtOutcome {
        observed_mass: log_mass[0].exp(),
        p_value: calibrate(&log_mass),
        n_components: whitener.n_components(),
    }
}

/// Sample covariance (divisor `n - 1`) of the pool vectors.
pub fn pool_covariance(pool: &[Vec<f64>]) -> DMatrix<f64> {
    let m = pool[0].len();
    let n = pool.len() as f64;
    let mut mean = vec![0.0; m];
    for v in pool {
        for (a, x) in mean.iter_mut().zip(v) {
            *a += x / n;
        }
    }
    let mut cov = DMatrix::zeros(m, m);
    for v in pool {
        for i in 0..m {
            let di = v[i] - mean[i];
            for j in i..m {
                cov[(i, j)] += di * (v[j] - mean[j]);
            }
        }
    }
    for i in 0..m {
        for j in i..m {
            let c = cov[(i, j)] / (n - 1.0);
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
    }
    cov
}

/// PCA whitening `v -> Lambda^{-1/2} U' v` over the retained components,
/// ordered by decreasing eigenvalue.
#[derive(Clone, Debug)]
pub struct Whitener {
    rows: Vec<Vec<f64>>,
}

impl Whitener {
    pub fn fit(cov: &DMatrix<f64>, eigen_floor: f64) -> Self {
        let eig = SymmetricEigen::new(cov.clone());
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let lambda_max = order.first().map_or(0.0, |&k| eig.eigenvalues[k]);
        let rows = order
            .into_iter()
            .filter(|&k| lambda_max > 0.0 && eig.eigenvalues[k] > eigen_floor * lambda_max)
            .map(|k| {
                let scale = eig.eigenvalues[k].sqrt().recip();
                eig.eigenvectors.column(k).iter().map(|u| u * scale).collect()
            })
            .collect();
        Whitener { rows }
    }

    pub fn n_components(&self) -> usize {
        self.rows.len()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Strict membership of `s` in the orthant anchored at `anchor`; coordinates
/// where the anchor is zero do not constrain.
pub fn in_domain(anchor: &[f64], s: &[f64]) -> bool {
    anchor
        .iter()
        .zip(s)
        .filter(|(a, _)| **a != 0.0)
        .all(|(a, x)| a.signum() * (x - a) > 0.0)
}

/// `ln((1 + #others in own domain) / (1 + B))` for every pool member.
pub fn joint_log_mass(white: &[Vec<f64>]) -> Vec<f64> {
    let denom = white.len() as f64;
    (0..white.len())
        .map(|i| {
            let inside = white
                .iter()
                .enumerate()
                .filter(|&(k, s)| k != i && in_domain(&white[i], s))
                .count();
            ((1 + inside) as f64 / denom).ln()
        })
        .collect()
}

/// Sum over constrained coordinates of `ln((1 + c_j) / (1 + B))`, where `c_j`
/// counts other members strictly beyond the anchor on coordinate `j`.
/// Counts are summed in sorted order so equal count multisets give
/// bit-identical masses.
pub fn factorized_log_mass(white: &[Vec<f64>]) -> Vec<f64> {
    let p = white.len();
    let k = white.first().map_or(0, |v| v.len());
    let sorted: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let mut col: Vec<f64> = white.iter().map(|v| v[j]).collect();
            col.sort_by(f64::total_cmp);
            col
        })
        .collect();
    let denom = p as f64;
    let mut counts = Vec::with_capacity(k);
    white
        .iter()
        .map(|v| {
            counts.clear();
            for (j, &x) in v.iter().enumerate() {
                let col = &sorted[j];
                if x > 0.0 {
                    counts.push(p - col.partition_point(|&y| y <= x));
                } else if x < 0.0 {
                    counts.push(col.partition_point(|&y| y < x));
                }
            }
            counts.sort_unstable();
            counts.iter().map(|&c| ((1 + c) as f64 / denom).ln()).sum()
        })
        .collect()
}

/// `(1 + #{b >= 1 : q_b <= q_0}) / (1 + B)` from pool log masses.
pub fn calibrate(log_mass: &[f64]) -> f64 {
    let observed = log_mass[0];
    let as_extreme = log_mass[1..].iter().filter(|&&q| q <= observed).count();
    (1 + as_extreme) as f64 / log_mass.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_membership() {
        assert!(in_domain(&[1.0, -1.0], &[2.0, -3.0]));
        assert!(!in_domain(&[1.0, -1.0], &[2.0, -1.0]));
        assert!(!in_domain(&[1.0, -1.0], &[0.5, -3.0]));
        // zero coordinates are unconstrained
        assert!(in_domain(&[0.0, 1.0], &[-9.0, 2.0]));
        assert!(in_domain(&[0.0, 0.0], &[-9.0, 2.0]));
    }

    #[test]
    fn zero_anchor_gives_p_one() {
        let pool = vec![vec![0.0, 0.0], vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.3, -0.7]];
        let out = sbbt_on_pool(&pool, &SbbtConfig::default());
        assert_eq!(out.p_value, 1.0);
        assert_eq!(out.observed_mass, 1.0);
    }

    #[test]
    fn whitening_decorrelates() {
        let pool: Vec<Vec<f64>> = (0..200)
            .map(|i| {
                let a = ((i * 37 % 101) as f64 / 50.0) - 1.0;
                let b = ((i * 53 % 97) as f64 / 48.0) - 1.0;
                vec![a, 0.8 * a + 0.6 * b, 2.0 * a]
            })
            .collect();
        let w = Whitener::fit(&pool_covariance(&pool), 1e-8);
        // third coordinate is collinear with the first
        assert_eq!(w.n_components(), 2);
        let white: Vec<Vec<f64>> = pool.iter().map(|v| w.apply(v)).collect();
        let cov = pool_covariance(&white);
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((cov[(i, j)] - target).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn factorized_equals_joint_in_one_dimension() {
        let pool: Vec<Vec<f64>> = [0.7, -0.2, 1.5, 0.9, -1.1, 0.3, 0.7]
            .iter()
            .map(|&x| vec![x])
            .collect();
        assert_eq!(factorized_log_mass(&pool), joint_log_mass(&pool));
    }

    #[test]
    fn calibration_counts() {
        assert_eq!(calibrate(&[-3.0, -1.0, -4.0, -3.0]), 3.0 / 4.0);
        assert_eq!(calibrate(&[-9.0, -1.0, -4.0, -3.0]), 1.0 / 4.0);
    }

    #[test]
    fn too_few_permutations() {
        let unit = UnitMatrix::from_columns(&[vec![0.0, 1.0, 2.0, 0.0]]).unwrap();
        let ph = PhenotypeVector::from_case_flags(&[true, false, true, false]);
        let plan = PermutationPlan::for_phenotype(1, 50, &ph).unwrap();
        assert!(matches!(
            sbbt_test(&unit, &ph, &plan, &SbbtConfig::default()),
            Err(Error::TooFewPermutations { got: 50, min: 100 })
        ));
    }
}
