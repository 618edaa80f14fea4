//! Two-sample Hotelling T^2 on case and control mean dosage vectors.

use nalgebra::{DMatrix, DVector};
use statrs::function::beta::beta_reg;

use super::{clamp_probability, Method, TestResult};
use crate::data::{PhenotypeVector, UnitMatrix};
use crate::error::{Error, Result};

/// Relative ridge `delta * trace / p` added when the pooled covariance is not
/// positive definite.
pub const RIDGE_DELTA: f64 = 1e-8;

/// Upper tail of F(d1, d2) at `f`, via the regularized incomplete beta
/// `I_{d2 / (d2 + d1 f)}(d2 / 2, d1 / 2)` to keep small tails accurate.
pub fn f_upper_tail(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    beta_reg(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f))
}

/// Pooled within-class covariance (divisor `n - 2`) and the case minus control
/// mean difference.
pub(crate) fn pooled_moments(unit: &UnitMatrix, phenotype: &PhenotypeVector) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let (n1, n0) = phenotype.require_both_classes()?;
    let p = unit.n_variants();
    let mut mean1 = DVector::zeros(p);
    let mut mean0 = DVector::zeros(p);
    for (i, s) in phenotype.labels().iter().enumerate() {
        let row = DVector::from_row_slice(unit.row(i));
        if s.is_case() {
            mean1 += row;
        } else {
            mean0 += row;
        }
    }
    mean1 /= n1 as f64;
    mean0 /= n0 as f64;
    let mut cov = DMatrix::zeros(p, p);
    for (i, s) in phenotype.labels().iter().enumerate() {
        let centered = DVector::from_row_slice(unit.row(i)) - if s.is_case() { &mean1 } else { &mean0 };
        cov.ger(1.0, &centered, &centered, 1.0);
    }
    cov /= (n1 + n0 - 2) as f64;
    Ok((cov, mean1 - mean0))
}

pub fn hotelling_t2(unit: &UnitMatrix, phenotype: &PhenotypeVector) -> Result<TestResult> {
    if unit.n_samples() != phenotype.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} samples, {} phenotypes",
            unit.n_samples(),
            phenotype.len()
        )));
    }
    let (n1, n0) = phenotype.require_both_classes()?;
    let p = unit.n_variants();
    let n = n1 + n0;
    if n < p + 2 || n < 3 {
        return Err(Error::InsufficientSamples(format!(
            "{n} samples for {p} variants; need n - 1 - p >= 1"
        )));
    }
    let (cov, diff) = pooled_moments(unit, phenotype)?;

    let t2 = if diff.iter().all(|d| *d == 0.0) {
        0.0
    } else {
        let chol = match cov.clone().cholesky() {
            Some(c) => c,
            None => {
                let trace = cov.trace();
                if trace <= 0.0 {
                    return Err(Error::SingularCovariance);
                }
                let ridge = DMatrix::identity(p, p) * (RIDGE_DELTA * trace / p as f64);
                (cov + ridge).cholesky().ok_or(Error::SingularCovariance)?
            }
        };
        let solved = chol.solve(&diff);
        (n1 as f64 * n0 as f64 / n as f64) * diff.dot(&solved)
    };

    let d1 = p as f64;
    let d2 = (n - 1 - p) as f64;
    let f = (n - p - 1) as f64 / ((n - 2) as f64 * d1) * t2;
    let (p_value, clamped) = clamp_probability(f_upper_tail(f, d1, d2));
    Ok(TestResult {
        method: Method::Hotelling,
        statistic: t2,
        p_value,
        n_variants: p,
        n_permutations: None,
        clamped,
    })
}
