//! The six joint-SNV association tests.
//!
//! Analytic tests (Hotelling, Fisher) work directly on a [`UnitMatrix`].
//! Permutation tests (sumstat, SKAT, SKAT-O, S-BBT) share one
//! [`ScoreSet`]: the observed per-SNV score vector and its values under
//! every permutation of the plan. [`run_methods`] builds that set once and
//! feeds it to every requested permutation test.

pub mod fisher;
pub mod hotelling;
pub mod sbbt;
pub mod scores;
pub mod skat;
pub mod sumstat;
pub mod trend;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{PhenotypeVector, UnitMatrix};
use crate::error::{Error, Result};
use crate::perm::PermutationPlan;

pub use fisher::fisher_combined;
pub use hotelling::hotelling_t2;
pub use sbbt::{sbbt_test, DomainMass, SbbtConfig};
pub use scores::ScoreSet;
pub use skat::{skat_q, skat_test, skato_test, SkatWeights, WeightScheme, DEFAULT_RHO_GRID};
pub use sumstat::sumstat_test;
pub use trend::per_snv_trend_z;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Hotelling,
    Sumstat,
    Skat,
    Skato,
    Fisher,
    Sbbt,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Sbbt,
        Method::Hotelling,
        Method::Fisher,
        Method::Skat,
        Method::Skato,
        Method::Sumstat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Hotelling => "HOTELLING",
            Method::Sumstat => "SUMSTAT",
            Method::Skat => "SKAT",
            Method::Skato => "SKATO",
            Method::Fisher => "FISHER",
            Method::Sbbt => "SBBT",
        }
    }

    pub fn uses_permutations(self) -> bool {
        !matches!(self, Method::Hotelling | Method::Fisher)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hotelling" | "hot" => Ok(Method::Hotelling),
            "sumstat" | "sum" => Ok(Method::Sumstat),
            "skat" => Ok(Method::Skat),
            "skato" | "skat-o" => Ok(Method::Skato),
            "fisher" | "fis" => Ok(Method::Fisher),
            "sbbt" | "s-bbt" => Ok(Method::Sbbt),
            other => Err(Error::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}

/// Parses a comma-separated method list; `all` expands to every method.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    let mut out = Vec::new();
    for tok in list.split(',').filter(|t| !t.trim().is_empty()) {
        if tok.trim().eq_ignore_ascii_case("all") {
            out.extend(Method::ALL);
        } else {
            out.push(tok.parse()?);
        }
    }
    out.dedup();
    if out.is_empty() {
        return Err(Error::InvalidConfig("empty method list".into()));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestResult {
    pub method: Method,
    pub statistic: f64,
    pub p_value: f64,
    pub n_variants: usize,
    /// `None` for analytic P-values.
    pub n_permutations: Option<usize>,
    /// Set when an underflowing probability was clamped to the smallest
    /// positive double.
    pub clamped: bool,
}

/// Clamps an analytic tail probability into (0, 1].
pub(crate) fn clamp_probability(p: f64) -> (f64, bool) {
    if p.is_nan() {
        (1.0, true)
    } else if p <= 0.0 {
        (f64::MIN_POSITIVE, true)
    } else if p > 1.0 {
        (1.0, false)
    } else {
        (p, false)
    }
}

/// Settings shared by the tests.
#[derive(Clone, Debug, PartialEq)]
pub struct TestConfig {
    pub weights: WeightScheme,
    pub rho_grid: Vec<f64>,
    /// Use `(1 - rho) Q_skat + Q_burden` instead of the convex combination.
    pub skato_unscaled_burden: bool,
    pub sbbt: SbbtConfig,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            weights: WeightScheme::default(),
            rho_grid: DEFAULT_RHO_GRID.to_vec(),
            skato_unscaled_burden: false,
            sbbt: SbbtConfig::default(),
        }
    }
}

/// Runs every requested method on one unit, sharing one permutation score set
/// among the permutation tests. Results come back in `methods` order.
pub fn run_methods(
    unit: &UnitMatrix,
    phenotype: &PhenotypeVector,
    methods: &[Method],
    plan: &PermutationPlan,
    config: &TestConfig,
) -> Vec<Result<TestResult>> {
    let needs_scores = methods.iter().any(|m| m.uses_permutations());
    let scores = if needs_scores {
        Some(ScoreSet::compute(unit, phenotype, plan))
    } else {
        None
    };
    let weights = SkatWeights::for_unit(unit, config.weights);
    methods
        .iter()
        .map(|&method| {
            let scores = || scores.as_ref().expect("score set").as_ref().map_err(clone_err);
            match method {
                Method::Hotelling => hotelling_t2(unit, phenotype),
                Method::Fisher => fisher_combined(unit, phenotype),
                Method::Sumstat => scores().map(sumstat::sumstat_from_scores),
                Method::Skat => {
                    let w = weights.as_ref().map_err(clone_err)?;
                    scores().map(|s| skat::skat_from_scores(s, w))
                }
                Method::Skato => {
                    let w = weights.as_ref().map_err(clone_err)?;
                    scores().and_then(|s| skat::skato_from_scores(s, w, &config.rho_grid, config.skato_unscaled_burden))
                }
                Method::Sbbt => scores().and_then(|s| sbbt::sbbt_from_scores(s, &config.sbbt)),
            }
        })
        .collect()
}

// Errors are not Clone (io::Error); the shared score set error is re-reported
// by message for every method that needed it.
fn clone_err(e: &Error) -> Error {
    match e {
        Error::NoCases => Error::NoCases,
        Error::NoControls => Error::NoControls,
        other => Error::InvalidConfig(other.to_string()),
    }
}
