//! Case-control replicate generator and power harness.
//!
//! Each replicate carries `n_pairs` causal variants and one linked marker per
//! causal variant. Cases draw causal genotypes from the population (HWE)
//! distribution tilted by the genotype odds ratios; controls draw from the
//! population distribution. Marker alleles are drawn per causal allele from
//! the haplotype conditional, so disease status depends on causal genotypes
//! only.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::Deserialize;

use crate::data::{Dosage, GenotypeMatrix, PhenotypeVector, UnitDefinition, VariantRecord};
use crate::error::{Error, Result};
use crate::perm::PermutationPlan;
use crate::stats::{run_methods, Method, TestConfig};

fn default_pairs() -> usize {
    5
}
fn default_replicates() -> usize {
    1000
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}

pub const DEFAULT_SEED: u64 = 20_130_917;

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimScenario {
    pub dataset_id: String,
    pub or_het: f64,
    pub or_hom: f64,
    pub maf: f64,
    /// Marker/causal LD as a correlation coefficient.
    pub ld_r: f64,
    #[serde(default = "default_pairs")]
    pub n_pairs: usize,
    pub n_cases: usize,
    pub n_controls: usize,
    #[serde(default = "default_replicates")]
    pub n_replicates: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl SimScenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(format!("{}: {msg}", self.dataset_id)));
        if !(self.or_het > 0.0 && self.or_hom > 0.0) || !self.or_het.is_finite() || !self.or_hom.is_finite() {
            return bad(format!("odds ratios must be positive (got {}, {})", self.or_het, self.or_hom));
        }
        if !(self.maf > 0.0 && self.maf <= 0.5) {
            return bad(format!("maf {} outside (0, 0.5]", self.maf));
        }
        if self.n_pairs == 0 || self.n_cases == 0 || self.n_controls == 0 || self.n_replicates == 0 {
            return bad("pairs, cases, controls and replicates must be positive".into());
        }
        haplotype_table(self.maf, self.maf, self.ld_r).map(|_| ())
    }

    pub fn n_variants(&self) -> usize {
        2 * self.n_pairs
    }
}

/// Genotype distributions over minor-allele dosage (0, 1, 2).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenotypeFreqs {
    pub control: [f64; 3],
    pub case: [f64; 3],
}

pub fn case_control_genotype_freqs(maf: f64, or_het: f64, or_hom: f64) -> Result<GenotypeFreqs> {
    if !(or_het > 0.0 && or_hom > 0.0) {
        return Err(Error::InvalidConfig(format!("odds ratios must be positive (got {or_het}, {or_hom})")));
    }
    if !(0.0..=1.0).contains(&maf) {
        return Err(Error::InvalidConfig(format!("maf {maf} outside [0, 1]")));
    }
    let (p, q) = (maf, 1.0 - maf);
    let control = [q * q, 2.0 * p * q, p * p];
    let tilted = [control[0], control[1] * or_het, control[2] * or_hom];
    let z: f64 = tilted.iter().sum();
    Ok(GenotypeFreqs {
        control,
        case: tilted.map(|x| x / z),
    })
}

/// Haplotype frequencies (minor-minor, minor-major, major-minor, major-major),
/// causal allele first, for causal MAF `p`, marker MAF `q` and correlation `r`.
pub fn haplotype_table(p: f64, q: f64, r: f64) -> Result<[f64; 4]> {
    if !(-1.0..=1.0).contains(&r) {
        return Err(Error::LdInfeasible(format!("r = {r} outside [-1, 1]")));
    }
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
        return Err(Error::LdInfeasible(format!("allele frequencies ({p}, {q}) outside [0, 1]")));
    }
    let d = r * (p * (1.0 - p) * q * (1.0 - q)).sqrt();
    let cells = [
        ("p*q + D", p * q + d),
        ("p*(1-q) - D", p * (1.0 - q) - d),
        ("(1-p)*q - D", (1.0 - p) * q - d),
        ("(1-p)*(1-q) + D", (1.0 - p) * (1.0 - q) + d),
    ];
    const EPS: f64 = 1e-12;
    let mut out = [0.0; 4];
    for (k, (name, v)) in cells.iter().enumerate() {
        if *v < -EPS || *v > 1.0 + EPS {
            return Err(Error::LdInfeasible(format!(
                "haplotype {name} = {v:.6} outside [0, 1] for p = {p}, q = {q}, r = {r}"
            )));
        }
        out[k] = v.clamp(0.0, 1.0);
    }
    Ok(out)
}

/// Uniform in [0, 1) with 53 random bits.
fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn draw_genotype(rng: &mut ChaCha8Rng, dist: &[f64; 3]) -> u8 {
    let u = uniform(rng);
    if u < dist[0] {
        0
    } else if u < dist[0] + dist[1] {
        1
    } else {
        2
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Permutation seed for one replicate, decorrelated from the genotype stream.
pub fn replicate_permutation_seed(seed: u64, replicate: usize) -> u64 {
    splitmix64(splitmix64(seed) ^ (replicate as u64).wrapping_add(1))
}

fn variant_records(n_pairs: usize) -> Vec<VariantRecord> {
    let causal = (0..n_pairs).map(|k| (format!("causal{}", k + 1), 10_000 * (k as u64 + 1)));
    let marker = (0..n_pairs).map(|k| (format!("marker{}", k + 1), 10_000 * (k as u64 + 1) + 500));
    causal
        .chain(marker)
        .map(|(id, pos)| VariantRecord::new(id, "1", pos, "A", "G").expect("valid record"))
        .collect()
}

/// Generates replicate `replicate` of `scenario`: cases first, then controls;
/// columns causal1..causalK, marker1..markerK.
pub fn generate_replicate(scenario: &SimScenario, replicate: usize) -> Result<(GenotypeMatrix, PhenotypeVector)> {
    scenario.validate()?;
    let freqs = case_control_genotype_freqs(scenario.maf, scenario.or_het, scenario.or_hom)?;
    let h = haplotype_table(scenario.maf, scenario.maf, scenario.ld_r)?;
    let p = scenario.maf;
    // P(marker minor | causal allele minor / major).
    let cond = [h[0] / p, h[2] / (1.0 - p)];

    let k = scenario.n_pairs;
    let n = scenario.n_cases + scenario.n_controls;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    rng.set_stream(replicate as u64);

    let mut calls = vec![Dosage::Zero; n * 2 * k];
    for i in 0..n {
        let dist = if i < scenario.n_cases { &freqs.case } else { &freqs.control };
        for pair in 0..k {
            let g = draw_genotype(&mut rng, dist);
            let mut marker = 0u8;
            for allele in 0..2u8 {
                let minor = allele < g;
                let pm = if minor { cond[0] } else { cond[1] };
                if uniform(&mut rng) < pm {
                    marker += 1;
                }
            }
            calls[pair * n + i] = Dosage::from_count(g).unwrap();
            calls[(k + pair) * n + i] = Dosage::from_count(marker).unwrap();
        }
    }
    let matrix = GenotypeMatrix::from_calls(n, variant_records(k), calls)?;
    Ok((matrix, PhenotypeVector::blocked(scenario.n_cases, scenario.n_controls)))
}

fn scenario(id: &str, or_het: f64, or_hom: f64, maf: f64, ld_r: f64, n: usize, seed: u64) -> SimScenario {
    SimScenario {
        dataset_id: id.to_string(),
        or_het,
        or_hom,
        maf,
        ld_r,
        n_pairs: 5,
        n_cases: n,
        n_controls: n,
        n_replicates: 1000,
        seed,
    }
}

pub const SAMPLE_SIZES: [usize; 3] = [100, 500, 1000];

/// The seven built-in datasets at 100, 500 and 1000 per class. All scenarios
/// share `seed`, so they use common random numbers.
pub fn builtin_scenarios(seed: u64) -> Vec<SimScenario> {
    let table = [
        ("Dataset1", 1.2, 2.4, 0.05, 0.4),
        ("Dataset2", 1.2, 2.4, 0.05, 0.96),
        ("Dataset3", 1.1, 2.2, 0.05, 0.8),
        ("Dataset4", 1.2, 2.4, 0.05, 0.8),
        ("Dataset5", 1.3, 2.6, 0.05, 0.8),
        ("Dataset6", 1.2, 2.4, 0.01, 0.8),
        ("Dataset7", 1.2, 2.4, 0.03, 0.8),
    ];
    table
        .iter()
        .flat_map(|&(id, oh, oo, maf, r)| SAMPLE_SIZES.iter().map(move |&n| scenario(id, oh, oo, maf, r, n, seed)))
        .collect()
}

/// No-effect scenarios (odds ratios 1) at the three sample sizes.
pub fn null_scenarios(seed: u64) -> Vec<SimScenario> {
    SAMPLE_SIZES
        .iter()
        .map(|&n| scenario("Null", 1.0, 1.0, 0.05, 0.8, n, seed))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerConfig {
    pub methods: Vec<Method>,
    pub alpha: f64,
    pub n_permutations: usize,
    /// Test only the marker columns.
    pub markers_only: bool,
    pub tests: TestConfig,
}

impl Default for PowerConfig {
    fn default() -> Self {
        PowerConfig {
            methods: Method::ALL.to_vec(),
            alpha: 0.05,
            n_permutations: 1000,
            markers_only: false,
            tests: TestConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerRow {
    pub method: Method,
    pub alpha: f64,
    pub power: f64,
    pub n_replicates: usize,
    pub mean_p: f64,
    /// Replicates where the test failed; they count as non-rejections.
    pub n_errors: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerReport {
    pub scenario: SimScenario,
    pub rows: Vec<PowerRow>,
}

impl PowerReport {
    pub fn power(&self, method: Method) -> Option<f64> {
        self.rows.iter().find(|r| r.method == method).map(|r| r.power)
    }
}

/// P-values of every configured method for one replicate (`None` on error).
pub fn replicate_p_values(
    scenario: &SimScenario,
    replicate: usize,
    config: &PowerConfig,
) -> Result<Vec<Option<f64>>> {
    let (matrix, phenotype) = generate_replicate(scenario, replicate)?;
    let k = scenario.n_pairs;
    let members: Vec<usize> = if config.markers_only {
        (k..2 * k).collect()
    } else {
        (0..2 * k).collect()
    };
    let unit = matrix.unit_matrix(&UnitDefinition::new(&scenario.dataset_id, members, 2 * k)?)?;
    let plan = PermutationPlan::for_phenotype(
        replicate_permutation_seed(scenario.seed, replicate),
        config.n_permutations,
        &phenotype,
    )?;
    Ok(run_methods(&unit, &phenotype, &config.methods, &plan, &config.tests)
        .into_iter()
        .map(|r| r.ok().map(|t| t.p_value))
        .collect())
}

pub fn run_power(scenario: &SimScenario, config: &PowerConfig) -> Result<PowerReport> {
    if config.methods.is_empty() {
        return Err(Error::InvalidConfig("no methods requested".into()));
    }
    if !(0.0..=1.0).contains(&config.alpha) {
        return Err(Error::InvalidConfig(format!("alpha {} outside [0, 1]", config.alpha)));
    }
    scenario.validate()?;
    let per_replicate: Vec<Vec<Option<f64>>> = (0..scenario.n_replicates)
        .into_par_iter()
        .map(|r| replicate_p_values(scenario, r, config))
        .collect::<Result<_>>()?;

    let r = scenario.n_replicates;
    let rows = config
        .methods
        .iter()
        .enumerate()
        .map(|(m, &method)| {
            let ps = per_replicate.iter().map(|row| row[m]);
            let hits = ps.clone().filter(|p| matches!(p, Some(p) if *p <= config.alpha)).count();
            let errors = ps.clone().filter(Option::is_none).count();
            let sum_p: f64 = ps.map(|p| p.unwrap_or(1.0)).sum();
            PowerRow {
                method,
                alpha: config.alpha,
                power: hits as f64 / r as f64,
                n_replicates: r,
                mean_p: sum_p / r as f64,
                n_errors: errors,
            }
        })
        .collect();
    Ok(PowerReport {
        scenario: scenario.clone(),
        rows,
    })
}

pub const POWER_HEADER: [&str; 7] = ["dataset", "method", "n_cases", "n_controls", "alpha", "power", "n_replicates"];

/// Outcome of one scenario in a batch: a report or the error that stopped it.
pub type ScenarioOutcome = (SimScenario, Result<PowerReport>);

/// Writes power rows; failed scenarios produce one row with method
/// `ERROR: <message>` and power `NA`.
pub fn write_power_csv<W: std::io::Write>(writer: W, outcomes: &[ScenarioOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = crate::io::results::csv_err;
    w.write_record(POWER_HEADER).map_err(err)?;
    for (s, outcome) in outcomes {
        match outcome {
            Ok(report) => {
                for row in &report.rows {
                    w.write_record([
                        s.dataset_id.clone(),
                        row.method.name().to_string(),
                        s.n_cases.to_string(),
                        s.n_controls.to_string(),
                        row.alpha.to_string(),
                        format!("{:.3}", row.power),
                        row.n_replicates.to_string(),
                    ])
                    .map_err(err)?;
                }
            }
            Err(e) => {
                w.write_record([
                    s.dataset_id.clone(),
                    format!("ERROR: {e}"),
                    s.n_cases.to_string(),
                    s.n_controls.to_string(),
                    "NA".into(),
                    "NA".into(),
                    "0".into(),
                ])
                .map_err(err)?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}
