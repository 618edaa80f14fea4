//! Dataset loading and per-unit association runs shared by the CLI and the
//! C interface.

use std::path::Path;

use rayon::prelude::*;

use crate::data::{canonical_sample_order, GenotypeMatrix, PhenotypeVector, UnitDefinition};
use crate::error::Result;
use crate::io::results::AssocRow;
use crate::io::{self, PlinkData};
use crate::perm::PermutationPlan;
use crate::stats::{run_methods, Method, TestConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputFormat {
    /// `.bed/.bim/.fam`
    Binary,
    /// `.ped/.map`
    Text,
}

/// Reads a fileset as stored (no reorientation).
pub fn read_fileset(prefix: &Path, format: InputFormat) -> Result<PlinkData> {
    match format {
        InputFormat::Binary => io::bed::read_bfile(prefix),
        InputFormat::Text => io::read_ped_map(&io::with_extension(prefix, "ped"), &io::with_extension(prefix, "map")),
    }
}

/// Reads a fileset and reorients every variant to count its minor allele.
pub fn load_for_testing(prefix: &Path, format: InputFormat) -> Result<PlinkData> {
    let mut data = read_fileset(prefix, format)?;
    data.genotypes = data.genotypes.normalize_minor_allele();
    Ok(data)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssocSettings {
    pub methods: Vec<Method>,
    pub seed: u64,
    pub n_permutations: usize,
    pub tests: TestConfig,
}

impl Default for AssocSettings {
    fn default() -> Self {
        AssocSettings {
            methods: Method::ALL.to_vec(),
            seed: crate::sim::DEFAULT_SEED,
            n_permutations: 1000,
            tests: TestConfig::default(),
        }
    }
}

/// Tests every unit with every method. Rows come back unit by unit in input
/// order, methods in `settings.methods` order. Samples are put into canonical
/// order first, so results do not depend on input row order.
pub fn run_assoc(
    genotypes: &GenotypeMatrix,
    phenotype: &PhenotypeVector,
    units: &[UnitDefinition],
    settings: &AssocSettings,
) -> Result<Vec<AssocRow>> {
    phenotype.require_both_classes()?;
    let per_unit: Vec<Vec<AssocRow>> = units
        .par_iter()
        .map(|unit| -> Result<Vec<AssocRow>> {
            let matrix = genotypes.unit_matrix(unit)?;
            let (matrix, ph) = canonical_sample_order(&matrix, phenotype);
            let plan = PermutationPlan::for_phenotype(settings.seed, settings.n_permutations, &ph)?;
            let results = run_methods(&matrix, &ph, &settings.methods, &plan, &settings.tests);
            Ok(settings
                .methods
                .iter()
                .zip(results)
                .map(|(&method, r)| match r {
                    Ok(result) => AssocRow::ok(unit.name.clone(), result),
                    Err(e) => {
                        log::warn!("{} on {}: {e}", method.name(), unit.name);
                        AssocRow {
                            unit: unit.name.clone(),
                            method,
                            n_variants: unit.len(),
                            outcome: Err(e.to_string()),
                        }
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_unit.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dosage, Status, VariantRecord};

    #[test]
    fn row_order_does_not_matter() {
        let n = 40;
        let calls: Vec<Dosage> = (0..n * 2)
            .map(|k| Dosage::from_count(((k * 7 + k / 3) % 3) as u8).unwrap())
            .collect();
        let variants = vec![
            VariantRecord::new("a", "1", 1, "A", "G").unwrap(),
            VariantRecord::new("b", "1", 2, "A", "G").unwrap(),
        ];
        let m = GenotypeMatrix::from_calls(n, variants, calls).unwrap();
        let ph = PhenotypeVector::new((0..n).map(|i| if i % 3 == 0 { Status::Case } else { Status::Control }).collect());
        let unit = m.whole_unit("all").unwrap();
        let settings = AssocSettings {
            n_permutations: 200,
            ..AssocSettings::default()
        };
        let rows = run_assoc(&m, &ph, std::slice::from_ref(&unit), &settings).unwrap();
        assert_eq!(rows.len(), 6);

        let order: Vec<usize> = (0..n).rev().collect();
        let rows2 = run_assoc(&m.select_samples(&order), &ph.select(&order), &[unit], &settings).unwrap();
        for (a, b) in rows.iter().zip(&rows2) {
            let (a, b) = (a.outcome.as_ref().unwrap(), b.outcome.as_ref().unwrap());
            assert_eq!(a.p_value, b.p_value, "{:?}", a.method);
        }
    }
}
