//! PLINK genotype formats, gene annotation TSV and result CSVs.

pub mod annotation;
pub mod bed;
pub mod ped;
pub mod results;

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::data::{GenotypeMatrix, PhenotypeVector, Status};
use crate::error::{Error, Result};

pub use annotation::{load_gene_annotation, GeneAnnotation, GeneInterval};
pub use bed::{read_bed_bim_fam, write_bed_bim_fam, write_plink_binary, BedHeader};
pub use ped::{read_ped_map, write_ped_map};

/// Family and individual id of one sample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleId {
    pub fid: String,
    pub iid: String,
}

impl SampleId {
    pub fn numbered(i: usize) -> Self {
        SampleId {
            fid: format!("S{}", i + 1),
            iid: format!("S{}", i + 1),
        }
    }
}

/// A loaded PLINK fileset. Samples with a missing phenotype have already been
/// removed; `n_dropped_missing_phenotype` reports how many.
#[derive(Clone, Debug, PartialEq)]
pub struct PlinkData {
    pub genotypes: GenotypeMatrix,
    pub phenotype: PhenotypeVector,
    pub samples: Vec<SampleId>,
    pub n_dropped_missing_phenotype: usize,
}

/// PLINK phenotype code: 1 = control, 2 = case, 0 / -9 = missing.
pub(crate) fn parse_status(token: &str) -> std::result::Result<Option<Status>, String> {
    match token {
        "1" => Ok(Some(Status::Control)),
        "2" => Ok(Some(Status::Case)),
        "0" | "-9" => Ok(None),
        other => Err(format!("phenotype {other:?} is not a case/control code (1, 2, 0, -9)")),
    }
}

pub(crate) fn status_code(status: Status) -> &'static str {
    match status {
        Status::Case => "2",
        Status::Control => "1",
    }
}

/// Non-empty lines with their 1-based line numbers.
pub(crate) fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

/// `prefix` + `ext`, keeping any dots already in the prefix.
pub fn with_extension(prefix: &Path, ext: &str) -> std::path::PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    s.into()
}
