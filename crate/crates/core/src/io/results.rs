//! Result CSV writers with fixed headers.

use std::io::Write;

use crate::error::{Error, Result};
use crate::stats::{Method, TestResult};

pub const ASSOC_HEADER: [&str; 6] = ["unit", "method", "statistic", "p_value", "n_permutations", "n_variants"];

/// One association row: a result, or the message of the error that stopped
/// the method on this unit (written with `NA` fields).
#[derive(Clone, Debug, PartialEq)]
pub struct AssocRow {
    pub unit: String,
    pub method: Method,
    pub n_variants: usize,
    pub outcome: std::result::Result<TestResult, String>,
}

impl AssocRow {
    pub fn ok(unit: impl Into<String>, result: TestResult) -> Self {
        AssocRow {
            unit: unit.into(),
            method: result.method,
            n_variants: result.n_variants,
            outcome: Ok(result),
        }
    }
}

pub fn write_assoc_csv<W: Write>(out: W, rows: &[AssocRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ASSOC_HEADER).map_err(csv_err)?;
    let na = || "NA".to_string();
    for row in rows {
        let (statistic, p, b) = match &row.outcome {
            Ok(r) => (
                r.statistic.to_string(),
                r.p_value.to_string(),
                r.n_permutations.map_or_else(na, |b| b.to_string()),
            ),
            Err(_) => (na(), na(), na()),
        };
        w.write_record([
            row.unit.clone(),
            row.method.name().to_string(),
            statistic,
            p,
            b,
            row.n_variants.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::InvalidConfig(format!("csv: {e}"))
}
