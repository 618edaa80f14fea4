//! Gene interval annotation: a 4-column TSV of gene, chromosome, start, end.
//! A first line whose coordinate columns are both non-numeric is a header;
//! lines starting with `#` are comments.

use std::path::Path;

use super::read_lines;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneInterval {
    pub gene: String,
    pub chromosome: String,
    pub start_bp: u64,
    pub end_bp: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GeneAnnotation {
    pub rows: Vec<GeneInterval>,
}

impl GeneAnnotation {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub fn load_gene_annotation(path: &Path) -> Result<GeneAnnotation> {
    let mut rows = Vec::new();
    for (idx, (line_no, line)) in read_lines(path)?.into_iter().enumerate() {
        if line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').map(str::trim).collect();
        if f.len() != 4 {
            return Err(Error::parse(path, line_no, format!("expected 4 tab-separated columns, found {}", f.len())));
        }
        let start = f[2].parse::<u64>();
        let end = f[3].parse::<u64>();
        if idx == 0 && start.is_err() && end.is_err() {
            continue;
        }
        let start_bp = start.map_err(|_| Error::parse(path, line_no, format!("bad start position {:?}", f[2])))?;
        let end_bp = end.map_err(|_| Error::parse(path, line_no, format!("bad end position {:?}", f[3])))?;
        if start_bp > end_bp {
            return Err(Error::parse(path, line_no, format!("start {start_bp} > end {end_bp}")));
        }
        rows.push(GeneInterval {
            gene: f[0].to_string(),
            chromosome: f[1].to_string(),
            start_bp,
            end_bp,
        });
    }
    Ok(GeneAnnotation { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn load(text: &str) -> Result<GeneAnnotation> {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("genes.tsv");
        fs::write(&p, text).unwrap();
        load_gene_annotation(&p)
    }

    #[test]
    fn single_row() {
        let a = load("PSCA\t8\t143751000\t143764000\n").unwrap();
        assert_eq!(
            a.rows,
            vec![GeneInterval {
                gene: "PSCA".into(),
                chromosome: "8".into(),
                start_bp: 143751000,
                end_bp: 143764000
            }]
        );
    }

    #[test]
    fn header_and_empty() {
        assert!(load("").unwrap().is_empty());
        assert_eq!(load("gene\tchrom\tstart\tend\nA\t1\t1\t5\n").unwrap().len(), 1);
    }

    #[test]
    fn bad_rows() {
        assert!(matches!(load("A\t1\t1\t5\nB\t1\tx\t9\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(load("A\t1\t9\t5\n"), Err(Error::Parse { line: 1, .. })));
    }
}
