//! PLINK text fileset (.ped/.map).
//!
//! The .ped file has no allele declaration, so the counted allele (A1) is
//! inferred: the less frequent observed allele, ties going to the
//! lexicographically smaller symbol. Monomorphic variants get A1 = "0".

use std::io::Write;
use std::path::Path;

use super::bed::write_text;
use super::{parse_status, read_lines, status_code, PlinkData, SampleId};
use crate::data::{Dosage, GenotypeMatrix, PhenotypeVector, VariantRecord, UNKNOWN_ALLELE};
use crate::error::{Error, Result};

struct MapRow {
    chromosome: String,
    id: String,
    position: u64,
}

fn read_map(path: &Path) -> Result<Vec<MapRow>> {
    read_lines(path)?
        .into_iter()
        .map(|(line_no, line)| {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(Error::parse(path, line_no, format!("expected 4 columns, found {}", f.len())));
            }
            let position = f[3]
                .parse()
                .map_err(|_| Error::parse(path, line_no, format!("bad position {:?}", f[3])))?;
            Ok(MapRow {
                chromosome: f[0].to_string(),
                id: f[1].to_string(),
                position,
            })
        })
        .collect()
}

/// Allele pair per sample per variant, `None` for "0 0".
type AllelePair<'a> = Option<(&'a str, &'a str)>;

pub fn read_ped_map(ped: &Path, map: &Path) -> Result<PlinkData> {
    let map_rows = read_map(map)?;
    let m = map_rows.len();
    let lines = read_lines(ped)?;

    let mut samples = Vec::new();
    let mut statuses = Vec::new();
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut row_lines = Vec::new();
    for (line_no, line) in &lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 6 + 2 * m {
            return Err(Error::parse(
                ped,
                *line_no,
                format!("expected {} columns (6 + 2 x {m} variants), found {}", 6 + 2 * m, f.len()),
            ));
        }
        let status = parse_status(f[5]).map_err(|msg| Error::parse(ped, *line_no, msg))?;
        samples.push(SampleId {
            fid: f[0].to_string(),
            iid: f[1].to_string(),
        });
        statuses.push(status);
        rows.push(f[6..].iter().map(|s| s.to_string()).collect());
        row_lines.push(*line_no);
    }
    let n = rows.len();

    let mut variants = Vec::with_capacity(m);
    let mut calls = Vec::with_capacity(n * m);
    for (j, map_row) in map_rows.iter().enumerate() {
        let mut pairs: Vec<AllelePair> = Vec::with_capacity(n);
        // Observed symbols with their counts, in first-seen order.
        let mut symbols: Vec<(&str, usize)> = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            let (a, b) = (row[2 * j].as_str(), row[2 * j + 1].as_str());
            match (a == UNKNOWN_ALLELE, b == UNKNOWN_ALLELE) {
                (true, true) => pairs.push(None),
                (false, false) => {
                    for s in [a, b] {
                        match symbols.iter_mut().find(|(x, _)| *x == s) {
                            Some((_, c)) => *c += 1,
                            None => symbols.push((s, 1)),
                        }
                    }
                    pairs.push(Some((a, b)));
                }
                _ => {
                    return Err(Error::parse(
                        ped,
                        row_lines[i],
                        format!("variant {}: half-missing genotype {a} {b}", map_row.id),
                    ))
                }
            }
            if symbols.len() > 2 {
                return Err(Error::parse(
                    ped,
                    row_lines[i],
                    format!("variant {}: more than two allele symbols", map_row.id),
                ));
            }
        }
        symbols.sort_by(|x, y| x.1.cmp(&y.1).then_with(|| x.0.cmp(y.0)));
        let (a1, a2) = match symbols.as_slice() {
            [] => (UNKNOWN_ALLELE, UNKNOWN_ALLELE),
            [(only, _)] => (UNKNOWN_ALLELE, *only),
            [(minor, _), (major, _)] => (*minor, *major),
            _ => unreachable!(),
        };
        for p in pairs {
            calls.push(match p {
                None => Dosage::Missing,
                Some((x, y)) => Dosage::from_count((x == a1) as u8 + (y == a1) as u8).unwrap(),
            });
        }
        variants.push(
            VariantRecord::new(&map_row.id, &map_row.chromosome, map_row.position, a1, a2)
                .map_err(|e| Error::parse(map, j + 1, e.to_string()))?,
        );
    }

    let all = GenotypeMatrix::from_calls(n, variants, calls)?;
    let keep: Vec<usize> = (0..n).filter(|&i| statuses[i].is_some()).collect();
    let dropped = n - keep.len();
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} samples with missing phenotype", ped.display());
    }
    Ok(PlinkData {
        genotypes: if dropped > 0 { all.select_samples(&keep) } else { all },
        phenotype: PhenotypeVector::new(keep.iter().map(|&i| statuses[i].unwrap()).collect()),
        samples: keep.iter().map(|&i| samples[i].clone()).collect(),
        n_dropped_missing_phenotype: dropped,
    })
}

/// Writes `.ped` and `.map`. Homozygous A1 is written "a1 a1", heterozygous
/// "a1 a2", homozygous A2 "a2 a2" and missing "0 0".
pub fn write_ped_map(
    matrix: &GenotypeMatrix,
    phenotype: &PhenotypeVector,
    samples: &[SampleId],
    ped: &Path,
    map: &Path,
) -> Result<()> {
    if matrix.is_imputed() {
        return Err(Error::ImputedNotSerializable);
    }
    let n = matrix.n_samples();
    if phenotype.len() != n || samples.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} samples in matrix, {} phenotypes, {} sample ids",
            phenotype.len(),
            samples.len()
        )));
    }
    for (j, v) in matrix.variants().iter().enumerate() {
        let col = matrix.column_calls(j).expect("hard calls");
        let needs_a1 = col.iter().any(|d| matches!(d, Dosage::One | Dosage::Two));
        let needs_a2 = col.iter().any(|d| matches!(d, Dosage::One | Dosage::Zero));
        if (needs_a1 && v.allele_a1 == UNKNOWN_ALLELE) || (needs_a2 && v.allele_a2 == UNKNOWN_ALLELE) {
            return Err(Error::InvalidVariant(format!("{}: called genotype uses unknown allele", v.id)));
        }
    }
    write_text(map, |w| {
        for v in matrix.variants() {
            writeln!(w, "{}\t{}\t0\t{}", v.chromosome, v.id, v.position)?;
        }
        Ok(())
    })?;
    write_text(ped, |w| {
        for (i, (s, status)) in samples.iter().zip(phenotype.labels()).enumerate() {
            write!(w, "{} {} 0 0 0 {}", s.fid, s.iid, status_code(*status))?;
            for (j, v) in matrix.variants().iter().enumerate() {
                let (a, b) = match matrix.column_calls(j).unwrap()[i] {
                    Dosage::Two => (&v.allele_a1, &v.allele_a1),
                    Dosage::One => (&v.allele_a1, &v.allele_a2),
                    Dosage::Zero => (&v.allele_a2, &v.allele_a2),
                    Dosage::Missing => {
                        write!(w, " 0 0")?;
                        continue;
                    }
                };
                write!(w, " {a} {b}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    })
}
