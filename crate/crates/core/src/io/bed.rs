//! PLINK 1 binary fileset (.bed/.bim/.fam), variant-major mode only.
//!
//! Each variant occupies `ceil(n_samples / 4)` bytes. Genotypes are packed
//! four per byte starting from the least significant bit pair:
//!
//! | code | meaning             | A1 dosage |
//! |------|---------------------|-----------|
//! | 00   | homozygous A1       | 2         |
//! | 01   | missing             | -         |
//! | 10   | heterozygous        | 1         |
//! | 11   | homozygous A2       | 0         |

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{parse_status, read_lines, status_code, with_extension, PlinkData, SampleId};
use crate::data::{Dosage, GenotypeMatrix, PhenotypeVector, VariantRecord};
use crate::error::{Error, Result};

pub const BED_MAGIC: [u8; 2] = [0x6C, 0x1B];
pub const MODE_VARIANT_MAJOR: u8 = 0x01;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BedHeader {
    pub magic: [u8; 2],
    pub mode: u8,
}

impl BedHeader {
    pub fn parse(bytes: &[u8], path: &Path) -> Result<BedHeader> {
        if bytes.len() < 3 || bytes[..2] != BED_MAGIC {
            return Err(Error::NotABed(path.to_path_buf()));
        }
        if bytes[2] != MODE_VARIANT_MAJOR {
            return Err(Error::UnsupportedMode {
                path: path.to_path_buf(),
                mode: bytes[2],
            });
        }
        Ok(BedHeader {
            magic: BED_MAGIC,
            mode: bytes[2],
        })
    }
}

pub fn bytes_per_variant(n_samples: usize) -> usize {
    n_samples.div_ceil(4)
}

/// Expected .bed size for `n` samples and `m` variants.
pub fn expected_bed_size(n_samples: usize, n_variants: usize) -> u64 {
    3 + (bytes_per_variant(n_samples) * n_variants) as u64
}

fn decode_code(code: u8) -> Dosage {
    match code & 0b11 {
        0b00 => Dosage::Two,
        0b01 => Dosage::Missing,
        0b10 => Dosage::One,
        _ => Dosage::Zero,
    }
}

fn encode_dosage(d: Dosage) -> u8 {
    match d {
        Dosage::Two => 0b00,
        Dosage::Missing => 0b01,
        Dosage::One => 0b10,
        Dosage::Zero => 0b11,
    }
}

/// Decodes the variant-major payload (header already stripped).
pub fn decode_payload(payload: &[u8], n_samples: usize, n_variants: usize) -> Vec<Dosage> {
    let per = bytes_per_variant(n_samples);
    let mut out = Vec::with_capacity(n_samples * n_variants);
    for v in 0..n_variants {
        let block = &payload[v * per..(v + 1) * per];
        for i in 0..n_samples {
            out.push(decode_code(block[i / 4] >> (2 * (i % 4))));
        }
    }
    out
}

/// Encodes variant-major calls; pad bits of the last byte are zero.
pub fn encode_payload(calls: &[Dosage], n_samples: usize, n_variants: usize) -> Vec<u8> {
    let per = bytes_per_variant(n_samples);
    let mut out = vec![0u8; per * n_variants];
    for v in 0..n_variants {
        for i in 0..n_samples {
            out[v * per + i / 4] |= encode_dosage(calls[v * n_samples + i]) << (2 * (i % 4));
        }
    }
    out
}

fn read_bim(path: &Path) -> Result<Vec<VariantRecord>> {
    read_lines(path)?
        .into_iter()
        .map(|(line_no, line)| {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 6 {
                return Err(Error::parse(path, line_no, format!("expected 6 columns, found {}", f.len())));
            }
            let position: u64 = f[3]
                .parse()
                .map_err(|_| Error::parse(path, line_no, format!("bad position {:?}", f[3])))?;
            VariantRecord::new(f[1], f[0], position, f[4], f[5])
                .map_err(|e| Error::parse(path, line_no, e.to_string()))
        })
        .collect()
}

type FamRow = (SampleId, Option<crate::data::Status>);

fn read_fam(path: &Path) -> Result<Vec<FamRow>> {
    read_lines(path)?
        .into_iter()
        .map(|(line_no, line)| {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 6 {
                return Err(Error::parse(path, line_no, format!("expected 6 columns, found {}", f.len())));
            }
            let status = parse_status(f[5]).map_err(|m| Error::parse(path, line_no, m))?;
            Ok((
                SampleId {
                    fid: f[0].to_string(),
                    iid: f[1].to_string(),
                },
                status,
            ))
        })
        .collect()
}

/// Reads a binary fileset. Dosages count the .bim A1 allele as stored; use
/// [`GenotypeMatrix::normalize_minor_allele`] to reorient.
pub fn read_bed_bim_fam(bed: &Path, bim: &Path, fam: &Path) -> Result<PlinkData> {
    let variants = read_bim(bim)?;
    let fam_rows = read_fam(fam)?;
    let bytes = fs::read(bed).map_err(|e| Error::io(bed, e))?;
    BedHeader::parse(&bytes, bed)?;

    let n = fam_rows.len();
    let m = variants.len();
    let expected = expected_bed_size(n, m);
    if bytes.len() as u64 != expected {
        return Err(Error::BedSize {
            path: bed.to_path_buf(),
            expected,
            actual: bytes.len() as u64,
        });
    }
    let calls = decode_payload(&bytes[3..], n, m);
    let all = GenotypeMatrix::from_calls(n, variants, calls)?;

    let keep: Vec<usize> = (0..n).filter(|&i| fam_rows[i].1.is_some()).collect();
    let dropped = n - keep.len();
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} samples with missing phenotype", fam.display());
    }
    let genotypes = if dropped > 0 { all.select_samples(&keep) } else { all };
    let phenotype = PhenotypeVector::new(keep.iter().map(|&i| fam_rows[i].1.unwrap()).collect());
    let samples = keep.iter().map(|&i| fam_rows[i].0.clone()).collect();
    Ok(PlinkData {
        genotypes,
        phenotype,
        samples,
        n_dropped_missing_phenotype: dropped,
    })
}

/// Reads `<prefix>.bed`, `<prefix>.bim`, `<prefix>.fam`.
pub fn read_bfile(prefix: &Path) -> Result<PlinkData> {
    read_bed_bim_fam(
        &with_extension(prefix, "bed"),
        &with_extension(prefix, "bim"),
        &with_extension(prefix, "fam"),
    )
}

/// Writes `<prefix>.bed/.bim/.fam` with numbered sample ids.
pub fn write_bed_bim_fam(matrix: &GenotypeMatrix, phenotype: &PhenotypeVector, prefix: &Path) -> Result<()> {
    let samples: Vec<SampleId> = (0..matrix.n_samples()).map(SampleId::numbered).collect();
    write_plink_binary(matrix, phenotype, &samples, prefix)
}

pub fn write_plink_binary(
    matrix: &GenotypeMatrix,
    phenotype: &PhenotypeVector,
    samples: &[SampleId],
    prefix: &Path,
) -> Result<()> {
    if matrix.is_imputed() {
        return Err(Error::ImputedNotSerializable);
    }
    let n = matrix.n_samples();
    let m = matrix.n_variants();
    if phenotype.len() != n || samples.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} samples in matrix, {} phenotypes, {} sample ids",
            phenotype.len(),
            samples.len()
        )));
    }
    let mut calls = Vec::with_capacity(n * m);
    for j in 0..m {
        calls.extend_from_slice(matrix.column_calls(j).expect("hard calls"));
    }

    let bed_path = with_extension(prefix, "bed");
    let mut bed = Vec::with_capacity(expected_bed_size(n, m) as usize);
    bed.extend_from_slice(&BED_MAGIC);
    bed.push(MODE_VARIANT_MAJOR);
    bed.extend(encode_payload(&calls, n, m));
    fs::write(&bed_path, bed).map_err(|e| Error::io(&bed_path, e))?;

    let bim_path = with_extension(prefix, "bim");
    write_text(&bim_path, |w| {
        for v in matrix.variants() {
            writeln!(w, "{}\t{}\t0\t{}\t{}\t{}", v.chromosome, v.id, v.position, v.allele_a1, v.allele_a2)?;
        }
        Ok(())
    })?;

    let fam_path = with_extension(prefix, "fam");
    write_text(&fam_path, |w| {
        for (s, status) in samples.iter().zip(phenotype.labels()) {
            writeln!(w, "{} {} 0 0 0 {}", s.fid, s.iid, status_code(*status))?;
        }
        Ok(())
    })
}

pub(crate) fn write_text(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}
