//! Genotype and phenotype data model shared by I/O, QC, the tests and the
//! simulator.
//!
//! Genotypes are stored variant-major (one contiguous column per variant).
//! Hard calls live in [`Dosage`]; after mean imputation a matrix carries
//! real-valued dosages instead and can no longer be written as PLINK calls.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// Minor-allele count of one sample at one variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Dosage {
    Zero = 0,
    One = 1,
    Two = 2,
    Missing = 3,
}

impl Dosage {
    pub fn from_count(count: u8) -> Option<Dosage> {
        match count {
            0 => Some(Dosage::Zero),
            1 => Some(Dosage::One),
            2 => Some(Dosage::Two),
            _ => None,
        }
    }

    pub fn count(self) -> Option<u8> {
        match self {
            Dosage::Missing => None,
            d => Some(d as u8),
        }
    }

    pub fn is_missing(self) -> bool {
        self == Dosage::Missing
    }

    /// Dosage of the other allele.
    pub fn flipped(self) -> Dosage {
        match self {
            Dosage::Zero => Dosage::Two,
            Dosage::Two => Dosage::Zero,
            d => d,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Dosage::Missing => f64::NAN,
            d => d as u8 as f64,
        }
    }
}

/// Placeholder allele code for an unobserved allele (PLINK convention).
pub const UNKNOWN_ALLELE: &str = "0";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariantRecord {
    pub id: String,
    pub chromosome: String,
    pub position: u64,
    /// Allele counted by the dosage.
    pub allele_a1: String,
    pub allele_a2: String,
}

impl VariantRecord {
    pub fn new(
        id: impl Into<String>,
        chromosome: impl Into<String>,
        position: u64,
        allele_a1: impl Into<String>,
        allele_a2: impl Into<String>,
    ) -> Result<Self> {
        let record = VariantRecord {
            id: id.into(),
            chromosome: chromosome.into(),
            position,
            allele_a1: allele_a1.into(),
            allele_a2: allele_a2.into(),
        };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::InvalidVariant("empty variant id".into()));
        }
        // Two unknown alleles are allowed for variants with no observed calls.
        if self.allele_a1 == self.allele_a2 && self.allele_a1 != UNKNOWN_ALLELE {
            return Err(Error::InvalidVariant(format!(
                "{}: allele a1 equals a2 ({})",
                self.id, self.allele_a1
            )));
        }
        Ok(())
    }

    fn swap_alleles(&mut self) {
        std::mem::swap(&mut self.allele_a1, &mut self.allele_a2);
    }
}

/// Case/control status of one sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    Case,
    Control,
}

impl Status {
    pub fn is_case(self) -> bool {
        self == Status::Case
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhenotypeVector {
    labels: Vec<Status>,
}

impl PhenotypeVector {
    pub fn new(labels: Vec<Status>) -> Self {
        PhenotypeVector { labels }
    }

    /// `n_cases` cases followed by `n_controls` controls.
    pub fn blocked(n_cases: usize, n_controls: usize) -> Self {
        let mut labels = vec![Status::Case; n_cases];
        labels.extend(std::iter::repeat_n(Status::Control, n_controls));
        PhenotypeVector { labels }
    }

    pub fn from_case_flags(flags: &[bool]) -> Self {
        PhenotypeVector {
            labels: flags
                .iter()
                .map(|&c| if c { Status::Case } else { Status::Control })
                .collect(),
        }
    }

    pub fn labels(&self) -> &[Status] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_cases(&self) -> usize {
        self.labels.iter().filter(|s| s.is_case()).count()
    }

    pub fn n_controls(&self) -> usize {
        self.len() - self.n_cases()
    }

    /// Returns `(n_cases, n_controls)`, failing unless both classes are present.
    pub fn require_both_classes(&self) -> Result<(usize, usize)> {
        let cases = self.n_cases();
        let controls = self.n_controls();
        if cases == 0 {
            return Err(Error::NoCases);
        }
        if controls == 0 {
            return Err(Error::NoControls);
        }
        Ok((cases, controls))
    }

    /// 0/1 indicator, 1 for cases.
    pub fn indicator(&self) -> Vec<f64> {
        self.labels
            .iter()
            .map(|s| if s.is_case() { 1.0 } else { 0.0 })
            .collect()
    }

    pub fn case_flags(&self) -> Vec<bool> {
        self.labels.iter().map(|s| s.is_case()).collect()
    }

    pub fn select(&self, samples: &[usize]) -> PhenotypeVector {
        PhenotypeVector {
            labels: samples.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Named set of variant columns tested jointly (a gene or a window).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnitDefinition {
    pub name: String,
    member_indices: Vec<usize>,
}

impl UnitDefinition {
    pub fn new(name: impl Into<String>, member_indices: Vec<usize>, n_variants: usize) -> Result<Self> {
        let name = name.into();
        let invalid = |reason: String| Error::InvalidUnit {
            name: name.clone(),
            reason,
        };
        if member_indices.is_empty() {
            return Err(invalid("no member variants".into()));
        }
        let mut seen = HashSet::with_capacity(member_indices.len());
        for &idx in &member_indices {
            if idx >= n_variants {
                return Err(invalid(format!("index {idx} out of range ({n_variants} variants)")));
            }
            if !seen.insert(idx) {
                return Err(invalid(format!("duplicate index {idx}")));
            }
        }
        Ok(UnitDefinition {
            name,
            member_indices,
        })
    }

    pub fn members(&self) -> &[usize] {
        &self.member_indices
    }

    pub fn len(&self) -> usize {
        self.member_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_indices.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
enum DosageData {
    Calls(Vec<Dosage>),
    Imputed(Vec<f64>),
}

/// Samples x variants dosage matrix, stored variant-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GenotypeMatrix {
    n_samples: usize,
    variants: Vec<VariantRecord>,
    data: DosageData,
}

/// Minor allele frequency of a column plus whether the counted allele is the
/// major one (in which case the column must be flipped to count the minor).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MafEstimate {
    pub maf: f64,
    pub flipped: bool,
}

pub fn minor_allele_frequency(column: &[Dosage]) -> Result<MafEstimate> {
    let mut sum = 0u64;
    let mut called = 0u64;
    for d in column {
        if let Some(c) = d.count() {
            sum += c as u64;
            called += 1;
        }
    }
    if called == 0 {
        return Err(Error::AllMissing {
            variant: String::new(),
        });
    }
    Ok(fold_frequency(sum as f64 / (2 * called) as f64))
}

/// MAF of a real-valued column; NaN entries are treated as missing.
pub fn minor_allele_frequency_real(column: &[f64]) -> Result<MafEstimate> {
    let (sum, called) = column
        .iter()
        .filter(|v| !v.is_nan())
        .fold((0.0, 0usize), |(s, n), &v| (s + v, n + 1));
    if called == 0 {
        return Err(Error::AllMissing {
            variant: String::new(),
        });
    }
    Ok(fold_frequency(sum / (2 * called) as f64))
}

fn fold_frequency(f: f64) -> MafEstimate {
    if f > 0.5 {
        MafEstimate {
            maf: 1.0 - f,
            flipped: true,
        }
    } else {
        MafEstimate {
            maf: f,
            flipped: false,
        }
    }
}

pub fn missing_rate(column: &[Dosage]) -> f64 {
    if column.is_empty() {
        return 0.0;
    }
    column.iter().filter(|d| d.is_missing()).count() as f64 / column.len() as f64
}

impl GenotypeMatrix {
    /// Builds a hard-call matrix from variant-major data
    /// (`data[v * n_samples + s]`).
    pub fn from_calls(n_samples: usize, variants: Vec<VariantRecord>, data: Vec<Dosage>) -> Result<Self> {
        if data.len() != n_samples * variants.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} dosages for {} samples x {} variants",
                data.len(),
                n_samples,
                variants.len()
            )));
        }
        for v in &variants {
            v.validate()?;
        }
        Ok(GenotypeMatrix {
            n_samples,
            variants,
            data: DosageData::Calls(data),
        })
    }

    /// Builds a real-valued matrix from variant-major data. NaN is not allowed.
    pub fn from_real(n_samples: usize, variants: Vec<VariantRecord>, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_samples * variants.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} dosages for {} samples x {} variants",
                data.len(),
                n_samples,
                variants.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::DimensionMismatch("non-finite real dosage".into()));
        }
        Ok(GenotypeMatrix {
            n_samples,
            variants,
            data: DosageData::Imputed(data),
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_variants(&self) -> usize {
        self.variants.len()
    }

    pub fn variants(&self) -> &[VariantRecord] {
        &self.variants
    }

    pub fn is_imputed(&self) -> bool {
        matches!(self.data, DosageData::Imputed(_))
    }

    /// Hard calls of one variant, `None` once the matrix has been imputed.
    pub fn column_calls(&self, variant: usize) -> Option<&[Dosage]> {
        match &self.data {
            DosageData::Calls(d) => Some(&d[variant * self.n_samples..(variant + 1) * self.n_samples]),
            DosageData::Imputed(_) => None,
        }
    }

    /// Dosages of one variant as reals (NaN for missing calls).
    pub fn column_values(&self, variant: usize) -> Vec<f64> {
        let range = variant * self.n_samples..(variant + 1) * self.n_samples;
        match &self.data {
            DosageData::Calls(d) => d[range].iter().map(|x| x.as_f64()).collect(),
            DosageData::Imputed(d) => d[range].to_vec(),
        }
    }

    pub fn value(&self, sample: usize, variant: usize) -> f64 {
        let idx = variant * self.n_samples + sample;
        match &self.data {
            DosageData::Calls(d) => d[idx].as_f64(),
            DosageData::Imputed(d) => d[idx],
        }
    }

    pub fn has_missing(&self) -> bool {
        match &self.data {
            DosageData::Calls(d) => d.iter().any(|x| x.is_missing()),
            DosageData::Imputed(_) => false,
        }
    }

    pub fn variant_index(&self, id: &str) -> Option<usize> {
        self.variants.iter().position(|v| v.id == id)
    }

    pub fn maf(&self, variant: usize) -> Result<MafEstimate> {
        let est = match self.column_calls(variant) {
            Some(col) => minor_allele_frequency(col),
            None => minor_allele_frequency_real(&self.column_values(variant)),
        };
        est.map_err(|_| Error::AllMissing {
            variant: self.variants[variant].id.clone(),
        })
    }

    /// Keeps the listed variant columns, in the given order.
    pub fn select_variants(&self, keep: &[usize]) -> GenotypeMatrix {
        let n = self.n_samples;
        let variants = keep.iter().map(|&j| self.variants[j].clone()).collect();
        let data = match &self.data {
            DosageData::Calls(d) => DosageData::Calls(
                keep.iter()
                    .flat_map(|&j| d[j * n..(j + 1) * n].iter().copied())
                    .collect(),
            ),
            DosageData::Imputed(d) => DosageData::Imputed(
                keep.iter()
                    .flat_map(|&j| d[j * n..(j + 1) * n].iter().copied())
                    .collect(),
            ),
        };
        GenotypeMatrix {
            n_samples: n,
            variants,
            data,
        }
    }

    /// Keeps the listed samples, in the given order.
    pub fn select_samples(&self, samples: &[usize]) -> GenotypeMatrix {
        let n = self.n_samples;
        let m = self.n_variants();
        let data = match &self.data {
            DosageData::Calls(d) => DosageData::Calls(
                (0..m)
                    .flat_map(|j| samples.iter().map(move |&i| d[j * n + i]))
                    .collect(),
            ),
            DosageData::Imputed(d) => DosageData::Imputed(
                (0..m)
                    .flat_map(|j| samples.iter().map(move |&i| d[j * n + i]))
                    .collect(),
            ),
        };
        GenotypeMatrix {
            n_samples: samples.len(),
            variants: self.variants.clone(),
            data,
        }
    }

    /// Indices of the first occurrence of every variant id.
    pub fn first_occurrences(&self) -> Vec<usize> {
        let mut seen = HashSet::with_capacity(self.variants.len());
        (0..self.variants.len())
            .filter(|&j| seen.insert(self.variants[j].id.as_str()))
            .collect()
    }

    /// Drops later duplicates of a variant id, keeping the first occurrence.
    pub fn dedup_variants(&self) -> GenotypeMatrix {
        self.select_variants(&self.first_occurrences())
    }

    /// Reorients every column so the dosage counts the minor allele, swapping
    /// the recorded alleles of flipped variants. All-missing columns are left
    /// as they are.
    pub fn normalize_minor_allele(&self) -> GenotypeMatrix {
        let mut out = self.clone();
        let n = self.n_samples;
        for j in 0..self.n_variants() {
            let flip = self.maf(j).map(|e| e.flipped).unwrap_or(false);
            if !flip {
                continue;
            }
            out.variants[j].swap_alleles();
            match &mut out.data {
                DosageData::Calls(d) => {
                    for x in &mut d[j * n..(j + 1) * n] {
                        *x = x.flipped();
                    }
                }
                DosageData::Imputed(d) => {
                    for x in &mut d[j * n..(j + 1) * n] {
                        *x = 2.0 - *x;
                    }
                }
            }
        }
        out
    }

    /// Replaces each missing call by the column's mean dosage (2 x allele
    /// frequency of the counted allele). A matrix without missing calls is
    /// returned unchanged.
    pub fn impute_missing(&self) -> Result<GenotypeMatrix> {
        let calls = match &self.data {
            DosageData::Imputed(_) => return Ok(self.clone()),
            DosageData::Calls(d) => d,
        };
        if !calls.iter().any(|d| d.is_missing()) {
            return Ok(self.clone());
        }
        let n = self.n_samples;
        let mut out = Vec::with_capacity(calls.len());
        for j in 0..self.n_variants() {
            let col = &calls[j * n..(j + 1) * n];
            let (sum, called) = col
                .iter()
                .filter_map(|d| d.count())
                .fold((0u64, 0u64), |(s, c), x| (s + x as u64, c + 1));
            if called == 0 && n > 0 {
                return Err(Error::AllMissing {
                    variant: self.variants[j].id.clone(),
                });
            }
            let mean = if called == 0 { 0.0 } else { sum as f64 / called as f64 };
            out.extend(col.iter().map(|d| match d.count() {
                Some(c) => c as f64,
                None => mean,
            }));
        }
        Ok(GenotypeMatrix {
            n_samples: n,
            variants: self.variants.clone(),
            data: DosageData::Imputed(out),
        })
    }

    /// Dense sample-major matrix of a unit's columns with missing calls
    /// mean-imputed per column.
    pub fn unit_matrix(&self, unit: &UnitDefinition) -> Result<UnitMatrix> {
        let n = self.n_samples;
        let m = unit.len();
        let mut data = vec![0.0; n * m];
        for (k, &j) in unit.members().iter().enumerate() {
            if j >= self.n_variants() {
                return Err(Error::InvalidUnit {
                    name: unit.name.clone(),
                    reason: format!("index {j} out of range"),
                });
            }
            let col = self.column_values(j);
            let (sum, called) = col
                .iter()
                .filter(|v| !v.is_nan())
                .fold((0.0, 0usize), |(s, c), &v| (s + v, c + 1));
            if called == 0 {
                return Err(Error::AllMissing {
                    variant: self.variants[j].id.clone(),
                });
            }
            let mean = sum / called as f64;
            for (i, v) in col.into_iter().enumerate() {
                data[i * m + k] = if v.is_nan() { mean } else { v };
            }
        }
        Ok(UnitMatrix {
            n_samples: n,
            n_variants: m,
            data,
        })
    }

    /// Every variant as one unit, in file order.
    pub fn whole_unit(&self, name: impl Into<String>) -> Result<UnitDefinition> {
        UnitDefinition::new(name, (0..self.n_variants()).collect(), self.n_variants())
    }
}

/// Complete real-valued dosages of one unit, stored sample-major
/// (`data[sample * n_variants + variant]`).
#[derive(Clone, Debug, PartialEq)]
pub struct UnitMatrix {
    n_samples: usize,
    n_variants: usize,
    data: Vec<f64>,
}

impl UnitMatrix {
    pub fn new(n_samples: usize, n_variants: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_samples * n_variants {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {n_samples} x {n_variants}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::DimensionMismatch("unit matrix holds non-finite dosages".into()));
        }
        Ok(UnitMatrix {
            n_samples,
            n_variants,
            data,
        })
    }

    /// Builds from columns (`columns[variant][sample]`).
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let m = columns.len();
        let n = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::DimensionMismatch("ragged columns".into()));
        }
        let mut data = vec![0.0; n * m];
        for (j, col) in columns.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                data[i * m + j] = v;
            }
        }
        UnitMatrix::new(n, m, data)
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_variants(&self) -> usize {
        self.n_variants
    }

    pub fn row(&self, sample: usize) -> &[f64] {
        &self.data[sample * self.n_variants..(sample + 1) * self.n_variants]
    }

    pub fn get(&self, sample: usize, variant: usize) -> f64 {
        self.data[sample * self.n_variants + variant]
    }

    pub fn column(&self, variant: usize) -> Vec<f64> {
        (0..self.n_samples).map(|i| self.get(i, variant)).collect()
    }

    pub fn select_columns(&self, keep: &[usize]) -> UnitMatrix {
        let mut data = Vec::with_capacity(self.n_samples * keep.len());
        for i in 0..self.n_samples {
            let row = self.row(i);
            data.extend(keep.iter().map(|&j| row[j]));
        }
        UnitMatrix {
            n_samples: self.n_samples,
            n_variants: keep.len(),
            data,
        }
    }

    /// Replaces the listed columns by `2 - x`.
    pub fn flip_columns(&self, cols: &[usize]) -> UnitMatrix {
        let mut out = self.clone();
        for i in 0..self.n_samples {
            for &j in cols {
                let v = &mut out.data[i * self.n_variants + j];
                *v = 2.0 - *v;
            }
        }
        out
    }

    pub fn select_samples(&self, samples: &[usize]) -> UnitMatrix {
        let mut data = Vec::with_capacity(samples.len() * self.n_variants);
        for &i in samples {
            data.extend_from_slice(self.row(i));
        }
        UnitMatrix {
            n_samples: samples.len(),
            n_variants: self.n_variants,
            data,
        }
    }
}

/// Sorts samples by (dosage row, status) so that test results do not depend on
/// the input row order. Returns the reordered matrix and phenotype.
pub fn canonical_sample_order(unit: &UnitMatrix, phenotype: &PhenotypeVector) -> (UnitMatrix, PhenotypeVector) {
    let mut order: Vec<usize> = (0..unit.n_samples()).collect();
    let labels = phenotype.labels();
    order.sort_by(|&a, &b| {
        unit.row(a)
            .iter()
            .zip(unit.row(b))
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| labels[a].is_case().cmp(&labels[b].is_case()))
    });
    (unit.select_samples(&order), phenotype.select(&order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Dosage::*;

    fn variant(id: &str) -> VariantRecord {
        VariantRecord::new(id, "1", 100, "G", "A").unwrap()
    }

    #[test]
    fn maf_counts_and_orientation() {
        let est = minor_allele_frequency(&[Zero, One, Two, Two]).unwrap();
        assert_eq!(est.maf, 0.375);
        assert!(est.flipped);
        let est = minor_allele_frequency(&[Zero; 4]).unwrap();
        assert_eq!(est.maf, 0.0);
        assert!(!est.flipped);
    }

    #[test]
    fn maf_all_missing_is_error() {
        assert!(matches!(
            minor_allele_frequency(&[Missing, Missing]),
            Err(Error::AllMissing { .. })
        ));
    }

    #[test]
    fn missing_rate_examples() {
        assert_eq!(missing_rate(&[Zero, One, Missing, Two]), 0.25);
        assert_eq!(missing_rate(&[Zero, One]), 0.0);
        assert_eq!(missing_rate(&[Missing, Missing]), 1.0);
    }

    #[test]
    fn impute_examples() {
        let m = GenotypeMatrix::from_calls(
            3,
            vec![variant("a"), variant("b")],
            vec![Zero, Two, Missing, Zero, Zero, Missing],
        )
        .unwrap();
        let imp = m.impute_missing().unwrap();
        assert!(imp.is_imputed());
        assert_eq!(imp.column_values(0), vec![0.0, 2.0, 1.0]);
        assert_eq!(imp.column_values(1), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn impute_complete_matrix_is_identity() {
        let m = GenotypeMatrix::from_calls(2, vec![variant("a")], vec![One, Two]).unwrap();
        assert_eq!(m.impute_missing().unwrap(), m);
    }

    #[test]
    fn impute_all_missing_column_fails() {
        let m = GenotypeMatrix::from_calls(2, vec![variant("a")], vec![Missing, Missing]).unwrap();
        assert!(matches!(m.impute_missing(), Err(Error::AllMissing { .. })));
    }

    #[test]
    fn dedup_keeps_first_and_is_idempotent() {
        let m = GenotypeMatrix::from_calls(
            1,
            vec![variant("a"), variant("b"), variant("a")],
            vec![Zero, One, Two],
        )
        .unwrap();
        let d = m.dedup_variants();
        assert_eq!(d.n_variants(), 2);
        assert_eq!(d.column_values(0), vec![0.0]);
        assert_eq!(d.dedup_variants(), d);
    }

    #[test]
    fn normalization_flips_major_counted_columns() {
        let m = GenotypeMatrix::from_calls(2, vec![variant("a")], vec![Two, One]).unwrap();
        let n = m.normalize_minor_allele();
        assert_eq!(n.column_calls(0).unwrap(), &[Zero, One]);
        assert_eq!(n.variants()[0].allele_a1, "A");
        assert_eq!(n.variants()[0].allele_a2, "G");
    }

    #[test]
    fn unit_validation() {
        assert!(UnitDefinition::new("g", vec![], 3).is_err());
        assert!(UnitDefinition::new("g", vec![0, 3], 3).is_err());
        assert!(UnitDefinition::new("g", vec![1, 1], 3).is_err());
        assert!(UnitDefinition::new("g", vec![2, 0], 3).is_ok());
    }

    #[test]
    fn variant_validation() {
        assert!(VariantRecord::new("", "1", 0, "A", "G").is_err());
        assert!(VariantRecord::new("rs1", "1", 0, "A", "A").is_err());
    }

    #[test]
    fn phenotype_classes() {
        let p = PhenotypeVector::blocked(0, 3);
        assert!(matches!(p.require_both_classes(), Err(Error::NoCases)));
        let p = PhenotypeVector::blocked(2, 0);
        assert!(matches!(p.require_both_classes(), Err(Error::NoControls)));
        assert_eq!(PhenotypeVector::blocked(2, 3).require_both_classes().unwrap(), (2, 3));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn dosage() -> impl Strategy<Value = Dosage> {
            prop_oneof![Just(Zero), Just(One), Just(Two), Just(Missing)]
        }

        proptest! {
            #[test]
            fn maf_flip_invariant(col in prop::collection::vec(dosage(), 1..40)) {
                prop_assume!(col.iter().any(|d| !d.is_missing()));
                let flipped: Vec<Dosage> = col.iter().map(|d| d.flipped()).collect();
                let a = minor_allele_frequency(&col).unwrap().maf;
                let b = minor_allele_frequency(&flipped).unwrap().maf;
                prop_assert!((a - b).abs() < 1e-15);
                prop_assert!((0.0..=0.5).contains(&a));
            }

            #[test]
            fn imputation_preserves_means(col in prop::collection::vec(dosage(), 1..40)) {
                prop_assume!(col.iter().any(|d| !d.is_missing()));
                let n = col.len();
                let m = GenotypeMatrix::from_calls(n, vec![variant("x")], col.clone()).unwrap();
                let imp = m.impute_missing().unwrap();
                let observed: Vec<f64> = col.iter().filter_map(|d| d.count()).map(f64::from).collect();
                let before = observed.iter().sum::<f64>() / observed.len() as f64;
                let after = imp.column_values(0).iter().sum::<f64>() / n as f64;
                prop_assert!((before - after).abs() < 1e-12);
            }
        }
    }
}
