//! Variant quality control and construction of test units.

use rayon::prelude::*;

use crate::data::{missing_rate, Dosage, GenotypeMatrix, PhenotypeVector, UnitDefinition};
use crate::error::{Error, Result};
use crate::io::GeneAnnotation;

#[derive(Clone, Debug, PartialEq)]
pub struct QcConfig {
    pub max_missing_rate: f64,
    pub hwe_p_threshold: f64,
    pub hwe_in_controls_only: bool,
}

impl Default for QcConfig {
    fn default() -> Self {
        QcConfig {
            max_missing_rate: 0.05,
            hwe_p_threshold: 1.0e-4,
            hwe_in_controls_only: true,
        }
    }
}

impl QcConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("max_missing_rate", self.max_missing_rate),
            ("hwe_p_threshold", self.hwe_p_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!("{name} = {v} must lie in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Variant counts after QC; each removed variant is counted under the first
/// rule (duplicate, then missing rate, then HWE) that removed it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct QcReport {
    pub n_input_variants: usize,
    pub n_removed_missing: usize,
    pub n_removed_hwe: usize,
    pub n_removed_duplicate: usize,
    pub n_retained: usize,
}

impl QcReport {
    pub const CSV_HEADER: &'static str =
        "n_input_variants,n_removed_missing,n_removed_hwe,n_removed_duplicate,n_retained";

    pub fn to_csv(&self) -> String {
        format!(
            "{}\n{},{},{},{},{}\n",
            Self::CSV_HEADER,
            self.n_input_variants,
            self.n_removed_missing,
            self.n_removed_hwe,
            self.n_removed_duplicate,
            self.n_retained
        )
    }
}

/// Levene-Haldane exact test for Hardy-Weinberg equilibrium.
///
/// Enumerates every heterozygote count compatible with the observed allele
/// counts and sums the probabilities of outcomes no more likely than the
/// observed one. Monomorphic variants return 1.
pub fn hwe_exact_test(n_hom_minor: i64, n_het: i64, n_hom_major: i64) -> Result<f64> {
    if n_hom_minor < 0 || n_het < 0 || n_hom_major < 0 {
        return Err(Error::NegativeCount);
    }
    let n = (n_hom_minor + n_het + n_hom_major) as usize;
    if n == 0 {
        return Err(Error::InsufficientSamples("HWE test on zero genotypes".into()));
    }
    let hom_rare = n_hom_minor.min(n_hom_major) as usize;
    let het = n_het as usize;
    let rare = 2 * hom_rare + het;
    if rare == 0 {
        return Ok(1.0);
    }
    let probs = het_distribution(n, rare);
    let observed = probs[het];
    let p: f64 = probs.iter().filter(|&&q| q <= observed).sum();
    Ok(p.min(1.0))
}

/// Normalized probabilities of each heterozygote count for `n` genotypes
/// carrying `rare` copies of the rarer allele (entries of the wrong parity
/// are zero). Built by the ratio recurrence outward from the mode.
pub fn het_distribution(n: usize, rare: usize) -> Vec<f64> {
    let mut probs = vec![0.0; rare + 1];
    let mut mid = rare * (2 * n - rare) / (2 * n);
    if mid % 2 != rare % 2 {
        mid += 1;
    }
    probs[mid] = 1.0;
    let mut sum = 1.0;

    let mut hom_r = (rare - mid) / 2;
    let mut hom_c = n - mid - hom_r;
    let mut h = mid;
    while h > 1 {
        probs[h - 2] = probs[h] * (h * (h - 1)) as f64 / (4.0 * (hom_r + 1) as f64 * (hom_c + 1) as f64);
        sum += probs[h - 2];
        hom_r += 1;
        hom_c += 1;
        h -= 2;
    }

    let mut hom_r = (rare - mid) / 2;
    let mut hom_c = n - mid - hom_r;
    let mut h = mid;
    while h + 2 <= rare {
        probs[h + 2] = probs[h] * 4.0 * hom_r as f64 * hom_c as f64 / ((h + 2) * (h + 1)) as f64;
        sum += probs[h + 2];
        hom_r -= 1;
        hom_c -= 1;
        h += 2;
    }
    probs.iter_mut().for_each(|p| *p /= sum);
    probs
}

/// Genotype counts `(hom A1, het, hom A2)` over the selected samples.
fn genotype_counts(col: &[Dosage], include: &[bool]) -> (i64, i64, i64) {
    let mut c = (0, 0, 0);
    for (d, &keep) in col.iter().zip(include) {
        if !keep {
            continue;
        }
        match d {
            Dosage::Two => c.0 += 1,
            Dosage::One => c.1 += 1,
            Dosage::Zero => c.2 += 1,
            Dosage::Missing => {}
        }
    }
    c
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Verdict {
    Keep,
    Missing,
    Hwe,
}

pub fn run_qc(
    matrix: &GenotypeMatrix,
    phenotype: &PhenotypeVector,
    config: &QcConfig,
) -> Result<(GenotypeMatrix, QcReport)> {
    config.validate()?;
    if matrix.is_imputed() {
        return Err(Error::InvalidConfig("QC needs hard-call genotypes, not imputed dosages".into()));
    }
    if phenotype.len() != matrix.n_samples() {
        return Err(Error::DimensionMismatch(format!(
            "{} samples, {} phenotypes",
            matrix.n_samples(),
            phenotype.len()
        )));
    }
    let include: Vec<bool> = phenotype
        .labels()
        .iter()
        .map(|s| !config.hwe_in_controls_only || !s.is_case())
        .collect();

    let firsts = matrix.first_occurrences();
    let verdicts: Vec<Verdict> = firsts
        .par_iter()
        .map(|&j| {
            let col = matrix.column_calls(j).expect("hard calls");
            if missing_rate(col) > config.max_missing_rate {
                return Verdict::Missing;
            }
            let (a, h, b) = genotype_counts(col, &include);
            if a + h + b == 0 {
                return Verdict::Keep;
            }
            match hwe_exact_test(a, h, b) {
                Ok(p) if p < config.hwe_p_threshold => Verdict::Hwe,
                _ => Verdict::Keep,
            }
        })
        .collect();

    let kept: Vec<usize> = firsts
        .iter()
        .zip(&verdicts)
        .filter(|(_, v)| **v == Verdict::Keep)
        .map(|(&j, _)| j)
        .collect();
    let report = QcReport {
        n_input_variants: matrix.n_variants(),
        n_removed_duplicate: matrix.n_variants() - firsts.len(),
        n_removed_missing: verdicts.iter().filter(|v| **v == Verdict::Missing).count(),
        n_removed_hwe: verdicts.iter().filter(|v| **v == Verdict::Hwe).count(),
        n_retained: kept.len(),
    };
    Ok((matrix.select_variants(&kept), report))
}

fn same_chromosome(a: &str, b: &str) -> bool {
    fn strip(c: &str) -> &str {
        if c.len() > 3 && c[..3].eq_ignore_ascii_case("chr") {
            &c[3..]
        } else {
            c
        }
    }
    strip(a) == strip(b)
}

/// One unit per annotated gene holding every variant inside its interval
/// (inclusive, same chromosome). Genes without variants are omitted.
pub fn build_gene_units(matrix: &GenotypeMatrix, annotation: &GeneAnnotation) -> Vec<UnitDefinition> {
    let variants = matrix.variants();
    annotation
        .rows
        .iter()
        .filter_map(|gene| {
            let members: Vec<usize> = (0..variants.len())
                .filter(|&j| {
                    let v = &variants[j];
                    same_chromosome(&v.chromosome, &gene.chromosome)
                        && gene.start_bp <= v.position
                        && v.position <= gene.end_bp
                })
                .collect();
            if members.is_empty() {
                None
            } else {
                UnitDefinition::new(gene.gene.clone(), members, variants.len()).ok()
            }
        })
        .collect()
}

pub const DEFAULT_HALF_WIDTH_BP: u64 = 20_000;

/// Variants within `half_width_bp` (inclusive) of the index variant on its
/// chromosome, the index included.
pub fn window_unit(matrix: &GenotypeMatrix, index_variant_id: &str, half_width_bp: u64) -> Result<UnitDefinition> {
    let idx = matrix
        .variant_index(index_variant_id)
        .ok_or_else(|| Error::UnknownVariant(index_variant_id.to_string()))?;
    let index = &matrix.variants()[idx];
    let members: Vec<usize> = matrix
        .variants()
        .iter()
        .enumerate()
        .filter(|(_, v)| {
            same_chromosome(&v.chromosome, &index.chromosome) && v.position.abs_diff(index.position) <= half_width_bp
        })
        .map(|(j, _)| j)
        .collect();
    UnitDefinition::new(
        format!("{index_variant_id}+-{half_width_bp}bp"),
        members,
        matrix.n_variants(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Status, VariantRecord};
    use crate::io::GeneInterval;
    use Dosage::*;

    fn ln_factorial(k: usize) -> f64 {
        statrs::function::gamma::ln_gamma(k as f64 + 1.0)
    }

    /// Levene-Haldane mass of `het` heterozygotes given `n` genotypes and
    /// `n_a` copies of allele A.
    fn lh_mass(n: usize, n_a: usize, het: usize) -> f64 {
        let n_b = 2 * n - n_a;
        let hom_a = (n_a - het) / 2;
        let hom_b = (n_b - het) / 2;
        (het as f64 * 2f64.ln() + ln_factorial(n) + ln_factorial(n_a) + ln_factorial(n_b)
            - ln_factorial(hom_a)
            - ln_factorial(het)
            - ln_factorial(hom_b)
            - ln_factorial(2 * n))
        .exp()
    }

    fn oracle_p(hom_a: usize, het: usize, hom_b: usize) -> f64 {
        let n = hom_a + het + hom_b;
        let n_a = 2 * hom_a + het;
        let n_rare = n_a.min(2 * n - n_a);
        let obs = lh_mass(n, n_a, het);
        (0..=n_rare)
            .filter(|h| h % 2 == n_rare % 2)
            .map(|h| lh_mass(n, n_a, h))
            .filter(|&m| m <= obs * (1.0 + 1e-9))
            .sum()
    }

    #[test]
    fn monomorphic_is_one() {
        assert_eq!(hwe_exact_test(0, 0, 100).unwrap(), 1.0);
        assert_eq!(hwe_exact_test(100, 0, 0).unwrap(), 1.0);
    }

    #[test]
    fn small_table_matches_enumeration() {
        let p = hwe_exact_test(1, 2, 1).unwrap();
        let oracle = oracle_p(1, 2, 1);
        assert!((p - oracle).abs() < 1e-12, "{p} vs {oracle}");
        // het = 2 is the mode among {0, 2, 4}: P = 1.
        assert!((p - 1.0).abs() < 1e-12);
        for (a, h, b) in [(3, 1, 6), (0, 7, 3), (10, 2, 30), (5, 20, 1), (0, 1, 50)] {
            let p = hwe_exact_test(a, h, b).unwrap();
            let oracle = oracle_p(a as usize, h as usize, b as usize);
            assert!((p - oracle).abs() < 1e-10, "({a},{h},{b}): {p} vs {oracle}");
        }
    }

    #[test]
    fn perfect_proportions_give_one() {
        assert!((hwe_exact_test(25, 50, 25).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_counts_rejected() {
        assert!(matches!(hwe_exact_test(-1, 2, 3), Err(Error::NegativeCount)));
    }

    #[test]
    fn mass_sums_to_one() {
        for (n, n_a) in [(4, 4), (50, 17), (200, 150), (1000, 37)] {
            let n_rare = n_a.min(2 * n - n_a);
            let total: f64 = (0..=n_rare)
                .filter(|h| h % 2 == n_rare % 2)
                .map(|h| lh_mass(n, n_a, h))
                .sum();
            assert!((total - 1.0).abs() < 1e-10, "n={n} n_a={n_a}: {total}");
            let dist: f64 = het_distribution(n, n_rare).iter().sum();
            assert!((dist - 1.0).abs() < 1e-12);
        }
    }

    fn variant(id: &str, chrom: &str, pos: u64) -> VariantRecord {
        VariantRecord::new(id, chrom, pos, "G", "A").unwrap()
    }

    /// 100 controls per column with the given genotype counts (hom A1, het,
    /// hom A2, missing).
    fn column(counts: (usize, usize, usize, usize)) -> Vec<Dosage> {
        let mut c = Vec::new();
        c.extend(std::iter::repeat_n(Two, counts.0));
        c.extend(std::iter::repeat_n(One, counts.1));
        c.extend(std::iter::repeat_n(Zero, counts.2));
        c.extend(std::iter::repeat_n(Missing, counts.3));
        c
    }

    #[test]
    fn qc_precedence_and_counts() {
        // v0 clean, v1 6% missing, v2 out of HWE, v3 duplicate of v0 id.
        let cols = [
            column((1, 18, 81, 0)),
            column((1, 18, 75, 6)),
            column((10, 0, 90, 0)),
            column((10, 0, 86, 4)),
        ];
        let variants = vec![
            variant("a", "1", 1),
            variant("b", "1", 2),
            variant("c", "1", 3),
            variant("a", "1", 4),
        ];
        let m = GenotypeMatrix::from_calls(100, variants, cols.concat()).unwrap();
        let ph = PhenotypeVector::new(vec![Status::Control; 100]);
        let p_hwe = hwe_exact_test(10, 0, 90).unwrap();
        assert!(p_hwe < 1e-4);
        let (out, report) = run_qc(&m, &ph, &QcConfig::default()).unwrap();
        assert_eq!(
            report,
            QcReport {
                n_input_variants: 4,
                n_removed_missing: 1,
                n_removed_hwe: 1,
                n_removed_duplicate: 1,
                n_retained: 1,
            }
        );
        assert_eq!(out.variants()[0].id, "a");
        let (again, report2) = run_qc(&out, &ph, &QcConfig::default()).unwrap();
        assert_eq!(again, out);
        assert_eq!(report2.n_retained, 1);
    }

    #[test]
    fn hwe_threshold_boundary() {
        // Find a control table with 5e-5 <= P < 1e-4: removed at the default
        // threshold, kept at 1e-5.
        let table = (0..=30)
            .flat_map(|hom| (0..=60).map(move |het| (hom, het)))
            .find(|&(hom, het)| {
                let p = hwe_exact_test(hom, het, 200 - hom - het).unwrap();
                (5e-5..1e-4).contains(&p)
            })
            .expect("a table near the threshold");
        let col = column((table.0 as usize, table.1 as usize, (200 - table.0 - table.1) as usize, 0));
        let m = GenotypeMatrix::from_calls(200, vec![variant("x", "1", 1)], col).unwrap();
        let ph = PhenotypeVector::new(vec![Status::Control; 200]);
        let (_, r) = run_qc(&m, &ph, &QcConfig::default()).unwrap();
        assert_eq!(r.n_removed_hwe, 1);
        let lenient = QcConfig {
            hwe_p_threshold: 1e-5,
            ..QcConfig::default()
        };
        assert_eq!(run_qc(&m, &ph, &lenient).unwrap().1.n_retained, 1);
    }

    #[test]
    fn hwe_uses_controls_only_by_default() {
        // Cases are all homozygous minor, controls in HWE.
        let mut col = column((1, 18, 81, 0));
        col.extend(std::iter::repeat_n(Two, 40));
        let m = GenotypeMatrix::from_calls(140, vec![variant("x", "1", 1)], col).unwrap();
        let mut labels = vec![Status::Control; 100];
        labels.extend(vec![Status::Case; 40]);
        let ph = PhenotypeVector::new(labels);
        assert_eq!(run_qc(&m, &ph, &QcConfig::default()).unwrap().1.n_retained, 1);
        let all = QcConfig {
            hwe_in_controls_only: false,
            ..QcConfig::default()
        };
        assert_eq!(run_qc(&m, &ph, &all).unwrap().1.n_removed_hwe, 1);
    }

    #[test]
    fn pass_through_thresholds() {
        let m = GenotypeMatrix::from_calls(4, vec![variant("x", "1", 1)], vec![Missing, Missing, Missing, Two]).unwrap();
        let ph = PhenotypeVector::blocked(2, 2);
        let open = QcConfig {
            max_missing_rate: 1.0,
            hwe_p_threshold: 0.0,
            hwe_in_controls_only: true,
        };
        assert_eq!(run_qc(&m, &ph, &open).unwrap().1.n_retained, 1);
    }

    #[test]
    fn gene_units() {
        let variants = vec![
            variant("r1", "8", 143_751_500),
            variant("r2", "8", 143_760_000),
            variant("r3", "chr8", 143_764_000),
            variant("r4", "9", 143_755_000),
            variant("r5", "8", 200),
        ];
        let m = GenotypeMatrix::from_calls(1, variants, vec![Zero; 5]).unwrap();
        let ann = GeneAnnotation {
            rows: vec![
                GeneInterval {
                    gene: "PSCA".into(),
                    chromosome: "8".into(),
                    start_bp: 143_751_000,
                    end_bp: 143_764_000,
                },
                GeneInterval {
                    gene: "EMPTY".into(),
                    chromosome: "2".into(),
                    start_bp: 0,
                    end_bp: 10,
                },
            ],
        };
        let units = build_gene_units(&m, &ann);
        assert_eq!(units.len(), 1);
        assert_eq!(units[0].name, "PSCA");
        assert_eq!(units[0].members(), &[0, 1, 2]);
        assert!(build_gene_units(&m, &GeneAnnotation::default()).is_empty());
    }

    #[test]
    fn windows() {
        let variants = vec![
            variant("idx", "1", 0),
            variant("b", "1", 19_999),
            variant("c", "1", 20_001),
            variant("d", "2", 10),
        ];
        let m = GenotypeMatrix::from_calls(1, variants, vec![Zero; 4]).unwrap();
        assert_eq!(window_unit(&m, "idx", 20_000).unwrap().members(), &[0, 1]);
        assert_eq!(window_unit(&m, "idx", 0).unwrap().members(), &[0]);
        assert_eq!(window_unit(&m, "c", 20_000).unwrap().members(), &[1, 2]);
        assert!(matches!(window_unit(&m, "zzz", 5), Err(Error::UnknownVariant(_))));
    }

    #[test]
    fn window_from_dense_locus() {
        // 235 variants spaced 1 kb apart; a 20 kb half-width keeps 41, and a
        // 7 kb half-width keeps 15.
        let variants: Vec<VariantRecord> = (0..235).map(|i| variant(&format!("v{i}"), "10", i * 1000)).collect();
        let m = GenotypeMatrix::from_calls(1, variants, vec![Zero; 235]).unwrap();
        assert_eq!(window_unit(&m, "v117", 20_000).unwrap().len(), 41);
        assert_eq!(window_unit(&m, "v117", 7_000).unwrap().len(), 15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn hwe_symmetric_and_bounded(a in 0i64..60, h in 0i64..60, b in 0i64..60) {
                prop_assume!(a + h + b > 0);
                let p = hwe_exact_test(a, h, b).unwrap();
                prop_assert_eq!(p, hwe_exact_test(b, h, a).unwrap());
                prop_assert!(p > 0.0 && p <= 1.0);
            }
        }
    }
}
