#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use jointsnv::data::{Dosage, GenotypeMatrix, PhenotypeVector, VariantRecord};
use jointsnv::io::write_bed_bim_fam;
use jointsnv::sim::{generate_replicate, SimScenario};

pub const GENES: [&str; 3] = ["CAUSAL", "NULLA", "NULLB"];

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_jointsnv"))
}

pub fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().expect("run jointsnv")
}

fn gene_block(seed: u64, or_het: f64, or_hom: f64, n_per_class: usize) -> GenotypeMatrix {
    let s = SimScenario {
        dataset_id: "gene".into(),
        or_het,
        or_hom,
        maf: 0.05,
        ld_r: 0.8,
        n_pairs: 3,
        n_cases: n_per_class,
        n_controls: n_per_class,
        n_replicates: 1,
        seed,
    };
    generate_replicate(&s, 0).unwrap().0
}

/// Three genes of six variants each on chromosome 7: the first carries
/// causal variants (odds ratios 2 / 4), the other two none. Cases first.
pub fn three_gene_dataset(seed: u64, n_per_class: usize) -> (GenotypeMatrix, PhenotypeVector, String) {
    let blocks = [
        gene_block(seed, 2.0, 4.0, n_per_class),
        gene_block(seed.wrapping_mul(31).wrapping_add(1), 1.0, 1.0, n_per_class),
        gene_block(seed.wrapping_mul(31).wrapping_add(2), 1.0, 1.0, n_per_class),
    ];
    let n = 2 * n_per_class;
    let mut calls: Vec<Dosage> = Vec::new();
    let mut variants = Vec::new();
    let mut tsv = String::from("gene\tchromosome\tstart\tend\n");
    for (g, block) in blocks.iter().enumerate() {
        let start = 1_000_000 * (g as u64 + 1);
        for j in 0..block.n_variants() {
            calls.extend_from_slice(block.column_calls(j).unwrap());
            let id = format!("{}_{}", GENES[g], block.variants()[j].id);
            variants.push(VariantRecord::new(id, "7", start + 1000 * j as u64, "A", "G").unwrap());
        }
        tsv.push_str(&format!("{}\t7\t{}\t{}\n", GENES[g], start, start + 20_000));
    }
    let matrix = GenotypeMatrix::from_calls(n, variants, calls).unwrap();
    (matrix, PhenotypeVector::blocked(n_per_class, n_per_class), tsv)
}

/// Writes the dataset as `<dir>/genes.bed/.bim/.fam` plus `<dir>/genes.tsv`.
pub fn write_three_gene_dataset(dir: &Path, seed: u64, n_per_class: usize) -> (PathBuf, PathBuf) {
    let (m, ph, tsv) = three_gene_dataset(seed, n_per_class);
    let prefix = dir.join("genes");
    write_bed_bim_fam(&m, &ph, &prefix).unwrap();
    let annotation = dir.join("genes.tsv");
    std::fs::write(&annotation, tsv).unwrap();
    (prefix, annotation)
}

/// Parses an assoc CSV into (unit, method, p_value) rows.
pub fn parse_assoc(path: &Path) -> Vec<(String, String, f64)> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].to_string(), r[1].to_string(), r[3].parse().unwrap_or(f64::NAN))
        })
        .collect()
}
