use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use jointsnv::io::results::write_assoc_csv;
use jointsnv::io::{load_gene_annotation, with_extension, write_plink_binary, SampleId};
use jointsnv::pipeline::{load_for_testing, read_fileset, run_assoc, AssocSettings, InputFormat};
use jointsnv::plot::{points_from_outcomes, read_power_csv, write_power_plots};
use jointsnv::qc::{build_gene_units, run_qc, window_unit, QcConfig};
use jointsnv::sim::{
    builtin_scenarios, generate_replicate, null_scenarios, run_power, write_power_csv, PowerConfig, ScenarioOutcome,
    SimScenario, DEFAULT_SEED,
};
use jointsnv::stats::{parse_methods, DomainMass, Method, TestConfig, WeightScheme};
use jointsnv::Error;

/// Joint-SNV association testing, QC and power simulation.
#[derive(Parser, Debug)]
#[command(name = "jointsnv", version, about)]
pub struct Cli {
    /// TOML file with default settings; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads for all parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for permutations and simulation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Filter variants by missing rate and HWE, dropping duplicate ids.
    Qc(QcArgs),
    /// Test gene, window or whole-file units for association.
    Assoc(AssocArgs),
    /// Write simulated replicates as PLINK binary filesets.
    Simulate(SimulateArgs),
    /// Estimate per-method power on simulated scenarios.
    Power(PowerArgs),
    /// Render power curves from an existing power CSV.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct InputArgs {
    /// PLINK binary fileset prefix (.bed/.bim/.fam).
    #[arg(long, value_name = "PREFIX")]
    bfile: Option<PathBuf>,
    /// PLINK text fileset prefix (.ped/.map).
    #[arg(long, value_name = "PREFIX")]
    file: Option<PathBuf>,
}

impl InputArgs {
    fn resolve(&self) -> (PathBuf, InputFormat, Vec<PathBuf>) {
        match (&self.bfile, &self.file) {
            (Some(p), _) => (
                p.clone(),
                InputFormat::Binary,
                ["bed", "bim", "fam"].iter().map(|e| with_extension(p, e)).collect(),
            ),
            (None, Some(p)) => (
                p.clone(),
                InputFormat::Text,
                ["ped", "map"].iter().map(|e| with_extension(p, e)).collect(),
            ),
            (None, None) => unreachable!("clap enforces one input"),
        }
    }
}

#[derive(Args, Debug)]
struct QcArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Output prefix for the filtered fileset; qc_report.csv goes beside it.
    #[arg(long, value_name = "PREFIX")]
    out: PathBuf,
    /// Remove variants with a missing rate above this (default 0.05).
    #[arg(long)]
    max_missing: Option<f64>,
    /// Remove variants with HWE exact P below this (default 1e-4).
    #[arg(long)]
    hwe_p: Option<f64>,
    /// Compute HWE in all samples instead of controls only.
    #[arg(long)]
    hwe_all_samples: bool,
}

#[derive(Args, Debug)]
struct TestArgs {
    /// Comma-separated methods: sbbt,hotelling,fisher,skat,skato,sumstat or all.
    #[arg(long)]
    methods: Option<String>,
    /// Permutations per test (default 1000).
    #[arg(long)]
    permutations: Option<usize>,
    /// SKAT weights.
    #[arg(long, value_enum)]
    weights: Option<WeightsArg>,
    /// Combine SKAT-O as (1 - rho) Q_skat + Q_burden.
    #[arg(long)]
    skato_unscaled_burden: bool,
    /// Null mass of the S-BBT rejection domain.
    #[arg(long, value_enum)]
    sbbt_domain: Option<DomainArg>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum WeightsArg {
    /// Beta(1, 25) density of the MAF.
    Beta,
    Flat,
}

#[derive(Clone, Copy, Debug, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum DomainArg {
    Factorized,
    Joint,
}

#[derive(Args, Debug)]
struct AssocArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Gene annotation TSV (gene, chromosome, start, end): one unit per gene.
    #[arg(long, value_name = "TSV", conflicts_with = "index")]
    genes: Option<PathBuf>,
    /// Index variant id: one unit of all variants within --window-kb.
    #[arg(long)]
    index: Option<String>,
    /// Window half-width in kb around --index (default 20).
    #[arg(long, requires = "index")]
    window_kb: Option<f64>,
    #[command(flatten)]
    tests: TestArgs,
    /// Output CSV.
    #[arg(long, default_value = "assoc.csv")]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Builtin {
    Table1,
    Null,
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    /// Built-in scenario set.
    #[arg(long, value_enum, conflicts_with = "scenarios")]
    builtin: Option<Builtin>,
    /// TOML file with [[scenario]] tables.
    #[arg(long, value_name = "FILE")]
    scenarios: Option<PathBuf>,
    /// Keep only these dataset ids (comma-separated).
    #[arg(long)]
    dataset: Option<String>,
    /// Replicates per scenario.
    #[arg(long)]
    replicates: Option<usize>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    scenarios: ScenarioArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PowerArgs {
    #[command(flatten)]
    scenarios: ScenarioArgs,
    #[command(flatten)]
    tests: TestArgs,
    /// Significance level (default 0.05).
    #[arg(long)]
    alpha: Option<f64>,
    /// Test the marker columns only.
    #[arg(long)]
    markers_only: bool,
    /// Output CSV.
    #[arg(long, default_value = "power.csv")]
    out: PathBuf,
    /// Directory for SVG power curves.
    #[arg(long, value_name = "DIR")]
    plot: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Power CSV written by `power`.
    #[arg(long)]
    input: PathBuf,
    /// Directory for SVG power curves.
    #[arg(long)]
    out: PathBuf,
}

/// Keys accepted in the --config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    threads: Option<usize>,
    permutations: Option<usize>,
    methods: Option<String>,
    alpha: Option<f64>,
    max_missing: Option<f64>,
    hwe_p: Option<f64>,
    hwe_all_samples: Option<bool>,
    window_kb: Option<f64>,
    markers_only: Option<bool>,
    skato_unscaled_burden: Option<bool>,
    replicates: Option<usize>,
    weights: Option<WeightsArg>,
    sbbt_domain: Option<DomainArg>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    scenario: Vec<SimScenario>,
}

enum Failure {
    /// Input file absent: exit 2, nothing written.
    MissingInput(PathBuf),
    Run(Error),
    /// Outputs were written but some items failed.
    Partial(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

type CliResult = std::result::Result<(), Failure>;

pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::MissingInput(p)) => {
            eprintln!("error: input not found: {}", p.display());
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Partial(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn require_inputs<'a>(paths: impl IntoIterator<Item = &'a PathBuf>) -> CliResult {
    for p in paths {
        if !p.exists() {
            return Err(Failure::MissingInput(p.clone()));
        }
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    let file = match &cli.config {
        Some(path) => {
            require_inputs([path])?;
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            toml::from_str::<FileConfig>(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    if let Some(n) = cli.threads.or(file.threads) {
        if n == 0 {
            return Err(Error::InvalidConfig("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    }
    let seed = cli.seed.or(file.seed);
    match cli.command {
        Command::Qc(a) => cmd_qc(a, &file),
        Command::Assoc(a) => cmd_assoc(a, &file, seed),
        Command::Simulate(a) => cmd_simulate(a, &file, seed),
        Command::Power(a) => cmd_power(a, &file, seed),
        Command::Report(a) => cmd_report(a),
    }
}

fn cmd_qc(a: QcArgs, file: &FileConfig) -> CliResult {
    let (prefix, format, inputs) = a.input.resolve();
    require_inputs(&inputs)?;
    let defaults = QcConfig::default();
    let config = QcConfig {
        max_missing_rate: a.max_missing.or(file.max_missing).unwrap_or(defaults.max_missing_rate),
        hwe_p_threshold: a.hwe_p.or(file.hwe_p).unwrap_or(defaults.hwe_p_threshold),
        hwe_in_controls_only: !(a.hwe_all_samples || file.hwe_all_samples.unwrap_or(false)),
    };
    config.validate()?;

    let data = read_fileset(&prefix, format)?;
    let (filtered, report) = run_qc(&data.genotypes, &data.phenotype, &config)?;
    ensure_parent(&a.out)?;
    write_plink_binary(&filtered, &data.phenotype, &data.samples, &a.out)?;
    let report_path = a.out.parent().unwrap_or(Path::new("")).join("qc_report.csv");
    fs::write(&report_path, report.to_csv()).map_err(|e| Error::io(&report_path, e))?;
    log::info!(
        "qc: {} of {} variants retained",
        report.n_retained,
        report.n_input_variants
    );
    Ok(())
}

fn ensure_parent(path: &Path) -> Result<(), Error> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        _ => Ok(()),
    }
}

fn test_config(t: &TestArgs, file: &FileConfig) -> Result<(Vec<Method>, usize, TestConfig), Error> {
    let methods = match t.methods.as_ref().or(file.methods.as_ref()) {
        Some(list) => parse_methods(list)?,
        None => Method::ALL.to_vec(),
    };
    let permutations = t.permutations.or(file.permutations).unwrap_or(1000);
    if permutations == 0 {
        return Err(Error::InvalidConfig("--permutations must be positive".into()));
    }
    let mut config = TestConfig::default();
    if let Some(w) = t.weights.or(file.weights) {
        config.weights = match w {
            WeightsArg::Beta => WeightScheme::default(),
            WeightsArg::Flat => WeightScheme::Flat,
        };
    }
    if let Some(d) = t.sbbt_domain.or(file.sbbt_domain) {
        config.sbbt.domain = match d {
            DomainArg::Factorized => DomainMass::Factorized,
            DomainArg::Joint => DomainMass::Joint,
        };
    }
    config.skato_unscaled_burden = t.skato_unscaled_burden || file.skato_unscaled_burden.unwrap_or(false);
    Ok((methods, permutations, config))
}

fn cmd_assoc(a: AssocArgs, file: &FileConfig, seed: Option<u64>) -> CliResult {
    let (prefix, format, mut inputs) = a.input.resolve();
    inputs.extend(a.genes.iter().cloned());
    require_inputs(&inputs)?;
    let (methods, n_permutations, tests) = test_config(&a.tests, file)?;

    let data = load_for_testing(&prefix, format)?;
    let units = if let Some(genes) = &a.genes {
        let annotation = load_gene_annotation(genes)?;
        let units = build_gene_units(&data.genotypes, &annotation);
        let skipped = annotation.rows.len() - units.len();
        if skipped > 0 {
            log::warn!("{skipped} annotated genes contain no variants and were skipped");
        }
        units
    } else if let Some(index) = &a.index {
        let kb = a.window_kb.or(file.window_kb).unwrap_or(20.0);
        if !(kb >= 0.0 && kb.is_finite()) {
            return Err(Error::InvalidConfig(format!("--window-kb {kb} must be non-negative")).into());
        }
        vec![window_unit(&data.genotypes, index, (kb * 1000.0).round() as u64)?]
    } else {
        let name = prefix.file_name().map_or("all".into(), |s| s.to_string_lossy().into_owned());
        vec![data.genotypes.whole_unit(name)?]
    };

    let settings = AssocSettings {
        methods,
        seed: seed.unwrap_or(DEFAULT_SEED),
        n_permutations,
        tests,
    };
    let rows = run_assoc(&data.genotypes, &data.phenotype, &units, &settings)?;
    ensure_parent(&a.out)?;
    let out = fs::File::create(&a.out).map_err(|e| Error::io(&a.out, e))?;
    write_assoc_csv(std::io::BufWriter::new(out), &rows)?;
    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    if failed > 0 {
        return Err(Failure::Partial(format!("{failed} unit/method combinations failed (NA rows)")));
    }
    Ok(())
}

fn load_scenarios(a: &ScenarioArgs, file: &FileConfig, seed: Option<u64>) -> Result<Vec<SimScenario>, Failure> {
    let mut scenarios = if let Some(path) = &a.scenarios {
        require_inputs([path])?;
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let parsed: ScenarioFile =
            toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        let mut s = parsed.scenario;
        if let Some(seed) = seed {
            s.iter_mut().for_each(|x| x.seed = seed);
        }
        s
    } else {
        let seed = seed.unwrap_or(DEFAULT_SEED);
        match a.builtin.unwrap_or(Builtin::Table1) {
            Builtin::Table1 => builtin_scenarios(seed),
            Builtin::Null => null_scenarios(seed),
        }
    };
    if let Some(filter) = &a.dataset {
        let keep: Vec<&str> = filter.split(',').map(str::trim).collect();
        scenarios.retain(|s| keep.contains(&s.dataset_id.as_str()));
        if scenarios.is_empty() {
            return Err(Error::InvalidConfig(format!("no scenario matches --dataset {filter}")).into());
        }
    }
    if let Some(r) = a.replicates.or(file.replicates) {
        if r == 0 {
            return Err(Error::InvalidConfig("--replicates must be positive".into()).into());
        }
        scenarios.iter_mut().for_each(|s| s.n_replicates = r);
    }
    Ok(scenarios)
}

fn cmd_simulate(a: SimulateArgs, file: &FileConfig, seed: Option<u64>) -> CliResult {
    let mut scenarios = load_scenarios(&a.scenarios, file, seed)?;
    // Without an explicit count write one replicate per scenario.
    if a.scenarios.replicates.or(file.replicates).is_none() {
        scenarios.iter_mut().for_each(|s| s.n_replicates = 1);
    }
    for s in &scenarios {
        s.validate()?;
    }
    fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    for s in &scenarios {
        for r in 0..s.n_replicates {
            let (m, ph) = generate_replicate(s, r)?;
            let samples: Vec<SampleId> = (0..m.n_samples()).map(SampleId::numbered).collect();
            let prefix = a
                .out
                .join(format!("{}_{}v{}_r{}", s.dataset_id, s.n_cases, s.n_controls, r + 1));
            write_plink_binary(&m, &ph, &samples, &prefix)?;
        }
    }
    Ok(())
}

fn cmd_power(a: PowerArgs, file: &FileConfig, seed: Option<u64>) -> CliResult {
    let scenarios = load_scenarios(&a.scenarios, file, seed)?;
    let (methods, n_permutations, tests) = test_config(&a.tests, file)?;
    let config = PowerConfig {
        methods,
        alpha: a.alpha.or(file.alpha).unwrap_or(0.05),
        n_permutations,
        markers_only: a.markers_only || file.markers_only.unwrap_or(false),
        tests,
    };
    if !(0.0..=1.0).contains(&config.alpha) {
        return Err(Error::InvalidConfig(format!("--alpha {} outside [0, 1]", config.alpha)).into());
    }
    let outcomes: Vec<ScenarioOutcome> = scenarios
        .into_iter()
        .map(|s| {
            let r = run_power(&s, &config);
            match &r {
                Ok(_) => log::info!("{} {}v{} done", s.dataset_id, s.n_cases, s.n_controls),
                Err(e) => log::warn!("{} {}v{}: {e}", s.dataset_id, s.n_cases, s.n_controls),
            }
            (s, r)
        })
        .collect();
    ensure_parent(&a.out)?;
    let out = fs::File::create(&a.out).map_err(|e| Error::io(&a.out, e))?;
    write_power_csv(std::io::BufWriter::new(out), &outcomes)?;
    if let Some(dir) = &a.plot {
        write_power_plots(&points_from_outcomes(&outcomes), dir)?;
    }
    let failed = outcomes.iter().filter(|(_, r)| r.is_err()).count();
    if failed > 0 {
        return Err(Failure::Partial(format!("{failed} scenarios failed (ERROR rows)")));
    }
    Ok(())
}

fn cmd_report(a: ReportArgs) -> CliResult {
    require_inputs([&a.input])?;
    let points = read_power_csv(&a.input)?;
    for path in write_power_plots(&points, &a.out)? {
        println!("{}", path.display());
    }
    Ok(())
}
