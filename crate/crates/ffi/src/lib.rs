//! C interface to `jointsnv`.
//!
//! Datasets are opaque handles created by `jsnv_dataset_open_*` or
//! `jsnv_simulate_replicate` and released with `jsnv_dataset_free`. Every
//! fallible function returns a [`JsnvStatus`]; on failure a description is
//! available from [`jsnv_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use jointsnv::data::UnitDefinition;
use jointsnv::io::PlinkData;
use jointsnv::perm::PermutationPlan;
use jointsnv::pipeline::{load_for_testing, InputFormat};
use jointsnv::sim::{generate_replicate, SimScenario};
use jointsnv::stats::{run_methods, Method, TestConfig};
use jointsnv::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JsnvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Data = 5,
    Statistics = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JsnvMethod {
    Sbbt = 0,
    Hotelling = 1,
    Fisher = 2,
    Skat = 3,
    Skato = 4,
    Sumstat = 5,
}

impl From<JsnvMethod> for Method {
    fn from(m: JsnvMethod) -> Method {
        match m {
            JsnvMethod::Sbbt => Method::Sbbt,
            JsnvMethod::Hotelling => Method::Hotelling,
            JsnvMethod::Fisher => Method::Fisher,
            JsnvMethod::Skat => Method::Skat,
            JsnvMethod::Skato => Method::Skato,
            JsnvMethod::Sumstat => Method::Sumstat,
        }
    }
}

/// Result of one test. `n_permutations` is 0 for analytic P-values.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct JsnvTestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_variants: usize,
    pub n_permutations: usize,
    pub clamped: bool,
}

/// Simulation scenario: `n_pairs` causal variants, each with one marker in
/// LD `ld_r`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JsnvScenario {
    pub or_het: f64,
    pub or_hom: f64,
    pub maf: f64,
    pub ld_r: f64,
    pub n_pairs: usize,
    pub n_cases: usize,
    pub n_controls: usize,
    pub seed: u64,
}

/// Opaque dataset handle.
pub struct JsnvDataset {
    data: PlinkData,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> JsnvStatus {
    match e {
        Error::Io { .. } => JsnvStatus::Io,
        Error::Parse { .. } | Error::NotABed(_) | Error::UnsupportedMode { .. } | Error::BedSize { .. } => {
            JsnvStatus::Parse
        }
        Error::AllMissing { .. }
        | Error::NoCases
        | Error::NoControls
        | Error::DimensionMismatch(_)
        | Error::InvalidVariant(_)
        | Error::InvalidUnit { .. }
        | Error::ImputedNotSerializable
        | Error::UnknownVariant(_) => JsnvStatus::Data,
        Error::InsufficientSamples(_) | Error::SingularCovariance | Error::TooFewPermutations { .. } => {
            JsnvStatus::Statistics
        }
        _ => JsnvStatus::InvalidArgument,
    }
}

/// Runs `body`, converting errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), (JsnvStatus, String)>) -> JsnvStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => JsnvStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            JsnvStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (JsnvStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (JsnvStatus, String) {
    (JsnvStatus::NullPointer, format!("{what} is null"))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, (JsnvStatus, String)> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (JsnvStatus::InvalidArgument, "path is not UTF-8".to_string()))?;
    Ok(PathBuf::from(s))
}

unsafe fn open(prefix: *const c_char, format: InputFormat, out: *mut *mut JsnvDataset) -> JsnvStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let prefix = path_arg(prefix)?;
        let data = load_for_testing(&prefix, format).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(JsnvDataset { data }));
        Ok(())
    })
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn jsnv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Opens `<prefix>.bed/.bim/.fam`; dosages count each variant's minor allele.
///
/// # Safety
/// `prefix` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jsnv_dataset_open_bed(prefix: *const c_char, out: *mut *mut JsnvDataset) -> JsnvStatus {
    open(prefix, InputFormat::Binary, out)
}

/// Opens `<prefix>.ped/.map`.
///
/// # Safety
/// As [`jsnv_dataset_open_bed`].
#[no_mangle]
pub unsafe extern "C" fn jsnv_dataset_open_ped(prefix: *const c_char, out: *mut *mut JsnvDataset) -> JsnvStatus {
    open(prefix, InputFormat::Text, out)
}

/// Releases a dataset; null is ignored.
///
/// # Safety
/// `dataset` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn jsnv_dataset_free(dataset: *mut JsnvDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// # Safety
/// `dataset` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn jsnv_dataset_n_samples(dataset: *const JsnvDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.data.genotypes.n_samples())
}

/// # Safety
/// `dataset` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn jsnv_dataset_n_variants(dataset: *const JsnvDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.data.genotypes.n_variants())
}

/// # Safety
/// `dataset` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn jsnv_dataset_n_cases(dataset: *const JsnvDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.data.phenotype.n_cases())
}

/// Minor-allele dosage of one sample at one variant; NaN when missing.
///
/// # Safety
/// `dataset` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jsnv_dataset_dosage(
    dataset: *const JsnvDataset,
    sample: usize,
    variant: usize,
    out: *mut f64,
) -> JsnvStatus {
    guard(|| {
        let d = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let g = &d.data.genotypes;
        if sample >= g.n_samples() || variant >= g.n_variants() {
            return Err((JsnvStatus::InvalidArgument, format!("index ({sample}, {variant}) out of range")));
        }
        *out = g.value(sample, variant);
        Ok(())
    })
}

/// Tests the variants at `indices` with one method. Missing genotypes are
/// mean-imputed. `n_permutations` is ignored by analytic methods.
///
/// # Safety
/// `dataset` must be a live handle, `indices` must point to `n_indices`
/// values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jsnv_test_unit(
    dataset: *const JsnvDataset,
    indices: *const usize,
    n_indices: usize,
    method: JsnvMethod,
    seed: u64,
    n_permutations: usize,
    out: *mut JsnvTestResult,
) -> JsnvStatus {
    guard(|| {
        let d = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        if indices.is_null() || out.is_null() {
            return Err(null("indices or out"));
        }
        let members = std::slice::from_raw_parts(indices, n_indices).to_vec();
        let g = &d.data.genotypes;
        let unit = UnitDefinition::new("unit", members, g.n_variants()).map_err(lib_err)?;
        let matrix = g.unit_matrix(&unit).map_err(lib_err)?;
        let method: Method = method.into();
        let b = if method.uses_permutations() { n_permutations } else { n_permutations.max(1) };
        let plan = PermutationPlan::for_phenotype(seed, b, &d.data.phenotype).map_err(lib_err)?;
        let r = run_methods(&matrix, &d.data.phenotype, &[method], &plan, &TestConfig::default())
            .pop()
            .expect("one result")
            .map_err(lib_err)?;
        *out = JsnvTestResult {
            statistic: r.statistic,
            p_value: r.p_value,
            n_variants: r.n_variants,
            n_permutations: r.n_permutations.unwrap_or(0),
            clamped: r.clamped,
        };
        Ok(())
    })
}

/// Exact Hardy-Weinberg test P-value for the genotype counts.
///
/// # Safety
/// `out_p` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jsnv_hwe_exact(n_hom_minor: i64, n_het: i64, n_hom_major: i64, out_p: *mut f64) -> JsnvStatus {
    guard(|| {
        if out_p.is_null() {
            return Err(null("out_p"));
        }
        *out_p = jointsnv::qc::hwe_exact_test(n_hom_minor, n_het, n_hom_major).map_err(lib_err)?;
        Ok(())
    })
}

/// Fisher's combination of `k` P-values: statistic and chi-square P-value.
///
/// # Safety
/// `p_values` must point to `k` values; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn jsnv_fisher_combine(
    p_values: *const f64,
    k: usize,
    out_statistic: *mut f64,
    out_p: *mut f64,
) -> JsnvStatus {
    guard(|| {
        if p_values.is_null() || out_statistic.is_null() || out_p.is_null() {
            return Err(null("argument"));
        }
        let ps = std::slice::from_raw_parts(p_values, k);
        if k == 0 || ps.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err((
                JsnvStatus::InvalidArgument,
                "need at least one P-value, all in [0, 1]".into(),
            ));
        }
        let (x, p, _) = jointsnv::stats::fisher::combine_p_values(ps);
        *out_statistic = x;
        *out_p = p;
        Ok(())
    })
}

/// Generates replicate `replicate` of `scenario` as a new dataset: cases
/// first, columns causal variants then markers.
///
/// # Safety
/// `scenario` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn jsnv_simulate_replicate(
    scenario: *const JsnvScenario,
    replicate: usize,
    out: *mut *mut JsnvDataset,
) -> JsnvStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let scenario = SimScenario {
            dataset_id: "ffi".into(),
            or_het: s.or_het,
            or_hom: s.or_hom,
            maf: s.maf,
            ld_r: s.ld_r,
            n_pairs: s.n_pairs,
            n_cases: s.n_cases,
            n_controls: s.n_controls,
            n_replicates: replicate + 1,
            seed: s.seed,
        };
        let (genotypes, phenotype) = generate_replicate(&scenario, replicate).map_err(lib_err)?;
        let samples = (0..genotypes.n_samples()).map(jointsnv::io::SampleId::numbered).collect();
        *out = Box::into_raw(Box::new(JsnvDataset {
            data: PlinkData {
                genotypes,
                phenotype,
                samples,
                n_dropped_missing_phenotype: 0,
            },
        }));
        Ok(())
    })
}
