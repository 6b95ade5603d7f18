//! C ABI for the pgmclust pipeline.
//!
//! All pipeline objects cross the boundary as opaque handles created and
//! destroyed by this library; every fallible call returns a [`PgmStatus`]
//! code and writes its result through an out-pointer. A thread-local message
//! buffer holds the detail text of the most recent failure on that thread,
//! readable with [`pgm_last_error_message`].
//!
//! No call panics across the boundary: Rust panics are caught and reported
//! as `PGM_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use pgmclust::clustering::{clustering_accuracy, ncut_cluster, symmetrize_affinity};
use pgmclust::data_io::load_dataset;
use pgmclust::gram::{build_gram_stack, spectral_decompose, GramStack};
use pgmclust::manifold::ProductGrassmannPoint;
use pgmclust::solvers::{
    build_laplacian, lappglrr_solve, pglrr_closed_form, CoefficientMatrix, LaplacianPair,
    SolverConfig,
};
use pgmclust::Error;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[allow(non_camel_case_types)]
pub enum PgmStatus {
    /// Success.
    PGM_STATUS_OK = 0,
    /// A required pointer argument was null.
    PGM_STATUS_NULL_POINTER = 1,
    /// An argument value was rejected before any computation.
    PGM_STATUS_INVALID_ARGUMENT = 2,
    /// Matrix or view dimensions are inconsistent.
    PGM_STATUS_DIMENSION = 3,
    /// Input data is numerically degenerate (e.g. rank-deficient frames).
    PGM_STATUS_DEGENERATE_INPUT = 4,
    /// An iterative numerical routine failed.
    PGM_STATUS_NUMERICAL = 5,
    /// File could not be read or written.
    PGM_STATUS_IO = 6,
    /// File exists but its contents are not in the expected format.
    PGM_STATUS_MALFORMED = 7,
    /// Unexpected internal failure (caught panic).
    PGM_STATUS_INTERNAL = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let sanitized: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> PgmStatus {
    match err {
        Error::Dimension(_) | Error::LengthMismatch { .. } | Error::InvalidK { .. } => {
            PgmStatus::PGM_STATUS_DIMENSION
        }
        Error::DegenerateInput(_) | Error::EmptyDataset(_) => PgmStatus::PGM_STATUS_DEGENERATE_INPUT,
        Error::NumericalFailure(_) => PgmStatus::PGM_STATUS_NUMERICAL,
        Error::MalformedFile { .. } | Error::Manifest(_) => PgmStatus::PGM_STATUS_MALFORMED,
        Error::Io { .. } => PgmStatus::PGM_STATUS_IO,
    }
}

fn fail(err: Error) -> PgmStatus {
    let code = status_of(&err);
    set_last_error(&err.to_string());
    code
}

/// Runs `f` with panics converted to `PGM_STATUS_INTERNAL`.
fn guarded(f: impl FnOnce() -> PgmStatus) -> PgmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => {
            set_last_error("internal panic");
            PgmStatus::PGM_STATUS_INTERNAL
        }
    }
}

macro_rules! require_nonnull {
    ($ptr:expr) => {
        if $ptr.is_null() {
            set_last_error(concat!(stringify!($ptr), " is null"));
            return PgmStatus::PGM_STATUS_NULL_POINTER;
        }
    };
}

/// Message text of the most recent failure on the calling thread. The pointer
/// stays valid until the next failing call on the same thread; never free it.
#[no_mangle]
pub extern "C" fn pgm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

unsafe fn path_arg<'a>(ptr: *const c_char) -> Result<&'a Path, PgmStatus> {
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(Path::new(s)),
        Err(_) => {
            set_last_error("path is not valid UTF-8");
            Err(PgmStatus::PGM_STATUS_INVALID_ARGUMENT)
        }
    }
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

/// A loaded multi-view dataset: the Grassmann points of every sample plus
/// optional ground-truth labels.
pub struct PgmDataset {
    samples: Vec<ProductGrassmannPoint>,
    labels: Option<Vec<usize>>,
}

/// Loads a dataset from a TOML manifest (see the pgmclust data_io docs for
/// the format). On success writes a new handle to `out`.
///
/// # Safety
/// `manifest_path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pgm_dataset_load(
    manifest_path: *const c_char,
    out: *mut *mut PgmDataset,
) -> PgmStatus {
    require_nonnull!(manifest_path);
    require_nonnull!(out);
    guarded(|| {
        let path = match path_arg(manifest_path) {
            Ok(p) => p,
            Err(code) => return code,
        };
        match load_dataset(path) {
            Ok((samples, labels)) => {
                *out = Box::into_raw(Box::new(PgmDataset { samples, labels }));
                PgmStatus::PGM_STATUS_OK
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of samples in the dataset.
///
/// # Safety
/// `dataset` must be a live handle from [`pgm_dataset_load`].
#[no_mangle]
pub unsafe extern "C" fn pgm_dataset_len(dataset: *const PgmDataset) -> usize {
    if dataset.is_null() {
        return 0;
    }
    (*dataset).samples.len()
}

/// Number of views per sample (0 for an empty or null dataset).
///
/// # Safety
/// `dataset` must be a live handle from [`pgm_dataset_load`].
#[no_mangle]
pub unsafe extern "C" fn pgm_dataset_n_views(dataset: *const PgmDataset) -> usize {
    if dataset.is_null() {
        return 0;
    }
    (*dataset)
        .samples
        .first()
        .map(|s| s.n_views())
        .unwrap_or(0)
}

/// Copies the dataset's ground-truth labels into `buf` (capacity `len`,
/// must equal the sample count). Fails with `PGM_STATUS_INVALID_ARGUMENT` if
/// the dataset carries no labels.
///
/// # Safety
/// `buf` must point to at least `len` writable u64 slots.
#[no_mangle]
pub unsafe extern "C" fn pgm_dataset_labels(
    dataset: *const PgmDataset,
    buf: *mut u64,
    len: usize,
) -> PgmStatus {
    require_nonnull!(dataset);
    require_nonnull!(buf);
    guarded(|| {
        let ds = &*dataset;
        let Some(labels) = ds.labels.as_ref() else {
            set_last_error("dataset has no labels");
            return PgmStatus::PGM_STATUS_INVALID_ARGUMENT;
        };
        if len != labels.len() {
            set_last_error("label buffer length does not match the sample count");
            return PgmStatus::PGM_STATUS_DIMENSION;
        }
        for (i, &l) in labels.iter().enumerate() {
            *buf.add(i) = l as u64;
        }
        PgmStatus::PGM_STATUS_OK
    })
}

/// Frees a dataset handle; null is ignored.
///
/// # Safety
/// `dataset` must be a handle from [`pgm_dataset_load`], freed at most once.
#[no_mangle]
pub unsafe extern "C" fn pgm_dataset_free(dataset: *mut PgmDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

// ---------------------------------------------------------------------------
// Gram kernel and Laplacian
// ---------------------------------------------------------------------------

/// The N×N product-manifold kernel Δ (with per-view parts), plus any labels
/// inherited from the dataset.
pub struct PgmGram {
    stack: GramStack,
    labels: Option<Vec<usize>>,
}

/// The geodesic-distance weight matrix W and graph Laplacian L = D − W.
pub struct PgmLaplacian {
    pair: LaplacianPair,
}

/// Builds the kernel stack Δ from a dataset.
///
/// # Safety
/// `dataset` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pgm_gram_build(
    dataset: *const PgmDataset,
    out: *mut *mut PgmGram,
) -> PgmStatus {
    require_nonnull!(dataset);
    require_nonnull!(out);
    guarded(|| {
        let ds = &*dataset;
        match build_gram_stack(&ds.samples) {
            Ok(stack) => {
                *out = Box::into_raw(Box::new(PgmGram {
                    stack,
                    labels: ds.labels.clone(),
                }));
                PgmStatus::PGM_STATUS_OK
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of samples covered by the kernel.
///
/// # Safety
/// `gram` must be a live handle from [`pgm_gram_build`].
#[no_mangle]
pub unsafe extern "C" fn pgm_gram_len(gram: *const PgmGram) -> usize {
    if gram.is_null() {
        return 0;
    }
    (*gram).stack.n_samples
}

/// Copies the summed kernel Δ row-major into `buf` (capacity `len` = N·N).
///
/// # Safety
/// `buf` must point to at least `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pgm_gram_total(
    gram: *const PgmGram,
    buf: *mut f64,
    len: usize,
) -> PgmStatus {
    require_nonnull!(gram);
    require_nonnull!(buf);
    guarded(|| copy_matrix(&(*gram).stack.total, buf, len))
}

/// Copies the ground-truth labels inherited from the dataset into `buf`
/// (capacity `len` = N). Fails with `PGM_STATUS_INVALID_ARGUMENT` when the
/// originating dataset carried no labels.
///
/// # Safety
/// `buf` must point to at least `len` writable u64 slots.
#[no_mangle]
pub unsafe extern "C" fn pgm_gram_labels(
    gram: *const PgmGram,
    buf: *mut u64,
    len: usize,
) -> PgmStatus {
    require_nonnull!(gram);
    require_nonnull!(buf);
    guarded(|| {
        let Some(labels) = (*gram).labels.as_ref() else {
            set_last_error("gram carries no labels");
            return PgmStatus::PGM_STATUS_INVALID_ARGUMENT;
        };
        if len != labels.len() {
            set_last_error("label buffer length does not match the sample count");
            return PgmStatus::PGM_STATUS_DIMENSION;
        }
        for (i, &l) in labels.iter().enumerate() {
            *buf.add(i) = l as u64;
        }
        PgmStatus::PGM_STATUS_OK
    })
}

/// Frees a gram handle; null is ignored.
///
/// # Safety
/// `gram` must be a handle from [`pgm_gram_build`], freed at most once.
#[no_mangle]
pub unsafe extern "C" fn pgm_gram_free(gram: *mut PgmGram) {
    if !gram.is_null() {
        drop(Box::from_raw(gram));
    }
}

/// Builds the distance-weight Laplacian from a dataset.
///
/// # Safety
/// `dataset` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pgm_laplacian_build(
    dataset: *const PgmDataset,
    out: *mut *mut PgmLaplacian,
) -> PgmStatus {
    require_nonnull!(dataset);
    require_nonnull!(out);
    guarded(|| match build_laplacian(&(*dataset).samples) {
        Ok(pair) => {
            *out = Box::into_raw(Box::new(PgmLaplacian { pair }));
            PgmStatus::PGM_STATUS_OK
        }
        Err(e) => fail(e),
    })
}

/// Frees a laplacian handle; null is ignored.
///
/// # Safety
/// `laplacian` must be a handle from [`pgm_laplacian_build`], freed at most once.
#[no_mangle]
pub unsafe extern "C" fn pgm_laplacian_free(laplacian: *mut PgmLaplacian) {
    if !laplacian.is_null() {
        drop(Box::from_raw(laplacian));
    }
}

// ---------------------------------------------------------------------------
// Solvers
// ---------------------------------------------------------------------------

/// Solver parameters; mirror of the library's SolverConfig. `lambda` weights
/// the fidelity term, `beta` the Laplacian regularizer.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PgmSolverConfig {
    pub lambda: f64,
    pub beta: f64,
    pub mu0: f64,
    pub mu_max: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub max_iters: usize,
}

impl From<PgmSolverConfig> for SolverConfig {
    fn from(c: PgmSolverConfig) -> Self {
        SolverConfig {
            lambda: c.lambda,
            beta: c.beta,
            mu0: c.mu0,
            mu_max: c.mu_max,
            rho: c.rho,
            epsilon: c.epsilon,
            max_iters: c.max_iters,
        }
    }
}

/// Default solver parameters for the given λ and β.
#[no_mangle]
pub extern "C" fn pgm_solver_config_default(lambda: f64, beta: f64) -> PgmSolverConfig {
    let c = SolverConfig::new(lambda, beta);
    PgmSolverConfig {
        lambda: c.lambda,
        beta: c.beta,
        mu0: c.mu0,
        mu_max: c.mu_max,
        rho: c.rho,
        epsilon: c.epsilon,
        max_iters: c.max_iters,
    }
}

/// The solved N×N coefficient matrix plus solver diagnostics.
pub struct PgmCoefficient {
    inner: CoefficientMatrix,
}

/// Solves the Laplacian-regularized model by ALM.
///
/// # Safety
/// `gram`, `laplacian`, `config`, and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pgm_solve_alm(
    gram: *const PgmGram,
    laplacian: *const PgmLaplacian,
    config: *const PgmSolverConfig,
    out: *mut *mut PgmCoefficient,
) -> PgmStatus {
    require_nonnull!(gram);
    require_nonnull!(laplacian);
    require_nonnull!(config);
    require_nonnull!(out);
    guarded(|| {
        let cfg: SolverConfig = (*config).into();
        match lappglrr_solve(&(*gram).stack, &(*laplacian).pair, &cfg) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(PgmCoefficient { inner }));
                PgmStatus::PGM_STATUS_OK
            }
            Err(e) => fail(e),
        }
    })
}

/// Solves the plain (β = 0) model through its spectral closed form.
/// `lambda` is the fidelity weight, as in [`pgm_solver_config_default`].
///
/// # Safety
/// `gram` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pgm_solve_closed_form(
    gram: *const PgmGram,
    lambda: f64,
    out: *mut *mut PgmCoefficient,
) -> PgmStatus {
    require_nonnull!(gram);
    require_nonnull!(out);
    guarded(|| {
        if !(lambda > 0.0) {
            set_last_error("lambda must be positive");
            return PgmStatus::PGM_STATUS_INVALID_ARGUMENT;
        }
        match spectral_decompose(&(*gram).stack) {
            Ok(dec) => {
                let inner = pglrr_closed_form(&dec, 1.0 / lambda);
                *out = Box::into_raw(Box::new(PgmCoefficient { inner }));
                PgmStatus::PGM_STATUS_OK
            }
            Err(e) => fail(e),
        }
    })
}

/// Side length N of the coefficient matrix.
///
/// # Safety
/// `coeff` must be a live handle from one of the solve calls.
#[no_mangle]
pub unsafe extern "C" fn pgm_coefficient_len(coeff: *const PgmCoefficient) -> usize {
    if coeff.is_null() {
        return 0;
    }
    (*coeff).inner.z.nrows()
}

/// Copies the coefficient matrix Z row-major into `buf` (capacity `len` = N·N).
///
/// # Safety
/// `buf` must point to at least `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pgm_coefficient_matrix(
    coeff: *const PgmCoefficient,
    buf: *mut f64,
    len: usize,
) -> PgmStatus {
    require_nonnull!(coeff);
    require_nonnull!(buf);
    guarded(|| copy_matrix(&(*coeff).inner.z, buf, len))
}

/// Iterations taken by the solver (0 for the closed form).
///
/// # Safety
/// `coeff` must be a live handle from one of the solve calls.
#[no_mangle]
pub unsafe extern "C" fn pgm_coefficient_iterations(coeff: *const PgmCoefficient) -> usize {
    if coeff.is_null() {
        return 0;
    }
    (*coeff).inner.iterations
}

/// 1 if the solver met its stopping criterion, 0 otherwise.
///
/// # Safety
/// `coeff` must be a live handle from one of the solve calls.
#[no_mangle]
pub unsafe extern "C" fn pgm_coefficient_converged(coeff: *const PgmCoefficient) -> i32 {
    if coeff.is_null() {
        return 0;
    }
    (*coeff).inner.converged as i32
}

/// Final ‖Z − J‖_∞ gap at solver exit (0 for the closed form).
///
/// # Safety
/// `coeff` must be a live handle from one of the solve calls.
#[no_mangle]
pub unsafe extern "C" fn pgm_coefficient_final_gap(coeff: *const PgmCoefficient) -> f64 {
    if coeff.is_null() {
        return f64::NAN;
    }
    (*coeff).inner.final_gap
}

/// Objective value at solver exit.
///
/// # Safety
/// `coeff` must be a live handle from one of the solve calls.
#[no_mangle]
pub unsafe extern "C" fn pgm_coefficient_objective(coeff: *const PgmCoefficient) -> f64 {
    if coeff.is_null() {
        return f64::NAN;
    }
    (*coeff).inner.objective
}

/// Frees a coefficient handle; null is ignored.
///
/// # Safety
/// `coeff` must be a handle from one of the solve calls, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn pgm_coefficient_free(coeff: *mut PgmCoefficient) {
    if !coeff.is_null() {
        drop(Box::from_raw(coeff));
    }
}

// ---------------------------------------------------------------------------
// Clustering
// ---------------------------------------------------------------------------

/// Spectral-clustering labels derived from a coefficient matrix.
pub struct PgmClustering {
    labels: Vec<usize>,
}

/// Clusters the coefficient matrix into `k` groups with normalized spectral
/// clustering; `seed` fixes the k-means initialization.
///
/// # Safety
/// `coeff` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pgm_cluster(
    coeff: *const PgmCoefficient,
    k: usize,
    seed: u64,
    out: *mut *mut PgmClustering,
) -> PgmStatus {
    require_nonnull!(coeff);
    require_nonnull!(out);
    guarded(|| {
        let affinity = symmetrize_affinity(&(*coeff).inner.z);
        match ncut_cluster(&affinity, k, seed) {
            Ok(labels) => {
                *out = Box::into_raw(Box::new(PgmClustering { labels }));
                PgmStatus::PGM_STATUS_OK
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of labeled samples.
///
/// # Safety
/// `clustering` must be a live handle from [`pgm_cluster`].
#[no_mangle]
pub unsafe extern "C" fn pgm_clustering_len(clustering: *const PgmClustering) -> usize {
    if clustering.is_null() {
        return 0;
    }
    (*clustering).labels.len()
}

/// Copies the cluster labels into `buf` (capacity `len` = sample count).
///
/// # Safety
/// `buf` must point to at least `len` writable u64 slots.
#[no_mangle]
pub unsafe extern "C" fn pgm_clustering_labels(
    clustering: *const PgmClustering,
    buf: *mut u64,
    len: usize,
) -> PgmStatus {
    require_nonnull!(clustering);
    require_nonnull!(buf);
    guarded(|| {
        let labels = &(*clustering).labels;
        if len != labels.len() {
            set_last_error("label buffer length does not match the sample count");
            return PgmStatus::PGM_STATUS_DIMENSION;
        }
        for (i, &l) in labels.iter().enumerate() {
            *buf.add(i) = l as u64;
        }
        PgmStatus::PGM_STATUS_OK
    })
}

/// Frees a clustering handle; null is ignored.
///
/// # Safety
/// `clustering` must be a handle from [`pgm_cluster`], freed at most once.
#[no_mangle]
pub unsafe extern "C" fn pgm_clustering_free(clustering: *mut PgmClustering) {
    if !clustering.is_null() {
        drop(Box::from_raw(clustering));
    }
}

/// Best-assignment clustering accuracy between two label vectors of equal
/// length; writes the value in [0, 1] to `out`.
///
/// # Safety
/// `pred` and `truth` must point to `len` readable u64 values each.
#[no_mangle]
pub unsafe extern "C" fn pgm_accuracy(
    pred: *const u64,
    truth: *const u64,
    len: usize,
    out: *mut f64,
) -> PgmStatus {
    require_nonnull!(pred);
    require_nonnull!(truth);
    require_nonnull!(out);
    guarded(|| {
        let pred: Vec<usize> = (0..len).map(|i| *pred.add(i) as usize).collect();
        let truth: Vec<usize> = (0..len).map(|i| *truth.add(i) as usize).collect();
        match clustering_accuracy(&pred, &truth) {
            Ok(acc) => {
                *out = acc;
                PgmStatus::PGM_STATUS_OK
            }
            Err(e) => fail(e),
        }
    })
}

unsafe fn copy_matrix(m: &nalgebra::DMatrix<f64>, buf: *mut f64, len: usize) -> PgmStatus {
    let (r, c) = m.shape();
    if len != r * c {
        set_last_error("buffer length does not match the matrix size");
        return PgmStatus::PGM_STATUS_DIMENSION;
    }
    for i in 0..r {
        for j in 0..c {
            *buf.add(i * c + j) = m[(i, j)];
        }
    }
    PgmStatus::PGM_STATUS_OK
}
