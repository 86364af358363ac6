//! C ABI for `rp_entropy`.
//!
//! Fallible calls return an [`RpStatus`]. The message of the last failure on
//! the calling thread is read back with [`rp_last_error`]. Handles are opaque
//! and owned by the caller until passed to their `_free` function.
//!
//! Matrices cross the boundary as row-major `double` arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rp_entropy::harness::{self, Command, ConfigSource, Overrides};
use rp_entropy::linalg::{CMatrix, Complex, RMatrix};
use rp_entropy::modular::{purify, DensityMatrix, PurifiedState};
use rp_entropy::positivity::gram::{check_psd_matrix, gram_matrix, PsdVerdict};
use rp_entropy::reflected::{self, SubsystemSplit};
use rp_entropy::{cft, fermion, random, Error};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RpStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad shape, index, domain or state.
    InvalidArgument = 2,
    /// Malformed or inconsistent configuration.
    Config = 3,
    /// The numerics broke down.
    Numerics = 4,
    /// A Rust panic was caught at the boundary.
    Panic = 5,
}

/// Summary of a positive-semidefiniteness check.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpPsd {
    pub passed: bool,
    pub min_eigenvalue: f64,
    pub spectral_norm: f64,
    /// `min_eigenvalue / spectral_norm`.
    pub relative_slack: f64,
}

/// A full-rank state on `H₁`, its canonical purification and a list of
/// subsystem splits.
pub struct RpState {
    rho: DensityMatrix,
    psi: PurifiedState,
    splits: Vec<SubsystemSplit>,
}

/// Result of a harness run.
pub struct RpReport {
    json: CString,
    exit_code: i32,
    passed: bool,
    tables: Vec<(CString, CString)>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(RpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Config(_) => RpStatus::Config,
            Error::NumericalBreakdown(_) | Error::NotPositive(_) | Error::NotInvertible(_) => RpStatus::Numerics,
            _ => RpStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(RpStatus::InvalidArgument, msg.into())
}

fn null(what: &str) -> Failure {
    Failure(RpStatus::NullPointer, format!("{what} is null"))
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RpStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            RpStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn state_ref<'a>(s: *const RpState) -> Result<&'a RpState, Failure> {
    s.as_ref().ok_or_else(|| null("state"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{what} is not UTF-8")))
}

fn psd(v: &PsdVerdict) -> RpPsd {
    RpPsd {
        passed: v.passed,
        min_eigenvalue: v.min_eigenvalue,
        spectral_norm: v.spectral_norm,
        relative_slack: if v.spectral_norm > 0.0 { v.min_eigenvalue / v.spectral_norm } else { 0.0 },
    }
}

fn new_state(rho: DensityMatrix) -> Result<*mut RpState, Failure> {
    let psi = purify(&rho)?;
    Ok(Box::into_raw(Box::new(RpState { rho, psi, splits: Vec::new() })))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rp_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version"),
    };
    VERSION.as_ptr()
}

/// Copies the last error message of this thread into `buf` (truncated,
/// always NUL-terminated when `len > 0`). Returns the buffer size needed for
/// the whole message including the NUL, or 0 when there is no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn rp_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes_with_nul();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n - 1) = 0;
            }
            bytes.len()
        }
    })
}

/// Builds a state from a `dim x dim` density matrix given as row-major real
/// and imaginary parts. `im` may be null for a real matrix.
///
/// # Safety
/// `re` (and `im` when non-null) must hold `dim * dim` doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn rp_state_from_density(
    dim: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut RpState,
) -> RpStatus {
    guard(|| {
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        let n = dim.checked_mul(dim).ok_or_else(|| invalid("dimension overflow"))?;
        let re = slice(re, n, "re")?;
        let im = if im.is_null() { None } else { Some(slice(im, n, "im")?) };
        let m = CMatrix::from_fn(dim, dim, |r, c| Complex::new(re[r * dim + c], im.map_or(0.0, |v| v[r * dim + c])));
        let h = new_state(DensityMatrix::new(m)?)?;
        write(out, h, "out").inspect_err(|_| drop(Box::from_raw(h)))
    })
}

/// Random full-rank state: flat-Dirichlet spectrum with eigenvalues at least
/// `spectrum_floor`, Haar eigenvectors. The same seed gives the same state.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rp_state_random(
    dim: usize,
    seed: u64,
    spectrum_floor: f64,
    out: *mut *mut RpState,
) -> RpStatus {
    guard(|| {
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        let mut rng = random::trial_rng(seed, 0);
        let h = new_state(DensityMatrix::random(&mut rng, dim, spectrum_floor)?)?;
        write(out, h, "out").inspect_err(|_| drop(Box::from_raw(h)))
    })
}

/// # Safety
/// `state` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rp_state_free(state: *mut RpState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Dimension of `H₁`, or 0 for a null handle.
///
/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rp_state_dim(state: *const RpState) -> usize {
    state.as_ref().map_or(0, |s| s.rho.dim())
}

/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rp_state_split_count(state: *const RpState) -> usize {
    state.as_ref().map_or(0, |s| s.splits.len())
}

unsafe fn push_split(state: *mut RpState, dim_a: usize, dim_b: usize, seed: Option<u64>) -> RpStatus {
    guard(|| {
        let s = state.as_mut().ok_or_else(|| null("state"))?;
        if dim_a == 0 || dim_b == 0 || dim_a.checked_mul(dim_b) != Some(s.rho.dim()) {
            return Err(invalid(format!("split {dim_a}x{dim_b} does not match dimension {}", s.rho.dim())));
        }
        let label = format!("A{}", s.splits.len());
        let split = match seed {
            None => SubsystemSplit::axis_aligned(label, dim_a, dim_b),
            Some(seed) => {
                SubsystemSplit::random(&mut random::trial_rng(seed, s.splits.len() as u64), label, dim_a, dim_b)
            }
        };
        s.splits.push(split);
        Ok(())
    })
}

/// Appends the computational-basis split `H₁ = H_A ⊗ H_B`.
///
/// # Safety
/// `state` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rp_state_add_axis_split(state: *mut RpState, dim_a: usize, dim_b: usize) -> RpStatus {
    push_split(state, dim_a, dim_b, None)
}

/// Appends a split with a Haar-random frame, seeded by `seed` and the split
/// position.
///
/// # Safety
/// `state` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rp_state_add_random_split(
    state: *mut RpState,
    dim_a: usize,
    dim_b: usize,
    seed: u64,
) -> RpStatus {
    push_split(state, dim_a, dim_b, Some(seed))
}

fn split_at(s: &RpState, i: usize) -> Result<&SubsystemSplit, Failure> {
    s.splits.get(i).ok_or_else(|| invalid(format!("split index {i} out of range ({} splits)", s.splits.len())))
}

/// Renyi entropy `S_n(A_i)` of split `split`; `n = 1` is von Neumann.
///
/// # Safety
/// `state` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rp_state_entropy(state: *const RpState, split: usize, n: u32, out: *mut f64) -> RpStatus {
    guard(|| {
        let s = state_ref(state)?;
        let v = reflected::subsystem_entropy(&s.rho, split_at(s, split)?, n)?;
        write(out, v, "out")
    })
}

/// Renyi entropy of the reflected density `ρ_{A_i Ā_j}`; `n = 1` is von
/// Neumann.
///
/// # Safety
/// `state` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rp_reflected_entropy(
    state: *const RpState,
    i: usize,
    j: usize,
    n: u32,
    out: *mut f64,
) -> RpStatus {
    guard(|| {
        let s = state_ref(state)?;
        let rho = reflected::reflected_density(&s.psi, split_at(s, i)?, split_at(s, j)?)?;
        write(out, rho.renyi(n)?, "out")
    })
}

/// Gram matrix `e^{−λ S_n(A_i Ā_j)}` over all splits of `state`, written
/// row-major to `entries` (`out_len` must be at least `count²`). A NaN
/// `lambda` selects `λ = n − 1`. `verdict` may be null.
///
/// # Safety
/// `state` must be a live handle, `entries` must hold `out_len` doubles and
/// `verdict` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn rp_gram(
    state: *const RpState,
    n: u32,
    lambda: f64,
    tolerance: f64,
    entries: *mut f64,
    out_len: usize,
    verdict: *mut RpPsd,
) -> RpStatus {
    guard(|| {
        let s = state_ref(state)?;
        let m = s.splits.len();
        if m == 0 {
            return Err(invalid("state has no splits"));
        }
        if out_len < m * m {
            return Err(invalid(format!("output holds {out_len} values, need {}", m * m)));
        }
        if entries.is_null() {
            return Err(null("entries"));
        }
        let g = gram_matrix(&s.psi, &s.splits, n, (!lambda.is_nan()).then_some(lambda))?;
        let v = check_psd_matrix(&g.entries, tolerance)?;
        let dst = std::slice::from_raw_parts_mut(entries, m * m);
        for r in 0..m {
            for c in 0..m {
                dst[r * m + c] = g.entries[(r, c)];
            }
        }
        if !verdict.is_null() {
            verdict.write(psd(&v));
        }
        Ok(())
    })
}

/// PSD check of a symmetric `size x size` matrix: passes when the smallest
/// eigenvalue is at least `−tolerance·‖M‖₂` and so are the leading minors
/// at their scale.
///
/// # Safety
/// `entries` must hold `size * size` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rp_check_psd(entries: *const f64, size: usize, tolerance: f64, out: *mut RpPsd) -> RpStatus {
    guard(|| {
        let n = size.checked_mul(size).ok_or_else(|| invalid("size overflow"))?;
        let e = slice(entries, n, "entries")?;
        let v = check_psd_matrix(&RMatrix::from_row_slice(size, size, e), tolerance)?;
        write(out, psd(&v), "out")
    })
}

/// Renyi entropy of `p` free-fermion intervals given as `2p` increasing
/// endpoints `a_1, b_1, …`. `n = 1` is the entanglement entropy and
/// `n = INFINITY` is allowed.
///
/// # Safety
/// `endpoints` must hold `2 * p` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rp_fermion_renyi(
    endpoints: *const f64,
    p: usize,
    cutoff: f64,
    n: f64,
    out: *mut f64,
) -> RpStatus {
    guard(|| {
        let e = slice(endpoints, 2 * p, "endpoints")?;
        let set = fermion::IntervalSet::new(e.chunks(2).map(|c| (c[0], c[1])).collect(), cutoff)?;
        write(out, fermion::renyi(&set, n)?, "out")
    })
}

/// Cross ratio of intervals `(a1, b1)` and `(a2, b2)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rp_cft_cross_ratio(a1: f64, b1: f64, a2: f64, b2: f64, out: *mut f64) -> RpStatus {
    guard(|| {
        let cfg = cft::TwoIntervalConfig::new([a1, b1, a2, b2], 1.0, 2)?;
        write(out, cft::cross_ratio(&cfg)?, "out")
    })
}

/// The point `z(x, y)` of the midpoint inequality.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rp_cft_z_point(x: f64, y: f64, out: *mut f64) -> RpStatus {
    guard(|| write(out, cft::z_point(x, y)?, "out"))
}

/// Runs a harness command (`gram-sweep`, `search`, `fermion`, `kl` or
/// `cft`) with a JSON config (null for defaults) on `jobs` threads (0 for
/// all cores). A completed run returns `RP_STATUS_OK` even if its checks
/// fail; see [`rp_report_exit_code`]. Nothing is written to disk.
///
/// # Safety
/// `command` must be a NUL-terminated string, `config_json` null or one,
/// and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rp_run(
    command: *const c_char,
    config_json: *const c_char,
    jobs: usize,
    out: *mut *mut RpReport,
) -> RpStatus {
    guard(|| {
        let command: Command = text(command, "command")?.parse()?;
        let src = if config_json.is_null() {
            ConfigSource::Defaults
        } else {
            ConfigSource::Text { text: text(config_json, "config")?, origin: "config" }
        };
        let run = harness::execute_from(command, src, &Overrides::default(), (jobs > 0).then_some(jobs))?;
        let json = CString::new(run.report_bytes()?).map_err(|_| invalid("report contains NUL"))?;
        let tables = run
            .tables
            .iter()
            .map(|t| {
                let csv = CString::new(t.to_csv()?).map_err(|_| invalid("table contains NUL"))?;
                Ok((CString::new(t.name.clone()).unwrap_or_default(), csv))
            })
            .collect::<Result<Vec<_>, Failure>>()?;
        let report = RpReport { json, exit_code: run.exit.code(), passed: run.passed, tables };
        let h = Box::into_raw(Box::new(report));
        write(out, h, "out").inspect_err(|_| drop(Box::from_raw(h)))
    })
}

/// The JSON report; valid until the handle is freed. Null for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rp_report_json(report: *const RpReport) -> *const c_char {
    report.as_ref().map_or(ptr::null(), |r| r.json.as_ptr())
}

/// Process exit code the command-line tool would return (0 pass, 2 failed
/// check, 3 control counterexample); -1 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rp_report_exit_code(report: *const RpReport) -> i32 {
    report.as_ref().map_or(-1, |r| r.exit_code)
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rp_report_passed(report: *const RpReport) -> bool {
    report.as_ref().is_some_and(|r| r.passed)
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rp_report_table_count(report: *const RpReport) -> usize {
    report.as_ref().map_or(0, |r| r.tables.len())
}

/// Name of table `index`, or null when out of range.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rp_report_table_name(report: *const RpReport, index: usize) -> *const c_char {
    report.as_ref().and_then(|r| r.tables.get(index)).map_or(ptr::null(), |t| t.0.as_ptr())
}

/// CSV text of table `index`, or null when out of range.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rp_report_table_csv(report: *const RpReport, index: usize) -> *const c_char {
    report.as_ref().and_then(|r| r.tables.get(index)).map_or(ptr::null(), |t| t.1.as_ptr())
}

/// # Safety
/// `report` must be null or a handle from [`rp_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rp_report_free(report: *mut RpReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
