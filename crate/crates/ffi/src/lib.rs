//! C ABI over `iscore`.
//!
//! Every fallible function returns an [`IscoreStatus`] and writes its result
//! through an out-pointer. On failure the message is available from
//! [`iscore_last_error_message`] on the same thread. Models and samples are
//! opaque handles released with their `_free` function. No panic crosses the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use iscore::disease_model::DiseaseModel;
use iscore::estimators::{cell_counts, theta_e_train, Class, LabeledSample, Outcome};
use iscore::exact_binomial::BinomialPair;
use iscore::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IscoreStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Domain = 3,
    Degenerate = 4,
    Contract = 5,
    Parse = 6,
    Data = 7,
    Io = 8,
    Panic = 9,
}

/// Oracle predictivity parameters of a model.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IscoreOracleParams {
    pub theta_e: f64,
    pub theta_c: f64,
    pub theta_i: f64,
    pub theta_i0: f64,
    pub bound_on_theta_e: f64,
    pub f_y_d: f64,
    pub noise_factor: f64,
}

/// Opaque disease model.
pub struct IscoreModel(DiseaseModel);

/// Opaque labelled sample.
pub struct IscoreSample(LabeledSample);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> IscoreStatus {
    match e {
        Error::Domain(_) => IscoreStatus::Domain,
        Error::Degenerate(_) => IscoreStatus::Degenerate,
        Error::Contract(_) | Error::Usage(_) => IscoreStatus::Contract,
        Error::GridCell { source, .. } => status_of(source),
        Error::Parse { .. } => IscoreStatus::Parse,
        Error::Data(_) | Error::Csv(_) => IscoreStatus::Data,
        Error::Io { .. } => IscoreStatus::Io,
    }
}

struct Fail(IscoreStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(IscoreStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, storing its value in `out` and converting errors and panics
/// into a status.
fn guard<T>(out: *mut T, body: impl FnOnce() -> Result<T, Fail>) -> IscoreStatus {
    if out.is_null() {
        set_error("output pointer is null".into());
        return IscoreStatus::NullPointer;
    }
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(v)) => {
            // SAFETY: checked non-null above; caller guarantees it is writable.
            unsafe { out.write(v) };
            IscoreStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            IscoreStatus::Panic
        }
    }
}

/// # Safety
/// `p` is null or points to a live value of type `T`.
unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `p` is null or points to `len` readable elements.
unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failed call on this thread, or null if none. Valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn iscore_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn iscore_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// `E[min(Z, W)]` for independent `Z ~ Bin(n, p_z)`, `W ~ Bin(n, p_w)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn iscore_expected_min(n: u64, p_z: f64, p_w: f64, out: *mut f64) -> IscoreStatus {
    guard(out, || {
        Ok(iscore::exact_binomial::expected_min(&BinomialPair::new(n, p_z, p_w)?))
    })
}

/// `Pr(Z < W) + 0.5 Pr(Z = W)` for the same pair.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn iscore_half_tie_probability(n: u64, p_z: f64, p_w: f64, out: *mut f64) -> IscoreStatus {
    guard(out, || {
        Ok(iscore::exact_binomial::half_tie_probability(&BinomialPair::new(
            n, p_z, p_w,
        )?))
    })
}

/// Negative relative bias `b(n, lambda, r)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn iscore_neg_rel_bias(n: u64, lambda: f64, r: f64, out: *mut f64) -> IscoreStatus {
    guard(out, || Ok(iscore::exact_binomial::neg_rel_bias(n, lambda, r)?))
}

/// Tie-split probability `a(n, lambda, r)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn iscore_tie_half_prob(n: u64, lambda: f64, r: f64, out: *mut f64) -> IscoreStatus {
    guard(out, || Ok(iscore::exact_binomial::tie_half_prob(n, lambda, r)?))
}

/// Parses a model spec (`maf = [...]`, `influential = [...]`, `t = {...}`).
///
/// # Safety
/// `text` is a nul-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn iscore_model_from_spec(text: *const c_char, out: *mut *mut IscoreModel) -> IscoreStatus {
    guard(out, || {
        if text.is_null() {
            return Err(null("text"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|e| Fail(IscoreStatus::InvalidUtf8, e.to_string()))?;
        let model = iscore::io::parse_model_spec(text, "<spec>")?;
        Ok(Box::into_raw(Box::new(IscoreModel(model))))
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` is null or came from this library and was not freed before.
#[no_mangle]
pub unsafe extern "C" fn iscore_model_free(model: *mut IscoreModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Oracle parameters of a model.
///
/// # Safety
/// `model` is a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn iscore_model_oracle_params(
    model: *const IscoreModel,
    out: *mut IscoreOracleParams,
) -> IscoreStatus {
    guard(out, || {
        let p = borrow(model, "model")?.0.oracle_params()?;
        Ok(IscoreOracleParams {
            theta_e: p.theta_e,
            theta_c: p.theta_c,
            theta_i: p.theta_i,
            theta_i0: p.theta_i0,
            bound_on_theta_e: p.bound_on_theta_e,
            f_y_d: p.f_y_d,
            noise_factor: p.noise_factor,
        })
    })
}

/// Draws `n` cases then `n` controls; `(seed, rep)` select the stream.
///
/// # Safety
/// `model` is a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn iscore_simulate(
    model: *const IscoreModel,
    n: usize,
    seed: u64,
    rep: u64,
    out: *mut *mut IscoreSample,
) -> IscoreStatus {
    guard(out, || {
        let sample = iscore::simulator::draw_case_control(&borrow(model, "model")?.0, n, seed, rep)?;
        Ok(Box::into_raw(Box::new(IscoreSample(sample))))
    })
}

/// Builds a sample from row-major `values` (`n_rows * n_vars`) and labels
/// (nonzero = case, 0 = control).
///
/// # Safety
/// `labels` has `n_rows` and `values` `n_rows * n_vars` readable elements;
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn iscore_sample_from_rows(
    labels: *const u8,
    values: *const u32,
    n_rows: usize,
    n_vars: usize,
    out: *mut *mut IscoreSample,
) -> IscoreStatus {
    guard(out, || {
        let cells = n_rows
            .checked_mul(n_vars)
            .ok_or_else(|| Fail(IscoreStatus::Contract, "n_rows * n_vars overflows".into()))?;
        let labels = slice(labels, n_rows, "labels")?;
        let values = slice(values, cells, "values")?;
        let classes = labels
            .iter()
            .map(|&l| if l != 0 { Class::Case } else { Class::Control })
            .collect();
        let sample = LabeledSample::from_flat(
            Outcome::TwoClass(classes),
            values.to_vec(),
            LabeledSample::default_names(n_vars),
        )?;
        Ok(Box::into_raw(Box::new(IscoreSample(sample))))
    })
}

/// Releases a sample. Null is ignored.
///
/// # Safety
/// `sample` is null or came from this library and was not freed before.
#[no_mangle]
pub unsafe extern "C" fn iscore_sample_free(sample: *mut IscoreSample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

/// Row and variable counts of a sample.
///
/// # Safety
/// `sample` is a live handle; `rows` and `vars` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn iscore_sample_dims(
    sample: *const IscoreSample,
    rows: *mut usize,
    vars: *mut usize,
) -> IscoreStatus {
    if vars.is_null() {
        set_error("vars is null".into());
        return IscoreStatus::NullPointer;
    }
    guard(rows, || {
        let s = &borrow(sample, "sample")?.0;
        vars.write(s.n_vars());
        Ok(s.n_rows())
    })
}

/// I score of the variables `subset[0..len]` (0-based columns).
///
/// # Safety
/// `sample` is a live handle, `subset` has `len` readable elements and
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn iscore_i_score(
    sample: *const IscoreSample,
    subset: *const usize,
    len: usize,
    out: *mut f64,
) -> IscoreStatus {
    guard(out, || {
        Ok(iscore::estimators::i_score(
            &borrow(sample, "sample")?.0,
            slice(subset, len, "subset")?,
        )?)
    })
}

/// Training error estimate of the variables `subset[0..len]` on a sample
/// with equal class sizes.
///
/// # Safety
/// As for [`iscore_i_score`].
#[no_mangle]
pub unsafe extern "C" fn iscore_theta_e_train(
    sample: *const IscoreSample,
    subset: *const usize,
    len: usize,
    out: *mut f64,
) -> IscoreStatus {
    guard(out, || {
        let counts = cell_counts(&borrow(sample, "sample")?.0, slice(subset, len, "subset")?)?;
        Ok(theta_e_train(&counts)?)
    })
}
