//! C ABI over the twospin library.
//!
//! Models are opaque handles created from a TOML run configuration. Every
//! function returns a [`TwospinStatus`]; on failure a message is available from
//! [`twospin_last_error`] on the same thread. Strings handed out by the library
//! must be released with [`twospin_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use twospin::cli::{bethe_report, verify_model};
use twospin::config::RunConfig;
use twospin::oracle::sector_spectrum;
use twospin::{couplings_from_spec, interaction_graph, Error, IntegrableModel, ModelSpec};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwospinStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Constraint = 4,
    Capacity = 5,
    BufferTooSmall = 6,
    Numerical = 7,
    Panic = 8,
}

/// Opaque model handle.
pub struct TwospinModel {
    config: RunConfig,
    spec: ModelSpec,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> TwospinStatus {
    match err {
        Error::Config(_) | Error::InvalidSpin(_) | Error::InvalidSites(_) | Error::Shape(_) => TwospinStatus::Parse,
        Error::Constraint(_) => TwospinStatus::Constraint,
        Error::Capacity { .. } => TwospinStatus::Capacity,
        _ => TwospinStatus::Numerical,
    }
}

struct Failure(TwospinStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard<F>(f: F) -> TwospinStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TwospinStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            TwospinStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(TwospinStatus::NullPointer, format!("{what} is null"))
}

unsafe fn model_ref<'a>(model: *const TwospinModel) -> Result<&'a TwospinModel, Failure> {
    model.as_ref().ok_or_else(|| null("model"))
}

unsafe fn give_string(text: String, out: *mut *mut c_char) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    let c = CString::new(text).map_err(|e| Failure(TwospinStatus::Numerical, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string(value).map_err(|e| Failure(TwospinStatus::Numerical, e.to_string()))
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next library call on the same thread.
#[no_mangle]
pub extern "C" fn twospin_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses a TOML run configuration. The integrability constraints are not
/// enforced here; functions that need them report `Constraint`.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn twospin_model_from_toml(toml: *const c_char, out: *mut *mut TwospinModel) -> TwospinStatus {
    guard(|| {
        if toml.is_null() {
            return Err(null("toml"));
        }
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let text = CStr::from_ptr(toml)
            .to_str()
            .map_err(|e| Failure(TwospinStatus::InvalidUtf8, e.to_string()))?;
        let config = RunConfig::parse(text)?;
        let spec = config.model.spec()?;
        *out = Box::into_raw(Box::new(TwospinModel { config, spec }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from `twospin_model_from_toml` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn twospin_model_free(model: *mut TwospinModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn twospin_model_dim(model: *const TwospinModel, out: *mut usize) -> TwospinStatus {
    guard(|| {
        let m = model_ref(model)?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = m.spec.sites.dim();
        Ok(())
    })
}

/// Writes the Hamiltonian row-major as interleaved `(re, im)` pairs.
/// `len` counts doubles and must be at least `2 dim^2`.
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn twospin_model_hamiltonian(model: *const TwospinModel, buf: *mut f64, len: usize) -> TwospinStatus {
    guard(|| {
        let m = model_ref(model)?;
        if buf.is_null() {
            return Err(null("buffer"));
        }
        let dim = m.spec.sites.dim();
        if len < 2 * dim * dim {
            return Err(Failure(TwospinStatus::BufferTooSmall, format!("need {} doubles", 2 * dim * dim)));
        }
        let h = IntegrableModel::new(m.spec.clone())?.hamiltonian()?;
        let out = std::slice::from_raw_parts_mut(buf, 2 * dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                let z = h.get(r, c);
                out[2 * (r * dim + c)] = z.re;
                out[2 * (r * dim + c) + 1] = z.im;
            }
        }
        Ok(())
    })
}

/// Exact spectrum grouped by sector (descending `S^z`), ascending inside each.
/// `twice_sz` may be null; otherwise it receives `2 S^z` per eigenvalue.
///
/// # Safety
/// `energies` and a non-null `twice_sz` must hold `len >= dim` entries.
#[no_mangle]
pub unsafe extern "C" fn twospin_model_spectrum(
    model: *const TwospinModel,
    energies: *mut f64,
    twice_sz: *mut i64,
    len: usize,
) -> TwospinStatus {
    guard(|| {
        let m = model_ref(model)?;
        if energies.is_null() {
            return Err(null("energies"));
        }
        let dim = m.spec.sites.dim();
        if len < dim {
            return Err(Failure(TwospinStatus::BufferTooSmall, format!("need {dim} entries")));
        }
        let h = IntegrableModel::new(m.spec.clone())?.hamiltonian()?;
        let labelled = sector_spectrum(&h, &m.spec.sites)?.labelled();
        for (i, (sector, e)) in labelled.into_iter().enumerate() {
            *energies.add(i) = e;
            if !twice_sz.is_null() {
                *twice_sz.add(i) = sector.0;
            }
        }
        Ok(())
    })
}

/// Runs the certification checks; `passed` receives the overall verdict and
/// `report` a JSON document (free with `twospin_string_free`).
///
/// # Safety
/// Pointers must be valid; `report` may be null.
#[no_mangle]
pub unsafe extern "C" fn twospin_model_verify(model: *const TwospinModel, passed: *mut bool, report: *mut *mut c_char) -> TwospinStatus {
    guard(|| {
        let m = model_ref(model)?;
        if passed.is_null() {
            return Err(null("passed"));
        }
        let r = verify_model(&m.spec, &m.config)?;
        *passed = r.passed;
        if !report.is_null() {
            give_string(to_json(&r)?, report)?;
        }
        Ok(())
    })
}

/// Solves the Bethe equations and matches against the exact spectrum.
/// A negative `nmax` uses the configured range.
///
/// # Safety
/// `report` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn twospin_model_bethe(model: *const TwospinModel, nmax: i64, report: *mut *mut c_char) -> TwospinStatus {
    guard(|| {
        let m = model_ref(model)?;
        let nmax = usize::try_from(nmax).ok().or(m.config.solver.nmax);
        let r = bethe_report(&m.spec, &m.config, nmax)?;
        give_string(to_json(&r)?, report)
    })
}

/// Interaction graph in DOT format.
///
/// # Safety
/// `dot` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn twospin_model_graph_dot(model: *const TwospinModel, dot: *mut *mut c_char) -> TwospinStatus {
    guard(|| {
        let m = model_ref(model)?;
        m.spec.validate()?;
        let g = interaction_graph(&couplings_from_spec(&m.spec)?);
        give_string(g.to_dot(), dot)
    })
}

/// # Safety
/// `s` must come from this library, or be null.
#[no_mangle]
pub unsafe extern "C" fn twospin_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
