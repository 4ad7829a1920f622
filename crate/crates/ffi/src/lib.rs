//! C interface. Families are opaque `SpFamily` handles; every call returns
//! an `SpStatus`, and `sp_last_error_message` describes the last failure on
//! the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use subphase::family::{build_hyperplane_family, build_real_family, RealFamily};
use subphase::io::{parse_family, parse_recipe, write_family, write_recipe, FamilyDoc, RecipeDoc};
use subphase::linalg::Vector;
use subphase::reconstruct::{reconstruct, reconstruct_hyperplanes};
use subphase::rng::RngState;
use subphase::verify::{
    certify_hyperplanes, certify_structured, lift_null_space, lift_operator, rank12_witness_search,
    MeasurementVector,
};
use subphase::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Inconsistent = 4,
    Ambiguous = 5,
    Unsupported = 6,
    Internal = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpCertificate {
    Structured = 0,
    Hyperplane = 1,
    LiftInjective = 2,
    Refuted = 3,
    Uncertified = 4,
}

/// A real subspace family, with its construction data when known.
pub struct SpFamily {
    family: RealFamily,
    recipe: Option<RecipeDoc>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SpStatus {
    match e {
        Error::Parse { .. } => SpStatus::Parse,
        Error::Inconsistent { .. } => SpStatus::Inconsistent,
        Error::Ambiguous(_) => SpStatus::Ambiguous,
        Error::Unsupported(_) => SpStatus::Unsupported,
        _ => SpStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (SpStatus, String)>) -> SpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SpStatus::Internal
        }
    }
}

fn lib<T>(r: subphase::Result<T>) -> Result<T, (SpStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null() -> (SpStatus, String) {
    (SpStatus::NullPointer, "null pointer argument".into())
}

fn into_handle(family: RealFamily, recipe: Option<RecipeDoc>, out: *mut *mut SpFamily) {
    let handle = Box::new(SpFamily { family, recipe });
    // SAFETY: checked non-null by the caller of this helper.
    unsafe { *out = Box::into_raw(handle) };
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds `2M - 1` subspaces of `R^M` with dimensions `dims[0..len]`.
///
/// # Safety
/// `dims` must point to `len` readable values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sp_build_real_family(
    ambient: usize,
    dims: *const usize,
    len: usize,
    seed: u64,
    out: *mut *mut SpFamily,
) -> SpStatus {
    guard(|| {
        if dims.is_null() || out.is_null() {
            return Err(null());
        }
        let dims = std::slice::from_raw_parts(dims, len);
        let (family, recipe) = lib(build_real_family(ambient, dims, &mut RngState::new(seed)))?;
        into_handle(family, Some(RecipeDoc::Structured(recipe)), out);
        Ok(())
    })
}

/// Builds `count` hyperplanes of `R^M` from a random Parseval frame.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sp_build_hyperplane_family(
    ambient: usize,
    count: usize,
    seed: u64,
    out: *mut *mut SpFamily,
) -> SpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let hf = lib(build_hyperplane_family(ambient, count, &mut RngState::new(seed)))?;
        into_handle(hf.family.clone(), Some(RecipeDoc::Hyperplane(hf)), out);
        Ok(())
    })
}

/// Parses a real family file, with an optional recipe file (may be NULL).
///
/// # Safety
/// `family_text` and, when non-NULL, `recipe_text` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sp_family_from_string(
    family_text: *const c_char,
    recipe_text: *const c_char,
    out: *mut *mut SpFamily,
) -> SpStatus {
    guard(|| {
        if family_text.is_null() || out.is_null() {
            return Err(null());
        }
        let text = CStr::from_ptr(family_text)
            .to_str()
            .map_err(|_| (SpStatus::Parse, "family text is not UTF-8".to_string()))?;
        let family = match lib(parse_family(text))? {
            FamilyDoc::Real(f) => f,
            FamilyDoc::Complex(_) => return Err((SpStatus::Unsupported, "complex families are not supported here".into())),
        };
        let recipe = if recipe_text.is_null() {
            None
        } else {
            let text = CStr::from_ptr(recipe_text)
                .to_str()
                .map_err(|_| (SpStatus::Parse, "recipe text is not UTF-8".to_string()))?;
            Some(lib(parse_recipe(text))?)
        };
        into_handle(family, recipe, out);
        Ok(())
    })
}

/// # Safety
/// `family` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sp_family_free(family: *mut SpFamily) {
    if !family.is_null() {
        drop(Box::from_raw(family));
    }
}

/// # Safety
/// `family` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn sp_family_ambient(family: *const SpFamily) -> usize {
    family.as_ref().map_or(0, |f| f.family.ambient())
}

/// # Safety
/// `family` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn sp_family_count(family: *const SpFamily) -> usize {
    family.as_ref().map_or(0, |f| f.family.len())
}

/// Family file text; free with `sp_string_free`. NULL on failure.
///
/// # Safety
/// `family` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sp_family_to_string(family: *const SpFamily) -> *mut c_char {
    match family.as_ref() {
        Some(f) => CString::new(write_family(&f.family)).map_or(ptr::null_mut(), CString::into_raw),
        None => ptr::null_mut(),
    }
}

/// Recipe file text, or NULL when the family has no recipe.
///
/// # Safety
/// `family` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sp_recipe_to_string(family: *const SpFamily) -> *mut c_char {
    match family.as_ref().and_then(|f| f.recipe.as_ref()) {
        Some(r) => CString::new(write_recipe(r)).map_or(ptr::null_mut(), CString::into_raw),
        None => ptr::null_mut(),
    }
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Writes the `count` squared projection norms of `x` into `out`.
///
/// # Safety
/// `x` must hold `x_len` values and `out` room for `out_len`.
#[no_mangle]
pub unsafe extern "C" fn sp_measure(
    family: *const SpFamily,
    x: *const f64,
    x_len: usize,
    out: *mut f64,
    out_len: usize,
) -> SpStatus {
    guard(|| {
        let f = family.as_ref().ok_or_else(null)?;
        if x.is_null() || out.is_null() {
            return Err(null());
        }
        if out_len < f.family.len() {
            return Err((SpStatus::InvalidArgument, format!("output needs {} entries", f.family.len())));
        }
        let x = Vector::from_column_slice(std::slice::from_raw_parts(x, x_len));
        let values = lib(f.family.measure(&x))?;
        std::slice::from_raw_parts_mut(out, values.len()).copy_from_slice(&values);
        Ok(())
    })
}

/// Recovers the signal (first nonzero coordinate nonnegative) into `out`;
/// `residual` (may be NULL) receives the relative measurement mismatch.
/// Requires a family with a recipe.
///
/// # Safety
/// `meas` must hold `meas_len` values, `out` room for `out_len`.
#[no_mangle]
pub unsafe extern "C" fn sp_reconstruct(
    family: *const SpFamily,
    meas: *const f64,
    meas_len: usize,
    out: *mut f64,
    out_len: usize,
    residual: *mut f64,
) -> SpStatus {
    guard(|| {
        let f = family.as_ref().ok_or_else(null)?;
        if meas.is_null() || out.is_null() {
            return Err(null());
        }
        let m = f.family.ambient();
        if out_len < m {
            return Err((SpStatus::InvalidArgument, format!("output needs {} entries", m)));
        }
        let values = std::slice::from_raw_parts(meas, meas_len).to_vec();
        let meas = lib(MeasurementVector::new(values, 0.0))?;
        let result = match &f.recipe {
            Some(RecipeDoc::Structured(r)) => lib(reconstruct(r, &meas))?,
            Some(RecipeDoc::Hyperplane(h)) => lib(reconstruct_hyperplanes(h, &meas))?,
            None => return Err((SpStatus::Unsupported, "family has no recipe".into())),
        };
        std::slice::from_raw_parts_mut(out, m).copy_from_slice(result.signal.as_slice());
        if !residual.is_null() {
            *residual = result.residual;
        }
        Ok(())
    })
}

/// Certifies injectivity from the recipe, else from the lifted operator;
/// reports `REFUTED` when a rank ≤ 2 null element is found.
///
/// # Safety
/// `family` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sp_certify(family: *const SpFamily, out: *mut SpCertificate) -> SpStatus {
    guard(|| {
        let f = family.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        let cert = match &f.recipe {
            Some(RecipeDoc::Structured(r)) => certify_structured(r),
            Some(RecipeDoc::Hyperplane(h)) => certify_hyperplanes(h),
            None => subphase::verify::Certificate::Uncertified { reason: String::new() },
        };
        *out = match cert.kind() {
            "structured" => SpCertificate::Structured,
            "hyperplane" => SpCertificate::Hyperplane,
            _ => {
                let op = lib(lift_operator(&f.family))?;
                if lift_null_space(&op).is_empty() {
                    SpCertificate::LiftInjective
                } else if rank12_witness_search(&f.family).is_some() {
                    SpCertificate::Refuted
                } else {
                    SpCertificate::Uncertified
                }
            }
        };
        Ok(())
    })
}
