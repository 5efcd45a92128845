//! C ABI for the conformal-snowflake pipeline.
//!
//! Conventions: opaque handles allocated by `csnow_*_new` and released by the
//! matching `_free`; every fallible call returns a [`CsnowStatus`] and writes
//! its result through out-pointers; strings returned by this library must be
//! released with [`csnow_string_free`].

use std::ffi::{c_char, CString};
use std::ptr;

use conformal_snowflake::operator::{
    assemble_p_matrix, certify_lower_bound, critical_radius, power_iteration, CertificateMode,
    RationalTestFunction, SpectrumParams,
};
use conformal_snowflake::{Error, SlitBlock};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsnowStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Degenerate = 4,
    NoConvergence = 5,
    VacuousBound = 6,
    Internal = 7,
}

fn status_of(e: &Error) -> CsnowStatus {
    match e {
        Error::InvalidConfig(_) | Error::UnsupportedParameter(_) => CsnowStatus::InvalidArgument,
        Error::Domain(_) | Error::NoFixedPoint { .. } => CsnowStatus::Domain,
        Error::Degenerate(_) | Error::FitRejected { .. } => CsnowStatus::Degenerate,
        Error::InsufficientResolution { .. } | Error::NonConvergence { .. } => {
            CsnowStatus::NoConvergence
        }
        Error::BoundVacuous { .. } => CsnowStatus::VacuousBound,
        Error::Io(_) | Error::Json(_) => CsnowStatus::Internal,
    }
}

/// Opaque slit building block.
pub struct CsnowBlock {
    inner: SlitBlock,
}

/// Create a slit block with slit length `l` and scale `s`; writes an owned
/// handle to `out`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn csnow_block_new(
    l: f64,
    s: f64,
    out: *mut *mut CsnowBlock,
) -> CsnowStatus {
    if out.is_null() {
        return CsnowStatus::NullPointer;
    }
    match SlitBlock::new(l, s) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(CsnowBlock { inner }));
            CsnowStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Release a block handle; `block` may be null.
///
/// # Safety
/// `block` must have come from `csnow_block_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn csnow_block_free(block: *mut CsnowBlock) {
    if !block.is_null() {
        drop(Box::from_raw(block));
    }
}

/// Logarithmic capacity of the block.
///
/// # Safety
/// `block` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn csnow_block_capacity(
    block: *const CsnowBlock,
    out: *mut f64,
) -> CsnowStatus {
    if block.is_null() || out.is_null() {
        return CsnowStatus::NullPointer;
    }
    *out = (*block).inner.capacity();
    CsnowStatus::Ok
}

/// Positive solution of (ψ(x))^k = x.
///
/// # Safety
/// `block` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn csnow_critical_radius(
    block: *const CsnowBlock,
    k: u32,
    out: *mut f64,
) -> CsnowStatus {
    if block.is_null() || out.is_null() {
        return CsnowStatus::NullPointer;
    }
    match critical_radius(&(*block).inner, k) {
        Ok(r) => {
            *out = r;
            CsnowStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Dominant eigenvalue of the N×M discretized operator at exponent `t`;
/// writes λ and log_k λ.
///
/// # Safety
/// `block`, `out_lambda`, and `out_log_k_lambda` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn csnow_eigenvalue(
    block: *const CsnowBlock,
    k: u32,
    t: f64,
    n_grid: usize,
    m_angles: usize,
    out_lambda: *mut f64,
    out_log_k_lambda: *mut f64,
) -> CsnowStatus {
    if block.is_null() || out_lambda.is_null() || out_log_k_lambda.is_null() {
        return CsnowStatus::NullPointer;
    }
    let b = &(*block).inner;
    let run = || -> Result<(f64, f64), Error> {
        let params = SpectrumParams::new(t, k)?;
        let r = critical_radius(b, k)?;
        let op = assemble_p_matrix(b, &params, n_grid, m_angles, r)?;
        let eig = power_iteration(&op, 1e-10, 100_000)?;
        Ok((eig.lambda, eig.log_lambda(k)))
    };
    match run() {
        Ok((l, ll)) => {
            *out_lambda = l;
            *out_log_k_lambda = ll;
            CsnowStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Lower-bound certificate as a JSON document (heap-allocated C string).
/// `mode`: 0 = paper constants, 1 = heuristic budgets.  On a vacuous bound
/// the certificate JSON is still written and `VACUOUS_BOUND` is returned.
///
/// # Safety
/// `block` and `out_json` must be valid pointers; free the string with
/// `csnow_string_free`.
#[no_mangle]
pub unsafe extern "C" fn csnow_certify_json(
    block: *const CsnowBlock,
    k: u32,
    t: f64,
    radial_points: usize,
    mode: u32,
    out_json: *mut *mut c_char,
) -> CsnowStatus {
    if block.is_null() || out_json.is_null() {
        return CsnowStatus::NullPointer;
    }
    *out_json = ptr::null_mut();
    let b = &(*block).inner;
    let mode = match mode {
        0 => CertificateMode::PaperConstants,
        1 => CertificateMode::Heuristic,
        _ => return CsnowStatus::InvalidArgument,
    };
    let params = match SpectrumParams::new(t, k) {
        Ok(p) => p,
        Err(e) => return status_of(&e),
    };
    let r = match critical_radius(b, k) {
        Ok(r) => r,
        Err(e) => return status_of(&e),
    };
    let nu = RationalTestFunction::reference();
    let (cert, status) = match certify_lower_bound(b, &params, &nu, r, radial_points, mode) {
        Ok(c) => (c, CsnowStatus::Ok),
        Err(Error::BoundVacuous { certificate, .. }) => (*certificate, CsnowStatus::VacuousBound),
        Err(e) => return status_of(&e),
    };
    match serde_json::to_string_pretty(&cert) {
        Ok(json) => match CString::new(json) {
            Ok(cs) => {
                *out_json = cs.into_raw();
                status
            }
            Err(_) => CsnowStatus::Internal,
        },
        Err(_) => CsnowStatus::Internal,
    }
}

/// Release a string returned by this library; `s` may be null.
///
/// # Safety
/// `s` must have been produced by this library and not freed before.
#[no_mangle]
pub unsafe extern "C" fn csnow_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
