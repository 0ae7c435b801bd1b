//! C ABI over the gmult core.
//!
//! Frames and symbols are opaque heap handles released with their `_free`
//! function. Every fallible call returns a [`GmStatus`]; on failure the message
//! is kept per thread and read with [`gm_last_error_message`]. Matrices cross the
//! boundary as row-major arrays of [`GmComplex`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gmult::{dualizer, gframe, multiplier, perturb, CMatrix, Error, GFrame, SpaceLayout, Symbol, C64};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    ShapeMismatch = 3,
    BufferTooSmall = 4,
    NotFrame = 5,
    NotSemiNormalized = 6,
    Singular = 7,
    NotGRiesz = 8,
    NotDual = 9,
    PerturbationTooLarge = 10,
    ConditionNotMet = 11,
    Numerical = 12,
    Panic = 13,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GmComplex {
    pub re: f64,
    pub im: f64,
}

/// Opaque g-frame handle.
pub struct GmFrame(GFrame);

/// Opaque block-diagonal symbol handle.
pub struct GmSymbol(Symbol);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GmStatus {
    match e {
        Error::InvalidInput(_) | Error::IndexOutOfRange { .. } | Error::NotHermitian { .. } => GmStatus::InvalidInput,
        Error::ShapeMismatch(_) => GmStatus::ShapeMismatch,
        Error::SingularFrame { .. } => GmStatus::NotFrame,
        Error::NotSemiNormalized { .. } => GmStatus::NotSemiNormalized,
        Error::Singular { .. } | Error::Factorization { .. } => GmStatus::Singular,
        Error::NotGRiesz { .. } => GmStatus::NotGRiesz,
        Error::NotDual { .. } => GmStatus::NotDual,
        Error::PerturbationTooLarge { .. } => GmStatus::PerturbationTooLarge,
        Error::ConditionNotMet { .. } => GmStatus::ConditionNotMet,
        Error::NoConvergence(_) => GmStatus::Numerical,
    }
}

struct Fail(GmStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

type Outcome = std::result::Result<(), Fail>;

fn guard(f: impl FnOnce() -> Outcome) -> GmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            GmStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            GmStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(GmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn write<T>(p: *mut T, v: T) {
    if !p.is_null() {
        unsafe { p.write(v) };
    }
}

unsafe fn layout_from(block_count: usize, block_sizes: *const usize) -> Result<SpaceLayout, Fail> {
    let sizes = unsafe { slice(block_sizes, block_count, "block_sizes") }?;
    Ok(SpaceLayout::new(sizes.to_vec())?)
}

fn matrix_from(rows: usize, cols: usize, data: &[GmComplex]) -> CMatrix {
    CMatrix::from_fn(rows, cols, |i, j| {
        let z = data[i * cols + j];
        C64::new(z.re, z.im)
    })
}

unsafe fn copy_out(m: &CMatrix, out: *mut GmComplex, out_len: usize) -> Outcome {
    let need = m.nrows() * m.ncols();
    if out.is_null() {
        return Err(null("out"));
    }
    if out_len < need {
        return Err(Fail(
            GmStatus::BufferTooSmall,
            format!("buffer holds {out_len} entries, need {need}"),
        ));
    }
    let dst = unsafe { std::slice::from_raw_parts_mut(out, need) };
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            dst[i * m.ncols() + j] = GmComplex { re: z.re, im: z.im };
        }
    }
    Ok(())
}

unsafe fn give<T>(out: *mut *mut T, v: T) -> Outcome {
    if out.is_null() {
        return Err(null("out"));
    }
    unsafe { out.write(Box::into_raw(Box::new(v))) };
    Ok(())
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn gm_status_string(status: GmStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        GmStatus::Ok => b"ok\0",
        GmStatus::NullPointer => b"null pointer\0",
        GmStatus::InvalidInput => b"invalid input\0",
        GmStatus::ShapeMismatch => b"shape mismatch\0",
        GmStatus::BufferTooSmall => b"buffer too small\0",
        GmStatus::NotFrame => b"not a g-frame\0",
        GmStatus::NotSemiNormalized => b"symbol not semi-normalized\0",
        GmStatus::Singular => b"singular operator\0",
        GmStatus::NotGRiesz => b"not a g-Riesz basis\0",
        GmStatus::NotDual => b"not a dual pair\0",
        GmStatus::PerturbationTooLarge => b"perturbation too large\0",
        GmStatus::ConditionNotMet => b"sufficient condition not met\0",
        GmStatus::Numerical => b"numerical failure\0",
        GmStatus::Panic => b"internal panic\0",
    };
    s.as_ptr().cast()
}

/// Copies the calling thread's last error message, NUL-terminated and truncated
/// to `len` bytes, into `buf`. Returns the full length including the NUL, or 0
/// when the last call succeeded.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn gm_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n - 1) = 0;
            }
        }
        bytes.len()
    })
}

/// Builds a g-frame on `C^ambient_dim` from `block_count` blocks of sizes
/// `block_sizes[i] x ambient_dim`, stored row-major one after another in `data`.
///
/// # Safety
/// `block_sizes` must hold `block_count` entries, `data` must hold
/// `sum(block_sizes) * ambient_dim` entries and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gm_frame_new(
    ambient_dim: usize,
    block_count: usize,
    block_sizes: *const usize,
    data: *const GmComplex,
    out: *mut *mut GmFrame,
) -> GmStatus {
    guard(|| {
        let layout = unsafe { layout_from(block_count, block_sizes) }?;
        let data = unsafe { slice(data, layout.total() * ambient_dim, "data") }?;
        let stacked = matrix_from(layout.total(), ambient_dim, data);
        let blocks = layout.split(&stacked)?;
        let frame = GFrame::with_layout(layout, ambient_dim, blocks)?;
        unsafe { give(out, GmFrame(frame)) }
    })
}

/// Seeded random g-frame whose frame operator has condition number at most `cond_cap`.
///
/// # Safety
/// `block_sizes` must hold `block_count` entries and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gm_frame_random(
    ambient_dim: usize,
    block_count: usize,
    block_sizes: *const usize,
    cond_cap: f64,
    seed: u64,
    out: *mut *mut GmFrame,
) -> GmStatus {
    guard(|| {
        let layout = unsafe { layout_from(block_count, block_sizes) }?;
        let frame = gframe::random_gframe(ambient_dim, &layout, cond_cap, seed)?;
        unsafe { give(out, GmFrame(frame)) }
    })
}

/// # Safety
/// `frame` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gm_frame_free(frame: *mut GmFrame) {
    if !frame.is_null() {
        drop(unsafe { Box::from_raw(frame) });
    }
}

/// Ambient dimension `n`, or 0 for a null handle.
///
/// # Safety
/// `frame` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gm_frame_ambient_dim(frame: *const GmFrame) -> usize {
    unsafe { frame.as_ref() }.map_or(0, |f| f.0.ambient_dim())
}

/// Total stacked dimension `K = sum(block_sizes)`, or 0 for a null handle.
///
/// # Safety
/// `frame` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gm_frame_stacked_dim(frame: *const GmFrame) -> usize {
    unsafe { frame.as_ref() }.map_or(0, |f| f.0.stacked_dim())
}

/// Optimal frame bounds. Fails with `NotFrame` when the lower bound vanishes.
///
/// # Safety
/// `frame` must be a live handle; `lower` and `upper` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn gm_frame_bounds(frame: *const GmFrame, lower: *mut f64, upper: *mut f64) -> GmStatus {
    guard(|| {
        let f = unsafe { handle(frame, "frame") }?;
        let b = f.0.ensure_frame()?;
        unsafe {
            write(lower, b.lower);
            write(upper, b.upper);
        }
        Ok(())
    })
}

/// `dim ker(T_Λ)`, the number of stacked coordinates beyond a basis.
///
/// # Safety
/// `frame` must be a live handle; `excess` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn gm_frame_excess(frame: *const GmFrame, excess: *mut usize) -> GmStatus {
    guard(|| {
        let f = unsafe { handle(frame, "frame") }?;
        let e = f.0.excess()?;
        unsafe { write(excess, e) };
        Ok(())
    })
}

/// Canonical dual `{Λᵢ S⁻¹}` as a new handle.
///
/// # Safety
/// `frame` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gm_frame_canonical_dual(frame: *const GmFrame, out: *mut *mut GmFrame) -> GmStatus {
    guard(|| {
        let f = unsafe { handle(frame, "frame") }?;
        let d = f.0.canonical_dual()?;
        unsafe { give(out, GmFrame(d)) }
    })
}

/// Copies the `K x n` analysis matrix, row-major, into `out`.
///
/// # Safety
/// `frame` must be a live handle and `out` valid for `out_len` entries.
#[no_mangle]
pub unsafe extern "C" fn gm_frame_analysis(frame: *const GmFrame, out: *mut GmComplex, out_len: usize) -> GmStatus {
    guard(|| {
        let f = unsafe { handle(frame, "frame") }?;
        unsafe { copy_out(&f.0.analysis_matrix(), out, out_len) }
    })
}

/// Scalar symbol `uᵢ = weights[i]·Id`.
///
/// # Safety
/// `block_sizes` and `weights` must hold `block_count` entries and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gm_symbol_from_weights(
    block_count: usize,
    block_sizes: *const usize,
    weights: *const GmComplex,
    out: *mut *mut GmSymbol,
) -> GmStatus {
    guard(|| {
        let layout = unsafe { layout_from(block_count, block_sizes) }?;
        let w = unsafe { slice(weights, block_count, "weights") }?;
        let w: Vec<C64> = w.iter().map(|z| C64::new(z.re, z.im)).collect();
        let s = Symbol::from_weights(&layout, &w)?;
        unsafe { give(out, GmSymbol(s)) }
    })
}

/// Block symbol from square blocks of sizes `block_sizes[i]`, stored row-major
/// one after another in `data`.
///
/// # Safety
/// `block_sizes` must hold `block_count` entries, `data` must hold
/// `sum(block_sizes[i]^2)` entries and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gm_symbol_from_blocks(
    block_count: usize,
    block_sizes: *const usize,
    data: *const GmComplex,
    out: *mut *mut GmSymbol,
) -> GmStatus {
    guard(|| {
        let layout = unsafe { layout_from(block_count, block_sizes) }?;
        let total: usize = layout.block_sizes().iter().map(|k| k * k).sum();
        let data = unsafe { slice(data, total, "data") }?;
        let mut offset = 0;
        let mut blocks = Vec::with_capacity(block_count);
        for &k in layout.block_sizes() {
            blocks.push(matrix_from(k, k, &data[offset..offset + k * k]));
            offset += k * k;
        }
        let s = Symbol::with_layout(layout, blocks)?;
        unsafe { give(out, GmSymbol(s)) }
    })
}

/// # Safety
/// `symbol` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gm_symbol_free(symbol: *mut GmSymbol) {
    if !symbol.is_null() {
        drop(unsafe { Box::from_raw(symbol) });
    }
}

/// Assembles `M = Σ Λᵢ* uᵢ Γᵢ` into the `n x n` row-major buffer `out` and
/// reports its extreme singular values.
///
/// # Safety
/// Handles must be live, `out` valid for `out_len` entries, and the scalar
/// outputs null or writable.
#[no_mangle]
pub unsafe extern "C" fn gm_multiplier(
    lambda: *const GmFrame,
    symbol: *const GmSymbol,
    gamma: *const GmFrame,
    out: *mut GmComplex,
    out_len: usize,
    sigma_min: *mut f64,
    sigma_max: *mut f64,
) -> GmStatus {
    guard(|| {
        let l = unsafe { handle(lambda, "lambda") }?;
        let u = unsafe { handle(symbol, "symbol") }?;
        let g = unsafe { handle(gamma, "gamma") }?;
        let r = multiplier::assemble(&l.0, &u.0, &g.0)?;
        unsafe {
            copy_out(&r.matrix, out, out_len)?;
            write(sigma_min, r.sigma_min);
            write(sigma_max, r.sigma_max);
        }
        Ok(())
    })
}

/// The dual `Γ†` representing `M⁻¹` through `U⁻¹`, with the norm of its
/// deviation from the canonical dual and the canonical flag.
///
/// # Safety
/// Handles must be live, `out` writable, scalar outputs null or writable.
#[no_mangle]
pub unsafe extern "C" fn gm_gamma_dagger(
    lambda: *const GmFrame,
    symbol: *const GmSymbol,
    gamma: *const GmFrame,
    out: *mut *mut GmFrame,
    psi_norm: *mut f64,
    canonical: *mut bool,
) -> GmStatus {
    guard(|| {
        let l = unsafe { handle(lambda, "lambda") }?;
        let u = unsafe { handle(symbol, "symbol") }?;
        let g = unsafe { handle(gamma, "gamma") }?;
        let r = dualizer::gamma_dagger(&l.0, &u.0, &g.0)?;
        unsafe {
            write(psi_norm, r.psi_norm);
            write(canonical, r.canonical_flag);
            give(out, GmFrame(r.gamma_dagger))
        }
    })
}

/// `Γ′` with `M_{U,Λ′,Γ′} = M_{U,Λ,Γ}` for a perturbation `Λ′` of `Λ`, plus the
/// perturbation distance `mu` and the distance constant `lambda_const`.
///
/// # Safety
/// Handles must be live, `out` writable, scalar outputs null or writable.
#[no_mangle]
pub unsafe extern "C" fn gm_transfer_gamma(
    lambda: *const GmFrame,
    symbol: *const GmSymbol,
    gamma: *const GmFrame,
    lambda_prime: *const GmFrame,
    out: *mut *mut GmFrame,
    mu: *mut f64,
    lambda_const: *mut f64,
) -> GmStatus {
    guard(|| {
        let l = unsafe { handle(lambda, "lambda") }?;
        let u = unsafe { handle(symbol, "symbol") }?;
        let g = unsafe { handle(gamma, "gamma") }?;
        let lp = unsafe { handle(lambda_prime, "lambda_prime") }?;
        let r = perturb::transfer_gamma(&l.0, &u.0, &g.0, &lp.0)?;
        unsafe {
            write(mu, r.mu);
            write(lambda_const, r.lambda_const);
            give(out, GmFrame(r.gamma_prime))
        }
    })
}
