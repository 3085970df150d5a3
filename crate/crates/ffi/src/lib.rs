//! C ABI for loading trained restoration models, restoring audio buffers
//! and computing SDR / STOI.
//!
//! Every function returns an [`OpganStatus`]. On failure a description is
//! kept per thread and can be fetched with [`opgan_last_error_message`].
//! Models are opaque handles created by [`opgan_model_load`] and released
//! with [`opgan_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use opgan::models::Generator;
use opgan::trainer::{restore, Checkpoint};
use opgan::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpganStatus {
    Ok = 0,
    NullPointer = 1,
    Config = 2,
    Io = 3,
    Format = 4,
    Input = 5,
    Divergence = 6,
    RetryExhausted = 7,
    InvalidUtf8 = 8,
    Panic = 9,
}

/// Loaded checkpoint and its generator.
pub struct OpganModel {
    checkpoint: Checkpoint,
    generator: Generator,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> OpganStatus {
    match e {
        Error::Config(_) => OpganStatus::Config,
        Error::Input(_) => OpganStatus::Input,
        Error::Io { .. } => OpganStatus::Io,
        Error::Format { .. } => OpganStatus::Format,
        Error::RetryExhausted { .. } => OpganStatus::RetryExhausted,
        Error::Divergence { .. } => OpganStatus::Divergence,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (OpganStatus, String)>) -> OpganStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            OpganStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            OpganStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (OpganStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (OpganStatus, String) {
    (OpganStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` must be null or point to `len` readable floats.
unsafe fn slice<'a>(p: *const f32, len: usize, what: &str) -> Result<&'a [f32], (OpganStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Loads a checkpoint file and stores a new handle in `*out`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn opgan_model_load(path: *const c_char, out: *mut *mut OpganModel) -> OpganStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (OpganStatus::InvalidUtf8, "path is not valid UTF-8".to_string()))?;
        let checkpoint = Checkpoint::read(Path::new(path)).map_err(lib_err)?;
        let generator = checkpoint.generator().map_err(lib_err)?;
        *out = Box::into_raw(Box::new(OpganModel { checkpoint, generator }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `model` must come from [`opgan_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn opgan_model_free(model: *mut OpganModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Polynomial order Q of the model's generative layers.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn opgan_model_order(model: *const OpganModel, out: *mut u32) -> OpganStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = m.checkpoint.order;
        Ok(())
    })
}

/// Generator and discriminator parameter counts (the latter is 0 for
/// generator-only checkpoints).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn opgan_model_param_counts(
    model: *const OpganModel,
    generator: *mut usize,
    discriminator: *mut usize,
) -> OpganStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        *generator.as_mut().ok_or_else(|| null("generator"))? = m.checkpoint.generator_params();
        *discriminator.as_mut().ok_or_else(|| null("discriminator"))? = m.checkpoint.discriminator_params();
        Ok(())
    })
}

/// Training sample rate recorded in the checkpoint, or 0 when absent.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn opgan_model_sample_rate(model: *const OpganModel, out: *mut u32) -> OpganStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = m.checkpoint.sample_rate.unwrap_or(0);
        Ok(())
    })
}

/// Restores `len` samples from `input` into `output` (which may alias `input`).
///
/// # Safety
/// `input` and `output` must each hold `len` floats.
#[no_mangle]
pub unsafe extern "C" fn opgan_restore(
    model: *const OpganModel,
    input: *const f32,
    len: usize,
    output: *mut f32,
) -> OpganStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let x = slice(input, len, "input")?;
        if len > 0 && output.is_null() {
            return Err(null("output"));
        }
        let y = restore(x, &m.generator).map_err(lib_err)?;
        if len > 0 {
            ptr::copy(y.as_ptr(), output, len);
        }
        Ok(())
    })
}

/// Signal-to-distortion ratio of `estimate` against `reference`, in dB.
///
/// # Safety
/// Both buffers must hold `len` floats; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn opgan_sdr(reference: *const f32, estimate: *const f32, len: usize, out: *mut f64) -> OpganStatus {
    guard(|| {
        let r = slice(reference, len, "reference")?;
        let e = slice(estimate, len, "estimate")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = opgan::metrics::sdr(r, e).map_err(lib_err)?;
        Ok(())
    })
}

/// Short-time objective intelligibility of `estimate` against `reference`.
///
/// # Safety
/// Both buffers must hold `len` floats; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn opgan_stoi(
    reference: *const f32,
    estimate: *const f32,
    len: usize,
    sample_rate: u32,
    out: *mut f64,
) -> OpganStatus {
    guard(|| {
        let r = slice(reference, len, "reference")?;
        let e = slice(estimate, len, "estimate")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = opgan::metrics::stoi(r, e, sample_rate).map_err(lib_err)?;
        Ok(())
    })
}

/// Copies the calling thread's last error message into `buf` (truncated and
/// NUL-terminated) and returns the full message length excluding the NUL.
/// Pass a null `buf` to query the length.
///
/// # Safety
/// `buf` must be null or point to `buf_len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn opgan_last_error_message(buf: *mut c_char, buf_len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && buf_len > 0 {
            let n = msg.len().min(buf_len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn opgan_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
