//! C ABI over the catnet library.
//!
//! Every function returns a [`CatnetStatus`]; on failure the message is
//! kept per thread and can be fetched with [`catnet_last_error_message`].
//! Networks are opaque handles owned by the caller and released with
//! [`catnet_network_free`]. Panics never cross the boundary; they surface
//! as `CATNET_STATUS_PANIC`.
//!
//! Arrays are passed as pointer plus length. Output buffers must have room
//! for the documented number of elements.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use catnet::classify::nme_classify;
use catnet::cli::{cmd_run, CliError};
use catnet::evaluate::{compute_bwt, compute_mean_accuracy, initial_accuracy, AccuracyMatrix};
use catnet::exemplar::{herd_select, FeatureMeanMatrix};
use catnet::nn::{checkpoint, Network};
use catnet::rng::{derive, Purpose};
use catnet::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatnetStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    Io = 4,
    Format = 5,
    NotUnitNorm = 6,
    Undefined = 7,
    Config = 8,
    Runtime = 9,
    Panic = 10,
}

/// Opaque network handle.
pub struct CatnetNetwork {
    net: Network,
}

/// Headline metrics of a finished run. `bwt` is NaN for single-task runs.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatnetRunSummary {
    pub n_tasks: usize,
    pub bwt: f64,
    pub mean_accuracy: f64,
    pub initial_accuracy: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CatnetStatus {
    match e {
        Error::Shape { .. } => CatnetStatus::ShapeMismatch,
        Error::NotUnitNorm { .. } => CatnetStatus::NotUnitNorm,
        Error::Io(_) | Error::MissingArtifact(_) => CatnetStatus::Io,
        Error::Format(_) | Error::Truncated { .. } | Error::Json(_) => CatnetStatus::Format,
        Error::Metric(_) => CatnetStatus::Undefined,
        Error::Config(_) => CatnetStatus::Config,
        Error::Param(_) | Error::NoSamples | Error::EmptyClass(_) | Error::DuplicateClass(_) => {
            CatnetStatus::InvalidArgument
        }
        Error::Task { source, .. } => status_of(source),
        _ => CatnetStatus::Runtime,
    }
}

struct Fail(CatnetStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(CatnetStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CatnetStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CatnetStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            CatnetStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail(CatnetStatus::NullPointer, format!("{name} is null")));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Fail(CatnetStatus::NullPointer, format!("{name} is null")));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn out_ref<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut()
        .ok_or_else(|| Fail(CatnetStatus::NullPointer, format!("{name} is null")))
}

unsafe fn path_arg<'a>(p: *const c_char, name: &str) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(Fail(CatnetStatus::NullPointer, format!("{name} is null")));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{name} is not UTF-8")))?;
    Ok(Path::new(s))
}

unsafe fn handle<'a>(p: *const CatnetNetwork) -> Result<&'a CatnetNetwork, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(CatnetStatus::NullPointer, "network handle is null".into()))
}

unsafe fn handle_mut<'a>(p: *mut CatnetNetwork) -> Result<&'a mut CatnetNetwork, Fail> {
    p.as_mut()
        .ok_or_else(|| Fail(CatnetStatus::NullPointer, "network handle is null".into()))
}

fn check_len(name: &str, got: usize, want: usize) -> Result<(), Fail> {
    if got == want {
        Ok(())
    } else {
        Err(Fail(
            CatnetStatus::ShapeMismatch,
            format!("{name}: expected {want} elements, got {got}"),
        ))
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn catnet_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated
/// and always NUL-terminated when `len > 0`). Returns the buffer size the
/// full message needs, including the terminator, or 0 when there is no
/// error.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn catnet_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = (bytes.len() - 1).min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Creates a network with ReLU hidden layers and `classes` outputs,
/// initialized from `seed`.
///
/// # Safety
/// `hidden` must be valid for `n_hidden` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn catnet_network_new(
    input_dim: usize,
    hidden: *const usize,
    n_hidden: usize,
    classes: usize,
    seed: u64,
    out: *mut *mut CatnetNetwork,
) -> CatnetStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let hidden = input(hidden, n_hidden, "hidden")?;
        let net = Network::new(input_dim, hidden, classes, &mut derive(seed, Purpose::Init, 0, 0))?;
        *out = Box::into_raw(Box::new(CatnetNetwork { net }));
        Ok(())
    })
}

/// Loads a checkpoint file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn catnet_network_load(path: *const c_char, out: *mut *mut CatnetNetwork) -> CatnetStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let net = checkpoint::load(path_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(CatnetNetwork { net }));
        Ok(())
    })
}

/// Writes a checkpoint file atomically.
///
/// # Safety
/// `net` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn catnet_network_save(net: *const CatnetNetwork, path: *const c_char) -> CatnetStatus {
    guard(|| {
        checkpoint::save(&handle(net)?.net, path_arg(path, "path")?)?;
        Ok(())
    })
}

/// Releases a handle. Null is accepted.
///
/// # Safety
/// `net` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn catnet_network_free(net: *mut CatnetNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Input width, number of outputs and feature width.
///
/// # Safety
/// `net` must be a live handle; each out pointer must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn catnet_network_dims(
    net: *const CatnetNetwork,
    input_dim: *mut usize,
    outputs: *mut usize,
    feature_dim: *mut usize,
) -> CatnetStatus {
    guard(|| {
        let net = &handle(net)?.net;
        for (p, v) in [
            (input_dim, net.input_dim()),
            (outputs, net.output_classes()),
            (feature_dim, net.feature_dim()),
        ] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Writes the logits for one input vector into `logits` (`logits_len`
/// must equal the number of outputs).
///
/// # Safety
/// Pointers must be valid for the given lengths.
#[no_mangle]
pub unsafe extern "C" fn catnet_network_forward(
    net: *const CatnetNetwork,
    x: *const f64,
    x_len: usize,
    logits: *mut f64,
    logits_len: usize,
) -> CatnetStatus {
    guard(|| {
        let net = &handle(net)?.net;
        let x = input(x, x_len, "x")?;
        let dst = output(logits, logits_len, "logits")?;
        check_len("logits", logits_len, net.output_classes())?;
        dst.copy_from_slice(&net.forward(x)?.logits);
        Ok(())
    })
}

/// Writes the L2-normalized feature for one input. A zero activation
/// yields the zero vector and sets `*zero_norm` to true.
///
/// # Safety
/// Pointers must be valid for the given lengths; `zero_norm` may be null.
#[no_mangle]
pub unsafe extern "C" fn catnet_network_extract_feature(
    net: *const CatnetNetwork,
    x: *const f64,
    x_len: usize,
    feature: *mut f64,
    feature_len: usize,
    zero_norm: *mut bool,
) -> CatnetStatus {
    guard(|| {
        let net = &handle(net)?.net;
        let x = input(x, x_len, "x")?;
        let dst = output(feature, feature_len, "feature")?;
        check_len("feature", feature_len, net.feature_dim())?;
        let f = net.extract_feature(x)?;
        dst.copy_from_slice(&f.vector);
        if let Some(z) = zero_norm.as_mut() {
            *z = f.zero_norm;
        }
        Ok(())
    })
}

/// Appends `m` output units; existing weights are untouched.
///
/// # Safety
/// `net` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn catnet_network_expand_output(net: *mut CatnetNetwork, m: usize, seed: u64) -> CatnetStatus {
    guard(|| {
        let h = handle_mut(net)?;
        let task = h.net.output_classes();
        h.net.expand_output(m, &mut derive(seed, Purpose::Expand, task, 0));
        Ok(())
    })
}

/// Herds up to `k` exemplars from `n` row-major feature vectors of width
/// `dim`, writing their indices in selection order to `out` (room for `k`)
/// and the number written, `min(k, n)`, to `out_count`.
///
/// # Safety
/// `features` must hold `n * dim` values and `out` room for `k` indices;
/// `out_count` must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn catnet_herd_select(
    features: *const f64,
    n: usize,
    dim: usize,
    k: usize,
    out: *mut usize,
    out_count: *mut usize,
) -> CatnetStatus {
    guard(|| {
        if dim == 0 {
            return Err(invalid("dim must be positive"));
        }
        let len = n.checked_mul(dim).ok_or_else(|| invalid("n * dim overflows"))?;
        let flat = input(features, len, "features")?;
        let rows: Vec<Vec<f64>> = flat.chunks_exact(dim).map(<[f64]>::to_vec).collect();
        let picked = herd_select(&rows, k)?;
        output(out, k, "out")?[..picked.len()].copy_from_slice(&picked);
        if let Some(c) = out_count.as_mut() {
            *c = picked.len();
        }
        Ok(())
    })
}

/// Nearest-mean classification of one feature against `n_classes`
/// row-major means of width `dim`.
///
/// # Safety
/// `feature` must hold `dim` values, `means` `n_classes * dim`, and
/// `class_ids` `n_classes`; out pointers must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn catnet_nme_classify(
    feature: *const f64,
    dim: usize,
    means: *const f64,
    class_ids: *const u32,
    n_classes: usize,
    out_class: *mut u32,
    out_distance: *mut f64,
    out_margin: *mut f64,
) -> CatnetStatus {
    guard(|| {
        if dim == 0 {
            return Err(invalid("dim must be positive"));
        }
        let f = input(feature, dim, "feature")?;
        let len = n_classes
            .checked_mul(dim)
            .ok_or_else(|| invalid("n_classes * dim overflows"))?;
        let m = input(means, len, "means")?;
        let ids = input(class_ids, n_classes, "class_ids")?;
        let matrix = FeatureMeanMatrix::new(ids.to_vec(), m.chunks_exact(dim).map(<[f64]>::to_vec).collect(), dim)?;
        let d = nme_classify(f, &matrix)?;
        let class = out_ref(out_class, "out_class")?;
        *class = d.class;
        if let Some(p) = out_distance.as_mut() {
            *p = d.distance;
        }
        if let Some(p) = out_margin.as_mut() {
            *p = d.margin;
        }
        Ok(())
    })
}

unsafe fn lower_matrix(r: *const f64, n: usize) -> Result<AccuracyMatrix, Fail> {
    let len = n.checked_mul(n).ok_or_else(|| invalid("n * n overflows"))?;
    let flat = input(r, len, "r")?;
    let rows: Vec<Vec<f64>> = (0..n).map(|i| flat[i * n..i * n + i + 1].to_vec()).collect();
    Ok(AccuracyMatrix::from_lower(&rows)?)
}

/// Mean of the strict lower triangle of the `n`×`n` row-major matrix `r`.
/// Entries above the diagonal are ignored (NaN is fine there).
/// `CATNET_STATUS_UNDEFINED` when `n < 2`.
///
/// # Safety
/// `r` must hold `n * n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn catnet_compute_bwt(r: *const f64, n: usize, out: *mut f64) -> CatnetStatus {
    guard(|| {
        let m = lower_matrix(r, n)?;
        *out_ref(out, "out")? = compute_bwt(&m)?;
        Ok(())
    })
}

/// Mean of the last row of `r`.
///
/// # Safety
/// `r` must hold `n * n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn catnet_compute_mean_accuracy(r: *const f64, n: usize, out: *mut f64) -> CatnetStatus {
    guard(|| {
        let m = lower_matrix(r, n)?;
        *out_ref(out, "out")? = compute_mean_accuracy(&m)?;
        Ok(())
    })
}

/// `R[0][0]`.
///
/// # Safety
/// `r` must hold `n * n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn catnet_initial_accuracy(r: *const f64, n: usize, out: *mut f64) -> CatnetStatus {
    guard(|| {
        let m = lower_matrix(r, n)?;
        *out_ref(out, "out")? = initial_accuracy(&m)?;
        Ok(())
    })
}

/// Same as `catnet run --config <config> --out <out_dir> [--force]`.
/// `summary` may be null.
///
/// # Safety
/// Paths must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn catnet_run_config(
    config: *const c_char,
    out_dir: *const c_char,
    force: bool,
    summary: *mut CatnetRunSummary,
) -> CatnetStatus {
    guard(|| {
        let config = path_arg(config, "config")?;
        let out_dir = path_arg(out_dir, "out_dir")?;
        let report = cmd_run(config, out_dir, force).map_err(|e| match e {
            CliError::Usage(msg) => Fail(CatnetStatus::Config, msg),
            CliError::Runtime(e) => Fail::from(e),
        })?;
        if let Some(s) = summary.as_mut() {
            *s = CatnetRunSummary {
                n_tasks: report.r.len(),
                bwt: report.bwt.unwrap_or(f64::NAN),
                mean_accuracy: report.mean_accuracy,
                initial_accuracy: report.initial_accuracy,
            };
        }
        Ok(())
    })
}
