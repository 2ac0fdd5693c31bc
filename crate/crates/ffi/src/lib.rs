//! C ABI over the devforge library.
//!
//! Every function returns a [`DvStatus`]; on failure a message for the
//! calling thread is available from [`dv_last_error`]. Objects handed out
//! (`DvModel`, `DvStringList`) are opaque and must be released with their
//! `_free` function. Strings in and out are NUL-terminated UTF-8.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use devforge::corpus::{clean_tokenize, RoleLabel};
use devforge::eval::macro_weighted_metrics;
use devforge::imports::{default_extractor, ImportError, LanguageId};
use devforge::pipelines::{average_api_vectors, ApiWeighting};
use devforge::pv::{EmbeddingModel, PvError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    CorruptModel = 4,
    VersionMismatch = 5,
    OovOnly = 6,
    InvalidArgument = 7,
    BufferTooSmall = 8,
    UnknownLanguage = 9,
    NotFound = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DvWeighting {
    Frequency = 0,
    Unweighted = 1,
}

/// Macro-weighted scores as fractions in `[0, 1]`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DvScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// A trained embedding model.
pub struct DvModel {
    inner: EmbeddingModel,
}

/// An owned list of strings.
pub struct DvStringList {
    items: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

struct Failure(DvStatus, String);

impl From<PvError> for Failure {
    fn from(e: PvError) -> Self {
        let status = match &e {
            PvError::Io(_) => DvStatus::Io,
            PvError::FormatVersionMismatch { .. } => DvStatus::VersionMismatch,
            PvError::CorruptModel(_) => DvStatus::CorruptModel,
            PvError::OovOnly => DvStatus::OovOnly,
            _ => DvStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<ImportError> for Failure {
    fn from(e: ImportError) -> Self {
        let status = match &e {
            ImportError::UnknownLanguage(_) => DvStatus::UnknownLanguage,
            _ => DvStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: DvStatus, message: impl Into<String>) -> Failure {
    Failure(status, message.into())
}

/// Runs `body`, turning errors and panics into a status plus message.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> DvStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            DvStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            DvStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(DvStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(DvStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn str_array<'a>(p: *const *const c_char, n: usize, what: &str) -> Result<Vec<&'a str>, Failure> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if p.is_null() {
        return Err(fail(DvStatus::NullPointer, format!("{what} is null")));
    }
    std::slice::from_raw_parts(p, n)
        .iter()
        .map(|&s| str_arg(s, what))
        .collect()
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, need: usize) -> Result<&'a mut [T], Failure> {
    if p.is_null() {
        return Err(fail(DvStatus::NullPointer, "output buffer is null"));
    }
    if len < need {
        return Err(fail(DvStatus::BufferTooSmall, format!("output buffer holds {len}, need {need}")));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

unsafe fn model_ref<'a>(model: *const DvModel) -> Result<&'a EmbeddingModel, Failure> {
    model
        .as_ref()
        .map(|m| &m.inner)
        .ok_or_else(|| fail(DvStatus::NullPointer, "model is null"))
}

fn string_list(items: Vec<String>) -> Result<*mut DvStringList, Failure> {
    let items = items
        .into_iter()
        .map(|s| CString::new(s).map_err(|_| fail(DvStatus::InvalidArgument, "string contains NUL")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Box::into_raw(Box::new(DvStringList { items })))
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn dv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn dv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a model file written by `devforge train`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dv_model_load(path: *const c_char, out: *mut *mut DvModel) -> DvStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(DvStatus::NullPointer, "out is null"));
        }
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let inner = EmbeddingModel::load(Path::new(path))?;
        *out = Box::into_raw(Box::new(DvModel { inner }));
        Ok(())
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must come from [`dv_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dv_model_free(model: *mut DvModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Vector length of the model, or 0 for null.
///
/// # Safety
/// `model` must be null or a live model.
#[no_mangle]
pub unsafe extern "C" fn dv_model_dim(model: *const DvModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.dim())
}

/// Infers a vector for `tokens` into `out[0..dim]`. Unknown tokens are
/// ignored; a document with none known gives `DV_STATUS_OOV_ONLY`.
///
/// # Safety
/// `tokens` must point to `n_tokens` strings and `out` to `out_len` floats.
#[no_mangle]
pub unsafe extern "C" fn dv_model_infer(
    model: *const DvModel,
    tokens: *const *const c_char,
    n_tokens: usize,
    epochs: usize,
    seed: u64,
    out: *mut f32,
    out_len: usize,
) -> DvStatus {
    guard(|| {
        let model = model_ref(model)?;
        let tokens = str_array(tokens, n_tokens, "tokens")?;
        let dst = out_slice(out, out_len, model.dim())?;
        let v = model.infer(&tokens, epochs, &mut ChaCha8Rng::seed_from_u64(seed))?;
        dst.copy_from_slice(&v);
        Ok(())
    })
}

/// Copies the trained vector of document `tag` into `out[0..dim]`.
///
/// # Safety
/// `tag` must be a NUL-terminated string and `out` point to `out_len` floats.
#[no_mangle]
pub unsafe extern "C" fn dv_model_doc_vector(
    model: *const DvModel,
    tag: *const c_char,
    out: *mut f32,
    out_len: usize,
) -> DvStatus {
    guard(|| {
        let model = model_ref(model)?;
        let tag = str_arg(tag, "tag")?;
        let dst = out_slice(out, out_len, model.dim())?;
        let v = model
            .doc_vector(tag)
            .ok_or_else(|| fail(DvStatus::NotFound, format!("no document tagged `{tag}`")))?;
        dst.copy_from_slice(v);
        Ok(())
    })
}

/// Weighted average of the word vectors of `names`, skipping unknown ones,
/// written to `out[0..dim]`. `weighting` is a [`DvWeighting`] value.
///
/// # Safety
/// `names` and `counts` must each point to `n` elements and `out` to
/// `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dv_embed_apis(
    model: *const DvModel,
    names: *const *const c_char,
    counts: *const u64,
    n: usize,
    weighting: u32,
    out: *mut f64,
    out_len: usize,
) -> DvStatus {
    guard(|| {
        let model = model_ref(model)?;
        let names = str_array(names, n, "names")?;
        if n > 0 && counts.is_null() {
            return Err(fail(DvStatus::NullPointer, "counts is null"));
        }
        let counts = if n == 0 { &[][..] } else { std::slice::from_raw_parts(counts, n) };
        let dst = out_slice(out, out_len, model.dim())?;
        let mut multiset: BTreeMap<String, u64> = BTreeMap::new();
        for (name, &c) in names.iter().zip(counts) {
            *multiset.entry(name.to_lowercase()).or_insert(0) += c;
        }
        let weighting = match weighting {
            w if w == DvWeighting::Frequency as u32 => ApiWeighting::Frequency,
            w if w == DvWeighting::Unweighted as u32 => ApiWeighting::Unweighted,
            w => return Err(fail(DvStatus::InvalidArgument, format!("unknown weighting {w}"))),
        };
        let v = average_api_vectors(|a| model.word_vector(a), &multiset, weighting)?;
        dst.copy_from_slice(&v);
        Ok(())
    })
}

/// Cleans and tokenizes free text the way documents are built.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dv_tokenize(text: *const c_char, out: *mut *mut DvStringList) -> DvStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(DvStatus::NullPointer, "out is null"));
        }
        *out = ptr::null_mut();
        let text = str_arg(text, "text")?;
        *out = string_list(clean_tokenize(text))?;
        Ok(())
    })
}

/// Import names found in `content`, in source order. `language` is a
/// language name such as "Python" or "c#"; notebooks take "JupyterNotebook".
///
/// # Safety
/// `content` and `language` must be NUL-terminated strings and `out` a
/// writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dv_extract_imports(
    content: *const c_char,
    language: *const c_char,
    out: *mut *mut DvStringList,
) -> DvStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(DvStatus::NullPointer, "out is null"));
        }
        *out = ptr::null_mut();
        let content = str_arg(content, "content")?;
        let language: LanguageId = str_arg(language, "language")?.parse()?;
        *out = string_list(default_extractor().extract_imports(content, language)?)?;
        Ok(())
    })
}

/// Number of strings, or 0 for null.
///
/// # Safety
/// `list` must be null or a live list.
#[no_mangle]
pub unsafe extern "C" fn dv_string_list_len(list: *const DvStringList) -> usize {
    list.as_ref().map_or(0, |l| l.items.len())
}

/// The `i`-th string, or null when out of range. Owned by the list.
///
/// # Safety
/// `list` must be null or a live list.
#[no_mangle]
pub unsafe extern "C" fn dv_string_list_get(list: *const DvStringList, i: usize) -> *const c_char {
    list.as_ref()
        .and_then(|l| l.items.get(i))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// Releases a list; null is ignored.
///
/// # Safety
/// `list` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dv_string_list_free(list: *mut DvStringList) {
    if !list.is_null() {
        drop(Box::from_raw(list));
    }
}

/// Macro-weighted precision, recall and F1 of `n` predictions. Labels are
/// role indices: 0 Backend, 1 Frontend, 2 Mobile, 3 DevOps, 4 DataScientist.
/// Scores cover the roles present in either vector.
///
/// # Safety
/// `y_true` and `y_pred` must point to `n` bytes and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn dv_macro_weighted_metrics(
    y_true: *const u8,
    y_pred: *const u8,
    n: usize,
    out: *mut DvScores,
) -> DvStatus {
    guard(|| {
        if y_true.is_null() || y_pred.is_null() || out.is_null() {
            return Err(fail(DvStatus::NullPointer, "null argument"));
        }
        let decode = |raw: &[u8]| {
            raw.iter()
                .map(|&i| {
                    RoleLabel::ALL
                        .get(usize::from(i))
                        .copied()
                        .ok_or_else(|| fail(DvStatus::InvalidArgument, format!("role index {i} out of range")))
                })
                .collect::<Result<Vec<_>, _>>()
        };
        let t = decode(std::slice::from_raw_parts(y_true, n))?;
        let p = decode(std::slice::from_raw_parts(y_pred, n))?;
        let classes = devforge::eval::present_classes(&t, &p);
        let report = macro_weighted_metrics(&t, &p, &classes)
            .map_err(|e| fail(DvStatus::InvalidArgument, e.to_string()))?;
        let s = report.macro_weighted;
        *out = DvScores {
            precision: s.precision,
            recall: s.recall,
            f1: s.f1,
        };
        Ok(())
    })
}
