//! C ABI over lexcorpus.
//!
//! Every function returns an [`LcStatus`]; on anything but `LC_STATUS_OK` the
//! message is available from [`lc_last_error`] on the same thread. Strings
//! handed out by the library are NUL-terminated UTF-8 and must be released
//! with [`lc_string_free`]. Handles are released with their `_free` function.
//!
//! Configuration errors map to `LC_STATUS_INVALID_ARGUMENT` and every other
//! library error (bad input data, out-of-range steps, malformed curves) to
//! `LC_STATUS_DATA_ERROR`, mirroring the CLI's exit codes 1 and 2.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lexcorpus::chunk::{pack_chunks, Chunk, ChunkRecord};
use lexcorpus::eval::{curve_auc, f1_scores, Averaging, LearningCurve, PredictionRecord};
use lexcorpus::io::read_jsonl;
use lexcorpus::lang::{passes_gate, read_profiles, LanguageIdentifier};
use lexcorpus::mask::{mask_chunk, MaskingConfig, MlmExample};
use lexcorpus::schedule::{effective_batch, lr_at, TrainConfig};
use lexcorpus::{clean_text, split_sentences, CleanPolicy, Error, NgramIdentifier, Tokenizer, WordPieceTokenizer};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    DataError = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LcAveraging {
    Micro = 0,
    Macro = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LcCleanPolicy {
    pub collapse_spaces: bool,
    pub collapse_newlines: bool,
    pub strip_control: bool,
    pub trim_ends: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LcMaskingConfig {
    pub mask_rate: f64,
    pub p_mask: f64,
    pub p_random: f64,
    pub p_keep: f64,
    pub seed: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LcScheduleConfig {
    pub lr_peak: f64,
    pub warmup_frac: f64,
    pub total_steps: u64,
}

/// Language identifier handle.
pub struct LcIdentifier {
    inner: NgramIdentifier,
}

/// Tokenizer handle.
pub struct LcTokenizer {
    inner: WordPieceTokenizer,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: LcStatus,
    message: String,
}

impl Failure {
    fn new(status: LcStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = if e.is_usage() {
            LcStatus::InvalidArgument
        } else {
            LcStatus::DataError
        };
        Failure::new(status, e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::new(LcStatus::DataError, e.to_string())
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> LcStatus {
    let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|payload| {
        let message = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panic".to_string());
        Err(Failure::new(LcStatus::Panic, message))
    });
    match result {
        Ok(()) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            LcStatus::Ok
        }
        Err(failure) => {
            set_last_error(&failure.message);
            failure.status
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(LcStatus::NullPointer, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure::new(LcStatus::InvalidUtf8, format!("`{name}`: {e}")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure::new(LcStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(LcStatus::NullPointer, format!("`{name}` is null")))
}

fn to_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure::new(LcStatus::DataError, "output contains a NUL byte"))
}

/// Message of the last failed call on this thread, or NULL after a
/// successful call. Valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn lc_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub extern "C" fn lc_clean_policy_default() -> LcCleanPolicy {
    let p = CleanPolicy::default();
    LcCleanPolicy {
        collapse_spaces: p.collapse_spaces,
        collapse_newlines: p.collapse_newlines,
        strip_control: p.strip_control,
        trim_ends: p.trim_ends,
    }
}

/// Cleans `text`. A NULL `policy` applies every rule.
///
/// # Safety
/// `text` must be a NUL-terminated string, `policy` NULL or valid, `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lc_clean_text(
    text: *const c_char,
    policy: *const LcCleanPolicy,
    out: *mut *mut c_char,
) -> LcStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let out = out_arg(out, "out")?;
        let policy = policy.as_ref().map_or_else(CleanPolicy::default, |p| CleanPolicy {
            collapse_spaces: p.collapse_spaces,
            collapse_newlines: p.collapse_newlines,
            strip_control: p.strip_control,
            trim_ends: p.trim_ends,
        });
        *out = to_c_string(clean_text(text, &policy))?;
        Ok(())
    })
}

/// Splits `text` into sentences, returned as a JSON array of strings.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lc_split_sentences(text: *const c_char, out: *mut *mut c_char) -> LcStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let out = out_arg(out, "out")?;
        *out = to_c_string(serde_json::to_string(&split_sentences(text))?)?;
        Ok(())
    })
}

/// Identifier over the bundled es, ca, gl, eu, pt, en and fr profiles.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lc_identifier_bundled(out: *mut *mut LcIdentifier) -> LcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let inner = NgramIdentifier::bundled().clone();
        *out = Box::into_raw(Box::new(LcIdentifier { inner }));
        Ok(())
    })
}

/// Identifier over a line-delimited profile file written by `build-profiles`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lc_identifier_from_profiles(
    path: *const c_char,
    out: *mut *mut LcIdentifier,
) -> LcStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        let file = std::fs::File::open(path)
            .map_err(|e| Failure::new(LcStatus::DataError, format!("{path}: {e}")))?;
        let profiles = read_profiles(std::io::BufReader::new(file))?;
        let inner = NgramIdentifier::new(&profiles)?;
        *out = Box::into_raw(Box::new(LcIdentifier { inner }));
        Ok(())
    })
}

/// # Safety
/// `handle` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lc_identifier_free(handle: *mut LcIdentifier) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Identifies the language of `text`. `language` receives a string to free
/// with [`lc_string_free`].
///
/// # Safety
/// All pointers must be valid; `text` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn lc_identify(
    handle: *const LcIdentifier,
    text: *const c_char,
    language: *mut *mut c_char,
    confidence: *mut f64,
) -> LcStatus {
    guard(|| {
        let handle = ref_arg(handle, "handle")?;
        let text = str_arg(text, "text")?;
        let language = out_arg(language, "language")?;
        let confidence = out_arg(confidence, "confidence")?;
        let verdict = handle.inner.identify(text)?;
        *language = to_c_string(verdict.language)?;
        *confidence = verdict.confidence;
        Ok(())
    })
}

/// Whether `text` passes the Spanish gate at `threshold`. Empty text fails.
///
/// # Safety
/// All pointers must be valid; `text` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn lc_passes_gate(
    handle: *const LcIdentifier,
    text: *const c_char,
    threshold: f64,
    keep: *mut bool,
) -> LcStatus {
    guard(|| {
        let handle = ref_arg(handle, "handle")?;
        let text = str_arg(text, "text")?;
        let keep = out_arg(keep, "keep")?;
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Failure::new(
                LcStatus::InvalidArgument,
                format!("threshold {threshold} is outside [0, 1]"),
            ));
        }
        *keep = match handle.inner.identify(text) {
            Ok(v) => passes_gate(&v, threshold),
            Err(Error::EmptyText) => false,
            Err(e) => return Err(e.into()),
        };
        Ok(())
    })
}

/// Tokenizer over the bundled vocabulary.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lc_tokenizer_bundled(out: *mut *mut LcTokenizer) -> LcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let inner = WordPieceTokenizer::bundled().clone();
        *out = Box::into_raw(Box::new(LcTokenizer { inner }));
        Ok(())
    })
}

/// Tokenizer over a vocabulary file, one token per line.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lc_tokenizer_from_file(path: *const c_char, out: *mut *mut LcTokenizer) -> LcStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        let inner = WordPieceTokenizer::from_file(path.as_ref())?;
        *out = Box::into_raw(Box::new(LcTokenizer { inner }));
        Ok(())
    })
}

/// # Safety
/// `handle` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lc_tokenizer_free(handle: *mut LcTokenizer) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of tokens in `text`.
///
/// # Safety
/// All pointers must be valid; `text` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn lc_token_count(
    handle: *const LcTokenizer,
    text: *const c_char,
    count: *mut usize,
) -> LcStatus {
    guard(|| {
        let handle = ref_arg(handle, "handle")?;
        let text = str_arg(text, "text")?;
        let count = out_arg(count, "count")?;
        *count = handle
            .inner
            .tokenize(text)
            .map_err(|e| Failure::new(LcStatus::DataError, e.0))?
            .len();
        Ok(())
    })
}

/// Splits `text` into sentences and packs them into chunks of at most
/// `max_tokens` tokens. `out` receives a JSON array of
/// `{doc_id, seq, text, token_count}` objects.
///
/// # Safety
/// All pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn lc_chunk_text(
    handle: *const LcTokenizer,
    doc_id: *const c_char,
    text: *const c_char,
    max_tokens: usize,
    out: *mut *mut c_char,
) -> LcStatus {
    guard(|| {
        let handle = ref_arg(handle, "handle")?;
        let doc_id = str_arg(doc_id, "doc_id")?;
        let text = str_arg(text, "text")?;
        let out = out_arg(out, "out")?;
        let chunks = pack_chunks(doc_id, &split_sentences(text), &handle.inner, max_tokens)?;
        let records: Vec<ChunkRecord> = chunks.iter().map(Chunk::record).collect();
        *out = to_c_string(serde_json::to_string(&records)?)?;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn lc_masking_config_default() -> LcMaskingConfig {
    let c = MaskingConfig::default();
    LcMaskingConfig {
        mask_rate: c.mask_rate,
        p_mask: c.p_mask,
        p_random: c.p_random,
        p_keep: c.p_keep,
        seed: c.seed,
    }
}

/// Whole-word masking over a JSON array of chunk records (as produced by
/// [`lc_chunk_text`]). `out` receives a JSON array of
/// `{doc_id, seq, input_ids, labels}` objects. A NULL `config` uses the
/// defaults with seed 0.
///
/// # Safety
/// All pointers except `config` must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn lc_mask_chunks(
    handle: *const LcTokenizer,
    chunks_json: *const c_char,
    config: *const LcMaskingConfig,
    out: *mut *mut c_char,
) -> LcStatus {
    guard(|| {
        let handle = ref_arg(handle, "handle")?;
        let json = str_arg(chunks_json, "chunks_json")?;
        let out = out_arg(out, "out")?;
        let config = config.as_ref().map_or_else(MaskingConfig::default, |c| MaskingConfig {
            mask_rate: c.mask_rate,
            p_mask: c.p_mask,
            p_random: c.p_random,
            p_keep: c.p_keep,
            seed: c.seed,
        });
        config.validate()?;
        let records: Vec<ChunkRecord> = serde_json::from_str(json)?;
        let examples = records
            .into_iter()
            .map(|r| mask_chunk(&Chunk::rehydrate(r, &handle.inner)?, &config, &handle.inner))
            .collect::<Result<Vec<MlmExample>, Error>>()?;
        *out = to_c_string(serde_json::to_string(&examples)?)?;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn lc_schedule_config_default(total_steps: u64) -> LcScheduleConfig {
    let c = TrainConfig::with_total_steps(total_steps);
    LcScheduleConfig {
        lr_peak: c.lr_peak,
        warmup_frac: c.warmup_frac,
        total_steps: c.total_steps,
    }
}

/// Learning rate after `step` optimizer steps.
///
/// # Safety
/// `config` and `lr` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn lc_lr_at(step: u64, config: *const LcScheduleConfig, lr: *mut f64) -> LcStatus {
    guard(|| {
        let c = ref_arg(config, "config")?;
        let lr = out_arg(lr, "lr")?;
        let config = TrainConfig {
            lr_peak: c.lr_peak,
            warmup_frac: c.warmup_frac,
            total_steps: c.total_steps,
            ..TrainConfig::default()
        };
        config.validate()?;
        *lr = lr_at(step, &config)?;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn lc_effective_batch(batch_size: u64, grad_accum: u64) -> u64 {
    effective_batch(&TrainConfig {
        batch_size,
        grad_accum,
        ..TrainConfig::default()
    })
}

/// Trapezoidal area under `n` points `(epochs[i], f1[i])`.
///
/// # Safety
/// `epochs` and `f1` must each point to `n` readable doubles; `auc` valid.
#[no_mangle]
pub unsafe extern "C" fn lc_curve_auc(epochs: *const f64, f1: *const f64, n: usize, auc: *mut f64) -> LcStatus {
    guard(|| {
        let auc = out_arg(auc, "auc")?;
        if n > 0 && (epochs.is_null() || f1.is_null()) {
            return Err(Failure::new(LcStatus::NullPointer, "`epochs` or `f1` is null"));
        }
        let points: Vec<(f64, f64)> = if n == 0 {
            Vec::new()
        } else {
            let e = std::slice::from_raw_parts(epochs, n);
            let f = std::slice::from_raw_parts(f1, n);
            e.iter().copied().zip(f.iter().copied()).collect()
        };
        let curve = LearningCurve {
            model_name: "curve".into(),
            points,
        };
        curve.validate()?;
        *auc = curve_auc(&curve)?;
        Ok(())
    })
}

/// F1 over line-delimited `{example_id, gold, predicted}` records.
///
/// # Safety
/// `predictions_jsonl` must be NUL-terminated and `f1` valid.
#[no_mangle]
pub unsafe extern "C" fn lc_f1_score(
    predictions_jsonl: *const c_char,
    averaging: LcAveraging,
    f1: *mut f64,
) -> LcStatus {
    guard(|| {
        let text = str_arg(predictions_jsonl, "predictions_jsonl")?;
        let f1 = out_arg(f1, "f1")?;
        let preds: Vec<PredictionRecord> = read_jsonl(text.as_bytes())?;
        let averaging = match averaging {
            LcAveraging::Micro => Averaging::Micro,
            LcAveraging::Macro => Averaging::Macro,
        };
        *f1 = f1_scores(&preds, None, averaging)?;
        Ok(())
    })
}
