//! C bindings for `inputtopic`.
//!
//! Handles are opaque and must be released with their `_free` function.
//! Functions returning JSON hand ownership of the string to the caller, who
//! releases it with [`it_string_free`]. On failure a status other than
//! `IT_STATUS_OK` is returned and [`it_last_error_message`] describes it.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use inputtopic::cli::{infer_pages, load_index, InferRequest};
use inputtopic::extract::{extract_form_fields, ExtractedField};
use inputtopic::{paired_t_test, Error, ExtractionConfig, Method, Page, RuleSet, SimilarityIndex};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ItStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidModel = 5,
    InvalidArgument = 6,
    Inference = 7,
    Panic = 99,
}

/// A trained model directory loaded into memory.
pub struct ItModel {
    index: SimilarityIndex,
}

/// A parsed rule file.
pub struct ItRules {
    rules: RuleSet,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ItTTest {
    pub t_statistic: f64,
    pub degrees_of_freedom: usize,
    /// Two-sided.
    pub p_value: f64,
    pub exact_separation: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(ItStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => ItStatus::Io,
            Error::Parse { .. } => ItStatus::Parse,
            Error::InvalidModel(_) | Error::DegenerateMatrix | Error::EmptyCorpus => ItStatus::InvalidModel,
            Error::InvalidConfig(_)
            | Error::LengthMismatch { .. }
            | Error::TooFewSamples { .. }
            | Error::DuplicateDocId(_)
            | Error::NonDenseDocId { .. }
            | Error::Locator(_) => ItStatus::InvalidArgument,
            _ => ItStatus::Inference,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ItStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ItStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("panic inside inputtopic");
            ItStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(ItStatus::NullArgument, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(ItStatus::InvalidUtf8, format!("`{name}` is not valid UTF-8")))
}

fn out_arg<T>(p: *mut T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(ItStatus::NullArgument, format!("`{name}` is null")))
    } else {
        Ok(())
    }
}

fn json_out(json: serde_json::Result<String>, out: *mut *mut c_char) -> Result<(), Failure> {
    let json = json.map_err(|e| Failure(ItStatus::Inference, e.to_string()))?;
    let c = CString::new(json).map_err(|e| Failure(ItStatus::Inference, e.to_string()))?;
    // SAFETY: checked non-null by the caller of json_out.
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn it_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn it_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn it_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a model directory written by `inputtopic train`. Topics come from
/// `topics.json` in the directory unless `topics_path` is non-null.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn it_model_load(
    model_dir: *const c_char,
    topics_path: *const c_char,
    out: *mut *mut ItModel,
) -> ItStatus {
    guard(|| {
        out_arg(out, "out")?;
        let dir = str_arg(model_dir, "model_dir")?;
        let topics = if topics_path.is_null() {
            None
        } else {
            Some(Path::new(str_arg(topics_path, "topics_path")?))
        };
        let index = load_index(Path::new(dir), topics)?;
        *out = Box::into_raw(Box::new(ItModel { index }));
        Ok(())
    })
}

/// Number of labeled fields in the model's index.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn it_model_size(model: *const ItModel) -> usize {
    model.as_ref().map_or(0, |m| m.index.len())
}

/// # Safety
/// `model` must be null or a handle from [`it_model_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn it_model_free(model: *mut ItModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Reads a rule file (a JSON array of `{feature_string, topic}` objects).
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn it_rules_load(path: *const c_char, out: *mut *mut ItRules) -> ItStatus {
    guard(|| {
        out_arg(out, "out")?;
        let rules = RuleSet::load(str_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(ItRules { rules }));
        Ok(())
    })
}

/// Parses rules from a JSON string in the rule file format.
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn it_rules_parse(json: *const c_char, out: *mut *mut ItRules) -> ItStatus {
    guard(|| {
        out_arg(out, "out")?;
        let rules = RuleSet::parse(str_arg(json, "json")?)?;
        *out = Box::into_raw(Box::new(ItRules { rules }));
        Ok(())
    })
}

/// # Safety
/// `rules` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn it_rules_free(rules: *mut ItRules) {
    if !rules.is_null() {
        drop(Box::from_raw(rules));
    }
}

/// Extracts every input field of an HTML page with default settings. On
/// success `*out_json` holds an array of `{page_id, element_path, tokens}`.
///
/// # Safety
/// String arguments must be NUL-terminated; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn it_extract_html(
    page_id: *const c_char,
    html: *const c_char,
    out_json: *mut *mut c_char,
) -> ItStatus {
    guard(|| {
        out_arg(out_json, "out_json")?;
        let page = Page::parse(str_arg(page_id, "page_id")?, str_arg(html, "html")?);
        let fields: Vec<ExtractedField> = extract_form_fields(&page, &ExtractionConfig::default())
            .into_iter()
            .map(|(f, v)| ExtractedField {
                page_id: f.page_id,
                element_path: f.element_path,
                tokens: v.tokens,
            })
            .collect();
        json_out(serde_json::to_string(&fields), out_json)
    })
}

/// Infers the topic of every input field on an HTML page. `method` is one
/// of `nl`, `rb`, `rb-nl-n`, `rb-nl-m`, `rb-nl-b`; `rules` may be null only
/// for `nl`. On success `*out_json` holds an array with one object per field
/// carrying `topic`, `method`, `neighbors` and the other inference details.
///
/// # Safety
/// `model` must be a live handle, `rules` null or a live handle, strings
/// NUL-terminated and `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn it_infer_html(
    model: *const ItModel,
    rules: *const ItRules,
    page_id: *const c_char,
    html: *const c_char,
    method: *const c_char,
    threshold: f64,
    seed: u64,
    out_json: *mut *mut c_char,
) -> ItStatus {
    guard(|| {
        out_arg(out_json, "out_json")?;
        let model = model
            .as_ref()
            .ok_or_else(|| Failure(ItStatus::NullArgument, "`model` is null".into()))?;
        let method: Method = str_arg(method, "method")?.parse()?;
        if method == Method::Random {
            return Err(Failure(ItStatus::InvalidArgument, "method RANDOM is not an inference method".into()));
        }
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Failure(ItStatus::InvalidArgument, format!("threshold {threshold} outside [0, 1]")));
        }
        let empty = RuleSet::default();
        let rules = match rules.as_ref() {
            Some(r) => &r.rules,
            None if method == Method::Nl => &empty,
            None => return Err(Failure(ItStatus::NullArgument, format!("method {method} needs rules"))),
        };
        let page = Page::parse(str_arg(page_id, "page_id")?, str_arg(html, "html")?);
        let req = InferRequest {
            method,
            threshold,
            seed,
            rules,
            databank: None,
        };
        let results = infer_pages(&[page], &model.index, &ExtractionConfig::default(), req)?;
        json_out(serde_json::to_string(&results), out_json)
    })
}

/// Paired two-sided t-test over `n` pairs.
///
/// # Safety
/// `xs` and `ys` must point to `n` doubles each; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn it_paired_t_test(xs: *const f64, ys: *const f64, n: usize, out: *mut ItTTest) -> ItStatus {
    guard(|| {
        out_arg(out, "out")?;
        if xs.is_null() || ys.is_null() {
            return Err(Failure(ItStatus::NullArgument, "sample pointer is null".into()));
        }
        let xs = std::slice::from_raw_parts(xs, n);
        let ys = std::slice::from_raw_parts(ys, n);
        let r = paired_t_test(xs, ys)?;
        *out = ItTTest {
            t_statistic: r.t_statistic,
            degrees_of_freedom: r.degrees_of_freedom,
            p_value: r.p_value,
            exact_separation: r.exact_separation,
        };
        Ok(())
    })
}
