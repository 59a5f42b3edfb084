//! C interface to the `lexcourt` retrieval pipeline.
//!
//! Objects cross the boundary as opaque pointers created by `*_load` / `*_build`
//! functions and released by the matching `*_free`. Every fallible call returns
//! an [`LcStatus`]; on failure, [`lc_last_error`] describes what went wrong on
//! the calling thread. Strings are UTF-8 and NUL-terminated.

use std::cell::RefCell;
use std::ffi::{CStr, CString, c_char};
use std::panic::{AssertUnwindSafe, catch_unwind};
use std::path::Path;
use std::ptr;

use lexcourt::statutes::load_statute_titles;
use lexcourt::{
    CaseRanking, Collection, Error, ExperimentConfig, Granularity, Index, Retriever, annotate_collection,
    build_index, load_collection,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Validation = 4,
    Argument = 5,
    Format = 6,
    Internal = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LcGranularity {
    Document = 0,
    Passage = 1,
}

/// A loaded case collection with optional relevance judgements.
pub struct LcCollection(Collection);

/// A retrieval index.
pub struct LcIndex(Index);

/// Ranked notice cases for one query.
pub struct LcRanking {
    query_id: CString,
    case_ids: Vec<CString>,
    scores: Vec<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Failure(LcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io { .. } => LcStatus::Io,
            Error::Validation(_) => LcStatus::Validation,
            Error::Argument(_) => LcStatus::Argument,
            Error::Format(_) => LcStatus::Format,
            Error::Internal(_) => LcStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(LcStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
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
            LcStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Failure(LcStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() { Ok(None) } else { unsafe { str_arg(p, what) }.map(Some) }
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

/// Message for the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next call into this library.
#[unsafe(no_mangle)]
pub extern "C" fn lc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[unsafe(no_mangle)]
pub extern "C" fn lc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads `*.txt` cases from `cases_dir`. `qrels_path` may be NULL for an
/// unlabelled collection.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn lc_collection_load(
    cases_dir: *const c_char,
    qrels_path: *const c_char,
    out: *mut *mut LcCollection,
) -> LcStatus {
    guard(|| unsafe {
        let dir = str_arg(cases_dir, "cases_dir")?;
        let qrels = opt_str_arg(qrels_path, "qrels_path")?;
        let collection = load_collection(Path::new(dir), qrels.map(Path::new), None)?;
        put(out, LcCollection(collection))
    })
}

/// # Safety
/// `collection` must come from [`lc_collection_load`] or be NULL.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn lc_collection_free(collection: *mut LcCollection) {
    if !collection.is_null() {
        drop(unsafe { Box::from_raw(collection) });
    }
}

/// Number of cases, or 0 for NULL.
///
/// # Safety
/// `collection` must be a live handle or NULL.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn lc_collection_case_count(collection: *const LcCollection) -> usize {
    unsafe { collection.as_ref() }.map_or(0, |c| c.0.cases.len())
}

/// Number of query cases, or 0 for NULL.
///
/// # Safety
/// `collection` must be a live handle or NULL.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn lc_collection_query_count(collection: *const LcCollection) -> usize {
    unsafe { collection.as_ref() }.map_or(0, |c| c.0.query_ids().len())
}

/// Builds an index over `collection`. When `titles_path` is non-NULL the
/// statute field is filled from the detected statute references.
///
/// # Safety
/// `collection` must be a live handle; `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn lc_index_build(
    collection: *const LcCollection,
    titles_path: *const c_char,
    granularity: LcGranularity,
    out: *mut *mut LcIndex,
) -> LcStatus {
    guard(|| unsafe {
        let collection = &collection.as_ref().ok_or_else(|| null("collection"))?.0;
        let titles = opt_str_arg(titles_path, "titles_path")?;
        let annotations = match titles {
            Some(p) => Some(annotate_collection(collection, &load_statute_titles(Path::new(p))?)),
            None => None,
        };
        let granularity = match granularity {
            LcGranularity::Document => Granularity::Document,
            LcGranularity::Passage => Granularity::Passage,
        };
        let pipeline = ExperimentConfig::default().pipeline_config()?;
        let index = build_index(collection, annotations.as_ref(), granularity, &pipeline)?;
        put(out, LcIndex(index))
    })
}

/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn lc_index_load(path: *const c_char, out: *mut *mut LcIndex) -> LcStatus {
    guard(|| unsafe {
        let path = str_arg(path, "path")?;
        put(out, LcIndex(Index::load(Path::new(path))?))
    })
}

/// # Safety
/// `index` must be a live handle; `path` must be NUL-terminated.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn lc_index_save(index: *const LcIndex, path: *const c_char) -> LcStatus {
    guard(|| unsafe {
        let index = &index.as_ref().ok_or_else(|| null("index"))?.0;
        index.save(Path::new(str_arg(path, "path")?))?;
        Ok(())
    })
}

/// # Safety
/// `index` must come from this library or be NULL.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn lc_index_free(index: *mut LcIndex) {
    if !index.is_null() {
        drop(unsafe { Box::from_raw(index) });
    }
}

/// Number of retrieval units (documents or passages), or 0 for NULL.
///
/// # Safety
/// `index` must be a live handle or NULL.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn lc_index_unit_count(index: *const LcIndex) -> usize {
    unsafe { index.as_ref() }.map_or(0, |i| i.0.unit_count())
}

/// Retrieves notice cases for `query_id`. `config` holds `key = value` lines
/// in the same format as the command-line config file, applied over the
/// defaults for the index granularity. NULL keeps those defaults.
///
/// # Safety
/// Handles must be live; strings NUL-terminated; `out` writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn lc_retrieve(
    index: *const LcIndex,
    collection: *const LcCollection,
    config: *const c_char,
    query_id: *const c_char,
    out: *mut *mut LcRanking,
) -> LcStatus {
    guard(|| unsafe {
        let index = &index.as_ref().ok_or_else(|| null("index"))?.0;
        let collection = &collection.as_ref().ok_or_else(|| null("collection"))?.0;
        let mut cfg = ExperimentConfig::defaults_for(index.granularity());
        if let Some(text) = opt_str_arg(config, "config")? {
            cfg.apply_text(text)?;
        }
        let config = cfg;
        let query_id = str_arg(query_id, "query_id")?;
        let retriever = Retriever::new(index, collection, config.retrieval_config()?)?;
        put(out, ranking(retriever.retrieve(query_id)?))
    })
}

fn ranking(r: CaseRanking) -> LcRanking {
    let cstr = |s: String| CString::new(s).unwrap_or_default();
    let (case_ids, scores) = r.results.into_iter().map(|(c, s)| (cstr(c), s)).unzip();
    LcRanking {
        query_id: cstr(r.query_id),
        case_ids,
        scores,
    }
}

/// # Safety
/// `ranking` must be a live handle or NULL.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn lc_ranking_len(ranking: *const LcRanking) -> usize {
    unsafe { ranking.as_ref() }.map_or(0, |r| r.case_ids.len())
}

/// Query id of the ranking; valid while the ranking lives.
///
/// # Safety
/// `ranking` must be a live handle or NULL.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn lc_ranking_query_id(ranking: *const LcRanking) -> *const c_char {
    unsafe { ranking.as_ref() }.map_or(ptr::null(), |r| r.query_id.as_ptr())
}

/// Case id at rank `i` (0-based), or NULL when out of range.
///
/// # Safety
/// `ranking` must be a live handle or NULL.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn lc_ranking_case_id(ranking: *const LcRanking, i: usize) -> *const c_char {
    unsafe { ranking.as_ref() }
        .and_then(|r| r.case_ids.get(i))
        .map_or(ptr::null(), |c| c.as_ptr())
}

/// Fused score at rank `i`, or NaN when out of range.
///
/// # Safety
/// `ranking` must be a live handle or NULL.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn lc_ranking_score(ranking: *const LcRanking, i: usize) -> f64 {
    unsafe { ranking.as_ref() }
        .and_then(|r| r.scores.get(i).copied())
        .unwrap_or(f64::NAN)
}

/// # Safety
/// `ranking` must come from [`lc_retrieve`] or be NULL.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn lc_ranking_free(ranking: *mut LcRanking) {
    if !ranking.is_null() {
        drop(unsafe { Box::from_raw(ranking) });
    }
}
