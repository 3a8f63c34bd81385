//! C ABI over the retrieval engine.
//!
//! Handles are opaque pointers created and freed by the paired
//! `*_new`/`*_free` functions; every fallible call either returns a status
//! code or a null pointer, with the failure message retrievable through
//! [`femmir_last_error`] (thread-local, valid until the next failing call
//! on the same thread). Strings returned by the library are heap-allocated
//! and must be released with [`femmir_string_free`].

use femmir_core::hart::{
    extract_candidates, posi_har, result_to_record, CandidateConfig, CandidateSet,
    ExtractionModel, HartResources, PropExtractor, TaggedSentence,
};
use femmir_core::hart::tagger::tag_sentence;
use femmir_core::lexicon::EmbeddingStore;
use femmir_core::retrieval::{index_corpus, query, QueryInput, ScoreMode, Target};
use femmir_core::{
    ced_records, parse_record, validate_cost_config, CorpusIndex, CostConfig, PropertyRecord,
    ScorerModel, Taxonomy,
};
use libc::c_char;
use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::str::FromStr;

/// Status codes returned by fallible calls.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FemmirStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Io = 4,
    Empty = 5,
    Internal = 6,
}

/// Exact-distance result for one record pair. An incompatible pair reports
/// infinite distances and zero similarity.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FemmirSimilarity {
    pub ced: f64,
    pub nced: f64,
    pub sim: f64,
}

/// Opaque taxonomy handle.
#[repr(C)]
pub struct FemmirTaxonomy {
    _private: [u8; 0],
}

/// Opaque cost-config handle.
#[repr(C)]
pub struct FemmirCostConfig {
    _private: [u8; 0],
}

/// Opaque parsed-record handle.
#[repr(C)]
pub struct FemmirRecord {
    _private: [u8; 0],
}

/// Opaque corpus-index handle.
#[repr(C)]
pub struct FemmirIndex {
    _private: [u8; 0],
}

/// Opaque trained-model handle.
#[repr(C)]
pub struct FemmirModel {
    _private: [u8; 0],
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<Vec<u8>>) {
    let c = CString::new(message).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn into_handle<T, H>(value: T) -> *mut H {
    Box::into_raw(Box::new(value)) as *mut H
}

unsafe fn handle_ref<'a, T, H>(ptr: *const H) -> Option<&'a T> {
    (ptr as *const T).as_ref()
}

unsafe fn drop_handle<T, H>(ptr: *mut H) {
    if !ptr.is_null() {
        drop(Box::from_raw(ptr as *mut T));
    }
}

unsafe fn cstr_arg<'a>(ptr: *const c_char) -> Result<&'a str, FemmirStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(FemmirStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        FemmirStatus::InvalidUtf8
    })
}

fn leak_string(s: String) -> *mut c_char {
    match CString::new(s) {
        Ok(c) => c.into_raw(),
        Err(_) => {
            set_error("output contained an interior NUL byte");
            std::ptr::null_mut()
        }
    }
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn femmir_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the most recent failure on this thread, or null. The pointer
/// is valid until the next failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn femmir_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |c| c.as_ptr())
    })
}

/// Free a string returned by this library.
///
/// # Safety
/// `s` must have been returned by a femmir function and not freed before.
#[no_mangle]
pub unsafe extern "C" fn femmir_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Taxonomy that ships with the library.
#[no_mangle]
pub extern "C" fn femmir_taxonomy_bundled() -> *mut FemmirTaxonomy {
    into_handle::<Taxonomy, _>(Taxonomy::bundled())
}

/// Load a `child<TAB>parent` taxonomy file; null on failure.
///
/// # Safety
/// `path` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn femmir_taxonomy_load(path: *const c_char) -> *mut FemmirTaxonomy {
    let Ok(path) = cstr_arg(path) else {
        return std::ptr::null_mut();
    };
    match Taxonomy::load(Path::new(path)) {
        Ok(t) => into_handle::<Taxonomy, _>(t),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// # Safety
/// `t` must come from a taxonomy constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn femmir_taxonomy_free(t: *mut FemmirTaxonomy) {
    drop_handle::<Taxonomy, _>(t);
}

/// Cost config with all defaults.
#[no_mangle]
pub extern "C" fn femmir_cost_config_default() -> *mut FemmirCostConfig {
    into_handle::<CostConfig, _>(CostConfig::default())
}

/// Parse and validate a cost-config JSON object; null on failure.
///
/// # Safety
/// `json` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn femmir_cost_config_parse(json: *const c_char) -> *mut FemmirCostConfig {
    let Ok(text) = cstr_arg(json) else {
        return std::ptr::null_mut();
    };
    match validate_cost_config(text) {
        Ok(cfg) => into_handle::<CostConfig, _>(cfg),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// # Safety
/// `cfg` must come from a cost-config constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn femmir_cost_config_free(cfg: *mut FemmirCostConfig) {
    drop_handle::<CostConfig, _>(cfg);
}

/// Parse one record from JSON; null on failure.
///
/// # Safety
/// `json` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn femmir_record_parse(json: *const c_char) -> *mut FemmirRecord {
    let Ok(text) = cstr_arg(json) else {
        return std::ptr::null_mut();
    };
    match parse_record(text) {
        Ok(record) => into_handle::<PropertyRecord, _>(record),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// # Safety
/// `record` must come from `femmir_record_parse` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn femmir_record_free(record: *mut FemmirRecord) {
    drop_handle::<PropertyRecord, _>(record);
}

/// Exact content-edit-distance similarity between two records.
///
/// # Safety
/// All handles must be live pointers from their constructors; `out` must
/// point to writable memory for one `FemmirSimilarity`.
#[no_mangle]
pub unsafe extern "C" fn femmir_similarity(
    query_record: *const FemmirRecord,
    cand_record: *const FemmirRecord,
    cfg: *const FemmirCostConfig,
    taxonomy: *const FemmirTaxonomy,
    out: *mut FemmirSimilarity,
) -> FemmirStatus {
    let (Some(q), Some(c), Some(cfg), Some(tax)) = (
        handle_ref::<PropertyRecord, _>(query_record),
        handle_ref::<PropertyRecord, _>(cand_record),
        handle_ref::<CostConfig, _>(cfg),
        handle_ref::<Taxonomy, _>(taxonomy),
    ) else {
        set_error("null handle argument");
        return FemmirStatus::NullArgument;
    };
    if out.is_null() {
        set_error("null output pointer");
        return FemmirStatus::NullArgument;
    }
    let result = catch_unwind(AssertUnwindSafe(|| ced_records(q, c, cfg, tax)));
    match result {
        Ok(label) => {
            *out = FemmirSimilarity {
                ced: label.ced,
                nced: label.nced,
                sim: label.sim,
            };
            FemmirStatus::Ok
        }
        Err(_) => {
            set_error("internal panic during similarity computation");
            FemmirStatus::Internal
        }
    }
}

/// Open and index a JSONL corpus file; null on failure.
///
/// # Safety
/// `path` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn femmir_index_open(path: *const c_char) -> *mut FemmirIndex {
    let Ok(path) = cstr_arg(path) else {
        return std::ptr::null_mut();
    };
    match index_corpus(Path::new(path)) {
        Ok(index) => into_handle::<CorpusIndex, _>(index),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Number of indexed records (0 for a null handle).
///
/// # Safety
/// `index` must be null or a live index handle.
#[no_mangle]
pub unsafe extern "C" fn femmir_index_len(index: *const FemmirIndex) -> usize {
    handle_ref::<CorpusIndex, _>(index).map_or(0, CorpusIndex::len)
}

/// # Safety
/// `index` must come from `femmir_index_open` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn femmir_index_free(index: *mut FemmirIndex) {
    drop_handle::<CorpusIndex, _>(index);
}

/// Load a trained model file; null on failure.
///
/// # Safety
/// `path` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn femmir_model_load(path: *const c_char) -> *mut FemmirModel {
    let Ok(path) = cstr_arg(path) else {
        return std::ptr::null_mut();
    };
    match ScorerModel::load(Path::new(path)) {
        Ok(model) => into_handle::<ScorerModel, _>(model),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// # Safety
/// `model` must come from `femmir_model_load` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn femmir_model_free(model: *mut FemmirModel) {
    drop_handle::<ScorerModel, _>(model);
}

/// Rank the corpus against a query record; returns the ranking as CSV
/// (`rank,id,modality,sim[,ced]`), or null on failure. `mode` is `exact`
/// or `learned` (the latter needs `model`); `target` is `all`, `text`,
/// `image`, or `video`. Free the result with `femmir_string_free`.
///
/// # Safety
/// Handles must be live; `mode` and `target` must be valid NUL-terminated
/// strings; `model` may be null in exact mode.
#[no_mangle]
pub unsafe extern "C" fn femmir_query(
    index: *const FemmirIndex,
    query_record: *const FemmirRecord,
    mode: *const c_char,
    target: *const c_char,
    cfg: *const FemmirCostConfig,
    taxonomy: *const FemmirTaxonomy,
    model: *const FemmirModel,
) -> *mut c_char {
    let (Some(index), Some(record), Some(cfg), Some(tax)) = (
        handle_ref::<CorpusIndex, _>(index),
        handle_ref::<PropertyRecord, _>(query_record),
        handle_ref::<CostConfig, _>(cfg),
        handle_ref::<Taxonomy, _>(taxonomy),
    ) else {
        set_error("null handle argument");
        return std::ptr::null_mut();
    };
    let (Ok(mode_str), Ok(target_str)) = (cstr_arg(mode), cstr_arg(target)) else {
        return std::ptr::null_mut();
    };
    let mode = match ScoreMode::from_str(mode_str) {
        Ok(m) => m,
        Err(e) => {
            set_error(e);
            return std::ptr::null_mut();
        }
    };
    let target = match Target::from_str(target_str) {
        Ok(t) => t,
        Err(e) => {
            set_error(e);
            return std::ptr::null_mut();
        }
    };
    let model = handle_ref::<ScorerModel, _>(model);
    let result = catch_unwind(AssertUnwindSafe(|| {
        query(
            index,
            QueryInput::Record(record.clone()),
            mode,
            target,
            cfg,
            tax,
            model,
        )
    }));
    match result {
        Ok(Ok(ranked)) => leak_string(ranked.to_csv()),
        Ok(Err(e)) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
        Err(_) => {
            set_error("internal panic during query");
            std::ptr::null_mut()
        }
    }
}

/// Extract person attributes from newline-separated sentences and return
/// the resulting record as JSON, or null on failure (including "no
/// candidate sentences"). Pass NaN for `theta` to use the model's default
/// behavior (required threshold models fail without one). Free the result
/// with `femmir_string_free`.
///
/// # Safety
/// `text`, `model`, and `record_id` must be valid NUL-terminated strings;
/// `taxonomy` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn femmir_hart_extract(
    text: *const c_char,
    model: *const c_char,
    theta: f64,
    taxonomy: *const FemmirTaxonomy,
    record_id: *const c_char,
) -> *mut c_char {
    let (Ok(text), Ok(model_str), Ok(record_id)) =
        (cstr_arg(text), cstr_arg(model), cstr_arg(record_id))
    else {
        return std::ptr::null_mut();
    };
    let Some(tax) = handle_ref::<Taxonomy, _>(taxonomy) else {
        set_error("null taxonomy handle");
        return std::ptr::null_mut();
    };
    let model = match ExtractionModel::from_str(model_str) {
        Ok(m) => m,
        Err(e) => {
            set_error(e);
            return std::ptr::null_mut();
        }
    };
    let theta = if theta.is_nan() { None } else { Some(theta) };
    let result = catch_unwind(AssertUnwindSafe(|| {
        let cfg = CandidateConfig::new(model, theta)?;
        let sentences: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        let store = EmbeddingStore::bundled();
        let res = HartResources {
            taxonomy: tax,
            embeddings: Some(&store),
            external_scores: None,
        };
        let candidates = extract_candidates(&sentences, &cfg, &res)?;
        Ok::<_, femmir_core::hart::HartError>((sentences, candidates))
    }));
    match result {
        Ok(Ok((sentences, candidates))) => {
            if candidates == CandidateSet::Empty {
                set_error("no candidate sentences");
                return std::ptr::null_mut();
            }
            let tagged: Vec<TaggedSentence> = candidates
                .indices()
                .iter()
                .map(|&i| tag_sentence(&sentences[i], tax))
                .collect();
            let attrs = posi_har(&tagged, &PropExtractor::default(), tax);
            let record = result_to_record(&attrs, record_id);
            leak_string(record.to_json())
        }
        Ok(Err(e)) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
        Err(_) => {
            set_error("internal panic during extraction");
            std::ptr::null_mut()
        }
    }
}
