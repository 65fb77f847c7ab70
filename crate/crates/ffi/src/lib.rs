//! C interface to the islandcg extractor and linker.
//!
//! Every handle is opaque and owned by the caller once returned; release it
//! with the matching `*_free` function. Functions return an
//! [`IslandcgStatus`]; on failure, [`islandcg_last_error_message`] describes
//! the most recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use islandcg::facts::{write_facts, FactsError};
use islandcg::link::LinkError;
use islandcg::pipeline::{self, LinkOutput, PipelineError};
use islandcg::{extract_facts, ExtractionResult, LexiconError, LexiconTable};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IslandcgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    NotFound = 4,
    InvalidArgument = 5,
    Panic = 6,
}

/// A loaded keyword table.
pub struct IslandcgLexicon(LexiconTable);

/// Facts and definitions extracted from one dump.
pub struct IslandcgResult(ExtractionResult);

/// A linked call tree with its DOT and edge-list renderings.
pub struct IslandcgGraph(LinkOutput);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(IslandcgStatus, String);

impl Failure {
    fn null(what: &str) -> Self {
        Failure(IslandcgStatus::NullPointer, format!("{what} is null"))
    }
}

impl From<LexiconError> for Failure {
    fn from(e: LexiconError) -> Self {
        let status = match e {
            LexiconError::Io { .. } => IslandcgStatus::Io,
            LexiconError::UnknownDialect(_) => IslandcgStatus::NotFound,
            _ => IslandcgStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<FactsError> for Failure {
    fn from(e: FactsError) -> Self {
        let status = match e {
            FactsError::Io { .. } => IslandcgStatus::Io,
            FactsError::Malformed { .. } => IslandcgStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Lexicon(e) => e.into(),
            PipelineError::Facts(e) => e.into(),
            PipelineError::Io { .. } => Failure(IslandcgStatus::Io, e.to_string()),
            PipelineError::Link(
                LinkError::UnknownRoot { .. } | LinkError::NoDefaultRoot { .. },
            ) => Failure(IslandcgStatus::NotFound, e.to_string()),
            _ => Failure(IslandcgStatus::InvalidArgument, e.to_string()),
        }
    }
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> IslandcgStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => IslandcgStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .map(String::as_str)
                .or_else(|| payload.downcast_ref::<&str>().copied())
                .unwrap_or("unknown panic");
            set_error(format!("internal panic: {msg}"));
            IslandcgStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(IslandcgStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

fn c_string(text: &str) -> Result<*mut c_char, Failure> {
    CString::new(text).map(CString::into_raw).map_err(|_| {
        Failure(
            IslandcgStatus::InvalidArgument,
            "output contains a NUL byte".into(),
        )
    })
}

/// Message for the last failed call on this thread, or null if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn islandcg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Loads a built-in table (`cpp`, `objc`) or a table file by path.
///
/// # Safety
/// `name_or_path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn islandcg_lexicon_load(
    name_or_path: *const c_char,
    out: *mut *mut IslandcgLexicon,
) -> IslandcgStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let name = str_arg(name_or_path, "name_or_path")?;
        put(out, IslandcgLexicon(LexiconTable::resolve(name)?));
        Ok(())
    })
}

/// # Safety
/// `lexicon` must come from `islandcg_lexicon_load` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn islandcg_lexicon_free(lexicon: *mut IslandcgLexicon) {
    if !lexicon.is_null() {
        drop(Box::from_raw(lexicon));
    }
}

/// Extracts facts from an in-memory dump. `file_name` is recorded in every
/// fact; `data` may be null when `len` is 0.
///
/// # Safety
/// `data` must point to `len` readable bytes; other pointers as documented.
#[no_mangle]
pub unsafe extern "C" fn islandcg_extract_bytes(
    lexicon: *const IslandcgLexicon,
    data: *const u8,
    len: usize,
    file_name: *const c_char,
    out: *mut *mut IslandcgResult,
) -> IslandcgStatus {
    guard(|| {
        let lexicon = handle(lexicon, "lexicon")?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let bytes: &[u8] = if len == 0 {
            &[]
        } else if data.is_null() {
            return Err(Failure::null("data"));
        } else {
            std::slice::from_raw_parts(data, len)
        };
        let name = str_arg(file_name, "file_name")?;
        put(out, IslandcgResult(extract_facts(bytes, name, &lexicon.0)));
        Ok(())
    })
}

/// Reads and extracts one dump file.
///
/// # Safety
/// Pointers as documented on `islandcg_extract_bytes`.
#[no_mangle]
pub unsafe extern "C" fn islandcg_extract_file(
    lexicon: *const IslandcgLexicon,
    path: *const c_char,
    out: *mut *mut IslandcgResult,
) -> IslandcgStatus {
    guard(|| {
        let lexicon = handle(lexicon, "lexicon")?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let path = str_arg(path, "path")?;
        let result = pipeline::extract_file(Path::new(path), &lexicon.0)?;
        put(out, IslandcgResult(result));
        Ok(())
    })
}

/// # Safety
/// `result` must be a live handle or null (null yields 0).
#[no_mangle]
pub unsafe extern "C" fn islandcg_result_fact_count(result: *const IslandcgResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.facts.len())
}

/// # Safety
/// `result` must be a live handle or null (null yields 0).
#[no_mangle]
pub unsafe extern "C" fn islandcg_result_def_count(result: *const IslandcgResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.defs.len())
}

/// # Safety
/// `result` must be a live handle or null (null yields 0).
#[no_mangle]
pub unsafe extern "C" fn islandcg_result_warning_count(result: *const IslandcgResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.warnings.len())
}

/// Writes `calls.csv` and `defs.csv` into `dir`, creating it if needed.
///
/// # Safety
/// `result` must be a live handle; `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn islandcg_result_write_facts(
    result: *const IslandcgResult,
    dir: *const c_char,
) -> IslandcgStatus {
    guard(|| {
        let result = handle(result, "result")?;
        let dir = str_arg(dir, "dir")?;
        write_facts(&result.0, Path::new(dir))?;
        Ok(())
    })
}

/// # Safety
/// `result` must come from an extract call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn islandcg_result_free(result: *mut IslandcgResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Links `count` results into a call tree. `root` may be null for the
/// default root; `max_depth` bounds expansion.
///
/// # Safety
/// `results` must point to `count` live result handles.
#[no_mangle]
pub unsafe extern "C" fn islandcg_link(
    results: *const *const IslandcgResult,
    count: usize,
    root: *const c_char,
    max_depth: usize,
    out: *mut *mut IslandcgGraph,
) -> IslandcgStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        if results.is_null() && count > 0 {
            return Err(Failure::null("results"));
        }
        let handles = if count == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(results, count)
        };
        let mut owned = Vec::with_capacity(count);
        for (i, &h) in handles.iter().enumerate() {
            owned.push(handle(h, &format!("results[{i}]"))?.0.clone());
        }
        let root = if root.is_null() {
            None
        } else {
            Some(str_arg(root, "root")?)
        };
        let linked = pipeline::link_results(&owned, root, max_depth)?;
        put(out, IslandcgGraph(linked));
        Ok(())
    })
}

/// # Safety
/// `graph` must be a live handle or null (null yields 0).
#[no_mangle]
pub unsafe extern "C" fn islandcg_graph_node_count(graph: *const IslandcgGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.tree.nodes.len())
}

/// DOT text for the graph; release with `islandcg_string_free`.
///
/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn islandcg_graph_dot(
    graph: *const IslandcgGraph,
    out: *mut *mut c_char,
) -> IslandcgStatus {
    guard(|| {
        let graph = handle(graph, "graph")?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        *out = c_string(&graph.0.dot)?;
        Ok(())
    })
}

/// Edge-list CSV for the graph; release with `islandcg_string_free`.
///
/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn islandcg_graph_edges_csv(
    graph: *const IslandcgGraph,
    out: *mut *mut c_char,
) -> IslandcgStatus {
    guard(|| {
        let graph = handle(graph, "graph")?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        *out = c_string(&graph.0.edges)?;
        Ok(())
    })
}

/// # Safety
/// `graph` must come from `islandcg_link` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn islandcg_graph_free(graph: *mut IslandcgGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// # Safety
/// `s` must be a string returned by this library, or null.
#[no_mangle]
pub unsafe extern "C" fn islandcg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
