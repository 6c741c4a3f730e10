//! C ABI for `cfi_forge`.
//!
//! Every fallible function returns a [`CfiStatus`]; on failure the message is
//! kept per thread and read back with [`cfi_last_error`]. Graphs cross the
//! boundary as opaque [`CfiGraph`] handles owned by the caller and released
//! with [`cfi_graph_free`]. Strings returned to C are released with
//! [`cfi_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use cfi_forge::cfi::{build_cfi, EdgeLabeling, OrderedBaseGraph};
use cfi_forge::error::Error;
use cfi_forge::games::blocking::{blocking_value, BlockingPosition};
use cfi_forge::games::pebble::{PebblePosition, PebbleSolver};
use cfi_forge::games::prover_delayer::{min_refutation_size, prover_delayer_value, PdConfig};
use cfi_forge::games::{SolverConfig, Value};
use cfi_forge::graph::{brute_force_isomorphism, twinned, ColoredGraph, GraphDocument};
use cfi_forge::iso_cnf::{build_iso, dimacs_string, DimacsMeta};
use cfi_forge::pipeline::generate::cmd_generate;
use cfi_forge::pipeline::{Format, Params};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CfiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Malformed = 3,
    ResourceCap = 4,
    Violation = 5,
    Io = 6,
    Panic = 7,
}

/// Games accepted by [`cfi_solve`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CfiGame {
    Pebble = 0,
    Blocking = 1,
    ProverDelayer = 2,
    Refutation = 3,
}

/// `value` reported by [`cfi_solve`] when Spoiler (or Prover) never wins.
pub const CFI_VALUE_INFINITE: i64 = -1;

/// Opaque colored graph.
pub struct CfiGraph(ColoredGraph);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CfiStatus {
    match e {
        Error::StateSpaceTooLarge { .. } | Error::TooLarge { .. } => CfiStatus::ResourceCap,
        Error::Strategy(_) | Error::SatisfiableFormula => CfiStatus::Violation,
        Error::Malformed(_) | Error::Json(_) => CfiStatus::Malformed,
        Error::Io(_) => CfiStatus::Io,
        _ => CfiStatus::InvalidArgument,
    }
}

/// Runs `f`, turning errors and panics into a status and the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (CfiStatus, String)>) -> CfiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CfiStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CfiStatus::Panic
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, (CfiStatus, String)>;
}

impl<T> OrStatus<T> for Result<T, Error> {
    fn or_status(self) -> Result<T, (CfiStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (CfiStatus, String) {
    (CfiStatus::NullPointer, format!("{what} is null"))
}

unsafe fn graph_ref<'a>(g: *const CfiGraph, what: &str) -> Result<&'a ColoredGraph, (CfiStatus, String)> {
    g.as_ref().map(|g| &g.0).ok_or_else(|| null(what))
}

unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, (CfiStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| (CfiStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (CfiStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn pairs(flat: &[usize]) -> Vec<(usize, usize)> {
    flat.chunks_exact(2).map(|c| (c[0], c[1])).collect()
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), (CfiStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

fn boxed(g: ColoredGraph) -> *mut CfiGraph {
    Box::into_raw(Box::new(CfiGraph(g)))
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s).expect("no interior nul").into_raw()
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn cfi_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, a static nul-terminated string.
#[no_mangle]
pub extern "C" fn cfi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a graph on `n` vertices. `colors` holds `n` entries (null means all
/// zero); `edges` holds `2 * n_edges` endpoints.
///
/// # Safety
/// Pointers must be valid for the given lengths; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfi_graph_new(
    n: usize,
    colors: *const u32,
    edges: *const usize,
    n_edges: usize,
    out: *mut *mut CfiGraph,
) -> CfiStatus {
    guard(|| {
        let colors = if colors.is_null() { vec![0; n] } else { slice_arg(colors, n, "colors")?.to_vec() };
        let edges = pairs(slice_arg(edges, 2 * n_edges, "edges")?);
        let g = ColoredGraph::from_edges(colors, &edges).or_status()?;
        put(out, boxed(g), "out")
    })
}

/// Parses a graph document (the JSON written by `cfi-forge generate`).
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfi_graph_from_json(json: *const c_char, out: *mut *mut CfiGraph) -> CfiStatus {
    guard(|| {
        let doc: GraphDocument = serde_json::from_str(str_arg(json, "json")?).map_err(Error::from).or_status()?;
        put(out, boxed(doc.to_graph().or_status()?), "out")
    })
}

/// Serializes a graph as a graph document. Free the result with [`cfi_string_free`].
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfi_graph_to_json(g: *const CfiGraph, out: *mut *mut c_char) -> CfiStatus {
    guard(|| {
        let g = graph_ref(g, "g")?;
        let text = serde_json::to_string(&GraphDocument::from_graph(g)).map_err(Error::from).or_status()?;
        put(out, c_string(text), "out")
    })
}

/// Number of vertices, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cfi_graph_order(g: *const CfiGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.order())
}

/// Number of edges, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cfi_graph_size(g: *const CfiGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.size())
}

/// # Safety
/// `g` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cfi_graph_free(g: *mut CfiGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cfi_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// CFI graph over a connected base graph on `n` vertices, with the edges
/// listed in `twisted` (as endpoint pairs) labeled 1.
///
/// # Safety
/// Pointers must be valid for the given lengths; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfi_build_cfi(
    n: usize,
    edges: *const usize,
    n_edges: usize,
    twisted: *const usize,
    n_twisted: usize,
    out: *mut *mut CfiGraph,
) -> CfiStatus {
    guard(|| {
        let base = OrderedBaseGraph::new(n, &pairs(slice_arg(edges, 2 * n_edges, "edges")?)).or_status()?;
        let f = EdgeLabeling::with_ones(&base, &pairs(slice_arg(twisted, 2 * n_twisted, "twisted")?)).or_status()?;
        put(out, boxed(build_cfi(&base, &f).or_status()?.graph), "out")
    })
}

/// The twinned graph: every vertex doubled into an adjacent pair.
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfi_twinned(g: *const CfiGraph, out: *mut *mut CfiGraph) -> CfiStatus {
    guard(|| {
        let g = graph_ref(g, "g")?;
        put(out, boxed(twinned(g).graph), "out")
    })
}

/// Exact isomorphism test by backtracking; intended for small graphs.
///
/// # Safety
/// `g`, `h` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfi_isomorphic(g: *const CfiGraph, h: *const CfiGraph, out: *mut bool) -> CfiStatus {
    guard(|| {
        let (g, h) = (graph_ref(g, "g")?, graph_ref(h, "h")?);
        put(out, brute_force_isomorphism(g, h).is_some(), "out")
    })
}

/// Solves `game` on `(g, h)` with `k` pebbles (or width `k` for refutations).
/// `value` receives rounds, Delayer points or refutation size, or
/// [`CFI_VALUE_INFINITE`].
///
/// # Safety
/// `g`, `h` must be live handles; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfi_solve(
    game: CfiGame,
    g: *const CfiGraph,
    h: *const CfiGraph,
    k: usize,
    value: *mut i64,
) -> CfiStatus {
    guard(|| {
        let (g, h) = (graph_ref(g, "g")?, graph_ref(h, "h")?);
        let v = match game {
            CfiGame::Pebble => {
                PebbleSolver::solve(g, h, k, &PebblePosition::empty(k), SolverConfig::default()).or_status()?.value()
            }
            CfiGame::Blocking => blocking_value(g, h, k, &BlockingPosition::empty(k)).or_status()?,
            CfiGame::ProverDelayer => {
                prover_delayer_value(g, h, k, &Default::default(), PdConfig::default()).or_status()?.value
            }
            CfiGame::Refutation => {
                let size = min_refutation_size(g, h, k, PdConfig::default()).or_status()?.size;
                put(value, size.map_or(CFI_VALUE_INFINITE, |s| s.min(i64::MAX as u64) as i64), "value")?;
                return Ok(());
            }
        };
        let v = match v {
            Value::Finite(r) => r as i64,
            Value::Infinite => CFI_VALUE_INFINITE,
        };
        put(value, v, "value")
    })
}

/// ISO(g, h) in DIMACS. Free the result with [`cfi_string_free`].
///
/// # Safety
/// `g`, `h` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfi_iso_dimacs(g: *const CfiGraph, h: *const CfiGraph, out: *mut *mut c_char) -> CfiStatus {
    guard(|| {
        let (g, h) = (graph_ref(g, "g")?, graph_ref(h, "h")?);
        put(out, c_string(dimacs_string(&build_iso(g, h), &DimacsMeta::default())), "out")
    })
}

/// Runs `generate` and writes its bundle to `dir`. `w = 0` picks the smallest
/// feasible window; `desk_q = 0` builds the full-size grid. A grid above the
/// size guard fails with `ResourceCap` unless `huge` is set.
///
/// # Safety
/// `dir` must be a nul-terminated path.
#[no_mangle]
pub unsafe extern "C" fn cfi_generate(
    k: usize,
    t: usize,
    w: u64,
    desk_q: u64,
    seed: u64,
    dimacs: bool,
    huge: bool,
    dir: *const c_char,
) -> CfiStatus {
    guard(|| {
        let dir = str_arg(dir, "dir")?;
        let params = Params::new(k, t, (w > 0).then_some(w), (desk_q > 0).then_some(desk_q), seed).or_status()?;
        let format = if dimacs { Format::Dimacs } else { Format::Json };
        let gen = cmd_generate(&params, format, huge).or_status()?;
        gen.bundle.write(Path::new(dir)).or_status()?;
        if gen.pass() {
            Ok(())
        } else {
            let failed: Vec<_> = gen.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
            Err((CfiStatus::Violation, format!("checks failed: {}", failed.join(", "))))
        }
    })
}
