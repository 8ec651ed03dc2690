//! C ABI over `age-core`.
//!
//! Graphs and embeddings are opaque heap handles released with their
//! `*_free` function. Every fallible call returns an [`AgeStatus`]; on
//! failure [`age_last_error_message`] describes the error for the calling
//! thread. Strings returned through out-parameters are released with
//! [`age_string_free`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use age_core::data::{generate_sbm, RunConfig};
use age_core::encoder::{smoothed_features, EmbeddingSnapshot};
use age_core::filter::{build_filter, KMode};
use age_core::graph::{build_graph, laplacians, Graph};
use age_core::pipeline::{cluster_snapshot, evaluate_clustering, resolve_graph, run_cluster, run_linkpred, train};
use age_core::AgeError;
use ndarray::Array2;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Input = 3,
    Domain = 4,
    Config = 5,
    Capacity = 6,
    State = 7,
    Parse = 8,
    Io = 9,
    Json = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

/// A loaded or generated attributed graph.
pub struct AgeGraph {
    graph: Graph,
}

/// One embedding snapshot (n×h, entries in [0, 1]).
pub struct AgeEmbedding {
    snapshot: EmbeddingSnapshot,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn status_of(e: &AgeError) -> AgeStatus {
    match e {
        AgeError::Input(_) => AgeStatus::Input,
        AgeError::Domain(_) => AgeStatus::Domain,
        AgeError::Config(_) => AgeStatus::Config,
        AgeError::Capacity { .. } => AgeStatus::Capacity,
        AgeError::State(_) => AgeStatus::State,
        AgeError::Parse { .. } => AgeStatus::Parse,
        AgeError::Io { .. } => AgeStatus::Io,
        AgeError::Json(_) => AgeStatus::Json,
    }
}

struct Fail(AgeStatus, String);

impl From<AgeError> for Fail {
    fn from(e: AgeError) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> AgeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            AgeStatus::Ok
        }
        Ok(Err(Fail(status, message))) => {
            set_error(&message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal panic: {message}"));
            AgeStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(AgeStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(AgeStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn config(p: *const c_char) -> Result<RunConfig, Fail> {
    if p.is_null() {
        return Ok(RunConfig::default());
    }
    Ok(RunConfig::from_json_str(c_str(p, "config_json")?)?)
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, need: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len < need {
        return Err(Fail(
            AgeStatus::BufferTooSmall,
            format!("{what} holds {len} values, {need} needed"),
        ));
    }
    if need == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

fn json_out(v: &impl serde::Serialize, out: *mut *mut c_char) -> Result<(), Fail> {
    let text = serde_json::to_string(v).map_err(AgeError::from)?;
    let c = CString::new(text).expect("JSON has no NUL");
    unsafe { write_out(out, c.into_raw(), "out") }
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library.
#[no_mangle]
pub extern "C" fn age_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn age_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn age_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a dataset by name (`sbm`, a directory, or a name under
/// `data_dir`). `data_dir` may be NULL.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn age_graph_load(
    dataset: *const c_char,
    data_dir: *const c_char,
    seed: u64,
    out: *mut *mut AgeGraph,
) -> AgeStatus {
    guard(|| {
        let name = c_str(dataset, "dataset")?;
        let root = if data_dir.is_null() {
            None
        } else {
            Some(Path::new(c_str(data_dir, "data_dir")?))
        };
        let graph = resolve_graph(name, root, seed)?;
        write_out(out, Box::into_raw(Box::new(AgeGraph { graph })), "out")
    })
}

/// Builds a graph from `n×d` row-major features and `edge_count` pairs
/// stored as `2·edge_count` node indices. `labels` (length `n`) may be NULL.
///
/// # Safety
/// Buffers must hold the stated number of elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn age_graph_from_edges(
    n: usize,
    d: usize,
    features: *const f64,
    edges: *const usize,
    edge_count: usize,
    labels: *const usize,
    out: *mut *mut AgeGraph,
) -> AgeStatus {
    guard(|| {
        let len = n
            .checked_mul(d)
            .ok_or_else(|| Fail(AgeStatus::InvalidArgument, "n·d overflows".into()))?;
        let x = Array2::from_shape_vec((n, d), slice(features, len, "features")?.to_vec())
            .map_err(|e| Fail(AgeStatus::InvalidArgument, e.to_string()))?;
        let flat = slice(edges, 2 * edge_count, "edges")?;
        let pairs: Vec<(usize, usize)> = flat.chunks_exact(2).map(|p| (p[0], p[1])).collect();
        let labels = if labels.is_null() {
            None
        } else {
            Some(slice(labels, n, "labels")?.to_vec())
        };
        let graph = build_graph(&pairs, x, labels)?;
        write_out(out, Box::into_raw(Box::new(AgeGraph { graph })), "out")
    })
}

/// Stochastic block model graph with planted labels.
///
/// # Safety
/// `block_sizes` must hold `blocks` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn age_graph_sbm(
    block_sizes: *const usize,
    blocks: usize,
    p_in: f64,
    p_out: f64,
    feature_dim: usize,
    feature_noise: f64,
    seed: u64,
    out: *mut *mut AgeGraph,
) -> AgeStatus {
    guard(|| {
        let sizes = slice(block_sizes, blocks, "block_sizes")?;
        let graph = generate_sbm(sizes, p_in, p_out, feature_dim, feature_noise, seed)?;
        write_out(out, Box::into_raw(Box::new(AgeGraph { graph })), "out")
    })
}

/// Releases a graph. NULL is ignored.
///
/// # Safety
/// `g` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn age_graph_free(g: *mut AgeGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Node count, undirected edge count and feature width.
///
/// # Safety
/// `g` must be a live graph; out-pointers may be NULL to skip a value.
#[no_mangle]
pub unsafe extern "C" fn age_graph_shape(
    g: *const AgeGraph,
    nodes: *mut usize,
    edges: *mut usize,
    feature_dim: *mut usize,
) -> AgeStatus {
    guard(|| {
        let g = &borrow(g, "graph")?.graph;
        for (p, v) in [
            (nodes, g.node_count()),
            (edges, g.edge_count()),
            (feature_dim, g.feature_dim()),
        ] {
            if !p.is_null() {
                p.write(v);
            }
        }
        Ok(())
    })
}

/// Largest eigenvalue of the renormalized Laplacian by power iteration.
/// `converged` may be NULL.
///
/// # Safety
/// `g` must be a live graph; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn age_lambda_max(
    g: *const AgeGraph,
    seed: u64,
    out: *mut f64,
    converged: *mut bool,
) -> AgeStatus {
    guard(|| {
        let g = &borrow(g, "graph")?.graph;
        let est = age_core::spectral::lambda_max_power_iteration(
            &laplacians(g).l_sym,
            age_core::spectral::POWER_TOL,
            age_core::spectral::POWER_MAX_ITER,
            seed,
        )?;
        if !converged.is_null() {
            converged.write(est.converged);
        }
        write_out(out, est.lambda, "out")
    })
}

/// Writes `(I − kL̃)^t X` into `out` (row-major, `n·d` values). `k <= 0`
/// selects `k = 1/λ_max`.
///
/// # Safety
/// `g` must be a live graph; `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn age_smooth_features(
    g: *const AgeGraph,
    t: usize,
    k: f64,
    out: *mut f64,
    out_len: usize,
) -> AgeStatus {
    guard(|| {
        let g = &borrow(g, "graph")?.graph;
        let k_mode = if k > 0.0 { KMode::Fixed(k) } else { KMode::Auto };
        let spec = build_filter(&laplacians(g), k_mode, t)?;
        let x = age_core::filter::smooth_features(&spec, g.features().view())?;
        let dst = slice_mut(out, out_len, x.len(), "out")?;
        dst.iter_mut().zip(x.iter()).for_each(|(d, &v)| *d = v);
        Ok(())
    })
}

/// Trains the configured model. With labels the snapshot is chosen by DBI,
/// otherwise the last snapshot is returned. `config_json` may be NULL for
/// defaults.
///
/// # Safety
/// `g` must be a live graph; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn age_train(
    g: *const AgeGraph,
    config_json: *const c_char,
    out: *mut *mut AgeEmbedding,
) -> AgeStatus {
    guard(|| {
        let g = &borrow(g, "graph")?.graph;
        let cfg = config(config_json)?;
        let mut outcome = train(g, &cfg)?;
        let pick = if g.class_count().is_some_and(|m| m >= 2) {
            evaluate_clustering(g, &mut outcome.snapshots, cfg.seed)?.0
        } else {
            outcome.snapshots.len() - 1
        };
        let snapshot = outcome.snapshots.swap_remove(pick);
        write_out(out, Box::into_raw(Box::new(AgeEmbedding { snapshot })), "out")
    })
}

/// Full clustering run; writes a metrics JSON string to `metrics_json`.
///
/// # Safety
/// `g` must be a live graph; `metrics_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn age_cluster(
    g: *const AgeGraph,
    config_json: *const c_char,
    metrics_json: *mut *mut c_char,
) -> AgeStatus {
    guard(|| {
        let g = &borrow(g, "graph")?.graph;
        let run = run_cluster(g, &config(config_json)?)?;
        json_out(&run.metrics, metrics_json)
    })
}

/// Full link-prediction run; writes a metrics JSON string to `metrics_json`.
///
/// # Safety
/// `g` must be a live graph; `metrics_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn age_linkpred(
    g: *const AgeGraph,
    config_json: *const c_char,
    metrics_json: *mut *mut c_char,
) -> AgeStatus {
    guard(|| {
        let g = &borrow(g, "graph")?.graph;
        json_out(&run_linkpred(g, &config(config_json)?)?, metrics_json)
    })
}

/// Wraps smoothed features as an embedding (the LS baseline).
///
/// # Safety
/// `g` must be a live graph; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn age_ls_embedding(
    g: *const AgeGraph,
    config_json: *const c_char,
    out: *mut *mut AgeEmbedding,
) -> AgeStatus {
    guard(|| {
        let g = &borrow(g, "graph")?.graph;
        let cfg = config(config_json)?;
        let x = smoothed_features(g, &cfg.filter())?;
        let snapshot = EmbeddingSnapshot::new(age_core::encoder::minmax_columns(x.view()).0, 0);
        write_out(out, Box::into_raw(Box::new(AgeEmbedding { snapshot })), "out")
    })
}

/// Rows, columns and training epoch of an embedding. Out-pointers may be NULL.
///
/// # Safety
/// `e` must be a live embedding.
#[no_mangle]
pub unsafe extern "C" fn age_embedding_shape(
    e: *const AgeEmbedding,
    rows: *mut usize,
    cols: *mut usize,
    epoch: *mut usize,
) -> AgeStatus {
    guard(|| {
        let s = &borrow(e, "embedding")?.snapshot;
        for (p, v) in [(rows, s.z.nrows()), (cols, s.z.ncols()), (epoch, s.epoch)] {
            if !p.is_null() {
                p.write(v);
            }
        }
        Ok(())
    })
}

/// Copies the embedding, row-major, into `out`.
///
/// # Safety
/// `e` must be a live embedding; `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn age_embedding_copy(e: *const AgeEmbedding, out: *mut f64, out_len: usize) -> AgeStatus {
    guard(|| {
        let z = &borrow(e, "embedding")?.snapshot.z;
        let dst = slice_mut(out, out_len, z.len(), "out")?;
        dst.iter_mut().zip(z.iter()).for_each(|(d, &v)| *d = v);
        Ok(())
    })
}

/// Spectral clustering of the embedding's cosine similarity into `m` groups.
///
/// # Safety
/// `e` must be a live embedding; `assignments` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn age_embedding_cluster(
    e: *const AgeEmbedding,
    m: usize,
    seed: u64,
    assignments: *mut usize,
    len: usize,
) -> AgeStatus {
    guard(|| {
        let s = &borrow(e, "embedding")?.snapshot;
        let part = cluster_snapshot(s, m, seed)?;
        let dst = slice_mut(assignments, len, part.assignments.len(), "assignments")?;
        dst.copy_from_slice(&part.assignments);
        Ok(())
    })
}

/// Releases an embedding. NULL is ignored.
///
/// # Safety
/// `e` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn age_embedding_free(e: *mut AgeEmbedding) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}
