//! C interface to `graphdep`.
//!
//! Graphs and Lipschitz profiles cross the boundary as opaque handles that
//! the caller releases with the matching `*_free` function. Every fallible
//! call returns a [`GraphdepStatus`]; on failure the message is available
//! from [`graphdep_last_error_message`] on the same thread. Strings returned
//! through out-parameters are owned by the caller and released with
//! [`graphdep_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use graphdep::bounds::{self, BlockVariant, CompareFlags, Method};
use graphdep::covers::{self, CoverSolution, Strategy};
use graphdep::rational;
use graphdep::{Error, Graph, LipschitzProfile};

/// Result of every fallible call. Values 1 to 4 match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphdepStatus {
    Ok = 0,
    InputError = 1,
    ScaleError = 2,
    VerificationFailed = 3,
    InternalError = 4,
    KindError = 5,
    PreconditionError = 6,
    NullPointer = 7,
    InvalidUtf8 = 8,
    Panic = 9,
}

/// Decomposition strategy for the cover programs.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphdepStrategy {
    EnumeratedLp = 0,
    ColumnGeneration = 1,
    Greedy = 2,
}

impl From<GraphdepStrategy> for Strategy {
    fn from(s: GraphdepStrategy) -> Self {
        match s {
            GraphdepStrategy::EnumeratedLp => Strategy::EnumeratedLp,
            GraphdepStrategy::ColumnGeneration => Strategy::ColumnGeneration,
            GraphdepStrategy::Greedy => Strategy::Greedy,
        }
    }
}

/// Opaque dependency graph.
pub struct GraphdepGraph(Graph);

/// Opaque Lipschitz profile.
pub struct GraphdepProfile(LipschitzProfile);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GraphdepStatus {
    match e {
        Error::Input(_) => GraphdepStatus::InputError,
        Error::Scale(_) => GraphdepStatus::ScaleError,
        Error::Kind(_) => GraphdepStatus::KindError,
        Error::Precondition(_) => GraphdepStatus::PreconditionError,
        Error::Verification(_) => GraphdepStatus::VerificationFailed,
        Error::Internal(_) => GraphdepStatus::InternalError,
    }
}

enum Failure {
    Lib(Error),
    Null(&'static str),
    Utf8(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `body`, translating errors and panics into a status plus message.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> GraphdepStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => GraphdepStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(&e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_last_error(&format!("{what} is a null pointer"));
            GraphdepStatus::NullPointer
        }
        Ok(Err(Failure::Utf8(what))) => {
            set_last_error(&format!("{what} is not valid UTF-8"));
            GraphdepStatus::InvalidUtf8
        }
        Err(_) => {
            set_last_error("internal panic");
            GraphdepStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    // SAFETY: the caller guarantees `p` is null or a live handle from this library.
    unsafe { p.as_ref() }.ok_or(Failure::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    // SAFETY: the caller guarantees `p` is null or valid for writes.
    unsafe { p.as_mut() }.ok_or(Failure::Null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    // SAFETY: non-null and, per the contract, NUL-terminated.
    unsafe { CStr::from_ptr(p) }.to_str().map_err(|_| Failure::Utf8(what))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("interior NULs removed").into_raw()
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn graphdep_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must be NULL or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn graphdep_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: produced by `CString::into_raw` in this crate.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Builds a graph on vertices `1..=n` from `edge_count` pairs stored flat in
/// `edges` (`u0, v0, u1, v1, ...`).
///
/// # Safety
/// `edges` must point to `2 * edge_count` values (may be NULL when
/// `edge_count` is 0); `out_graph` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn graphdep_graph_new(
    n: usize,
    edges: *const usize,
    edge_count: usize,
    out_graph: *mut *mut GraphdepGraph,
) -> GraphdepStatus {
    guard(|| {
        let slot = unsafe { out(out_graph, "out_graph") }?;
        let flat: &[usize] = if edge_count == 0 {
            &[]
        } else {
            if edges.is_null() {
                return Err(Failure::Null("edges"));
            }
            // SAFETY: the caller provides 2 * edge_count readable values.
            unsafe { std::slice::from_raw_parts(edges, 2 * edge_count) }
        };
        if n == 0 {
            return Err(Error::Input("graph must have at least one vertex".into()).into());
        }
        let pairs: Vec<(usize, usize)> = flat.chunks_exact(2).map(|p| (p[0], p[1])).collect();
        let g = Graph::new(n, &pairs)?;
        *slot = Box::into_raw(Box::new(GraphdepGraph(g)));
        Ok(())
    })
}

/// Parses `{"n": .., "edges": [[u, v], ..]}` or an edge list.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out_graph` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn graphdep_graph_parse(text: *const c_char, out_graph: *mut *mut GraphdepGraph) -> GraphdepStatus {
    guard(|| {
        let slot = unsafe { out(out_graph, "out_graph") }?;
        let s = unsafe { self::text(text, "text") }?;
        let g = if s.trim_start().starts_with('{') { Graph::from_json_str(s) } else { Graph::from_edge_list_str(s) }?;
        *slot = Box::into_raw(Box::new(GraphdepGraph(g)));
        Ok(())
    })
}

/// # Safety
/// `graph` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn graphdep_graph_free(graph: *mut GraphdepGraph) {
    if !graph.is_null() {
        // SAFETY: produced by `Box::into_raw` in this crate.
        drop(unsafe { Box::from_raw(graph) });
    }
}

/// Number of vertices, or 0 for NULL.
///
/// # Safety
/// `graph` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn graphdep_graph_vertex_count(graph: *const GraphdepGraph) -> usize {
    unsafe { graph.as_ref() }.map_or(0, |g| g.0.n())
}

/// Number of edges, or 0 for NULL.
///
/// # Safety
/// `graph` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn graphdep_graph_edge_count(graph: *const GraphdepGraph) -> usize {
    unsafe { graph.as_ref() }.map_or(0, |g| g.0.edge_count())
}

/// 1 if the graph is a forest, 0 otherwise (and for NULL).
///
/// # Safety
/// `graph` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn graphdep_graph_is_forest(graph: *const GraphdepGraph) -> c_int {
    unsafe { graph.as_ref() }.map_or(0, |g| c_int::from(g.0.classify().is_forest))
}

/// Profile from `n` nonnegative doubles, converted exactly.
///
/// # Safety
/// `values` must point to `n` doubles; `out_profile` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn graphdep_profile_new(values: *const f64, n: usize, out_profile: *mut *mut GraphdepProfile) -> GraphdepStatus {
    guard(|| {
        let slot = unsafe { out(out_profile, "out_profile") }?;
        if values.is_null() {
            return Err(Failure::Null("values"));
        }
        // SAFETY: the caller provides n readable doubles.
        let c = unsafe { std::slice::from_raw_parts(values, n) };
        let p = LipschitzProfile::from_f64(c)?;
        *slot = Box::into_raw(Box::new(GraphdepProfile(p)));
        Ok(())
    })
}

/// Profile from `uniform:<c>` or a comma-separated list, for `n` coordinates.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out_profile` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn graphdep_profile_parse(spec: *const c_char, n: usize, out_profile: *mut *mut GraphdepProfile) -> GraphdepStatus {
    guard(|| {
        let slot = unsafe { out(out_profile, "out_profile") }?;
        let s = unsafe { text(spec, "spec") }?;
        let p = LipschitzProfile::parse(s, n)?;
        *slot = Box::into_raw(Box::new(GraphdepProfile(p)));
        Ok(())
    })
}

/// # Safety
/// `profile` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn graphdep_profile_free(profile: *mut GraphdepProfile) {
    if !profile.is_null() {
        // SAFETY: produced by `Box::into_raw` in this crate.
        drop(unsafe { Box::from_raw(profile) });
    }
}

unsafe fn write_solution(sol: &CoverSolution, value: *mut f64, exact: *mut *mut c_char) -> Result<(), Failure> {
    *unsafe { out(value, "value") }? = sol.objective.to_f64();
    if let Some(slot) = unsafe { exact.as_mut() } {
        *slot = sol.objective.exact().map_or(ptr::null_mut(), |r| into_c_string(rational::format(r)));
    }
    Ok(())
}

/// Fractional chromatic number. When `exact_out` is non-NULL it receives the
/// exact value as `"p/q"` (or NULL if only a float is known).
///
/// # Safety
/// `graph` must be a live handle; `value` valid for writes; `exact_out` NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn graphdep_fractional_chromatic_number(
    graph: *const GraphdepGraph,
    strategy: GraphdepStrategy,
    value: *mut f64,
    exact_out: *mut *mut c_char,
) -> GraphdepStatus {
    guard(|| {
        let g = unsafe { borrow(graph, "graph") }?;
        let sol = covers::fractional_chromatic_number_with(&g.0, strategy.into())?;
        unsafe { write_solution(&sol, value, exact_out) }
    })
}

/// Fractional vertex arboricity; outputs as for the chromatic number.
///
/// # Safety
/// As for [`graphdep_fractional_chromatic_number`].
#[no_mangle]
pub unsafe extern "C" fn graphdep_fractional_vertex_arboricity(
    graph: *const GraphdepGraph,
    strategy: GraphdepStrategy,
    value: *mut f64,
    exact_out: *mut *mut c_char,
) -> GraphdepStatus {
    guard(|| {
        let g = unsafe { borrow(graph, "graph") }?;
        let sol = covers::fractional_vertex_arboricity_with(&g.0, strategy.into())?;
        unsafe { write_solution(&sol, value, exact_out) }
    })
}

/// The decomposable-bound denominator `D(G, c)`. `is_exact` (optional)
/// receives 1 when the value is optimal and 0 when it is an upper bound.
///
/// # Safety
/// Handles must be live; `d` valid for writes; `is_exact` NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn graphdep_decomposable_denominator(
    graph: *const GraphdepGraph,
    profile: *const GraphdepProfile,
    strategy: GraphdepStrategy,
    d: *mut f64,
    is_exact: *mut c_int,
) -> GraphdepStatus {
    guard(|| {
        let g = unsafe { borrow(graph, "graph") }?;
        let c = unsafe { borrow(profile, "profile") }?;
        let sol = covers::optimize_d(&g.0, &c.0, strategy.into())?;
        *unsafe { out(d, "d") }? = sol.d;
        if let Some(flag) = unsafe { is_exact.as_mut() } {
            *flag = c_int::from(sol.solution.optimality == covers::Optimality::Exact);
        }
        Ok(())
    })
}

/// Forest denominator `sum_trees c_min^2 + sum_edges (c_i + c_j)^2`;
/// fails with `KindError` when the graph has a cycle.
///
/// # Safety
/// Handles must be live; `value` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn graphdep_forest_denominator(
    graph: *const GraphdepGraph,
    profile: *const GraphdepProfile,
    value: *mut f64,
) -> GraphdepStatus {
    guard(|| {
        let g = unsafe { borrow(graph, "graph") }?;
        let c = unsafe { borrow(profile, "profile") }?;
        *unsafe { out(value, "value") }? = rational::to_f64(&bounds::forest_denominator(&g.0, &c.0)?);
        Ok(())
    })
}

/// Block denominator for an `m`-dependent sequence of length `n`;
/// `paulin` selects the last-block variant instead of the minimum block.
///
/// # Safety
/// `profile` must be a live handle; `value` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn graphdep_m_dependent_denominator(
    n: usize,
    m: usize,
    profile: *const GraphdepProfile,
    paulin: c_int,
    value: *mut f64,
) -> GraphdepStatus {
    guard(|| {
        let c = unsafe { borrow(profile, "profile") }?;
        let variant = if paulin != 0 { BlockVariant::Paulin } else { BlockVariant::MinBlock };
        let (d, _) = bounds::m_dependent_denominator(n, m, &c.0, variant)?;
        *unsafe { out(value, "value") }? = rational::to_f64(&d);
        Ok(())
    })
}

/// `exp(-2 t^2 / denominator)`.
///
/// # Safety
/// `value` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn graphdep_tail_bound(denominator: f64, t: f64, value: *mut f64) -> GraphdepStatus {
    guard(|| {
        *unsafe { out(value, "value") }? = bounds::tail_bound(denominator, t)?;
        Ok(())
    })
}

/// Compares every applicable bound at deviation `t` and returns the report
/// as JSON. `methods` is NULL or `"all"` for every method, else a
/// comma-separated list. `m_dependence` of 0 means none.
///
/// # Safety
/// Handles must be live; `methods` NULL or NUL-terminated; `json_out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn graphdep_compare_bounds_json(
    graph: *const GraphdepGraph,
    profile: *const GraphdepProfile,
    t: f64,
    methods: *const c_char,
    assume_independent: c_int,
    m_dependence: usize,
    json_out: *mut *mut c_char,
) -> GraphdepStatus {
    guard(|| {
        let g = unsafe { borrow(graph, "graph") }?;
        let c = unsafe { borrow(profile, "profile") }?;
        let slot = unsafe { out(json_out, "json_out") }?;
        let methods = if methods.is_null() {
            None
        } else {
            let s = unsafe { text(methods, "methods") }?;
            if s.trim().eq_ignore_ascii_case("all") {
                None
            } else {
                Some(s.split(',').map(str::parse).collect::<Result<Vec<Method>, Error>>()?)
            }
        };
        let flags = CompareFlags {
            assume_independent: assume_independent != 0,
            m_dependence: (m_dependence > 0).then_some(m_dependence),
            methods,
            ..CompareFlags::default()
        };
        let cmp = bounds::compare_bounds(&g.0, &c.0, t, &flags)?;
        *slot = into_c_string(cmp.to_json().to_string());
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_codes_match_exit_codes() {
        for e in [
            Error::Input(String::new()),
            Error::Scale(String::new()),
            Error::Verification(String::new()),
            Error::Internal(String::new()),
        ] {
            assert_eq!(status_of(&e) as i32, e.exit_code());
        }
    }

    #[test]
    fn guard_reports_panics() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, GraphdepStatus::Panic);
        assert!(!graphdep_last_error_message().is_null());
    }
}
