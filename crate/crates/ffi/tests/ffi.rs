use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::ptr;

use graphdep_ffi::*;

fn example_graph() -> *mut GraphdepGraph {
    let edges = [1usize, 2, 1, 3, 2, 3];
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { graphdep_graph_new(9, edges.as_ptr(), 3, &mut g) }, GraphdepStatus::Ok);
    g
}

fn uniform(n: usize) -> *mut GraphdepProfile {
    let spec = CString::new("uniform:1").unwrap();
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { graphdep_profile_parse(spec.as_ptr(), n, &mut c) }, GraphdepStatus::Ok);
    c
}

fn last_error() -> String {
    let p = graphdep_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn example_graph_covers_and_bounds() {
    let g = example_graph();
    let c = uniform(9);
    unsafe {
        assert_eq!(graphdep_graph_vertex_count(g), 9);
        assert_eq!(graphdep_graph_edge_count(g), 3);
        assert_eq!(graphdep_graph_is_forest(g), 0);

        let (mut chi, mut exact) = (0.0, ptr::null_mut());
        assert_eq!(graphdep_fractional_chromatic_number(g, GraphdepStrategy::EnumeratedLp, &mut chi, &mut exact), GraphdepStatus::Ok);
        assert_eq!(chi, 3.0);
        assert_eq!(CStr::from_ptr(exact).to_str().unwrap(), "3/1");
        graphdep_string_free(exact);

        let mut a = 0.0;
        assert_eq!(graphdep_fractional_vertex_arboricity(g, GraphdepStrategy::EnumeratedLp, &mut a, ptr::null_mut()), GraphdepStatus::Ok);
        assert_eq!(a, 1.5);

        let (mut d, mut is_exact) = (0.0, 0);
        assert_eq!(graphdep_decomposable_denominator(g, c, GraphdepStrategy::EnumeratedLp, &mut d, &mut is_exact), GraphdepStatus::Ok);
        assert!(d <= 81.0 / 4.0 + 1e-9);
        assert_eq!(is_exact, 1);

        let mut json = ptr::null_mut();
        let methods = CString::new("janson,decomposable").unwrap();
        assert_eq!(graphdep_compare_bounds_json(g, c, 3.0, methods.as_ptr(), 0, 0, &mut json), GraphdepStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        graphdep_string_free(json);
        assert!(text.contains("\"JANSON\"") && text.contains("\"27/1\""));

        graphdep_profile_free(c);
        graphdep_graph_free(g);
    }
}

#[test]
fn block_and_tail_bounds() {
    let c = uniform(12);
    unsafe {
        let mut v = 0.0;
        assert_eq!(graphdep_m_dependent_denominator(12, 3, c, 0, &mut v), GraphdepStatus::Ok);
        // (2 m c)^2 (n/m - 1) + m^2 c^2
        assert_eq!(v, 36.0 * 3.0 + 9.0);
        assert_eq!(graphdep_tail_bound(4.0, 2.0, &mut v), GraphdepStatus::Ok);
        assert!((v - (-2.0f64).exp()).abs() < 1e-15);
        assert_eq!(graphdep_tail_bound(4.0, -1.0, &mut v), GraphdepStatus::InputError);
        assert!(last_error().contains("positive"));
        graphdep_profile_free(c);
    }
}

#[test]
fn errors_are_reported_with_messages() {
    unsafe {
        let mut g = ptr::null_mut();
        let self_loop = [2usize, 2];
        assert_eq!(graphdep_graph_new(3, self_loop.as_ptr(), 1, &mut g), GraphdepStatus::InputError);
        assert!(g.is_null());
        assert!(!last_error().is_empty());

        let text = CString::new("3\n1 2\n2 3\n").unwrap();
        assert_eq!(graphdep_graph_parse(text.as_ptr(), &mut g), GraphdepStatus::Ok);
        assert_eq!(graphdep_graph_is_forest(g), 1);
        let c = uniform(3);
        let mut v = 0.0;
        assert_eq!(graphdep_forest_denominator(g, c, &mut v), GraphdepStatus::Ok);
        // two edges of weight (1+1)^2 plus one root term
        assert_eq!(v, 9.0);
        assert!(graphdep_last_error_message().is_null());

        let mut bad = ptr::null_mut();
        let spec = CString::new("1,2").unwrap();
        assert_eq!(graphdep_profile_parse(spec.as_ptr(), 3, &mut bad), GraphdepStatus::InputError);

        assert_eq!(graphdep_forest_denominator(ptr::null(), c, &mut v), GraphdepStatus::NullPointer);
        assert!(last_error().contains("graph"));

        let big: Vec<usize> = (1..=30).flat_map(|v| [v, v % 30 + 1]).collect();
        let mut cycle = ptr::null_mut();
        assert_eq!(graphdep_graph_new(30, big.as_ptr(), 30, &mut cycle), GraphdepStatus::Ok);
        assert_eq!(
            graphdep_fractional_chromatic_number(cycle, GraphdepStrategy::EnumeratedLp, &mut v, ptr::null_mut()),
            GraphdepStatus::ScaleError
        );
        graphdep_graph_free(cycle);
        graphdep_profile_free(c);
        graphdep_graph_free(g);
        graphdep_graph_free(ptr::null_mut());
    }
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_the_interface() {
    let header = std::fs::read_to_string(crate_dir().join("include/graphdep.h")).unwrap();
    for symbol in [
        "graphdep_graph_new",
        "graphdep_graph_free",
        "graphdep_profile_parse",
        "graphdep_fractional_chromatic_number",
        "graphdep_decomposable_denominator",
        "graphdep_m_dependent_denominator",
        "graphdep_compare_bounds_json",
        "graphdep_last_error_message",
        "graphdep_string_free",
        "GRAPHDEP_STATUS_SCALE_ERROR = 2",
        "typedef struct GraphdepGraph GraphdepGraph;",
    ] {
        assert!(header.contains(symbol), "header lacks {symbol}");
    }
}

/// Directory holding this build's `libgraphdep_ffi.a`, next to the test binary's `deps/`.
fn static_lib_dir() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let profile_dir = exe.parent()?.parent()?;
    profile_dir.join("libgraphdep_ffi.a").exists().then(|| profile_dir.to_path_buf())
}

fn compiler() -> Option<&'static str> {
    ["cc", "gcc", "clang"].into_iter().find(|c| {
        std::process::Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success())
    })
}

#[test]
fn c_program_compiles_and_links() {
    let cc = compiler().expect("a C compiler is needed to check the header");
    let dir = crate_dir();
    let source = dir.join("tests/c/smoke.c");
    let include = dir.join("include");
    let syntax = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&source)
        .output()
        .unwrap();
    assert!(syntax.status.success(), "{}", String::from_utf8_lossy(&syntax.stderr));

    let Some(lib_dir) = static_lib_dir() else {
        eprintln!("static library not built in this profile; header checked for syntax only");
        return;
    };
    let out_dir = tempfile::tempdir().unwrap();
    let binary = out_dir.path().join("smoke");
    let link = std::process::Command::new(cc)
        .args(["-std=c99", "-I"])
        .arg(&include)
        .arg(&source)
        .arg("-o")
        .arg(&binary)
        .arg(lib_dir.join("libgraphdep_ffi.a"))
        .args(["-lm", "-lpthread", "-ldl"])
        .output()
        .unwrap();
    assert!(link.status.success(), "{}", String::from_utf8_lossy(&link.stderr));
    let run = std::process::Command::new(Path::new(&binary)).output().unwrap();
    assert!(run.status.success(), "smoke program exited with {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "chi_f = 3");
}
