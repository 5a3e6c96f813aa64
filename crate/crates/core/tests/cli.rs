use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const EX9: &str = r#"{"n": 9, "edges": [[1, 2], [1, 3], [2, 3]]}"#;

const P2XOR: &str = r#"{"tree": {"n": 2, "edges": [[1, 2]]}, "alphabets": [2, 2],
 "latents": {"vertex": [["3/4", "1/4"], ["3/4", "1/4"]], "edge": [["1/2", "1/2"]]},
 "emit": ["xor", "xor"]}"#;

const COPIES: &str = r#"{"spaces": [2, 2], "pmf": [{"x": [0, 0], "p": "1/2"}, {"x": [1, 1], "p": "1/2"}],
 "graph": {"n": 2, "edges": []}, "f": "sum"}"#;

const BLOCKS: &str = r#"{"model": "block_factor", "n": 8, "k": 2,
 "latent": {"dist": "bernoulli", "p": 0.5}, "g": "average"}"#;

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        Fixture { dir: tempfile::tempdir().unwrap() }
    }

    fn file(&self, name: &str, body: &str) -> PathBuf {
        let path = self.dir.path().join(name);
        std::fs::write(&path, body).unwrap();
        path
    }
}

fn graphdep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphdep")).args(args).output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<csv::StringRecord> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader.records().map(Result::unwrap).collect()
}

#[test]
fn bounds_on_the_example_graph() {
    let fx = Fixture::new();
    let g = fx.file("ex9.json", EX9);
    let out = graphdep(&["bounds", "--graph", p(&g), "--c", "uniform:1", "--t", "3", "--methods", "janson,decomposable", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("method,denominator"));
    let rows = csv_rows(&text);
    let denominator = |m: &str| -> f64 { rows.iter().find(|r| &r[0] == m).unwrap()[1].parse().unwrap() };
    assert_eq!(denominator("JANSON"), 27.0);
    assert!(denominator("DECOMPOSABLE") <= 20.25);
}

#[test]
fn bounds_json_is_parseable() {
    let fx = Fixture::new();
    let g = fx.file("ex9.json", EX9);
    let out = graphdep(&["bounds", "--graph", p(&g), "--t", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(value.to_string().contains("JANSON"));
}

#[test]
fn fractional_chromatic_number_of_a_tree() {
    let fx = Fixture::new();
    let tree = fx.file("tree.txt", "6\n1 2\n1 3\n3 4\n3 5\n5 6\n");
    let out = graphdep(&["covers", "chi-f", "--graph", p(&tree), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("2/1"), "{text}");
    let json = graphdep(&["covers", "chi-f", "--graph", p(&tree)]);
    let value: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert!(value.to_string().contains("2/1"));
}

#[test]
fn coupling_check_on_the_xor_pair() {
    let fx = Fixture::new();
    let spec = fx.file("p2xor.json", P2XOR);
    let out = graphdep(&["verify", "coupling", "--spec", p(&spec)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["dependency_deviation", "independence_gap", "marginal_deviation", "structural_defect"] {
        assert_eq!(report[key], "0/1", "{key}");
    }
    assert_eq!(report["passed"], true);
}

#[test]
fn false_dependency_claim_is_a_verification_failure() {
    let fx = Fixture::new();
    let spec = fx.file("copies.json", COPIES);
    let out = graphdep(&["verify", "coupling", "--spec", p(&spec)]);
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["dependency_deviation"], "1/2");
    assert!(!out.stderr.is_empty());

    let dep = graphdep(&["verify", "dependency", "--spec", p(&spec)]);
    assert_eq!(dep.status.code(), Some(3));
}

#[test]
fn input_errors_exit_one_with_diagnostics_on_stderr() {
    let fx = Fixture::new();
    let path = fx.file("path.txt", "3\n1 2\n2 3\n");
    let short = graphdep(&["bounds", "--graph", p(&path), "--c", "1,1", "--t", "1"]);
    assert_eq!(short.status.code(), Some(1));
    assert!(short.stdout.is_empty());
    assert!(String::from_utf8_lossy(&short.stderr).contains("2 entries"));

    let looped = fx.file("loop.txt", "3\n1 2\n2 2\n");
    let out = graphdep(&["covers", "chi-f", "--graph", p(&looped)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("self-loop"));

    let broken = fx.file("broken.json", "{\"n\": 3, \"edges\": [[1, 2]");
    let out = graphdep(&["covers", "chi-f", "--graph", p(&broken)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());

    let missing_seed = graphdep(&["simulate", "--spec", p(&path)]);
    assert_eq!(missing_seed.status.code(), Some(1));
}

#[test]
fn oversized_exhaustive_request_is_a_scale_error() {
    let fx = Fixture::new();
    let mut text = String::from("40\n");
    for v in 1..40 {
        text.push_str(&format!("{v} {}\n", v + 1));
    }
    text.push_str("1 40\n");
    let cycle = fx.file("c40.txt", &text);
    let out = graphdep(&["covers", "d", "--graph", p(&cycle), "--strategy", "enumerated-lp"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("column generation"));
}

#[test]
fn profile_spec_scales_every_vertex() {
    let fx = Fixture::new();
    let path = fx.file("path.txt", "4\n1 2\n2 3\n3 4\n");
    let out = graphdep(&["bounds", "--graph", p(&path), "--c", "uniform:2.5", "--t", "1", "--methods", "mcdiarmid", "--assume-independent", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&stdout(&out));
    assert_eq!(&rows[0][0], "MCDIARMID");
    assert_eq!(&rows[0][2], "25/1");
}

#[test]
fn simulate_output_is_parseable_and_reproducible() {
    let fx = Fixture::new();
    let spec = fx.file("blocks.json", BLOCKS);
    let args = |format: &'static str| -> Vec<String> {
        ["simulate", "--spec", p(&spec), "--seed", "7", "--samples", "20000", "--format", format]
            .iter()
            .map(|s| s.to_string())
            .collect()
    };
    let run = |format: &'static str| {
        let a = args(format);
        graphdep(&a.iter().map(String::as_str).collect::<Vec<_>>())
    };

    let csv_out = run("csv");
    assert!(matches!(csv_out.status.code(), Some(0) | Some(3)));
    let text = stdout(&csv_out);
    assert!(text.starts_with("method,t,denominator,bound,p_hat,ci_upper,verdict,seed,N,valid_under"));
    let rows = csv_rows(&text);
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| &r[7] == "7" && &r[8] == "20000"));
    assert_eq!(run("csv").stdout, csv_out.stdout);

    let json_out = run("json");
    let value: serde_json::Value = serde_json::from_slice(&json_out.stdout).unwrap();
    assert!(value["rows"].as_array().is_some_and(|r| r.len() == rows.len()));
    assert_eq!(run("json").stdout, json_out.stdout);
}

#[test]
fn thread_count_from_environment_does_not_change_output() {
    let fx = Fixture::new();
    let spec = fx.file("blocks.json", BLOCKS);
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_graphdep"))
            .args(["simulate", "--spec", p(&spec), "--seed", "3", "--samples", "50000", "--format", "csv"])
            .env("GRAPHDEP_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    assert!(!one.stdout.is_empty());
    assert_eq!(one.stdout, run("4").stdout);
}

#[test]
fn output_flag_writes_the_report_to_a_file() {
    let fx = Fixture::new();
    let g = fx.file("ex9.json", EX9);
    let target = fx.dir.path().join("out.csv");
    let out = graphdep(&["covers", "arboricity", "--graph", p(&g), "--format", "csv", "--output", p(&target)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&target).unwrap();
    assert!(written.contains("3/2"), "{written}");
}

#[test]
fn cover_verification_accepts_the_worked_witness() {
    let fx = Fixture::new();
    let g = fx.file("ex9.json", EX9);
    let cover = fx.file(
        "cover.json",
        r#"{"kind": "forest", "parts": [
            {"s": [1, 2, 4, 5, 6, 7], "w": "1/2"},
            {"s": [1, 3, 4, 5, 8, 9], "w": "1/2"},
            {"s": [2, 3, 6, 7, 8, 9], "w": "1/2"}]}"#,
    );
    let out = graphdep(&["verify", "cover", "--graph", p(&g), "--cover", p(&cover)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let bad = fx.file("bad.json", r#"{"kind": "independent", "parts": [{"s": [1, 2, 3, 4, 5, 6, 7, 8, 9], "w": "1"}]}"#);
    let out = graphdep(&["verify", "cover", "--graph", p(&g), "--cover", p(&bad)]);
    assert_eq!(out.status.code(), Some(3));
}
