//! End-to-end tests of the command-line interface, run against the built
//! binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn exe() -> &'static str {
    env!("CARGO_BIN_EXE_attrembed")
}

struct Fixture {
    dir: TempDir,
    edges: PathBuf,
    attrs: PathBuf,
    labels: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut edge_text = String::new();
        let mut attr_text = String::new();
        let mut label_text = String::new();
        // Ring plus chords, two attribute groups, two label classes.
        for i in 0..24 {
            edge_text.push_str(&format!("p{} p{}\n", i, (i + 1) % 24));
            edge_text.push_str(&format!("p{} p{}\n", i, (i + 5) % 24));
            attr_text.push_str(&format!("p{} f{} 1\n", i, i % 6));
            attr_text.push_str(&format!("p{} g{} 2\n", i, i % 3));
            label_text.push_str(&format!("p{} c{}\n", i, (i < 12) as u8));
        }
        let edges = dir.path().join("net.edges");
        let attrs = dir.path().join("net.attrs");
        let labels = dir.path().join("net.labels");
        fs::write(&edges, edge_text).unwrap();
        fs::write(&attrs, attr_text).unwrap();
        fs::write(&labels, label_text).unwrap();
        Self {
            dir,
            edges,
            attrs,
            labels,
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn run(args: &[&str]) -> Output {
    Command::new(exe())
        .args(args)
        .env_remove("ATTREMBED_DIM")
        .output()
        .unwrap()
}

fn train_args<'a>(fx: &'a Fixture, output: &'a Path) -> Vec<String> {
    vec![
        "train".into(),
        "--edges".into(),
        fx.edges.display().to_string(),
        "--attrs".into(),
        fx.attrs.display().to_string(),
        "--output".into(),
        output.display().to_string(),
        "--dim".into(),
        "8".into(),
        "--iters".into(),
        "5000".into(),
        "--walk-len".into(),
        "10".into(),
        "--walks-per-node".into(),
        "4".into(),
        "--window".into(),
        "3".into(),
        "--seed".into(),
        "9".into(),
    ]
}

#[test]
fn train_writes_embeddings_and_manifest() {
    let fx = Fixture::new();
    let out = fx.path("emb.txt");
    let args = train_args(&fx, &out);
    let result = run(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(result.status.success(), "{result:?}");

    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("24 8"));
    assert_eq!(text.lines().count(), 25);

    let manifest = fs::read_to_string(fx.path("emb.txt.manifest")).unwrap();
    assert!(manifest.contains("command = train"));
    assert!(manifest.contains("dim = 8"));
    assert!(manifest.contains("seed = 9"));
    assert!(manifest.contains("structure_steps = "));
}

#[test]
fn train_without_attrs_is_structure_only() {
    let fx = Fixture::new();
    let out = fx.path("emb.txt");
    let result = run(&[
        "train",
        "--edges",
        fx.edges.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
        "--dim",
        "4",
        "--iters",
        "2000",
        "--walk-len",
        "8",
        "--walks-per-node",
        "2",
        "--window",
        "2",
    ]);
    assert!(result.status.success(), "{result:?}");
    let manifest = fs::read_to_string(fx.path("emb.txt.manifest")).unwrap();
    assert!(manifest.contains("attr_steps = 0"));
}

#[test]
fn train_replays_from_manifest() {
    let fx = Fixture::new();
    let out1 = fx.path("a.txt");
    let args = train_args(&fx, &out1);
    let result = run(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(result.status.success(), "{result:?}");

    // Replay with the manifest as config, overriding only the output path.
    let out2 = fx.path("b.txt");
    let manifest = fx.path("a.txt.manifest");
    let result = run(&[
        "train",
        "--config",
        manifest.to_str().unwrap(),
        "--output",
        out2.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    assert_eq!(fs::read(&out1).unwrap(), fs::read(&out2).unwrap());
}

#[test]
fn env_var_overrides_default() {
    let fx = Fixture::new();
    let out = fx.path("emb.txt");
    let result = Command::new(exe())
        .args([
            "train",
            "--edges",
            fx.edges.to_str().unwrap(),
            "--output",
            out.to_str().unwrap(),
            "--iters",
            "1000",
            "--walk-len",
            "8",
            "--walks-per-node",
            "2",
            "--window",
            "2",
        ])
        .env("ATTREMBED_DIM", "16")
        .output()
        .unwrap();
    assert!(result.status.success(), "{result:?}");
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some("24 16"));
}

#[test]
fn corrupt_row_random_halves_rows() {
    let fx = Fixture::new();
    let prefix = fx.path("half");
    let result = run(&[
        "corrupt",
        "--edges",
        fx.edges.to_str().unwrap(),
        "--attrs",
        fx.attrs.to_str().unwrap(),
        "--kind",
        "row_random",
        "--fraction",
        "0.5",
        "--seed",
        "1",
        "--out-prefix",
        prefix.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    let attrs = fs::read_to_string(fx.path("half.attrs")).unwrap();
    let mut nodes_with_attrs = std::collections::HashSet::new();
    for line in attrs.lines() {
        nodes_with_attrs.insert(line.split_whitespace().next().unwrap().to_owned());
    }
    assert_eq!(nodes_with_attrs.len(), 12); // 24 nodes, half cleared
    let edges = fs::read_to_string(fx.path("half.edges")).unwrap();
    assert_eq!(edges.lines().count(), 48); // edges untouched
    assert!(fx.path("half.manifest").exists());
}

#[test]
fn corrupt_col_important_needs_labels() {
    let fx = Fixture::new();
    let prefix = fx.path("ci");
    let result = run(&[
        "corrupt",
        "--edges",
        fx.edges.to_str().unwrap(),
        "--attrs",
        fx.attrs.to_str().unwrap(),
        "--kind",
        "col_important",
        "--fraction",
        "0.5",
        "--out-prefix",
        prefix.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(1));

    let result = run(&[
        "corrupt",
        "--edges",
        fx.edges.to_str().unwrap(),
        "--attrs",
        fx.attrs.to_str().unwrap(),
        "--labels",
        fx.labels.to_str().unwrap(),
        "--kind",
        "col_important",
        "--fraction",
        "0.5",
        "--out-prefix",
        prefix.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
}

#[test]
fn corrupt_edge_random_writes_removed_list() {
    let fx = Fixture::new();
    let prefix = fx.path("er");
    let result = run(&[
        "corrupt",
        "--edges",
        fx.edges.to_str().unwrap(),
        "--attrs",
        fx.attrs.to_str().unwrap(),
        "--kind",
        "edge_random",
        "--fraction",
        "0.25",
        "--seed",
        "3",
        "--out-prefix",
        prefix.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    let removed = fs::read_to_string(fx.path("er.removed")).unwrap();
    assert_eq!(removed.lines().count(), 12); // round(0.25 * 48)
    let edges = fs::read_to_string(fx.path("er.edges")).unwrap();
    assert_eq!(edges.lines().count(), 36);
}

#[test]
fn linkpred_prints_auc_table() {
    let fx = Fixture::new();
    let result = run(&[
        "linkpred",
        "--edges",
        fx.edges.to_str().unwrap(),
        "--attrs",
        fx.attrs.to_str().unwrap(),
        "--remove-fraction",
        "0.3",
        "--operator",
        "hadamard",
        "--seed",
        "4",
        "--dim",
        "8",
        "--iters",
        "20000",
        "--walk-len",
        "10",
        "--walks-per-node",
        "4",
        "--window",
        "3",
    ]);
    assert!(result.status.success(), "{result:?}");
    let stdout = String::from_utf8(result.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("operator method auc"));
    let row = lines.next().unwrap();
    let fields: Vec<&str> = row.split_whitespace().collect();
    assert_eq!(fields[0], "hadamard");
    assert_eq!(fields[1], "embedding");
    let value: f64 = fields[2].parse().unwrap();
    assert!((0.0..=1.0).contains(&value));
}

#[test]
fn linkpred_heuristic_operator() {
    let fx = Fixture::new();
    let result = run(&[
        "linkpred",
        "--edges",
        fx.edges.to_str().unwrap(),
        "--remove-fraction",
        "0.3",
        "--operator",
        "heuristic:common_neighbors",
        "--seed",
        "4",
    ]);
    assert!(result.status.success(), "{result:?}");
    let stdout = String::from_utf8(result.stdout).unwrap();
    assert!(stdout.contains("heuristic common_neighbors"));
}

#[test]
fn linkpred_writes_csv() {
    let fx = Fixture::new();
    let csv = fx.path("results.csv");
    let result = run(&[
        "linkpred",
        "--edges",
        fx.edges.to_str().unwrap(),
        "--remove-fraction",
        "0.5",
        "--operator",
        "heuristic:jaccard",
        "--seed",
        "4",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    let body = fs::read_to_string(&csv).unwrap();
    assert!(body.starts_with("operator,method,auc\n"));
    assert!(fx.path("results.csv.manifest").exists());
}

#[test]
fn pairs_dumps_sorted_counts() {
    let fx = Fixture::new();
    let result = run(&[
        "pairs",
        "--edges",
        fx.edges.to_str().unwrap(),
        "--walk-len",
        "6",
        "--walks-per-node",
        "2",
        "--window",
        "2",
        "--seed",
        "5",
    ]);
    assert!(result.status.success(), "{result:?}");
    let stdout = String::from_utf8(result.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert!(!lines.is_empty());
    for line in &lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(fields.len(), 3, "line `{line}`");
        let count: u64 = fields[2].parse().unwrap();
        assert!(count >= 1);
    }
}

#[test]
fn usage_errors_exit_2() {
    // Unknown subcommand.
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    // Missing required flag.
    assert_eq!(run(&["train"]).status.code(), Some(2));
    // Nonexistent input path.
    let fx = Fixture::new();
    let result = run(&[
        "train",
        "--edges",
        "/nonexistent/file.edges",
        "--output",
        fx.path("x.txt").to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn malformed_input_exits_1() {
    let fx = Fixture::new();
    let bad = fx.path("bad.edges");
    fs::write(&bad, "a b\nonly_one_token\n").unwrap();
    let result = run(&[
        "train",
        "--edges",
        bad.to_str().unwrap(),
        "--output",
        fx.path("x.txt").to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(1));
    let stderr = String::from_utf8(result.stderr).unwrap();
    assert!(stderr.contains("line 2"), "stderr: {stderr}");
}
