use std::path::Path;
use std::process::{Command, Output};

use glc_core::data::load_dataset_path;
use glc_core::Provenance;

const IRIS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/data/iris.csv");

fn glc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glc"))
        .args(args)
        .env_remove("GLC_SERVER")
        .output()
        .unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn normalize_writes_unit_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "n.csv");
    ok(&glc(&["normalize", IRIS, &out]));
    let ds = load_dataset_path(&out).unwrap();
    assert_eq!(ds.len(), 150);
    for row in &ds.rows {
        assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
    }
    for a in 0..4 {
        assert_eq!(ds.rows.iter().map(|r| r[a]).fold(f64::INFINITY, f64::min), 0.0);
        assert_eq!(ds.rows.iter().map(|r| r[a]).fold(0.0, f64::max), 1.0);
    }
}

#[test]
fn layout_writes_svg_and_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let (svg, json) = (path(dir.path(), "l.svg"), path(dir.path(), "l.json"));
    ok(&glc(&["layout", IRIS, "--kind", "scc", "--order", "3,2,1,0", "--svg", &svg, "--json", &json]));
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<svg "));
    let geometry: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(geometry["kind"], "scc");
    assert_eq!(geometry["config"]["attribute_order"], serde_json::json!([3, 2, 1, 0]));
    assert_eq!(geometry["glyphs"].as_array().unwrap().len(), 150);
}

#[test]
fn purity_and_rules_print() {
    let csv = ok(&glc(&["purity", IRIS, "--min-support", "3", "--csv"]));
    assert!(csv.lines().count() > 1);
    assert!(csv.contains("Iris-setosa"));
    let table = ok(&glc(&["purity", IRIS]));
    assert!(table.contains("low-purity cases:"));
    let rules = ok(&glc(&["rules", IRIS]));
    assert!(rules.contains("precision"));
}

#[test]
fn sdg_output_reloads_with_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "s.csv");
    let args = [
        "sdg",
        IRIS,
        "--strategy",
        "in-bounds-uniform",
        "--class",
        "Iris-setosa",
        "--count",
        "30",
        "--seed",
        "1",
        "--out",
        &out,
    ];
    ok(&glc(&args));
    let ds = load_dataset_path(&out).unwrap();
    assert_eq!(ds.len(), 180);
    assert_eq!(ds.provenance.iter().filter(|p| **p == Provenance::Synthetic).count(), 30);
    let first = std::fs::read(&out).unwrap();
    ok(&glc(&args));
    assert_eq!(first, std::fs::read(&out).unwrap());

    let shift = path(dir.path(), "d.csv");
    ok(&glc(&["sdg", IRIS, "--strategy", "duplicate-shift", "--delta", "-0.05", "--out", &shift]));
    assert_eq!(load_dataset_path(&shift).unwrap().len(), 300);
}

#[test]
fn eval_report_formats() {
    let dir = tempfile::tempdir().unwrap();
    let report = path(dir.path(), "r.json");
    ok(&glc(&[
        "eval", "--train", IRIS, "--explore", IRIS, "--cycles", "3", "--folds", "5", "--seed", "7", "--classifiers",
        "lda,knn", "--format", "json", "--report", &report,
    ]));
    let parsed: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(parsed["cycles"], 3);
    assert_eq!(parsed["rows"].as_array().unwrap().len(), 2);

    let text = ok(&glc(&["eval", "--train", IRIS, "--cycles", "2", "--folds", "5"]));
    assert!(text.contains("LDA"));
    let csv = ok(&glc(&["eval", "--train", IRIS, "--cycles", "2", "--folds", "5", "--format", "csv"]));
    assert!(csv.lines().count() >= 7);
}

#[test]
fn pipeline_from_toml() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(IRIS, dir.path().join("iris.csv")).unwrap();
    let config = path(dir.path(), "run.toml");
    std::fs::write(
        &config,
        r#"
input = "iris.csv"
output = "out.csv"
log = "log.json"

[config]
max_iterations = 1
classifiers = [{ kind = "lda" }]

[config.eval]
cycles = 2
folds = 5
master_seed = 3

[policy]
mode = "automatic"
per_class = 4
seed = 2
"#,
    )
    .unwrap();
    let stdout = ok(&glc(&["pipeline", "--config", &config]));
    assert!(stdout.contains("termination"));
    let log: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("log.json")).unwrap()).unwrap();
    assert_eq!(log["termination"], "iteration_bound");
    let out = load_dataset_path(dir.path().join("out.csv")).unwrap();
    assert!(out.len() >= 150);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(glc(&["eval"]).status.code(), Some(2));
    assert_eq!(glc(&["layout", IRIS]).status.code(), Some(2));
    assert_eq!(glc(&["sdg", IRIS, "--strategy", "unbounded", "--out", "x.csv"]).status.code(), Some(2));
    assert_eq!(glc(&["eval", "--train", IRIS, "--folds", "1"]).status.code(), Some(2));

    let bad = path(dir.path(), "bad.csv");
    std::fs::write(&bad, "a,b,class\n1,2,x\n1,oops,y\n").unwrap();
    let out = glc(&["purity", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let missing = path(dir.path(), "missing.csv");
    assert_eq!(glc(&["purity", &missing]).status.code(), Some(1));
    assert_eq!(glc(&["--server", "http://127.0.0.1:1", "purity", IRIS]).status.code(), Some(1));
}

#[tokio::test(flavor = "multi_thread")]
async fn remote_server() {
    let addr = glc_service::spawn_local(&glc_service::ServiceConfig::default()).await.unwrap();
    let url = format!("http://{addr}");
    let out = tokio::task::spawn_blocking(move || glc(&["--server", &url, "purity", IRIS, "--csv"]))
        .await
        .unwrap();
    assert!(ok(&out).contains("Iris-setosa"));
}
