use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn phiclust(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phiclust"))
        .args(args)
        .output()
        .expect("run phiclust")
}

fn iris() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures/iris_petals.csv")
        .display()
        .to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn membership_table() {
    let out = phiclust(&["membership", &iris(), "--k", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("membership\t1\t2\t3\n"));
    assert!(text.contains("0.985"));
    assert!(text.contains("delta_T\t"));
}

#[test]
fn membership_json_and_threshold() {
    let out = phiclust(&["membership", &iris(), "--k", "3", "--threshold", "0.1", "--format", "json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["k"], 3);
    assert_eq!(v["thresholded"], true);
    assert_eq!(v["delta_mk"].as_array().unwrap().len(), 3);
}

#[test]
fn k_one_is_rejected_with_code() {
    let out = phiclust(&["membership", &iris(), "--k", "1"]);
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("error[E_UNSUPPORTED_K]"), "{}", stderr(&out));
}

#[test]
fn analyze_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let json_path = dir.path().join("report.json");
    let out = phiclust(&[
        "analyze",
        &iris(),
        "--bootstraps",
        "20",
        "--seed",
        "7",
        "--out",
        json_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("seed: 7"));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(v["selected"]["phi"], 3);
    assert_eq!(v["meta"]["seed"], 7);
    assert_eq!(v["records"].as_array().unwrap().len(), 10);

    let out = phiclust(&["analyze", &iris(), "--bootstraps", "20", "--kmax", "5", "--format", "csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "k,delta_T,phi,phi1,gap_unif,gap_unif_se,gap_pca,gap_pca_se,ch,silhouette"
    );
    assert_eq!(lines.count(), 5);
}

#[test]
fn bad_csv_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "x,y\n1,2\n3,oops\n").unwrap();
    let out = phiclust(&["analyze", path.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("error[E_PARSE]") && err.contains("line 3"), "{err}");
}

#[test]
fn simulate_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = phiclust(&[
        "simulate",
        "four-2d",
        "-R",
        "3",
        "--bootstraps",
        "10",
        "--kmax",
        "6",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("four-2d.csv")).unwrap();
    assert!(csv.starts_with("method,1,2,3,4,5,6,failed\n"));
    assert_eq!(csv.lines().count(), 7);
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("four-2d.json")).unwrap()).unwrap();
    assert_eq!(v["replicates"], 3);
}

#[test]
fn simulate_from_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"name": "pair", "kind": "gaussian-mixture", "centers": [[0, 0], [8, 0]], "sizes": [10, 10], "sd": 0.5}"#,
    )
    .unwrap();
    let out = phiclust(&[
        "simulate",
        "--spec",
        spec.to_str().unwrap(),
        "-R",
        "2",
        "--methods",
        "silhouette,phi",
        "--kmax",
        "5",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("# pair\nmethod,1,2,3,4,5,failed\n"), "{text}");
    assert!(text.contains("silhouette,,2,0,0,0,0\n"), "{text}");
}

#[test]
fn invalid_spec_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"name": "bad", "kind": "gaussian-mixture", "centers": [[0, 0]], "sizes": [10, 10], "sd": 1}"#,
    )
    .unwrap();
    let out = phiclust(&["simulate", "--spec", spec.to_str().unwrap(), "-R", "1"]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("error[E_INPUT]") && err.contains("sizes"), "{err}");
}

#[test]
fn unknown_scenario_and_method() {
    let out = phiclust(&["simulate", "nope"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("unknown scenario 'nope'"));
    let out = phiclust(&["simulate", "four-2d", "--methods", "kmeans"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("unknown method 'kmeans'"));
}

#[test]
fn scenarios_lists_builtins() {
    let out = phiclust(&["scenarios"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 6);
}
