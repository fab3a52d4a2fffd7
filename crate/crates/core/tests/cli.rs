use std::path::Path;
use std::process::{Command, Output};

use maskgrid::families::{measure_anchor_3d, omega_3d};
use maskgrid::masker::{builtin_example_3d, Masker};
use serde_json::Value;

fn maskgrid(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maskgrid"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn json_stdout(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn write_states(dir: &Path, name: &str, count: usize) -> String {
    let states = omega_3d(&measure_anchor_3d(), count, 4).unwrap();
    std::fs::write(dir.join(name), serde_json::to_string(&states).unwrap()).unwrap();
    name.to_string()
}

#[test]
fn example_3d_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = maskgrid(&["example", "3d"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v = json_stdout(&o);
    assert!(v["result"]["max_deviation"].as_f64().unwrap() < 1e-10);
    assert_eq!(v["manifest"]["command"], "example");
}

#[test]
fn example_4d_reports_both_b_forms() {
    let dir = tempfile::tempdir().unwrap();
    let o = maskgrid(&["example", "4d"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r = &json_stdout(&o)["result"];
    assert!(r["max_deviation_b"].as_f64().unwrap() < 1e-10);
    let c = r["invariants"]["c"].as_f64().unwrap();
    let coupled = r["coupled_form_deviation_b"].as_f64().unwrap();
    assert!((coupled - c.abs() / 4.0).abs() < 1e-10);
}

#[test]
fn unknown_example_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        maskgrid(&["example", "5d"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        maskgrid(&["sweep", "--masker", "qubit:oops"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        maskgrid(&["classify", "--masker", "missing.json"], dir.path())
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn classify_builtin3() {
    let dir = tempfile::tempdir().unwrap();
    let o = maskgrid(&["classify", "--masker", "builtin3"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r = &json_stdout(&o)["result"];
    assert_eq!(r["branch"], "SOLVABLE_PHASE_SHIFTED");
    assert_eq!(r["pair"], serde_json::json!([2, 3]));
}

#[test]
fn classify_reads_masker_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.json"), builtin_example_3d().to_json()).unwrap();
    let a = json_stdout(&maskgrid(&["classify", "--masker", "m.json"], dir.path()));
    let b = json_stdout(&maskgrid(&["classify", "--masker", "builtin3"], dir.path()));
    assert_eq!(a["result"], b["result"]);
}

#[test]
fn sweep_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sweep",
        "--masker",
        "builtin3",
        "--eps",
        "0.2,0.1,0.05,0.025",
        "--samples",
        "100000",
        "--seed",
        "7",
        "--out",
        "s.csv",
    ];
    let o = maskgrid(&args, dir.path());
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "epsilon,fraction,stderr,samples,seed,delta");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].ends_with(",100000,7,1.0000000000000000e-3"));
    let m: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("s.csv.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(m["seed"], 7);
    assert!(m["summary"]["fit"]["slope"].as_f64().unwrap() > 1.0);
    assert_eq!(m["outputs"][0], "s.csv");
}

#[test]
fn sweep_json_includes_fit() {
    let dir = tempfile::tempdir().unwrap();
    let o = maskgrid(
        &[
            "sweep",
            "--eps",
            "0.2,0.1,0.05,0.025",
            "--samples",
            "50000",
            "--format",
            "json",
        ],
        dir.path(),
    );
    let r = &json_stdout(&o)["result"];
    assert_eq!(r["estimates"].as_array().unwrap().len(), 4);
    assert!(r["fit"]["slope"].is_f64());
}

#[test]
fn identical_command_lines_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sweep",
        "--eps",
        "0.1,0.05,0.025,0.0125",
        "--samples",
        "200000",
        "--seed",
        "3",
    ];
    let a = maskgrid(&args, dir.path());
    let b = Command::new(env!("CARGO_BIN_EXE_maskgrid"))
        .args(args)
        .current_dir(dir.path())
        .env("MASKGRID_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(a.stdout, b.stdout);
    let f1 = maskgrid(
        &["figure", "fig2b", "--grid", "10", "--format", "json"],
        dir.path(),
    );
    let f2 = maskgrid(
        &["figure", "fig2b", "--grid", "10", "--format", "json"],
        dir.path(),
    );
    assert_eq!(f1.stdout, f2.stdout);
}

#[test]
fn invalid_sweep_grid_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = maskgrid(
        &["sweep", "--eps", "0.1,0.05", "--samples", "10"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fig2a_anchor_lies_on_its_curve() {
    let dir = tempfile::tempdir().unwrap();
    let o = maskgrid(&["figure", "fig2a", "--grid", "12"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("y1,zeta1,residual"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    let at_anchor: Vec<_> = rows
        .iter()
        .filter(|r| (r[0] - std::f64::consts::FRAC_PI_6).abs() < 1e-12)
        .collect();
    assert!(!at_anchor.is_empty());
    for r in at_anchor {
        assert!((r[1] - std::f64::consts::FRAC_PI_4).abs() < 1e-7);
    }
    assert!(rows.iter().all(|r| r[2] < 1e-9));
}

#[test]
fn figure_rejects_coarse_grid() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        maskgrid(&["figure", "fig1", "--grid", "1"], dir.path())
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn mask_check_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_states(dir.path(), "good.json", 8);
    let o = maskgrid(
        &[
            "mask-check",
            "--masker",
            "builtin3",
            "--states",
            &good,
            "--tol",
            "1e-9",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json_stdout(&o)["result"]["masked"], true);

    std::fs::write(
        dir.path().join("bad.json"),
        "[[[1,0],[0,0],[0,0]],[[0,0],[1,0],[0,0]]]",
    )
    .unwrap();
    let o = maskgrid(
        &["mask-check", "--masker", "builtin3", "--states", "bad.json"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json_stdout(&o)["result"]["masked"], false);
}

#[test]
fn share_audit() {
    let dir = tempfile::tempdir().unwrap();
    let o = maskgrid(&["share", "--samples", "16", "--out", "a.json"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.json")).unwrap()).unwrap();
    assert_eq!(v["result"]["codewords"], 16);
    assert_eq!(v["result"]["fidelities"].as_array().unwrap().len(), 16);
    assert!(v["result"]["leakage"]["side_a"].as_f64().unwrap() < 1e-12);
    assert_eq!(v["manifest"]["outputs"][0], "a.json");
}

#[test]
fn embed_then_search() {
    let dir = tempfile::tempdir().unwrap();
    let o = maskgrid(
        &[
            "embed",
            "--masker",
            "builtin3",
            "--samples",
            "12",
            "--constraints-out",
            "c.json",
            "--out",
            "xi.csv",
        ],
        dir.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let xi = std::fs::read_to_string(dir.path().join("xi.csv")).unwrap();
    assert_eq!(xi.lines().count(), 13);
    assert_eq!(xi.lines().next().unwrap().split(',').count(), 9);

    let o = maskgrid(
        &[
            "search",
            "--constraints",
            "c.json",
            "--max-iter",
            "400",
            "--out",
            "m.json",
            "--trace",
            "t.csv",
        ],
        dir.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("m.json")).unwrap();
    let m = Masker::from_json(&text, false).unwrap();
    assert_eq!((m.da(), m.db()), (3, 3));
    let doc: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["converged"], true);
    let trace = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert!(trace.starts_with("iteration,objective\n"));
    assert!(dir.path().join("t.csv.manifest.json").exists());
}

#[test]
fn search_from_states() {
    let dir = tempfile::tempdir().unwrap();
    let states = write_states(dir.path(), "s.json", 10);
    let o = maskgrid(
        &["search", "--states", &states, "--max-iter", "50"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let v = json_stdout(&o);
    assert_eq!(v["dA"], 3);
    assert!(v["objective"].as_f64().unwrap() >= 0.0);
    assert_eq!(maskgrid(&["search"], dir.path()).status.code(), Some(2));
}
