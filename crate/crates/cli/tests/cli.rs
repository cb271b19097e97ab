//! End-to-end runs of the compiled binary: argument surface, exit codes and
//! file outputs.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rscavity"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rscavity-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn table1_prints_reference_rows() {
    let out = bin().arg("table1").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("k,d_giant,d_ms,d_con,d_pure,d_sat_ref\n"));
    assert!(text.contains("3,0.5000,0.8792,1.3431,4.9108,12.801"));
    assert!(text.contains("2,1.0000,1.1625,2.0000,2.0000,2.0000"));
    assert!(text.contains("5,0.2500,0.9236,1.2635,7.0178,105.585"));
    assert!(text.contains("# manifest: {\"command\":\"table1\""));
}

#[test]
fn thresholds_range_and_formats() {
    let out = bin()
        .args(["thresholds", "--all-k", "2..6", "--format", "json"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(parsed["rows"].as_array().unwrap().len(), 5);

    let bad = bin()
        .args(["thresholds", "--format", "yaml"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn count_roundtrip_and_exit_codes() {
    let dir = temp_dir("count");
    let cnf = dir.join("f.cnf");
    std::fs::write(&cnf, "c tiny\np cnf 3 1\n1 2 3 0\n").unwrap();
    let out = bin().args(["count", "--cnf"]).arg(&cnf).output().unwrap();
    assert!(out.status.success());
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(parsed["count"].as_str().unwrap(), "7");
    assert_eq!(parsed["log_count"].as_f64().unwrap(), 7f64.ln());

    // Missing file: input error.
    let missing = bin()
        .args(["count", "--cnf", "/nonexistent/x.cnf"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));

    // Malformed: repeated variable in strict mode.
    let bad = dir.join("bad.cnf");
    std::fs::write(&bad, "p cnf 2 1\n1 1 2 0\n").unwrap();
    let out = bin().args(["count", "--cnf"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // A 40-variable chain is one component beyond the default cap: exit 3.
    let wide = dir.join("wide.cnf");
    let mut chain = String::from("p cnf 40 38\n");
    for i in 1..39 {
        chain.push_str(&format!("{} {} {} 0\n", i, i + 1, i + 2));
    }
    std::fs::write(&wide, chain).unwrap();
    let out = bin().args(["count", "--cnf"]).arg(&wide).output().unwrap();
    assert_eq!(out.status.code(), Some(3));

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn popdyn_dump_then_bethe() {
    let dir = temp_dir("popdyn");
    let pop_path = dir.join("pop.f64");
    let out = bin()
        .args([
            "--out",
            pop_path.to_str().unwrap(),
            "popdyn",
            "--d",
            "1.0",
            "--pop",
            "5000",
            "--iters",
            "5",
            "--seed",
            "3",
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let raw = std::fs::read(&pop_path).unwrap();
    assert_eq!(raw.len(), 5000 * 8);
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(pop_path.with_extension("json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["pop"].as_u64(), Some(5000));
    assert_eq!(sidecar["w1_trace"].as_array().unwrap().len(), 5);

    let out = bin()
        .args([
            "bethe",
            "--pop",
            pop_path.to_str().unwrap(),
            "--d",
            "1.0",
            "--mc",
            "20000",
            "--seed",
            "5",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let value = parsed["value"].as_f64().unwrap();
    // Crude sanity: between the k=3 moment bounds at d=1.
    assert!(value > 0.62 && value < 0.66, "bethe {value}");

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn pulp_run_reports_trace() {
    let dir = temp_dir("pulp");
    let cnf = dir.join("f.cnf");
    std::fs::write(&cnf, "p cnf 3 1\n1 2 3 0\n").unwrap();
    let out = bin()
        .args(["pulp", "run", "--cnf"])
        .arg(&cnf)
        .args(["--assume", "-1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(parsed["outcome"].as_str(), Some("closure"));
    assert_eq!(
        parsed["closure"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_i64().unwrap())
            .collect::<Vec<_>>(),
        vec![-1, 2]
    );
    // A contradictory assumption set.
    let out = bin()
        .args(["pulp", "run", "--cnf"])
        .arg(&cnf)
        .args(["--assume", "-1,-2,-3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(parsed["outcome"].as_str(), Some("contradiction"));
    assert_eq!(parsed["closure_size"].as_u64(), Some(6));

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn figure1_env_threads_and_out_file() {
    let dir = temp_dir("figure1");
    let csv = dir.join("fig.csv");
    let out = bin()
        .env("RSCAVITY_THREADS", "1")
        .args([
            "--out",
            csv.to_str().unwrap(),
            "figure1",
            "--d-max",
            "0.4",
            "--step",
            "0.2",
            "--pop",
            "4000",
            "--iters",
            "5",
            "--mc",
            "4000",
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("d,bethe,bethe_se,first_moment,second_moment\n"));
    assert_eq!(text.lines().count(), 1 + 3 + 1); // header + rows + manifest
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn increment_and_tree_marginal_smoke() {
    let out = bin()
        .args(["increment", "--n", "10", "--samples", "20", "--d", "0.5"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(parsed["mean"].as_f64().unwrap().is_finite());

    let out = bin()
        .args([
            "tree", "marginal", "--d", "1.0", "--depth", "2", "--seed", "4",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(parsed["abs_diff"].as_f64().unwrap() < 1e-10);
}
