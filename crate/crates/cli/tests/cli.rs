use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_eigtest"))
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("eigtest-cli-{tag}-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Deterministic dataset with a dominant first coordinate, no RNG needed.
fn write_spiked_data(path: &Path, n: usize) {
    let mut text = String::new();
    for i in 0..n {
        let a = if i % 2 == 0 { 3.0 } else { -3.0 };
        let b = if i % 4 < 2 { 1.0 } else { -1.0 };
        let c = if i % 8 < 4 { 0.3 } else { -0.3 };
        // rotate the noise pattern so the covariance is near diag(9, 1, 0.09)
        let phase = (i as f64 * 0.7).sin() * 0.05;
        text.push_str(&format!("{},{},{}\n", a + phase, b - phase, c + 0.5 * phase));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn test1_matching_basis_accepts() {
    let dir = workdir("t1");
    let data = dir.join("data.csv");
    write_spiked_data(&data, 200);
    let proj = dir.join("e1.csv");
    fs::write(&proj, "1\n0\n0\n").unwrap();

    let out = bin()
        .args(["test1", data.to_str().unwrap(), proj.to_str().unwrap()])
        .args(["--m", "1", "--draws", "200", "--seed", "7"])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["reject"], serde_json::json!(false));
    assert!(report["p_value"].as_f64().unwrap() > 0.5);
    assert_eq!(report["resampler"], serde_json::json!("wishart"));
    assert_eq!(report["s1"], serde_json::json!(1));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn same_seed_byte_identical_output() {
    let dir = workdir("det");
    let data = dir.join("data.csv");
    write_spiked_data(&data, 120);
    let proj = dir.join("e1.csv");
    fs::write(&proj, "1\n0\n0\n").unwrap();

    let run = || {
        let out = bin()
            .args(["test1", data.to_str().unwrap(), proj.to_str().unwrap()])
            .args(["--m", "1", "--draws", "100", "--seed", "42", "--resampler", "bootstrap"])
            .output()
            .unwrap();
        assert!(out.status.success());
        stdout(&out)
    };
    assert_eq!(run(), run());
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn malformed_row_exits_1_naming_line() {
    let dir = workdir("bad");
    let data = dir.join("data.csv");
    fs::write(&data, "1,2\n3,oops\n").unwrap();
    let proj = dir.join("p.csv");
    fs::write(&proj, "1\n0\n").unwrap();

    let out = bin()
        .args(["test1", data.to_str().unwrap(), proj.to_str().unwrap(), "--m", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("E_PARSE"), "stderr: {err}");
    assert!(err.contains("line 2"), "stderr: {err}");
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn usage_error_exits_1() {
    let out = bin().args(["test1", "nope.csv"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_selection_exits_1() {
    let dir = workdir("sel");
    let data = dir.join("data.csv");
    write_spiked_data(&data, 50);
    let proj = dir.join("p.csv");
    fs::write(&proj, "1\n0\n0\n").unwrap();
    let out = bin()
        .args(["test1", data.to_str().unwrap(), proj.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("E_INVALID_INPUT"));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn indices_flag_and_output_file() {
    let dir = workdir("idx");
    let data = dir.join("data.csv");
    write_spiked_data(&data, 200);
    let proj = dir.join("p.csv");
    fs::write(&proj, "1\n0\n0\n").unwrap();
    let report_path = dir.join("report.json");

    let out = bin()
        .args(["test1", data.to_str().unwrap(), proj.to_str().unwrap()])
        .args(["--indices", "1..1", "--draws", "100", "--seed", "3"])
        .args(["--output", report_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(stdout(&out).is_empty());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["m"], serde_json::json!(1));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn csv_format_flattens_report() {
    let dir = workdir("csv");
    let data = dir.join("data.csv");
    write_spiked_data(&data, 100);
    let proj = dir.join("p.csv");
    fs::write(&proj, "1\n0\n0\n").unwrap();

    let out = bin()
        .args(["test1", data.to_str().unwrap(), proj.to_str().unwrap()])
        .args(["--m", "1", "--draws", "50", "--format", "csv"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].split(',').any(|h| h == "p_value"));
    assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn test2_same_data_accepts() {
    let dir = workdir("t2");
    let data = dir.join("data.csv");
    write_spiked_data(&data, 400);
    let out = bin()
        .args(["test2", data.to_str().unwrap(), data.to_str().unwrap()])
        .args(["--m", "1", "--draws", "200", "--seed", "5"])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["statistic"], serde_json::json!(0.0));
    assert_eq!(report["reject"], serde_json::json!(false));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn cs_contains_its_center_projector() {
    let dir = workdir("cs");
    let data = dir.join("data.csv");
    write_spiked_data(&data, 400);
    let e1 = dir.join("e1.csv");
    fs::write(&e1, "1\n0\n0\n").unwrap();

    let out = bin()
        .args(["cs", data.to_str().unwrap()])
        .args(["--m", "1", "--draws", "200", "--seed", "9"])
        .args(["--candidate", e1.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(report["threshold"].as_f64().unwrap() > 0.0);
    // e1 is essentially the sample eigenvector for this dataset
    assert_eq!(report["contains"], serde_json::json!(true));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn diag_spectrum_hand_values() {
    let out = bin()
        .args(["diag", "--spectrum", "3,1", "--m", "1"])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((report["relr_1"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!((report["eff_dim_rre"].as_f64().unwrap() - 0.75).abs() < 1e-12);
    assert!((report["kappa_ratio"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn simulate_emits_csv_schema_and_sidecar() {
    let dir = workdir("sim");
    let out_path = dir.join("power.csv");
    let out = bin()
        .args(["simulate", "--regime", "spiked", "--n", "50", "--d", "4"])
        .args(["--reps", "2", "--null-reps", "2", "--draws", "20"])
        .args(["--angles", "0,0.4", "--seed", "1", "--format", "csv"])
        .args(["--output", out_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = fs::read_to_string(&out_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scenario,regime,dist,n,d,m,angle,method,resampler,reps,rejection_rate,mean_p,seed"
    );
    assert!(lines.clone().count() >= 2);
    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("power.json")).unwrap()).unwrap();
    assert_eq!(sidecar["n"], serde_json::json!(50));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn thread_env_var_respected() {
    let out = bin()
        .env("EIGTEST_THREADS", "2")
        .args(["diag", "--spectrum", "3,1", "--m", "1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let bad = bin()
        .env("EIGTEST_THREADS", "many")
        .args(["diag", "--spectrum", "3,1", "--m", "1"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}
