use std::path::Path;
use std::process::Command;

fn opplab(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_opplab")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL_E4: &str = "seed = 3\nindex_n = 2\nindex_q_max = 4\ncoset_n = 2\ncoset_q_max = 4\ntau_n = 2\ntau_q_max = 3\norbit_instances = 2\norbit_n = 2\norbit_q_max = 3\norbit_box = 4\n";

#[test]
fn passing_run_exits_zero_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_E4);
    let out = dir.path().join("out");
    let (code, stdout) = opplab(&["e4", "--config", &cfg, "--out", out.to_str().unwrap(), "--workers", "1"]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("PASS"));
    let report = std::fs::read_to_string(out.join("e4_report.json")).unwrap();
    assert!(report.contains("\"index_q_max\": \"4\""));
    assert!(out.join("e4_index.csv").exists());
}

#[test]
fn failing_check_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    // A negative tolerance cannot be met.
    let cfg = write_config(dir.path(), &format!("{SMALL_E4}zeta_rel_tol = -1\n"));
    let out = dir.path().join("out");
    let (code, stdout) = opplab(&["E4", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2, "{stdout}");
    assert!(stdout.contains("FAIL"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let no_seed = write_config(dir.path(), "index_n = 2\n");
    let out = dir.path().join("out");
    assert_eq!(opplab(&["E4", "--config", &no_seed, "--out", out.to_str().unwrap()]).0, 1);
    assert_eq!(opplab(&["E9", "--config", &no_seed]).0, 1);
    assert_eq!(opplab(&["E4", "--config", "/nonexistent/x.cfg"]).0, 1);
    assert_eq!(opplab(&["E4"]).0, 1);
}

#[test]
fn seed_flag_supplies_a_missing_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL_E4.replace("seed = 3\n", ""));
    let out = dir.path().join("out");
    let (code, _) = opplab(&["E4", "--config", &cfg, "--seed", "9", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let report = std::fs::read_to_string(out.join("e4_report.json")).unwrap();
    assert!(report.contains("\"seed\": \"9\""));
}
