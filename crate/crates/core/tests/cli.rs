//! End-to-end tests of the `patchpop` binary: exit codes, file outputs, and
//! stdout/stderr contracts.

use std::path::Path;
use std::process::Command;

const TWO_PATCH: &str = r#"
[domain]
half_length = 1.0
interfaces = [0.0]

[kernel]
delta = 0.19
lambda_bound = 0.6

[[kernel.pieces]]
from_patch = 0
to_patch = 0
form = "constant"
c = 0.6

[[kernel.pieces]]
from_patch = 1
to_patch = 0
form = "constant"
c = 0.2

[[kernel.pieces]]
from_patch = 0
to_patch = 1
form = "constant"
c = 0.2

[[kernel.pieces]]
from_patch = 1
to_patch = 1
form = "constant"
c = 0.6

[growth]
variant = "beverton_holt"
r0 = 2.0
b = 1.0
"#;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn patchpop(args: &[&str]) -> Run {
    let output = Command::new(env!("CARGO_BIN_EXE_patchpop"))
        .args(args)
        .output()
        .expect("binary must spawn");
    Run {
        code: output.status.code().expect("no exit code"),
        stdout: String::from_utf8(output.stdout).expect("stdout must be utf-8"),
        stderr: String::from_utf8(output.stderr).expect("stderr must be utf-8"),
    }
}

fn write_scenario(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn simulate_writes_reports_and_summarizes_on_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(dir.path(), TWO_PATCH);
    let out = dir.path().join("out");
    let run = patchpop(&["simulate", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    assert!(run.stdout.contains("lambda0 = 1.6 (persistence)"), "{}", run.stdout);
    assert!(run.stdout.contains("stationary in ["));
    for file in ["summary.json", "stationary_profile.csv", "norm_history.csv"] {
        assert!(out.join(file).is_file(), "missing {file}");
    }
    let summary = std::fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("\"command\": \"simulate\""));
    assert!(summary.contains("\"regime\": \"persistence\""));
    let profile = std::fs::read_to_string(out.join("stationary_profile.csv")).unwrap();
    assert!(profile.starts_with("x,w,patch_index\n"));
    // 2 patches x 4 panels x 4 nodes = 32 data rows plus the header.
    assert_eq!(profile.lines().count(), 33);
}

#[test]
fn quiet_flag_silences_stdout_but_still_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(dir.path(), TWO_PATCH);
    let out = dir.path().join("out");
    let run = patchpop(&[
        "simulate",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(run.code, 0);
    assert!(run.stdout.is_empty(), "stdout should be empty: {}", run.stdout);
    assert!(out.join("summary.json").is_file());
}

#[test]
fn output_directory_from_config_is_used_when_no_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("from_config");
    let text = format!(
        "{TWO_PATCH}\n[output]\ndirectory = \"{}\"\n",
        out.to_str().unwrap()
    );
    let config = write_scenario(dir.path(), &text);
    let run = patchpop(&["simulate", "--config", &config, "--quiet"]);
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    assert!(out.join("summary.json").is_file());
}

#[test]
fn json_only_format_suppresses_the_csv_tables() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{TWO_PATCH}\n[output]\nformats = [\"json\"]\n");
    let config = write_scenario(dir.path(), &text);
    let out = dir.path().join("out");
    let run = patchpop(&[
        "simulate",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(run.code, 0);
    assert!(out.join("summary.json").is_file());
    assert!(!out.join("stationary_profile.csv").exists());
    assert!(!out.join("norm_history.csv").exists());
}

#[test]
fn full_history_adds_the_trajectory_table() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{TWO_PATCH}\n[output]\nfull_history = true\n");
    let config = write_scenario(dir.path(), &text);
    let out = dir.path().join("out");
    let run = patchpop(&[
        "simulate",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(run.code, 0);
    let trajectory = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(trajectory.starts_with("generation,node_index,x,value\n"));
    // The first recorded state is the constant super-solution level 4.8.
    assert!(trajectory.lines().nth(1).unwrap().ends_with(",4.8"));
}

#[test]
fn eigen_writes_the_eigenfunction_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(dir.path(), TWO_PATCH);
    let out = dir.path().join("out");
    let run = patchpop(&["eigen", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(run.code, 0);
    assert!(run.stdout.contains("lambda0 = 1.6"));
    assert!(run.stdout.contains("spectral lower bound"));
    let table = std::fs::read_to_string(out.join("eigenfunction.csv")).unwrap();
    assert!(table.starts_with("x,phi0,patch_index\n"));
    // The flat eigenfunction normalizes to exactly 1 at every node.
    assert!(table.lines().skip(1).all(|line| line.split(',').nth(1) == Some("1")));
}

#[test]
fn threshold_needs_a_sweep_section() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(dir.path(), TWO_PATCH);
    let run = patchpop(&["threshold", "--config", &config]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("[sweep]"), "{}", run.stderr);
}

#[test]
fn threshold_reports_the_crossing_and_phase_table() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{TWO_PATCH}\n[sweep]\nparameter = \"r0\"\nlo = 0.5\nhi = 2.0\nsamples = 7\n"
    );
    let config = write_scenario(dir.path(), &text);
    let out = dir.path().join("out");
    let run = patchpop(&[
        "threshold",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    assert!(run.stdout.contains("critical r0 = 1.25"), "{}", run.stdout);
    assert!(run.stdout.contains("r0 crossing at 1.25"));
    let table = std::fs::read_to_string(out.join("phase_table.csv")).unwrap();
    assert!(table.starts_with("parameter,lambda0,regime\n"));
    assert!(table.contains("0.5,0.4,extinction"));
    assert!(table.contains("2,1.6,persistence"));
    assert!(table.contains("# crossing: critical=1.25"));
}

#[test]
fn unknown_keys_are_named_with_exit_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = TWO_PATCH.replace("[growth]", "[growth]\nmisspelled_option = 3\n");
    let config = write_scenario(dir.path(), &text);
    let run = patchpop(&["simulate", "--config", &config]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("misspelled_option"), "{}", run.stderr);
}

#[test]
fn every_config_problem_is_reported_in_one_pass() {
    let dir = tempfile::tempdir().unwrap();
    let text = TWO_PATCH
        .replace("delta = 0.19", "delta = -2.0")
        .replace("r0 = 2.0", "r0 = -1.0");
    let config = write_scenario(dir.path(), &text);
    let run = patchpop(&["simulate", "--config", &config]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("kernel.delta"), "{}", run.stderr);
    assert!(run.stderr.contains("growth.r0"), "{}", run.stderr);
}

#[test]
fn missing_config_file_is_exit_code_two() {
    let run = patchpop(&["simulate", "--config", "/nonexistent/nowhere.toml"]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("cannot read"));
}

#[test]
fn exhausted_eigen_budget_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{TWO_PATCH}\n[tolerances]\nmax_eigen_iterations = 1\n");
    let config = write_scenario(dir.path(), &text);
    let run = patchpop(&["eigen", "--config", &config]);
    assert_eq!(run.code, 3);
    assert!(run.stderr.contains("no convergence"), "{}", run.stderr);
}

#[test]
fn verify_failure_is_exit_code_four_and_still_reports() {
    let dir = tempfile::tempdir().unwrap();
    // Over-declared lower envelope: the off-diagonal blocks sit at 0.2, so
    // claiming delta = 0.25 must be refuted by the sampled hypothesis check.
    let text = TWO_PATCH.replace("delta = 0.19", "delta = 0.25");
    let config = write_scenario(dir.path(), &text);
    let out = dir.path().join("out");
    let run = patchpop(&["verify", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(run.code, 4, "stderr: {}", run.stderr);
    assert!(run.stdout.contains("[FAIL] hypothesis:kernel_above_delta"), "{}", run.stdout);
    assert!(run.stderr.contains("verification failed"));
    let summary = std::fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("\"passed\": false"));
}

#[test]
fn verify_passes_on_a_sound_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(dir.path(), TWO_PATCH);
    let out = dir.path().join("out");
    let run = patchpop(&["verify", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    assert!(run.stdout.contains("verification passed"));
    assert!(!run.stdout.contains("[FAIL]"));
    assert!(run.stdout.contains("[PASS] uniqueness_probe"));
}
