//! End-to-end checks of the command-line interface: exit-code contract,
//! artifact layout, and config/builtin equivalence.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_proxflow")
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf()
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn run_example1_succeeds_and_writes_artifacts() {
    let out = tmp_dir("cli_example1");
    let output = Command::new(bin())
        .args(["run-example1", "--output-dir"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success());
    for i in 1..=5 {
        assert!(out.join(format!("traj_{i}.csv")).exists());
        assert!(out.join(format!("traj_{i}_disturbed.csv")).exists());
    }
    assert!(out.join("error_curves.csv").exists());
    assert!(out.join("report.txt").exists());
    assert!(out.join("plot.py").exists());
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("all_settled=true"));
    assert!(report.contains("[assumptions]"));
    assert!(report.contains("[certificate]"));
}

#[test]
fn shipped_config_reproduces_builtin_run() {
    let out_builtin = tmp_dir("cli_builtin");
    let out_config = tmp_dir("cli_config");
    let config = workspace_root().join("configs/example1.toml");
    assert!(config.exists(), "shipped config missing at {config:?}");

    let output = Command::new(bin())
        .args(["run-example1", "--output-dir"])
        .arg(&out_builtin)
        .output()
        .unwrap();
    assert!(output.status.success());
    let output = Command::new(bin())
        .arg("run")
        .arg(&config)
        .arg("--output-dir")
        .arg(&out_config)
        .output()
        .unwrap();
    assert!(output.status.success());

    let mut names: Vec<String> = (1..=5)
        .flat_map(|i| [format!("traj_{i}.csv"), format!("traj_{i}_disturbed.csv")])
        .collect();
    names.push("error_curves.csv".into());
    for name in names {
        let a = std::fs::read(out_builtin.join(&name)).unwrap();
        let b = std::fs::read(out_config.join(&name)).unwrap();
        assert_eq!(a, b, "{name} differs between builtin and config run");
    }
}

#[test]
fn invalid_rho_exits_with_config_error() {
    let dir = tmp_dir("cli_badrho");
    let config = dir.join("bad.toml");
    let text = std::fs::read_to_string(workspace_root().join("configs/example1.toml"))
        .unwrap()
        .replace("rho1 = 0.5", "rho1 = 1.5");
    std::fs::write(&config, text).unwrap();
    let output = Command::new(bin())
        .arg("run")
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("rho1"), "stderr: {stderr}");
}

#[test]
fn unknown_key_exits_with_config_error() {
    let dir = tmp_dir("cli_badkey");
    let config = dir.join("bad.toml");
    let text = std::fs::read_to_string(workspace_root().join("configs/example1.toml"))
        .unwrap()
        .replace("seed = 42", "seed = 42\nmispelled_option = 1");
    std::fs::write(&config, text).unwrap();
    let output = Command::new(bin())
        .arg("run")
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn missing_config_file_exits_with_config_error() {
    let output = Command::new(bin())
        .args(["run", "/nonexistent/config.toml"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

fn linear_sym_config(dir: &Path) -> PathBuf {
    let config = dir.join("linear_sym.toml");
    std::fs::write(
        &config,
        r#"
schema = 1
seed = 5
initial_conditions = [[5.0, -1.0, 0.0, 2.0, 8.0]]

[problem]
preset = "linear-sym"

[model]
variant = "pdm"
rho1 = 0.5
rho2 = 1.6
gamma1 = { kind = "constant", beta = 50.0 }
gamma2 = { kind = "constant", beta = 50.0 }
gamma3 = { kind = "constant", beta = 20.0 }

[integrator]
dt = 1e-4
t_end = 5.0
"#,
    )
    .unwrap();
    config
}

#[test]
fn certify_reports_feasible_bound_for_certified_regime() {
    let dir = tmp_dir("cli_certify");
    let config = linear_sym_config(&dir);
    let output = Command::new(bin())
        .arg("certify")
        .arg(&config)
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("feasible=true"), "stdout: {stdout}");
    assert!(stdout.contains("bound_t="), "stdout: {stdout}");
    assert!(stdout.contains("kind=constant_gain"), "stdout: {stdout}");
}

#[test]
fn certify_refuses_outside_contraction_regime() {
    let dir = tmp_dir("cli_certify_refused");
    let config = workspace_root().join("configs/example1.toml");
    let _ = dir;
    let output = Command::new(bin())
        .arg("certify")
        .arg(&config)
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("refused="), "stdout: {stdout}");
}

#[test]
fn audit_prints_probe_estimates_and_flags() {
    let dir = tmp_dir("cli_audit");
    let config = linear_sym_config(&dir);
    let output = Command::new(bin())
        .args(["audit"])
        .arg(&config)
        .args(["--samples", "2000"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("zeta_estimate="), "stdout: {stdout}");
    assert!(stdout.contains("a3_satisfied=true"), "stdout: {stdout}");
    // Constants are supplied and a solution is known: the contraction audit runs.
    assert!(stdout.contains("contraction_defect_1="), "stdout: {stdout}");
}

#[test]
fn run_fails_with_exit_one_when_not_settling() {
    // A horizon far too short to settle: clean exit code 1, artifacts still written.
    let dir = tmp_dir("cli_nonsettle");
    let config = dir.join("short.toml");
    let text = std::fs::read_to_string(workspace_root().join("configs/example1.toml"))
        .unwrap()
        .replace("t_end = 2.0", "t_end = 1e-4");
    std::fs::write(&config, text).unwrap();
    let out = dir.join("out");
    let output = Command::new(bin())
        .arg("run")
        .arg(&config)
        .arg("--output-dir")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(out.join("report.txt").exists());
}

#[test]
fn t_end_flag_overrides_config() {
    // The same short horizon imposed through the CLI flag instead of the file.
    let out = tmp_dir("cli_override");
    let config = workspace_root().join("configs/example1.toml");
    let output = Command::new(bin())
        .arg("run")
        .arg(&config)
        .arg("--output-dir")
        .arg(&out)
        .args(["--t-end", "1e-4", "--dt", "5e-5"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("all_settled=false"), "report: {report}");
}
