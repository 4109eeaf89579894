//! End-to-end tests of the `jumplat` binary: exit codes, artifact layout,
//! and determinism of the numeric CSV outputs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_jumplat"))
}

fn small_config() -> String {
    r#"
version = 1

[kernel]
family = "cauchy"
dim = 1

[lattice]
n = 4
window_radius = 4.0

[simulation]
horizon = 0.5
n_paths = 50
seed = 7
x0 = [0.0]
marginal_times = [0.5]

[conditions]
r_grid = [1.0, 2.0]
"#
    .to_string()
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

fn run_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn print_defaults_round_trips() {
    let out = bin().arg("--print-defaults").output().unwrap();
    run_ok(&out);
    let text = String::from_utf8(out.stdout).unwrap();
    let cfg: jumplat::RunConfig = toml::from_str(&text).unwrap();
    cfg.validate().unwrap();
}

#[test]
fn discretize_writes_matrix_with_matching_header() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &small_config());
    let art = dir.path().join("art");
    let out = bin()
        .args(["discretize", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&art)
        .output()
        .unwrap();
    run_ok(&out);
    let matrix = fs::read_to_string(art.join("matrix_n4.cm")).unwrap();
    let head: Vec<&str> = matrix.lines().take(5).collect();
    assert_eq!(head[0], "jumplat-cm 1");
    assert!(head.contains(&"n 4"));
    assert!(head.contains(&"dim 1"));
    assert!(head.contains(&"window 4"));
    assert!(head.iter().any(|l| l.starts_with("scheme dirichlet 0.99")));
    assert!(art.join("discretize_summary.toml").exists());
    assert!(art.join("manifest.json").exists());

    // The emitted resolved config parses back into an equivalent RunConfig.
    let text = fs::read_to_string(art.join("resolved_config.toml")).unwrap();
    let parsed: jumplat::RunConfig = toml::from_str(&text).unwrap();
    parsed.validate().unwrap();
    assert_eq!(parsed.lattice.n, 4);
    assert_eq!(parsed.simulation.seed, 7);
}

#[test]
fn invalid_p_exits_2_naming_the_field() {
    let dir = TempDir::new().unwrap();
    let body = small_config().replace("[lattice]", "[scheme]\nkind = \"dirichlet\"\np = 1.5\n\n[lattice]");
    let cfg = write_config(dir.path(), &body);
    let out = bin()
        .args(["discretize", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("art"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains('p'), "stderr: {stderr}");
}

#[test]
fn sweep_list_yields_suffixed_matrix_files() {
    let dir = TempDir::new().unwrap();
    let body = small_config().replace("n = 4\n", "n = 4\nn_list = [2, 4]\n");
    let cfg = write_config(dir.path(), &body);
    let art = dir.path().join("art");
    let out = bin()
        .args(["discretize", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&art)
        .output()
        .unwrap();
    run_ok(&out);
    assert!(art.join("matrix_n2.cm").exists());
    assert!(art.join("matrix_n4.cm").exists());
}

fn discretize_then(dir: &TempDir, body: &str) -> (std::path::PathBuf, std::path::PathBuf) {
    let cfg = write_config(dir.path(), body);
    let art = dir.path().join("art");
    let out = bin()
        .args(["discretize", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&art)
        .output()
        .unwrap();
    run_ok(&out);
    (cfg, art)
}

#[test]
fn simulate_is_deterministic_and_row_complete() {
    let dir = TempDir::new().unwrap();
    let (cfg, art) = discretize_then(&dir, &small_config());
    let matrix = art.join("matrix_n4.cm");
    let simulate = |out_dir: &Path| {
        let out = bin()
            .args(["simulate", "--config"])
            .arg(&cfg)
            .arg("--matrix")
            .arg(&matrix)
            .arg("--out")
            .arg(out_dir)
            .output()
            .unwrap();
        run_ok(&out);
        fs::read(out_dir.join("marginal_0.csv")).unwrap()
    };
    let first = simulate(&dir.path().join("run1"));
    let second = simulate(&dir.path().join("run2"));
    assert_eq!(first, second, "identical config + seed must reproduce the CSV");
    let text = String::from_utf8(first).unwrap();
    // Header plus one row per path.
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn simulate_rejects_zero_paths() {
    let dir = TempDir::new().unwrap();
    let (_, art) = discretize_then(&dir, &small_config());
    let body = small_config().replace("n_paths = 50", "n_paths = 0");
    let cfg = write_config(dir.path(), &body);
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--matrix")
        .arg(art.join("matrix_n4.cm"))
        .arg("--out")
        .arg(dir.path().join("art2"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_reports_zero_asymmetry_for_symmetric_kernel() {
    let dir = TempDir::new().unwrap();
    let (cfg, art) = discretize_then(&dir, &small_config());
    let out = bin()
        .args(["check", "--config"])
        .arg(&cfg)
        .arg("--matrix")
        .arg(art.join("matrix_n4.cm"))
        .arg("--out")
        .arg(&art)
        .output()
        .unwrap();
    run_ok(&out);
    let csv = fs::read_to_string(art.join("check_C2-C4.csv")).unwrap();
    let row = csv
        .lines()
        .find(|l| l.contains("C2.alpha0_n"))
        .expect("alpha0_n row present");
    let value: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
    assert!(value.abs() < 1e-12, "symmetric kernel must have alpha0_n = 0, got {value}");
}

#[test]
fn check_without_matrix_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &small_config());
    let out = bin()
        .args(["check", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("art"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("matrix"), "stderr: {stderr}");
}

#[test]
fn seed_flag_overrides_config() {
    let dir = TempDir::new().unwrap();
    let (cfg, art) = discretize_then(&dir, &small_config());
    let matrix = art.join("matrix_n4.cm");
    let simulate = |out_dir: &Path, seed: Option<&str>| {
        let mut c = bin();
        c.args(["simulate", "--config"])
            .arg(&cfg)
            .arg("--matrix")
            .arg(&matrix)
            .arg("--out")
            .arg(out_dir);
        if let Some(s) = seed {
            c.args(["--seed", s]);
        }
        let out = c.output().unwrap();
        run_ok(&out);
        fs::read(out_dir.join("marginal_0.csv")).unwrap()
    };
    let base = simulate(&dir.path().join("a"), None);
    let reseeded = simulate(&dir.path().join("b"), Some("99"));
    assert_ne!(base, reseeded, "--seed must change the sample");
    let again = simulate(&dir.path().join("c"), Some("99"));
    assert_eq!(reseeded, again);
}
