use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const STUDY: &str = r#"axis = "spatial"
ladder = [2, 4, 8]
covariance = "inverse_power"
exponent = 0.5005
fixed = 64
samples = 16
seed = 5

[reference]
modes = 16
"#;

fn spde(args: &[&str], workers_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_spde"));
    cmd.args(args).env_remove("SPDE_WORKERS");
    if let Some(w) = workers_env {
        cmd.env("SPDE_WORKERS", w);
    }
    cmd.output().unwrap()
}

fn study(dir: &Path) -> String {
    let path = dir.join("study.toml");
    fs::write(&path, STUDY).unwrap();
    path.to_str().unwrap().to_string()
}

fn run_into(config: &str, out: &Path, extra: &[&str], workers_env: Option<&str>) -> Output {
    let mut args = vec!["run", "--config", config, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    spde(&args, workers_env)
}

#[test]
fn repeated_runs_write_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = study(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run_into(&config, &a, &["--workers", "1"], None).status.success());
    assert!(run_into(&config, &b, &["--workers", "3"], None).status.success());
    assert_eq!(
        fs::read(a.join("rates.csv")).unwrap(),
        fs::read(b.join("rates.csv")).unwrap()
    );
}

#[test]
fn replay_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let config = study(dir.path());
    let out = dir.path().join("out");
    let first = run_into(&config, &out, &["--plot"], None);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    assert!(out.join("rates.svg").exists());

    let manifest = out.join("manifest.toml");
    let manifest = manifest.to_str().unwrap();
    assert!(spde(&["replay", "--manifest", manifest], None).status.success());

    let csv = out.join("rates.csv");
    let text = fs::read_to_string(&csv).unwrap();
    let line = text.lines().nth(1).unwrap();
    let tampered_line = line.replacen("spatial,2,", "spatial,3,", 1);
    fs::write(&csv, text.replacen(line, &tampered_line, 1)).unwrap();
    let replayed = spde(&["replay", "--manifest", manifest], None);
    assert!(!replayed.status.success());
}

#[test]
fn second_run_needs_force() {
    let dir = tempfile::tempdir().unwrap();
    let config = study(dir.path());
    let out = dir.path().join("out");
    assert!(run_into(&config, &out, &[], None).status.success());
    let again = run_into(&config, &out, &[], None);
    assert!(!again.status.success());
    assert!(String::from_utf8_lossy(&again.stderr).contains("--force"));
    assert!(run_into(&config, &out, &["--force", "--seed", "6"], None)
        .status
        .success());
    assert!(fs::read_to_string(out.join("manifest.toml"))
        .unwrap()
        .contains("seed = 6"));
}

#[test]
fn worker_flag_beats_environment() {
    let dir = tempfile::tempdir().unwrap();
    let config = study(dir.path());
    let env_only = dir.path().join("env");
    assert!(run_into(&config, &env_only, &[], Some("2")).status.success());
    assert!(fs::read_to_string(env_only.join("manifest.toml"))
        .unwrap()
        .contains("workers = 2"));

    let both = dir.path().join("both");
    assert!(run_into(&config, &both, &["--workers", "3"], Some("2"))
        .status
        .success());
    assert!(fs::read_to_string(both.join("manifest.toml"))
        .unwrap()
        .contains("workers = 3"));

    let bad_env = dir.path().join("bad");
    assert!(!run_into(&config, &bad_env, &[], Some("many")).status.success());
}

#[test]
fn bad_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(
        &path,
        "axis = \"spatial\"\nladder = [4]\ncovariance = \"inverse_power\"\n",
    )
    .unwrap();
    let out = run_into(path.to_str().unwrap(), &dir.path().join("out"), &[], None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("exponent"));
}

#[test]
fn verify_passes() {
    let out = spde(&["verify"], None);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.lines().all(|l| l.starts_with("PASS")));
}
