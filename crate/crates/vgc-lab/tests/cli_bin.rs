//! End-to-end runs of the compiled binary: exit codes, file output, and
//! byte-level determinism through the real entry point.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicU32, Ordering};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vgc-lab"))
}

static COUNTER: AtomicU32 = AtomicU32::new(0);

fn temp_path(tag: &str) -> PathBuf {
    let id = COUNTER.fetch_add(1, Ordering::Relaxed);
    std::env::temp_dir().join(format!(
        "vgc-lab-test-{}-{}-{}",
        std::process::id(),
        id,
        tag
    ))
}

fn write_config(replications: usize) -> PathBuf {
    let path = temp_path("config.json");
    fs::write(
        &path,
        format!(
            r#"{{
                "scenario": {{"kind": "selection_toy", "n": 16, "plus_count": 3,
                              "per_sample_variance": 2.0, "s_samples": 4}},
                "estimators": ["in_sample", "oracle", "cv", "vgc_cf", "stein"],
                "h_policy": {{"fixed": 0.1}},
                "folds": 4,
                "replications": {replications},
                "seed": 31415
            }}"#
        ),
    )
    .unwrap();
    path
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited")
}

#[test]
fn run_writes_csv_and_reruns_identically() {
    let config = write_config(30);
    let out_a = temp_path("a.csv");
    let out_b = temp_path("b.csv");
    let run = |path: &PathBuf, workers: &str| {
        bin()
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(path)
            .args(["--workers", workers])
            .output()
            .unwrap()
    };
    let first = run(&out_a, "1");
    assert_eq!(
        code(&first),
        0,
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    let second = run(&out_b, "3");
    assert_eq!(code(&second), 0);
    let a = fs::read(&out_a).unwrap();
    let b = fs::read(&out_b).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "worker count changed output bytes");
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("scenario,n,policy_class,theta_id,estimator,h,mean"));
    fs::remove_file(&config).ok();
    fs::remove_file(&out_a).ok();
    fs::remove_file(&out_b).ok();
}

#[test]
fn config_errors_exit_with_2() {
    // malformed JSON
    let bad = temp_path("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(temp_path("x.csv"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));

    // unknown estimator name
    let unknown = temp_path("unknown.json");
    fs::write(
        &unknown,
        r#"{"scenario": "figure1", "estimators": ["nope"], "replications": 1, "seed": 1}"#,
    )
    .unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(&unknown)
        .arg("--out")
        .arg(temp_path("y.csv"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("estimators") && stderr.contains("nope"),
        "{stderr}"
    );

    // missing seed
    let seedless = temp_path("seedless.json");
    fs::write(
        &seedless,
        r#"{"scenario": "figure1", "estimators": ["in_sample"], "replications": 1}"#,
    )
    .unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(&seedless)
        .arg("--out")
        .arg(temp_path("z.csv"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);

    fs::remove_file(&bad).ok();
    fs::remove_file(&unknown).ok();
    fs::remove_file(&seedless).ok();
}

#[test]
fn unwritable_output_exits_with_3() {
    let config = write_config(2);
    let out = bin()
        .args(["run", "--config"])
        .arg(&config)
        .args(["--out", "/nonexistent-dir/impossible/output.csv"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
    fs::remove_file(&config).ok();
}

#[test]
fn sweep_runs_and_rejects_empty_grid() {
    let config = write_config(10);
    let out_path = temp_path("sweep.csv");
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&config)
        .args(["--axis", "h", "--grid", "0.3,0.1"])
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&out_path).unwrap();
    assert!(text.lines().next().unwrap().ends_with(",axis_value"));

    let out = bin()
        .args(["sweep", "--config"])
        .arg(&config)
        .args(["--axis", "h", "--grid", ""])
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);

    let out = bin()
        .args(["sweep", "--config"])
        .arg(&config)
        .args(["--axis", "bogus", "--grid", "1"])
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);

    fs::remove_file(&config).ok();
    fs::remove_file(&out_path).ok();
}

#[test]
fn check_command_passes_and_prints_counts() {
    let out = bin()
        .args(["check", "--cases", "60", "--seed", "9"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("path_monotonicity"));
    assert!(stdout.contains("strong_duality"));
    assert!(stdout.contains("closed_form_vs_quadrature"));
    assert!(stdout.contains("overall: PASS"));
}

#[test]
fn workers_env_variable_is_honored() {
    let config = write_config(12);
    let out_a = temp_path("env-a.csv");
    let out_b = temp_path("env-b.csv");
    let run = |path: &PathBuf, env: &str| {
        bin()
            .env("VGC_LAB_WORKERS", env)
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(path)
            .output()
            .unwrap()
    };
    assert_eq!(code(&run(&out_a, "1")), 0);
    assert_eq!(code(&run(&out_b, "4")), 0);
    assert_eq!(fs::read(&out_a).unwrap(), fs::read(&out_b).unwrap());
    fs::remove_file(&config).ok();
    fs::remove_file(&out_a).ok();
    fs::remove_file(&out_b).ok();
}
