use std::path::Path;
use std::process::{Command, Output};

use wassreg::experiments::Problem;
use wassreg::io::{read_conjecture, read_dataset, read_records, read_step_fn, read_tabulated};

fn wassreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wassreg"))
        .args(args)
        .env_remove("WASSREG_WORKERS")
        .output()
        .expect("binary runs")
}

fn lines(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count()
}

#[test]
fn usage_errors_exit_two() {
    for args in [&["--bogus"][..], &["frobnicate"], &[], &["conjecture", "--reps", "many"]] {
        let out = wassreg(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(wassreg(&["--help"]).status.code(), Some(0));
    assert_eq!(wassreg(&["--version"]).status.code(), Some(0));
    // in-process entry point agrees
    assert_eq!(wassreg::cli::run(["wassreg", "--bogus"]), 2);
    assert_eq!(wassreg::cli::run(["wassreg", "rates"]), 2);
}

#[test]
fn conjecture_defaults_give_thirty_by_eight_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = wassreg(&["conjecture", "--c", "20", "--reps", "500", "--seed", "1", "--out", out]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let table = dir.path().join("conjecture.csv");
    assert_eq!(lines(&table), 1 + 30 * 8);
    let svgs = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "svg"))
        .count();
    assert_eq!(svgs, 8);
    assert!(read_conjecture(&table).unwrap().iter().all(|r| r.mean > 0.0));
}

#[test]
fn conjecture_is_byte_identical_across_runs_and_workers() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |dir: &Path, workers: &str| {
        let r = wassreg(&[
            "conjecture", "--n-max", "2000", "--grid-points", "5", "--reps", "20", "--big-c", "1,1000",
            "--workers", workers, "--out", dir.to_str().unwrap(),
        ]);
        assert_eq!(r.status.code(), Some(0));
    };
    args(a.path(), "1");
    args(b.path(), "4");
    for name in ["conjecture.csv", "conjecture_C1.svg", "conjecture_C1000.svg"] {
        assert_eq!(
            std::fs::read(a.path().join(name)).unwrap(),
            std::fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
    assert_eq!(lines(&a.path().join("conjecture.csv")), 1 + 5 * 2);
}

#[test]
fn rates_writes_one_record_per_n_rep_and_kind() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = || {
        wassreg(&[
            "rates", "--problem", "unlinked", "--n-grid", "100,300", "--sigma-rule", "power:0.1,0.6",
            "--reps", "3", "--grid-points", "4096", "--out", out,
        ])
    };
    let res = run();
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let path = dir.path().join("risks.csv");
    let first = std::fs::read(&path).unwrap();
    let recs = read_records(&path).unwrap();
    assert_eq!(recs.len(), 2 * 3 * 2);
    assert!(recs.iter().all(|r| r.problem == Problem::Unlinked && r.value >= 0.0));
    assert!(String::from_utf8_lossy(&res.stdout).contains("log-log slope"));
    assert_eq!(run().status.code(), Some(0));
    assert_eq!(std::fs::read(&path).unwrap(), first);
}

#[test]
fn rates_rejects_out_of_row_preset() {
    let dir = tempfile::tempdir().unwrap();
    let res = wassreg(&[
        "rates", "--problem", "deconv", "--n-grid", "2", "--sigma-rule", "preset:above-root",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn simulate_then_estimate_each_mode() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for mode in ["shuffled", "unlinked", "deconv"] {
        let res = wassreg(&["simulate", "--mode", mode, "--n", "300", "--link", "cube", "--sigma", "0.05", "--out", out]);
        assert_eq!(res.status.code(), Some(0));
        let data = dir.path().join("dataset.csv");
        assert_eq!(read_dataset(&data).unwrap().y.len(), 300);
        let res = wassreg(&[
            "estimate", "--input", data.to_str().unwrap(), "--sigma", "0.05", "--grid-points", "4096",
            "--out", out,
        ]);
        assert_eq!(res.status.code(), Some(0), "{mode}: {}", String::from_utf8_lossy(&res.stderr));
        if mode == "deconv" {
            let cdf = read_tabulated(&dir.path().join("deconv_cdf.csv")).unwrap();
            assert_eq!(cdf.len(), 4096);
        } else {
            let fit = read_step_fn(&dir.path().join("fit.csv")).unwrap();
            assert_eq!(fit.len(), 300);
            assert!(fit.values().windows(2).all(|w| w[0] <= w[1]));
        }
    }
}

#[test]
fn estimate_reports_missing_input_as_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let res = wassreg(&[
        "estimate", "--input", "/no/such/file.csv", "--sigma", "0.1", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("/no/such/file.csv"));
}

#[test]
fn config_file_sections_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "seed = 7\n\n[conjecture]\nn_max = 1000\ngrid_points = 3\nreps = 4\nbig_c = [1.0, 2.0, 5.0]\nplot = false\n",
    )
    .unwrap();
    let out = dir.path().join("o");
    let res = wassreg(&["--config", cfg.to_str().unwrap(), "conjecture", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(lines(&out.join("conjecture.csv")), 1 + 3 * 3);
    assert!(!out.join("conjecture_C1.svg").exists());

    let res = wassreg(&[
        "--config", cfg.to_str().unwrap(), "conjecture", "--grid-points", "2", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(0));
    assert_eq!(lines(&out.join("conjecture.csv")), 1 + 2 * 3);

    std::fs::write(&cfg, "[conjecture]\nnot_a_key = 1\n").unwrap();
    let res = wassreg(&["--config", cfg.to_str().unwrap(), "conjecture", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn worker_env_var_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let res = Command::new(env!("CARGO_BIN_EXE_wassreg"))
        .args(["conjecture", "--n-max", "200", "--grid-points", "2", "--reps", "2", "--out"])
        .arg(dir.path())
        .env("WASSREG_WORKERS", "lots")
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(2));
    let res = Command::new(env!("CARGO_BIN_EXE_wassreg"))
        .args(["conjecture", "--n-max", "200", "--grid-points", "2", "--reps", "2", "--out"])
        .arg(dir.path())
        .env("WASSREG_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(0));
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain-file");
    std::fs::write(&file, "x").unwrap();
    let res = wassreg(&["conjecture", "--n-max", "200", "--grid-points", "2", "--reps", "2", "--out", file.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn selftest_passes() {
    let res = wassreg(&["selftest"]);
    assert_eq!(res.status.code(), Some(0));
    let text = String::from_utf8_lossy(&res.stdout);
    assert!(text.lines().count() >= 5 && !text.contains("[FAIL]"));
}
