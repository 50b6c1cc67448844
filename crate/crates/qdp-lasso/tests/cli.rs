//! Black-box tests of the qdplasso binary: artifact layout, exit codes,
//! reproducibility, and environment handling.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qdp_lasso::{load_dataset, load_ground_truth, NormMode};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qdplasso"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should launch")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {args:?} failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn gen_writes_loadable_dataset() {
    let dir = TempDir::new().unwrap();
    let out = run_ok(&[
        "gen", "--n", "24", "--d", "10", "--s-star", "3", "--seed", "3", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(stdout(&out).contains("wrote"));

    let ds = load_dataset(&dir.path().join("dataset.csv")).unwrap();
    assert_eq!((ds.n(), ds.d()), (24, 10));
    assert_eq!(ds.norm_mode(), Some(NormMode::InfNorm));
    let gt = load_ground_truth(&dir.path().join("truth.csv")).unwrap();
    assert_eq!(gt.theta().len(), 10);
    assert_eq!(gt.s_star(), 3);
}

#[test]
fn fit_qdp_writes_all_artifacts() {
    let dir = TempDir::new().unwrap();
    let out = run_ok(&[
        "fit", "--method", "qdp", "--n", "40", "--d", "16", "--s-star", "3", "--eps", "1.0",
        "--seed", "5", "--out", dir.path().to_str().unwrap(),
    ]);
    let text = stdout(&out);
    assert!(text.contains("status=ok"), "stdout: {text}");
    assert!(text.contains("recon_error="), "stdout: {text}");

    assert!(read(&dir.path().join("report.csv")).starts_with("t,loss\n"));
    assert!(read(&dir.path().join("estimate.csv")).starts_with("index,value\n"));
    assert!(read(&dir.path().join("ledger.csv")).starts_with("oracle_kind,count,charged_budget\n"));
    assert!(read(&dir.path().join("trace.csv"))
        .starts_with("t,proposals_used,accepted_index,acceptance_prob\n"));
    assert!(read(&dir.path().join("params.csv"))
        .starts_with("epsilon,delta,t_total,lambda,l1_const,eps_step,m_cap\n"));
}

/// Everything except the wall-clock column must be bit-identical between
/// repeated runs of the same sweep.
fn mask_wall_ms(results_csv: &str) -> String {
    results_csv
        .lines()
        .map(|line| {
            let mut fields: Vec<&str> = line.split(',').collect();
            if fields.len() == 10 && fields[8] != "wall_ms" {
                fields[8] = "X";
            }
            fields.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn sweep_runs_are_reproducible() {
    let args = |out: &str| {
        vec![
            "sweep".to_string(), "--n".into(), "20".into(), "--d".into(), "10".into(),
            "--s-star".into(), "3".into(), "--trials".into(), "2".into(), "--eps-grid".into(),
            "0.5,1.0".into(), "--methods".into(), "qdp,cdp".into(), "--seed".into(), "5".into(),
            "--reference-t".into(), "500".into(), "--out".into(), out.into(),
        ]
    };
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let run_args_a: Vec<String> = args(a.path().to_str().unwrap());
    let run_args_b: Vec<String> = args(b.path().to_str().unwrap());
    let out_a = run_ok(&run_args_a.iter().map(String::as_str).collect::<Vec<_>>());
    run_ok(&run_args_b.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(stdout(&out_a).contains("reference_loss="));

    let res_a = read(&a.path().join("results.csv"));
    let res_b = read(&b.path().join("results.csv"));
    assert!(res_a.starts_with(
        "trial,epsilon,method,recon_error,excess_risk,t_total,queries_alpha,proposals_total,wall_ms,status\n"
    ));
    assert_eq!(mask_wall_ms(&res_a), mask_wall_ms(&res_b));
    assert!(a.path().join("summary.csv").exists());
    assert!(read(&a.path().join("sweep.svg")).starts_with("<svg"));
}

#[test]
fn scaling_writes_slope_table() {
    let dir = TempDir::new().unwrap();
    let out = run_ok(&[
        "scaling", "--d-grid", "16,64", "--n", "30", "--s-star", "3", "--trials", "2",
        "--t-fixed", "6", "--seed", "2", "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(stdout(&out).contains("measured_slope"));

    let slopes = read(&dir.path().join("slopes.csv"));
    let mut lines = slopes.lines();
    assert_eq!(
        lines.next(),
        Some("method,metric,measured_slope,predicted_exponent")
    );
    assert_eq!(lines.count(), 4, "one row per (method, metric): {slopes}");
    assert!(dir.path().join("scaling.csv").exists());
    assert!(read(&dir.path().join("scaling.svg")).starts_with("<svg"));
}

#[test]
fn audit_passes_and_writes_reports() {
    let dir = TempDir::new().unwrap();
    let out = run_ok(&[
        "audit", "--pairs", "12", "--lambda-grid", "0.5,2.0", "--draws", "2000", "--probes",
        "3", "--seed", "4", "--out", dir.path().to_str().unwrap(),
    ]);
    let text = stdout(&out);
    assert!(text.contains("verdict=ok"), "stdout: {text}");
    assert!(!text.contains("VIOLATION"), "stdout: {text}");

    assert!(read(&dir.path().join("audit.csv")).starts_with("pair_id,max_ratio,bound,margin\n"));
    assert!(read(&dir.path().join("audit_summary.csv")).starts_with(
        "mechanism,lambda,max_ratio,bound,min_margin,sensitivity_max,sensitivity_bound\n"
    ));
}

/// A budget loose enough to defeat the noise triggers the pre-run gate:
/// exit code 2 plainly, exit 0 with a status line under --allow-abort.
#[test]
fn gate_abort_distinguishes_exit_codes() {
    let refused = run(&[
        "fit", "--method", "qdp", "--n", "30", "--d", "8", "--s-star", "2", "--eps", "1000000",
        "--seed", "3",
    ]);
    assert_eq!(refused.status.code(), Some(2), "expected gate-abort exit code");
    assert!(String::from_utf8_lossy(&refused.stderr).contains("error"));

    let tolerated = run_ok(&[
        "fit", "--method", "qdp", "--n", "30", "--d", "8", "--s-star", "2", "--eps", "1000000",
        "--seed", "3", "--allow-abort",
    ]);
    assert!(stdout(&tolerated).contains("status=abort"));
}

#[test]
fn worker_pool_env_is_validated() {
    let base = [
        "sweep", "--n", "16", "--d", "8", "--s-star", "2", "--trials", "1", "--eps-grid",
        "1.0", "--methods", "cdp", "--seed", "1", "--reference-t", "200",
    ];
    let dir = TempDir::new().unwrap();
    let ok = bin()
        .args(base)
        .args(["--out", dir.path().to_str().unwrap()])
        .env("QDPLASSO_THREADS", "2")
        .output()
        .unwrap();
    assert!(ok.status.success(), "stderr: {}", String::from_utf8_lossy(&ok.stderr));

    let dir2 = TempDir::new().unwrap();
    let bad = bin()
        .args(base)
        .args(["--out", dir2.path().to_str().unwrap()])
        .env("QDPLASSO_THREADS", "abc")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1), "malformed env var must be an error");
    assert!(String::from_utf8_lossy(&bad.stderr).contains("error"));
}
