//! Command-line front end: dataset generation, single fits, budget sweeps,
//! scaling studies, and differential-privacy audits.
//!
//! Every flag can also be supplied from a `--config` file of `key = value`
//! lines (keys spelled like the long flags); explicit flags win. Gate
//! aborts exit with code 2 unless `--allow-abort` downgrades them to
//! recorded outcomes.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use qdp_lasso::dataset::{
    generate_synthetic, load_dataset, load_ground_truth, normalize, reconstruction_error,
    save_dataset, save_ground_truth, Dataset, GroundTruth, NormMode,
};
use qdp_lasso::error::Error;
use qdp_lasso::experiments::{
    parse_kv, run_audit, run_scaling, run_sweep, write_audit_outputs, write_scaling_outputs,
    write_sweep_outputs, AuditConfig, ExperimentConfig, Method, ScalingConfig,
};
use qdp_lasso::fw::{curvature_bound, fit_nonprivate, CurvatureMethod, FitReport};
use qdp_lasso::mechanism::{choose_t, fit_qdp_with, QdpOptions};
use qdp_lasso::oracle::{fit_quantum_sim, OracleConfig, OracleKind, QueryLedger};
use qdp_lasso::privacy::fit_cdp_laplace;
use qdp_lasso::Result;

#[derive(Parser)]
#[command(
    name = "qdplasso",
    version,
    about = "Differentially private sparse regression with simulated quantum oracles"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic sparse regression dataset and ground truth.
    Gen(GenArgs),
    /// Fit one method on a generated or loaded dataset.
    Fit(FitArgs),
    /// Run the privacy-utility sweep over a budget grid.
    Sweep(SweepArgs),
    /// Run the query-count scaling study over dimensions.
    Scaling(ScalingArgs),
    /// Audit per-step privacy on enumerated neighboring datasets.
    Audit(AuditArgs),
}

/// Dataset shape and normalization knobs.
#[derive(Args)]
struct DataArgs {
    /// Number of samples.
    #[arg(long)]
    n: Option<usize>,
    /// Number of features.
    #[arg(long)]
    d: Option<usize>,
    /// Ground-truth support size.
    #[arg(long = "s-star")]
    s_star: Option<usize>,
    /// Observation noise standard deviation.
    #[arg(long = "noise-std")]
    noise_std: Option<f64>,
    /// Normalization mode: raw, inf, or fro.
    #[arg(long)]
    norm: Option<String>,
}

/// Privacy budget and oracle knobs.
#[derive(Args)]
struct PrivacyArgs {
    /// Total privacy budget epsilon.
    #[arg(long)]
    eps: Option<f64>,
    /// Privacy failure probability delta.
    #[arg(long)]
    delta: Option<f64>,
    /// Oracle noise tolerance.
    #[arg(long)]
    varsigma: Option<f64>,
    /// Oracle failure parameter (failure probability 2b per preparation).
    #[arg(long)]
    b: Option<f64>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for dataset.csv and truth.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// key = value file supplying defaults for the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Fitter: fw, qnp, qdp, or cdp.
    #[arg(long)]
    method: Option<String>,
    /// Load this dataset.csv instead of generating one.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Ground-truth file matching --data, for reconstruction error.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[command(flatten)]
    gen: DataArgs,
    #[command(flatten)]
    privacy: PrivacyArgs,
    /// Fixed iteration horizon (default: calibrated from the budget).
    #[arg(long)]
    t: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for report.csv, estimate.csv, and method artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record a gate abort as a normal outcome instead of failing.
    #[arg(long = "allow-abort")]
    allow_abort: bool,
    /// key = value file supplying defaults for the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    privacy: PrivacyArgs,
    /// Comma-separated privacy budgets.
    #[arg(long = "eps-grid")]
    eps_grid: Option<String>,
    /// Comma-separated methods to run.
    #[arg(long)]
    methods: Option<String>,
    /// Trials per (method, epsilon) cell.
    #[arg(long)]
    trials: Option<usize>,
    /// Fixed horizon for every cell (default: calibrated per budget).
    #[arg(long = "t-fixed")]
    t_fixed: Option<usize>,
    /// Horizon of the exact reference run anchoring excess risk.
    #[arg(long = "reference-t")]
    reference_t: Option<usize>,
    /// Worker threads (default: QDPLASSO_THREADS, then min(cores, cells)).
    #[arg(long)]
    threads: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for results.csv, summary.csv, sweep.svg.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record gate aborts as rows instead of failing the sweep.
    #[arg(long = "allow-abort")]
    allow_abort: bool,
    /// key = value file supplying defaults for the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ScalingArgs {
    /// Comma-separated feature dimensions.
    #[arg(long = "d-grid")]
    d_grid: Option<String>,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    privacy: PrivacyArgs,
    /// Shared fixed horizon for every cell.
    #[arg(long = "t-fixed")]
    t_fixed: Option<usize>,
    /// Trials per dimension.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (default: QDPLASSO_THREADS, then min(cores, cells)).
    #[arg(long)]
    threads: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for scaling.csv, slopes.csv, scaling.svg.
    #[arg(long)]
    out: Option<PathBuf>,
    /// key = value file supplying defaults for the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    /// Neighboring pairs to enumerate.
    #[arg(long)]
    pairs: Option<usize>,
    /// Comma-separated softmax temperatures to audit.
    #[arg(long = "lambda-grid")]
    lambda_grid: Option<String>,
    /// Monte-Carlo draws per probe for the Laplace baseline.
    #[arg(long)]
    draws: Option<u64>,
    /// Probe iterates per pair.
    #[arg(long)]
    probes: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for audit.csv and audit_summary.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// key = value file supplying defaults for the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Config-file defaults under the CLI flags: flag value, then file value,
/// then built-in default.
struct Overlay(HashMap<String, String>);

impl Overlay {
    fn load(path: &Option<PathBuf>) -> Result<Overlay> {
        let mut map = HashMap::new();
        if let Some(p) = path {
            for (k, v) in parse_kv(&fs::read_to_string(p)?)? {
                map.insert(k, v);
            }
        }
        Ok(Overlay(map))
    }

    fn get<T: FromStr + Clone>(&self, flag: &Option<T>, key: &str, default: T) -> Result<T> {
        match self.get_opt(flag, key)? {
            Some(v) => Ok(v),
            None => Ok(default),
        }
    }

    fn get_opt<T: FromStr + Clone>(&self, flag: &Option<T>, key: &str) -> Result<Option<T>> {
        if let Some(v) = flag {
            return Ok(Some(v.clone()));
        }
        match self.0.get(key) {
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::InvalidArgument(format!("config key {key} = {raw:?} failed to parse"))
            }),
            None => Ok(None),
        }
    }
}

fn parse_f64_list(raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad number {t:?} in list {raw:?}")))
        })
        .collect()
}

fn parse_usize_list(raw: &str) -> Result<Vec<usize>> {
    raw.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidArgument(format!("bad integer {t:?} in list {raw:?}")))
        })
        .collect()
}

fn parse_methods(raw: &str) -> Result<Vec<Method>> {
    raw.split(',').map(Method::parse).collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e @ Error::GateAbort { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Fit(a) => cmd_fit(a),
        Cmd::Sweep(a) => cmd_sweep(a),
        Cmd::Scaling(a) => cmd_scaling(a),
        Cmd::Audit(a) => cmd_audit(a),
    }
}

struct ResolvedData {
    n: usize,
    d: usize,
    s_star: usize,
    noise_std: f64,
    norm: Option<NormMode>,
}

fn resolve_data(o: &Overlay, a: &DataArgs, default_norm: &str) -> Result<ResolvedData> {
    let norm_token = o.get(&a.norm, "norm", default_norm.to_string())?;
    Ok(ResolvedData {
        n: o.get(&a.n, "n", 100)?,
        d: o.get(&a.d, "d", 500)?,
        s_star: o.get(&a.s_star, "s-star", 10)?,
        noise_std: o.get(&a.noise_std, "noise-std", 0.0)?,
        norm: NormMode::parse(&norm_token)?,
    })
}

fn build_dataset(spec: &ResolvedData, seed: u64) -> Result<(Dataset, GroundTruth)> {
    let (raw, gt) = generate_synthetic(spec.n, spec.d, spec.s_star, seed, spec.noise_std)?;
    match spec.norm {
        Some(mode) => normalize(raw, gt, mode),
        None => Ok((raw, gt)),
    }
}

fn cmd_gen(a: GenArgs) -> Result<ExitCode> {
    let o = Overlay::load(&a.config)?;
    let spec = resolve_data(&o, &a.data, "inf")?;
    let seed = o.get(&a.seed, "seed", 7)?;
    let out = o.get(&a.out, "out", PathBuf::from("."))?;
    let (ds, gt) = build_dataset(&spec, seed)?;
    fs::create_dir_all(&out)?;
    save_dataset(&ds, &out.join("dataset.csv"))?;
    save_ground_truth(&gt, &out.join("truth.csv"))?;
    println!(
        "wrote {}/dataset.csv ({} samples, {} features, norm {}) and truth.csv ({} nonzeros)",
        out.display(),
        ds.n(),
        ds.d(),
        ds.norm_mode().map_or("raw", NormMode::token),
        gt.s_star()
    );
    Ok(ExitCode::SUCCESS)
}

fn report_csv(rep: &FitReport) -> String {
    let mut out = String::from("t,loss\n");
    out.push_str(&format!("0,{}\n", rep.initial_loss));
    for (i, loss) in rep.losses.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, loss));
    }
    out
}

fn estimate_csv(rep: &FitReport) -> String {
    let mut out = String::from("index,value\n");
    for (j, c) in rep.iterate.iter() {
        out.push_str(&format!("{j},{c}\n"));
    }
    out
}

fn write_common_fit_outputs(dir: &Path, rep: &FitReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.csv"), report_csv(rep))?;
    fs::write(dir.join("estimate.csv"), estimate_csv(rep))?;
    Ok(())
}

fn write_ledger(dir: &Path, ledger: &QueryLedger) -> Result<()> {
    fs::write(dir.join("ledger.csv"), ledger.to_csv())?;
    Ok(())
}

fn cmd_fit(a: FitArgs) -> Result<ExitCode> {
    let o = Overlay::load(&a.config)?;
    let method = Method::parse(&o.get(&a.method, "method", "qdp".to_string())?)?;
    let eps = o.get(&a.privacy.eps, "eps", 1.0)?;
    let delta = o.get(&a.privacy.delta, "delta", 1e-4)?;
    let varsigma = o.get(&a.privacy.varsigma, "varsigma", 0.01)?;
    let b = o.get(&a.privacy.b, "b", 0.01)?;
    let seed = o.get(&a.seed, "seed", 7)?;
    let t_flag = o.get_opt(&a.t, "t")?;
    let out_dir = o.get_opt(&a.out, "out")?;

    let (ds, gt) = match &a.data {
        Some(path) => {
            let ds = load_dataset(path)?;
            let gt = match &a.truth {
                Some(tp) => Some(load_ground_truth(tp)?),
                None => None,
            };
            (ds, gt)
        }
        None => {
            let spec = resolve_data(&o, &a.gen, "inf")?;
            let (ds, gt) = build_dataset(&spec, seed)?;
            (ds, Some(gt))
        }
    };

    let cf = curvature_bound(&ds, CurvatureMethod::Upper)?;
    let horizon = match t_flag {
        Some(t) => t,
        None => choose_t(eps, delta, ds.n(), cf)?,
    };
    let ocfg = OracleConfig::new(varsigma, b)?;

    let (rep, queries, proposals): (FitReport, u64, u64) = match method {
        Method::Fw => (fit_nonprivate(&ds, horizon, seed)?, 0, 0),
        Method::Qnp => {
            let (rep, ledger) = fit_quantum_sim(&ds, horizon, &ocfg, seed)?;
            if let Some(dir) = &out_dir {
                write_common_fit_outputs(dir, &rep)?;
                write_ledger(dir, &ledger)?;
            }
            println!(
                "method=qnp n={} d={} t_total={} final_loss={} queries_alpha={} charged={}",
                ds.n(),
                ds.d(),
                horizon,
                rep.final_loss(),
                ledger.count(OracleKind::AlphaPrep),
                ledger.charged_total()
            );
            print_recon(&rep, &gt)?;
            return Ok(ExitCode::SUCCESS);
        }
        Method::Cdp => (fit_cdp_laplace(&ds, eps, delta, horizon, seed)?, 0, 0),
        Method::Qdp => {
            let opts = QdpOptions {
                t_override: t_flag,
                allow_non_frobenius: ds.norm_mode() != Some(NormMode::Frobenius),
                ..QdpOptions::default()
            };
            match fit_qdp_with(&ds, eps, delta, &ocfg, seed, &opts) {
                Ok(outcome) => {
                    if let Some(dir) = &out_dir {
                        write_common_fit_outputs(dir, &outcome.report)?;
                        write_ledger(dir, &outcome.ledger)?;
                        fs::write(dir.join("trace.csv"), outcome.trace.to_csv())?;
                        let p = outcome.params;
                        fs::write(
                            dir.join("params.csv"),
                            format!(
                                "epsilon,delta,t_total,lambda,l1_const,eps_step,m_cap\n\
                                 {},{},{},{},{},{},{}\n",
                                p.epsilon, p.delta, p.t_total, p.lambda, p.l1_const, p.eps_step,
                                p.m_cap
                            ),
                        )?;
                    }
                    println!(
                        "method=qdp n={} d={} t_total={} lambda={} eps_step={} final_loss={} \
                         queries_alpha={} proposals={} status=ok",
                        ds.n(),
                        ds.d(),
                        outcome.params.t_total,
                        outcome.params.lambda,
                        outcome.params.eps_step,
                        outcome.report.final_loss(),
                        outcome.ledger.count(OracleKind::AlphaPrep),
                        outcome.trace.proposals_total()
                    );
                    print_recon(&outcome.report, &gt)?;
                    return Ok(ExitCode::SUCCESS);
                }
                Err(e @ Error::GateAbort { .. }) if a.allow_abort => {
                    println!("method=qdp status=abort detail={e}");
                    return Ok(ExitCode::SUCCESS);
                }
                Err(e) => return Err(e),
            }
        }
    };
    if let Some(dir) = &out_dir {
        write_common_fit_outputs(dir, &rep)?;
    }
    println!(
        "method={} n={} d={} t_total={} final_loss={} queries_alpha={} proposals={}",
        method,
        ds.n(),
        ds.d(),
        rep.t_total,
        rep.final_loss(),
        queries,
        proposals
    );
    print_recon(&rep, &gt)?;
    Ok(ExitCode::SUCCESS)
}

fn print_recon(rep: &FitReport, gt: &Option<GroundTruth>) -> Result<()> {
    if let Some(gt) = gt {
        println!(
            "recon_error={}",
            reconstruction_error(&rep.iterate.to_dense(), gt)?
        );
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<ExitCode> {
    let o = Overlay::load(&a.config)?;
    let defaults = ExperimentConfig::default();
    let spec = resolve_data(&o, &a.data, "inf")?;
    let eps_grid = match o.get_opt(&a.eps_grid, "eps-grid")? {
        Some(raw) => parse_f64_list(&raw)?,
        None => defaults.eps_grid.clone(),
    };
    let methods = match o.get_opt(&a.methods, "methods")? {
        Some(raw) => parse_methods(&raw)?,
        None => defaults.methods.clone(),
    };
    let cfg = ExperimentConfig {
        n: spec.n,
        d: spec.d,
        s_star: spec.s_star,
        noise_std: spec.noise_std,
        norm: spec.norm,
        eps_grid,
        delta: o.get(&a.privacy.delta, "delta", defaults.delta)?,
        varsigma: o.get(&a.privacy.varsigma, "varsigma", defaults.varsigma)?,
        b: o.get(&a.privacy.b, "b", defaults.b)?,
        trials: o.get(&a.trials, "trials", defaults.trials)?,
        seed: o.get(&a.seed, "seed", defaults.seed)?,
        methods,
        t_override: o.get_opt(&a.t_fixed, "t-fixed")?,
        reference_t: o.get(&a.reference_t, "reference-t", defaults.reference_t)?,
        threads: o.get_opt(&a.threads, "threads")?,
        allow_abort: a.allow_abort || o.0.get("allow-abort").map(|v| v == "true") == Some(true),
    };
    let out_dir = o.get(&a.out, "out", PathBuf::from("qdplasso_sweep"))?;
    let sweep = run_sweep(&cfg)?;
    write_sweep_outputs(&out_dir, &sweep)?;
    println!("reference_loss={}", sweep.reference_loss);
    for s in &sweep.summary {
        println!(
            "method={} eps={} mean_recon_error={} std={} aborts={}",
            s.method, s.epsilon, s.mean_recon_error, s.std_recon_error, s.aborts
        );
    }
    println!(
        "wrote {}/results.csv, summary.csv, sweep.svg ({} rows, {} aborts)",
        out_dir.display(),
        sweep.rows.len(),
        sweep.aborts()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_scaling(a: ScalingArgs) -> Result<ExitCode> {
    let o = Overlay::load(&a.config)?;
    let defaults = ScalingConfig::default();
    let d_grid = match o.get_opt(&a.d_grid, "d-grid")? {
        Some(raw) => parse_usize_list(&raw)?,
        None => defaults.d_grid.clone(),
    };
    let norm_token = o.get(&a.data.norm, "norm", "inf".to_string())?;
    let norm = NormMode::parse(&norm_token)?.ok_or_else(|| {
        Error::InvalidArgument("scaling needs a declared normalization mode (inf or fro)".to_string())
    })?;
    let cfg = ScalingConfig {
        d_grid,
        n: o.get(&a.data.n, "n", defaults.n)?,
        s_star: o.get(&a.data.s_star, "s-star", defaults.s_star)?,
        noise_std: o.get(&a.data.noise_std, "noise-std", defaults.noise_std)?,
        norm,
        epsilon: o.get(&a.privacy.eps, "eps", defaults.epsilon)?,
        delta: o.get(&a.privacy.delta, "delta", defaults.delta)?,
        varsigma: o.get(&a.privacy.varsigma, "varsigma", defaults.varsigma)?,
        b: o.get(&a.privacy.b, "b", defaults.b)?,
        t_fixed: o.get(&a.t_fixed, "t-fixed", defaults.t_fixed)?,
        trials: o.get(&a.trials, "trials", defaults.trials)?,
        seed: o.get(&a.seed, "seed", defaults.seed)?,
        threads: o.get_opt(&a.threads, "threads")?,
    };
    let out_dir = o.get(&a.out, "out", PathBuf::from("qdplasso_scaling"))?;
    let out = run_scaling(&cfg)?;
    write_scaling_outputs(&out_dir, &out)?;
    for s in &out.slopes {
        println!(
            "method={} metric={} measured_slope={:.4} predicted={}",
            s.method, s.metric, s.measured_slope, s.predicted_exponent
        );
    }
    println!("wrote {}/scaling.csv, slopes.csv, scaling.svg", out_dir.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_audit(a: AuditArgs) -> Result<ExitCode> {
    let o = Overlay::load(&a.config)?;
    let defaults = AuditConfig::default();
    let lambda_grid = match o.get_opt(&a.lambda_grid, "lambda-grid")? {
        Some(raw) => parse_f64_list(&raw)?,
        None => defaults.lambda_grid.clone(),
    };
    let cfg = AuditConfig {
        pairs: o.get(&a.pairs, "pairs", defaults.pairs)?,
        lambda_grid,
        draws: o.get(&a.draws, "draws", defaults.draws)?,
        probes: o.get(&a.probes, "probes", defaults.probes)?,
        seed: o.get(&a.seed, "seed", defaults.seed)?,
    };
    let out_dir = o.get(&a.out, "out", PathBuf::from("qdplasso_audit"))?;
    let out = run_audit(&cfg)?;
    write_audit_outputs(&out_dir, &out)?;
    for (lambda, r) in out.softmax.iter() {
        println!(
            "mechanism=softmax_exact lambda={lambda} max_ratio={} bound={} sensitivity_max={} \
             sensitivity_bound={} verdict={}",
            r.max_ratio,
            r.bound,
            r.sensitivity_max,
            r.sensitivity_bound,
            if r.passed() { "ok" } else { "VIOLATION" }
        );
    }
    for (lambda, r) in out.argmin.iter() {
        println!(
            "mechanism=laplace_argmin_mc lambda={lambda} max_ratio={} bound={} verdict={}",
            r.max_ratio,
            r.bound,
            if r.passed() { "ok" } else { "VIOLATION" }
        );
    }
    println!("wrote {}/audit.csv, audit_summary.csv", out_dir.display());
    if out.all_passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        Err(Error::InvalidArgument("audit measured a likelihood ratio above its bound".to_string()))
    }
}
