//! Reproducible experiment drivers: privacy-utility sweeps over a budget
//! grid, query-count scaling studies, and differential-privacy audits.
//!
//! Cells fan out over a bounded rayon pool (capped by `QDPLASSO_THREADS`
//! when set), but every cell derives its own seed from the master seed and
//! its grid position, so results are byte-identical regardless of thread
//! count or scheduling. Drivers return plain structs; the `write_*`
//! companions serialize them to CSV and SVG artifacts.

use std::collections::BTreeMap;
use std::env;
use std::fmt;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::dataset::{
    generate_synthetic, normalize, reconstruction_error, Dataset, GroundTruth, NormMode,
};
use crate::error::{Error, Result};
use crate::fw::{curvature_bound, fit_nonprivate, CurvatureMethod};
use crate::mechanism::{choose_t, fit_qdp_with, public_l1_bound, QdpOptions};
use crate::oracle::{fit_quantum_sim, OracleConfig, OracleKind};
use crate::privacy::{audit_dp, fit_cdp_laplace, toy_grid_family, AuditMechanism, AuditReport};
use crate::rng::{Purpose, Stream};

/// The four fitters the drivers can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    /// Exact Frank-Wolfe (non-private ceiling).
    Fw,
    /// Simulated quantum minimum-finding, non-private.
    Qnp,
    /// Private softmax mechanism.
    Qdp,
    /// Classical Laplace noisy-argmin baseline.
    Cdp,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Fw, Method::Qnp, Method::Qdp, Method::Cdp];

    pub fn name(self) -> &'static str {
        match self {
            Method::Fw => "fw",
            Method::Qnp => "qnp",
            Method::Qdp => "qdp",
            Method::Cdp => "cdp",
        }
    }

    pub fn parse(token: &str) -> Result<Method> {
        match token.trim() {
            "fw" => Ok(Method::Fw),
            "qnp" => Ok(Method::Qnp),
            "qdp" => Ok(Method::Qdp),
            "cdp" => Ok(Method::Cdp),
            other => Err(Error::invalid(format!(
                "unknown method {other:?}; expected fw, qnp, qdp, or cdp"
            ))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sweep configuration; defaults reproduce the desk-scale privacy-utility
/// experiment (InfNorm data, private methods only).
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub n: usize,
    pub d: usize,
    pub s_star: usize,
    pub noise_std: f64,
    /// Declared normalization applied after generation; `None` keeps raw
    /// data (private methods then refuse to run).
    pub norm: Option<NormMode>,
    pub eps_grid: Vec<f64>,
    pub delta: f64,
    pub varsigma: f64,
    pub b: f64,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    /// Fixed horizon for every method instead of the calibrated choice.
    pub t_override: Option<usize>,
    /// Horizon of the long exact run that anchors excess risk.
    pub reference_t: usize,
    pub threads: Option<usize>,
    /// Record gate aborts as rows instead of failing the sweep.
    pub allow_abort: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 100,
            d: 500,
            s_star: 10,
            noise_std: 0.0,
            norm: Some(NormMode::InfNorm),
            eps_grid: vec![0.1, 0.4, 0.7, 1.0],
            delta: 1e-4,
            varsigma: 0.01,
            b: 0.01,
            trials: 10,
            seed: 7,
            methods: vec![Method::Qdp, Method::Cdp],
            t_override: None,
            reference_t: 2000,
            threads: None,
            allow_abort: false,
        }
    }
}

/// Cell outcome status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    /// The private fit refused to run (examination gate).
    Abort,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Abort => "abort",
        }
    }
}

/// One sweep cell result. Aborted cells carry NaN accuracy metrics.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub trial: usize,
    pub epsilon: f64,
    pub method: Method,
    pub recon_error: f64,
    pub excess_risk: f64,
    pub t_total: usize,
    pub queries_alpha: u64,
    pub proposals_total: u64,
    pub wall_ms: f64,
    pub status: RowStatus,
}

/// Per `(method, epsilon)` aggregate over trials.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub method: Method,
    pub epsilon: f64,
    pub trials: usize,
    pub aborts: usize,
    pub mean_recon_error: f64,
    pub std_recon_error: f64,
    pub mean_excess_risk: f64,
    pub mean_queries_alpha: f64,
    pub mean_proposals: f64,
}

/// Everything a sweep produces.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    /// Final loss of the long exact reference run.
    pub reference_loss: f64,
}

impl SweepOutput {
    pub fn aborts(&self) -> usize {
        self.rows.iter().filter(|r| r.status == RowStatus::Abort).count()
    }

    /// CSV of per-cell rows.
    pub fn results_csv(&self) -> String {
        let mut out = String::from(
            "trial,epsilon,method,recon_error,excess_risk,t_total,queries_alpha,\
             proposals_total,wall_ms,status\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.trial,
                r.epsilon,
                r.method,
                r.recon_error,
                r.excess_risk,
                r.t_total,
                r.queries_alpha,
                r.proposals_total,
                r.wall_ms,
                r.status.as_str()
            ));
        }
        out
    }

    /// CSV of per `(method, epsilon)` aggregates.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "method,epsilon,trials,aborts,mean_recon_error,std_recon_error,\
             mean_excess_risk,mean_queries_alpha,mean_proposals\n",
        );
        for s in &self.summary {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                s.method,
                s.epsilon,
                s.trials,
                s.aborts,
                s.mean_recon_error,
                s.std_recon_error,
                s.mean_excess_risk,
                s.mean_queries_alpha,
                s.mean_proposals
            ));
        }
        out
    }
}

/// Runs the privacy-utility sweep: one shared dataset, every configured
/// method at every budget in `eps_grid`, `trials` repetitions each.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    if cfg.eps_grid.is_empty() || cfg.methods.is_empty() || cfg.trials == 0 {
        return Err(Error::invalid("sweep needs methods, budgets, and trials"));
    }
    for &eps in &cfg.eps_grid {
        if !eps.is_finite() || eps <= 0.0 {
            return Err(Error::invalid(format!("epsilon = {eps} must be positive")));
        }
    }
    if cfg.methods.contains(&Method::Qdp) && cfg.norm.is_none() {
        return Err(Error::invalid(
            "the private softmax method needs a declared normalization mode",
        ));
    }

    let (raw, gt_raw) = generate_synthetic(cfg.n, cfg.d, cfg.s_star, cfg.seed, cfg.noise_std)?;
    let (ds, gt) = match cfg.norm {
        Some(mode) => normalize(raw, gt_raw, mode)?,
        None => (raw, gt_raw),
    };
    let reference_loss = fit_nonprivate(&ds, cfg.reference_t, cfg.seed)?.final_loss();
    let cf = curvature_bound(&ds, CurvatureMethod::Upper)?;

    let mut cells = Vec::new();
    for (mi, &method) in cfg.methods.iter().enumerate() {
        for (ei, &eps) in cfg.eps_grid.iter().enumerate() {
            for trial in 0..cfg.trials {
                cells.push((mi, method, ei, eps, trial));
            }
        }
    }
    let pool = thread_pool(cfg.threads, cells.len())?;
    let mut rows = pool.install(|| {
        cells
            .par_iter()
            .map(|&(mi, method, _ei, eps, trial)| {
                let seed =
                    Stream::fork_seed(cfg.seed, Purpose::CellSeed, &[mi as u64, eps.to_bits(), trial as u64]);
                run_cell(cfg, &ds, &gt, cf, reference_loss, method, eps, trial, seed)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    rows.sort_by(|a, b| {
        (a.method, a.epsilon.to_bits(), a.trial).cmp(&(b.method, b.epsilon.to_bits(), b.trial))
    });
    let summary = summarize(&rows);
    Ok(SweepOutput {
        rows,
        summary,
        reference_loss,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    cfg: &ExperimentConfig,
    ds: &Dataset,
    gt: &GroundTruth,
    cf: f64,
    reference_loss: f64,
    method: Method,
    eps: f64,
    trial: usize,
    seed: u64,
) -> Result<ResultRow> {
    let started = Instant::now();
    let horizon = || -> Result<usize> {
        match cfg.t_override {
            Some(t) => Ok(t),
            None => choose_t(eps, cfg.delta, ds.n(), cf),
        }
    };
    let (report, t_total, queries_alpha, proposals_total) = match method {
        Method::Fw => {
            let t = horizon()?;
            (fit_nonprivate(ds, t, seed)?, t, 0, 0)
        }
        Method::Qnp => {
            let t = horizon()?;
            let ocfg = OracleConfig::new(cfg.varsigma, cfg.b)?;
            let (report, ledger) = fit_quantum_sim(ds, t, &ocfg, seed)?;
            (report, t, ledger.count(OracleKind::AlphaPrep), 0)
        }
        Method::Cdp => {
            let t = horizon()?;
            (fit_cdp_laplace(ds, eps, cfg.delta, t, seed)?, t, 0, 0)
        }
        Method::Qdp => {
            let ocfg = OracleConfig::new(cfg.varsigma, cfg.b)?;
            let opts = QdpOptions {
                t_override: cfg.t_override,
                allow_non_frobenius: ds.norm_mode() != Some(NormMode::Frobenius),
                ..QdpOptions::default()
            };
            match fit_qdp_with(ds, eps, cfg.delta, &ocfg, seed, &opts) {
                Ok(out) => {
                    let q = out.ledger.count(OracleKind::AlphaPrep);
                    let p = out.trace.proposals_total();
                    (out.report, out.params.t_total, q, p)
                }
                Err(Error::GateAbort { .. }) if cfg.allow_abort => {
                    return Ok(ResultRow {
                        trial,
                        epsilon: eps,
                        method,
                        recon_error: f64::NAN,
                        excess_risk: f64::NAN,
                        t_total: 0,
                        queries_alpha: 0,
                        proposals_total: 0,
                        wall_ms: started.elapsed().as_secs_f64() * 1e3,
                        status: RowStatus::Abort,
                    });
                }
                Err(e) => return Err(e),
            }
        }
    };
    let recon_error = reconstruction_error(&report.iterate.to_dense(), gt)?;
    Ok(ResultRow {
        trial,
        epsilon: eps,
        method,
        recon_error,
        excess_risk: report.final_loss() - reference_loss,
        t_total,
        queries_alpha,
        proposals_total,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
        status: RowStatus::Ok,
    })
}

fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(Method, u64), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.method, r.epsilon.to_bits())).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((method, eps_bits), members)| {
            let ok: Vec<&&ResultRow> =
                members.iter().filter(|r| r.status == RowStatus::Ok).collect();
            let mean = |f: &dyn Fn(&ResultRow) -> f64| -> f64 {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64
                }
            };
            let mean_recon = mean(&|r| r.recon_error);
            let std_recon = if ok.len() < 2 {
                0.0
            } else {
                (ok.iter().map(|r| (r.recon_error - mean_recon).powi(2)).sum::<f64>()
                    / (ok.len() - 1) as f64)
                    .sqrt()
            };
            SummaryRow {
                method,
                epsilon: f64::from_bits(eps_bits),
                trials: members.len(),
                aborts: members.len() - ok.len(),
                mean_recon_error: mean_recon,
                std_recon_error: std_recon,
                mean_excess_risk: mean(&|r| r.excess_risk),
                mean_queries_alpha: mean(&|r| r.queries_alpha as f64),
                mean_proposals: mean(&|r| r.proposals_total as f64),
            }
        })
        .collect()
}

/// Writes `results.csv`, `summary.csv`, and `sweep.svg` under `dir`.
pub fn write_sweep_outputs(dir: &Path, out: &SweepOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("results.csv"), out.results_csv())?;
    fs::write(dir.join("summary.csv"), out.summary_csv())?;
    let mut series: Vec<Series> = Vec::new();
    for s in &out.summary {
        if !s.mean_recon_error.is_finite() {
            continue;
        }
        match series.iter_mut().find(|sr| sr.label == s.method.name()) {
            Some(sr) => sr.points.push((s.epsilon, s.mean_recon_error)),
            None => series.push(Series {
                label: s.method.name().to_string(),
                points: vec![(s.epsilon, s.mean_recon_error)],
            }),
        }
    }
    write_line_chart(
        &dir.join("sweep.svg"),
        "Reconstruction error vs privacy budget",
        "epsilon",
        "mean recon_error",
        &series,
    )
}

/// Scaling-study configuration; defaults measure the dimension axis at a
/// fixed horizon so per-fit query counts isolate the `d` dependence.
#[derive(Debug, Clone)]
pub struct ScalingConfig {
    pub d_grid: Vec<usize>,
    pub n: usize,
    pub s_star: usize,
    pub noise_std: f64,
    pub norm: NormMode,
    pub epsilon: f64,
    pub delta: f64,
    pub varsigma: f64,
    pub b: f64,
    /// Shared fixed horizon (both methods, every size).
    pub t_fixed: usize,
    pub trials: usize,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            d_grid: vec![64, 128, 256, 512, 1024],
            n: 100,
            s_star: 5,
            noise_std: 0.0,
            norm: NormMode::InfNorm,
            epsilon: 1.0,
            delta: 1e-4,
            varsigma: 0.01,
            b: 0.01,
            // Per-step proposal counts are geometric (relative std near 1),
            // so short horizons make the fitted slope noisy; 64 steps keep
            // the count estimator tight enough to resolve flat vs sqrt(d).
            t_fixed: 64,
            trials: 3,
            seed: 7,
            threads: None,
        }
    }
}

/// One scaling cell.
#[derive(Debug, Clone)]
pub struct ScalingRow {
    pub method: Method,
    pub d: usize,
    pub n: usize,
    pub trial: usize,
    pub t_total: usize,
    /// Logical oracle preparations.
    pub queries_alpha: u64,
    /// Charged preparation budget (units of `t^2 sqrt(N) / varsigma`).
    pub charged_units: f64,
    pub proposals_total: u64,
    pub wall_ms: f64,
}

/// Measured log-log slope of a query metric against `d`, next to the
/// analytic exponent it should track.
#[derive(Debug, Clone)]
pub struct SlopeRow {
    pub method: Method,
    pub metric: &'static str,
    pub measured_slope: f64,
    pub predicted_exponent: f64,
}

/// Everything a scaling study produces.
#[derive(Debug, Clone)]
pub struct ScalingOutput {
    pub rows: Vec<ScalingRow>,
    pub slopes: Vec<SlopeRow>,
}

impl ScalingOutput {
    pub fn rows_csv(&self) -> String {
        let mut out = String::from(
            "method,d,n,trial,t_total,queries_alpha,charged_units,proposals_total,wall_ms\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.method,
                r.d,
                r.n,
                r.trial,
                r.t_total,
                r.queries_alpha,
                r.charged_units,
                r.proposals_total,
                r.wall_ms
            ));
        }
        out
    }

    pub fn slopes_csv(&self) -> String {
        let mut out = String::from("method,metric,measured_slope,predicted_exponent\n");
        for s in &self.slopes {
            out.push_str(&format!(
                "{},{},{},{}\n",
                s.method, s.metric, s.measured_slope, s.predicted_exponent
            ));
        }
        out
    }

    /// Measured slope for `(method, metric)`, if present.
    pub fn slope(&self, method: Method, metric: &str) -> Option<f64> {
        self.slopes
            .iter()
            .find(|s| s.method == method && s.metric == metric)
            .map(|s| s.measured_slope)
    }
}

/// Runs the dimension-axis scaling study for the simulated quantum search
/// and the private mechanism. Both methods share dataset and horizon per
/// cell; oracle preparations are read off the query ledgers.
pub fn run_scaling(cfg: &ScalingConfig) -> Result<ScalingOutput> {
    if cfg.d_grid.len() < 2 {
        return Err(Error::invalid("scaling needs at least two sizes"));
    }
    if cfg.trials == 0 || cfg.t_fixed < 2 {
        return Err(Error::invalid("scaling needs trials >= 1 and t_fixed >= 2"));
    }
    let methods = [Method::Qnp, Method::Qdp];
    let mut cells = Vec::new();
    for &d in &cfg.d_grid {
        for trial in 0..cfg.trials {
            for (mi, &method) in methods.iter().enumerate() {
                cells.push((d, trial, mi, method));
            }
        }
    }
    let pool = thread_pool(cfg.threads, cells.len())?;
    let mut rows = pool.install(|| {
        cells
            .par_iter()
            .map(|&(d, trial, mi, method)| scaling_cell(cfg, d, trial, mi, method))
            .collect::<Result<Vec<_>>>()
    })?;
    rows.sort_by_key(|r| (r.method, r.d, r.trial));

    let mut slopes = Vec::new();
    for &method in &methods {
        for (metric, pick) in [
            ("queries_alpha", &(|r: &ScalingRow| r.queries_alpha as f64) as &dyn Fn(&ScalingRow) -> f64),
            ("charged_units", &|r: &ScalingRow| r.charged_units),
        ] {
            let points: Vec<(f64, f64)> = cfg
                .d_grid
                .iter()
                .map(|&d| {
                    let vals: Vec<f64> = rows
                        .iter()
                        .filter(|r| r.method == method && r.d == d)
                        .map(&pick)
                        .collect();
                    (d as f64, vals.iter().sum::<f64>() / vals.len() as f64)
                })
                .collect();
            slopes.push(SlopeRow {
                method,
                metric,
                measured_slope: loglog_slope(&points)?,
                // The search pays ~sqrt(2d) preparations per run; the
                // mechanism's proposal count does not grow with d.
                predicted_exponent: match method {
                    Method::Qnp => 0.5,
                    _ => 0.0,
                },
            });
        }
    }
    Ok(ScalingOutput { rows, slopes })
}

fn scaling_cell(
    cfg: &ScalingConfig,
    d: usize,
    trial: usize,
    mi: usize,
    method: Method,
) -> Result<ScalingRow> {
    let data_seed =
        Stream::fork_seed(cfg.seed, Purpose::CellSeed, &[0xda7a, d as u64, trial as u64]);
    let fit_seed =
        Stream::fork_seed(cfg.seed, Purpose::CellSeed, &[mi as u64 + 1, d as u64, trial as u64]);
    let (raw, gt) = generate_synthetic(cfg.n, d, cfg.s_star, data_seed, cfg.noise_std)?;
    let (ds, _) = normalize(raw, gt, cfg.norm)?;
    let ocfg = OracleConfig::new(cfg.varsigma, cfg.b)?;
    let started = Instant::now();
    let (ledger, proposals) = match method {
        Method::Qnp => {
            let (_, ledger) = fit_quantum_sim(&ds, cfg.t_fixed, &ocfg, fit_seed)?;
            (ledger, 0)
        }
        Method::Qdp => {
            let opts = QdpOptions {
                t_override: Some(cfg.t_fixed),
                allow_non_frobenius: cfg.norm != NormMode::Frobenius,
                ..QdpOptions::default()
            };
            let out = fit_qdp_with(&ds, cfg.epsilon, cfg.delta, &ocfg, fit_seed, &opts)?;
            (out.ledger, out.trace.proposals_total())
        }
        other => return Err(Error::invalid(format!("scaling does not run {other}"))),
    };
    Ok(ScalingRow {
        method,
        d,
        n: cfg.n,
        trial,
        t_total: cfg.t_fixed,
        queries_alpha: ledger.count(OracleKind::AlphaPrep),
        charged_units: ledger.charged(OracleKind::AlphaPrep),
        proposals_total: proposals,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

/// Least-squares slope of `ln(y)` against `ln(x)`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return Err(Error::degenerate("slope needs at least two positive points"));
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|(x, _)| x).sum::<f64>() / n;
    let my = logs.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::degenerate("slope needs at least two distinct x values"));
    }
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Writes `scaling.csv`, `slopes.csv`, and `scaling.svg` under `dir`.
pub fn write_scaling_outputs(dir: &Path, out: &ScalingOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("scaling.csv"), out.rows_csv())?;
    fs::write(dir.join("slopes.csv"), out.slopes_csv())?;
    let mut series: Vec<Series> = Vec::new();
    for r in &out.rows {
        let label = r.method.name();
        let entry = match series.iter_mut().find(|s| s.label == label) {
            Some(s) => s,
            None => {
                series.push(Series {
                    label: label.to_string(),
                    points: Vec::new(),
                });
                series.last_mut().unwrap()
            }
        };
        // Log-log axes so power laws plot as lines.
        entry.points.push(((r.d as f64).ln(), (r.queries_alpha.max(1) as f64).ln()));
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s.points.dedup();
    }
    write_line_chart(
        &dir.join("scaling.svg"),
        "Oracle preparations vs dimension (log-log)",
        "ln d",
        "ln queries_alpha",
        &series,
    )
}

/// Audit-driver configuration.
#[derive(Debug, Clone)]
pub struct AuditConfig {
    /// Neighboring pairs in the enumerated family.
    pub pairs: usize,
    /// Softmax temperatures to audit.
    pub lambda_grid: Vec<f64>,
    /// Monte-Carlo draws per probe for the Laplace baseline.
    pub draws: u64,
    /// Probe iterates per pair.
    pub probes: usize,
    pub seed: u64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            pairs: 60,
            lambda_grid: vec![0.25, 1.0, 4.0],
            draws: 20_000,
            probes: 5,
            seed: 7,
        }
    }
}

/// Audit reports per temperature for both mechanisms.
#[derive(Debug, Clone)]
pub struct AuditDriverOutput {
    pub softmax: Vec<(f64, AuditReport)>,
    pub argmin: Vec<(f64, AuditReport)>,
}

impl AuditDriverOutput {
    /// True when every report respects its analytic bound.
    pub fn all_passed(&self) -> bool {
        self.softmax.iter().chain(self.argmin.iter()).all(|(_, r)| r.passed())
    }

    /// CSV across mechanisms and temperatures.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "mechanism,lambda,max_ratio,bound,min_margin,sensitivity_max,sensitivity_bound\n",
        );
        let mut push = |name: &str, lambda: f64, r: &AuditReport| {
            let min_margin = r
                .rows
                .iter()
                .map(|row| row.margin)
                .fold(f64::INFINITY, f64::min);
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                name, lambda, r.max_ratio, r.bound, min_margin, r.sensitivity_max,
                r.sensitivity_bound
            ));
        };
        for (lambda, r) in &self.softmax {
            push("softmax_exact", *lambda, r);
        }
        for (lambda, r) in &self.argmin {
            push("laplace_argmin_mc", *lambda, r);
        }
        out
    }
}

/// Audits both per-step mechanisms over the enumerated neighbor family at
/// each configured temperature.
pub fn run_audit(cfg: &AuditConfig) -> Result<AuditDriverOutput> {
    if cfg.pairs == 0 || cfg.lambda_grid.is_empty() {
        return Err(Error::invalid("audit needs pairs and at least one lambda"));
    }
    let family = toy_grid_family(cfg.pairs, cfg.seed)?;
    let l1 = public_l1_bound(&family[0].left)?;
    let mut softmax = Vec::new();
    let mut argmin = Vec::new();
    for &lambda in &cfg.lambda_grid {
        softmax.push((
            lambda,
            audit_dp(AuditMechanism::SoftmaxExact, &family, lambda, l1, cfg.probes, cfg.seed)?,
        ));
        argmin.push((
            lambda,
            audit_dp(
                AuditMechanism::NoisyArgminMc { draws: cfg.draws },
                &family,
                lambda,
                l1,
                cfg.probes,
                cfg.seed,
            )?,
        ));
    }
    Ok(AuditDriverOutput { softmax, argmin })
}

/// Writes `audit.csv` (per-pair rows of the exact softmax audit at the
/// first temperature) and `audit_summary.csv` under `dir`.
pub fn write_audit_outputs(dir: &Path, out: &AuditDriverOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    if let Some((_, first)) = out.softmax.first() {
        fs::write(dir.join("audit.csv"), first.to_csv())?;
    }
    fs::write(dir.join("audit_summary.csv"), out.summary_csv())?;
    Ok(())
}

/// Builds the bounded worker pool: an explicit request wins, then the
/// `QDPLASSO_THREADS` environment variable, then `min(cores, cells)`.
pub fn thread_pool(requested: Option<usize>, cells: usize) -> Result<rayon::ThreadPool> {
    let threads = match requested {
        Some(t) => t,
        None => match env::var("QDPLASSO_THREADS") {
            Ok(v) => v.trim().parse::<usize>().map_err(|_| {
                Error::invalid(format!("QDPLASSO_THREADS = {v:?} is not a thread count"))
            })?,
            Err(env::VarError::NotPresent) => {
                let cores = std::thread::available_parallelism().map(|c| c.get()).unwrap_or(1);
                cores.min(cells.max(1))
            }
            Err(e) => return Err(Error::invalid(format!("QDPLASSO_THREADS: {e}"))),
        },
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("worker pool: {e}")))
}

/// Parses `key = value` configuration text: one pair per line, `#` starts
/// a comment, blank lines are ignored. Later drivers overlay CLI flags on
/// top of these pairs.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => {
                out.push((k.trim().to_string(), v.trim().to_string()));
            }
            _ => {
                return Err(Error::invalid(format!(
                    "config line {}: expected key=value, got {:?}",
                    idx + 1,
                    raw.trim()
                )))
            }
        }
    }
    Ok(out)
}

/// One labelled polyline.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"];

/// Renders a simple line chart (axes, ticks, legend) as standalone SVG.
pub fn render_line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
) -> Result<String> {
    let finite: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    if finite.is_empty() {
        return Err(Error::degenerate("chart needs at least one finite point"));
    }
    let (mut x_lo, mut x_hi) = finite
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), (x, _)| (lo.min(*x), hi.max(*x)));
    let (mut y_lo, mut y_hi) = finite
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), (_, y)| (lo.min(*y), hi.max(*y)));
    if x_lo == x_hi {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    if y_lo == y_hi {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    let pad_x = 0.04 * (x_hi - x_lo);
    let pad_y = 0.06 * (y_hi - y_lo);
    x_lo -= pad_x;
    x_hi += pad_x;
    y_lo -= pad_y;
    y_hi += pad_y;

    let (width, height) = (800.0, 500.0);
    let (ml, mr, mt, mb) = (80.0, 170.0, 50.0, 60.0);
    let px = |x: f64| ml + (x - x_lo) / (x_hi - x_lo) * (width - ml - mr);
    let py = |y: f64| height - mb - (y - y_lo) / (y_hi - y_lo) * (height - mt - mb);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {width} {height}\" \
         font-family=\"sans-serif\" font-size=\"13\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        width / 2.0,
        xml_escape(title)
    ));
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n",
        height - mb,
        width - mr
    ));
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n",
        height - mb
    ));
    for i in 0..=4 {
        let fx = x_lo + (x_hi - x_lo) * i as f64 / 4.0;
        let fy = y_lo + (y_hi - y_lo) * i as f64 / 4.0;
        let (tx, ty) = (px(fx), py(fy));
        svg.push_str(&format!(
            "<line x1=\"{tx}\" y1=\"{0}\" x2=\"{tx}\" y2=\"{1}\" stroke=\"black\"/>\n",
            height - mb,
            height - mb + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{tx}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            height - mb + 20.0,
            fmt_tick(fx)
        ));
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{ty}\" x2=\"{ml}\" y2=\"{ty}\" stroke=\"black\"/>\n",
            ml - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            ml - 9.0,
            ty + 4.0,
            fmt_tick(fy)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        (ml + width - mr) / 2.0,
        height - 15.0,
        xml_escape(x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"20\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {0})\">{1}</text>\n",
        (mt + height - mb) / 2.0,
        xml_escape(y_label)
    ));
    // Series.
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .copied()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        if pts.len() > 1 {
            let path: Vec<String> =
                pts.iter().map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
                path.join(" ")
            ));
        }
        for (x, y) in &pts {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"{color}\"/>\n",
                px(*x),
                py(*y)
            ));
        }
        let ly = mt + 14.0 + 20.0 * i as f64;
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"14\" height=\"14\" fill=\"{color}\"/>\n",
            width - mr + 20.0,
            ly - 11.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{ly}\">{}</text>\n",
            width - mr + 40.0,
            xml_escape(&s.label)
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Renders and writes a line chart to `path`.
pub fn write_line_chart(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
) -> Result<()> {
    let svg = render_line_chart(title, x_label, y_label, series)?;
    fs::write(path, svg)?;
    Ok(())
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (0.01..10_000.0).contains(&a) {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn tiny_sweep_config() -> ExperimentConfig {
        ExperimentConfig {
            n: 24,
            d: 8,
            s_star: 2,
            eps_grid: vec![0.5, 1.0],
            delta: 0.05,
            trials: 2,
            reference_t: 200,
            threads: Some(2),
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn method_tokens_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::parse(m.name()).unwrap(), m);
        }
        assert!(Method::parse("quantum").is_err());
    }

    #[test]
    fn kv_parser_handles_comments_and_errors() {
        let parsed = parse_kv("# header\n n = 12 \n\neps-grid = 0.1,1.0 # inline\n").unwrap();
        assert_eq!(
            parsed,
            vec![
                ("n".to_string(), "12".to_string()),
                ("eps-grid".to_string(), "0.1,1.0".to_string())
            ]
        );
        assert!(parse_kv("flag-without-value\n").is_err());
        assert!(parse_kv("= 3\n").is_err());
    }

    #[test]
    fn pool_respects_explicit_thread_count() {
        let pool = thread_pool(Some(2), 100).unwrap();
        assert_eq!(pool.current_num_threads(), 2);
    }

    #[test]
    fn sweep_is_deterministic_and_sorted() {
        let cfg = tiny_sweep_config();
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(a.rows.len(), 8);
        for (ra, rb) in a.rows.iter().zip(b.rows.iter()) {
            assert_eq!(ra.method, rb.method);
            assert_eq!(ra.trial, rb.trial);
            assert_eq!(ra.epsilon, rb.epsilon);
            assert_eq!(ra.recon_error.to_bits(), rb.recon_error.to_bits());
            assert_eq!(ra.queries_alpha, rb.queries_alpha);
            assert_eq!(ra.t_total, rb.t_total);
        }
        // Sorted by (method order, epsilon, trial).
        let keys: Vec<(Method, u64, usize)> =
            a.rows.iter().map(|r| (r.method, r.epsilon.to_bits(), r.trial)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert_eq!(a.summary.len(), 4);
        assert_eq!(a.aborts(), 0);
        for r in &a.rows {
            assert!(r.recon_error.is_finite());
        }
    }

    #[test]
    fn sweep_rejects_private_method_on_raw_data() {
        let cfg = ExperimentConfig {
            norm: None,
            ..tiny_sweep_config()
        };
        assert!(run_sweep(&cfg).is_err());
    }

    #[test]
    fn sweep_outputs_are_written() {
        let dir = tempdir().unwrap();
        let out = run_sweep(&tiny_sweep_config()).unwrap();
        write_sweep_outputs(dir.path(), &out).unwrap();
        let results = fs::read_to_string(dir.path().join("results.csv")).unwrap();
        assert!(results.starts_with(
            "trial,epsilon,method,recon_error,excess_risk,t_total,queries_alpha,proposals_total,wall_ms,status\n"
        ));
        assert_eq!(results.lines().count(), 9);
        let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(summary.lines().count(), 5);
        let svg = fs::read_to_string(dir.path().join("sweep.svg")).unwrap();
        assert!(svg.contains("<polyline"));
        assert!(svg.contains("qdp"));
    }

    #[test]
    fn scaling_slopes_split_the_methods() {
        // epsilon = 3 shrinks lambda and therefore the acceptance rate, so
        // each private fit draws hundreds of proposals; with 4 trials the
        // measured qdp slope is noise around zero, not small-count artifact.
        let cfg = ScalingConfig {
            d_grid: vec![8, 16, 32],
            n: 20,
            s_star: 2,
            epsilon: 3.0,
            t_fixed: 6,
            trials: 4,
            threads: Some(2),
            ..ScalingConfig::default()
        };
        let out = run_scaling(&cfg).unwrap();
        assert_eq!(out.rows.len(), 24);
        let qnp = out.slope(Method::Qnp, "queries_alpha").unwrap();
        let qdp = out.slope(Method::Qdp, "queries_alpha").unwrap();
        // Small-d budgets carry a visible log^2 term, so the window is loose.
        assert!((0.3..0.8).contains(&qnp), "qnp slope {qnp}");
        assert!(qdp.abs() < 0.3, "qdp slope {qdp}");
        let dir = tempdir().unwrap();
        write_scaling_outputs(dir.path(), &out).unwrap();
        assert!(dir.path().join("scaling.csv").exists());
        assert!(dir.path().join("slopes.csv").exists());
        assert!(dir.path().join("scaling.svg").exists());
    }

    #[test]
    fn audit_driver_passes_and_writes() {
        let cfg = AuditConfig {
            pairs: 6,
            lambda_grid: vec![1.0],
            draws: 2000,
            probes: 3,
            seed: 3,
        };
        let out = run_audit(&cfg).unwrap();
        assert!(out.all_passed());
        let dir = tempdir().unwrap();
        write_audit_outputs(dir.path(), &out).unwrap();
        let audit = fs::read_to_string(dir.path().join("audit.csv")).unwrap();
        assert!(audit.starts_with("pair_id,max_ratio,bound,margin\n"));
        assert_eq!(audit.lines().count(), 7);
        let summary = fs::read_to_string(dir.path().join("audit_summary.csv")).unwrap();
        assert!(summary.contains("softmax_exact"));
        assert!(summary.contains("laplace_argmin_mc"));
    }

    #[test]
    fn slope_of_exact_power_law_is_recovered() {
        let points: Vec<(f64, f64)> =
            [4.0f64, 16.0, 64.0].iter().map(|&x| (x, 3.0 * x.powf(0.5))).collect();
        let slope = loglog_slope(&points).unwrap();
        assert!((slope - 0.5).abs() < 1e-12);
        assert!(loglog_slope(&[(1.0, 2.0)]).is_err());
    }

    #[test]
    fn chart_renderer_rejects_empty_input() {
        assert!(render_line_chart("t", "x", "y", &[]).is_err());
        let s = [Series {
            label: "a<b".to_string(),
            points: vec![(0.0, 1.0), (1.0, 2.0)],
        }];
        let svg = render_line_chart("t", "x", "y", &s).unwrap();
        assert!(svg.contains("a&lt;b"));
        assert!(svg.ends_with("</svg>\n"));
    }
}
