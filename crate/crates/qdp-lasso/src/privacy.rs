//! Privacy accounting, the classical noisy-argmin baseline, and an
//! empirical differential-privacy auditor.
//!
//! Accounting follows advanced composition for `k` adaptive
//! `(eps_step, delta)`-private steps. The private fitter's per-step loss is
//! `eps_step = 8 / (lambda N)`, which pairs with [`calibrate_lambda`] so
//! that the leading composition term lands exactly on the requested budget.
//!
//! The auditor works on an enumerated family of neighboring dataset pairs
//! (differing in at most one sample row) small enough that per-step output
//! laws can be computed exactly for the softmax mechanism and estimated
//! tightly for the Laplace argmin baseline. Every measured likelihood ratio
//! is compared against the analytic bound `exp(8 / (lambda N))`.
//!
//! [`calibrate_lambda`]: crate::mechanism::calibrate_lambda

use ndarray::{Array1, Array2};

use crate::dataset::{Dataset, NormMode};
use crate::error::{Error, Result};
use crate::fw::{
    curvature_bound, fw_step, gradient_slice, lipschitz_bound, residual, AlphaVector,
    CurvatureMethod, FitReport, SparseIterate,
};
use crate::mechanism::acceptance_probability;
use crate::rng::{Purpose, Stream};

/// How to total `k` steps of per-step loss `eps_step` at failure level
/// `delta` per step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompositionMode {
    /// Advanced composition, both terms:
    /// `sqrt(2 k ln(1/delta)) eps + k eps (e^eps - 1)`.
    Full,
    /// Leading term only; what the horizon/temperature calibration inverts.
    LeadingTerm,
}

/// Total privacy loss of `k` adaptive `(eps_step, delta)` steps.
pub fn compose(eps_step: f64, delta: f64, k: usize, mode: CompositionMode) -> Result<f64> {
    if !eps_step.is_finite() || eps_step < 0.0 {
        return Err(Error::invalid(format!("eps_step = {eps_step} must be >= 0")));
    }
    if !delta.is_finite() || delta <= 0.0 || delta >= 1.0 {
        return Err(Error::invalid(format!("delta = {delta} must lie in (0, 1)")));
    }
    let k = k as f64;
    let leading = (2.0 * k * (1.0 / delta).ln()).sqrt() * eps_step;
    match mode {
        CompositionMode::LeadingTerm => Ok(leading),
        CompositionMode::Full => Ok(leading + k * eps_step * (eps_step.exp() - 1.0)),
    }
}

/// Per-iteration privacy loss of the softmax mechanism: `8 / (lambda N)`.
pub fn per_step_epsilon(lambda: f64, n: usize) -> Result<f64> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::invalid(format!("lambda = {lambda} must be positive")));
    }
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    Ok(8.0 / (lambda * n as f64))
}

/// Classical baseline: Frank-Wolfe with report-noisy-argmin vertex
/// selection. Each iteration adds `Laplace(2 * (4/N) / eps_step)` noise to
/// the `d` base gradient entries, extends antisymmetrically, and takes the
/// argmin; `eps_step` is chosen so the leading composition term over
/// `t_total` iterations equals `epsilon`. Initialization matches the other
/// fitters (same seeded vertex).
pub fn fit_cdp_laplace(
    ds: &Dataset,
    epsilon: f64,
    delta: f64,
    t_total: usize,
    seed: u64,
) -> Result<FitReport> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::invalid(format!("epsilon = {epsilon} must be positive")));
    }
    if !delta.is_finite() || delta <= 0.0 || delta >= 1.0 {
        return Err(Error::invalid(format!("delta = {delta} must lie in (0, 1)")));
    }
    if t_total == 0 {
        return Err(Error::invalid("t_total must be >= 1"));
    }
    let n = ds.n();
    let nf = n as f64;
    let d = ds.d();
    let eps_step = epsilon / (2.0 * t_total as f64 * (1.0 / delta).ln()).sqrt();
    let scale = 2.0 * (4.0 / nf) / eps_step;

    let mut theta = SparseIterate::random_vertex(d, seed);
    let mut z = residual(ds, &theta);
    let initial_loss = z.iter().map(|v| v * v).sum::<f64>() / (2.0 * nf);
    let mut chosen = Vec::new();
    let mut losses = Vec::new();
    for t in 1..t_total {
        let alpha = base_alpha(ds, &z);
        let mut noise = Stream::keyed(seed, Purpose::CdpNoise, &[t as u64]);
        let noisy = Array1::from_iter(alpha.iter().map(|a| a + noise.laplace(scale)));
        let k = AlphaVector::from_base(noisy).argmin_vertex();
        theta = fw_step(&theta, k, t);
        z = residual(ds, &theta);
        chosen.push(k);
        losses.push(z.iter().map(|v| v * v).sum::<f64>() / (2.0 * nf));
    }
    Ok(FitReport {
        iterate: theta,
        chosen_indices: chosen,
        losses,
        initial_loss,
        t_total,
        cf_bound: curvature_bound(ds, CurvatureMethod::Upper)?,
        l1_bound: lipschitz_bound(ds),
        excess_risk: None,
    })
}

fn base_alpha(ds: &Dataset, z: &Array1<f64>) -> Array1<f64> {
    let xt_view = ds.x().t();
    let xt = xt_view.as_standard_layout();
    let nf = ds.n() as f64;
    Array1::from_shape_fn(ds.d(), |j| -xt.row(j).dot(z) / nf)
}

/// A pair of datasets differing in at most one sample row.
#[derive(Debug, Clone)]
pub struct NeighborPair {
    pub id: usize,
    pub left: Dataset,
    pub right: Dataset,
}

impl NeighborPair {
    /// Validates shape, declared mode, and the at-most-one-row difference.
    pub fn new(id: usize, left: Dataset, right: Dataset) -> Result<NeighborPair> {
        if left.n() != right.n() || left.d() != right.d() {
            return Err(Error::invalid("neighboring datasets must share shape"));
        }
        if left.norm_mode() != right.norm_mode() {
            return Err(Error::invalid("neighboring datasets must share norm mode"));
        }
        let differing = (0..left.n())
            .filter(|&i| {
                left.y()[i] != right.y()[i]
                    || (0..left.d()).any(|j| left.x()[[i, j]] != right.x()[[i, j]])
            })
            .count();
        if differing > 1 {
            return Err(Error::invalid(format!(
                "datasets differ in {differing} rows; neighbors differ in at most one"
            )));
        }
        Ok(NeighborPair { id, left, right })
    }
}

/// Deterministic family of `count` neighboring pairs on a 3-sample,
/// 2-feature grid. Matrix entries come from `{-g, 0, g}` with
/// `g = 1/sqrt(6)` so every member satisfies `||X||_F <= 1` by
/// construction; targets come from `{-1, 0, 1}`. The right member replaces
/// one row of the left with a fresh grid row.
pub fn toy_grid_family(count: usize, seed: u64) -> Result<Vec<NeighborPair>> {
    let g = 1.0 / 6.0f64.sqrt();
    let x_grid = [-g, 0.0, g];
    let y_grid = [-1.0, 0.0, 1.0];
    let mut rng = Stream::new(seed, Purpose::Audit);
    let mut out = Vec::with_capacity(count);
    for id in 0..count {
        let mut x = Array2::zeros((3, 2));
        let mut y = Array1::zeros(3);
        for i in 0..3 {
            for j in 0..2 {
                x[[i, j]] = x_grid[rng.below(3) as usize];
            }
            y[i] = y_grid[rng.below(3) as usize];
        }
        let row = rng.below(3) as usize;
        let mut x2 = x.clone();
        let mut y2 = y.clone();
        for j in 0..2 {
            x2[[row, j]] = x_grid[rng.below(3) as usize];
        }
        y2[row] = y_grid[rng.below(3) as usize];
        let left = Dataset::new(x, y, Some(NormMode::Frobenius))?;
        let right = Dataset::new(x2, y2, Some(NormMode::Frobenius))?;
        out.push(NeighborPair::new(id, left, right)?);
    }
    Ok(out)
}

/// Which per-step release the auditor measures.
#[derive(Debug, Clone, Copy)]
pub enum AuditMechanism {
    /// Exact accepted-index law of the softmax mechanism.
    SoftmaxExact,
    /// Monte-Carlo law of the Laplace noisy-argmin baseline.
    NoisyArgminMc { draws: u64 },
}

/// One audited pair.
#[derive(Debug, Clone, Copy)]
pub struct AuditRow {
    pub pair_id: usize,
    /// Worst likelihood ratio over probe iterates and output indices.
    pub max_ratio: f64,
    /// Analytic per-step bound `exp(8 / (lambda N))`.
    pub bound: f64,
    /// `bound - max_ratio`.
    pub margin: f64,
}

/// Outcome of a differential-privacy audit over a neighbor family.
#[derive(Debug, Clone)]
pub struct AuditReport {
    pub rows: Vec<AuditRow>,
    /// Worst ratio over the whole family.
    pub max_ratio: f64,
    pub bound: f64,
    /// Worst observed gradient-entry gap between neighbors.
    pub sensitivity_max: f64,
    /// Analytic sensitivity bound `4/N`.
    pub sensitivity_bound: f64,
}

impl AuditReport {
    /// True when every measured ratio respects the analytic bound.
    pub fn passed(&self) -> bool {
        self.max_ratio <= self.bound && self.sensitivity_max <= self.sensitivity_bound + 1e-12
    }

    /// CSV rows `pair_id,max_ratio,bound,margin`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pair_id,max_ratio,bound,margin\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.pair_id, r.max_ratio, r.bound, r.margin
            ));
        }
        out
    }
}

/// Feasible probe iterates shared by both members of a pair: the origin,
/// the first positive and negative vertices, and seeded two-step mixes.
fn probe_iterates(d: usize, probes: usize, seed: u64) -> Vec<SparseIterate> {
    let mut out = vec![
        SparseIterate::zero(d),
        SparseIterate::vertex(d, 1),
        SparseIterate::vertex(d, d + 1),
    ];
    let mut rng = Stream::keyed(seed, Purpose::Audit, &[0xfeed]);
    while out.len() < probes.max(3) {
        let start = SparseIterate::vertex(d, 1 + rng.below(2 * d as u64) as usize);
        let mixed = fw_step(&start, 1 + rng.below(2 * d as u64) as usize, 1);
        out.push(fw_step(&mixed, 1 + rng.below(2 * d as u64) as usize, 2));
    }
    out.truncate(probes.max(3));
    out
}

/// Measures worst per-step likelihood ratios for `mech` over a neighbor
/// family, probing each pair at shared iterates, and compares them to
/// `exp(8 / (lambda N))`. Also records the worst gradient-entry gap
/// against its `4/N` bound. `l1` is the public shift used by the softmax
/// law; `seed` drives probe selection and Monte-Carlo noise.
pub fn audit_dp(
    mech: AuditMechanism,
    family: &[NeighborPair],
    lambda: f64,
    l1: f64,
    probes: usize,
    seed: u64,
) -> Result<AuditReport> {
    if family.is_empty() {
        return Err(Error::invalid("audit family must be non-empty"));
    }
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::invalid(format!("lambda = {lambda} must be positive")));
    }
    if l1 < 0.0 {
        return Err(Error::invalid("l1 must be >= 0"));
    }
    let n = family[0].left.n();
    let d = family[0].left.d();
    let eps_step = per_step_epsilon(lambda, n)?;
    let bound = eps_step.exp();
    let thetas = probe_iterates(d, probes, seed);

    let mut rows = Vec::with_capacity(family.len());
    let mut sensitivity_max = 0.0f64;
    for pair in family {
        let mut pair_ratio = 1.0f64;
        for theta in &thetas {
            let a_l = gradient_slice(&pair.left, theta);
            let a_r = gradient_slice(&pair.right, theta);
            for s in 1..=2 * d {
                sensitivity_max = sensitivity_max.max((a_l.value(s) - a_r.value(s)).abs());
            }
            let (p_l, p_r) = match mech {
                AuditMechanism::SoftmaxExact => {
                    (softmax_law(&a_l, l1, lambda), softmax_law(&a_r, l1, lambda))
                }
                AuditMechanism::NoisyArgminMc { draws } => {
                    let noise_seed = Stream::fork_seed(seed, Purpose::Audit, &[pair.id as u64]);
                    (
                        argmin_law_mc(&a_l, eps_step, n, draws, noise_seed),
                        argmin_law_mc(&a_r, eps_step, n, draws, noise_seed + 1),
                    )
                }
            };
            for s in 0..2 * d {
                // Ratios are meaningful only where both laws put stable mass;
                // the exact law is always positive, the MC law may hit zero
                // counts on far-tail outcomes.
                if p_l[s] > 0.0 && p_r[s] > 0.0 {
                    pair_ratio = pair_ratio.max(p_l[s] / p_r[s]).max(p_r[s] / p_l[s]);
                }
            }
        }
        rows.push(AuditRow {
            pair_id: pair.id,
            max_ratio: pair_ratio,
            bound,
            margin: bound - pair_ratio,
        });
    }
    let max_ratio = rows.iter().fold(1.0f64, |m, r| m.max(r.max_ratio));
    Ok(AuditReport {
        rows,
        max_ratio,
        bound,
        sensitivity_max,
        sensitivity_bound: 4.0 / n as f64,
    })
}

/// Exact accepted-index law of the softmax mechanism for a noiseless view.
fn softmax_law(alpha: &AlphaVector, l1: f64, lambda: f64) -> Vec<f64> {
    let two_d = 2 * alpha.d();
    let weights: Vec<f64> = (1..=two_d)
        .map(|s| acceptance_probability(alpha.value(s), l1, lambda))
        .collect();
    let z: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / z).collect()
}

/// Monte-Carlo law of Laplace noisy argmin at per-step budget `eps_step`.
fn argmin_law_mc(alpha: &AlphaVector, eps_step: f64, n: usize, draws: u64, seed: u64) -> Vec<f64> {
    let d = alpha.d();
    let scale = 2.0 * (4.0 / n as f64) / eps_step;
    let mut rng = Stream::new(seed, Purpose::CdpNoise);
    let mut counts = vec![0u64; 2 * d];
    for _ in 0..draws {
        let noisy =
            Array1::from_iter((1..=d).map(|s| alpha.value(s) + rng.laplace(scale)));
        counts[AlphaVector::from_base(noisy).argmin_vertex() - 1] += 1;
    }
    counts
        .into_iter()
        .map(|c| c as f64 / draws as f64)
        .collect()
}
