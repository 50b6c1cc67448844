//! The private index-selection mechanism and the differentially private
//! Frank-Wolfe fitter built on it.
//!
//! Each iteration must pick one of the `2d` signed vertices. Instead of
//! releasing the gradient slice, the mechanism samples an index from the
//! softmax-style law
//!
//! ```text
//! P(s) = exp(-|alpha_tilde_s + 2 L1| / lambda) / Z
//! ```
//!
//! realized by rejection sampling: propose `s` uniformly, query the noisy
//! oracle once, and accept with probability
//! `exp(-|alpha_tilde_s + 2 L1| / lambda)`. The shift `2 L1` (a public bound
//! on gradient magnitude) keeps every exponent nonpositive, so the
//! acceptance value is a probability with normalization constant 1. Failed
//! oracle preparations are rejected outright (post-selection), which leaves
//! the accepted-index law untouched because proposals are index-uniform.
//!
//! `lambda` is calibrated from `(epsilon, delta, T, N)` so that the
//! per-iteration privacy loss `8 / (lambda N)` composes to the requested
//! budget over `T` iterations. Before running, an examination gate verifies
//! `L1 / lambda < ln(1 / varsigma)`; past that threshold the acceptance
//! probability can drop below `varsigma^4`, the level the proposal cap was
//! sized for, and the fitter refuses to run rather than degrade privacy or
//! stall.
//!
//! `L1` must be a data-independent bound for the gate decision to be
//! privacy-safe, so the fitter derives it from the declared normalization
//! mode alone (see [`public_l1_bound`]); the value itself cancels from the
//! sampling law as long as it dominates every noisy gradient value.

use ndarray::Array2;

use crate::dataset::{Dataset, NormMode};
use crate::error::{Error, Result};
use crate::fw::{
    curvature_bound, fw_step, lipschitz_bound, residual, step_size, vertex_coord,
    CurvatureMethod, FitReport, SparseIterate,
};
use crate::oracle::{AlphaQuerier, FrozenAlpha, OracleConfig, OracleKind, QueryLedger};
use crate::rng::{Purpose, Stream};

/// Privacy bookkeeping attached to one private fit.
#[derive(Debug, Clone, Copy)]
pub struct PrivacyParams {
    /// Total privacy budget.
    pub epsilon: f64,
    /// Failure probability of the (epsilon, delta) guarantee.
    pub delta: f64,
    /// Iteration horizon T.
    pub t_total: usize,
    /// Softmax temperature.
    pub lambda: f64,
    /// Public gradient-magnitude bound used for the exponent shift and gate.
    pub l1_const: f64,
    /// Per-iteration privacy loss `8 / (lambda N)`.
    pub eps_step: f64,
    /// Proposal cap per iteration.
    pub m_cap: u64,
}

impl PrivacyParams {
    /// Calibrates lambda and the per-step loss for the given budget.
    pub fn calibrated(
        epsilon: f64,
        delta: f64,
        t_total: usize,
        n: usize,
        l1_const: f64,
        m_cap: u64,
    ) -> Result<PrivacyParams> {
        let lambda = calibrate_lambda(epsilon, delta, t_total, n)?;
        Ok(PrivacyParams {
            epsilon,
            delta,
            t_total,
            lambda,
            l1_const,
            eps_step: 8.0 / (lambda * n as f64),
            m_cap,
        })
    }
}

/// One sampled iteration of the mechanism.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    /// Iteration counter.
    pub t: usize,
    /// Proposals consumed (including rejected and failed ones).
    pub proposals_used: u64,
    /// Accepted signed-vertex index.
    pub accepted_index: usize,
    /// Acceptance probability of the winning proposal.
    pub acceptance_prob: f64,
    /// Sum of acceptance probabilities over the iteration's proposals.
    pub prob_checksum: f64,
}

/// Per-iteration sampling record of a private fit.
#[derive(Debug, Clone, Default)]
pub struct MechanismTrace {
    pub rows: Vec<TraceRow>,
}

impl MechanismTrace {
    /// Total proposals across iterations.
    pub fn proposals_total(&self) -> u64 {
        self.rows.iter().map(|r| r.proposals_used).sum()
    }

    /// CSV rows `t,proposals_used,accepted_index,acceptance_prob`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,proposals_used,accepted_index,acceptance_prob\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.t, r.proposals_used, r.accepted_index, r.acceptance_prob
            ));
        }
        out
    }
}

/// Iteration horizon balancing optimization error against per-step noise:
/// `max(1, round((cf N epsilon)^(2/3) / ln(1/delta)^(1/3)))`.
pub fn choose_t(epsilon: f64, delta: f64, n: usize, cf: f64) -> Result<usize> {
    check_eps_delta(epsilon, delta)?;
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    if !cf.is_finite() || cf <= 0.0 {
        return Err(Error::invalid(format!("curvature bound {cf} must be positive")));
    }
    let raw = (cf * n as f64 * epsilon).powf(2.0 / 3.0) / (1.0 / delta).ln().powf(1.0 / 3.0);
    Ok(raw.round().max(1.0) as usize)
}

/// Softmax temperature for budget `(epsilon, delta)` over `t_total`
/// iterations: `sqrt(2 t_total ln(1/delta)) * 8 / (epsilon N)`.
pub fn calibrate_lambda(epsilon: f64, delta: f64, t_total: usize, n: usize) -> Result<f64> {
    check_eps_delta(epsilon, delta)?;
    if t_total == 0 || n == 0 {
        return Err(Error::invalid("t_total and n must be positive"));
    }
    Ok((2.0 * t_total as f64 * (1.0 / delta).ln()).sqrt() * 8.0 / (epsilon * n as f64))
}

fn check_eps_delta(epsilon: f64, delta: f64) -> Result<()> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::invalid(format!("epsilon = {epsilon} must be positive")));
    }
    if !delta.is_finite() || delta <= 0.0 || delta >= 1.0 {
        return Err(Error::invalid(format!("delta = {delta} must lie in (0, 1)")));
    }
    Ok(())
}

/// Pre-run examination gate: refuses the mechanism when
/// `l1 / lambda >= ln(1 / varsigma)` (inclusive at the boundary). Passing
/// the gate guarantees the per-proposal acceptance probability stays above
/// `varsigma^4`. `varsigma = 0` never gates (the threshold is infinite).
pub fn examination_gate(l1: f64, lambda: f64, varsigma: f64) -> Result<()> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::invalid(format!("lambda = {lambda} must be positive")));
    }
    if l1 < 0.0 || varsigma < 0.0 {
        return Err(Error::invalid("l1 and varsigma must be >= 0"));
    }
    let ratio = l1 / lambda;
    let threshold = (1.0 / varsigma).ln();
    if ratio >= threshold {
        return Err(Error::GateAbort {
            l1,
            lambda,
            varsigma,
            ratio,
            threshold,
        });
    }
    Ok(())
}

/// Acceptance probability of a proposal with noisy value `alpha_tilde`:
/// `exp(-|alpha_tilde + 2 l1| / lambda)`, the squared success amplitude of
/// the mechanism's ancilla measurement. With `|alpha_tilde| <= l1 + varsigma`
/// and `varsigma <= l1` the absolute value never flips sign.
pub fn acceptance_probability(alpha_tilde: f64, l1: f64, lambda: f64) -> f64 {
    assert!(lambda > 0.0, "lambda must be positive");
    assert!(l1 >= 0.0, "l1 must be >= 0");
    (-(alpha_tilde + 2.0 * l1).abs() / lambda).exp()
}

/// Proposal cap sized so that the probability of `m_cap` consecutive
/// rejections under a gate-passing configuration stays below `b`:
/// `ceil(ln(1/b) / (4 varsigma^4))`, saturating at `u64::MAX`.
pub fn m_cap(varsigma: f64, b: f64) -> Result<u64> {
    if !varsigma.is_finite() || varsigma <= 0.0 {
        return Err(Error::invalid(format!("varsigma = {varsigma} must be positive")));
    }
    if !b.is_finite() || b <= 0.0 || b >= 1.0 {
        return Err(Error::invalid(format!("b = {b} must lie in (0, 1)")));
    }
    let raw = ((1.0 / b).ln() / (4.0 * varsigma.powi(4))).ceil();
    if raw >= u64::MAX as f64 {
        return Ok(u64::MAX);
    }
    Ok(raw as u64)
}

/// Data-independent gradient-magnitude bound implied by the declared
/// normalization mode:
///
/// * Frobenius (`||X||_F <= 1`, `||y||_inf <= 1`): every directional
///   derivative is at most `(sqrt(N) + 1) / N` in magnitude.
/// * InfNorm (entries of `X` and `y` within 1): at most 2.
///
/// Raw datasets have no public bound; callers must supply one explicitly.
pub fn public_l1_bound(ds: &Dataset) -> Result<f64> {
    match ds.norm_mode() {
        Some(NormMode::Frobenius) => {
            let n = ds.n() as f64;
            Ok((n.sqrt() + 1.0) / n)
        }
        Some(NormMode::InfNorm) => Ok(2.0),
        None => Err(Error::invalid(
            "raw dataset has no public gradient bound; normalize it or supply l1 explicitly",
        )),
    }
}

/// Exact accepted-index law of the mechanism over signed vertices `1..=2d`
/// for a frozen noisy view. Used by tests and the privacy auditor.
pub fn exact_index_distribution(frozen: &FrozenAlpha, l1: f64, lambda: f64) -> Vec<f64> {
    let two_d = 2 * frozen.d();
    let weights: Vec<f64> = (1..=two_d)
        .map(|s| acceptance_probability(frozen.value(s), l1, lambda))
        .collect();
    let z: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / z).collect()
}

/// Inverse-CDF sampler for the exact law; the independent route against
/// which the rejection sampler is tested.
pub fn exact_sample_index(
    frozen: &FrozenAlpha,
    l1: f64,
    lambda: f64,
    rng: &mut Stream,
) -> usize {
    let probs = exact_index_distribution(frozen, l1, lambda);
    let u = rng.next_f64();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i + 1;
        }
    }
    probs.len()
}

/// Rejection-samples one index through the noisy oracle: uniform proposals,
/// one logical preparation each, acceptance by [`acceptance_probability`].
/// Failed preparations consume a proposal and are rejected. Errors with
/// [`Error::SamplerExhausted`] after `params.m_cap` proposals.
pub fn sample_index(
    querier: &mut AlphaQuerier,
    params: &PrivacyParams,
    rng: &mut Stream,
    ledger: &mut QueryLedger,
) -> Result<(usize, TraceRow)> {
    let two_d = 2 * querier.d();
    let mut checksum = 0.0;
    let mut proposals = 0u64;
    while proposals < params.m_cap {
        proposals += 1;
        let s = 1 + rng.below(two_d as u64) as usize;
        let (value, ok) = querier.query(s, ledger);
        if !ok {
            continue;
        }
        let p = acceptance_probability(value, params.l1_const, params.lambda);
        checksum += p;
        if rng.coin(p) {
            return Ok((
                s,
                TraceRow {
                    t: querier.t(),
                    proposals_used: proposals,
                    accepted_index: s,
                    acceptance_prob: p,
                    prob_checksum: checksum,
                },
            ));
        }
    }
    Err(Error::SamplerExhausted {
        iteration: querier.t(),
        cap: params.m_cap,
    })
}

/// Tuning knobs for [`fit_qdp_with`]; the defaults reproduce the calibrated
/// mechanism exactly.
#[derive(Debug, Clone, Copy, Default)]
pub struct QdpOptions {
    /// Fixed iteration horizon instead of [`choose_t`] (scaling studies).
    pub t_override: Option<usize>,
    /// Explicit proposal cap instead of [`m_cap`].
    pub m_cap_override: Option<u64>,
    /// Explicit public gradient bound instead of [`public_l1_bound`].
    pub l1_override: Option<f64>,
    /// Permit non-Frobenius datasets. The `4/N` sensitivity bound also holds
    /// under InfNorm bounds (entries of `X`, `y`, and residuals are all
    /// bounded by constants), so InfNorm runs remain private; raw datasets
    /// are the caller's responsibility.
    pub allow_non_frobenius: bool,
}

/// Everything a private fit produces.
#[derive(Debug, Clone)]
pub struct QdpOutcome {
    pub report: FitReport,
    pub params: PrivacyParams,
    pub trace: MechanismTrace,
    pub ledger: QueryLedger,
}

/// Differentially private Frank-Wolfe fit with the calibrated mechanism.
/// Requires a Frobenius-normalized dataset (see [`QdpOptions`] to override).
pub fn fit_qdp(
    ds: &Dataset,
    epsilon: f64,
    delta: f64,
    cfg: &OracleConfig,
    seed: u64,
) -> Result<QdpOutcome> {
    fit_qdp_with(ds, epsilon, delta, cfg, seed, &QdpOptions::default())
}

/// [`fit_qdp`] with explicit options.
pub fn fit_qdp_with(
    ds: &Dataset,
    epsilon: f64,
    delta: f64,
    cfg: &OracleConfig,
    seed: u64,
    opts: &QdpOptions,
) -> Result<QdpOutcome> {
    check_eps_delta(epsilon, delta)?;
    if ds.norm_mode() != Some(NormMode::Frobenius) && !opts.allow_non_frobenius {
        return Err(Error::invalid(
            "private fit expects a Frobenius-normalized dataset; \
             set allow_non_frobenius to run on other declared modes",
        ));
    }

    let n = ds.n();
    let nf = n as f64;
    let d = ds.d();
    let cf = curvature_bound(ds, CurvatureMethod::Upper)?;
    let t_total = match opts.t_override {
        Some(t) if t >= 1 => t,
        Some(_) => return Err(Error::invalid("t_override must be >= 1")),
        None => choose_t(epsilon, delta, n, cf)?,
    };
    let l1 = match opts.l1_override {
        Some(v) if v > 0.0 && v.is_finite() => v,
        Some(v) => return Err(Error::invalid(format!("l1_override = {v} must be positive"))),
        None => public_l1_bound(ds)?,
    };
    let cap = match opts.m_cap_override {
        Some(m) if m >= 1 => m,
        Some(_) => return Err(Error::invalid("m_cap_override must be >= 1")),
        // Noiseless or failure-free oracles have no finite cap requirement.
        None if cfg.varsigma() == 0.0 || cfg.b() == 0.0 => u64::MAX,
        None => m_cap(cfg.varsigma(), cfg.b())?,
    };
    let params = PrivacyParams::calibrated(epsilon, delta, t_total, n, l1, cap)?;
    examination_gate(params.l1_const, params.lambda, cfg.varsigma())?;

    let xt: Array2<f64> = ds.x().t().as_standard_layout().into_owned();
    let mut ledger = QueryLedger::new();
    let mut theta = SparseIterate::random_vertex(d, seed);
    let mut z = residual(ds, &theta);
    ledger.add(OracleKind::TargetEntry, n as u64, nf);
    ledger.add(OracleKind::MatrixEntry, (n * theta.nnz()) as u64, (n * theta.nnz()) as f64);
    let initial_loss = z.iter().map(|v| v * v).sum::<f64>() / (2.0 * nf);

    let mut trace = MechanismTrace::default();
    let mut chosen = Vec::new();
    let mut losses = Vec::new();
    for t in 1..t_total {
        let mut querier = AlphaQuerier::new(&xt, &z, t, seed, cfg);
        let mut rng = Stream::keyed(seed, Purpose::Proposal, &[t as u64]);
        let (k, row) = sample_index(&mut querier, &params, &mut rng, &mut ledger)?;
        trace.rows.push(row);
        theta = fw_step(&theta, k, t);
        let mu = step_size(t);
        let (coord, sign) = vertex_coord(k, d);
        let col = ds.x().column(coord);
        for (i, zi) in z.iter_mut().enumerate() {
            *zi = (1.0 - mu) * *zi + mu * (ds.y()[i] - sign * col[i]);
        }
        ledger.add(OracleKind::MatrixEntry, n as u64, nf);
        ledger.add(OracleKind::TargetEntry, n as u64, nf);
        chosen.push(k);
        losses.push(z.iter().map(|v| v * v).sum::<f64>() / (2.0 * nf));
    }

    let report = FitReport {
        iterate: theta,
        chosen_indices: chosen,
        losses,
        initial_loss,
        t_total,
        cf_bound: cf,
        l1_bound: lipschitz_bound(ds),
        excess_risk: None,
    };
    Ok(QdpOutcome {
        report,
        params,
        trace,
        ledger,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, normalize};
    use crate::fw::AlphaVector;
    use approx::assert_abs_diff_eq;
    use ndarray::Array1;

    #[test]
    fn choose_t_hand_value_and_floor() {
        // (1 * 1000 * 1)^(2/3) / ln(e)^(1/3) = 100.
        let delta = (-1.0f64).exp();
        assert_eq!(choose_t(1.0, delta, 1000, 1.0).unwrap(), 100);
        // Tiny curvature floors at 1.
        assert_eq!(choose_t(1.0, delta, 10, 1e-9).unwrap(), 1);
        assert!(choose_t(0.0, delta, 10, 1.0).is_err());
        assert!(choose_t(1.0, 1.0, 10, 1.0).is_err());
    }

    #[test]
    fn lambda_hand_value() {
        // sqrt(2 * 8 * 1) * 8 / (1 * 32) = 4 * 8 / 32 = 1.
        let delta = (-1.0f64).exp();
        let lambda = calibrate_lambda(1.0, delta, 8, 32).unwrap();
        assert_abs_diff_eq!(lambda, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gate_examples() {
        // l1/lambda = 10 >= ln(100) = 4.6: abort.
        assert!(matches!(
            examination_gate(1.0, 0.1, 0.01),
            Err(Error::GateAbort { .. })
        ));
        // l1 = 0 passes for any positive lambda.
        examination_gate(0.0, 0.1, 0.01).unwrap();
        // Exact boundary (ratio == threshold) aborts: ratio 1, ln(1/e^-1) = 1.
        assert!(examination_gate(1.0, 1.0, (-1.0f64).exp()).is_err());
        // Noiseless oracle never gates.
        examination_gate(1e12, 0.1, 0.0).unwrap();
    }

    #[test]
    fn acceptance_probability_hand_values() {
        let l1 = 0.7;
        let lambda = 2.0 * l1;
        // alpha = -l1: exp(-l1 / (2 l1)) = e^(-1/2).
        assert_abs_diff_eq!(
            acceptance_probability(-l1, l1, lambda),
            (-0.5f64).exp(),
            epsilon = 1e-15
        );
        // alpha = +l1: exp(-3/2).
        assert_abs_diff_eq!(
            acceptance_probability(l1, l1, lambda),
            (-1.5f64).exp(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn conditional_law_hand_value_d1() {
        // d = 1, alpha_tilde = (-l1, +l1), lambda = 2 l1:
        // P(1) = e^-0.5 / (e^-0.5 + e^-1.5) = 1 / (1 + e^-1) ~ 0.7311.
        let l1 = 0.35;
        let cfg = OracleConfig::new(0.0, 0.0).unwrap();
        let frozen = FrozenAlpha::new(&AlphaVector::from_base(Array1::from(vec![-l1])), 1, 0, &cfg);
        let probs = exact_index_distribution(&frozen, l1, 2.0 * l1);
        assert_abs_diff_eq!(probs[0], 1.0 / (1.0 + (-1.0f64).exp()), epsilon = 1e-12);
        assert_abs_diff_eq!(probs.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn m_cap_hand_value() {
        // ln(100) / (4 * 0.1^4) = 4.60517 / 4e-4 = 11512.9 -> 11513.
        assert_eq!(m_cap(0.1, 0.01).unwrap(), 11513);
        assert!(m_cap(0.0, 0.01).is_err());
        assert!(m_cap(0.1, 0.0).is_err());
    }

    #[test]
    fn gate_pass_implies_acceptance_floor() {
        // Whenever the gate passes and varsigma <= l1, every acceptance
        // probability is at least exp(-4 l1 / lambda) > varsigma^4.
        let mut rng = Stream::new(5, Purpose::Audit);
        let mut checked = 0;
        while checked < 200 {
            let l1 = rng.uniform(0.05, 2.0);
            let varsigma = rng.uniform(1e-3, l1.min(0.9));
            let lambda = rng.uniform(0.05, 5.0);
            if examination_gate(l1, lambda, varsigma).is_err() {
                continue;
            }
            checked += 1;
            let floor = (-4.0 * l1 / lambda).exp();
            assert!(floor > varsigma.powi(4));
            // Worst noisy value within the contract: |alpha| <= l1 + varsigma.
            let worst = acceptance_probability(l1 + varsigma, l1, lambda);
            assert!(worst >= floor - 1e-15, "worst {worst} floor {floor}");
        }
    }

    #[test]
    fn rejection_sampler_matches_exact_law() {
        // Empirical TV distance of the rejection route vs the inverse-CDF
        // law over 2d = 6 outcomes.
        let (ds, gt) = generate_synthetic(15, 3, 1, 2, 0.0).unwrap();
        let (ds, _) = normalize(ds, gt, NormMode::Frobenius).unwrap();
        let cfg = OracleConfig::new(0.01, 0.0).unwrap();
        let l1 = public_l1_bound(&ds).unwrap();
        let lambda = 0.5;
        let params = PrivacyParams {
            epsilon: 1.0,
            delta: 0.01,
            t_total: 2,
            lambda,
            l1_const: l1,
            eps_step: 8.0 / (lambda * 15.0),
            m_cap: u64::MAX,
        };
        let theta = SparseIterate::random_vertex(3, 7);
        let z = residual(&ds, &theta);
        let xt = ds.x().t().as_standard_layout().into_owned();
        let frozen = FrozenAlpha::new(&crate::fw::gradient_slice(&ds, &theta), 1, 7, &cfg);
        let probs = exact_index_distribution(&frozen, l1, lambda);

        let mut rng = Stream::new(99, Purpose::Proposal);
        let mut ledger = QueryLedger::new();
        let draws = 20_000;
        let mut counts = [0u32; 6];
        for _ in 0..draws {
            let mut querier = AlphaQuerier::new(&xt, &z, 1, 7, &cfg);
            let (k, _) = sample_index(&mut querier, &params, &mut rng, &mut ledger).unwrap();
            counts[k - 1] += 1;
        }
        let tv: f64 = counts
            .iter()
            .zip(probs.iter())
            .map(|(c, p)| (*c as f64 / draws as f64 - p).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.02, "tv {tv}");
    }

    #[test]
    fn near_uniform_when_lambda_dominates() {
        let cfg = OracleConfig::new(0.0, 0.0).unwrap();
        let base = Array1::from(vec![0.02, -0.015, 0.01, 0.0]);
        let frozen = FrozenAlpha::new(&AlphaVector::from_base(base), 1, 0, &cfg);
        let probs = exact_index_distribution(&frozen, 0.02, 50.0);
        let (min, max) = probs
            .iter()
            .fold((f64::MAX, f64::MIN), |(lo, hi), p| (lo.min(*p), hi.max(*p)));
        assert!(max / min < 1.01, "spread {}", max / min);
    }

    #[test]
    fn private_fit_is_deterministic_and_feasible() {
        let (ds, gt) = generate_synthetic(40, 12, 3, 4, 0.0).unwrap();
        let (ds, _) = normalize(ds, gt, NormMode::Frobenius).unwrap();
        let cfg = OracleConfig::new(0.01, 0.01).unwrap();
        let opts = QdpOptions {
            t_override: Some(6),
            ..QdpOptions::default()
        };
        let a = fit_qdp_with(&ds, 1.0, 0.01, &cfg, 11, &opts).unwrap();
        let b = fit_qdp_with(&ds, 1.0, 0.01, &cfg, 11, &opts).unwrap();
        assert_eq!(a.report.chosen_indices, b.report.chosen_indices);
        assert_eq!(a.trace.proposals_total(), b.trace.proposals_total());
        assert!(a.report.iterate.l1_norm() <= 1.0 + 1e-12);
        assert_eq!(a.trace.rows.len(), 5);
        assert_abs_diff_eq!(
            a.params.lambda,
            calibrate_lambda(1.0, 0.01, 6, 40).unwrap(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            a.params.eps_step,
            8.0 / (a.params.lambda * 40.0),
            epsilon = 1e-15
        );
    }

    #[test]
    fn private_fit_requires_declared_frobenius_by_default() {
        let (ds, _) = generate_synthetic(20, 5, 2, 3, 0.0).unwrap();
        let cfg = OracleConfig::new(0.01, 0.01).unwrap();
        assert!(fit_qdp(&ds, 1.0, 0.01, &cfg, 0).is_err());
    }

    #[test]
    fn horizon_one_skips_sampling() {
        let (ds, gt) = generate_synthetic(30, 8, 2, 6, 0.0).unwrap();
        let (ds, _) = normalize(ds, gt, NormMode::Frobenius).unwrap();
        let cfg = OracleConfig::new(0.01, 0.01).unwrap();
        // Tiny curvature under Frobenius scaling: calibrated T hits the floor.
        let out = fit_qdp(&ds, 1.0, 0.01, &cfg, 9).unwrap();
        assert_eq!(out.params.t_total, 1);
        assert_eq!(out.trace.rows.len(), 0);
        assert_eq!(out.report.iterate.nnz(), 1);
    }
}
