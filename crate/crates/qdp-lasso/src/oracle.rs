//! Simulated quantum access to gradients: bounded-noise value oracle,
//! minimum finding, query accounting, and the non-private quantum-style
//! fitter.
//!
//! # Oracle contract
//!
//! A logical "preparation" returns an estimate of the gradient slice entry
//! `alpha_s` with two guarantees: on success (`ok = true`, probability
//! `1 - 2b` per preparation) the value is within `varsigma` of the exact
//! entry, and the estimate at index `s + d` is exactly the negation of the
//! estimate at `s`. The noise at `(iteration t, coordinate s mod d)` is
//! frozen: every query of that coordinate during iteration `t` sees the same
//! draw, uniform on `[-varsigma, varsigma]`. Failed preparations surface a
//! value displaced by exactly `2 * varsigma` from the exact entry (inflating
//! the base-half value, negated for the twin half, so antisymmetry still
//! holds) and are flagged through `ok` for callers that model post-selection.
//!
//! # Query accounting
//!
//! [`QueryLedger`] separates *logical* oracle cost from the cost of running
//! the classical simulation:
//!
//! * `AlphaPrep` counts logical preparations: one per direct query, and
//!   `ceil(22.5 sqrt(2d) + 1.4 log2(2d)^2)` per minimum-finding run (the
//!   search consumes that many preparations). Each preparation is charged
//!   `ceil(t^2 sqrt(N) / varsigma)` runtime units (1 unit when
//!   `varsigma = 0`, where the theoretical cost is unbounded and only counts
//!   are meaningful).
//! * `MinFindRun` counts search runs (charged zero; their cost is carried by
//!   the preparations above).
//! * `MatrixEntry` / `TargetEntry` count classical reads of `X` and `y`
//!   entries the simulator actually performs (memoized evaluations are not
//!   recounted), at one unit each.

use ndarray::{Array1, Array2};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::fw::{
    curvature_bound, fw_step, lipschitz_bound, residual, step_size, vertex_coord, AlphaVector,
    CurvatureMethod, FitReport, SparseIterate,
};
use crate::rng::{Purpose, Stream};

/// Noise half-width and failure probability of the simulated value oracle.
#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    varsigma: f64,
    b: f64,
}

impl OracleConfig {
    /// Validates `varsigma >= 0` and `b in [0, 1/2)`.
    pub fn new(varsigma: f64, b: f64) -> Result<OracleConfig> {
        if !varsigma.is_finite() || varsigma < 0.0 {
            return Err(Error::invalid(format!("varsigma = {varsigma} must be >= 0")));
        }
        if !b.is_finite() || !(0.0..0.5).contains(&b) {
            return Err(Error::invalid(format!("b = {b} must lie in [0, 1/2)")));
        }
        Ok(OracleConfig { varsigma, b })
    }

    /// Noise half-width.
    pub fn varsigma(&self) -> f64 {
        self.varsigma
    }

    /// Per-preparation failure probability is `2b`.
    pub fn b(&self) -> f64 {
        self.b
    }
}

/// Oracle kinds tracked by the ledger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OracleKind {
    /// Classical read of one `X` entry.
    MatrixEntry,
    /// Classical read of one `y` entry.
    TargetEntry,
    /// Logical preparation of a noisy gradient value.
    AlphaPrep,
    /// One minimum-finding run.
    MinFindRun,
}

impl OracleKind {
    /// All kinds in ledger order.
    pub const ALL: [OracleKind; 4] = [
        OracleKind::MatrixEntry,
        OracleKind::TargetEntry,
        OracleKind::AlphaPrep,
        OracleKind::MinFindRun,
    ];

    /// Stable name used in CSV output.
    pub fn name(self) -> &'static str {
        match self {
            OracleKind::MatrixEntry => "matrix_entry",
            OracleKind::TargetEntry => "target_entry",
            OracleKind::AlphaPrep => "alpha_prep",
            OracleKind::MinFindRun => "min_find_run",
        }
    }

    fn index(self) -> usize {
        match self {
            OracleKind::MatrixEntry => 0,
            OracleKind::TargetEntry => 1,
            OracleKind::AlphaPrep => 2,
            OracleKind::MinFindRun => 3,
        }
    }
}

/// Per-kind query counts and charged runtime units.
#[derive(Debug, Clone, Default)]
pub struct QueryLedger {
    counts: [u64; 4],
    charged: [f64; 4],
}

impl QueryLedger {
    /// Empty ledger.
    pub fn new() -> QueryLedger {
        QueryLedger::default()
    }

    /// Count for one kind.
    pub fn count(&self, kind: OracleKind) -> u64 {
        self.counts[kind.index()]
    }

    /// Charged units for one kind.
    pub fn charged(&self, kind: OracleKind) -> f64 {
        self.charged[kind.index()]
    }

    /// Total charged units across kinds.
    pub fn charged_total(&self) -> f64 {
        self.charged.iter().sum()
    }

    /// Adds `count` events of `kind`, charging `units` in total.
    pub fn add(&mut self, kind: OracleKind, count: u64, units: f64) {
        self.counts[kind.index()] += count;
        self.charged[kind.index()] += units;
    }

    /// Folds another ledger into this one.
    pub fn merge(&mut self, other: &QueryLedger) {
        for k in OracleKind::ALL {
            self.add(k, other.count(k), other.charged(k));
        }
    }

    /// CSV rows `oracle_kind,count,charged_budget` (with header).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("oracle_kind,count,charged_budget\n");
        for k in OracleKind::ALL {
            out.push_str(&format!("{},{},{}\n", k.name(), self.count(k), self.charged(k)));
        }
        out
    }
}

/// Runtime units charged per logical preparation at iteration `t`:
/// `ceil(t^2 sqrt(N) / varsigma)`, or 1 when `varsigma = 0` (count-only
/// mode; the theoretical preparation cost diverges as the tolerance goes to
/// zero).
pub fn prep_units(t: usize, n: usize, varsigma: f64) -> f64 {
    assert!(t >= 1, "iteration counter must be >= 1");
    if varsigma == 0.0 {
        return 1.0;
    }
    ((t * t) as f64 * (n as f64).sqrt() / varsigma).ceil()
}

/// Oracle queries consumed by one minimum-finding run over `2d` items:
/// `22.5 sqrt(2d) + 1.4 log2(2d)^2`.
pub fn grover_budget(d: usize) -> f64 {
    let two_d = 2.0 * d as f64;
    22.5 * two_d.sqrt() + 1.4 * two_d.log2().powi(2)
}

/// [`grover_budget`] rounded up to whole oracle preparations, as charged
/// per minimum-finding run.
pub fn grover_queries(d: usize) -> u64 {
    grover_budget(d).ceil() as u64
}

/// Frozen oracle noise for `(seed, t, coordinate)`, uniform on
/// `[-varsigma, varsigma]`.
fn frozen_noise(seed: u64, t: usize, coord: usize, varsigma: f64) -> f64 {
    if varsigma == 0.0 {
        return 0.0;
    }
    Stream::keyed(seed, Purpose::OracleNoise, &[t as u64, coord as u64])
        .uniform(-varsigma, varsigma)
}

/// A fully materialized noisy gradient view for one iteration: exact base
/// entries plus their frozen noise. Pure value reads, no failure modeling;
/// minimum finding searches over this view. Callers account for the
/// materialization cost when they build it.
#[derive(Debug, Clone)]
pub struct FrozenAlpha {
    noisy_base: Array1<f64>,
}

impl FrozenAlpha {
    /// Freezes noise over an exact gradient slice for iteration `t`.
    pub fn new(alpha: &AlphaVector, t: usize, seed: u64, cfg: &OracleConfig) -> FrozenAlpha {
        let noisy_base = Array1::from_shape_fn(alpha.d(), |j| {
            alpha.base()[j] + frozen_noise(seed, t, j, cfg.varsigma())
        });
        FrozenAlpha { noisy_base }
    }

    /// Feature dimension d.
    pub fn d(&self) -> usize {
        self.noisy_base.len()
    }

    /// Noisy value at signed vertex `s in 1..=2d`; antisymmetric exactly.
    pub fn value(&self, s: usize) -> f64 {
        let (coord, sign) = vertex_coord(s, self.d());
        sign * self.noisy_base[coord]
    }
}

/// Lazy per-iteration querier used by the rejection sampler: evaluates exact
/// base entries on demand (memoized, `N` matrix reads per fresh coordinate),
/// freezes noise per coordinate, and models per-preparation failure.
pub struct AlphaQuerier<'a> {
    xt: &'a Array2<f64>,
    z: &'a Array1<f64>,
    n: usize,
    t: usize,
    seed: u64,
    cfg: OracleConfig,
    cache: Vec<Option<f64>>,
    fail: Stream,
}

impl<'a> AlphaQuerier<'a> {
    /// Builds a querier over the contiguous transpose `xt` (d rows of length
    /// N) and the current residual `z` for iteration `t`.
    pub fn new(
        xt: &'a Array2<f64>,
        z: &'a Array1<f64>,
        t: usize,
        seed: u64,
        cfg: &OracleConfig,
    ) -> AlphaQuerier<'a> {
        let (d, n) = xt.dim();
        assert_eq!(z.len(), n, "residual length must match sample count");
        AlphaQuerier {
            xt,
            z,
            n,
            t,
            seed,
            cfg: *cfg,
            cache: vec![None; d],
            fail: Stream::keyed(seed, Purpose::OracleFailure, &[t as u64]),
        }
    }

    /// Iteration this querier serves.
    pub fn t(&self) -> usize {
        self.t
    }

    /// Feature dimension.
    pub fn d(&self) -> usize {
        self.cache.len()
    }

    fn exact_base(&mut self, coord: usize, ledger: &mut QueryLedger) -> f64 {
        if let Some(v) = self.cache[coord] {
            return v;
        }
        let v = -self.xt.row(coord).dot(self.z) / self.n as f64;
        ledger.add(OracleKind::MatrixEntry, self.n as u64, self.n as f64);
        self.cache[coord] = Some(v);
        v
    }

    /// One logical preparation of the value at signed vertex `s`. Returns
    /// `(value, ok)`; on failure (probability `2b`) the value sits at
    /// distance exactly `2 varsigma` from the exact entry.
    pub fn query(&mut self, s: usize, ledger: &mut QueryLedger) -> (f64, bool) {
        let d = self.cache.len();
        let (coord, sign) = vertex_coord(s, d);
        let exact = self.exact_base(coord, ledger);
        ledger.add(
            OracleKind::AlphaPrep,
            1,
            prep_units(self.t, self.n, self.cfg.varsigma()),
        );
        let failed = self.cfg.b() > 0.0 && self.fail.coin(2.0 * self.cfg.b());
        if failed {
            (sign * (exact + 2.0 * self.cfg.varsigma()), false)
        } else {
            let noisy = exact + frozen_noise(self.seed, self.t, coord, self.cfg.varsigma());
            (sign * noisy, true)
        }
    }
}

/// One-shot contract-level query of the noisy gradient oracle at iterate
/// `theta`, iteration `t`, signed vertex `s`. Builds the residual (charging
/// `N` target reads and `N * nnz(theta)` matrix reads), evaluates the
/// column (another `N` matrix reads), and performs one logical preparation.
///
/// The value noise is frozen by `(seed, t, s mod d)`; the failure coin is
/// drawn fresh from `fail_rng` per call, since every call is a new
/// preparation.
#[allow(clippy::too_many_arguments)]
pub fn noisy_alpha(
    ds: &Dataset,
    theta: &SparseIterate,
    t: usize,
    s: usize,
    cfg: &OracleConfig,
    seed: u64,
    fail_rng: &mut Stream,
    ledger: &mut QueryLedger,
) -> (f64, bool) {
    let n = ds.n();
    let d = ds.d();
    assert!(s >= 1 && s <= 2 * d, "vertex index {s} out of 1..={}", 2 * d);
    let z = residual(ds, theta);
    ledger.add(OracleKind::TargetEntry, n as u64, n as f64);
    ledger.add(
        OracleKind::MatrixEntry,
        (n * theta.nnz()) as u64,
        (n * theta.nnz()) as f64,
    );
    let (coord, sign) = vertex_coord(s, d);
    let exact = -ds.x().column(coord).dot(&z) / n as f64;
    ledger.add(OracleKind::MatrixEntry, n as u64, n as f64);
    ledger.add(OracleKind::AlphaPrep, 1, prep_units(t, n, cfg.varsigma()));
    if cfg.b() > 0.0 && fail_rng.coin(2.0 * cfg.b()) {
        (sign * (exact + 2.0 * cfg.varsigma()), false)
    } else {
        (sign * (exact + frozen_noise(seed, t, coord, cfg.varsigma())), true)
    }
}

/// How minimum-finding runs are simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinFindMode {
    /// Each run returns the true argmin of the accessor with probability
    /// exactly 1/2, otherwise a uniform index. Matches the guarantee the
    /// search is analyzed with and keeps tests exact.
    StochasticModel,
    /// Classical walk through the search's marked-set recursion: repeatedly
    /// draw uniformly among items no worse than the current pivot, paying
    /// `sqrt(2d / marked)` queries per draw, until the per-run budget is
    /// spent. Typically succeeds more often than 1/2.
    ClassicalAnalog,
}

/// Mode and repetition count for minimum finding.
#[derive(Debug, Clone, Copy)]
pub struct MinFindConfig {
    pub mode: MinFindMode,
    /// Number of independent runs; the best candidate wins.
    pub runs: usize,
}

/// Repetitions needed to push the miss probability of a 1/2-success search
/// below `2b`: `ceil(log2(1 / (2b)))`, clamped to `1..=64` (the clamp only
/// binds for `b = 0`, where no finite count reaches certainty).
pub fn boost_runs(b: f64) -> usize {
    if b <= 0.0 {
        return 64;
    }
    let raw = (1.0 / (2.0 * b)).log2().ceil();
    raw.clamp(1.0, 64.0) as usize
}

/// Simulated minimum finding over signed vertices `1..=2d`.
///
/// Runs `cfg.runs` independent searches and returns the index with the
/// smallest accessor value among the candidates (ties to the lowest index).
/// Each run charges `ceil(grover_budget(d))` logical preparations at
/// `prep_cost` units apiece.
pub fn min_find<F: FnMut(usize) -> f64>(
    mut accessor: F,
    d: usize,
    cfg: &MinFindConfig,
    prep_cost: f64,
    rng: &mut Stream,
    ledger: &mut QueryLedger,
) -> usize {
    assert!(d >= 1, "need at least one coordinate");
    assert!(cfg.runs >= 1, "need at least one run");
    let two_d = 2 * d;
    let values: Vec<f64> = (1..=two_d).map(&mut accessor).collect();
    let scan_argmin = || -> usize {
        let mut best = 1;
        for s in 2..=two_d {
            if values[s - 1] < values[best - 1] {
                best = s;
            }
        }
        best
    };

    let mut best: Option<(usize, f64)> = None;
    for _ in 0..cfg.runs {
        let queries = grover_queries(d);
        ledger.add(OracleKind::MinFindRun, 1, 0.0);
        ledger.add(OracleKind::AlphaPrep, queries, queries as f64 * prep_cost);

        let candidate = match cfg.mode {
            MinFindMode::StochasticModel => {
                if rng.coin(0.5) {
                    scan_argmin()
                } else {
                    1 + rng.below(two_d as u64) as usize
                }
            }
            MinFindMode::ClassicalAnalog => {
                let budget = grover_budget(d);
                let mut used = 0.0;
                let mut k = 1 + rng.below(two_d as u64) as usize;
                while used < budget {
                    let pivot = values[k - 1];
                    let marked: Vec<usize> =
                        (1..=two_d).filter(|&s| values[s - 1] <= pivot).collect();
                    used += (two_d as f64 / marked.len() as f64).sqrt();
                    k = marked[rng.below(marked.len() as u64) as usize];
                }
                k
            }
        };
        let cv = values[candidate - 1];
        best = match best {
            None => Some((candidate, cv)),
            Some((bi, bv)) => {
                if cv < bv || (cv == bv && candidate < bi) {
                    Some((candidate, cv))
                } else {
                    Some((bi, bv))
                }
            }
        };
    }
    best.expect("at least one run").0
}

/// Quantum-style non-private fit: per iteration, freeze a noisy gradient
/// view and locate its minimum with the boosted stochastic search
/// (`runs = boost_runs(b)`), then take a Frank-Wolfe step.
pub fn fit_quantum_sim(
    ds: &Dataset,
    t_total: usize,
    cfg: &OracleConfig,
    seed: u64,
) -> Result<(FitReport, QueryLedger)> {
    let mf = MinFindConfig {
        mode: MinFindMode::StochasticModel,
        runs: boost_runs(cfg.b()),
    };
    fit_quantum_sim_with(ds, t_total, cfg, &mf, seed)
}

/// [`fit_quantum_sim`] with an explicit minimum-finding configuration.
pub fn fit_quantum_sim_with(
    ds: &Dataset,
    t_total: usize,
    cfg: &OracleConfig,
    mf: &MinFindConfig,
    seed: u64,
) -> Result<(FitReport, QueryLedger)> {
    if t_total == 0 {
        return Err(Error::invalid("iteration horizon must be >= 1"));
    }
    if mf.runs == 0 {
        return Err(Error::invalid("minimum finding needs at least one run"));
    }
    let n = ds.n();
    let nf = n as f64;
    let d = ds.d();
    let xt: Array2<f64> = ds.x().t().as_standard_layout().into_owned();

    let mut ledger = QueryLedger::new();
    let mut theta = SparseIterate::random_vertex(d, seed);
    let mut z = residual(ds, &theta);
    // Residual build: y read in full, one column per stored coefficient.
    ledger.add(OracleKind::TargetEntry, n as u64, nf);
    ledger.add(OracleKind::MatrixEntry, (n * theta.nnz()) as u64, (n * theta.nnz()) as f64);
    let initial_loss = z.iter().map(|v| v * v).sum::<f64>() / (2.0 * nf);

    let mut chosen = Vec::new();
    let mut losses = Vec::new();
    for t in 1..t_total {
        let base = xt.dot(&z) * (-1.0 / nf);
        ledger.add(OracleKind::MatrixEntry, (n * d) as u64, (n * d) as f64);
        let frozen = FrozenAlpha::new(&AlphaVector::from_base(base), t, seed, cfg);
        let mut rng = Stream::keyed(seed, Purpose::MinFind, &[t as u64]);
        let k = min_find(
            |s| frozen.value(s),
            d,
            mf,
            prep_units(t, n, cfg.varsigma()),
            &mut rng,
            &mut ledger,
        );
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
        cf_bound: curvature_bound(ds, CurvatureMethod::Upper)?,
        l1_bound: lipschitz_bound(ds),
        excess_risk: None,
    };
    Ok((report, ledger))
}

/// Reference runtime shapes of the five approaches, constants set to 1 and
/// log factors dropped.
#[derive(Debug, Clone, Copy)]
pub struct CostTable {
    /// Classical non-private Lasso: `N + d`.
    pub classical: f64,
    /// Classical private Lasso: `N d^2`.
    pub classical_private: f64,
    /// Quantum non-private lower-bound shape: `sqrt(N) + sqrt(d)`.
    pub quantum_opt: f64,
    /// Simulated quantum non-private fit: `T^3 sqrt(N d) / varsigma`.
    pub quantum_sim: f64,
    /// Quantum private fit: `N^(5/2) eps^2 / varsigma` (no d dependence).
    pub quantum_private: f64,
}

/// Evaluates [`CostTable`] for one configuration. `_delta` is accepted for
/// signature stability; its influence sits in the dropped log factors.
pub fn theoretical_costs(
    n: usize,
    d: usize,
    t: usize,
    varsigma: f64,
    epsilon: f64,
    _delta: f64,
) -> Result<CostTable> {
    if n == 0 || d == 0 || t == 0 {
        return Err(Error::invalid("n, d, t must be positive"));
    }
    if varsigma <= 0.0 || epsilon <= 0.0 {
        return Err(Error::invalid("varsigma and epsilon must be positive"));
    }
    let (nf, df, tf) = (n as f64, d as f64, t as f64);
    Ok(CostTable {
        classical: nf + df,
        classical_private: nf * df * df,
        quantum_opt: nf.sqrt() + df.sqrt(),
        quantum_sim: tf.powi(3) * (nf * df).sqrt() / varsigma,
        quantum_private: nf.powf(2.5) * epsilon * epsilon / varsigma,
    })
}
