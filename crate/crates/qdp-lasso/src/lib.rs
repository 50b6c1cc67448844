//! Differentially private sparse regression by Frank-Wolfe over the l1
//! ball, with a classically simulated quantum gradient oracle.
//!
//! The library provides four fitters sharing one iteration geometry
//! (vertex steps on the scaled l1 ball with step size `2/(t+2)`):
//!
//! * [`fw::fit_nonprivate`]: exact Frank-Wolfe, the accuracy ceiling.
//! * [`oracle::fit_quantum_sim`]: vertex selection through a simulated
//!   quantum minimum-finding routine over a noisy, failure-prone gradient
//!   oracle, with every oracle interaction metered in a [`oracle::QueryLedger`].
//! * [`mechanism::fit_qdp`]: the differentially private mechanism that
//!   rejection-samples vertices from a softmax law over noisy gradient
//!   values, calibrated to an `(epsilon, delta)` budget.
//! * [`privacy::fit_cdp_laplace`]: the classical report-noisy-argmin
//!   baseline at the same budget.
//!
//! [`privacy`] adds composition accounting and an empirical
//! differential-privacy auditor over enumerated neighboring datasets;
//! [`experiments`] drives reproducible multi-trial sweeps, scaling studies,
//! and audits, writing CSV and SVG artifacts.
//!
//! All randomness flows through counter-based keyed streams ([`rng`]), so
//! every fit, sweep cell, and audit is exactly reproducible from `(seed,
//! purpose)` pairs regardless of thread count.

pub mod dataset;
pub mod error;
pub mod experiments;
pub mod fw;
pub mod mechanism;
pub mod oracle;
pub mod privacy;
pub mod rng;

pub use dataset::{
    generate_synthetic, load_dataset, load_ground_truth, normalize, reconstruction_error,
    save_dataset, save_ground_truth, Dataset, GroundTruth, NormMode,
};
pub use error::{Error, Result};
pub use experiments::{
    parse_kv, run_audit, run_scaling, run_sweep, thread_pool, write_audit_outputs,
    write_line_chart, write_scaling_outputs, write_sweep_outputs, AuditConfig, AuditDriverOutput,
    ExperimentConfig, Method, ResultRow, RowStatus, ScalingConfig, ScalingOutput, ScalingRow,
    Series, SlopeRow, SummaryRow, SweepOutput,
};
pub use fw::{
    curvature_bound, fit_nonprivate, fw_step, gradient_slice, lipschitz_bound, loss,
    reference_loss, residual, step_size, vertex_coord, AlphaVector, CurvatureMethod, FitReport,
    SparseIterate,
};
pub use mechanism::{
    acceptance_probability, calibrate_lambda, choose_t, examination_gate, exact_index_distribution,
    exact_sample_index, fit_qdp, fit_qdp_with, m_cap, public_l1_bound, sample_index,
    MechanismTrace, PrivacyParams, QdpOptions, QdpOutcome, TraceRow,
};
pub use oracle::{
    boost_runs, fit_quantum_sim, fit_quantum_sim_with, grover_queries, min_find, noisy_alpha,
    prep_units, theoretical_costs, AlphaQuerier, CostTable, FrozenAlpha, MinFindConfig,
    MinFindMode, OracleConfig, OracleKind, QueryLedger,
};
pub use privacy::{
    audit_dp, compose, fit_cdp_laplace, per_step_epsilon, toy_grid_family, AuditMechanism,
    AuditReport, AuditRow, CompositionMode, NeighborPair,
};
pub use rng::{Purpose, Stream};
