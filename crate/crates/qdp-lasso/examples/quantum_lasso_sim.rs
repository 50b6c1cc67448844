//! Frank-Wolfe driven by a simulated quantum gradient oracle, with every
//! oracle interaction metered.
//!
//! The per-iteration vertex search is a minimum-finding routine whose
//! per-run oracle budget is 22.5 sqrt(2d) + 1.4 log2(2d)^2 preparations,
//! each preparation costing ceil(t^2 sqrt(N) / varsigma) elementary units.
//! A run finds the true minimum with probability at least 1/2, so runs are
//! repeated ceil(log2(1/(2b))) times and the best candidate wins. The query
//! ledger records logical preparations, matrix/target reads, and charged
//! budget separately.

use qdp_lasso::{
    boost_runs, fit_nonprivate, fit_quantum_sim, generate_synthetic, grover_queries, normalize,
    NormMode, OracleConfig, OracleKind,
};

fn main() -> qdp_lasso::Result<()> {
    let (raw, gt) = generate_synthetic(50, 8, 2, 11, 0.0)?;
    let (ds, _) = normalize(raw, gt, NormMode::InfNorm)?;
    let cfg = OracleConfig::new(0.01, 0.01)?;
    let t_total = 100;

    println!(
        "search: {} preparations per run at d = {}, {} boosted runs per iteration",
        grover_queries(ds.d()),
        ds.d(),
        boost_runs(cfg.b())
    );

    let (rep, ledger) = fit_quantum_sim(&ds, t_total, &cfg, 11)?;
    let exact = fit_nonprivate(&ds, t_total, 11)?;
    println!(
        "after {t_total} iterations: noisy-oracle loss {:.6}, exact loss {:.6}",
        rep.final_loss(),
        exact.final_loss()
    );
    for kind in OracleKind::ALL {
        println!(
            "  {:<12} count {:>9}, charged {:>14.0}",
            kind.name(),
            ledger.count(kind),
            ledger.charged(kind)
        );
    }

    // A noiseless, failure-free oracle reproduces exact Frank-Wolfe.
    let ideal = OracleConfig::new(0.0, 0.0)?;
    let (ideal_rep, _) = fit_quantum_sim(&ds, t_total, &ideal, 11)?;
    println!(
        "noiseless oracle matches exact Frank-Wolfe: {}",
        ideal_rep.chosen_indices == exact.chosen_indices
    );
    Ok(())
}
