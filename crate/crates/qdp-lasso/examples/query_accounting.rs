//! The cost model behind the query ledger, shown end to end.
//!
//! Four meters: matrix-entry and target-entry reads (1 unit each),
//! logical oracle preparations (charged ceil(t^2 sqrt(N) / varsigma)
//! units apiece), and minimum-finding runs (count only; their cost is the
//! preparations they consume). The theoretical cost table extrapolates
//! the same model to the asymptotic regimes of each fitter.

use qdp_lasso::{
    generate_synthetic, grover_queries, noisy_alpha, prep_units, theoretical_costs, OracleConfig,
    OracleKind, Purpose, QueryLedger, SparseIterate, Stream,
};

fn main() -> qdp_lasso::Result<()> {
    let (ds, _) = generate_synthetic(36, 6, 2, 9, 0.0)?;
    let cfg = OracleConfig::new(0.05, 0.02)?;
    let theta = SparseIterate::vertex(ds.d(), 2);
    let mut ledger = QueryLedger::new();
    let mut fail = Stream::new(9, Purpose::OracleFailure);

    println!(
        "one preparation at t = 3 costs {} units; a search run at d = {} consumes {} preparations",
        prep_units(3, ds.n(), cfg.varsigma()),
        ds.d(),
        grover_queries(ds.d())
    );

    for s in 1..=4 {
        let (value, ok) = noisy_alpha(&ds, &theta, 3, s, &cfg, 9, &mut fail, &mut ledger);
        println!("  query s = {s}: value {value:+.5}, success {ok}");
    }
    for kind in OracleKind::ALL {
        println!(
            "  {:<12} count {:>4}, charged {:>8.0}",
            kind.name(),
            ledger.count(kind),
            ledger.charged(kind)
        );
    }

    let costs = theoretical_costs(ds.n(), ds.d(), 40, cfg.varsigma(), 1.0, 1e-4)?;
    println!(
        "theoretical units at T = 40: classical {:.3e}, classical private {:.3e}, \
         quantum {:.3e}, quantum simulated {:.3e}, quantum private {:.3e}",
        costs.classical,
        costs.classical_private,
        costs.quantum_opt,
        costs.quantum_sim,
        costs.quantum_private
    );
    Ok(())
}
