//! Query-count scaling against the feature dimension.
//!
//! The simulated minimum-finding search pays about sqrt(2d) oracle
//! preparations per run, so its ledger counts grow with slope ~0.5 on
//! log-log axes. The private mechanism proposes uniformly and accepts by a
//! d-independent law, so its preparation counts stay flat. The driver fits
//! both fitters at a shared fixed horizon per dimension and reports
//! measured log-log slopes next to the analytic exponents.

use qdp_lasso::{run_scaling, write_scaling_outputs, Method, ScalingConfig};

fn main() -> qdp_lasso::Result<()> {
    let cfg = ScalingConfig {
        d_grid: vec![64, 128, 256, 512],
        trials: 3,
        ..ScalingConfig::default()
    };
    let out = run_scaling(&cfg)?;
    for s in &out.slopes {
        println!(
            "{} {:<13} measured slope {:+.4} (predicted {})",
            s.method, s.metric, s.measured_slope, s.predicted_exponent
        );
    }
    let qnp = out.slope(Method::Qnp, "queries_alpha").unwrap();
    let qdp = out.slope(Method::Qdp, "queries_alpha").unwrap();
    println!(
        "search scales like sqrt(d): {}; mechanism is dimension-independent: {}",
        (qnp - 0.5).abs() < 0.1,
        qdp.abs() < 0.1
    );
    let dir = std::env::temp_dir().join("qdp_lasso_scaling_study");
    write_scaling_outputs(&dir, &out)?;
    println!("artifacts in {}", dir.display());
    Ok(())
}
