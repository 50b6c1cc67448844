//! One differentially private fit, showing the calibration chain and the
//! examination gate.
//!
//! From the budget (epsilon, delta) the fitter picks an iteration horizon
//! T, a softmax temperature lambda (so the per-step losses 8/(lambda N)
//! compose back to epsilon), and a proposal cap. A pre-run gate refuses to
//! sample when the public gradient bound is too large relative to lambda,
//! because past that point the acceptance probability can fall below the
//! level the cap was sized for.

use qdp_lasso::{
    fit_qdp, fit_qdp_with, generate_synthetic, normalize, reconstruction_error, Error, NormMode,
    OracleConfig, QdpOptions,
};

fn main() -> qdp_lasso::Result<()> {
    let (raw, gt) = generate_synthetic(200, 40, 5, 17, 0.0)?;
    let (ds, gt) = normalize(raw, gt, NormMode::Frobenius)?;
    let cfg = OracleConfig::new(0.01, 0.01)?;

    // Frobenius scaling keeps gradients small, so at this size the budget
    // calibrates to a one-step horizon: the output is just the (private)
    // random starting vertex and the sampler never runs.
    let out = fit_qdp(&ds, 1.0, 1e-4, &cfg, 17)?;
    println!(
        "calibrated: T = {}, lambda = {:.4}, eps_step = {:.4}, proposal cap = {}",
        out.params.t_total, out.params.lambda, out.params.eps_step, out.params.m_cap
    );
    println!(
        "fit: final loss {:.6}, recon error {:.4}, proposals used {}",
        out.report.final_loss(),
        reconstruction_error(&out.report.iterate.to_dense(), &gt)?,
        out.trace.proposals_total()
    );

    // Pinning a longer horizon shows the rejection sampler at work. Lambda
    // grows with T, so the index law is flatter but each step is cheap.
    let opts = QdpOptions {
        t_override: Some(12),
        ..QdpOptions::default()
    };
    let out = fit_qdp_with(&ds, 1.0, 1e-4, &cfg, 17, &opts)?;
    println!(
        "pinned T = {}: lambda = {:.4}, proposals used {}",
        out.params.t_total, out.params.lambda, out.trace.proposals_total()
    );
    for row in out.trace.rows.iter().take(3) {
        println!(
            "  t = {}: accepted s = {} after {} proposals (acceptance prob {:.4})",
            row.t, row.accepted_index, row.proposals_used, row.acceptance_prob
        );
    }

    // A loose budget shrinks lambda (less noise is needed), and past a point
    // the gate refuses to run rather than sample with a mis-sized cap.
    let opts = QdpOptions {
        t_override: Some(1),
        ..QdpOptions::default()
    };
    match fit_qdp_with(&ds, 50.0, 1e-4, &cfg, 17, &opts) {
        Err(Error::GateAbort {
            ratio, threshold, ..
        }) => println!("gate abort as expected: L1/lambda = {ratio:.2} >= ln(1/varsigma) = {threshold:.2}"),
        Ok(_) => println!("unexpected: gate passed"),
        Err(e) => println!("unexpected error: {e}"),
    }
    Ok(())
}
