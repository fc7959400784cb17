//! The metrics suite at known points: proximal-gradient stationarity, the
//! Moreau-envelope gradient oracle, and KKT residuals, evaluated where the
//! answers are known in closed form.
//!
//! Run with: cargo run --release --example metrics_tour

use zob::metrics::{
    kkt_residuals, moreau_gradient_norm, phi_closed_form, prox_grad_stationarity, relative_error,
    MoreauConfig,
};
use zob::problems::make_quad_ball;

fn main() -> zob::Result<()> {
    let mut problem = make_quad_ball(4, 21)?;
    let (x_star, y_star) = {
        let k = problem.known_kkt().unwrap();
        (k.0.to_vec(), k.1.to_vec())
    };

    // At the closed-form KKT point everything vanishes.
    let rep = prox_grad_stationarity(&mut problem, &x_star, &y_star, 0.1, None)?;
    let kkt = kkt_residuals(&mut problem, &x_star, &y_star)?;
    println!("at the KKT point:");
    println!("  |g| = {:.2e} (primal {:.2e}, dual {:.2e})", rep.grad_norm, rep.primal_grad_norm, rep.dual_residual_norm);
    println!(
        "  KKT residuals: grad {:.2e}, violation {:.2e}, slack {:.2e}, passes(1e-8): {}",
        kkt.grad_lagrangian_norm,
        kkt.max_violation,
        kkt.max_complementary_slack,
        kkt.passes(1e-8)
    );

    // Perturb and watch the measures light up.
    let x_off: Vec<f64> = x_star.iter().map(|v| v + 0.2).collect();
    let rep_off = prox_grad_stationarity(&mut problem, &x_off, &y_star, 0.1, None)?;
    let kkt_off = kkt_residuals(&mut problem, &x_off, &y_star)?;
    println!("\n0.2 away per coordinate:");
    println!("  |g| = {:.3}, complementary slack = {:.3}", rep_off.grad_norm, kkt_off.max_complementary_slack);

    // Best-response value and relative error against a reference.
    let phi_star = phi_closed_form(&mut problem, &x_star)?;
    let phi_off = phi_closed_form(&mut problem, &x_off)?;
    println!("\nbest-response value: {phi_star:.6} at the solution, {phi_off:.6} off it");
    println!(
        "relative error of the off point: {:.2}%",
        100.0 * relative_error(phi_off, phi_star)?
    );

    // Moreau-envelope gradient: at points whose prox stays strictly inside
    // the ball the envelope is differentiable and the oracle is sharp.
    let inside = vec![0.1, -0.05, 0.08, 0.0];
    let cfg = MoreauConfig::new(25.0);
    let m = moreau_gradient_norm(&mut problem, &inside, 2.0, &cfg)?;
    println!("\nMoreau gradient norm at an interior point: {m:.4}");
    let stacked = rep.clone().with_moreau(m);
    println!(
        "combined measure min(|g|, moreau) at the KKT point vs interior moreau: {:.2e}",
        stacked.measure
    );
    Ok(())
}
