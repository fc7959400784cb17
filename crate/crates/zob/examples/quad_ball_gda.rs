//! Solve the analytic quad-ball problem with block gradient descent ascent
//! and watch the stationarity measure and KKT residuals converge.
//!
//! Run with: cargo run --release --example quad_ball_gda

use zob::algorithms::{run, Algorithm, SolverConfig};
use zob::metrics::{kkt_residuals, prox_grad_stationarity};
use zob::problems::make_quad_ball;

fn main() -> zob::Result<()> {
    let dim = 20;
    let block = 10;
    let iters = 3000;
    let base = make_quad_ball(dim, 7)?;
    let cfg = SolverConfig::tuned(Algorithm::ZobGda, block, iters, 0.2, 0.05)?.with_seed(1);

    let mut problem = base.clone();
    let out = run(&mut problem, &cfg)?;
    println!(
        "ran {iters} iterations at block size {block}: {} oracle queries (= K * (b + 1))",
        out.total_queries
    );

    // Metrics run on a separate clone so solver accounting stays exact.
    let mut metrics = base.clone();
    println!("{:>6} {:>14} {:>12} {:>12}", "k", "objective", "violation", "|g|");
    for &k in &[0usize, 10, 100, 500, 1500, iters] {
        let it = &out.iterates[k];
        let (h, c) = metrics.evaluate(&it.x)?;
        let rep = prox_grad_stationarity(&mut metrics, &it.x, &it.y, cfg.dual_step, None)?;
        println!("{k:>6} {h:>14.6} {:>12.2e} {:>12.2e}", c[0], rep.grad_norm);
    }

    let last = out.iterates.last().unwrap();
    let kkt = kkt_residuals(&mut metrics, &last.x, &last.y)?;
    println!(
        "final KKT: |grad L| = {:.2e}, violation = {:.2e}, compl. slack = {:.2e}, y interior: {}",
        kkt.grad_lagrangian_norm,
        kkt.max_violation.max(0.0),
        kkt.max_complementary_slack,
        kkt.dual_strictly_interior
    );

    // The problem ships its closed-form KKT point; compare.
    let (x_star, y_star) = base.known_kkt().unwrap();
    let dist: f64 = last
        .x
        .iter()
        .zip(x_star)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    println!(
        "distance to the closed-form KKT point: {dist:.3e} (dual: {:.3e})",
        (last.y[0] - y_star[0]).abs()
    );
    Ok(())
}
