//! Smoothed block solver on the synthetic load-dispatch benchmark: box
//! constraints on the loads, a nonlinear injection constraint handled by the
//! dual multiplier, and projected stationarity as the progress measure.
//!
//! Run with: cargo run --release --example toy_grid_sgda

use zob::algorithms::{run, Algorithm, SolverConfig};
use zob::metrics::prox_grad_stationarity;
use zob::problems::make_toy_grid;

fn main() -> zob::Result<()> {
    let dim = 16;
    let base = make_toy_grid(dim, 3)?;
    let (lower, upper) = base.x_box().unwrap();
    println!(
        "load box: [{:.1}, {:.1}] .. [{:.1}, {:.1}] over {dim} users",
        lower[0],
        upper[0],
        lower[dim - 1],
        upper[dim - 1]
    );

    let mut cfg = SolverConfig::tuned(Algorithm::ZobSgda, 4, 4000, 0.02, 0.01)?.with_seed(5);
    cfg.prox_weight = 10.0;
    cfg.anchor_mix = 0.3;

    let mut problem = base.clone();
    let out = run(&mut problem, &cfg)?;

    let mut metrics = base.clone();
    println!("{:>6} {:>12} {:>12} {:>10} {:>12}", "k", "cost", "violation", "dual", "|g| (proj)");
    for &k in &[0usize, 50, 200, 1000, 4000] {
        let it = &out.iterates[k];
        let (h, c) = metrics.evaluate(&it.x)?;
        let rep = prox_grad_stationarity(
            &mut metrics,
            &it.x,
            &it.y,
            cfg.dual_step,
            Some(cfg.primal_step),
        )?;
        println!(
            "{k:>6} {h:>12.4} {:>12.3e} {:>10.4} {:>12.3e}",
            c[0], it.y[0], rep.grad_norm
        );
    }
    println!(
        "total queries: {} (block size {} + 1 per iteration)",
        out.total_queries, cfg.block_size
    );

    // Every iterate respects the box because the solver projects after each
    // primal step.
    let inside = out.iterates.iter().all(|it| {
        it.x.iter()
            .zip(lower.iter().zip(upper))
            .all(|(x, (l, u))| x >= l && x <= u)
    });
    println!("all iterates inside the load box: {inside}");
    Ok(())
}
