//! Query cost to a fixed stationarity target across block sizes: the
//! per-step cost is b + 1, so moderate blocks usually buy the most progress
//! per query while the full block pays d + 1 for every dual update.
//!
//! Run with: cargo run --release --example block_size_sweep

use zob::algorithms::{run, Algorithm, SolverConfig};
use zob::metrics::prox_grad_stationarity;
use zob::problems::make_quad_ball;

fn main() -> zob::Result<()> {
    let dim = 20;
    let target = 0.05;
    let base = make_quad_ball(dim, 7)?;
    println!("queries until |g| <= {target} on quad-ball d = {dim} (mean over 10 seeds)");
    println!("{:>4} {:>10} {:>14} {:>12}", "b", "cost/step", "iterations", "queries");
    for b in [1usize, 5, 10, 20] {
        let mut iters = Vec::new();
        for seed in 0..10u64 {
            let cfg = SolverConfig::tuned(Algorithm::ZobGda, b, 4000, 0.2, 0.05)?.with_seed(seed);
            let mut problem = base.clone();
            let out = run(&mut problem, &cfg)?;
            let mut metrics = base.clone();
            let hit = out.iterates.iter().find_map(|it| {
                let rep =
                    prox_grad_stationarity(&mut metrics, &it.x, &it.y, cfg.dual_step, None)
                        .ok()?;
                (rep.grad_norm <= target).then_some(it.k)
            });
            iters.push(hit.expect("target reachable within the budget"));
        }
        let mean_iters = iters.iter().sum::<usize>() as f64 / iters.len() as f64;
        println!(
            "{b:>4} {:>10} {:>14.1} {:>12.1}",
            b + 1,
            mean_iters,
            mean_iters * (b + 1) as f64
        );
    }
    Ok(())
}
