//! Theory-guided parameter schedules: probe the smoothness constant, derive
//! step sizes from the convergence guarantees, and check every inequality
//! they must satisfy.
//!
//! Run with: cargo run --release --example theory_schedules

use zob::algorithms::{probe_l, run, schedule_defaults, Algorithm};
use zob::problems::make_quad_ball;

fn main() -> zob::Result<()> {
    let dim = 12;
    let iters = 2000;
    let base = make_quad_ball(dim, 5)?;

    // The probe spends metrics-budget queries on its own clone.
    let mut probe_clone = base.clone();
    let l = probe_l(&mut probe_clone, 20, 1)?;
    println!(
        "probed smoothness L = {l:.2} ({} metrics queries)",
        probe_clone.queries().total()
    );

    for algorithm in [Algorithm::ZobGda, Algorithm::ZobSgda] {
        let b = 4;
        let cfg = schedule_defaults(l, dim, iters, b, algorithm)?;
        println!("\n{algorithm} (b = {b}, K = {iters}):");
        println!("  primal step  = {:.4e}", cfg.primal_step);
        println!("  dual step    = {:.4e}", cfg.dual_step);
        if algorithm == Algorithm::ZobSgda {
            println!("  prox weight  = {:.4e}", cfg.prox_weight);
            println!("  anchor mix   = {:.4e}", cfg.anchor_mix);
        }
        println!("  radius sum-of-squares = {:.3e} <= 1/b = {:.3e}", cfg.radius.sum_sq(), 1.0 / b as f64);

        // Re-check the hypotheses the schedules must satisfy.
        let n = dim as f64 / b as f64;
        match algorithm {
            Algorithm::ZobSgda => {
                let p = cfg.prox_weight;
                assert!(p >= 3.0 * l);
                assert!(cfg.primal_step <= 1.0 / (p + 10.0 * l + 1.0) + 1e-15);
                let beta_cap = (1.0 / (12.0 * l)).min(
                    cfg.primal_step.powi(2) * (p - l).powi(2)
                        / (4.0 * l * (n.sqrt() + cfg.primal_step * (p - l)).powi(2)),
                );
                assert!(cfg.dual_step <= beta_cap + 1e-15);
                let gamma_cap = (1.0 / (iters as f64 * n).sqrt())
                    .min(1.0 / 36.0)
                    .min(1.0 / (768.0 * p * cfg.dual_step));
                assert!(cfg.anchor_mix <= gamma_cap + 1e-15);
                println!("  all smoothed-solver hypotheses hold");
            }
            _ => {
                assert!(cfg.primal_step <= 1.0 / l && cfg.dual_step <= 1.0 / l);
                println!("  both step sizes at or below 1/L");
            }
        }

        let mut problem = base.clone();
        let out = run(&mut problem, &cfg.clone().with_seed(3))?;
        let mut metrics = base.clone();
        let last = out.iterates.last().unwrap();
        let (h, c) = metrics.evaluate(&last.x)?;
        println!("  after K steps: objective {h:.5}, constraint {:.2e}", c[0]);
    }
    Ok(())
}
