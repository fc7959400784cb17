//! Observation noise on the constraint channel: wrap the oracle, keep the
//! radius schedule wide (the theory schedule's shrinking radii would drown
//! in noise), and compare against the noise-free run. Metrics stay
//! noise-free, mirroring how a real deployment would be scored offline.
//!
//! Run with: cargo run --release --example noisy_oracle

use zob::algorithms::{run, Algorithm, SolverConfig};
use zob::estimators::RadiusSchedule;
use zob::metrics::prox_grad_stationarity;
use zob::problems::{make_toy_grid, wrap_noise, NoiseSpec};

fn main() -> zob::Result<()> {
    let dim = 16;
    let iters = 4000;
    let base = make_toy_grid(dim, 3)?;

    // Noise std scaled like a telemetry error: a fraction of the reference
    // injection level the constraint is measured against. Evaluating at
    // zero load exposes that reference: c(0) = demand.
    let mut probe = base.clone();
    let (_, c_zero) = probe.evaluate(&vec![0.0; dim])?;
    let demand = c_zero[0];
    let sigma = 0.003 * demand;
    println!("reference injection ~ {demand:.1}, noise std = {sigma:.3}");

    let mut cfg = SolverConfig::tuned(Algorithm::ZobGda, 4, iters, 0.02, 0.01)?.with_seed(11);
    let mut run_one = |noisy: bool| -> zob::Result<(f64, f64, f64)> {
        let mut problem = base.clone();
        if noisy {
            problem = wrap_noise(problem, NoiseSpec::constraint_only(sigma, 1, 99))?;
            // Wide constant radii keep the finite differences above the
            // noise floor; the sum condition does not hold in this regime.
            cfg.radius = RadiusSchedule::unchecked(0.4, 0.3, 0.15, 4, iters)?;
        } else {
            cfg.radius = RadiusSchedule::auto(4, iters)?;
        }
        let out = run(&mut problem, &cfg)?;
        let last = out.iterates.last().unwrap();
        let mut metrics = base.clone();
        let (h, c) = metrics.evaluate(&last.x)?;
        let rep = prox_grad_stationarity(
            &mut metrics,
            &last.x,
            &last.y,
            cfg.dual_step,
            Some(cfg.primal_step),
        )?;
        Ok((h, c[0], rep.grad_norm))
    };

    let (h_clean, c_clean, g_clean) = run_one(false)?;
    let (h_noisy, c_noisy, g_noisy) = run_one(true)?;
    println!("{:>12} {:>12} {:>12} {:>12}", "", "cost", "violation", "|g|");
    println!("{:>12} {h_clean:>12.4} {c_clean:>12.3e} {g_clean:>12.3e}", "noise-free");
    println!("{:>12} {h_noisy:>12.4} {c_noisy:>12.3e} {g_noisy:>12.3e}", "noisy");
    println!(
        "cost gap under noise: {:.2}% of the noise-free value",
        100.0 * (h_noisy - h_clean).abs() / h_clean
    );
    Ok(())
}
