//! Scratch: debug noisy toy-grid trajectory (temporary).
use zob::algorithms::{run, Algorithm, SolverConfig};
use zob::estimators::RadiusSchedule;
use zob::problems::{make_toy_grid, wrap_noise, NoiseSpec};

fn main() -> zob::Result<()> {
    let dim = 16;
    let iters = 4000;
    let base = make_toy_grid(dim, 3)?;
    let mut probe = base.clone();
    let (_, c_zero) = probe.evaluate(&vec![0.0; dim])?;
    let sigma = 0.003 * c_zero[0];
    println!("sigma = {sigma:.4}");
    let mut cfg = SolverConfig::tuned(Algorithm::ZobSgda, 4, iters, 0.01, 0.01)?.with_seed(11);
    cfg.radius = RadiusSchedule::unchecked(0.15, 0.0, 0.15, 4, iters)?;
    let mut problem = wrap_noise(base.clone(), NoiseSpec::constraint_only(sigma, 1, 99))?;
    let out = run(&mut problem, &cfg)?;
    let mut metrics = base.clone();
    for k in [0usize, 100, 500, 1000, 2000, 3000, 4000] {
        let it = &out.iterates[k];
        let (h, c) = metrics.evaluate(&it.x)?;
        println!("k={k:>5} h={h:>9.3} c={:>9.4} y={:>7.4}", c[0], it.y[0]);
    }
    Ok(())
}
