//! Scratch: tied-beta protocol ordering + noise robustness (temporary).

use zob::algorithms::{run, Algorithm, SolverConfig};
use zob::bench::{compute_hstar, parse_config};
use zob::estimators::RadiusSchedule;
use zob::problems::{make_toy_grid, wrap_noise, NoiseSpec, OracleProblem};

fn hstar_for(pseed: u64) -> f64 {
    let text = format!(
        "[problem]\nkind = \"toy-grid\"\ndim = 32\nseed = {pseed}\nl_estimate = 25.0\n\n\
         [run]\nmax_iters = 2000\nseeds = [0]\n\n\
         [[solvers]]\nalgorithm = \"zob-gda\"\nblock_size = 11\nprimal_step = 0.02\ndual_step = 0.01\n"
    );
    compute_hstar(&parse_config(&text).unwrap()).unwrap().h_star
}

fn first_hit(
    base: &OracleProblem,
    sigma: f64,
    cfg: &SolverConfig,
    h_star: f64,
    target: f64,
) -> Option<u64> {
    let mut problem = base.clone();
    if sigma > 0.0 {
        problem = wrap_noise(
            problem,
            NoiseSpec::constraint_only(sigma, 1, cfg.seed.wrapping_mul(31).wrapping_add(17)),
        )
        .unwrap();
    }
    let out = run(&mut problem, cfg).ok()?;
    let mut metrics = base.clone();
    let cost = match cfg.algorithm {
        Algorithm::RgeGda => 2u64,
        _ => cfg.block_size as u64 + 1,
    };
    for it in &out.iterates {
        let (h, c) = metrics.evaluate(&it.x).unwrap();
        if (h - h_star) / h_star <= target && c[0] <= 0.0 {
            return Some(it.k as u64 * cost);
        }
    }
    None
}

fn stats(v: &[Option<u64>]) -> String {
    let hits: Vec<u64> = v.iter().flatten().copied().collect();
    if hits.is_empty() {
        "NaN (0)".into()
    } else {
        format!(
            "{:.0} ({}/{})",
            hits.iter().sum::<u64>() as f64 / hits.len() as f64,
            hits.len(),
            v.len()
        )
    }
}

fn main() {
    let mode = std::env::args().nth(1).unwrap_or_else(|| "order".into());
    let pseeds: Vec<u64> = std::env::args()
        .skip(2)
        .filter_map(|s| s.parse().ok())
        .collect();
    let pseeds = if pseeds.is_empty() { vec![7] } else { pseeds };
    match mode.as_str() {
        "order" => order(&pseeds),
        "noise" => noise(&pseeds),
        _ => {}
    }
}

/// Tied-beta protocol: per-cell alpha grid with beta = 0.01 * alpha.
fn order(pseeds: &[u64]) {
    let k_max = 20_000;
    let n_seeds = 12u64;
    for &pseed in pseeds {
        let base = make_toy_grid(32, pseed).unwrap();
        let h_star = hstar_for(pseed);
        println!("=== seed {pseed}: h* = {h_star:.4}");
        for target in [0.1, 0.01] {
            let mut per_cell: Vec<(String, Vec<Option<u64>>)> = Vec::new();
            for (algo, b, alphas) in [
                (Algorithm::ZobGda, 2usize, vec![0.2, 0.1, 0.05]),
                (Algorithm::ZobGda, 11, vec![0.2, 0.1, 0.05]),
                (Algorithm::ZobGda, 32, vec![0.1, 0.05, 0.02]),
                (Algorithm::ZobSgda, 11, vec![0.1, 0.05, 0.02]),
                (Algorithm::RgeGda, 1, vec![0.02, 0.01, 0.005, 0.002]),
            ] {
                let mut best: Option<(f64, f64, Vec<Option<u64>>)> = None;
                for &alpha in &alphas {
                    let hits: Vec<Option<u64>> = (0..n_seeds)
                        .map(|seed| {
                            let cfg = SolverConfig::tuned(algo, b, k_max, alpha, 0.01 * alpha)
                                .unwrap()
                                .with_seed(seed);
                            first_hit(&base, 0.0, &cfg, h_star, target)
                        })
                        .collect();
                    let n = hits.iter().flatten().count();
                    let mean = if n > 0 {
                        hits.iter().flatten().sum::<u64>() as f64 / n as f64
                    } else {
                        0.0
                    };
                    let score = (n_seeds as usize - n) as f64 * 1e12 + mean;
                    if best.as_ref().is_none_or(|(s, _, _)| score < *s) {
                        best = Some((score, alpha, hits));
                    }
                }
                let (_, alpha, hits) = best.unwrap();
                println!("  t={target}: {algo}-b{b} (a={alpha}): {}", stats(&hits));
                per_cell.push((format!("{algo}-b{b}"), hits));
            }
            let full = per_cell[2].1.clone();
            for idx in [0usize, 1, 3] {
                let (name, cell) = &per_cell[idx];
                let mut wins = 0;
                let mut pairs = 0;
                for (a, c) in cell.iter().zip(&full) {
                    match (a, c) {
                        (Some(a), Some(c)) => {
                            pairs += 1;
                            if a < c {
                                wins += 1;
                            }
                        }
                        (Some(_), None) => {
                            pairs += 1;
                            wins += 1;
                        }
                        (None, Some(_)) => pairs += 1,
                        (None, None) => {}
                    }
                }
                println!("    {name} beats full: {wins}/{pairs}");
            }
        }
    }
}

/// Noise robustness at sigma = 0.3% of the reference injection D.
fn noise(pseeds: &[u64]) {
    let k_max = 6000;
    let n_seeds = 20u64;
    for &pseed in pseeds {
        let base = make_toy_grid(32, pseed).unwrap();
        let h_star = hstar_for(pseed);
        let mut probe = base.clone();
        let (_, c0) = probe.evaluate(&vec![0.0; 32]).unwrap();
        let sigma = 0.003 * c0[0];
        println!("=== seed {pseed}: h* = {h_star:.4}, D = {:.2}, sigma = {sigma:.4}", c0[0]);
        for (algo, gamma) in [(Algorithm::ZobGda, 1.0), (Algorithm::ZobSgda, 0.005)] {
            for (alpha, beta, r) in [(0.01, 0.01, 0.2), (0.02, 0.01, 0.2), (0.01, 0.005, 0.25)] {
                let mk = |seed: u64, noisy: bool| {
                    let mut cfg = SolverConfig::tuned(algo, 11, k_max, alpha, beta)
                        .unwrap()
                        .with_seed(seed);
                    if algo == Algorithm::ZobSgda {
                        cfg.anchor_mix = gamma;
                        cfg.prox_weight = 10.0;
                    }
                    if noisy {
                        cfg.radius = RadiusSchedule::unchecked(r, 0.0, r, 11, k_max).unwrap();
                    }
                    cfg
                };
                let noisy: Vec<Option<u64>> = (0..n_seeds)
                    .map(|s| first_hit(&base, sigma, &mk(s, true), h_star, 0.01))
                    .collect();
                let clean: Vec<Option<u64>> = (0..n_seeds)
                    .map(|s| first_hit(&base, 0.0, &mk(s, false), h_star, 0.01))
                    .collect();
                println!(
                    "  {algo} a={alpha} b={beta} r={r}: noisy {} | clean {}",
                    stats(&noisy),
                    stats(&clean)
                );
            }
        }
    }
}
