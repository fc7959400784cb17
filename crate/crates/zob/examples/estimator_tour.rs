//! The four gradient estimators side by side on a seeded quadratic, with
//! exact query counts and the per-coordinate bias identity.
//!
//! For a quadratic h(x) = 0.5 x'Ax + b'x, the forward-difference coordinate
//! estimate at radius r is exactly grad_i + 0.5 r A_ii, so the estimation
//! error is known in closed form.
//!
//! Run with: cargo run --release --example estimator_tour

use std::sync::Arc;

use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use zob::estimators::{bcge, cge_full, rge, sample_block, sample_direction, smoothed_bcge, DirectionLaw};
use zob::problems::{EvalFn, OracleProblem};

fn main() -> zob::Result<()> {
    let d = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    // Seeded symmetric A and linear term b.
    let mut a = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..=i {
            let v = rng.random_range(-0.6..0.6) + if i == j { 1.5 } else { 0.0 };
            a[i][j] = v;
            a[j][i] = v;
        }
    }
    let lin: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();

    let (a_eval, lin_eval) = (a.clone(), lin.clone());
    let eval: EvalFn = Arc::new(move |x: &[f64]| {
        let mut quad = 0.0;
        for i in 0..x.len() {
            for j in 0..x.len() {
                quad += 0.5 * x[i] * a_eval[i][j] * x[j];
            }
        }
        let h = quad + lin_eval.iter().zip(x).map(|(b, x)| b * x).sum::<f64>();
        (h, vec![])
    });
    let mut problem = OracleProblem::new("quadratic", d, vec![], eval)?;

    let x: Vec<f64> = (0..d).map(|i| 0.3 * i as f64 - 0.7).collect();
    let grad_true: Vec<f64> = (0..d)
        .map(|i| a[i].iter().zip(&x).map(|(aij, xj)| aij * xj).sum::<f64>() + lin[i])
        .collect();
    let r = 0.05;

    // Full coordinate estimator: d + 1 queries, error exactly 0.5 r A_ii.
    let before = problem.queries().total();
    let full = cge_full(&mut problem, &x, &[], r)?;
    println!("cge_full: {} queries", problem.queries().total() - before);
    println!("{:>3} {:>12} {:>12} {:>12} {:>12}", "i", "true", "estimate", "error", "r*A_ii/2");
    for i in 0..d {
        let err = full.grad[i] - grad_true[i];
        println!(
            "{i:>3} {:>12.6} {:>12.6} {:>12.3e} {:>12.3e}",
            grad_true[i],
            full.grad[i],
            err,
            0.5 * r * a[i][i]
        );
    }

    // Block estimator: touches only the sampled coordinates, b + 1 queries.
    let mut srng = ChaCha8Rng::seed_from_u64(9);
    let block = sample_block(d, 2, &mut srng)?;
    let before = problem.queries().total();
    let part = bcge(&mut problem, &x, &[], r, &block)?;
    println!(
        "\nbcge on block {:?}: {} queries, nonzeros at the block only: {:?}",
        block.indices(),
        problem.queries().total() - before,
        part.grad
    );

    // Smoothed block estimator adds the analytic proximal pull p (x - z).
    let z = vec![0.0; d];
    let sm = smoothed_bcge(&mut problem, &x, &[], &z, 10.0, r, &block)?;
    println!("smoothed (p = 10, z = 0): {:?}", sm.grad);

    // Two-point random estimator: 2 queries, high variance, cheap.
    let dir = sample_direction(DirectionLaw::Gaussian, d, &mut srng);
    let before = problem.queries().total();
    let rand_est = rge(&mut problem, &x, &[], r, &dir)?;
    let dot: f64 = rand_est.grad.iter().zip(&grad_true).map(|(a, b)| a * b).sum();
    println!(
        "\nrge: {} queries, <estimate, true>/|true|^2 = {:.3} (averages to 1 over directions)",
        problem.queries().total() - before,
        dot / grad_true.iter().map(|g| g * g).sum::<f64>()
    );
    Ok(())
}
