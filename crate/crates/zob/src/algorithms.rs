//! Primal-dual solver loops over zeroth-order block gradient estimates.
//!
//! All three solvers share the template: estimate a (block) gradient of the
//! Lagrangian at `(x_k, y_k)`, descend in x, then ascend in y using the
//! constraint values `c(x_k)` observed by the estimator's base evaluation,
//! so the dual step is free of additional queries. The smoothed variant
//! additionally drags an anchor `z_k` toward the primal iterate and descends
//! the proximally shifted Lagrangian `f(x, y) + (p/2) ||x - z||^2`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    bcge, cge_full, rge, sample_block, sample_direction, smoothed_bcge, DirectionLaw,
    RadiusSchedule,
};
use crate::la;
use crate::problems::OracleProblem;

/// Solver selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Block gradient descent ascent.
    ZobGda,
    /// Smoothed block gradient descent ascent with an averaged anchor.
    ZobSgda,
    /// Two-point random-direction gradient descent ascent baseline.
    RgeGda,
}

impl Algorithm {
    pub fn is_block(self) -> bool {
        matches!(self, Algorithm::ZobGda | Algorithm::ZobSgda)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Algorithm::ZobGda => "zob-gda",
            Algorithm::ZobSgda => "zob-sgda",
            Algorithm::RgeGda => "rge-gda",
        };
        f.write_str(s)
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zob-gda" => Ok(Algorithm::ZobGda),
            "zob-sgda" => Ok(Algorithm::ZobSgda),
            "rge-gda" => Ok(Algorithm::RgeGda),
            other => Err(Error::Config(format!(
                "unknown algorithm `{other}` (expected zob-gda, zob-sgda, or rge-gda)"
            ))),
        }
    }
}

/// Solver state after `k` iterations. The anchor `z` is carried only by the
/// smoothed solver.
#[derive(Debug, Clone)]
pub struct Iterate {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Option<Vec<f64>>,
    pub k: usize,
}

/// Full solver parameterization.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    /// Primal step size (alpha).
    pub primal_step: f64,
    /// Dual step size (beta).
    pub dual_step: f64,
    /// Anchor averaging weight (gamma), smoothed solver only; in (0, 1].
    pub anchor_mix: f64,
    /// Proximal smoothing weight (p), smoothed solver only.
    pub prox_weight: f64,
    pub block_size: usize,
    pub max_iters: usize,
    pub radius: RadiusSchedule,
    pub seed: u64,
    /// Direction law for the random-direction baseline.
    pub direction: DirectionLaw,
    /// Project primal iterates onto the problem's x box (if it has one)
    /// after each step. On by default; disabling it runs the unprojected
    /// dynamics even on box problems.
    pub project_to_box: bool,
}

impl SolverConfig {
    /// Hand-tuned configuration with an automatic radius schedule. The
    /// smoothed solver defaults to `prox_weight = 10`, `anchor_mix = 0.3`.
    pub fn tuned(
        algorithm: Algorithm,
        block_size: usize,
        max_iters: usize,
        primal_step: f64,
        dual_step: f64,
    ) -> Result<Self> {
        let (prox_weight, anchor_mix) = match algorithm {
            Algorithm::ZobSgda => (10.0, 0.3),
            _ => (0.0, 1.0),
        };
        Ok(SolverConfig {
            algorithm,
            primal_step,
            dual_step,
            anchor_mix,
            prox_weight,
            block_size,
            max_iters,
            radius: RadiusSchedule::auto(block_size, max_iters)?,
            seed: 0,
            direction: DirectionLaw::default(),
            project_to_box: true,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Checks internal consistency and compatibility with a problem.
    pub fn validate(&self, problem: &OracleProblem) -> Result<()> {
        let d = problem.dim_x();
        if self.algorithm.is_block() && (self.block_size == 0 || self.block_size > d) {
            return Err(Error::InvalidBlock(format!(
                "block size must satisfy 1 <= b <= d, got b = {}, d = {d}",
                self.block_size
            )));
        }
        for (name, v) in [
            ("primal step", self.primal_step),
            ("dual step", self.dual_step),
            ("prox weight", self.prox_weight),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if self.algorithm == Algorithm::ZobSgda
            && !(self.anchor_mix > 0.0 && self.anchor_mix <= 1.0)
        {
            return Err(Error::InvalidParameter(format!(
                "anchor mix must lie in (0, 1], got {}",
                self.anchor_mix
            )));
        }
        if self.radius.horizon() < self.max_iters {
            return Err(Error::RadiusCondition(format!(
                "radius schedule horizon {} is shorter than max_iters {}; the \
                 sum-of-squares budget was certified for the shorter horizon",
                self.radius.horizon(),
                self.max_iters
            )));
        }
        if self.algorithm.is_block() && self.radius.block_size() != self.block_size {
            return Err(Error::RadiusCondition(format!(
                "radius schedule was built for block size {}, solver uses {}",
                self.radius.block_size(),
                self.block_size
            )));
        }
        Ok(())
    }
}

/// Componentwise clamp of `v` onto `[lower, upper]`. Idempotent.
pub fn project_box(v: &[f64], lower: &[f64], upper: &[f64]) -> Result<Vec<f64>> {
    if lower.len() != v.len() || upper.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            got: lower.len().min(upper.len()),
        });
    }
    Ok(v.iter()
        .zip(lower.iter().zip(upper))
        .map(|(vi, (l, u))| vi.max(*l).min(*u))
        .collect())
}

fn dual_ascent(y: &[f64], c: &[f64], dual_step: f64, y_upper: &[f64]) -> Vec<f64> {
    y.iter()
        .zip(c)
        .zip(y_upper)
        .map(|((yi, ci), ub)| (yi + dual_step * ci).max(0.0).min(*ub))
        .collect()
}

fn descend(
    x: &[f64],
    grad: &[f64],
    step: f64,
    problem: &OracleProblem,
    project: bool,
) -> Result<Vec<f64>> {
    let mut next: Vec<f64> = x.iter().zip(grad).map(|(xi, gi)| xi - step * gi).collect();
    if project {
        if let Some((lower, upper)) = problem.x_box() {
            next = project_box(&next, lower, upper)?;
        }
    }
    Ok(next)
}

/// One block gradient descent ascent step. Costs exactly `b + 1` queries.
pub fn zobgda_step<R: Rng>(
    state: &Iterate,
    problem: &mut OracleProblem,
    cfg: &SolverConfig,
    rng: &mut R,
) -> Result<Iterate> {
    let r = cfg.radius.radius(state.k);
    let block = sample_block(problem.dim_x(), cfg.block_size, rng)?;
    let est = bcge(problem, &state.x, &state.y, r, &block)?;
    let x = descend(&state.x, &est.grad, cfg.primal_step, problem, cfg.project_to_box)?;
    // Dual ascent uses the constraint values observed at x_k, not x_{k+1}.
    let y = dual_ascent(
        &state.y,
        &est.base_constraints,
        cfg.dual_step,
        problem.y_upper(),
    );
    Ok(Iterate {
        x,
        y,
        z: state.z.clone(),
        k: state.k + 1,
    })
}

/// One smoothed block step: descend the proximally shifted Lagrangian,
/// ascend in y (the proximal term is y-free, so the dual gradient is still
/// `c(x_k)`), then average the anchor toward the new primal iterate.
/// Costs exactly `b + 1` queries.
pub fn zobsgda_step<R: Rng>(
    state: &Iterate,
    problem: &mut OracleProblem,
    cfg: &SolverConfig,
    rng: &mut R,
) -> Result<Iterate> {
    let anchor = state.z.as_ref().ok_or_else(|| {
        Error::InvalidParameter("smoothed step requires an anchor in the iterate".to_string())
    })?;
    let r = cfg.radius.radius(state.k);
    let block = sample_block(problem.dim_x(), cfg.block_size, rng)?;
    let est = smoothed_bcge(
        problem,
        &state.x,
        &state.y,
        anchor,
        cfg.prox_weight,
        r,
        &block,
    )?;
    let x = descend(&state.x, &est.grad, cfg.primal_step, problem, cfg.project_to_box)?;
    let y = dual_ascent(
        &state.y,
        &est.base_constraints,
        cfg.dual_step,
        problem.y_upper(),
    );
    let g = cfg.anchor_mix;
    let z = x
        .iter()
        .zip(anchor)
        .map(|(xi, zi)| g * xi + (1.0 - g) * zi)
        .collect();
    Ok(Iterate {
        x,
        y,
        z: Some(z),
        k: state.k + 1,
    })
}

/// One random-direction baseline step. Costs exactly 2 queries.
pub fn rge_gda_step<R: Rng>(
    state: &Iterate,
    problem: &mut OracleProblem,
    cfg: &SolverConfig,
    rng: &mut R,
) -> Result<Iterate> {
    let r = cfg.radius.radius(state.k);
    let direction = sample_direction(cfg.direction, problem.dim_x(), rng);
    let est = rge(problem, &state.x, &state.y, r, &direction)?;
    let x = descend(&state.x, &est.grad, cfg.primal_step, problem, cfg.project_to_box)?;
    let y = dual_ascent(
        &state.y,
        &est.base_constraints,
        cfg.dual_step,
        problem.y_upper(),
    );
    Ok(Iterate {
        x,
        y,
        z: state.z.clone(),
        k: state.k + 1,
    })
}

/// Everything a completed run produces: the full iterate sequence
/// `(x_0, y_0), .., (x_K, y_K)` plus exact query accounting.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub iterates: Vec<Iterate>,
    pub queries_per_iter: Vec<u64>,
    pub total_queries: u64,
}

/// Default starting point: x at the box midpoint (or the origin without a
/// box), y at zero, anchor initialized to x for the smoothed solver.
pub fn initial_iterate(problem: &OracleProblem, cfg: &SolverConfig) -> Iterate {
    let x = match problem.x_box() {
        Some((lower, upper)) => lower
            .iter()
            .zip(upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect(),
        None => vec![0.0; problem.dim_x()],
    };
    let z = (cfg.algorithm == Algorithm::ZobSgda).then(|| x.clone());
    Iterate {
        x,
        y: vec![0.0; problem.dim_y()],
        z,
        k: 0,
    }
}

/// Runs `cfg.max_iters` steps from the default starting point.
pub fn run(problem: &mut OracleProblem, cfg: &SolverConfig) -> Result<RunOutput> {
    let init = initial_iterate(problem, cfg);
    run_from(problem, cfg, init, |_| {})
}

/// Runs from an explicit starting point, invoking `observer` on every
/// iterate produced after a step.
pub fn run_from(
    problem: &mut OracleProblem,
    cfg: &SolverConfig,
    init: Iterate,
    mut observer: impl FnMut(&Iterate),
) -> Result<RunOutput> {
    cfg.validate(problem)?;
    if init.x.len() != problem.dim_x() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim_x(),
            got: init.x.len(),
        });
    }
    if init.y.len() != problem.dim_y() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim_y(),
            got: init.y.len(),
        });
    }
    let mut state = init;
    if cfg.algorithm == Algorithm::ZobSgda && state.z.is_none() {
        state.z = Some(state.x.clone());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut iterates = Vec::with_capacity(cfg.max_iters + 1);
    let mut queries_per_iter = Vec::with_capacity(cfg.max_iters);
    let start_total = problem.queries().total();
    iterates.push(state.clone());

    for k in 0..cfg.max_iters {
        let before = problem.queries().total();
        let next = match cfg.algorithm {
            Algorithm::ZobGda => zobgda_step(&state, problem, cfg, &mut rng),
            Algorithm::ZobSgda => zobsgda_step(&state, problem, cfg, &mut rng),
            Algorithm::RgeGda => rge_gda_step(&state, problem, cfg, &mut rng),
        }
        .map_err(|e| e.at_iteration(k))?;
        problem.mark_iteration();
        queries_per_iter.push(problem.queries().total() - before);
        observer(&next);
        iterates.push(next.clone());
        state = next;
    }

    Ok(RunOutput {
        iterates,
        queries_per_iter,
        total_queries: problem.queries().total() - start_total,
    })
}

/// Theory-guided default parameters for a given smoothness estimate `l`.
///
/// Block solvers receive the step sizes prescribed by their convergence
/// guarantees (with `n = d / b` treated as a real number); the baseline
/// reuses the plain GDA prescription with `n = d`.
pub fn schedule_defaults(
    l: f64,
    dim_x: usize,
    max_iters: usize,
    block_size: usize,
    algorithm: Algorithm,
) -> Result<SolverConfig> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "smoothness estimate must be finite and > 0, got {l}"
        )));
    }
    if max_iters == 0 {
        return Err(Error::InvalidParameter(
            "max_iters must be at least 1".to_string(),
        ));
    }
    let d = dim_x as f64;
    let k = max_iters as f64;
    let (b_eff, n) = match algorithm {
        Algorithm::RgeGda => (1, d),
        _ => {
            if block_size == 0 || block_size > dim_x {
                return Err(Error::InvalidBlock(format!(
                    "block size must satisfy 1 <= b <= d, got b = {block_size}, d = {dim_x}"
                )));
            }
            (block_size, d / block_size as f64)
        }
    };
    let radius = RadiusSchedule::auto(b_eff, max_iters)?;

    let cfg = match algorithm {
        Algorithm::ZobGda | Algorithm::RgeGda => {
            let alpha = (1.0 / l).min((n / k).powf(2.0 / 3.0));
            let beta = (1.0 / l).min(100.0 * alpha);
            SolverConfig {
                algorithm,
                primal_step: alpha,
                dual_step: beta,
                anchor_mix: 1.0,
                prox_weight: 0.0,
                block_size: b_eff,
                max_iters,
                radius,
                seed: 0,
                direction: DirectionLaw::default(),
                project_to_box: true,
            }
        }
        Algorithm::ZobSgda => {
            let p = 3.0 * l;
            let alpha = 1.0 / (p + 10.0 * l + 1.0);
            let beta = (1.0 / (12.0 * l)).min(
                alpha.powi(2) * (p - l).powi(2)
                    / (4.0 * l * (n.sqrt() + alpha * (p - l)).powi(2)),
            );
            let gamma = (1.0 / (k * n).sqrt())
                .min(1.0 / 36.0)
                .min(1.0 / (768.0 * p * beta));
            SolverConfig {
                algorithm,
                primal_step: alpha,
                dual_step: beta,
                anchor_mix: gamma,
                prox_weight: p,
                block_size: b_eff,
                max_iters,
                radius,
                seed: 0,
                direction: DirectionLaw::default(),
                project_to_box: true,
            }
        }
    };
    Ok(cfg)
}

/// Estimates the Lagrangian smoothness constant by probing coordinate
/// gradients (at the dual upper bound, the conservative choice) at pairs of
/// nearby points. Queries land on whatever problem instance is passed in,
/// so callers probe a metrics clone to keep solver accounting clean.
pub fn probe_l(problem: &mut OracleProblem, points: usize, seed: u64) -> Result<f64> {
    let d = problem.dim_x();
    let y = problem.y_upper().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fd_radius = 1e-6;
    let (scale, sampler): (f64, Box<dyn Fn(&mut ChaCha8Rng) -> Vec<f64>>) = match problem.x_box() {
        Some((lower, upper)) => {
            let lower = lower.to_vec();
            let upper = upper.to_vec();
            let width = upper
                .iter()
                .zip(&lower)
                .map(|(u, l)| u - l)
                .fold(0.0f64, f64::max);
            (
                width.max(1e-6),
                Box::new(move |rng: &mut ChaCha8Rng| {
                    lower
                        .iter()
                        .zip(&upper)
                        .map(|(l, u)| rng.random_range(*l..*u))
                        .collect()
                }),
            )
        }
        None => (
            1.0,
            Box::new(move |rng: &mut ChaCha8Rng| {
                (0..d).map(|_| rng.sample(StandardNormal)).collect()
            }),
        ),
    };
    let delta = 1e-4 * scale;
    let mut best = 0.0f64;
    for _ in 0..points.max(1) {
        let x = sampler(&mut rng);
        let mut dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = la::norm(&dir);
        if n == 0.0 {
            continue;
        }
        for v in &mut dir {
            *v /= n;
        }
        let x2: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + delta * di).collect();
        let g1 = cge_full(problem, &x, &y, fd_radius)?;
        let g2 = cge_full(problem, &x2, &y, fd_radius)?;
        let lx = la::dist(&g1.grad, &g2.grad) / delta;
        let lc = la::dist(&g1.base_constraints, &g2.base_constraints) / delta;
        best = best.max(lx).max(lc);
    }
    if !(best > 0.0) {
        return Err(Error::InvalidParameter(
            "smoothness probe saw a flat landscape; supply an estimate explicitly".to_string(),
        ));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_quad_ball, EvalFn};
    use std::sync::Arc;

    fn one_dim_problem() -> OracleProblem {
        // h(x) = x^2, c(x) = x - 1, dual box [0, 10].
        let eval: EvalFn = Arc::new(|x: &[f64]| (x[0] * x[0], vec![x[0] - 1.0]));
        OracleProblem::new("1d", 1, vec![10.0], eval).unwrap()
    }

    fn cfg_1d(algorithm: Algorithm, alpha: f64, beta: f64) -> SolverConfig {
        let mut cfg = SolverConfig::tuned(algorithm, 1, 1000, alpha, beta).unwrap();
        cfg.radius = RadiusSchedule::unchecked(0.01, 0.0, 0.01, 1, 1000).unwrap();
        cfg
    }

    #[test]
    fn project_box_clamps_and_is_idempotent() {
        let p = project_box(&[-1.0, 5.0], &[0.0, 0.0], &[3.0, 3.0]).unwrap();
        assert_eq!(p, vec![0.0, 3.0]);
        let inside = project_box(&[1.0, 2.0], &[0.0, 0.0], &[3.0, 3.0]).unwrap();
        assert_eq!(inside, vec![1.0, 2.0]);
        let mixed = project_box(&[0.5, -0.2], &[0.0, 0.0], &[3.0, 3.0]).unwrap();
        assert_eq!(mixed, vec![0.5, 0.0]);
        let again = project_box(&p, &[0.0, 0.0], &[3.0, 3.0]).unwrap();
        assert_eq!(again, p);
        assert!(matches!(
            project_box(&[0.0], &[0.0, 0.0], &[1.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gda_step_hand_computed() {
        let mut problem = one_dim_problem();
        let cfg = cfg_1d(Algorithm::ZobGda, 0.1, 0.1);
        let state = Iterate {
            x: vec![0.5],
            y: vec![0.0],
            z: None,
            k: 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let next = zobgda_step(&state, &mut problem, &cfg, &mut rng).unwrap();
        // G = ((0.51^2 + 0) - 0.25) / 0.01 = 1.01; x1 = 0.5 - 0.101 = 0.399.
        assert!((next.x[0] - 0.399).abs() < 1e-12, "x1 = {}", next.x[0]);
        // y1 = clamp(0 + 0.1 * (0.5 - 1)) = 0.
        assert_eq!(next.y[0], 0.0);
        assert_eq!(problem.queries().total(), 2);
    }

    #[test]
    fn gda_step_zero_primal_step_still_moves_dual() {
        let mut problem = one_dim_problem();
        let cfg = cfg_1d(Algorithm::ZobGda, 0.0, 0.1);
        let state = Iterate {
            x: vec![2.0],
            y: vec![0.3],
            z: None,
            k: 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let next = zobgda_step(&state, &mut problem, &cfg, &mut rng).unwrap();
        assert_eq!(next.x[0], 2.0);
        // c(2) = 1, so y moves up by beta.
        assert!((next.y[0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn gda_step_dual_projection_saturates() {
        let mut problem = one_dim_problem();
        let cfg = cfg_1d(Algorithm::ZobGda, 0.1, 0.5);
        let state = Iterate {
            x: vec![3.0], // c = 2 > 0
            y: vec![10.0],
            z: None,
            k: 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let next = zobgda_step(&state, &mut problem, &cfg, &mut rng).unwrap();
        assert_eq!(next.y[0], 10.0);
    }

    #[test]
    fn sgda_anchor_updates() {
        let mut problem = one_dim_problem();
        // alpha = 0 keeps x fixed so the anchor combination is exact.
        let mut cfg = cfg_1d(Algorithm::ZobSgda, 0.0, 0.0);
        cfg.anchor_mix = 0.3;
        cfg.prox_weight = 0.0;
        let state = Iterate {
            x: vec![1.0],
            y: vec![0.0],
            z: Some(vec![0.0]),
            k: 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let next = zobsgda_step(&state, &mut problem, &cfg, &mut rng).unwrap();
        assert!((next.z.as_ref().unwrap()[0] - 0.3).abs() < 1e-15);

        // gamma = 1 pins the anchor to the new primal iterate.
        let mut cfg1 = cfg_1d(Algorithm::ZobSgda, 0.2, 0.0);
        cfg1.anchor_mix = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let next = zobsgda_step(&state, &mut problem, &cfg1, &mut rng).unwrap();
        assert_eq!(next.z.as_ref().unwrap(), &next.x);
    }

    #[test]
    fn sgda_with_zero_prox_and_full_mix_matches_gda_bitwise() {
        for seed in 0..3u64 {
            let mut p1 = make_quad_ball(6, 9).unwrap();
            let mut p2 = p1.clone();
            let mut gda = SolverConfig::tuned(Algorithm::ZobGda, 3, 100, 0.05, 0.05)
                .unwrap()
                .with_seed(seed);
            gda.project_to_box = false;
            let mut sgda = gda.clone();
            sgda.algorithm = Algorithm::ZobSgda;
            sgda.prox_weight = 0.0;
            sgda.anchor_mix = 1.0;
            let out1 = run(&mut p1, &gda).unwrap();
            let out2 = run(&mut p2, &sgda).unwrap();
            for (a, b) in out1.iterates.iter().zip(&out2.iterates) {
                assert_eq!(a.x, b.x);
                assert_eq!(a.y, b.y);
            }
        }
    }

    #[test]
    fn rge_step_is_inert_on_constant_problem() {
        let eval: EvalFn = Arc::new(|_: &[f64]| (1.0, vec![-1.0]));
        let mut problem = OracleProblem::new("const", 3, vec![1.0], eval).unwrap();
        let mut cfg = SolverConfig::tuned(Algorithm::RgeGda, 1, 50, 0.5, 0.5).unwrap();
        cfg.radius = RadiusSchedule::unchecked(0.1, 0.0, 0.1, 1, 50).unwrap();
        let out = run(&mut problem, &cfg).unwrap();
        for it in &out.iterates {
            assert_eq!(it.x, vec![0.0; 3]);
        }
        assert_eq!(out.total_queries, 100);
        assert!(out.queries_per_iter.iter().all(|&q| q == 2));
    }

    #[test]
    fn run_zero_iters_and_determinism() {
        let mut problem = make_quad_ball(4, 3).unwrap();
        let mut cfg = SolverConfig::tuned(Algorithm::ZobGda, 2, 0, 0.1, 0.1).unwrap();
        cfg.radius = RadiusSchedule::auto(2, 0).unwrap();
        let out = run(&mut problem, &cfg).unwrap();
        assert_eq!(out.iterates.len(), 1);
        assert_eq!(out.total_queries, 0);

        let cfg = SolverConfig::tuned(Algorithm::ZobGda, 2, 50, 0.1, 0.1)
            .unwrap()
            .with_seed(11);
        let o1 = run(&mut problem.clone(), &cfg).unwrap();
        let o2 = run(&mut problem.clone(), &cfg).unwrap();
        for (a, b) in o1.iterates.iter().zip(&o2.iterates) {
            assert_eq!(a.x, b.x);
            assert_eq!(a.y, b.y);
        }
    }

    #[test]
    fn query_law_exact_counts() {
        // 100 iterations at b = 7 in d = 21 costs exactly 800 queries.
        let mut problem = make_quad_ball(21, 5).unwrap();
        let cfg = SolverConfig::tuned(Algorithm::ZobGda, 7, 100, 0.05, 0.05).unwrap();
        let out = run(&mut problem, &cfg).unwrap();
        assert_eq!(out.total_queries, 800);
        assert_eq!(problem.queries().total(), 800);
        assert_eq!(
            problem.queries().per_iteration().iter().sum::<u64>(),
            800
        );
    }

    #[test]
    fn primal_update_touches_only_block_coordinates() {
        let mut problem = make_quad_ball(10, 2).unwrap();
        let cfg = SolverConfig::tuned(Algorithm::ZobGda, 3, 40, 0.1, 0.1).unwrap();
        let out = run(&mut problem, &cfg).unwrap();
        for pair in out.iterates.windows(2) {
            let moved = pair[0]
                .x
                .iter()
                .zip(&pair[1].x)
                .filter(|(a, b)| a != b)
                .count();
            assert!(moved <= 3, "step moved {moved} coordinates");
        }
    }

    #[test]
    fn dual_iterates_stay_feasible() {
        let mut problem = make_quad_ball(6, 8).unwrap();
        let cfg = SolverConfig::tuned(Algorithm::ZobGda, 2, 200, 0.3, 0.8).unwrap();
        let out = run(&mut problem, &cfg).unwrap();
        for it in &out.iterates {
            for (yj, ub) in it.y.iter().zip(problem.y_upper()) {
                assert!(*yj >= 0.0 && yj <= ub);
            }
        }
    }

    #[test]
    fn schedule_defaults_satisfy_theory_inequalities() {
        // Smoothed solver, L = 1, b = d (N = 1), K = 10^4.
        let l = 1.0;
        let cfg = schedule_defaults(l, 8, 10_000, 8, Algorithm::ZobSgda).unwrap();
        let p = cfg.prox_weight;
        let n: f64 = 1.0;
        assert!(p >= 3.0 * l);
        assert!(cfg.primal_step <= 1.0 / (p + 10.0 * l + 1.0) + 1e-15);
        assert!(cfg.dual_step <= 1.0 / (12.0 * l) + 1e-15);
        let alt = cfg.primal_step.powi(2) * (p - l).powi(2)
            / (4.0 * l * (n.sqrt() + cfg.primal_step * (p - l)).powi(2));
        assert!(cfg.dual_step <= alt + 1e-15);
        let k = 10_000f64;
        assert!(cfg.anchor_mix <= (1.0 / (k * n)).sqrt() + 1e-15);
        assert!(cfg.anchor_mix <= 1.0 / 36.0 + 1e-15);
        assert!(cfg.anchor_mix <= 1.0 / (768.0 * p * cfg.dual_step) + 1e-15);
        assert!((cfg.anchor_mix - 0.01).abs() < 1e-12);
        assert!(cfg.radius.sum_sq() <= 1.0 / 8.0);
    }

    #[test]
    fn schedule_defaults_gda_limits() {
        // As K grows, alpha -> 0 while beta tracks 100 * alpha under the cap.
        let mut last_alpha = f64::INFINITY;
        for k in [100usize, 10_000, 1_000_000] {
            let cfg = schedule_defaults(1.0, 16, k, 4, Algorithm::ZobGda).unwrap();
            assert!(cfg.primal_step <= 1.0);
            assert!(cfg.dual_step <= 1.0);
            assert!(cfg.primal_step < last_alpha);
            if 100.0 * cfg.primal_step < 1.0 {
                assert!((cfg.dual_step - 100.0 * cfg.primal_step).abs() < 1e-15);
            }
            last_alpha = cfg.primal_step;
        }
        assert!(matches!(
            schedule_defaults(0.0, 4, 10, 2, Algorithm::ZobGda),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn probe_l_brackets_quad_ball_smoothness() {
        // f(x, y) = 0.5 ||x - x0||^2 + y (||x||^2 - 1): at y = 10 the
        // primal Hessian is (1 + 2y) I = 21 I.
        let problem = make_quad_ball(5, 4).unwrap();
        let mut clone = problem.clone();
        let l = probe_l(&mut clone, 20, 9).unwrap();
        assert!(l > 15.0 && l < 40.0, "probed L = {l}");
    }

    #[test]
    fn run_rejects_inconsistent_config() {
        let problem = make_quad_ball(4, 0).unwrap();
        let mut cfg = SolverConfig::tuned(Algorithm::ZobGda, 2, 100, 0.1, 0.1).unwrap();
        cfg.radius = RadiusSchedule::auto(2, 50).unwrap();
        // Horizon shorter than max_iters.
        assert!(matches!(
            cfg.validate(&problem),
            Err(Error::RadiusCondition(_))
        ));
        // Block larger than the dimension.
        let bad = SolverConfig::tuned(Algorithm::ZobGda, 5, 10, 0.1, 0.1).unwrap();
        assert!(matches!(bad.validate(&problem), Err(Error::InvalidBlock(_))));
    }
}
