//! Black-box problem oracles with exact query accounting.
//!
//! An [`OracleProblem`] exposes a single evaluation map `x -> (h(x), c(x))`:
//! one call observes the objective and *all* constraint values simultaneously
//! and costs exactly one query. Solvers only ever see this map. Analytic
//! gradients, when a problem carries them, are a separate metrics-only
//! interface that never leaks into solver code paths.

use std::fmt;
use std::sync::Arc;

use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::la;

/// Evaluation map: `x -> (objective, constraint values)`.
pub type EvalFn = Arc<dyn Fn(&[f64]) -> (f64, Vec<f64>) + Send + Sync>;

/// Metrics-only analytic gradients: `x -> (grad objective, constraint Jacobian rows)`.
pub type GradFn = Arc<dyn Fn(&[f64]) -> (Vec<f64>, Vec<Vec<f64>>) + Send + Sync>;

/// Counts oracle queries; one unit per simultaneous `(h, c)` evaluation.
#[derive(Debug, Clone, Default)]
pub struct QueryCounter {
    total: u64,
    current: u64,
    per_iteration: Vec<u64>,
}

impl QueryCounter {
    fn bump(&mut self) {
        self.total += 1;
        self.current += 1;
    }

    /// Total queries since construction (or since the owning problem was cloned).
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Closes the current iteration window and logs its query count.
    pub fn mark_iteration(&mut self) {
        self.per_iteration.push(self.current);
        self.current = 0;
    }

    /// Per-iteration query log. After a run completes (every window closed),
    /// the entries sum to `total()`.
    pub fn per_iteration(&self) -> &[u64] {
        &self.per_iteration
    }
}

/// Additive zero-mean Gaussian observation noise, one std-dev per channel.
#[derive(Debug, Clone)]
pub struct NoiseSpec {
    /// Std-dev applied to the objective channel.
    pub objective_std: f64,
    /// Std-dev applied to each constraint channel, in order.
    pub constraint_std: Vec<f64>,
    /// Seed for the noise stream (independent of solver seeds).
    pub seed: u64,
}

impl NoiseSpec {
    /// Noise on constraint channels only, the same std-dev for each.
    pub fn constraint_only(std_dev: f64, dim_y: usize, seed: u64) -> Self {
        NoiseSpec {
            objective_std: 0.0,
            constraint_std: vec![std_dev; dim_y],
            seed,
        }
    }

    fn validate(&self, dim_y: usize) -> Result<()> {
        if !(self.objective_std >= 0.0) {
            return Err(Error::InvalidNoise(format!(
                "objective std must be >= 0, got {}",
                self.objective_std
            )));
        }
        if self.constraint_std.len() != dim_y {
            return Err(Error::InvalidNoise(format!(
                "constraint std list has length {}, problem has {} constraints",
                self.constraint_std.len(),
                dim_y
            )));
        }
        if let Some(bad) = self.constraint_std.iter().find(|s| !(**s >= 0.0)) {
            return Err(Error::InvalidNoise(format!(
                "constraint std must be >= 0, got {bad}"
            )));
        }
        Ok(())
    }

    /// Derives the per-run noise stream from this spec and a run seed.
    pub fn stream_for_run(&self, run_seed: u64) -> NoiseSpec {
        NoiseSpec {
            seed: la::mix_seeds(self.seed, run_seed),
            ..self.clone()
        }
    }
}

#[derive(Clone)]
struct NoiseState {
    spec: NoiseSpec,
    rng: ChaCha8Rng,
}

impl NoiseState {
    fn fresh(spec: NoiseSpec) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(spec.seed);
        NoiseState { spec, rng }
    }

    fn perturb(&mut self, h: &mut f64, c: &mut [f64]) {
        // Channels are drawn in a fixed order (objective first); channels
        // with zero std consume nothing so the zero-noise wrapper is
        // bit-exact with the bare oracle.
        if self.spec.objective_std > 0.0 {
            let z: f64 = self.rng.sample(StandardNormal);
            *h += self.spec.objective_std * z;
        }
        for (cj, std) in c.iter_mut().zip(&self.spec.constraint_std) {
            if *std > 0.0 {
                let z: f64 = self.rng.sample(StandardNormal);
                *cj += std * z;
            }
        }
    }
}

/// A constrained black-box problem: minimize `h(x)` subject to `c_j(x) <= 0`,
/// with dual multipliers confined to the box `[0, y_upper]`.
///
/// The struct is immutable after construction except for its query counter
/// and (when wrapped) the noise stream; `evaluate` therefore takes `&mut self`.
/// Cloning yields an independent instance with a fresh counter and a
/// reset noise stream, which is how parallel runs obtain private oracles.
pub struct OracleProblem {
    name: String,
    dim_x: usize,
    dim_y: usize,
    y_upper: Vec<f64>,
    x_box: Option<(Vec<f64>, Vec<f64>)>,
    eval: EvalFn,
    true_grads: Option<GradFn>,
    known_kkt: Option<(Vec<f64>, Vec<f64>)>,
    noise: Option<NoiseState>,
    counter: QueryCounter,
}

impl fmt::Debug for OracleProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OracleProblem")
            .field("name", &self.name)
            .field("dim_x", &self.dim_x)
            .field("dim_y", &self.dim_y)
            .field("noisy", &self.noise.is_some())
            .field("queries", &self.counter.total())
            .finish()
    }
}

impl Clone for OracleProblem {
    /// A clone shares the underlying evaluation map but starts with a fresh
    /// query counter and a reset noise stream.
    fn clone(&self) -> Self {
        OracleProblem {
            name: self.name.clone(),
            dim_x: self.dim_x,
            dim_y: self.dim_y,
            y_upper: self.y_upper.clone(),
            x_box: self.x_box.clone(),
            eval: Arc::clone(&self.eval),
            true_grads: self.true_grads.clone(),
            known_kkt: self.known_kkt.clone(),
            noise: self
                .noise
                .as_ref()
                .map(|n| NoiseState::fresh(n.spec.clone())),
            counter: QueryCounter::default(),
        }
    }
}

impl OracleProblem {
    /// Builds a problem from its pieces. `y_upper` must be finite and
    /// strictly positive per entry; its length sets the constraint count.
    pub fn new(
        name: impl Into<String>,
        dim_x: usize,
        y_upper: Vec<f64>,
        eval: EvalFn,
    ) -> Result<Self> {
        if dim_x == 0 {
            return Err(Error::InvalidDimension(
                "dim_x must be at least 1".to_string(),
            ));
        }
        if let Some(bad) = y_upper.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "y_upper entries must be finite and > 0, got {bad}"
            )));
        }
        Ok(OracleProblem {
            name: name.into(),
            dim_x,
            dim_y: y_upper.len(),
            y_upper,
            x_box: None,
            eval,
            true_grads: None,
            known_kkt: None,
            noise: None,
            counter: QueryCounter::default(),
        })
    }

    /// Attaches a decomposable box `[lower, upper]` on x (strictly ordered
    /// componentwise).
    pub fn with_x_box(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != self.dim_x || upper.len() != self.dim_x {
            return Err(Error::DimensionMismatch {
                expected: self.dim_x,
                got: lower.len().max(upper.len()),
            });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(Error::InvalidParameter(
                "x box must satisfy lower < upper componentwise".to_string(),
            ));
        }
        self.x_box = Some((lower, upper));
        Ok(self)
    }

    /// Attaches analytic gradients. These are metrics-only: solvers have no
    /// way to reach them.
    pub fn with_true_grads(mut self, grads: GradFn) -> Self {
        self.true_grads = Some(grads);
        self
    }

    /// Stores a closed-form KKT point as a test fixture.
    pub fn with_known_kkt(mut self, x: Vec<f64>, y: Vec<f64>) -> Self {
        self.known_kkt = Some((x, y));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim_x(&self) -> usize {
        self.dim_x
    }

    pub fn dim_y(&self) -> usize {
        self.dim_y
    }

    pub fn y_upper(&self) -> &[f64] {
        &self.y_upper
    }

    pub fn x_box(&self) -> Option<(&[f64], &[f64])> {
        self.x_box.as_ref().map(|(l, u)| (l.as_slice(), u.as_slice()))
    }

    pub fn known_kkt(&self) -> Option<(&[f64], &[f64])> {
        self.known_kkt
            .as_ref()
            .map(|(x, y)| (x.as_slice(), y.as_slice()))
    }

    pub fn has_true_grads(&self) -> bool {
        self.true_grads.is_some()
    }

    pub fn queries(&self) -> &QueryCounter {
        &self.counter
    }

    /// Closes the current query-accounting window (one solver iteration).
    pub fn mark_iteration(&mut self) {
        self.counter.mark_iteration();
    }

    /// One simultaneous observation of `(h(x), c(x))`. Costs exactly one query.
    pub fn evaluate(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        if x.len() != self.dim_x {
            return Err(Error::DimensionMismatch {
                expected: self.dim_x,
                got: x.len(),
            });
        }
        if let Some(index) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput { index });
        }
        let (mut h, mut c) = (self.eval)(x);
        if let Some(noise) = self.noise.as_mut() {
            noise.perturb(&mut h, &mut c);
        }
        self.counter.bump();
        if !h.is_finite() || c.iter().any(|v| !v.is_finite()) {
            return Err(Error::OracleFailure { x: x.to_vec() });
        }
        Ok((h, c))
    }

    /// Metrics-only access to analytic gradients; solvers must not call this.
    pub(crate) fn analytic_grads(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        if x.len() != self.dim_x {
            return Err(Error::DimensionMismatch {
                expected: self.dim_x,
                got: x.len(),
            });
        }
        match &self.true_grads {
            Some(g) => Ok(g(x)),
            None => Err(Error::UnsupportedMetric(format!(
                "problem `{}` carries no analytic gradients",
                self.name
            ))),
        }
    }
}

/// Wraps a problem with additive Gaussian observation noise. Query counting
/// and analytic gradients pass through unchanged (metrics stay noise-free).
pub fn wrap_noise(problem: OracleProblem, spec: NoiseSpec) -> Result<OracleProblem> {
    spec.validate(problem.dim_y)?;
    let mut wrapped = problem;
    wrapped.noise = Some(NoiseState::fresh(spec));
    Ok(wrapped)
}

/// Small analytic test problem with a closed-form KKT point:
/// `h(x) = 0.5 * ||x - x0||^2` under the single constraint `||x||^2 - 1 <= 0`,
/// with a seeded center `x0` of norm 2. The KKT point is `(x0 / 2, 1/2)`.
pub fn make_quad_ball(d: usize, seed: u64) -> Result<OracleProblem> {
    if d == 0 {
        return Err(Error::InvalidDimension(
            "quad-ball needs d >= 1".to_string(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x0: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let n = la::norm(&x0);
    // A zero Gaussian draw has probability zero but would break the rescale.
    let scale = if n > 0.0 { 2.0 / n } else { 0.0 };
    for v in &mut x0 {
        *v *= scale;
    }
    if !(la::norm(&x0) > 0.0) {
        x0 = vec![0.0; d];
        x0[0] = 2.0;
    }

    let center = x0.clone();
    let eval: EvalFn = Arc::new(move |x: &[f64]| {
        let h = 0.5 * la::dist(x, &center).powi(2);
        let c = la::dot(x, x) - 1.0;
        (h, vec![c])
    });

    let center_g = x0.clone();
    let grads: GradFn = Arc::new(move |x: &[f64]| {
        let gh = la::sub(x, &center_g);
        let jc = vec![x.iter().map(|v| 2.0 * v).collect::<Vec<f64>>()];
        (gh, jc)
    });

    let x_star: Vec<f64> = x0.iter().map(|v| 0.5 * v).collect();
    Ok(OracleProblem::new("quad-ball", d, vec![10.0], eval)?
        .with_true_grads(grads)
        .with_known_kkt(x_star, vec![0.5]))
}

struct ToyGridParams {
    quad_a: Vec<f64>,
    quad_b: Vec<f64>,
    // Voltage surrogate: v_j(x) = 1 + sum_s eps[j][s] * tanh(w[j][s] . x).
    volt_eps: Vec<Vec<f64>>,
    volt_w: Vec<Vec<Vec<f64>>>,
    v_lower: f64,
    v_upper: f64,
    // Injection surrogate: p_c(x) = sum_i x_i + sum_s q[s] * tanh(m[s] . x).
    inj_q: Vec<f64>,
    inj_m: Vec<Vec<f64>>,
    demand: f64,
}

impl ToyGridParams {
    fn voltage(&self, j: usize, x: &[f64]) -> f64 {
        let mut v = 1.0;
        for (eps, w) in self.volt_eps[j].iter().zip(&self.volt_w[j]) {
            v += eps * la::dot(w, x).tanh();
        }
        v
    }

    fn penalty(&self, x: &[f64]) -> f64 {
        (0..self.volt_eps.len())
            .map(|j| {
                let v = self.voltage(j, x);
                let above = (v - self.v_upper).max(0.0);
                let below = (self.v_lower - v).max(0.0);
                above * above + below * below
            })
            .sum()
    }

    fn injection(&self, x: &[f64]) -> f64 {
        let mut p: f64 = x.iter().sum();
        for (q, m) in self.inj_q.iter().zip(&self.inj_m) {
            p += q * la::dot(m, x).tanh();
        }
        p
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let quad: f64 = x
            .iter()
            .enumerate()
            .map(|(i, v)| self.quad_a[i] * v * v + self.quad_b[i] * v)
            .sum();
        quad + self.penalty(x)
    }

    fn grad_objective(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        let mut g: Vec<f64> = (0..d)
            .map(|i| 2.0 * self.quad_a[i] * x[i] + self.quad_b[i])
            .collect();
        for j in 0..self.volt_eps.len() {
            let v = self.voltage(j, x);
            let coeff = 2.0 * (v - self.v_upper).max(0.0) - 2.0 * (self.v_lower - v).max(0.0);
            if coeff != 0.0 {
                for (eps, w) in self.volt_eps[j].iter().zip(&self.volt_w[j]) {
                    let t = la::dot(w, x).tanh();
                    let sech2 = 1.0 - t * t;
                    for (gi, wi) in g.iter_mut().zip(w) {
                        *gi += coeff * eps * sech2 * wi;
                    }
                }
            }
        }
        g
    }

    fn grad_injection(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![1.0; x.len()];
        for (q, m) in self.inj_q.iter().zip(&self.inj_m) {
            let t = la::dot(m, x).tanh();
            let sech2 = 1.0 - t * t;
            for (gi, mi) in g.iter_mut().zip(m) {
                *gi += q * sech2 * mi;
            }
        }
        g
    }
}

/// Synthetic load-dispatch benchmark: seeded quadratic per-user costs plus a
/// smooth voltage-band hinge penalty, a nonlinear injection constraint that
/// is active at the optimum, and a box `[0, x_upper]` on the loads.
///
/// The constraint requires the injection surrogate to stay at or above 90%
/// of its value at the box midpoint, so minimizing cost alone (x = 0) is
/// infeasible and the dual dynamics are always exercised.
pub fn make_toy_grid(d: usize, seed: u64) -> Result<OracleProblem> {
    if d < 2 {
        return Err(Error::InvalidDimension(
            "toy-grid needs d >= 2".to_string(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let quad_a: Vec<f64> = (0..d).map(|_| rng.random_range(0.5..1.5)).collect();
    let quad_b: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..5.0)).collect();

    let volt_rank = 3;
    let inv_sqrt_d = 1.0 / (d as f64).sqrt();
    let volt_eps: Vec<Vec<f64>> = (0..d)
        .map(|_| {
            (0..volt_rank)
                .map(|_| rng.random_range(-0.025..0.025))
                .collect()
        })
        .collect();
    let volt_w: Vec<Vec<Vec<f64>>> = (0..d)
        .map(|_| {
            (0..volt_rank)
                .map(|_| {
                    (0..d)
                        .map(|_| {
                            let z: f64 = rng.sample(StandardNormal);
                            z * inv_sqrt_d
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    // The injection correction rides on a few dense network modes with
    // sizable weights; the resulting low-rank curvature (through the
    // multiplier) is what makes full-gradient steps stiff while coordinate
    // steps stay cheap, as in networked dispatch.
    let inj_rank = 4;
    let q_scale = 0.5 * d as f64 / inj_rank as f64;
    let inj_q: Vec<f64> = (0..inj_rank)
        .map(|_| {
            let mag = rng.random_range(0.5..1.5) * q_scale;
            if rng.random::<bool>() {
                mag
            } else {
                -mag
            }
        })
        .collect();
    let inj_m: Vec<Vec<f64>> = (0..inj_rank)
        .map(|_| {
            (0..d)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    1.7 * z * inv_sqrt_d
                })
                .collect()
        })
        .collect();

    let x_upper: Vec<f64> = (0..d).map(|_| rng.random_range(1.5..2.5)).collect();

    let mut params = ToyGridParams {
        quad_a,
        quad_b,
        volt_eps,
        volt_w,
        v_lower: 0.96,
        v_upper: 1.04,
        inj_q,
        inj_m,
        demand: 0.0,
    };
    // Require 90% of the injection at the box midpoint, which makes x = 0
    // infeasible while leaving x_upper strictly feasible (Slater point).
    let midpoint: Vec<f64> = x_upper.iter().map(|u| 0.5 * u).collect();
    params.demand = 0.9 * params.injection(&midpoint);

    let params = Arc::new(params);
    let p_eval = Arc::clone(&params);
    let eval: EvalFn = Arc::new(move |x: &[f64]| {
        let h = p_eval.objective(x);
        let c = p_eval.demand - p_eval.injection(x);
        (h, vec![c])
    });
    let p_grad = Arc::clone(&params);
    let grads: GradFn = Arc::new(move |x: &[f64]| {
        let gh = p_grad.grad_objective(x);
        let jc = vec![p_grad
            .grad_injection(x)
            .into_iter()
            .map(|v| -v)
            .collect::<Vec<f64>>()];
        (gh, jc)
    });

    Ok(
        OracleProblem::new("toy-grid", d, vec![10.0], eval)?
            .with_x_box(vec![0.0; d], x_upper)?
            .with_true_grads(grads),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluate_counts_and_is_deterministic() {
        let mut p = make_quad_ball(4, 7).unwrap();
        for _ in 0..5 {
            p.evaluate(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        }
        assert_eq!(p.queries().total(), 5);
        let a = p.evaluate(&[0.0; 4]).unwrap();
        assert_eq!(p.queries().total(), 6);
        let b = p.evaluate(&[0.0; 4]).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn quad_ball_closed_forms() {
        // At x = 0: h = 0.5 * ||x0||^2 = 2 (since ||x0|| = 2), c = -1.
        let mut p = make_quad_ball(2, 3).unwrap();
        let (h, c) = p.evaluate(&[0.0, 0.0]).unwrap();
        assert!((h - 2.0).abs() < 1e-12, "h(0) = {h}");
        assert!((c[0] + 1.0).abs() < 1e-12);

        // At x = x0: h = 0, c = ||x0||^2 - 1 = 3.
        let (x_star, _) = {
            let k = p.known_kkt().unwrap();
            (k.0.to_vec(), k.1.to_vec())
        };
        let x0: Vec<f64> = x_star.iter().map(|v| 2.0 * v).collect();
        let (h, c) = p.evaluate(&x0).unwrap();
        assert!(h.abs() < 1e-12);
        assert!((c[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn quad_ball_rejects_zero_dim() {
        assert!(matches!(
            make_quad_ball(0, 1),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn rejects_non_finite_input_and_mismatched_len() {
        let mut p = make_quad_ball(3, 1).unwrap();
        assert!(matches!(
            p.evaluate(&[f64::NAN, 0.0, 0.0]),
            Err(Error::NonFiniteInput { index: 0 })
        ));
        assert!(matches!(
            p.evaluate(&[0.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        // Failed evaluations must not count.
        assert_eq!(p.queries().total(), 0);
    }

    #[test]
    fn oracle_failure_carries_input() {
        let eval: EvalFn = Arc::new(|x: &[f64]| (x[0].ln(), vec![]));
        let mut p = OracleProblem::new("log", 1, vec![], eval).unwrap();
        match p.evaluate(&[-1.0]) {
            Err(Error::OracleFailure { x }) => assert_eq!(x, vec![-1.0]),
            other => panic!("expected oracle failure, got {other:?}"),
        }
    }

    #[test]
    fn toy_grid_is_seed_deterministic() {
        let mut p1 = make_toy_grid(8, 42).unwrap();
        let mut p2 = make_toy_grid(8, 42).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..2.0)).collect();
            let a = p1.evaluate(&x).unwrap();
            let b = p2.evaluate(&x).unwrap();
            assert_eq!(a.0, b.0);
            assert_eq!(a.1, b.1);
        }
    }

    #[test]
    fn toy_grid_structure() {
        let mut p = make_toy_grid(8, 42).unwrap();
        // At x = 0 all voltages sit at 1.0, inside the band, so the hinge
        // penalty vanishes and h(0) = 0; the constraint must be violated
        // there so the dual dynamics are exercised.
        let (h, c) = p.evaluate(&[0.0; 8]).unwrap();
        assert_eq!(h, 0.0);
        assert!(c[0] > 0.0, "constraint must be active at x = 0, got {}", c[0]);
        // The box corner is strictly feasible (Slater point).
        let upper: Vec<f64> = p.x_box().unwrap().1.to_vec();
        let (_, c_up) = p.evaluate(&upper).unwrap();
        assert!(c_up[0] < 0.0, "x_upper must be feasible, got {}", c_up[0]);
    }

    #[test]
    fn toy_grid_rejects_d1() {
        assert!(make_toy_grid(1, 0).is_err());
    }

    #[test]
    fn toy_grid_gradients_match_finite_differences() {
        let p = make_toy_grid(6, 9).unwrap();
        let mut probe = p.clone();
        let x: Vec<f64> = vec![0.7, 1.3, 0.2, 1.9, 1.1, 0.5];
        let (gh, jc) = p.analytic_grads(&x).unwrap();
        let eps = 1e-6;
        for i in 0..6 {
            let mut xp = x.clone();
            xp[i] += eps;
            let mut xm = x.clone();
            xm[i] -= eps;
            let (hp, cp) = probe.evaluate(&xp).unwrap();
            let (hm, cm) = probe.evaluate(&xm).unwrap();
            let dh = (hp - hm) / (2.0 * eps);
            let dc = (cp[0] - cm[0]) / (2.0 * eps);
            assert!((dh - gh[i]).abs() < 1e-5, "dh[{i}]: {dh} vs {}", gh[i]);
            assert!((dc - jc[0][i]).abs() < 1e-5, "dc[{i}]: {dc} vs {}", jc[0][i]);
        }
    }

    #[test]
    fn noise_zero_is_bit_exact_and_validated() {
        let base = make_quad_ball(3, 11).unwrap();
        let mut plain = base.clone();
        let mut wrapped = wrap_noise(
            base.clone(),
            NoiseSpec::constraint_only(0.0, 1, 99),
        )
        .unwrap();
        let x = [0.3, -0.2, 0.5];
        let a = plain.evaluate(&x).unwrap();
        let b = wrapped.evaluate(&x).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);

        let bad = NoiseSpec {
            objective_std: -1.0,
            constraint_std: vec![0.0],
            seed: 0,
        };
        assert!(matches!(
            wrap_noise(base, bad),
            Err(Error::InvalidNoise(_))
        ));
    }

    #[test]
    fn noise_mean_matches_clt_bound() {
        let base = make_quad_ball(2, 13).unwrap();
        let mut plain = base.clone();
        let x = [0.4, 0.1];
        let (h_true, _) = plain.evaluate(&x).unwrap();
        let std = 0.5;
        let mut noisy = wrap_noise(
            base,
            NoiseSpec {
                objective_std: std,
                constraint_std: vec![0.0],
                seed: 2024,
            },
        )
        .unwrap();
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += noisy.evaluate(&x).unwrap().0;
        }
        let mean = sum / n as f64;
        let tol = 4.0 * std / (n as f64).sqrt();
        assert!(
            (mean - h_true).abs() < tol,
            "mean {mean} vs true {h_true}, tol {tol}"
        );
    }

    #[test]
    fn noise_std_five_on_constraint_channel() {
        let base = make_quad_ball(2, 13).unwrap();
        let mut plain = base.clone();
        let x = [0.4, 0.1];
        let (_, c_true) = plain.evaluate(&x).unwrap();
        let mut noisy = wrap_noise(base, NoiseSpec::constraint_only(5.0, 1, 7)).unwrap();
        let n = 50_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let (_, c) = noisy.evaluate(&x).unwrap();
            sum += c[0];
            sum_sq += c[0] * c[0];
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!((mean - c_true[0]).abs() < 4.0 * 5.0 / (n as f64).sqrt());
        assert!((var.sqrt() - 5.0).abs() < 0.1, "sample std {}", var.sqrt());
    }

    #[test]
    fn clone_resets_counter_and_noise_stream() {
        let base = make_quad_ball(2, 1).unwrap();
        let mut noisy = wrap_noise(base, NoiseSpec::constraint_only(1.0, 1, 5)).unwrap();
        let x = [0.2, 0.2];
        let first: Vec<f64> = (0..10).map(|_| noisy.evaluate(&x).unwrap().1[0]).collect();
        let mut fresh = noisy.clone();
        assert_eq!(fresh.queries().total(), 0);
        let second: Vec<f64> = (0..10).map(|_| fresh.evaluate(&x).unwrap().1[0]).collect();
        assert_eq!(first, second);
    }

    #[test]
    fn per_iteration_log_sums_to_total() {
        let mut p = make_quad_ball(2, 1).unwrap();
        let x = [0.0, 0.0];
        for n in [3u64, 1, 4] {
            for _ in 0..n {
                p.evaluate(&x).unwrap();
            }
            p.mark_iteration();
        }
        assert_eq!(p.queries().per_iteration(), &[3, 1, 4]);
        assert_eq!(
            p.queries().per_iteration().iter().sum::<u64>(),
            p.queries().total()
        );
    }
}
