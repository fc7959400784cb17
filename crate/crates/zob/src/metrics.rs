//! Evaluation metrics: proximal-gradient stationarity, the Moreau-envelope
//! gradient oracle, closed-form best-response values, and KKT residuals.
//!
//! These consume the analytic gradients a benchmark problem carries; they
//! are evaluation-side instruments and their oracle queries land on whatever
//! problem instance the caller passes (the harness uses dedicated metrics
//! clones so solver query accounting stays exact).

use crate::algorithms::project_box;
use crate::error::{Error, Result};
use crate::la;
use crate::problems::OracleProblem;

/// Norms of the proximal-gradient stationarity vector, optionally combined
/// with the Moreau-envelope gradient norm.
#[derive(Debug, Clone)]
pub struct StationarityReport {
    /// Norm of the primal component (Lagrangian x-gradient, or its projected
    /// form when the run clamps iterates to a box).
    pub primal_grad_norm: f64,
    /// Norm of the scaled dual projection residual.
    pub dual_residual_norm: f64,
    /// Norm of the stacked vector; equals the hypotenuse of the two parts.
    pub grad_norm: f64,
    /// Moreau-envelope gradient norm, when computed.
    pub moreau_norm: Option<f64>,
    /// min(grad_norm, moreau_norm): the headline stationarity measure.
    pub measure: f64,
}

impl StationarityReport {
    /// Attaches a Moreau-envelope gradient norm and refreshes the measure.
    pub fn with_moreau(mut self, moreau_norm: f64) -> Self {
        self.moreau_norm = Some(moreau_norm);
        self.measure = self.grad_norm.min(moreau_norm);
        self
    }
}

/// Computes the proximal-gradient stationarity at `(x, y)`.
///
/// `dual_step` must be the dual step size the solver actually used; the dual
/// residual is `(y - P_[0,yu][y + beta c(x)]) / beta`. When `box_step` is
/// given and the problem carries an x box, the primal component switches to
/// the projected form `(x - P_X[x - alpha grad_x f]) / alpha`.
///
/// Costs one oracle query (for `c(x)`); the gradients are analytic.
pub fn prox_grad_stationarity(
    problem: &mut OracleProblem,
    x: &[f64],
    y: &[f64],
    dual_step: f64,
    box_step: Option<f64>,
) -> Result<StationarityReport> {
    if !(dual_step > 0.0 && dual_step.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "dual step must be finite and > 0, got {dual_step}"
        )));
    }
    if let Some(a) = box_step {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "box step must be finite and > 0, got {a}"
            )));
        }
    }
    let gx = lagrangian_grad_x(problem, x, y)?;
    let (_, c) = problem.evaluate(x)?;

    let primal: Vec<f64> = match (box_step, problem.x_box()) {
        (Some(alpha), Some((lower, upper))) => {
            let stepped: Vec<f64> = x.iter().zip(&gx).map(|(xi, gi)| xi - alpha * gi).collect();
            let projected = project_box(&stepped, lower, upper)?;
            x.iter()
                .zip(&projected)
                .map(|(xi, pi)| (xi - pi) / alpha)
                .collect()
        }
        _ => gx,
    };

    let stepped_y: Vec<f64> = y.iter().zip(&c).map(|(yi, ci)| yi + dual_step * ci).collect();
    let projected_y = project_box(&stepped_y, &vec![0.0; y.len()], problem.y_upper())?;
    let dual: Vec<f64> = y
        .iter()
        .zip(&projected_y)
        .map(|(yi, pi)| (yi - pi) / dual_step)
        .collect();

    let primal_grad_norm = la::norm(&primal);
    let dual_residual_norm = la::norm(&dual);
    let grad_norm = (primal_grad_norm * primal_grad_norm
        + dual_residual_norm * dual_residual_norm)
        .sqrt();
    Ok(StationarityReport {
        primal_grad_norm,
        dual_residual_norm,
        grad_norm,
        moreau_norm: None,
        measure: grad_norm,
    })
}

fn lagrangian_grad_x(problem: &OracleProblem, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != problem.dim_y() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim_y(),
            got: y.len(),
        });
    }
    let (mut gx, jc) = problem.analytic_grads(x)?;
    for (yj, row) in y.iter().zip(&jc) {
        for (gi, ri) in gx.iter_mut().zip(row) {
            *gi += yj * ri;
        }
    }
    Ok(gx)
}

/// Best-response value over the dual box: since the Lagrangian is linear in
/// y on `[0, y_upper]`, the maximum is attained coordinatewise at a vertex,
/// giving `h(x) + sum_j y_upper_j * max(c_j(x), 0)`. One oracle query.
pub fn phi_closed_form(problem: &mut OracleProblem, x: &[f64]) -> Result<f64> {
    let (h, c) = problem.evaluate(x)?;
    let hinge: f64 = c
        .iter()
        .zip(problem.y_upper())
        .map(|(cj, ub)| ub * cj.max(0.0))
        .sum();
    Ok(h + hinge)
}

/// Inner-solver settings for the Moreau-envelope oracle.
#[derive(Debug, Clone)]
pub struct MoreauConfig {
    /// Smoothness estimate for the best-response value function; sets the
    /// inner step size `1 / (2 (phi_smoothness + 2 L))`.
    pub phi_smoothness: f64,
    pub max_iters: usize,
    /// Tolerance on the inner (projected) gradient norm.
    pub tol: f64,
    /// Minimize over the problem's x box instead of all of R^d.
    pub restrict_to_box: bool,
}

impl MoreauConfig {
    pub fn new(phi_smoothness: f64) -> Self {
        MoreauConfig {
            phi_smoothness,
            max_iters: 10_000,
            tol: 1e-8,
            restrict_to_box: false,
        }
    }
}

/// Minimizer of `phi(u) + weak_convexity * ||u - x||^2`, found by
/// (projected) subgradient descent on the closed-form best-response value.
/// The hinge subgradient takes coefficient `y_upper_j` where `c_j > 0` and 0
/// where `c_j <= 0`.
///
/// Fails with a diagnostic residual if the iteration cap is reached before
/// the tolerance; the harness then records the metric as unavailable.
pub fn moreau_prox(
    problem: &mut OracleProblem,
    x: &[f64],
    weak_convexity: f64,
    cfg: &MoreauConfig,
) -> Result<Vec<f64>> {
    if !(weak_convexity > 0.0 && weak_convexity.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "weak convexity parameter must be finite and > 0, got {weak_convexity}"
        )));
    }
    if !(cfg.phi_smoothness > 0.0) || cfg.tol <= 0.0 {
        return Err(Error::InvalidParameter(
            "Moreau inner config needs phi_smoothness > 0 and tol > 0".to_string(),
        ));
    }
    let step = 1.0 / (2.0 * (cfg.phi_smoothness + 2.0 * weak_convexity));
    let box_bounds = if cfg.restrict_to_box {
        problem.x_box().map(|(l, u)| (l.to_vec(), u.to_vec()))
    } else {
        None
    };
    let mut u = match &box_bounds {
        Some((l, up)) => project_box(x, l, up)?,
        None => x.to_vec(),
    };
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.max_iters {
        let (_, c) = problem.evaluate(&u)?;
        let (mut g, jc) = problem.analytic_grads(&u)?;
        for ((cj, ub), row) in c.iter().zip(problem.y_upper()).zip(&jc) {
            if *cj > 0.0 {
                for (gi, ri) in g.iter_mut().zip(row) {
                    *gi += ub * ri;
                }
            }
        }
        for (gi, (ui, xi)) in g.iter_mut().zip(u.iter().zip(x)) {
            *gi += 2.0 * weak_convexity * (ui - xi);
        }
        let stepped: Vec<f64> = u.iter().zip(&g).map(|(ui, gi)| ui - step * gi).collect();
        let next = match &box_bounds {
            Some((l, up)) => project_box(&stepped, l, up)?,
            None => stepped,
        };
        residual = la::dist(&u, &next) / step;
        u = next;
        if residual <= cfg.tol {
            return Ok(u);
        }
    }
    Err(Error::InnerSolve {
        residual,
        iters: cfg.max_iters,
    })
}

/// Moreau-envelope gradient norm `2 L ||x - prox(x)||` at parameter `1/(2L)`.
pub fn moreau_gradient_norm(
    problem: &mut OracleProblem,
    x: &[f64],
    weak_convexity: f64,
    cfg: &MoreauConfig,
) -> Result<f64> {
    let prox = moreau_prox(problem, x, weak_convexity, cfg)?;
    Ok(2.0 * weak_convexity * la::dist(x, &prox))
}

/// Moreau-envelope value `min_u phi(u) + L ||u - x||^2`, used by the
/// finite-difference consistency checks.
pub fn moreau_value(
    problem: &mut OracleProblem,
    x: &[f64],
    weak_convexity: f64,
    cfg: &MoreauConfig,
) -> Result<f64> {
    let prox = moreau_prox(problem, x, weak_convexity, cfg)?;
    let phi = phi_closed_form(problem, &prox)?;
    Ok(phi + weak_convexity * la::dist(x, &prox).powi(2))
}

/// First-order optimality residuals at `(x, y)`.
#[derive(Debug, Clone)]
pub struct KktReport {
    /// `||grad h(x) + y^T grad c(x)||`.
    pub grad_lagrangian_norm: f64,
    /// `max_j c_j(x)`; negative infinity for unconstrained problems.
    pub max_violation: f64,
    /// `max_j |y_j c_j(x)|`.
    pub max_complementary_slack: f64,
    /// Every multiplier is nonnegative.
    pub dual_nonneg_ok: bool,
    /// Every multiplier is strictly below its upper bound, so the dual box
    /// was not binding and the multipliers are meaningful.
    pub dual_strictly_interior: bool,
}

impl KktReport {
    /// Whether the point passes at tolerance `tol` (gradient, violation, and
    /// slack residuals all within `tol`, multipliers nonnegative).
    pub fn passes(&self, tol: f64) -> bool {
        self.grad_lagrangian_norm <= tol
            && self.max_violation <= tol
            && self.max_complementary_slack <= tol
            && self.dual_nonneg_ok
    }
}

/// Computes KKT residuals; one oracle query plus analytic gradients.
pub fn kkt_residuals(problem: &mut OracleProblem, x: &[f64], y: &[f64]) -> Result<KktReport> {
    let grad = lagrangian_grad_x(problem, x, y)?;
    let (_, c) = problem.evaluate(x)?;
    let max_violation = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_complementary_slack = y
        .iter()
        .zip(&c)
        .map(|(yj, cj)| (yj * cj).abs())
        .fold(0.0f64, f64::max);
    Ok(KktReport {
        grad_lagrangian_norm: la::norm(&grad),
        max_violation,
        max_complementary_slack,
        dual_nonneg_ok: y.iter().all(|v| *v >= 0.0),
        dual_strictly_interior: y.iter().zip(problem.y_upper()).all(|(yj, ub)| yj < ub),
    })
}

/// Relative error `(value - reference) / reference`.
pub fn relative_error(value: f64, reference: f64) -> Result<f64> {
    if reference == 0.0 {
        return Err(Error::DivisionDomain(
            "relative error is undefined for a zero reference value".to_string(),
        ));
    }
    Ok((value - reference) / reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_quad_ball, EvalFn, GradFn};
    use std::sync::Arc;

    /// Unconstrained scalar problem `h(u) = a (u - m)^2` with analytic grads.
    fn scalar_quadratic(a: f64, m: f64) -> OracleProblem {
        let eval: EvalFn = Arc::new(move |x: &[f64]| (a * (x[0] - m).powi(2), vec![]));
        let grads: GradFn = Arc::new(move |x: &[f64]| (vec![2.0 * a * (x[0] - m)], vec![]));
        OracleProblem::new("scalar-quad", 1, vec![], eval)
            .unwrap()
            .with_true_grads(grads)
    }

    /// One-dimensional problem with a constant constraint value.
    fn constant_constraint(c: f64, y_upper: f64) -> OracleProblem {
        let eval: EvalFn = Arc::new(move |_: &[f64]| (0.0, vec![c]));
        let grads: GradFn = Arc::new(|_: &[f64]| (vec![0.0], vec![vec![0.0]]));
        OracleProblem::new("const-c", 1, vec![y_upper], eval)
            .unwrap()
            .with_true_grads(grads)
    }

    #[test]
    fn stationarity_vanishes_at_quad_ball_kkt_point() {
        let mut p = make_quad_ball(6, 21).unwrap();
        let (xs, ys) = {
            let k = p.known_kkt().unwrap();
            (k.0.to_vec(), k.1.to_vec())
        };
        for beta in [0.01, 0.1, 1.0] {
            let rep = prox_grad_stationarity(&mut p, &xs, &ys, beta, None).unwrap();
            assert!(rep.grad_norm <= 1e-10, "beta {beta}: {}", rep.grad_norm);
        }
    }

    #[test]
    fn dual_residual_regimes() {
        // Inactive constraint with zero multiplier: exact fixed point.
        let mut p = constant_constraint(-0.7, 10.0);
        let rep = prox_grad_stationarity(&mut p, &[0.0], &[0.0], 0.25, None).unwrap();
        assert_eq!(rep.dual_residual_norm, 0.0);

        // Interior multiplier with c = 0: fixed point.
        let mut p = constant_constraint(0.0, 10.0);
        let rep = prox_grad_stationarity(&mut p, &[0.0], &[3.0], 0.25, None).unwrap();
        assert_eq!(rep.dual_residual_norm, 0.0);

        // Saturated multiplier with c >= 0: fixed point.
        let mut p = constant_constraint(2.0, 10.0);
        let rep = prox_grad_stationarity(&mut p, &[0.0], &[10.0], 0.25, None).unwrap();
        assert_eq!(rep.dual_residual_norm, 0.0);

        // Hand-computed interior residual: y = 0.5, c = 1, beta = 0.1,
        // y_upper = 10 -> (0.5 - 0.6)/0.1 = -1.
        let mut p = constant_constraint(1.0, 10.0);
        let rep = prox_grad_stationarity(&mut p, &[0.0], &[0.5], 0.1, None).unwrap();
        assert!((rep.dual_residual_norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grad_norm_is_the_hypotenuse() {
        let mut p = make_quad_ball(4, 2).unwrap();
        let x = vec![0.3, -0.1, 0.8, 0.2];
        let y = vec![0.7];
        let rep = prox_grad_stationarity(&mut p, &x, &y, 0.05, None).unwrap();
        let lhs = rep.grad_norm * rep.grad_norm;
        let rhs = rep.primal_grad_norm.powi(2) + rep.dual_residual_norm.powi(2);
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
        // Without a Moreau part the measure is the gradient norm.
        assert_eq!(rep.measure, rep.grad_norm);
        let with = rep.clone().with_moreau(rep.grad_norm * 0.5);
        assert_eq!(with.measure, with.moreau_norm.unwrap());
    }

    #[test]
    fn phi_closed_form_cases() {
        // Feasible point: the hinge vanishes.
        let mut p = make_quad_ball(3, 5).unwrap();
        let phi = phi_closed_form(&mut p, &[0.0; 3]).unwrap();
        let (h, c) = p.evaluate(&[0.0; 3]).unwrap();
        assert!(c[0] < 0.0);
        assert_eq!(phi, h);

        // h = 0, c = 2, y_upper = 3 -> phi = 6.
        let mut p = constant_constraint(2.0, 3.0);
        assert_eq!(phi_closed_form(&mut p, &[0.0]).unwrap(), 6.0);

        // No constraints at all: phi = h.
        let mut p = scalar_quadratic(1.0, 0.5);
        let phi = phi_closed_form(&mut p, &[2.0]).unwrap();
        assert!((phi - 2.25).abs() < 1e-15);
    }

    #[test]
    fn moreau_oracle_matches_quadratic_closed_forms() {
        // phi(u) = u^2, L = 1, x = 1: prox = 0.5, norm = 1.
        let mut p = scalar_quadratic(1.0, 0.0);
        let cfg = MoreauConfig::new(2.0);
        let norm = moreau_gradient_norm(&mut p, &[1.0], 1.0, &cfg).unwrap();
        assert!((norm - 1.0).abs() < 1e-8, "norm = {norm}");

        // phi(u) = (u - 3)^2, L = 2, x = 0: prox = 1, norm = 4.
        let mut p = scalar_quadratic(1.0, 3.0);
        let norm = moreau_gradient_norm(&mut p, &[0.0], 2.0, &cfg).unwrap();
        assert!((norm - 4.0).abs() < 1e-8, "norm = {norm}");

        // Global minimizer is a fixed point.
        let mut p = scalar_quadratic(1.5, -0.75);
        let norm = moreau_gradient_norm(&mut p, &[-0.75], 1.0, &MoreauConfig::new(3.0)).unwrap();
        assert!(norm <= 1e-7, "norm = {norm}");
    }

    #[test]
    fn moreau_prox_quadratic_family() {
        // phi(u) = a (u - m)^2 with L >= a has prox (a m + L x) / (a + L).
        for (a, m, l, x) in [(0.7, 1.2, 1.0, -0.4), (2.0, -3.0, 2.5, 1.1), (0.1, 5.0, 4.0, 0.0)] {
            let mut p = scalar_quadratic(a, m);
            let cfg = MoreauConfig::new(2.0 * a);
            let prox = moreau_prox(&mut p, &[x], l, &cfg).unwrap();
            let expect = (a * m + l * x) / (a + l);
            assert!(
                (prox[0] - expect).abs() < 1e-8,
                "a={a}, m={m}: {} vs {expect}",
                prox[0]
            );
        }
    }

    #[test]
    fn moreau_inner_solver_reports_non_convergence() {
        let mut p = scalar_quadratic(1.0, 0.0);
        let mut cfg = MoreauConfig::new(2.0);
        cfg.max_iters = 1;
        cfg.tol = 1e-14;
        match moreau_gradient_norm(&mut p, &[5.0], 1.0, &cfg) {
            Err(Error::InnerSolve { residual, iters }) => {
                assert!(residual > cfg.tol);
                assert_eq!(iters, 1);
            }
            other => panic!("expected inner-solve diagnostic, got {other:?}"),
        }
    }

    #[test]
    fn moreau_gradient_matches_finite_differences_of_envelope() {
        // Central differences of the envelope value against 2L (x - prox).
        // The base point is chosen so the prox stays strictly inside the
        // ball: there the hinge is inactive and the envelope differentiable.
        let mut p = make_quad_ball(3, 17).unwrap();
        let l = 4.0;
        let cfg = MoreauConfig::new(30.0);
        let x = vec![0.2, -0.1, 0.15];
        let prox = moreau_prox(&mut p, &x, l, &cfg).unwrap();
        let analytic: Vec<f64> = x.iter().zip(&prox).map(|(xi, pi)| 2.0 * l * (xi - pi)).collect();
        let delta = 1e-4;
        for i in 0..3 {
            let mut xp = x.clone();
            xp[i] += delta;
            let mut xm = x.clone();
            xm[i] -= delta;
            let vp = moreau_value(&mut p, &xp, l, &cfg).unwrap();
            let vm = moreau_value(&mut p, &xm, l, &cfg).unwrap();
            let fd = (vp - vm) / (2.0 * delta);
            let denom = analytic[i].abs().max(1e-6);
            assert!(
                ((fd - analytic[i]) / denom).abs() < 1e-3,
                "coordinate {i}: fd {fd} vs {a}",
                a = analytic[i]
            );
        }
    }

    #[test]
    fn kkt_residuals_on_fixtures() {
        // Closed-form KKT point of the quad ball.
        let mut p = make_quad_ball(5, 33).unwrap();
        let (xs, ys) = {
            let k = p.known_kkt().unwrap();
            (k.0.to_vec(), k.1.to_vec())
        };
        let rep = kkt_residuals(&mut p, &xs, &ys).unwrap();
        assert!(rep.grad_lagrangian_norm <= 1e-10);
        assert!(rep.max_violation <= 1e-10);
        assert!(rep.max_complementary_slack <= 1e-10);
        assert!(rep.dual_nonneg_ok);
        assert!(rep.dual_strictly_interior);
        assert!(rep.passes(1e-8));

        // Unconstrained minimizer with an inactive constraint and y = 0.
        let eval: EvalFn = Arc::new(|x: &[f64]| (x[0] * x[0], vec![x[0] - 1.0]));
        let grads: GradFn = Arc::new(|x: &[f64]| (vec![2.0 * x[0]], vec![vec![1.0]]));
        let mut p = OracleProblem::new("inactive", 1, vec![10.0], eval)
            .unwrap()
            .with_true_grads(grads);
        let rep = kkt_residuals(&mut p, &[0.0], &[0.0]).unwrap();
        assert!(rep.passes(1e-8));

        // Complementary slackness violation is detected.
        let mut p = constant_constraint(0.5, 10.0);
        let rep = kkt_residuals(&mut p, &[0.0], &[1.0]).unwrap();
        assert_eq!(rep.max_complementary_slack, 0.5);
        assert!(!rep.passes(1e-4));
    }

    #[test]
    fn relative_error_basics() {
        assert_eq!(relative_error(3.0, 3.0).unwrap(), 0.0);
        assert!((relative_error(1.1 * 4.0, 4.0).unwrap() - 0.1).abs() < 1e-12);
        assert!(matches!(
            relative_error(1.0, 0.0),
            Err(Error::DivisionDomain(_))
        ));
    }

    #[test]
    fn stationarity_requires_true_grads() {
        let eval: EvalFn = Arc::new(|x: &[f64]| (x[0], vec![]));
        let mut p = OracleProblem::new("blind", 1, vec![], eval).unwrap();
        assert!(matches!(
            prox_grad_stationarity(&mut p, &[0.0], &[], 0.1, None),
            Err(Error::UnsupportedMetric(_))
        ));
    }

    #[test]
    fn projected_stationarity_uses_box_form() {
        // h(x) = x, box [0, 1]: at x = 0 the plain gradient is 1 but the
        // projected residual vanishes (0 is the constrained minimizer).
        let eval: EvalFn = Arc::new(|x: &[f64]| (x[0], vec![]));
        let grads: GradFn = Arc::new(|_: &[f64]| (vec![1.0], vec![]));
        let mut p = OracleProblem::new("lin-box", 1, vec![], eval)
            .unwrap()
            .with_x_box(vec![0.0], vec![1.0])
            .unwrap()
            .with_true_grads(grads);
        let plain = prox_grad_stationarity(&mut p, &[0.0], &[], 0.1, None).unwrap();
        assert_eq!(plain.primal_grad_norm, 1.0);
        let projected = prox_grad_stationarity(&mut p, &[0.0], &[], 0.1, Some(0.5)).unwrap();
        assert_eq!(projected.primal_grad_norm, 0.0);
    }
}
