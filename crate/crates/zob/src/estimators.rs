//! Zeroth-order gradient estimators for the Lagrangian `f(x, y) = h(x) + y.c(x)`.
//!
//! Every estimator assembles `f` from simultaneous `(h, c)` observations and
//! returns the values seen at the base point alongside the gradient, so the
//! dual ascent step can reuse `c(x)` without spending further queries.
//! Query costs are exact: two for [`rge`], `d + 1` for [`cge_full`], and
//! `b + 1` for [`bcge`] / [`smoothed_bcge`].

use std::collections::HashMap;

use rand::Rng;
use rand::RngExt;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::la;
use crate::problems::OracleProblem;

/// Smoothing radii `r_k = min(r0 / (k+1)^decay, cap)` over a fixed horizon.
///
/// The checked constructors enforce the sum condition
/// `sum_{k=0..=horizon} r_k^2 <= 0.99 / block_size` required by the
/// convergence guarantees of the block solvers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadiusSchedule {
    initial: f64,
    decay: f64,
    cap: f64,
    block_size: usize,
    horizon: usize,
}

/// Safety factor applied to the radius sum condition.
const RADIUS_SUM_SAFETY: f64 = 0.99;

impl RadiusSchedule {
    /// Builds a schedule and verifies the sum-of-squares condition.
    pub fn new(
        initial: f64,
        decay: f64,
        cap: f64,
        block_size: usize,
        horizon: usize,
    ) -> Result<Self> {
        let s = Self::unchecked(initial, decay, cap, block_size, horizon)?;
        let budget = RADIUS_SUM_SAFETY / block_size as f64;
        let sum = s.sum_sq();
        if sum > budget {
            return Err(Error::RadiusCondition(format!(
                "sum of squared radii over k = 0..={horizon} is {sum:.3e}, \
                 exceeding {RADIUS_SUM_SAFETY}/b = {budget:.3e}"
            )));
        }
        Ok(s)
    }

    /// Builds a schedule without the sum condition. Meant for noisy-oracle
    /// runs, where useful radii are far larger than the condition admits.
    pub fn unchecked(
        initial: f64,
        decay: f64,
        cap: f64,
        block_size: usize,
        horizon: usize,
    ) -> Result<Self> {
        if !(initial > 0.0) {
            return Err(Error::InvalidRadius(initial));
        }
        if !(cap > 0.0) {
            return Err(Error::InvalidRadius(cap));
        }
        if !(decay >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "radius decay exponent must be >= 0, got {decay}"
            )));
        }
        if block_size == 0 {
            return Err(Error::InvalidBlock(
                "block size must be at least 1".to_string(),
            ));
        }
        Ok(RadiusSchedule {
            initial,
            decay,
            cap,
            block_size,
            horizon,
        })
    }

    /// Default schedule: `r0 = 1e-1`, decay `1.2`, cap `2e-4`, rescaled
    /// (if needed) so the sum condition holds for the given horizon.
    pub fn auto(block_size: usize, horizon: usize) -> Result<Self> {
        let (mut initial, decay, mut cap) = (1e-1, 1.2, 2e-4);
        let probe = Self::unchecked(initial, decay, cap, block_size, horizon)?;
        let budget = RADIUS_SUM_SAFETY / block_size as f64;
        let sum = probe.sum_sq();
        if sum > budget {
            let scale = (budget / sum).sqrt();
            initial *= scale;
            cap *= scale;
        }
        Self::new(initial, decay, cap, block_size, horizon)
    }

    pub fn radius(&self, k: usize) -> f64 {
        (self.initial / ((k + 1) as f64).powf(self.decay)).min(self.cap)
    }

    pub fn sum_sq(&self) -> f64 {
        (0..=self.horizon).map(|k| self.radius(k).powi(2)).sum()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }
}

/// Law for the random perturbation direction used by [`rge`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionLaw {
    /// Standard Gaussian entries.
    #[default]
    Gaussian,
    /// Uniform on the sphere of radius sqrt(d).
    SphereSqrtD,
}

/// Samples a perturbation direction of length `d`.
pub fn sample_direction<R: Rng>(law: DirectionLaw, d: usize, rng: &mut R) -> Vec<f64> {
    let mut z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    if law == DirectionLaw::SphereSqrtD {
        let n = la::norm(&z);
        if n > 0.0 {
            let scale = (d as f64).sqrt() / n;
            for v in &mut z {
                *v *= scale;
            }
        }
    }
    z
}

/// A sorted, duplicate-free set of coordinate indices of size `b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSample {
    indices: Vec<usize>,
}

impl BlockSample {
    /// The full block `{0, .., d-1}`.
    pub fn full(d: usize) -> Self {
        BlockSample {
            indices: (0..d).collect(),
        }
    }

    /// Builds a block from explicit indices (validated and sorted).
    pub fn from_indices(d: usize, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if indices.is_empty() {
            return Err(Error::InvalidBlock("block is empty".to_string()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= d) {
            return Err(Error::InvalidBlock(format!(
                "index {bad} out of range for dimension {d}"
            )));
        }
        Ok(BlockSample { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Uniformly samples a size-`b` subset of `{0, .., d-1}` via a sparse partial
/// Fisher-Yates shuffle (O(b) time and memory).
pub fn sample_block<R: Rng>(d: usize, b: usize, rng: &mut R) -> Result<BlockSample> {
    if b == 0 || b > d {
        return Err(Error::InvalidBlock(format!(
            "block size must satisfy 1 <= b <= d, got b = {b}, d = {d}"
        )));
    }
    let mut swapped: HashMap<usize, usize> = HashMap::new();
    let mut indices = Vec::with_capacity(b);
    for i in 0..b {
        let j = rng.random_range(i..d);
        let vj = *swapped.get(&j).unwrap_or(&j);
        let vi = *swapped.get(&i).unwrap_or(&i);
        swapped.insert(j, vi);
        indices.push(vj);
    }
    indices.sort_unstable();
    Ok(BlockSample { indices })
}

/// A gradient estimate together with the values observed at the base point.
///
/// `base_objective` / `base_constraints` are the raw `(h(x), c(x))`
/// observation that anchored the finite differences; the dual step reuses
/// them at zero additional query cost.
#[derive(Debug, Clone)]
pub struct GradEstimate {
    pub grad: Vec<f64>,
    pub base_objective: f64,
    pub base_constraints: Vec<f64>,
}

fn lagrangian(h: f64, c: &[f64], y: &[f64]) -> f64 {
    h + la::dot(y, c)
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0) {
        return Err(Error::InvalidRadius(r));
    }
    Ok(())
}

/// Two-point randomized estimator along `direction`:
/// `((f(x + r z, y) - f(x, y)) / r) * z`. Two queries.
pub fn rge(
    problem: &mut OracleProblem,
    x: &[f64],
    y: &[f64],
    r: f64,
    direction: &[f64],
) -> Result<GradEstimate> {
    check_radius(r)?;
    if direction.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: direction.len(),
        });
    }
    let (h0, c0) = problem.evaluate(x)?;
    let f0 = lagrangian(h0, &c0, y);
    let shifted: Vec<f64> = x.iter().zip(direction).map(|(xi, zi)| xi + r * zi).collect();
    let (h1, c1) = problem.evaluate(&shifted)?;
    let f1 = lagrangian(h1, &c1, y);
    let slope = (f1 - f0) / r;
    let grad = direction.iter().map(|zi| slope * zi).collect();
    Ok(GradEstimate {
        grad,
        base_objective: h0,
        base_constraints: c0,
    })
}

/// Coordinate-wise estimator over all `d` dimensions. `d + 1` queries.
pub fn cge_full(problem: &mut OracleProblem, x: &[f64], y: &[f64], r: f64) -> Result<GradEstimate> {
    let block = BlockSample::full(x.len());
    bcge(problem, x, y, r, &block)
}

/// Block coordinate-wise estimator: finite-difference partials on the block
/// coordinates, exact zeros elsewhere. `b + 1` queries, all sharing one base
/// evaluation.
pub fn bcge(
    problem: &mut OracleProblem,
    x: &[f64],
    y: &[f64],
    r: f64,
    block: &BlockSample,
) -> Result<GradEstimate> {
    check_radius(r)?;
    if let Some(&bad) = block.indices().iter().find(|&&i| i >= x.len()) {
        return Err(Error::InvalidBlock(format!(
            "index {bad} out of range for dimension {}",
            x.len()
        )));
    }
    let (h0, c0) = problem.evaluate(x)?;
    let f0 = lagrangian(h0, &c0, y);
    let mut grad = vec![0.0; x.len()];
    let mut shifted = x.to_vec();
    for &i in block.indices() {
        shifted[i] = x[i] + r;
        let (hi, ci) = problem.evaluate(&shifted)?;
        grad[i] = (lagrangian(hi, &ci, y) - f0) / r;
        shifted[i] = x[i];
    }
    Ok(GradEstimate {
        grad,
        base_objective: h0,
        base_constraints: c0,
    })
}

/// Block estimator for the proximally smoothed Lagrangian
/// `f(x, y) + (p/2) ||x - z||^2`: the finite-difference part of [`bcge`]
/// plus the analytic term `p * (x - z)` on the block coordinates.
/// Still `b + 1` queries.
pub fn smoothed_bcge(
    problem: &mut OracleProblem,
    x: &[f64],
    y: &[f64],
    z: &[f64],
    prox_weight: f64,
    r: f64,
    block: &BlockSample,
) -> Result<GradEstimate> {
    if !(prox_weight >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "prox weight must be >= 0, got {prox_weight}"
        )));
    }
    if z.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: z.len(),
        });
    }
    let mut est = bcge(problem, x, y, r, block)?;
    for &i in block.indices() {
        est.grad[i] += prox_weight * (x[i] - z[i]);
    }
    Ok(est)
}
