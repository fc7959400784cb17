//! Experiment-plan files: TOML with `[problem]`, `[run]`, optional
//! `[noise]`, and one or more `[[solvers]]` tables. Unknown keys anywhere
//! are a hard error listing every offender, so typos cannot silently fall
//! back to defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::algorithms::Algorithm;
use crate::error::{Error, Result};
use crate::estimators::{DirectionLaw, RadiusSchedule};
use crate::problems::{make_quad_ball, make_toy_grid, NoiseSpec, OracleProblem};

/// Which benchmark problem a plan runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    QuadBall,
    ToyGrid,
}

impl ProblemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::QuadBall => "quad-ball",
            ProblemKind::ToyGrid => "toy-grid",
        }
    }
}

/// Problem selection plus an optional user-supplied smoothness estimate.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub dim: usize,
    pub seed: u64,
    pub l_estimate: Option<f64>,
}

impl ProblemSpec {
    pub fn build(&self) -> Result<OracleProblem> {
        match self.kind {
            ProblemKind::QuadBall => make_quad_ball(self.dim, self.seed),
            ProblemKind::ToyGrid => make_toy_grid(self.dim, self.seed),
        }
    }
}

/// Observation-noise settings; the scalar constraint std is broadcast over
/// all constraint channels.
#[derive(Debug, Clone)]
pub struct NoisePlan {
    pub objective_std: f64,
    pub constraint_std: f64,
    pub seed: u64,
}

impl NoisePlan {
    pub fn to_spec(&self, dim_y: usize) -> NoiseSpec {
        NoiseSpec {
            objective_std: self.objective_std,
            constraint_std: vec![self.constraint_std; dim_y],
            seed: self.seed,
        }
    }
}

/// Radius-schedule override for one solver cell.
#[derive(Debug, Clone)]
pub struct RadiusPlan {
    pub initial: f64,
    pub decay: f64,
    pub cap: f64,
    pub horizon: Option<usize>,
    pub enforce_sum_condition: bool,
}

/// One solver cell of the plan (runs once per seed).
#[derive(Debug, Clone)]
pub struct SolverPlan {
    pub algorithm: Algorithm,
    pub block_size: usize,
    /// Derive step sizes from the theory schedules instead of explicit ones.
    pub theory: bool,
    pub primal_step: Option<f64>,
    pub dual_step: Option<f64>,
    pub prox_weight: Option<f64>,
    pub anchor_mix: Option<f64>,
    pub direction: DirectionLaw,
    pub project_to_box: bool,
    pub radius: Option<RadiusPlan>,
}

impl SolverPlan {
    /// Stable cell label used in reports and failure listings.
    pub fn label(&self) -> String {
        format!("{}-b{}", self.algorithm, self.block_size)
    }

    /// Builds this cell's radius schedule for a given run horizon.
    pub fn build_radius(&self, max_iters: usize) -> Result<RadiusSchedule> {
        let b_eff = if self.algorithm.is_block() {
            self.block_size
        } else {
            1
        };
        match &self.radius {
            None => RadiusSchedule::auto(b_eff, max_iters),
            Some(r) => {
                let horizon = r.horizon.unwrap_or(max_iters);
                if horizon < max_iters {
                    return Err(Error::RadiusCondition(format!(
                        "radius horizon {horizon} is shorter than max_iters {max_iters}; \
                         the sum-of-squares budget certifies only the declared horizon"
                    )));
                }
                if r.enforce_sum_condition {
                    RadiusSchedule::new(r.initial, r.decay, r.cap, b_eff, horizon)
                } else {
                    RadiusSchedule::unchecked(r.initial, r.decay, r.cap, b_eff, horizon)
                }
            }
        }
    }
}

/// A fully validated experiment plan.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub problem: ProblemSpec,
    pub noise: Option<NoisePlan>,
    pub max_iters: usize,
    pub seeds: Vec<u64>,
    pub metrics_stride: usize,
    /// Weak-convexity / smoothness constant for the Moreau metric column;
    /// the column stays empty when absent.
    pub moreau_l: Option<f64>,
    /// Uniform jitter half-width applied to the default starting point,
    /// scaled by the box width on box problems.
    pub x0_jitter: f64,
    pub out_dir: PathBuf,
    pub solvers: Vec<SolverPlan>,
}

impl ExperimentPlan {
    pub fn total_runs(&self) -> usize {
        self.solvers.len() * self.seeds.len()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: RawProblem,
    run: RawRun,
    noise: Option<RawNoise>,
    solvers: Vec<RawSolver>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    kind: ProblemKind,
    dim: usize,
    seed: u64,
    l_estimate: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    max_iters: usize,
    seeds: Vec<u64>,
    metrics_stride: Option<usize>,
    moreau_l: Option<f64>,
    x0_jitter: Option<f64>,
    out_dir: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    objective_std: Option<f64>,
    constraint_std: Option<f64>,
    seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    algorithm: String,
    block_size: Option<usize>,
    theory: Option<bool>,
    primal_step: Option<f64>,
    dual_step: Option<f64>,
    prox_weight: Option<f64>,
    anchor_mix: Option<f64>,
    direction: Option<DirectionLaw>,
    project_to_box: Option<bool>,
    radius: Option<RawRadius>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRadius {
    initial: f64,
    decay: f64,
    cap: f64,
    horizon: Option<usize>,
    enforce_sum_condition: Option<bool>,
}

const PROBLEM_KEYS: &[&str] = &["kind", "dim", "seed", "l_estimate"];
const RUN_KEYS: &[&str] = &[
    "max_iters",
    "seeds",
    "metrics_stride",
    "moreau_l",
    "x0_jitter",
    "out_dir",
];
const NOISE_KEYS: &[&str] = &["objective_std", "constraint_std", "seed"];
const SOLVER_KEYS: &[&str] = &[
    "algorithm",
    "block_size",
    "theory",
    "primal_step",
    "dual_step",
    "prox_weight",
    "anchor_mix",
    "direction",
    "project_to_box",
    "radius",
];
const RADIUS_KEYS: &[&str] = &["initial", "decay", "cap", "horizon", "enforce_sum_condition"];

fn collect_unknown(table: &toml::Table, allowed: &[&str], prefix: &str, out: &mut Vec<String>) {
    for key in table.keys() {
        if !allowed.contains(&key.as_str()) {
            if prefix.is_empty() {
                out.push(key.clone());
            } else {
                out.push(format!("{prefix}.{key}"));
            }
        }
    }
}

fn find_unknown_keys(table: &toml::Table) -> Vec<String> {
    let mut unknown = Vec::new();
    collect_unknown(table, &["problem", "run", "noise", "solvers"], "", &mut unknown);
    if let Some(t) = table.get("problem").and_then(|v| v.as_table()) {
        collect_unknown(t, PROBLEM_KEYS, "problem", &mut unknown);
    }
    if let Some(t) = table.get("run").and_then(|v| v.as_table()) {
        collect_unknown(t, RUN_KEYS, "run", &mut unknown);
    }
    if let Some(t) = table.get("noise").and_then(|v| v.as_table()) {
        collect_unknown(t, NOISE_KEYS, "noise", &mut unknown);
    }
    if let Some(arr) = table.get("solvers").and_then(|v| v.as_array()) {
        for (i, entry) in arr.iter().enumerate() {
            if let Some(t) = entry.as_table() {
                let prefix = format!("solvers[{i}]");
                collect_unknown(t, SOLVER_KEYS, &prefix, &mut unknown);
                if let Some(r) = t.get("radius").and_then(|v| v.as_table()) {
                    collect_unknown(r, RADIUS_KEYS, &format!("{prefix}.radius"), &mut unknown);
                }
            }
        }
    }
    unknown
}

/// Parses and validates a plan from TOML text.
pub fn parse_config(text: &str) -> Result<ExperimentPlan> {
    let table: toml::Table = text
        .parse()
        .map_err(|e| Error::Config(format!("malformed TOML: {e}")))?;
    let unknown = find_unknown_keys(&table);
    if !unknown.is_empty() {
        return Err(Error::Config(format!(
            "unknown config keys: {}",
            unknown.join(", ")
        )));
    }
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
    validate(raw)
}

/// Loads and validates a plan file.
pub fn load_config(path: &Path) -> Result<ExperimentPlan> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

fn validate(raw: RawConfig) -> Result<ExperimentPlan> {
    let problem = ProblemSpec {
        kind: raw.problem.kind,
        dim: raw.problem.dim,
        seed: raw.problem.seed,
        l_estimate: raw.problem.l_estimate,
    };
    if problem.dim == 0 {
        return Err(Error::Config("problem.dim must be at least 1".to_string()));
    }
    if let Some(l) = problem.l_estimate {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::Config(format!(
                "problem.l_estimate must be finite and > 0, got {l}"
            )));
        }
    }

    if raw.run.seeds.is_empty() {
        return Err(Error::Config("run.seeds must list at least one seed".to_string()));
    }
    let metrics_stride = raw.run.metrics_stride.unwrap_or(10);
    if metrics_stride == 0 {
        return Err(Error::Config("run.metrics_stride must be >= 1".to_string()));
    }
    let x0_jitter = raw.run.x0_jitter.unwrap_or(0.0);
    if !(x0_jitter >= 0.0 && x0_jitter.is_finite()) {
        return Err(Error::Config(format!(
            "run.x0_jitter must be finite and >= 0, got {x0_jitter}"
        )));
    }
    if let Some(l) = raw.run.moreau_l {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::Config(format!(
                "run.moreau_l must be finite and > 0, got {l}"
            )));
        }
    }

    let noise = match raw.noise {
        None => None,
        Some(n) => {
            let objective_std = n.objective_std.unwrap_or(0.0);
            let constraint_std = n.constraint_std.unwrap_or(0.0);
            if !(objective_std >= 0.0) || !(constraint_std >= 0.0) {
                return Err(Error::Config(
                    "noise std-devs must be >= 0".to_string(),
                ));
            }
            Some(NoisePlan {
                objective_std,
                constraint_std,
                seed: n.seed,
            })
        }
    };

    if raw.solvers.is_empty() {
        return Err(Error::Config(
            "at least one [[solvers]] table is required".to_string(),
        ));
    }
    let mut solvers = Vec::with_capacity(raw.solvers.len());
    for (i, s) in raw.solvers.into_iter().enumerate() {
        let algorithm: Algorithm = s.algorithm.parse()?;
        let block_size = match (algorithm.is_block(), s.block_size) {
            (true, None) => {
                return Err(Error::Config(format!(
                    "solvers[{i}]: block_size is required for {algorithm}"
                )))
            }
            (true, Some(b)) => {
                if b == 0 || b > problem.dim {
                    return Err(Error::InvalidBlock(format!(
                        "solvers[{i}]: block size must satisfy 1 <= b <= d, got b = {b}, d = {}",
                        problem.dim
                    )));
                }
                b
            }
            (false, b) => b.unwrap_or(1),
        };
        let theory = s.theory.unwrap_or(false);
        if !theory && (s.primal_step.is_none() || s.dual_step.is_none()) {
            return Err(Error::Config(format!(
                "solvers[{i}]: primal_step and dual_step are required unless theory = true"
            )));
        }
        for (name, v) in [("primal_step", s.primal_step), ("dual_step", s.dual_step)] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::Config(format!(
                        "solvers[{i}].{name} must be finite and >= 0, got {v}"
                    )));
                }
            }
        }
        if let Some(g) = s.anchor_mix {
            if !(g > 0.0 && g <= 1.0) {
                return Err(Error::Config(format!(
                    "solvers[{i}].anchor_mix must lie in (0, 1], got {g}"
                )));
            }
        }
        let radius = s.radius.map(|r| RadiusPlan {
            initial: r.initial,
            decay: r.decay,
            cap: r.cap,
            horizon: r.horizon,
            enforce_sum_condition: r.enforce_sum_condition.unwrap_or(true),
        });
        let plan = SolverPlan {
            algorithm,
            block_size,
            theory,
            primal_step: s.primal_step,
            dual_step: s.dual_step,
            prox_weight: s.prox_weight,
            anchor_mix: s.anchor_mix,
            direction: s.direction.unwrap_or_default(),
            project_to_box: s.project_to_box.unwrap_or(true),
            radius,
        };
        // Surface radius-condition violations at load time.
        plan.build_radius(raw.run.max_iters)?;
        solvers.push(plan);
    }

    Ok(ExperimentPlan {
        problem,
        noise,
        max_iters: raw.run.max_iters,
        seeds: raw.run.seeds,
        metrics_stride,
        moreau_l: raw.run.moreau_l,
        x0_jitter,
        out_dir: PathBuf::from(raw.run.out_dir.unwrap_or_else(|| "out".to_string())),
        solvers,
    })
}
