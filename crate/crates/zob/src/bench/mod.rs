//! Benchmark harness: executes experiment plans over seeds, records
//! per-iteration traces with solver-query / metrics-query separation, and
//! emits deterministic CSV tables.
//!
//! Solver queries are counted on a private clone of the problem per run;
//! every evaluation a metric needs (trace objective/violation columns, the
//! stationarity dual residual, the Moreau inner solver, smoothness probing,
//! reference-value fixtures) lands on separate clones and is reported as the
//! metrics budget.

mod config;

pub use config::{
    load_config, parse_config, ExperimentPlan, NoisePlan, ProblemKind, ProblemSpec, RadiusPlan,
    SolverPlan,
};

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algorithms::{
    initial_iterate, probe_l, project_box, run_from, schedule_defaults, Algorithm, Iterate,
    SolverConfig,
};
use crate::error::{Error, Result};
use crate::estimators::cge_full;
use crate::la;
use crate::metrics::{
    kkt_residuals, moreau_gradient_norm, prox_grad_stationarity, relative_error, MoreauConfig,
};
use crate::problems::OracleProblem;

/// One row of a run trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    /// Cumulative solver queries after iteration `k` (metrics excluded).
    pub queries_cum: u64,
    pub objective: f64,
    pub max_violation: f64,
    pub grad_norm: f64,
    pub moreau_norm: Option<f64>,
    pub rel_error: Option<f64>,
}

/// Per-run trace: one record per iterate, `k = 0..=K`.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub algorithm: Algorithm,
    pub block_size: usize,
    pub seed: u64,
    /// Hash of everything but the seed; seeds of one cell share it.
    pub config_fingerprint: u64,
    pub records: Vec<TraceRecord>,
    pub solver_queries: u64,
    pub metrics_queries: u64,
    /// True when the problem carried no analytic gradients and the
    /// stationarity column was estimated by coordinate differences.
    pub approx_grads: bool,
}

/// A failed cell-seed pair; failures do not abort the plan.
#[derive(Debug, Clone)]
pub struct CellFailure {
    pub cell: String,
    pub seed: u64,
    pub error: String,
}

/// Everything `execute` produces.
#[derive(Debug)]
pub struct ExecutionReport {
    pub traces: Vec<RunTrace>,
    pub failures: Vec<CellFailure>,
    /// Queries spent probing the smoothness constant (metrics budget).
    pub probe_queries: u64,
}

/// Execution knobs coming from the CLI.
#[derive(Debug, Clone, Default)]
pub struct ExecOptions {
    /// Worker threads; 0 or 1 runs sequentially.
    pub jobs: usize,
    /// Added to every seed in the plan.
    pub seed_offset: u64,
    /// Use theory schedules for every cell regardless of the plan.
    pub force_theory: bool,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn per_step_cost(cfg: &SolverConfig) -> u64 {
    match cfg.algorithm {
        Algorithm::ZobGda | Algorithm::ZobSgda => cfg.block_size as u64 + 1,
        Algorithm::RgeGda => 2,
    }
}

/// Resolves a plan cell into a concrete solver configuration.
pub fn resolve_cell_config(
    plan: &ExperimentPlan,
    cell: &SolverPlan,
    force_theory: bool,
    l_estimate: Option<f64>,
) -> Result<SolverConfig> {
    let theory = cell.theory || force_theory;
    let mut cfg = if theory {
        let l = l_estimate.ok_or_else(|| {
            Error::InvalidParameter(
                "theory schedules need a smoothness estimate (problem.l_estimate or probe)"
                    .to_string(),
            )
        })?;
        schedule_defaults(l, plan.problem.dim, plan.max_iters, cell.block_size, cell.algorithm)?
    } else {
        SolverConfig {
            algorithm: cell.algorithm,
            primal_step: cell.primal_step.unwrap_or(0.0),
            dual_step: cell.dual_step.unwrap_or(0.0),
            anchor_mix: cell.anchor_mix.unwrap_or(if cell.algorithm == Algorithm::ZobSgda {
                0.3
            } else {
                1.0
            }),
            prox_weight: cell.prox_weight.unwrap_or(if cell.algorithm == Algorithm::ZobSgda {
                10.0
            } else {
                0.0
            }),
            block_size: cell.block_size,
            max_iters: plan.max_iters,
            radius: cell.build_radius(plan.max_iters)?,
            seed: 0,
            direction: cell.direction,
            project_to_box: cell.project_to_box,
        }
    };
    if theory {
        cfg.direction = cell.direction;
        cfg.project_to_box = cell.project_to_box;
    }
    Ok(cfg)
}

fn fingerprint(plan: &ExperimentPlan, cfg: &SolverConfig) -> u64 {
    let noise = match &plan.noise {
        Some(n) => format!("{:.17e},{:.17e},{}", n.objective_std, n.constraint_std, n.seed),
        None => "none".to_string(),
    };
    let canon = format!(
        "{kind},{dim},{pseed};{noise};{k},{stride},{moreau:?},{jitter:.17e};\
         {algo},{b},{a:.17e},{be:.17e},{g:.17e},{p:.17e},{proj},{dir:?};{r:?}",
        kind = plan.problem.kind.as_str(),
        dim = plan.problem.dim,
        pseed = plan.problem.seed,
        k = plan.max_iters,
        stride = plan.metrics_stride,
        moreau = plan.moreau_l,
        jitter = plan.x0_jitter,
        algo = cfg.algorithm,
        b = cfg.block_size,
        a = cfg.primal_step,
        be = cfg.dual_step,
        g = cfg.anchor_mix,
        p = cfg.prox_weight,
        proj = cfg.project_to_box,
        dir = cfg.direction,
        r = cfg.radius,
    );
    fnv1a(canon.as_bytes())
}

/// Stationarity norm for the trace, falling back to coordinate-difference
/// gradient estimates (radius 1e-6) when the problem carries no analytic
/// gradients. Returns the norm and whether the fallback was used.
fn trace_stationarity(
    problem: &mut OracleProblem,
    x: &[f64],
    y: &[f64],
    dual_step: f64,
    box_step: Option<f64>,
) -> Result<(f64, bool)> {
    match prox_grad_stationarity(problem, x, y, dual_step, box_step) {
        Ok(rep) => Ok((rep.grad_norm, false)),
        Err(Error::UnsupportedMetric(_)) => {
            let est = cge_full(problem, x, y, 1e-6)?;
            let gx = est.grad;
            let primal: Vec<f64> = match (box_step, problem.x_box()) {
                (Some(alpha), Some((lower, upper))) => {
                    let stepped: Vec<f64> =
                        x.iter().zip(&gx).map(|(xi, gi)| xi - alpha * gi).collect();
                    let projected = project_box(&stepped, lower, upper)?;
                    x.iter()
                        .zip(&projected)
                        .map(|(xi, pi)| (xi - pi) / alpha)
                        .collect()
                }
                _ => gx,
            };
            let stepped_y: Vec<f64> = y
                .iter()
                .zip(&est.base_constraints)
                .map(|(yi, ci)| yi + dual_step * ci)
                .collect();
            let projected_y = project_box(&stepped_y, &vec![0.0; y.len()], problem.y_upper())?;
            let dual_sq: f64 = y
                .iter()
                .zip(&projected_y)
                .map(|(yi, pi)| ((yi - pi) / dual_step).powi(2))
                .sum();
            Ok(((la::dot(&primal, &primal) + dual_sq).sqrt(), true))
        }
        Err(e) => Err(e),
    }
}

fn jittered_initial(
    problem: &OracleProblem,
    cfg: &SolverConfig,
    jitter: f64,
    run_seed: u64,
) -> Iterate {
    let mut init = initial_iterate(problem, cfg);
    if jitter > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(la::mix_seeds(run_seed, 0x4a49_5454));
        match problem.x_box() {
            Some((lower, upper)) => {
                for ((xi, l), u) in init.x.iter_mut().zip(lower).zip(upper) {
                    let half_width = 0.5 * (u - l);
                    *xi += jitter * half_width * rng.random_range(-1.0..1.0);
                    *xi = xi.max(*l).min(*u);
                }
            }
            None => {
                for xi in init.x.iter_mut() {
                    *xi += jitter * rng.random_range(-1.0..1.0);
                }
            }
        }
        if let Some(z) = init.z.as_mut() {
            z.clone_from(&init.x);
        }
    }
    init
}

/// Runs one (cell, seed) pair and assembles its trace.
pub fn run_single(
    plan: &ExperimentPlan,
    cfg_proto: &SolverConfig,
    base: &OracleProblem,
    h_star: Option<f64>,
    run_seed: u64,
) -> Result<RunTrace> {
    let cfg = cfg_proto.clone().with_seed(run_seed);
    let mut solver_problem = base.clone();
    if let Some(noise) = &plan.noise {
        solver_problem = crate::problems::wrap_noise(
            solver_problem,
            noise.to_spec(base.dim_y()).stream_for_run(run_seed),
        )?;
    }
    let mut metrics_problem = base.clone();

    let box_step = (cfg.project_to_box && base.x_box().is_some() && cfg.primal_step > 0.0)
        .then_some(cfg.primal_step);
    let step_cost = per_step_cost(&cfg);
    let init = jittered_initial(&solver_problem, &cfg, plan.x0_jitter, run_seed);

    let mut records: Vec<TraceRecord> = Vec::with_capacity(cfg.max_iters + 1);
    let mut approx_grads = false;
    let mut metrics_err: Option<Error> = None;

    let out = {
        let mut record = |it: &Iterate| {
            if metrics_err.is_some() {
                return;
            }
            let res = (|| -> Result<TraceRecord> {
                let (h, c) = metrics_problem.evaluate(&it.x)?;
                let max_violation = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let (grad_norm, approx) = trace_stationarity(
                    &mut metrics_problem,
                    &it.x,
                    &it.y,
                    cfg.dual_step,
                    box_step,
                )?;
                approx_grads |= approx;
                let rel_error = match h_star {
                    Some(hs) => Some(relative_error(h, hs)?),
                    None => None,
                };
                Ok(TraceRecord {
                    k: it.k,
                    queries_cum: it.k as u64 * step_cost,
                    objective: h,
                    max_violation,
                    grad_norm,
                    moreau_norm: None,
                    rel_error,
                })
            })();
            match res {
                Ok(rec) => records.push(rec),
                Err(e) => metrics_err = Some(e),
            }
        };
        record(&init);
        let init_for_run = init.clone();
        run_from(&mut solver_problem, &cfg, init_for_run, |it| record(it))?
    };
    if let Some(e) = metrics_err {
        return Err(e);
    }

    // The Moreau column is filled on a stride (it is expensive): every
    // `metrics_stride` iterations plus the final iterate.
    if let Some(l) = plan.moreau_l {
        let mut mo_cfg = MoreauConfig::new(l);
        mo_cfg.restrict_to_box = box_step.is_some();
        for (k, rec) in records.iter_mut().enumerate() {
            if k % plan.metrics_stride != 0 && k != cfg.max_iters {
                continue;
            }
            match moreau_gradient_norm(&mut metrics_problem, &out.iterates[k].x, l, &mo_cfg) {
                Ok(m) => rec.moreau_norm = Some(m),
                // Non-convergence at a kink: record the metric as
                // unavailable for this k.
                Err(Error::InnerSolve { .. }) => rec.moreau_norm = None,
                Err(e) => return Err(e),
            }
        }
    }

    debug_assert_eq!(out.total_queries, cfg.max_iters as u64 * step_cost);

    Ok(RunTrace {
        algorithm: cfg.algorithm,
        block_size: cfg.block_size,
        seed: run_seed,
        config_fingerprint: fingerprint(plan, &cfg),
        records,
        solver_queries: cfg.max_iters as u64 * step_cost,
        metrics_queries: metrics_problem.queries().total(),
        approx_grads,
    })
}

/// Executes every (cell, seed) pair of the plan. Individual failures are
/// collected, not fatal; the report lists them per cell.
pub fn execute(plan: &ExperimentPlan, opts: &ExecOptions) -> Result<ExecutionReport> {
    let base = plan.problem.build()?;
    let needs_theory = opts.force_theory || plan.solvers.iter().any(|s| s.theory);
    let mut probe_queries = 0;
    let l_estimate = if needs_theory && plan.problem.l_estimate.is_none() {
        let mut probe_clone = base.clone();
        let l = probe_l(
            &mut probe_clone,
            20,
            la::mix_seeds(plan.problem.seed, 0x5052_4f42),
        )?;
        probe_queries = probe_clone.queries().total();
        Some(l)
    } else {
        plan.problem.l_estimate
    };
    let h_star = load_hstar(&plan.out_dir, &plan.problem)?.map(|f| f.h_star);

    let mut cells = Vec::with_capacity(plan.solvers.len());
    for cell in &plan.solvers {
        cells.push((
            cell.label(),
            resolve_cell_config(plan, cell, opts.force_theory, l_estimate)?,
        ));
    }

    let jobs: Vec<(usize, u64)> = cells
        .iter()
        .enumerate()
        .flat_map(|(ci, _)| {
            plan.seeds
                .iter()
                .map(move |s| (ci, s.wrapping_add(opts.seed_offset)))
        })
        .collect();

    let run_one = |&(ci, seed): &(usize, u64)| -> (usize, u64, Result<RunTrace>) {
        let (_, cfg) = &cells[ci];
        (ci, seed, run_single(plan, cfg, &base, h_star, seed))
    };

    let results: Vec<(usize, u64, Result<RunTrace>)> = if opts.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
        pool.install(|| {
            use rayon::prelude::*;
            jobs.par_iter().map(run_one).collect()
        })
    } else {
        jobs.iter().map(run_one).collect()
    };

    let mut traces = Vec::new();
    let mut failures = Vec::new();
    for (ci, seed, res) in results {
        match res {
            Ok(trace) => traces.push(trace),
            Err(e) => failures.push(CellFailure {
                cell: cells[ci].0.clone(),
                seed,
                error: e.to_string(),
            }),
        }
    }
    Ok(ExecutionReport {
        traces,
        failures,
        probe_queries,
    })
}

/// One row of the iterations/queries-to-target table.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub block_size: usize,
    pub target_rel_error: f64,
    /// Mean first-hitting iteration among succeeding seeds; NaN if none.
    pub mean_iterations: f64,
    /// Mean solver queries at the first hit among succeeding seeds.
    pub mean_queries: f64,
    pub success_fraction: f64,
}

/// First record reaching `rel_error <= target` with a feasible iterate
/// (`max_violation <= 0`).
fn first_hit(trace: &RunTrace, target: f64) -> Option<&TraceRecord> {
    trace
        .records
        .iter()
        .find(|r| r.max_violation <= 0.0 && r.rel_error.is_some_and(|e| e <= target))
}

/// Builds the summary table over (algorithm, block size) groups and targets.
/// Every trace must carry relative errors, which requires the reference-value
/// fixture at execution time.
pub fn summarize(traces: &[RunTrace], targets: &[f64]) -> Result<Vec<SummaryRow>> {
    if traces
        .iter()
        .any(|t| t.records.iter().any(|r| r.rel_error.is_none()))
    {
        return Err(Error::MissingFixture(
            "traces carry no relative error; run `oracle-hstar <config>` to compute the \
             reference objective value, then re-run the plan"
                .to_string(),
        ));
    }
    let mut groups: BTreeMap<(String, usize), Vec<&RunTrace>> = BTreeMap::new();
    for t in traces {
        groups
            .entry((t.algorithm.to_string(), t.block_size))
            .or_default()
            .push(t);
    }
    let mut rows = Vec::new();
    for ((_, block_size), group) in &groups {
        let algorithm = group[0].algorithm;
        for &target in targets {
            let hits: Vec<(usize, u64)> = group
                .iter()
                .filter_map(|t| first_hit(t, target).map(|r| (r.k, r.queries_cum)))
                .collect();
            let success_fraction = hits.len() as f64 / group.len() as f64;
            let (mean_iterations, mean_queries) = if hits.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                let n = hits.len() as f64;
                (
                    hits.iter().map(|(k, _)| *k as f64).sum::<f64>() / n,
                    hits.iter().map(|(_, q)| *q as f64).sum::<f64>() / n,
                )
            };
            rows.push(SummaryRow {
                algorithm,
                block_size: *block_size,
                target_rel_error: target,
                mean_iterations,
                mean_queries,
                success_fraction,
            });
        }
    }
    Ok(rows)
}

/// 17 significant digits: every f64 round-trips bit-exactly.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(io_err)?;
        }
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp).map_err(io_err)?;
        f.write_all(contents.as_bytes()).map_err(io_err)?;
        f.sync_all().map_err(io_err)?;
    }
    std::fs::rename(&tmp, path).map_err(io_err)
}

pub const TRACE_HEADER: &str =
    "k,queries,h,violation,g_norm,moreau_norm,rel_error,seed,algorithm,b";

/// Writes traces as CSV, sorted by (algorithm, block size, seed), records by
/// their iteration index. Floats carry 17 significant digits.
pub fn write_trace_csv(traces: &[RunTrace], path: &Path) -> Result<()> {
    let mut order: Vec<&RunTrace> = traces.iter().collect();
    order.sort_by_key(|t| (t.algorithm.to_string(), t.block_size, t.seed));
    let rows: usize = traces.iter().map(|t| t.records.len()).sum();
    let mut out = String::with_capacity(64 * (rows + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for t in order {
        for r in &t.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.k,
                r.queries_cum,
                fmt_f64(r.objective),
                fmt_f64(r.max_violation),
                fmt_f64(r.grad_norm),
                fmt_opt(r.moreau_norm),
                fmt_opt(r.rel_error),
                t.seed,
                t.algorithm,
                t.block_size
            ));
        }
    }
    atomic_write(path, &out)
}

/// Writes the summary table as CSV. Cells with zero successes render the
/// NaN sentinel in the iteration and query columns.
pub fn write_summary_csv(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str("algorithm,b,target_rel_error,mean_iterations,mean_queries,success_fraction\n");
    for r in rows {
        let (iters, queries) = if r.success_fraction == 0.0 {
            ("NaN".to_string(), "NaN".to_string())
        } else {
            (fmt_f64(r.mean_iterations), fmt_f64(r.mean_queries))
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.algorithm,
            r.block_size,
            fmt_f64(r.target_rel_error),
            iters,
            queries,
            fmt_f64(r.success_fraction)
        ));
    }
    atomic_write(path, &out)
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Config(format!("trace CSV line {line}: malformed {what}: `{s}`")))
}

fn parse_opt_f64(s: &str, line: usize, what: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_field::<f64>(s, line, what).map(Some)
    }
}

/// Parses a trace CSV back into run traces (grouped by algorithm, block
/// size, and seed in file order). Values round-trip bit-exactly.
pub fn read_trace_csv(path: &Path) -> Result<Vec<RunTrace>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == TRACE_HEADER => {}
        _ => {
            return Err(Error::Config(format!(
                "{} is not a trace CSV (bad header)",
                path.display()
            )))
        }
    }
    let mut traces: Vec<RunTrace> = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 10 {
            return Err(Error::Config(format!(
                "trace CSV line {i}: expected 10 columns, got {}",
                cols.len()
            )));
        }
        let record = TraceRecord {
            k: parse_field(cols[0], i, "k")?,
            queries_cum: parse_field(cols[1], i, "queries")?,
            objective: parse_field(cols[2], i, "h")?,
            max_violation: parse_field(cols[3], i, "violation")?,
            grad_norm: parse_field(cols[4], i, "g_norm")?,
            moreau_norm: parse_opt_f64(cols[5], i, "moreau_norm")?,
            rel_error: parse_opt_f64(cols[6], i, "rel_error")?,
        };
        let seed: u64 = parse_field(cols[7], i, "seed")?;
        let algorithm: Algorithm = cols[8].parse()?;
        let block_size: usize = parse_field(cols[9], i, "b")?;
        let same_run = traces.last().is_some_and(|t: &RunTrace| {
            t.algorithm == algorithm && t.block_size == block_size && t.seed == seed
        });
        if !same_run {
            traces.push(RunTrace {
                algorithm,
                block_size,
                seed,
                config_fingerprint: 0,
                records: Vec::new(),
                solver_queries: 0,
                metrics_queries: 0,
                approx_grads: false,
            });
        }
        let t = traces.last_mut().unwrap();
        t.solver_queries = record.queries_cum;
        t.records.push(record);
    }
    Ok(traces)
}

/// Reads every trace CSV in a directory (files with the trace header),
/// concatenated in lexicographic filename order.
pub fn read_trace_dir(dir: &Path) -> Result<Vec<RunTrace>> {
    let io_err = |source| Error::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    paths.sort();
    let mut all = Vec::new();
    for p in paths {
        let head = std::fs::read_to_string(&p)
            .map_err(|source| Error::Io {
                path: p.clone(),
                source,
            })?
            .lines()
            .next()
            .unwrap_or_default()
            .to_string();
        if head == TRACE_HEADER {
            all.extend(read_trace_csv(&p)?);
        }
    }
    if all.is_empty() {
        return Err(Error::Config(format!(
            "no trace CSV files found under {}",
            dir.display()
        )));
    }
    Ok(all)
}

/// Stored reference objective value for one problem instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HstarFixture {
    pub kind: String,
    pub dim: usize,
    pub seed: u64,
    pub h_star: f64,
    /// Oracle queries the fixture job spent (metrics budget).
    pub solver_queries: u64,
    /// Stationarity norm at the polished solution.
    pub polish_grad_norm: f64,
}

pub fn hstar_path(dir: &Path, spec: &ProblemSpec) -> PathBuf {
    dir.join(format!(
        "hstar-{}-d{}-s{}.json",
        spec.kind.as_str(),
        spec.dim,
        spec.seed
    ))
}

/// Loads the fixture for a problem instance if present.
pub fn load_hstar(dir: &Path, spec: &ProblemSpec) -> Result<Option<HstarFixture>> {
    let path = hstar_path(dir, spec);
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    let fixture: HstarFixture = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("corrupt fixture {}: {e}", path.display())))?;
    Ok(Some(fixture))
}

pub fn write_hstar(dir: &Path, fixture: &HstarFixture) -> Result<PathBuf> {
    let kind = match fixture.kind.as_str() {
        "quad-ball" => ProblemKind::QuadBall,
        "toy-grid" => ProblemKind::ToyGrid,
        other => {
            return Err(Error::Config(format!("unknown problem kind `{other}`")));
        }
    };
    let spec = ProblemSpec {
        kind,
        dim: fixture.dim,
        seed: fixture.seed,
        l_estimate: None,
    };
    let path = hstar_path(dir, &spec);
    let text = serde_json::to_string_pretty(fixture)
        .map_err(|e| Error::Config(format!("cannot serialize fixture: {e}")))?;
    atomic_write(&path, &text)?;
    Ok(path)
}

/// Computes the reference objective value for the plan's problem instance:
/// a long full-block zeroth-order run at ten times the plan budget to land
/// in the right basin, then an analytic-gradient polish and a feasibility
/// nudge. All queries are metrics-budget.
pub fn compute_hstar(plan: &ExperimentPlan) -> Result<HstarFixture> {
    let base = plan.problem.build()?;
    let mut work = base.clone();
    let d = plan.problem.dim;

    let l = match plan.problem.l_estimate {
        Some(l) => l,
        None => probe_l(&mut work, 20, la::mix_seeds(plan.problem.seed, 0x5052_4f42))?,
    };

    // Stage 1: coarse zeroth-order solve with the full coordinate block.
    let k_long = (plan.max_iters * 10).max(2_000);
    let mut cfg = SolverConfig::tuned(Algorithm::ZobGda, d, k_long, 0.5 / l, 0.05 / l)?;
    cfg.seed = la::mix_seeds(plan.problem.seed, 0x4853_5441);
    let out = crate::algorithms::run(&mut work, &cfg)?;
    let coarse = out.iterates.last().expect("run returns the initial iterate");

    // Stage 2: analytic-gradient descent ascent polish from the coarse point.
    let (x, _y, grad_norm) = polish_with_true_grads(&mut work, &coarse.x, &coarse.y, l)?;

    let (h_star, _) = work.evaluate(&x)?;
    if h_star == 0.0 {
        return Err(Error::DivisionDomain(
            "reference objective value is exactly zero; relative errors would be undefined"
                .to_string(),
        ));
    }
    Ok(HstarFixture {
        kind: plan.problem.kind.as_str().to_string(),
        dim: d,
        seed: plan.problem.seed,
        h_star,
        solver_queries: work.queries().total(),
        polish_grad_norm: grad_norm,
    })
}

/// Projected gradient descent ascent with analytic gradients, then a nudge
/// along the constraint gradients until the point is feasible, so the
/// reference value is attained by a feasible point.
fn polish_with_true_grads(
    problem: &mut OracleProblem,
    x0: &[f64],
    y0: &[f64],
    l: f64,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let eta_x = 0.5 / l;
    let eta_y = 0.05 / l;
    let mut x = x0.to_vec();
    let mut y = y0.to_vec();
    let box_bounds = problem.x_box().map(|(lo, up)| (lo.to_vec(), up.to_vec()));
    let y_upper = problem.y_upper().to_vec();
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    for t in 0..60_000usize {
        let (_, c) = problem.evaluate(&x)?;
        let (mut gx, jc) = problem.analytic_grads(&x)?;
        for (yj, row) in y.iter().zip(&jc) {
            for (gi, ri) in gx.iter_mut().zip(row) {
                *gi += yj * ri;
            }
        }
        // Damped steps late in the polish tighten the spiral.
        let damp = 1.0 / (1.0 + t as f64 / 20_000.0);
        for (xi, gi) in x.iter_mut().zip(&gx) {
            *xi -= eta_x * damp * gi;
        }
        if let Some((lo, up)) = &box_bounds {
            x = project_box(&x, lo, up)?;
        }
        for ((yj, cj), ub) in y.iter_mut().zip(&c).zip(&y_upper) {
            *yj = (*yj + eta_y * damp * cj).max(0.0).min(*ub);
        }
        if t % 500 == 0 || t == 59_999 {
            let box_step = box_bounds.is_some().then_some(eta_x);
            let rep = prox_grad_stationarity(problem, &x, &y, eta_y, box_step)?;
            if best.as_ref().is_none_or(|(g, _, _)| rep.grad_norm < *g) {
                best = Some((rep.grad_norm, x.clone(), y.clone()));
            }
            if rep.grad_norm <= 1e-10 {
                break;
            }
        }
    }
    let (grad_norm, mut x, y) = best.expect("polish records at least one candidate");

    // Feasibility nudge: walk along the most violated constraint's gradient
    // until every constraint value is nonpositive.
    for _ in 0..200 {
        let (_, c) = problem.evaluate(&x)?;
        let (worst_j, worst) =
            c.iter()
                .copied()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (j, v)| {
                    if v > acc.1 {
                        (j, v)
                    } else {
                        acc
                    }
                });
        if worst <= 0.0 {
            break;
        }
        let (_, jc) = problem.analytic_grads(&x)?;
        let row = &jc[worst_j];
        let norm_sq = la::dot(row, row).max(1e-12);
        // Newton step on c_j(x) = 0, slightly overshooting into feasibility.
        let step = 1.02 * worst / norm_sq;
        for (xi, ri) in x.iter_mut().zip(row) {
            *xi -= step * ri;
        }
        if let Some((lo, up)) = &box_bounds {
            x = project_box(&x, lo, up)?;
        }
    }
    Ok((x, y, grad_norm))
}

/// Final KKT residuals of a run's last iterate, evaluated on a fresh
/// metrics clone.
pub fn final_kkt(base: &OracleProblem, iterate: &Iterate) -> Result<crate::metrics::KktReport> {
    let mut metrics_problem = base.clone();
    kkt_residuals(&mut metrics_problem, &iterate.x, &iterate.y)
}
