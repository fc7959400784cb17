//! Batch harness CLI. All logic lives in the `zob` library; this binary
//! parses arguments, dispatches, and maps errors to exit codes
//! (1 validation, 2 runtime).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use zob::algorithms::probe_l;
use zob::bench::{
    compute_hstar, execute, load_config, read_trace_dir, summarize, write_hstar,
    write_summary_csv, write_trace_csv, ExecOptions,
};
use zob::Error;

#[derive(Parser)]
#[command(name = "zob", version, about = "Block-update zeroth-order primal-dual benchmark harness")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute an experiment plan and write per-iteration traces as CSV.
    Run {
        /// Plan file (TOML).
        config: PathBuf,
        /// Output directory (overrides the plan's out_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = sequential).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Offset added to every seed in the plan.
        #[arg(long, default_value_t = 0)]
        seed_offset: u64,
        /// Use theory-guided step sizes for every solver cell.
        #[arg(long)]
        theory: bool,
    },
    /// Build the iterations/queries-to-target table from trace CSVs.
    Summarize {
        /// Directory containing trace CSV files.
        trace_dir: PathBuf,
        /// Relative-error targets, comma separated (e.g. 0.1,0.01,0.001).
        #[arg(long, value_delimiter = ',', required = true)]
        targets: Vec<f64>,
        /// Where to write summary.csv (defaults to the trace directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute and store the reference objective value for a plan's problem.
    #[command(name = "oracle-hstar")]
    OracleHstar {
        config: PathBuf,
        /// Fixture directory (overrides the plan's out_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Probe the Lagrangian smoothness constant of a plan's problem.
    #[command(name = "probe-L")]
    ProbeL { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage problems are validation errors (exit 1); --help/--version
            // print and succeed.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Error> {
    match cli.cmd {
        Cmd::Run {
            config,
            out,
            jobs,
            seed_offset,
            theory,
        } => {
            let mut plan = load_config(&config)?;
            if let Some(dir) = out {
                plan.out_dir = dir;
            }
            let opts = ExecOptions {
                jobs,
                seed_offset,
                force_theory: theory,
            };
            let report = execute(&plan, &opts)?;
            let trace_path = plan.out_dir.join("traces.csv");
            write_trace_csv(&report.traces, &trace_path)?;
            println!(
                "{} run(s) completed, {} failed; traces -> {}",
                report.traces.len(),
                report.failures.len(),
                trace_path.display()
            );
            if report.probe_queries > 0 {
                println!("smoothness probe spent {} metrics queries", report.probe_queries);
            }
            let metrics_total: u64 = report.traces.iter().map(|t| t.metrics_queries).sum();
            let solver_total: u64 = report.traces.iter().map(|t| t.solver_queries).sum();
            println!("solver queries: {solver_total}; metrics queries: {metrics_total}");
            for f in &report.failures {
                eprintln!("failed: {} seed {}: {}", f.cell, f.seed, f.error);
            }
            if report.traces.is_empty() && !report.failures.is_empty() {
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Summarize {
            trace_dir,
            targets,
            out,
        } => {
            let traces = read_trace_dir(&trace_dir)?;
            let rows = summarize(&traces, &targets)?;
            let out_dir = out.unwrap_or_else(|| trace_dir.clone());
            let path = out_dir.join("summary.csv");
            write_summary_csv(&rows, &path)?;
            println!(
                "{:<10} {:>5} {:>12} {:>12} {:>14} {:>9}",
                "algorithm", "b", "target", "iterations", "queries", "success"
            );
            for r in &rows {
                let (iters, queries) = if r.success_fraction == 0.0 {
                    ("NaN".to_string(), "NaN".to_string())
                } else {
                    (
                        format!("{:.2}", r.mean_iterations),
                        format!("{:.2}", r.mean_queries),
                    )
                };
                println!(
                    "{:<10} {:>5} {:>12} {:>12} {:>14} {:>9.2}",
                    r.algorithm.to_string(),
                    r.block_size,
                    format!("{:.4}", r.target_rel_error),
                    iters,
                    queries,
                    r.success_fraction
                );
            }
            println!("summary -> {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::OracleHstar { config, out } => {
            let mut plan = load_config(&config)?;
            if let Some(dir) = out {
                plan.out_dir = dir;
            }
            let fixture = compute_hstar(&plan)?;
            let path = write_hstar(&plan.out_dir, &fixture)?;
            println!(
                "h* = {:.12e} (stationarity {:.3e}, {} metrics queries) -> {}",
                fixture.h_star,
                fixture.polish_grad_norm,
                fixture.solver_queries,
                path.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Cmd::ProbeL { config } => {
            let plan = load_config(&config)?;
            let mut clone = plan.problem.build()?;
            let l = probe_l(&mut clone, 20, plan.problem.seed)?;
            println!(
                "estimated smoothness L = {:.6e} ({} metrics queries)",
                l,
                clone.queries().total()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}
