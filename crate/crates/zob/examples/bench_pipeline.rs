//! The benchmark harness as a library: parse a plan, compute the
//! reference-value fixture, execute all (solver, seed) cells, and build the
//! queries-to-target summary — the same pipeline the `zob` binary drives
//! from config files.
//!
//! Run with: cargo run --release --example bench_pipeline

use zob::bench::{
    compute_hstar, execute, parse_config, summarize, write_hstar, write_summary_csv,
    write_trace_csv, ExecOptions,
};

const PLAN: &str = r#"
[problem]
kind = "quad-ball"
dim = 12
seed = 7
l_estimate = 21.0

[run]
max_iters = 800
seeds = [0, 1, 2, 3, 4, 5, 6, 7]
metrics_stride = 50
x0_jitter = 0.25
out_dir = "target/bench-pipeline-demo"

[[solvers]]
algorithm = "zob-gda"
block_size = 4
primal_step = 0.2
dual_step = 0.05

[[solvers]]
algorithm = "zob-sgda"
block_size = 4
primal_step = 0.1
dual_step = 0.05

[[solvers]]
algorithm = "rge-gda"
primal_step = 0.02
dual_step = 0.05
"#;

fn main() -> zob::Result<()> {
    let plan = parse_config(PLAN)?;
    println!(
        "plan: {} solver cells x {} seeds = {} runs",
        plan.solvers.len(),
        plan.seeds.len(),
        plan.total_runs()
    );

    // The reference objective value is a computed fixture; traces pick it up
    // automatically once it sits in the output directory.
    let fixture = compute_hstar(&plan)?;
    println!(
        "reference value h* = {:.9} (polish stationarity {:.1e})",
        fixture.h_star, fixture.polish_grad_norm
    );
    write_hstar(&plan.out_dir, &fixture)?;

    let report = execute(&plan, &ExecOptions { jobs: 4, ..Default::default() })?;
    println!(
        "executed: {} traces, {} failures",
        report.traces.len(),
        report.failures.len()
    );
    let trace_path = plan.out_dir.join("traces.csv");
    write_trace_csv(&report.traces, &trace_path)?;

    let rows = summarize(&report.traces, &[0.1, 0.01, 0.001])?;
    println!(
        "{:<10} {:>3} {:>8} {:>12} {:>10} {:>9}",
        "algorithm", "b", "target", "iterations", "queries", "success"
    );
    for r in &rows {
        println!(
            "{:<10} {:>3} {:>8.3} {:>12.1} {:>10.1} {:>9.2}",
            r.algorithm.to_string(),
            r.block_size,
            r.target_rel_error,
            r.mean_iterations,
            r.mean_queries,
            r.success_fraction
        );
    }
    write_summary_csv(&rows, &plan.out_dir.join("summary.csv"))?;
    println!("CSV written under {}", plan.out_dir.display());
    Ok(())
}
