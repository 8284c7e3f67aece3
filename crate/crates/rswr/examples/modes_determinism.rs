//! Single-threaded and thread-per-worker execution produce byte-identical
//! output files. Every value a worker computes depends only on message
//! content — reductions are over keyed maps, never arrival order — so
//! scheduling cannot leak into the numbers, and the CSVs are written with
//! round-trip-exact floats.
//!
//! Run with: `cargo run --example modes_determinism`

use rswr::config::{apply_preset, default_base, Preset, RunMode};
use rswr::csvio::compare_solution_files;
use rswr::experiment::run_experiment;

fn main() -> rswr::Result<()> {
    println!("=== mode determinism ===");
    let base = std::env::temp_dir().join("rswr-modes-determinism");
    let single_dir = base.join("single");
    let parallel_dir = base.join("parallel");

    let mut config = apply_preset(default_base(), Preset::N2);

    config.mode = RunMode::Single;
    let single = run_experiment(&config, &single_dir)?;
    println!(
        "single:   {} windows on {} thread(s), max error {:.3e}",
        single.report.n_windows, single.report.worker_threads, single.errors.max_abs
    );

    config.mode = RunMode::Parallel;
    let parallel = run_experiment(&config, &parallel_dir)?;
    println!(
        "parallel: {} windows on {} thread(s), max error {:.3e}",
        parallel.report.n_windows, parallel.report.worker_threads, parallel.errors.max_abs
    );

    let cmp = compare_solution_files(&single.solution_csv, &parallel.solution_csv)?;
    println!(
        "\nsolution.csv: {} rows x {} columns, {} differing cells",
        cmp.rows, cmp.columns, cmp.differing_cells
    );
    assert!(cmp.identical(), "modes must agree bit for bit");

    let errors_single = std::fs::read(&single.errors_csv)?;
    let errors_parallel = std::fs::read(&parallel.errors_csv)?;
    assert_eq!(errors_single, errors_parallel, "errors.csv must be byte-identical");
    println!("errors.csv: byte-identical");
    println!("\n(the report.txt files differ only in wall-clock timings)");
    println!("set RSWR_THREADS=1 to force the single-threaded scheduler in parallel mode");
    println!("both modes produced the same bits — ok");
    Ok(())
}
