//! End-to-end experiment: run the protocol, run the monolithic reference,
//! compare, and write the output files.
//!
//! Nothing is written unless the run itself succeeds, so the presence of
//! `solution.csv` means the protocol completed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::RswrConfig;
use crate::csvio::{format_float, write_errors_csv, write_solution_csv};
use crate::error::Result;
use crate::oracle::{compare, concat_windows, per_window_errors, solve_monolithic, ErrorReport};
use crate::pde::{FieldSlab, WaveState};
use crate::runtime::{run_rswr, RunReport};

/// Paths and summaries of one completed experiment.
#[derive(Debug)]
pub struct ExperimentArtifacts {
    pub out_dir: PathBuf,
    pub solution_csv: PathBuf,
    pub errors_csv: PathBuf,
    pub report_txt: PathBuf,
    pub report: RunReport,
    pub errors: ErrorReport,
}

/// Runs the configured experiment and writes `solution.csv`, `errors.csv`
/// and `report.txt` into `out_dir`.
pub fn run_experiment(config: &RswrConfig, out_dir: &Path) -> Result<ExperimentArtifacts> {
    let output = run_rswr(config)?;
    let reference = solve_monolithic(config)?;
    let combined = if output.windows.is_empty() {
        // A zero-length run still has its initial condition.
        let grid = config.grid()?;
        let initial = WaveState::at_rest(grid.n_nodes());
        FieldSlab::from_rows(grid, 0.0, config.dt(), vec![initial.u_curr])?
    } else {
        concat_windows(&output.windows)?
    };
    let errors = compare(&combined, &reference)?;
    let window_errors = per_window_errors(&output.windows, &reference)?;

    std::fs::create_dir_all(out_dir)?;
    let solution_csv = out_dir.join("solution.csv");
    let errors_csv = out_dir.join("errors.csv");
    let report_txt = out_dir.join("report.txt");
    write_solution_csv(&solution_csv, &combined, config.outputs.solution_stride)?;
    write_errors_csv(&errors_csv, &window_errors)?;
    std::fs::write(&report_txt, render_report(config, &output.report, &errors))?;
    Ok(ExperimentArtifacts {
        out_dir: out_dir.to_path_buf(),
        solution_csv,
        errors_csv,
        report_txt,
        report: output.report,
        errors,
    })
}

fn render_report(config: &RswrConfig, report: &RunReport, errors: &ErrorReport) -> String {
    let mut s = String::new();
    let threads_env = std::env::var("RSWR_THREADS").ok();
    writeln!(s, "RSWR run report").unwrap();
    writeln!(s, "===============").unwrap();
    writeln!(s, "mode:            {:?}", report.mode).unwrap();
    writeln!(
        s,
        "worker threads:  {} (RSWR_THREADS={})",
        report.worker_threads,
        threads_env.as_deref().unwrap_or("unset")
    )
    .unwrap();
    writeln!(s, "subdomains:      {}", report.n_subdomains).unwrap();
    writeln!(
        s,
        "grid:            {} nodes on [{}, {}], dx = {}",
        config.n_nodes, config.x_min, config.x_max, config.dx()
    )
    .unwrap();
    writeln!(
        s,
        "time step:       dt = {} (courant {}, wave speed {})",
        report.dt, config.courant, config.wave_speed
    )
    .unwrap();
    writeln!(
        s,
        "steps:           {} (t realized = {})",
        report.n_total_steps,
        report.n_total_steps as f64 * report.dt
    )
    .unwrap();
    writeln!(s, "windows:         {}", report.n_windows).unwrap();
    writeln!(s).unwrap();
    writeln!(s, "traffic").unwrap();
    writeln!(s, "  field messages per round: {}", report.field_messages_per_round).unwrap();
    writeln!(s, "  field messages total:     {}", report.field_messages_total).unwrap();
    writeln!(s, "  scalar messages total:    {}", report.scalar_messages_total).unwrap();
    writeln!(s).unwrap();
    writeln!(s, "phase seconds (max across workers)").unwrap();
    let t = &report.phase_seconds;
    writeln!(s, "  predict:  {:.6}", t.predict).unwrap();
    writeln!(s, "  exchange: {:.6}", t.exchange).unwrap();
    writeln!(s, "  select:   {:.6}", t.select).unwrap();
    writeln!(s, "  reduce:   {:.6}", t.reduce).unwrap();
    writeln!(s, "  update:   {:.6}", t.update).unwrap();
    writeln!(s).unwrap();
    writeln!(s, "error vs monolithic reference").unwrap();
    writeln!(
        s,
        "  max |diff|:    {} at step {}, node {}",
        format_float(errors.max_abs),
        errors.max_step,
        errors.max_node
    )
    .unwrap();
    writeln!(s, "  space-time L2: {}", format_float(errors.l2_spacetime)).unwrap();
    writeln!(s).unwrap();
    writeln!(s, "windows: k start_step predict accepted").unwrap();
    for w in &report.windows {
        writeln!(s, "  {} {} {} {}", w.k, w.start_step, w.predict_steps, w.accepted_span).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_base;

    #[test]
    fn zero_length_run_writes_one_row() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = default_base();
        config.x_max = 100.0;
        config.n_nodes = 101;
        config.overlap_cells = 20;
        config.t_end = 0.0;
        let artifacts = run_experiment(&config, dir.path()).unwrap();
        assert_eq!(artifacts.report.n_windows, 0);
        assert_eq!(artifacts.errors.max_abs, 0.0);
        let table = crate::csvio::read_solution_csv(&artifacts.solution_csv).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert!(table.rows[0].iter().all(|&v| v == 0.0));
        let errors_text = std::fs::read_to_string(&artifacts.errors_csv).unwrap();
        assert_eq!(errors_text.lines().count(), 1, "only the header");
        assert!(std::fs::read_to_string(&artifacts.report_txt)
            .unwrap()
            .contains("windows:         0"));
    }
}
