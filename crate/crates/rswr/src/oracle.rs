//! Monolithic reference solve and error accounting.
//!
//! The reference path never touches the decomposition or the window
//! protocol: one grid, one call to the window solver over the whole run.
//! Comparing against it is how every claim about the protocol is checked.

use serde::Serialize;

use crate::config::RswrConfig;
use crate::error::{Result, RswrError};
use crate::pde::{solve_window, BoundaryCondition, BoundarySide, FieldSlab, WaveState};

/// Solves the full problem on the undecomposed grid in one window.
pub fn solve_monolithic(config: &RswrConfig) -> Result<FieldSlab> {
    config.validate()?;
    let grid = config.grid()?;
    let n_total = config.n_total_steps() as usize;
    let left = BoundaryCondition::Dirichlet(config.boundary_series(BoundarySide::Left, 0, n_total));
    let right =
        BoundaryCondition::Dirichlet(config.boundary_series(BoundarySide::Right, 0, n_total));
    let initial = WaveState::at_rest(grid.n_nodes());
    let (slab, _) = solve_window(
        &grid,
        &initial,
        &left,
        &right,
        n_total,
        config.dt(),
        config.wave_speed,
    )?;
    Ok(slab)
}

/// Pointwise and integral discrepancies between two slabs of identical shape.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ErrorReport {
    pub max_abs: f64,
    /// `sqrt(dx dt sum of squared differences)` over the whole slab.
    pub l2_spacetime: f64,
    /// `(step, node)` of the first occurrence of the maximum.
    pub max_step: usize,
    pub max_node: usize,
}

/// Compares two slabs sample by sample. Shapes and time bases must match
/// exactly; a discrepancy there is an input error, not a large difference.
pub fn compare(a: &FieldSlab, b: &FieldSlab) -> Result<ErrorReport> {
    if a.n_steps() != b.n_steps() || a.grid().n_nodes() != b.grid().n_nodes() {
        return Err(RswrError::InvalidInput(format!(
            "cannot compare a {} x {} slab with a {} x {} slab",
            a.n_steps(),
            a.grid().n_nodes(),
            b.n_steps(),
            b.grid().n_nodes()
        )));
    }
    if a.dt().to_bits() != b.dt().to_bits() || a.t_start().to_bits() != b.t_start().to_bits() {
        return Err(RswrError::InvalidInput(
            "cannot compare slabs with different time bases".to_string(),
        ));
    }
    let mut max_abs = 0.0f64;
    let (mut max_step, mut max_node) = (0usize, 0usize);
    let mut sum_sq = 0.0f64;
    for step in 0..=a.n_steps() {
        let ra = a.row(step);
        let rb = b.row(step);
        for node in 0..ra.len() {
            let d = (ra[node] - rb[node]).abs();
            sum_sq += d * d;
            if d > max_abs {
                max_abs = d;
                max_step = step;
                max_node = node;
            }
        }
    }
    let l2_spacetime = (a.grid().dx() * a.dt() * sum_sq).sqrt();
    Ok(ErrorReport { max_abs, l2_spacetime, max_step, max_node })
}

/// Joins committed windows into one slab covering the whole run. Window
/// boundaries must chain exactly: the first row of each window is the last
/// row of the previous one, bit for bit, because the update solves restart
/// from the committed terminal state.
pub fn concat_windows(windows: &[FieldSlab]) -> Result<FieldSlab> {
    let first = windows
        .first()
        .ok_or_else(|| RswrError::InvalidInput("cannot concatenate zero windows".to_string()))?;
    let n_nodes = first.grid().n_nodes();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, w) in windows.iter().enumerate() {
        if w.grid().n_nodes() != n_nodes || w.dt().to_bits() != first.dt().to_bits() {
            return Err(RswrError::InvalidInput(format!(
                "window {} disagrees with window 1 in grid or step size",
                i + 1
            )));
        }
        let skip = if i == 0 {
            0
        } else {
            let prev_last = rows.last().expect("non-empty after first window");
            let seam_ok = w
                .row(0)
                .iter()
                .zip(prev_last.iter())
                .all(|(x, y)| x.to_bits() == y.to_bits());
            if !seam_ok {
                return Err(RswrError::Internal(format!(
                    "window {} does not start from the committed state of window {}",
                    i + 1,
                    i
                )));
            }
            1
        };
        for step in skip..=w.n_steps() {
            rows.push(w.row(step).to_vec());
        }
    }
    FieldSlab::from_rows(*first.grid(), first.t_start(), first.dt(), rows)
}

/// Worst pointwise error of one committed window against the matching rows
/// of a reference slab.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WindowError {
    pub k: u64,
    pub t_start: f64,
    pub span_steps: usize,
    pub max_abs: f64,
}

/// Per-window worst-case errors against a whole-run reference. Windows are
/// laid out consecutively: window 1 covers reference rows `0..=s1`, window 2
/// rows `s1..=s1+s2`, and so on through the final reference row.
pub fn per_window_errors(windows: &[FieldSlab], reference: &FieldSlab) -> Result<Vec<WindowError>> {
    let mut start = 0usize;
    let mut out = Vec::with_capacity(windows.len());
    for (i, w) in windows.iter().enumerate() {
        if w.grid().n_nodes() != reference.grid().n_nodes() {
            return Err(RswrError::InvalidInput(format!(
                "window {} has {} nodes, reference has {}",
                i + 1,
                w.grid().n_nodes(),
                reference.grid().n_nodes()
            )));
        }
        if start + w.n_steps() > reference.n_steps() {
            return Err(RswrError::InvalidInput(format!(
                "window {} runs past the end of the reference", i + 1
            )));
        }
        let mut max_abs = 0.0f64;
        for step in 0..=w.n_steps() {
            let rw = w.row(step);
            let rr = reference.row(start + step);
            for node in 0..rw.len() {
                max_abs = max_abs.max((rw[node] - rr[node]).abs());
            }
        }
        out.push(WindowError { k: i as u64 + 1, t_start: w.t_start(), span_steps: w.n_steps(), max_abs });
        start += w.n_steps();
    }
    if start != reference.n_steps() {
        return Err(RswrError::InvalidInput(format!(
            "windows cover {start} steps, reference has {}",
            reference.n_steps()
        )));
    }
    Ok(out)
}
