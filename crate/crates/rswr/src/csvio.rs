//! CSV readers and writers with round-trip-exact floating point.
//!
//! Every float is written with 17 significant digits (`{:.16e}`), which is
//! enough for `f64` to survive a write/parse cycle bit for bit. That makes
//! "the two runs produced the same file" a meaningful byte comparison.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Result, RswrError};
use crate::oracle::WindowError;
use crate::pde::FieldSlab;

/// Formats one float with enough digits to round-trip exactly.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a slab as `t,u_<node>,...` sampling every `stride`-th node (the
/// last node is always included so the file spans the domain).
pub fn write_solution_csv(path: &Path, slab: &FieldSlab, stride: usize) -> Result<()> {
    if stride == 0 {
        return Err(RswrError::InvalidInput("node stride must be at least 1".to_string()));
    }
    let n_nodes = slab.grid().n_nodes();
    let mut nodes: Vec<usize> = (0..n_nodes).step_by(stride).collect();
    if *nodes.last().expect("at least one node") != n_nodes - 1 {
        nodes.push(n_nodes - 1);
    }
    let mut text = String::new();
    text.push('t');
    for &node in &nodes {
        write!(text, ",u_{node}").expect("writing to a string cannot fail");
    }
    text.push('\n');
    for step in 0..=slab.n_steps() {
        let t = slab.t_start() + step as f64 * slab.dt();
        text.push_str(&format_float(t));
        let row = slab.row(step);
        for &node in &nodes {
            text.push(',');
            text.push_str(&format_float(row[node]));
        }
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// A parsed solution CSV: times, the sampled node ids, and one row of values
/// per time level.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionTable {
    pub times: Vec<f64>,
    pub node_ids: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
}

fn parse_float(field: &str, line: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| {
        RswrError::InvalidInput(format!("line {line}: `{field}` is not a number"))
    })
}

/// Reads a file produced by [`write_solution_csv`].
pub fn read_solution_csv(path: &Path) -> Result<SolutionTable> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| RswrError::InvalidInput(format!("{}: empty file", path.display())))?;
    let mut cols = header.split(',');
    let first = cols.next().unwrap_or_default();
    if first.trim() != "t" {
        return Err(RswrError::InvalidInput(format!(
            "{}: expected header starting with `t`, got `{first}`",
            path.display()
        )));
    }
    let node_ids = cols
        .map(|c| {
            c.trim()
                .strip_prefix("u_")
                .and_then(|id| id.parse::<usize>().ok())
                .ok_or_else(|| {
                    RswrError::InvalidInput(format!(
                        "{}: column `{c}` is not of the form u_<node>",
                        path.display()
                    ))
                })
        })
        .collect::<Result<Vec<usize>>>()?;
    if node_ids.is_empty() {
        return Err(RswrError::InvalidInput(format!(
            "{}: no value columns",
            path.display()
        )));
    }
    let mut times = Vec::new();
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let t = parse_float(fields.next().unwrap_or_default(), i + 1)?;
        let row = fields
            .map(|f| parse_float(f, i + 1))
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != node_ids.len() {
            return Err(RswrError::InvalidInput(format!(
                "line {}: {} values for {} columns",
                i + 1,
                row.len(),
                node_ids.len()
            )));
        }
        times.push(t);
        rows.push(row);
    }
    Ok(SolutionTable { times, node_ids, rows })
}

/// Writes per-window error records as `k,t_start,span_steps,max_abs`.
pub fn write_errors_csv(path: &Path, errors: &[WindowError]) -> Result<()> {
    let mut text = String::from("k,t_start,span_steps,max_abs\n");
    for e in errors {
        writeln!(
            text,
            "{},{},{},{}",
            e.k,
            format_float(e.t_start),
            e.span_steps,
            format_float(e.max_abs)
        )
        .expect("writing to a string cannot fail");
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Result of comparing two solution CSVs cell by cell.
#[derive(Debug, Clone, Copy)]
pub struct CsvComparison {
    pub rows: usize,
    pub columns: usize,
    pub max_abs_diff: f64,
    pub differing_cells: usize,
}

impl CsvComparison {
    pub fn identical(&self) -> bool {
        self.differing_cells == 0
    }
}

/// Compares two solution files; shapes and node ids must match.
pub fn compare_solution_files(a: &Path, b: &Path) -> Result<CsvComparison> {
    let ta = read_solution_csv(a)?;
    let tb = read_solution_csv(b)?;
    if ta.node_ids != tb.node_ids {
        return Err(RswrError::InvalidInput(format!(
            "{} and {} sample different nodes",
            a.display(),
            b.display()
        )));
    }
    if ta.rows.len() != tb.rows.len() {
        return Err(RswrError::InvalidInput(format!(
            "{} has {} rows, {} has {}",
            a.display(),
            ta.rows.len(),
            b.display(),
            tb.rows.len()
        )));
    }
    let mut max_abs_diff = 0.0f64;
    let mut differing_cells = 0usize;
    for (ra, rb) in ta.rows.iter().zip(&tb.rows).chain(std::iter::once((&ta.times, &tb.times))) {
        for (&x, &y) in ra.iter().zip(rb) {
            if x.to_bits() != y.to_bits() {
                differing_cells += 1;
                max_abs_diff = max_abs_diff.max((x - y).abs());
            }
        }
    }
    Ok(CsvComparison {
        rows: ta.rows.len(),
        columns: ta.node_ids.len(),
        max_abs_diff,
        differing_cells,
    })
}
