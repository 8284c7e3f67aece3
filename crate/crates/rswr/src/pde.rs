//! Explicit leapfrog discretization of the 1-D wave equation
//! `u_tt = a^2 u_xx` on a uniform grid, plus the window-solve and flux
//! extraction primitives everything else is built from.
//!
//! Two properties matter more than anything else here and shape the code:
//!
//! * The interior stencil is evaluated in one fixed operation order
//!   (`lap_anchored`), and a Neumann boundary node reproduces that order
//!   bit-for-bit from the exchanged centered difference whenever `2*dx` is a
//!   power of two. This is what makes a subdomain solve node-identical to a
//!   monolithic solve when it is driven with exact fluxes.
//! * Windows chain through the terminal `(u_prev, u_curr)` pair, never by
//!   re-differentiating, so a chained solve is the same leapfrog sequence as
//!   one long solve.

use crate::error::{Result, RswrError};

/// Uniform 1-D grid. Node `i` sits at `x_min + i*dx`; the end nodes are
/// reported exactly as `x_min` / `x_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_nodes: usize,
    dx: f64,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_nodes: usize) -> Result<Self> {
        if !(x_max > x_min) {
            return Err(RswrError::InvalidInput(format!(
                "grid needs x_max > x_min, got [{x_min}, {x_max}]"
            )));
        }
        if n_nodes < 2 {
            return Err(RswrError::InvalidInput(format!(
                "grid needs at least 2 nodes, got {n_nodes}"
            )));
        }
        let dx = (x_max - x_min) / (n_nodes - 1) as f64;
        Ok(Grid1D { x_min, x_max, n_nodes, dx })
    }

    /// Builds a grid from an origin, node count and an inherited spacing.
    ///
    /// Subdomain grids must reuse the parent spacing verbatim instead of
    /// recomputing it from their own endpoints, otherwise the subdomain
    /// stencil would differ from the global one in the last bit.
    pub fn with_spacing(x_min: f64, n_nodes: usize, dx: f64) -> Result<Self> {
        if n_nodes < 2 {
            return Err(RswrError::InvalidInput(format!(
                "grid needs at least 2 nodes, got {n_nodes}"
            )));
        }
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(RswrError::InvalidInput(format!("grid spacing must be positive, got {dx}")));
        }
        let x_max = x_min + (n_nodes - 1) as f64 * dx;
        Ok(Grid1D { x_min, x_max, n_nodes, dx })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    /// Position of node `i`; exact at both ends.
    pub fn x(&self, i: usize) -> f64 {
        debug_assert!(i < self.n_nodes);
        if i == 0 {
            self.x_min
        } else if i == self.n_nodes - 1 {
            self.x_max
        } else {
            self.x_min + i as f64 * self.dx
        }
    }
}

/// Two consecutive time levels of the field; everything leapfrog needs to
/// continue. `t_curr` tracks `step_index * dt` relative to the start of the
/// run (informational; no numerics depend on its bits).
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub u_prev: Vec<f64>,
    pub u_curr: Vec<f64>,
    pub t_curr: f64,
    pub step_index: u64,
}

impl WaveState {
    pub fn new(u_prev: Vec<f64>, u_curr: Vec<f64>, t_curr: f64, step_index: u64) -> Result<Self> {
        if u_prev.len() != u_curr.len() {
            return Err(RswrError::InvalidInput(format!(
                "wave state level lengths differ: {} vs {}",
                u_prev.len(),
                u_curr.len()
            )));
        }
        Ok(WaveState { u_prev, u_curr, t_curr, step_index })
    }

    /// The homogeneous initial state: field and velocity identically zero.
    /// With zero data before `t = 0`, the virtual previous level is exactly
    /// zero too, so plain leapfrog steps are correct from the first step.
    pub fn at_rest(n_nodes: usize) -> Self {
        WaveState {
            u_prev: vec![0.0; n_nodes],
            u_curr: vec![0.0; n_nodes],
            t_curr: 0.0,
            step_index: 0,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.u_curr.len()
    }
}

/// Which end of a (sub)domain a boundary condition or flux applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundarySide {
    Left,
    Right,
}

impl BoundarySide {
    pub fn opposite(self) -> BoundarySide {
        match self {
            BoundarySide::Left => BoundarySide::Right,
            BoundarySide::Right => BoundarySide::Left,
        }
    }
}

/// Boundary closure for one side of a window solve. Series run over window
/// time levels, so their length must be at least `n_steps + 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCondition {
    /// Prescribed boundary values (physical drive).
    Dirichlet(Vec<f64>),
    /// Prescribed spatial derivative at the boundary (transmission data).
    NeumannFlux(Vec<f64>),
    /// Homogeneous Neumann; the prediction closure on interface sides.
    NeumannZero,
}

/// Dense space-time block of field values: rows are time levels
/// (`n_steps + 1` of them), columns are grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSlab {
    grid: Grid1D,
    t_start: f64,
    dt: f64,
    n_steps: usize,
    values: Vec<f64>,
}

impl FieldSlab {
    pub fn from_rows(grid: Grid1D, t_start: f64, dt: f64, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(RswrError::InvalidInput("slab needs at least one row".into()));
        }
        let n = grid.n_nodes();
        let mut values = Vec::with_capacity(rows.len() * n);
        for row in &rows {
            if row.len() != n {
                return Err(RswrError::InvalidInput(format!(
                    "slab row length {} does not match grid ({n} nodes)",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Ok(FieldSlab { grid, t_start, dt, n_steps: rows.len() - 1, values })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn row(&self, step: usize) -> &[f64] {
        let n = self.grid.n_nodes();
        &self.values[step * n..(step + 1) * n]
    }

    pub fn at(&self, step: usize, node: usize) -> f64 {
        self.values[step * self.grid.n_nodes() + node]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Copy of the slab restricted to an inclusive node range.
    pub fn restrict(&self, first_node: usize, last_node: usize) -> Result<FieldSlab> {
        let n = self.grid.n_nodes();
        if first_node > last_node || last_node >= n {
            return Err(RswrError::InvalidInput(format!(
                "restriction [{first_node}, {last_node}] out of bounds for {n} nodes"
            )));
        }
        let sub_grid =
            Grid1D::with_spacing(self.grid.x(first_node), last_node - first_node + 1, self.grid.dx())?;
        let width = last_node - first_node + 1;
        let mut values = Vec::with_capacity((self.n_steps + 1) * width);
        for step in 0..=self.n_steps {
            let row = self.row(step);
            values.extend_from_slice(&row[first_node..=last_node]);
        }
        Ok(FieldSlab { grid: sub_grid, t_start: self.t_start, dt: self.dt, n_steps: self.n_steps, values })
    }
}

/// Time series of the spatial derivative at one boundary node, one value per
/// window time level.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxWaveform {
    pub side: BoundarySide,
    pub t_start: f64,
    pub dt: f64,
    pub values: Vec<f64>,
}

/// Discrete Laplacian contribution at a node, in the one operation order used
/// everywhere: `(right - left) - 2*(center - left)`, algebraically
/// `right - 2*center + left`. Anchoring both differences on the left
/// neighbour lets a right-edge Neumann update reproduce these bits exactly
/// from the exchanged centered difference `right - left`.
#[inline]
fn lap_anchored(left: f64, center: f64, right: f64) -> f64 {
    let t1 = right - left;
    let t2 = center - left;
    t1 - 2.0 * t2
}

#[inline]
fn advance_node(u_prev_i: f64, u_curr_i: f64, lap: f64, c2: f64) -> f64 {
    2.0 * u_curr_i - u_prev_i + c2 * lap
}

fn check_courant(courant: f64) -> Result<()> {
    if !(courant > 0.0 && courant <= 1.0) {
        return Err(RswrError::Stability(format!(
            "courant number must lie in (0, 1], got {courant}"
        )));
    }
    Ok(())
}

/// One leapfrog step over the interior nodes:
/// `u_next[i] = 2 u_curr[i] - u_prev[i] + courant^2 (u_curr[i+1] - 2 u_curr[i] + u_curr[i-1])`.
///
/// The two boundary entries of the returned row are `NaN` by contract; the
/// caller must impose boundary conditions before the row is used.
pub fn leapfrog_step(u_prev: &[f64], u_curr: &[f64], courant: f64) -> Result<Vec<f64>> {
    if u_prev.len() != u_curr.len() {
        return Err(RswrError::InvalidInput(format!(
            "leapfrog level lengths differ: {} vs {}",
            u_prev.len(),
            u_curr.len()
        )));
    }
    if u_curr.len() < 3 {
        return Err(RswrError::InvalidInput(format!(
            "leapfrog needs at least 3 nodes, got {}",
            u_curr.len()
        )));
    }
    check_courant(courant)?;
    let c2 = courant * courant;
    let n = u_curr.len();
    let mut next = vec![f64::NAN; n];
    for i in 1..n - 1 {
        let lap = lap_anchored(u_curr[i - 1], u_curr[i], u_curr[i + 1]);
        next[i] = advance_node(u_prev[i], u_curr[i], lap, c2);
    }
    Ok(next)
}

/// Taylor first step for a velocity initial condition:
/// `u1[i] = u0[i] + dt v0[i] + (courant^2 / 2) (u0[i+1] - 2 u0[i] + u0[i-1])`.
///
/// Boundary entries are `NaN` by the same contract as [`leapfrog_step`]. Use
/// the result to seed `(u_prev, u_curr) = (u0, u1)` for subsequent leapfrog
/// steps.
pub fn first_step(u0: &[f64], v0: &[f64], courant: f64, dt: f64) -> Result<Vec<f64>> {
    if u0.len() != v0.len() {
        return Err(RswrError::InvalidInput(format!(
            "first step level lengths differ: {} vs {}",
            u0.len(),
            v0.len()
        )));
    }
    if u0.len() < 3 {
        return Err(RswrError::InvalidInput(format!(
            "first step needs at least 3 nodes, got {}",
            u0.len()
        )));
    }
    check_courant(courant)?;
    if !(dt > 0.0) {
        return Err(RswrError::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    let c2 = courant * courant;
    let n = u0.len();
    let mut u1 = vec![f64::NAN; n];
    for i in 1..n - 1 {
        let lap = lap_anchored(u0[i - 1], u0[i], u0[i + 1]);
        u1[i] = u0[i] + dt * v0[i] + 0.5 * c2 * lap;
    }
    Ok(u1)
}

/// Value for one boundary node of the row `new_row` (>= 1) being produced
/// from `state`.
///
/// Dirichlet reads the series at the new time level. A Neumann side rebuilds
/// the missing neighbour difference from the flux at the *current* level --
/// the same level the interior stencil reads -- and then applies the interior
/// operation order. For a right-side boundary this reproduces the interior
/// stencil bits exactly whenever `2*dx*flux` equals the original centered
/// difference (true when `2*dx` is a power of two); a left-side boundary goes
/// through one reconstructed ghost value and can differ from the interior
/// bits by an ulp.
pub fn impose_boundary(
    state: &WaveState,
    side: BoundarySide,
    bc: &BoundaryCondition,
    new_row: usize,
    courant: f64,
    dx: f64,
) -> Result<f64> {
    if new_row == 0 {
        return Err(RswrError::InvalidInput("row 0 is the initial state; no boundary to impose".into()));
    }
    check_courant(courant)?;
    let n = state.n_nodes();
    if n < 2 {
        return Err(RswrError::InvalidInput("state too short for a boundary".into()));
    }
    let series_value = |series: &[f64], idx: usize, what: &str| -> Result<f64> {
        series.get(idx).copied().ok_or_else(|| {
            RswrError::InvalidInput(format!(
                "{what} series too short: need index {idx}, length {}",
                series.len()
            ))
        })
    };
    match bc {
        BoundaryCondition::Dirichlet(series) => series_value(series, new_row, "dirichlet"),
        BoundaryCondition::NeumannFlux(series) => {
            let flux = series_value(series, new_row - 1, "flux")?;
            Ok(neumann_value(state, side, flux, courant, dx))
        }
        BoundaryCondition::NeumannZero => Ok(neumann_value(state, side, 0.0, courant, dx)),
    }
}

fn neumann_value(state: &WaveState, side: BoundarySide, flux: f64, courant: f64, dx: f64) -> f64 {
    let c2 = courant * courant;
    let uc = &state.u_curr;
    let up = &state.u_prev;
    let n = uc.len();
    // d reconstructs the centered difference (neighbour_right - neighbour_left)
    // across the boundary node at the current level.
    let d = 2.0 * dx * flux;
    match side {
        BoundarySide::Right => {
            let b = n - 1;
            let t2 = uc[b] - uc[b - 1];
            advance_node(up[b], uc[b], d - 2.0 * t2, c2)
        }
        BoundarySide::Left => {
            let ghost = uc[1] - d;
            let t2 = uc[0] - ghost;
            advance_node(up[0], uc[0], d - 2.0 * t2, c2)
        }
    }
}

/// Advance `n_steps` leapfrog steps from `initial` with the given boundary
/// closures. Returns the space-time slab (row 0 is `initial.u_curr`) and the
/// terminal two-level state for chaining the next window.
pub fn solve_window(
    grid: &Grid1D,
    initial: &WaveState,
    left_bc: &BoundaryCondition,
    right_bc: &BoundaryCondition,
    n_steps: usize,
    dt: f64,
    wave_speed: f64,
) -> Result<(FieldSlab, WaveState)> {
    let n = grid.n_nodes();
    if initial.n_nodes() != n {
        return Err(RswrError::InvalidInput(format!(
            "initial state has {} nodes, grid has {n}",
            initial.n_nodes()
        )));
    }
    if n < 3 {
        return Err(RswrError::InvalidInput(format!("window solve needs at least 3 nodes, got {n}")));
    }
    if !(dt > 0.0) || !(wave_speed > 0.0) {
        return Err(RswrError::InvalidInput(format!(
            "dt and wave speed must be positive, got dt={dt}, a={wave_speed}"
        )));
    }
    let courant = wave_speed * dt / grid.dx();
    check_courant(courant)?;
    for (bc, name) in [(left_bc, "left"), (right_bc, "right")] {
        let len = match bc {
            BoundaryCondition::Dirichlet(s) | BoundaryCondition::NeumannFlux(s) => s.len(),
            BoundaryCondition::NeumannZero => usize::MAX,
        };
        if len < n_steps + 1 {
            return Err(RswrError::InvalidInput(format!(
                "{name} boundary series has {len} entries, window needs {}",
                n_steps + 1
            )));
        }
    }

    let mut values = Vec::with_capacity((n_steps + 1) * n);
    values.extend_from_slice(&initial.u_curr);
    let mut state = initial.clone();
    for s in 1..=n_steps {
        let mut next = leapfrog_step(&state.u_prev, &state.u_curr, courant)?;
        next[0] = impose_boundary(&state, BoundarySide::Left, left_bc, s, courant, grid.dx())?;
        next[n - 1] = impose_boundary(&state, BoundarySide::Right, right_bc, s, courant, grid.dx())?;
        values.extend_from_slice(&next);
        state.u_prev = std::mem::replace(&mut state.u_curr, next);
        state.step_index += 1;
        state.t_curr = initial.t_curr + s as f64 * dt;
    }
    let slab = FieldSlab { grid: *grid, t_start: initial.t_curr, dt, n_steps, values };
    Ok((slab, state))
}

/// Centered-difference flux series at an interior node of a slab:
/// `(values[step][node+1] - values[step][node-1]) / (2 dx)`.
///
/// This is the transmission representation: a receiving subdomain's Neumann
/// update inverts it exactly (see [`impose_boundary`]). `side` records which
/// boundary of the *receiving* subdomain the series is meant for.
pub fn extract_flux(slab: &FieldSlab, node: usize, side: BoundarySide) -> Result<FluxWaveform> {
    let n = slab.grid().n_nodes();
    if node == 0 || node + 1 >= n {
        return Err(RswrError::InvalidInput(format!(
            "flux extraction needs an interior node with both neighbours, got node {node} of {n}"
        )));
    }
    let two_dx = 2.0 * slab.grid().dx();
    let values = (0..=slab.n_steps())
        .map(|s| {
            let row = slab.row(s);
            (row[node + 1] - row[node - 1]) / two_dx
        })
        .collect();
    Ok(FluxWaveform { side, t_start: slab.t_start(), dt: slab.dt(), values })
}

/// Discrete energy of a two-level state:
/// `sum_i [ ((uc[i]-up[i])/dt)^2 + a^2 ((uc[i+1]-uc[i])/dx)((up[i+1]-up[i])/dx) ] * dx/2`.
///
/// Conserved by the leapfrog scheme with reflecting (zero Dirichlet)
/// boundaries for courant <= 1.
pub fn discrete_energy(u_prev: &[f64], u_curr: &[f64], dt: f64, dx: f64, wave_speed: f64) -> f64 {
    let n = u_curr.len();
    let mut kinetic = 0.0;
    for i in 0..n {
        let v = (u_curr[i] - u_prev[i]) / dt;
        kinetic += v * v;
    }
    let mut potential = 0.0;
    let a2 = wave_speed * wave_speed;
    for i in 0..n - 1 {
        potential += a2 * ((u_curr[i + 1] - u_curr[i]) / dx) * ((u_prev[i + 1] - u_prev[i]) / dx);
    }
    (kinetic + potential) * dx / 2.0
}
