//! Overlapping decomposition of the global grid into subdomains.
//!
//! Interior interfaces are placed at `round(i * (n_nodes-1) / N)` and widened
//! by half the overlap on each side, so adjacent subdomains share a band of
//! `overlap_cells` cells. Overlaps of different pairs must not touch: each
//! subdomain exchanges data with its immediate neighbours only.

use crate::error::{Result, RswrError};
use crate::pde::{BoundarySide, Grid1D};

/// What terminates a subdomain on one side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// A boundary of the physical domain; carries the Dirichlet drive.
    PhysicalDirichlet,
    /// An artificial boundary inside the domain; carries transmitted flux.
    InterfaceNeumann,
}

/// One subdomain of the decomposition. Node indices are global.
#[derive(Debug, Clone, PartialEq)]
pub struct Subdomain {
    pub id: usize,
    /// First and last global node owned (inclusive).
    pub first_node: usize,
    pub last_node: usize,
    pub grid: Grid1D,
    pub left_kind: BoundaryKind,
    pub right_kind: BoundaryKind,
    /// Neighbour ids, where present.
    pub left_neighbor: Option<usize>,
    pub right_neighbor: Option<usize>,
}

impl Subdomain {
    pub fn n_nodes(&self) -> usize {
        self.last_node - self.first_node + 1
    }

    pub fn contains(&self, global_node: usize) -> bool {
        (self.first_node..=self.last_node).contains(&global_node)
    }

    pub fn local_index(&self, global_node: usize) -> Option<usize> {
        self.contains(global_node).then(|| global_node - self.first_node)
    }

    pub fn neighbor(&self, side: BoundarySide) -> Option<usize> {
        match side {
            BoundarySide::Left => self.left_neighbor,
            BoundarySide::Right => self.right_neighbor,
        }
    }

    pub fn kind(&self, side: BoundarySide) -> BoundaryKind {
        match side {
            BoundarySide::Left => self.left_kind,
            BoundarySide::Right => self.right_kind,
        }
    }

    /// This subdomain's own boundary node on `side`: where transmitted flux
    /// is imposed when the side is an interface.
    pub fn input_boundary_node(&self, side: BoundarySide) -> usize {
        match side {
            BoundarySide::Left => self.first_node,
            BoundarySide::Right => self.last_node,
        }
    }

    pub fn interface_sides(&self) -> impl Iterator<Item = BoundarySide> + '_ {
        [BoundarySide::Left, BoundarySide::Right]
            .into_iter()
            .filter(|&s| self.kind(s) == BoundaryKind::InterfaceNeumann)
    }
}

/// The shared band between an adjacent pair of subdomains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapRegion {
    /// Lower and higher subdomain id of the pair.
    pub pair: (usize, usize),
    /// Inclusive global node range `[input boundary of the right subdomain,
    /// input boundary of the left subdomain]`.
    pub first_node: usize,
    pub last_node: usize,
    /// Width in cells; equals the configured overlap.
    pub width_cells: usize,
    /// Width in physical length.
    pub width_length: f64,
    /// Steps for a wave to transit the overlap at a unit courant number.
    pub transit_steps: usize,
}

/// The full decomposition: subdomains in id order plus the overlap regions of
/// adjacent pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub global_grid: Grid1D,
    pub subdomains: Vec<Subdomain>,
    pub overlaps: Vec<OverlapRegion>,
}

impl Decomposition {
    pub fn n_subdomains(&self) -> usize {
        self.subdomains.len()
    }

    /// The overlap shared by subdomains `i` and `j`: `Some` when adjacent,
    /// `None` when disjoint, an error when `i == j`.
    pub fn overlap_of(&self, i: usize, j: usize) -> Result<Option<&OverlapRegion>> {
        if i == j {
            return Err(RswrError::InvalidInput(format!(
                "overlap of a subdomain with itself ({i}) is not defined"
            )));
        }
        let n = self.n_subdomains();
        if i >= n || j >= n {
            return Err(RswrError::InvalidInput(format!(
                "subdomain pair ({i},{j}) out of range for {n} subdomains"
            )));
        }
        let (lo, hi) = (i.min(j), i.max(j));
        if hi - lo != 1 {
            return Ok(None);
        }
        Ok(self.overlaps.iter().find(|o| o.pair == (lo, hi)))
    }

    /// Global node index where subdomain `id` reads its neighbour's field to
    /// build that neighbour's transmitted flux: the neighbour's input
    /// boundary, strictly interior to `id`.
    pub fn output_boundary_node(&self, id: usize, side: BoundarySide) -> Option<usize> {
        let sub = &self.subdomains[id];
        let nb = sub.neighbor(side)?;
        Some(self.subdomains[nb].input_boundary_node(side.opposite()))
    }
}

/// Splits `global_grid` into `n_subdomains` overlapping subdomains.
///
/// `overlap_cells` must be even and at least 2. Every interior interface is
/// widened by `overlap_cells / 2` on each side, and the overlaps of distinct
/// pairs must be separated by at least one cell, otherwise the geometry is
/// rejected.
pub fn partition(global_grid: &Grid1D, n_subdomains: usize, overlap_cells: usize) -> Result<Decomposition> {
    if n_subdomains == 0 {
        return Err(RswrError::InvalidInput("need at least one subdomain".into()));
    }
    if overlap_cells < 2 || overlap_cells % 2 != 0 {
        return Err(RswrError::InvalidInput(format!(
            "overlap_cells must be even and >= 2, got {overlap_cells}"
        )));
    }
    let n = global_grid.n_nodes();
    let last = n - 1;
    if n_subdomains == 1 {
        let sub = Subdomain {
            id: 0,
            first_node: 0,
            last_node: last,
            grid: *global_grid,
            left_kind: BoundaryKind::PhysicalDirichlet,
            right_kind: BoundaryKind::PhysicalDirichlet,
            left_neighbor: None,
            right_neighbor: None,
        };
        return Ok(Decomposition { global_grid: *global_grid, subdomains: vec![sub], overlaps: vec![] });
    }

    let half = overlap_cells / 2;
    // Interior interface nodes; virtual interfaces at the domain ends make
    // the separation check uniform.
    let mut cuts = Vec::with_capacity(n_subdomains + 1);
    cuts.push(0usize);
    for i in 1..n_subdomains {
        cuts.push(((i * last) as f64 / n_subdomains as f64).round() as usize);
    }
    cuts.push(last);
    for w in cuts.windows(2) {
        let gap = w[1].saturating_sub(w[0]);
        if gap < overlap_cells + 1 {
            return Err(RswrError::InvalidInput(format!(
                "infeasible decomposition: interfaces at nodes {} and {} are {} cells apart, \
                 but overlap_cells={} requires at least {} (overlaps would chain or spill \
                 past the domain ends)",
                w[0],
                w[1],
                gap,
                overlap_cells,
                overlap_cells + 1
            )));
        }
    }

    let mut subdomains = Vec::with_capacity(n_subdomains);
    for id in 0..n_subdomains {
        let first_node = if id == 0 { 0 } else { cuts[id] - half };
        let last_node = if id == n_subdomains - 1 { last } else { cuts[id + 1] + half };
        let grid = Grid1D::with_spacing(
            global_grid.x(first_node),
            last_node - first_node + 1,
            global_grid.dx(),
        )?;
        subdomains.push(Subdomain {
            id,
            first_node,
            last_node,
            grid,
            left_kind: if id == 0 {
                BoundaryKind::PhysicalDirichlet
            } else {
                BoundaryKind::InterfaceNeumann
            },
            right_kind: if id == n_subdomains - 1 {
                BoundaryKind::PhysicalDirichlet
            } else {
                BoundaryKind::InterfaceNeumann
            },
            left_neighbor: (id > 0).then(|| id - 1),
            right_neighbor: (id + 1 < n_subdomains).then_some(id + 1),
        });
    }

    let dx = global_grid.dx();
    let overlaps = (0..n_subdomains - 1)
        .map(|i| {
            let first_node = subdomains[i + 1].first_node;
            let last_node = subdomains[i].last_node;
            let width_cells = last_node - first_node;
            OverlapRegion {
                pair: (i, i + 1),
                first_node,
                last_node,
                width_cells,
                width_length: width_cells as f64 * dx,
                transit_steps: width_cells,
            }
        })
        .collect::<Vec<_>>();

    for o in &overlaps {
        debug_assert_eq!(o.width_cells, overlap_cells);
    }
    Ok(Decomposition { global_grid: *global_grid, subdomains, overlaps })
}
