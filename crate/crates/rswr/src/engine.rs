//! Window protocol operations: speculative prediction, overlap comparison,
//! span selection and capping, the conservative global minimum, the committed
//! update, window-size planning, and stitching of subdomain slabs.
//!
//! Everything here is pure computation on one worker's data; message routing
//! and scheduling live in [`crate::runtime`].

use std::collections::BTreeMap;

use crate::decomposition::{BoundaryKind, Decomposition, Subdomain};
use crate::error::{Result, RswrError};
use crate::pde::{
    extract_flux, solve_window, BoundaryCondition, BoundarySide, FieldSlab, FluxWaveform,
    WaveState,
};

/// Floor for planned window sizes after the first window. A window of one
/// step cannot make progress past its own exchange, so growth never plans
/// below two steps.
pub const MIN_PREDICT_STEPS: usize = 2;

/// Plan for one upcoming window: where it starts and how many steps to
/// speculate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowPlan {
    /// Window counter, starting at 1.
    pub k: u64,
    /// Global step index of the window's first time level.
    pub start_step: u64,
    /// Absolute time of the window's first time level.
    pub t_start: f64,
    /// Number of steps to predict speculatively.
    pub predict_steps: usize,
}

impl WindowPlan {
    /// The first window uses the configured initial size as-is; the growth
    /// rule only applies from the second window on.
    pub fn first(initial_predict_steps: usize, dt: f64) -> WindowPlan {
        let _ = dt;
        WindowPlan { k: 1, start_step: 0, t_start: 0.0, predict_steps: initial_predict_steps }
    }
}

/// Plans window `k + 1` after `accepted_span` steps of window `k` were
/// committed. The next size is `accepted + ceil(beta * accepted)`, floored at
/// [`MIN_PREDICT_STEPS`]; the addend is computed separately so that e.g.
/// `accepted = 10, beta = 0.1` yields 11, not a rounding-inflated 12.
pub fn advance_plan(plan: &WindowPlan, accepted_span: usize, beta: f64, dt: f64) -> WindowPlan {
    let growth = (beta * accepted_span as f64).ceil() as usize;
    let next_predict = (accepted_span + growth).max(MIN_PREDICT_STEPS);
    let start_step = plan.start_step + accepted_span as u64;
    WindowPlan {
        k: plan.k + 1,
        start_step,
        t_start: start_step as f64 * dt,
        predict_steps: next_predict,
    }
}

/// Payload one subdomain sends to one neighbour after predicting: the
/// predicted field restricted to their shared overlap, plus the flux series
/// at the neighbour's boundary node.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictExchange {
    pub sender: usize,
    pub receiver: usize,
    /// Side of the *sender* on which the receiver lies.
    pub side: BoundarySide,
    /// Canonical pair key `(min, max)` of the two subdomain ids.
    pub pair: (usize, usize),
    /// First global node of the overlap the slab covers.
    pub overlap_first_node: usize,
    pub overlap_slab: FieldSlab,
    pub output_flux: FluxWaveform,
}

impl PredictExchange {
    /// Builds the payload for the neighbour on `side` from a predicted slab.
    pub fn from_prediction(
        sub: &Subdomain,
        decomp: &Decomposition,
        predicted: &FieldSlab,
        side: BoundarySide,
    ) -> Result<PredictExchange> {
        let receiver = sub.neighbor(side).ok_or_else(|| {
            RswrError::InvalidInput(format!(
                "subdomain {} has no neighbour on its {side:?} side",
                sub.id
            ))
        })?;
        let overlap = decomp
            .overlap_of(sub.id, receiver)?
            .ok_or_else(|| {
                RswrError::Internal(format!(
                    "subdomains {} and {receiver} are neighbours but share no overlap",
                    sub.id
                ))
            })?;
        let lo = sub.local_index(overlap.first_node).ok_or_else(|| {
            RswrError::Internal(format!(
                "overlap node {} lies outside subdomain {}",
                overlap.first_node, sub.id
            ))
        })?;
        let hi = sub.local_index(overlap.last_node).ok_or_else(|| {
            RswrError::Internal(format!(
                "overlap node {} lies outside subdomain {}",
                overlap.last_node, sub.id
            ))
        })?;
        let overlap_slab = predicted.restrict(lo, hi)?;
        let out_global = decomp.output_boundary_node(sub.id, side).ok_or_else(|| {
            RswrError::Internal(format!("no output boundary for subdomain {} / {side:?}", sub.id))
        })?;
        let out_local = sub.local_index(out_global).ok_or_else(|| {
            RswrError::Internal(format!(
                "output node {out_global} lies outside subdomain {}",
                sub.id
            ))
        })?;
        // The flux is labelled with the side it will be *applied* on, which is
        // the receiver's side facing back at the sender.
        let output_flux = extract_flux(predicted, out_local, side.opposite())?;
        Ok(PredictExchange {
            sender: sub.id,
            receiver,
            side,
            pair: (sub.id.min(receiver), sub.id.max(receiver)),
            overlap_first_node: overlap.first_node,
            overlap_slab,
            output_flux,
        })
    }
}

fn physical_series<'a>(
    sub: &Subdomain,
    side: BoundarySide,
    series: Option<&'a [f64]>,
) -> Result<&'a [f64]> {
    series.ok_or_else(|| {
        RswrError::InvalidInput(format!(
            "subdomain {} needs a physical boundary series on its {side:?} side",
            sub.id
        ))
    })
}

fn boundary_for(
    sub: &Subdomain,
    side: BoundarySide,
    physical: Option<&[f64]>,
    interface: BoundaryCondition,
) -> Result<BoundaryCondition> {
    match sub.kind(side) {
        BoundaryKind::PhysicalDirichlet => {
            Ok(BoundaryCondition::Dirichlet(physical_series(sub, side, physical)?.to_vec()))
        }
        BoundaryKind::InterfaceNeumann => Ok(interface),
    }
}

/// Speculative window solve: physical sides follow their Dirichlet drive,
/// interface sides provisionally assume zero flux. The result is exact until
/// the dependency cone of an interface boundary reaches the point in
/// question; the comparison stage measures where that happens.
pub fn predict(
    sub: &Subdomain,
    state: &WaveState,
    predict_steps: usize,
    left_drive: Option<&[f64]>,
    right_drive: Option<&[f64]>,
    dt: f64,
    wave_speed: f64,
) -> Result<FieldSlab> {
    let left = boundary_for(sub, BoundarySide::Left, left_drive, BoundaryCondition::NeumannZero)?;
    let right = boundary_for(sub, BoundarySide::Right, right_drive, BoundaryCondition::NeumannZero)?;
    let (slab, _) = solve_window(&sub.grid, state, &left, &right, predict_steps, dt, wave_speed)?;
    Ok(slab)
}

/// Longest committable span judged from two predictions of the same overlap:
/// for each overlap node, count the leading run of time levels on which the
/// two slabs agree to within `epsilon`; a run of `p` levels certifies `p - 1`
/// steps. The span is the best such certificate over the overlap, because
/// boundary error needs time to cross the overlap and must leave at least one
/// node uncontaminated for as long as the span is valid.
pub fn select_span(mine: &FieldSlab, theirs: &FieldSlab, epsilon: f64) -> Result<usize> {
    if mine.n_steps() != theirs.n_steps()
        || mine.grid().n_nodes() != theirs.grid().n_nodes()
    {
        return Err(RswrError::InvalidInput(format!(
            "overlap slabs disagree in shape: {} steps x {} nodes vs {} steps x {} nodes",
            mine.n_steps(),
            mine.grid().n_nodes(),
            theirs.n_steps(),
            theirs.grid().n_nodes()
        )));
    }
    if !(epsilon >= 0.0) {
        return Err(RswrError::InvalidInput(format!(
            "comparison tolerance must be non-negative, got {epsilon}"
        )));
    }
    let n_nodes = mine.grid().n_nodes();
    let n_levels = mine.n_steps() + 1;
    let mut best = 0usize;
    for node in 0..n_nodes {
        let mut agreeing_levels = 0usize;
        for level in 0..n_levels {
            let diff = (mine.at(level, node) - theirs.at(level, node)).abs();
            // A NaN difference never satisfies the tolerance, ending the run.
            if diff <= epsilon {
                agreeing_levels += 1;
            } else {
                break;
            }
        }
        best = best.max(agreeing_levels.saturating_sub(1));
    }
    Ok(best)
}

/// Causality cap: committing more than half the overlap width (minus a safety
/// margin) would let untrusted boundary data cross the overlap within the
/// window. Returns `min(selected, cap)`; a configuration whose cap is below
/// one step can never progress and is rejected outright.
pub fn cap_span(selected: usize, overlap_width_cells: usize, safety_steps: usize) -> Result<usize> {
    let half = overlap_width_cells / 2;
    if half <= safety_steps {
        return Err(RswrError::Config(format!(
            "overlap of {overlap_width_cells} cells with safety margin {safety_steps} leaves no \
             committable steps; widen the overlap or reduce the safety margin"
        )));
    }
    let cap = half - safety_steps;
    Ok(selected.min(cap))
}

/// Conservative global decision: the minimum of all pairwise capped spans.
/// With no interfaces (a single subdomain) the prediction is trusted whole.
/// A zero from any pair means no progress is possible this window, which is a
/// protocol-level failure the caller must surface.
pub fn global_span(
    pairwise: &BTreeMap<(usize, usize), usize>,
    predict_steps: usize,
) -> Result<usize> {
    if pairwise.is_empty() {
        return Ok(predict_steps);
    }
    let mut min = usize::MAX;
    for (&pair, &span) in pairwise {
        if span == 0 {
            return Err(RswrError::Protocol(format!(
                "subdomain pair ({}, {}) selected a zero span; no steps can be committed",
                pair.0, pair.1
            )));
        }
        min = min.min(span);
    }
    Ok(min)
}

/// Committed re-solve of the accepted span: interface sides follow the
/// neighbour's predicted flux (valid for `span` steps by construction),
/// physical sides follow their Dirichlet drive. Returns the committed slab
/// and the terminal state that seeds the next window.
pub fn update_window(
    sub: &Subdomain,
    state: &WaveState,
    span: usize,
    left_flux: Option<&FluxWaveform>,
    right_flux: Option<&FluxWaveform>,
    left_drive: Option<&[f64]>,
    right_drive: Option<&[f64]>,
    dt: f64,
    wave_speed: f64,
) -> Result<(FieldSlab, WaveState)> {
    let interface_bc = |side: BoundarySide, flux: Option<&FluxWaveform>| -> Result<BoundaryCondition> {
        match sub.kind(side) {
            BoundaryKind::InterfaceNeumann => {
                let flux = flux.ok_or_else(|| {
                    RswrError::InvalidInput(format!(
                        "subdomain {} needs neighbour flux on its {side:?} side",
                        sub.id
                    ))
                })?;
                if flux.side != side {
                    return Err(RswrError::InvalidInput(format!(
                        "flux labelled for the {:?} side applied on the {side:?} side of \
                         subdomain {}",
                        flux.side, sub.id
                    )));
                }
                if flux.values.len() < span + 1 {
                    return Err(RswrError::InvalidInput(format!(
                        "neighbour flux covers {} levels, committed span of {span} needs {}",
                        flux.values.len(),
                        span + 1
                    )));
                }
                Ok(BoundaryCondition::NeumannFlux(flux.values[..=span].to_vec()))
            }
            BoundaryKind::PhysicalDirichlet => Ok(BoundaryCondition::Dirichlet(
                physical_series(sub, side, if side == BoundarySide::Left { left_drive } else { right_drive })?
                    .to_vec(),
            )),
        }
    };
    let left = interface_bc(BoundarySide::Left, left_flux)?;
    let right = interface_bc(BoundarySide::Right, right_flux)?;
    solve_window(&sub.grid, state, &left, &right, span, dt, wave_speed)
}

/// Merges per-subdomain slabs of one committed window into a global slab.
/// Overlap nodes are taken from the lowest-id owner; both owners hold
/// tolerance-equal values there, and a fixed choice keeps the output
/// deterministic.
pub fn stitch(slabs: &[FieldSlab], decomp: &Decomposition) -> Result<FieldSlab> {
    let n_subs = decomp.n_subdomains();
    if slabs.len() != n_subs {
        return Err(RswrError::InvalidInput(format!(
            "stitch got {} slabs for {n_subs} subdomains",
            slabs.len()
        )));
    }
    let first = &slabs[0];
    for (i, slab) in slabs.iter().enumerate() {
        if slab.n_steps() != first.n_steps()
            || slab.dt().to_bits() != first.dt().to_bits()
            || slab.t_start().to_bits() != first.t_start().to_bits()
        {
            return Err(RswrError::InvalidInput(format!(
                "slab {i} disagrees with slab 0 in steps or time base"
            )));
        }
        if slab.grid().n_nodes() != decomp.subdomains[i].n_nodes() {
            return Err(RswrError::InvalidInput(format!(
                "slab {i} has {} nodes, subdomain {i} has {}",
                slab.grid().n_nodes(),
                decomp.subdomains[i].n_nodes()
            )));
        }
    }
    let n_global = decomp.global_grid.n_nodes();
    let mut owner = vec![usize::MAX; n_global];
    for sub in &decomp.subdomains {
        for node in sub.first_node..=sub.last_node {
            if owner[node] == usize::MAX {
                owner[node] = sub.id;
            }
        }
    }
    if let Some(node) = owner.iter().position(|&o| o == usize::MAX) {
        return Err(RswrError::Internal(format!(
            "global node {node} is covered by no subdomain"
        )));
    }
    let rows = (0..=first.n_steps())
        .map(|step| {
            (0..n_global)
                .map(|node| {
                    let sub = &decomp.subdomains[owner[node]];
                    slabs[sub.id].at(step, node - sub.first_node)
                })
                .collect()
        })
        .collect();
    FieldSlab::from_rows(decomp.global_grid, first.t_start(), first.dt(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::partition;
    use crate::pde::Grid1D;
    use proptest::prelude::*;

    const EXACT: f64 = 0.0;

    fn slab_from_fn(
        n_nodes: usize,
        n_steps: usize,
        f: impl Fn(usize, usize) -> f64,
    ) -> FieldSlab {
        let grid = Grid1D::new(0.0, (n_nodes - 1) as f64, n_nodes).unwrap();
        let rows = (0..=n_steps)
            .map(|s| (0..n_nodes).map(|x| f(s, x)).collect())
            .collect();
        FieldSlab::from_rows(grid, 0.0, 1.0, rows).unwrap()
    }

    #[test]
    fn identical_slabs_certify_every_step() {
        let a = slab_from_fn(9, 10, |s, x| (s * 31 + x) as f64 * 0.125);
        let b = a.clone();
        assert_eq!(select_span(&a, &b, EXACT).unwrap(), 10);
    }

    #[test]
    fn disagreement_from_level_one_certifies_nothing() {
        let a = slab_from_fn(9, 10, |_, _| 0.0);
        let b = slab_from_fn(9, 10, |s, _| if s == 0 { 0.0 } else { 1.0 });
        assert_eq!(select_span(&a, &b, 1e-3).unwrap(), 0);
    }

    #[test]
    fn span_comes_from_the_best_protected_node() {
        // Node x stays agreeing through level min(x, 8 - x); the overlap
        // midpoint is protected longest, certifying floor(width / 2) steps.
        let a = slab_from_fn(9, 10, |_, _| 0.0);
        let b = slab_from_fn(9, 10, |s, x| if s <= x.min(8 - x) { 0.0 } else { 1.0 });
        assert_eq!(select_span(&a, &b, EXACT).unwrap(), 4);
    }

    #[test]
    fn select_span_rejects_shape_mismatch() {
        let a = slab_from_fn(9, 10, |_, _| 0.0);
        let b = slab_from_fn(9, 9, |_, _| 0.0);
        assert!(matches!(select_span(&a, &b, EXACT), Err(RswrError::InvalidInput(_))));
    }

    #[test]
    fn cap_clamps_to_half_overlap_minus_safety() {
        assert_eq!(cap_span(100, 16, 1).unwrap(), 7);
        assert_eq!(cap_span(3, 16, 1).unwrap(), 3);
        assert_eq!(cap_span(0, 16, 1).unwrap(), 0);
        assert_eq!(cap_span(100, 40, 1).unwrap(), 19);
    }

    #[test]
    fn hopeless_overlap_is_a_config_error() {
        assert!(matches!(cap_span(5, 2, 1), Err(RswrError::Config(_))));
        assert!(matches!(cap_span(5, 4, 2), Err(RswrError::Config(_))));
    }

    #[test]
    fn global_span_takes_the_minimum() {
        let mut pairwise = BTreeMap::new();
        pairwise.insert((0usize, 1usize), 5usize);
        pairwise.insert((1, 2), 7);
        assert_eq!(global_span(&pairwise, 40).unwrap(), 5);
    }

    #[test]
    fn no_interfaces_trust_the_whole_prediction() {
        assert_eq!(global_span(&BTreeMap::new(), 40).unwrap(), 40);
    }

    #[test]
    fn zero_vote_names_the_pair() {
        let mut pairwise = BTreeMap::new();
        pairwise.insert((0usize, 1usize), 3usize);
        pairwise.insert((1, 2), 0);
        match global_span(&pairwise, 40) {
            Err(RswrError::Protocol(msg)) => assert!(msg.contains("(1, 2)")),
            other => panic!("expected protocol error, got {other:?}"),
        }
    }

    #[test]
    fn growth_rule_frozen_cases() {
        let plan = WindowPlan::first(40, 0.9);
        assert_eq!(plan.k, 1);
        assert_eq!(plan.predict_steps, 40);
        assert_eq!(plan.start_step, 0);

        let next = advance_plan(&plan, 10, 0.1, 0.5);
        assert_eq!(next.k, 2);
        assert_eq!(next.start_step, 10);
        assert_eq!(next.t_start, 5.0);
        assert_eq!(next.predict_steps, 11);

        assert_eq!(advance_plan(&plan, 19, 0.1, 1.0).predict_steps, 21);
        assert_eq!(advance_plan(&plan, 7, 0.0, 1.0).predict_steps, 7);
        assert_eq!(advance_plan(&plan, 1, 0.1, 1.0).predict_steps, 2);
        assert_eq!(advance_plan(&plan, 1, 0.0, 1.0).predict_steps, MIN_PREDICT_STEPS);
    }

    #[test]
    fn prediction_validity_ends_at_the_dependency_cone() {
        // Unit courant, left raised-cosine drive supported on t in (20, 40).
        // The front reaches a node i at step i + 21; the zero-flux guess at
        // the interface node 60 first deviates one step after the first
        // nonzero true flux there, i.e. at step 81, and the deviation then
        // travels inward one cell per step.
        let grid = Grid1D::new(0.0, 100.0, 101).unwrap();
        let decomp = partition(&grid, 2, 20).unwrap();
        let sub = &decomp.subdomains[0];
        assert_eq!((sub.first_node, sub.last_node), (0, 60));

        let n_steps = 100usize;
        let drive: Vec<f64> = (0..=n_steps)
            .map(|s| {
                let t = s as f64;
                if (t - 30.0).abs() >= 10.0 {
                    0.0
                } else {
                    0.5 * (1.0 + (std::f64::consts::PI * (t - 30.0) / 10.0).cos())
                }
            })
            .collect();
        let zeros = vec![0.0; n_steps + 1];

        let rest_global = WaveState::at_rest(101);
        let (reference, _) = solve_window(
            &grid,
            &rest_global,
            &BoundaryCondition::Dirichlet(drive.clone()),
            &BoundaryCondition::Dirichlet(zeros),
            n_steps,
            1.0,
            1.0,
        )
        .unwrap();
        let reference = reference.restrict(0, 60).unwrap();

        let rest_local = WaveState::at_rest(sub.n_nodes());
        let predicted =
            predict(sub, &rest_local, n_steps, Some(&drive), None, 1.0, 1.0).unwrap();

        let first_diff = |node: usize| -> Option<usize> {
            (0..=n_steps).find(|&s| {
                predicted.at(s, node).to_bits() != reference.at(s, node).to_bits()
            })
        };
        assert_eq!(first_diff(60), Some(81));
        assert_eq!(first_diff(55), Some(86));
        assert_eq!(first_diff(50), Some(91));
    }

    #[test]
    fn predict_of_a_quiet_subdomain_stays_zero() {
        let grid = Grid1D::new(0.0, 100.0, 101).unwrap();
        let decomp = partition(&grid, 2, 20).unwrap();
        let sub = &decomp.subdomains[1];
        let rest = WaveState::at_rest(sub.n_nodes());
        let zeros = vec![0.0; 21];
        let slab = predict(sub, &rest, 20, None, Some(&zeros), 1.0, 1.0).unwrap();
        assert_eq!(slab.max_abs(), 0.0);
    }

    #[test]
    fn predict_requires_physical_drive() {
        let grid = Grid1D::new(0.0, 100.0, 101).unwrap();
        let decomp = partition(&grid, 2, 20).unwrap();
        let sub = &decomp.subdomains[0];
        let rest = WaveState::at_rest(sub.n_nodes());
        assert!(matches!(
            predict(sub, &rest, 10, None, None, 1.0, 1.0),
            Err(RswrError::InvalidInput(_))
        ));
    }

    #[test]
    fn exchange_payload_covers_the_overlap_and_the_output_node() {
        let grid = Grid1D::new(0.0, 100.0, 101).unwrap();
        let decomp = partition(&grid, 2, 20).unwrap();
        let sub0 = &decomp.subdomains[0];
        let drive = vec![0.0; 11];
        let rest = WaveState::at_rest(sub0.n_nodes());
        let slab = predict(sub0, &rest, 10, Some(&drive), None, 1.0, 1.0).unwrap();
        let ex = PredictExchange::from_prediction(sub0, &decomp, &slab, BoundarySide::Right)
            .unwrap();
        assert_eq!(ex.sender, 0);
        assert_eq!(ex.receiver, 1);
        assert_eq!(ex.pair, (0, 1));
        assert_eq!(ex.overlap_first_node, 40);
        assert_eq!(ex.overlap_slab.grid().n_nodes(), 21);
        assert_eq!(ex.output_flux.side, BoundarySide::Left);
        assert_eq!(ex.output_flux.values.len(), 11);
    }

    #[test]
    fn update_applies_neighbour_flux_and_reports_short_series() {
        let grid = Grid1D::new(0.0, 100.0, 101).unwrap();
        let decomp = partition(&grid, 2, 20).unwrap();
        let sub1 = &decomp.subdomains[1];
        let rest = WaveState::at_rest(sub1.n_nodes());
        let zeros = vec![0.0; 6];
        let flux = FluxWaveform {
            side: BoundarySide::Left,
            t_start: 0.0,
            dt: 1.0,
            values: vec![0.0; 6],
        };
        let (slab, state) = update_window(
            sub1,
            &rest,
            5,
            Some(&flux),
            None,
            None,
            Some(&zeros),
            1.0,
            1.0,
        )
        .unwrap();
        assert_eq!(slab.n_steps(), 5);
        assert_eq!(state.step_index, 5);
        assert_eq!(slab.max_abs(), 0.0);

        let short = FluxWaveform {
            side: BoundarySide::Left,
            t_start: 0.0,
            dt: 1.0,
            values: vec![0.0; 5],
        };
        assert!(matches!(
            update_window(sub1, &rest, 5, Some(&short), None, None, Some(&zeros), 1.0, 1.0),
            Err(RswrError::InvalidInput(_))
        ));

        let mislabeled = FluxWaveform {
            side: BoundarySide::Right,
            t_start: 0.0,
            dt: 1.0,
            values: vec![0.0; 6],
        };
        assert!(matches!(
            update_window(sub1, &rest, 5, Some(&mislabeled), None, None, Some(&zeros), 1.0, 1.0),
            Err(RswrError::InvalidInput(_))
        ));
    }

    #[test]
    fn stitch_takes_overlap_nodes_from_the_lower_id() {
        let grid = Grid1D::new(0.0, 100.0, 101).unwrap();
        let decomp = partition(&grid, 2, 20).unwrap();
        let mk = |sub: &Subdomain, v: f64| {
            let rows = vec![vec![v; sub.n_nodes()]; 2];
            FieldSlab::from_rows(sub.grid, 0.0, 1.0, rows).unwrap()
        };
        let slabs = vec![mk(&decomp.subdomains[0], 1.0), mk(&decomp.subdomains[1], 2.0)];
        let merged = stitch(&slabs, &decomp).unwrap();
        assert_eq!(merged.grid().n_nodes(), 101);
        for node in 0..=60 {
            assert_eq!(merged.at(1, node), 1.0);
        }
        for node in 61..=100 {
            assert_eq!(merged.at(1, node), 2.0);
        }
    }

    #[test]
    fn stitch_rejects_mismatched_slabs() {
        let grid = Grid1D::new(0.0, 100.0, 101).unwrap();
        let decomp = partition(&grid, 2, 20).unwrap();
        let mk = |sub: &Subdomain, steps: usize| {
            let rows = vec![vec![0.0; sub.n_nodes()]; steps + 1];
            FieldSlab::from_rows(sub.grid, 0.0, 1.0, rows).unwrap()
        };
        let slabs = vec![mk(&decomp.subdomains[0], 1), mk(&decomp.subdomains[1], 2)];
        assert!(matches!(stitch(&slabs, &decomp), Err(RswrError::InvalidInput(_))));
        let one = vec![mk(&decomp.subdomains[0], 1)];
        assert!(matches!(stitch(&one, &decomp), Err(RswrError::InvalidInput(_))));
    }

    #[test]
    fn single_subdomain_stitch_is_the_identity() {
        let grid = Grid1D::new(0.0, 10.0, 11).unwrap();
        let decomp = partition(&grid, 1, 4).unwrap();
        let rows = (0..=3)
            .map(|s| (0..11).map(|x| (s * 11 + x) as f64).collect())
            .collect();
        let slab = FieldSlab::from_rows(grid, 0.0, 1.0, rows).unwrap();
        let merged = stitch(std::slice::from_ref(&slab), &decomp).unwrap();
        for s in 0..=3 {
            for x in 0..11 {
                assert_eq!(merged.at(s, x).to_bits(), slab.at(s, x).to_bits());
            }
        }
    }

    proptest! {
        #[test]
        fn select_span_is_symmetric(
            seed_a in proptest::collection::vec(-1.0f64..1.0, 5 * 6),
            seed_b in proptest::collection::vec(-1.0f64..1.0, 5 * 6),
            eps in 0.0f64..2.0,
        ) {
            let a = slab_from_fn(6, 4, |s, x| seed_a[s * 6 + x]);
            let b = slab_from_fn(6, 4, |s, x| seed_b[s * 6 + x]);
            prop_assert_eq!(
                select_span(&a, &b, eps).unwrap(),
                select_span(&b, &a, eps).unwrap()
            );
        }

        #[test]
        fn select_span_grows_with_tolerance(
            seed_a in proptest::collection::vec(-1.0f64..1.0, 5 * 6),
            seed_b in proptest::collection::vec(-1.0f64..1.0, 5 * 6),
            eps_lo in 0.0f64..1.0,
            eps_extra in 0.0f64..1.0,
        ) {
            let a = slab_from_fn(6, 4, |s, x| seed_a[s * 6 + x]);
            let b = slab_from_fn(6, 4, |s, x| seed_b[s * 6 + x]);
            let lo = select_span(&a, &b, eps_lo).unwrap();
            let hi = select_span(&a, &b, eps_lo + eps_extra).unwrap();
            prop_assert!(hi >= lo);
        }

        #[test]
        fn capped_span_respects_the_causality_bound(
            selected in 0usize..200,
            width in proptest::sample::select(vec![4usize, 8, 16, 40, 100]),
            safety in 1usize..2,
        ) {
            let capped = cap_span(selected, width, safety).unwrap();
            prop_assert!(capped <= selected);
            // Strict form of the transit bound: capped < width / 2.
            prop_assert!(2 * capped < width);
        }
    }
}
