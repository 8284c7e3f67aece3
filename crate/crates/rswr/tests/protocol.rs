//! Protocol-level integration tests: whole runs through the public API.

use rswr::config::{
    default_base, RswrConfig, RunMode, SourcePlacement, SourceShape, SourceSpec,
};
use rswr::error::RswrError;
use rswr::oracle::{concat_windows, solve_monolithic};
use rswr::runtime::run_rswr;

fn gaussian_left(center_time: f64) -> SourceSpec {
    SourceSpec {
        placement: SourcePlacement::LeftBoundary,
        shape: SourceShape::GaussianPulse,
        amplitude: 1.0,
        center_time,
        width: 5.0,
    }
}

fn small_config(n_subdomains: usize, n_nodes: usize, t_end: f64) -> RswrConfig {
    let mut c = default_base();
    c.x_max = (n_nodes - 1) as f64;
    c.n_nodes = n_nodes;
    c.n_subdomains = n_subdomains;
    c.overlap_cells = 20;
    c.t_end = t_end;
    c.sources = vec![gaussian_left(45.0)];
    c
}

#[test]
fn single_subdomain_run_matches_the_monolithic_solve_bitwise() {
    let config = small_config(1, 101, 90.0);
    let output = run_rswr(&config).unwrap();
    assert!(output.report.n_windows > 1, "growth should produce several windows");
    assert_eq!(output.report.field_messages_total, 0);

    let joined = concat_windows(&output.windows).unwrap();
    let reference = solve_monolithic(&config).unwrap();
    assert_eq!(joined.n_steps(), reference.n_steps());
    for step in 0..=joined.n_steps() {
        for node in 0..101 {
            assert_eq!(
                joined.at(step, node).to_bits(),
                reference.at(step, node).to_bits(),
                "mismatch at step {step}, node {node}"
            );
        }
    }
}

#[test]
fn both_modes_produce_identical_windows() {
    let mut config = small_config(2, 101, 120.0);
    config.mode = RunMode::Single;
    let single = run_rswr(&config).unwrap();
    config.mode = RunMode::Parallel;
    let parallel = run_rswr(&config).unwrap();

    assert_eq!(single.report.n_windows, parallel.report.n_windows);
    assert_eq!(single.windows.len(), parallel.windows.len());
    for (k, (a, b)) in single.windows.iter().zip(&parallel.windows).enumerate() {
        assert_eq!(a.n_steps(), b.n_steps(), "window {} spans differ", k + 1);
        for step in 0..=a.n_steps() {
            for node in 0..a.grid().n_nodes() {
                assert_eq!(
                    a.at(step, node).to_bits(),
                    b.at(step, node).to_bits(),
                    "window {} differs at step {step}, node {node}",
                    k + 1
                );
            }
        }
    }
    for (a, b) in single.report.windows.iter().zip(&parallel.report.windows) {
        assert_eq!(a.accepted_span, b.accepted_span);
        assert_eq!(a.predict_steps, b.predict_steps);
        assert_eq!(a.pair_spans.len(), b.pair_spans.len());
    }
    assert_eq!(single.report.worker_threads, 1);
    assert_eq!(parallel.report.worker_threads, 2);
}

#[test]
fn three_workers_send_four_field_messages_per_round() {
    let mut config = small_config(3, 151, 120.0);
    config.mode = RunMode::Parallel;
    let output = run_rswr(&config).unwrap();
    let report = &output.report;
    assert_eq!(report.field_messages_per_round, 4, "two per adjacent pair");
    assert_eq!(report.field_messages_total, 4 * report.n_windows);
    // Votes are all-to-all (3 * 2) and worker 0 broadcasts the decision (2).
    assert_eq!(report.scalar_messages_total, 8 * report.n_windows);
}

#[test]
fn committed_spans_stay_strictly_inside_the_transit_bound() {
    for n_subdomains in [2usize, 3] {
        let config = small_config(n_subdomains, 151, 130.0);
        let output = run_rswr(&config).unwrap();
        let dx = config.dx();
        let bound = config.overlap_cells as f64 * dx / (2.0 * config.wave_speed);
        for w in &output.report.windows {
            let commit_time = w.accepted_span as f64 * config.dt();
            assert!(
                commit_time < bound,
                "window {} committed {} s, transit bound is {} s",
                w.k,
                commit_time,
                bound
            );
            for p in &w.pair_spans {
                assert!(p.capped_span as f64 * config.dt() < bound);
            }
        }
    }
}

#[test]
fn quiet_problem_runs_at_the_cap_every_window() {
    let mut config = small_config(2, 101, 120.0);
    config.sources.clear();
    let output = run_rswr(&config).unwrap();
    // Everything is identically zero, so agreement is perfect and only the
    // causality cap (20 / 2 - 1 = 9) limits progress, except for the final
    // short window.
    let spans: Vec<usize> = output.report.windows.iter().map(|w| w.accepted_span).collect();
    let n_total = output.report.n_total_steps as usize;
    assert_eq!(spans.iter().sum::<usize>(), n_total);
    for (i, &s) in spans.iter().enumerate() {
        if i + 1 < spans.len() {
            assert_eq!(s, 9);
        } else {
            assert_eq!(s, n_total - 9 * (spans.len() - 1));
        }
    }
    for slab in &output.windows {
        assert_eq!(slab.max_abs(), 0.0);
    }
}

#[test]
fn zero_time_run_is_an_empty_success() {
    let config = small_config(2, 101, 0.0);
    let output = run_rswr(&config).unwrap();
    assert_eq!(output.report.n_windows, 0);
    assert!(output.windows.is_empty());
    assert_eq!(output.report.field_messages_total, 0);
}

#[test]
fn infeasible_partition_is_reported_as_invalid_input() {
    // 101 nodes cannot host 4 subdomains with a 40-cell overlap.
    let mut config = small_config(4, 101, 10.0);
    config.overlap_cells = 40;
    match run_rswr(&config) {
        Err(RswrError::InvalidInput(msg)) => assert!(msg.contains("infeasible")),
        other => panic!("expected invalid-input error, got {other:?}"),
    }
}

#[test]
fn growth_follows_the_accepted_span() {
    let config = small_config(2, 101, 120.0);
    let output = run_rswr(&config).unwrap();
    let windows = &output.report.windows;
    assert!(windows.len() >= 3);
    assert_eq!(windows[0].predict_steps, config.overlap_cells, "first window uses the seed size");
    for pair in windows.windows(2) {
        let accepted = pair[0].accepted_span;
        let expected = accepted + (config.beta * accepted as f64).ceil() as usize;
        let expected = expected.max(2);
        // The final window may be clamped by the remaining step budget.
        let remaining: usize = pair[1].predict_steps;
        assert!(
            remaining == expected || pair[1].k == windows.last().unwrap().k,
            "window {} predicted {}, growth rule says {}",
            pair[1].k,
            remaining,
            expected
        );
    }
}
