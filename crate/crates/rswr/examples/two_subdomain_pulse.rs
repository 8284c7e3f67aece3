//! Flagship run: a Gaussian pulse enters from the left boundary, crosses a
//! two-subdomain decomposition, reflects, and comes back — all solved with
//! the non-iterative window protocol — then the whole space-time solution is
//! checked against the monolithic reference solve.
//!
//! Run with: `cargo run --example two_subdomain_pulse`

use rswr::config::{apply_preset, default_base, Preset};
use rswr::oracle::{compare, concat_windows, solve_monolithic};
use rswr::runtime::run_rswr;

fn main() -> rswr::Result<()> {
    println!("=== two-subdomain pulse transit ===");
    let config = apply_preset(default_base(), Preset::N2);
    println!(
        "grid: {} nodes on [{}, {}], dt = {}, {} steps",
        config.n_nodes,
        config.x_min,
        config.x_max,
        config.dt(),
        config.n_total_steps()
    );
    println!(
        "decomposition: {} subdomains, {}-cell overlap, epsilon_rel = {:e}",
        config.n_subdomains, config.overlap_cells, config.epsilon_rel
    );

    let output = run_rswr(&config)?;
    let report = &output.report;
    println!("\ncompleted {} windows:", report.n_windows);
    let spans: Vec<usize> = report.windows.iter().map(|w| w.accepted_span).collect();
    println!("  first window predicted {} steps", report.windows[0].predict_steps);
    println!(
        "  accepted spans: {:?}{}",
        &spans[..spans.len().min(8)],
        if spans.len() > 8 { " ..." } else { "" }
    );
    println!(
        "  field messages: {} per round, {} total",
        report.field_messages_per_round, report.field_messages_total
    );

    let reference = solve_monolithic(&config)?;
    let joined = concat_windows(&output.windows)?;
    let errors = compare(&joined, &reference)?;
    println!("\nerror against the monolithic reference:");
    println!("  solution scale (max |u|): {:.6}", reference.max_abs());
    println!(
        "  max |diff| = {:.3e} at step {}, node {}",
        errors.max_abs, errors.max_step, errors.max_node
    );
    println!("  space-time L2 = {:.3e}", errors.l2_spacetime);

    let bound = 1e-10 * reference.max_abs().max(1.0);
    assert!(errors.max_abs <= bound, "error {:.3e} above bound {:.3e}", errors.max_abs, bound);
    println!("\nwithin the 1e-10 relative bound — ok");
    Ok(())
}
