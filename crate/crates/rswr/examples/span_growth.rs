//! Window sizing over a full run: the first window uses the configured seed,
//! later windows grow from whatever was last accepted, and the causality cap
//! keeps commitments inside half the overlap transit time. Prints the
//! planning table of the two-subdomain preset.
//!
//! Run with: `cargo run --example span_growth`

use rswr::config::{apply_preset, default_base, Preset};
use rswr::engine::{advance_plan, WindowPlan};
use rswr::runtime::run_rswr;

fn main() -> rswr::Result<()> {
    println!("=== growth rule on its own ===");
    let dt = 1.0;
    let mut plan = WindowPlan::first(40, dt);
    println!("accepted -> next prediction (beta = 0.1):");
    for accepted in [10usize, 19, 7, 1] {
        let next = advance_plan(&plan, accepted, 0.1, dt);
        println!("  {accepted:>3} -> {}", next.predict_steps);
        plan = WindowPlan::first(40, dt);
    }

    println!("\n=== the same rule inside a real run ===");
    let config = apply_preset(default_base(), Preset::N2);
    let cap = config.overlap_cells / 2 - config.safety_steps;
    println!(
        "overlap {} cells, safety {} step(s) => cap {} steps per window",
        config.overlap_cells, config.safety_steps, cap
    );
    let output = run_rswr(&config)?;
    println!("\n   k  start  predict  accepted");
    for w in output.report.windows.iter().take(6) {
        println!("  {:>2}  {:>5}  {:>7}  {:>8}", w.k, w.start_step, w.predict_steps, w.accepted_span);
    }
    println!("  ..");
    let last = output.report.windows.last().expect("at least one window");
    println!("  {:>2}  {:>5}  {:>7}  {:>8}", last.k, last.start_step, last.predict_steps, last.accepted_span);

    let steady: Vec<&rswr::runtime::WindowSummary> = output
        .report
        .windows
        .iter()
        .filter(|w| w.k > 1 && w.k < output.report.n_windows)
        .collect();
    assert!(steady.iter().all(|w| w.accepted_span == cap));
    assert!(steady.iter().all(|w| w.predict_steps == cap + (0.1f64 * cap as f64).ceil() as usize));
    println!(
        "\nsteady state: accept {cap}, predict {} — the prediction stays a little ahead of",
        cap + 2
    );
    println!("the cap so agreement, not planning, is what limits each window — ok");
    Ok(())
}
