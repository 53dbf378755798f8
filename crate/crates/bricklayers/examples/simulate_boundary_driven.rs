//! Event-driven simulation of the boundary-driven process: two virtual
//! bricklayers with mean equilibrium rates e^theta and e^{-theta} keep
//! the product measure exactly invariant on the volume.
//!
//! Run with: cargo run --release --example simulate_boundary_driven

use bricklayers::equilibrium::sample_site;
use bricklayers::prelude::*;
use std::sync::Arc;

fn main() -> Result<()> {
    let rate = Arc::new(RateFunction::exponential_bricklayers(1.0));
    let theta = 0.2;
    let (l, r) = (-4i64, 4i64);
    let spec = ProcessSpec::boundary_driven(Arc::clone(&rate), l, r, theta)?;

    // equilibrium initial state on the volume, boundary bookkeeping sites 0
    let window = SiteWindow::new(l - 1, r + 1);
    let marginal = build_marginal(&rate, theta, 1e-12)?;
    let omega: Vec<i64> = window
        .sites()
        .map(|s| if s >= l && s <= r { sample_site(&marginal, 7, s) } else { 0 })
        .collect();
    let init = LatticeState::from_omega_origin(window, omega);

    let mut clocks = PoissonPlaneSet::with_seed(7);
    let opts = SimOptions {
        snapshot_grid: vec![1.0, 2.0, 3.0, 4.0, 5.0],
        ..SimOptions::default()
    };
    let traj = simulate(&spec, init.clone(), 5.0, &mut clocks, &opts)?;

    println!(
        "{} events over t in [0, 5] on volume ({l}, {r}), theta = {theta}",
        traj.events.len()
    );
    println!("first events:");
    for ev in traj.events.iter().take(5) {
        println!("  t = {:.4}, column {}, {:?}", ev.t, ev.column, ev.dir);
    }
    println!("snapshots (omega over sites {}..{}):", window.lo, window.hi);
    for snap in &traj.snapshots {
        println!("  t = {:>4.1}: {:?}", snap.t, snap.omega);
    }
    println!(
        "height/increment relation holds at the end: {}",
        traj.final_state.heights_consistent()
    );
    let growth: i64 = traj
        .final_state
        .columns()
        .map(|c| traj.final_state.height_at(c) - init.height_at(c))
        .sum();
    println!(
        "total bricks laid: {growth} (mean per column per unit time ~ {:.3}, stationary value {:.3})",
        growth as f64 / (window.len() as f64 - 1.0) / 5.0,
        theta.exp() + (-theta).exp()
    );
    Ok(())
}
