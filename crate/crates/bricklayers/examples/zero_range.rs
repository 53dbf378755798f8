//! The totally asymmetric zero range process: occupancies instead of
//! increments, r(z) = 0 for z <= 0, and every r(-.) and e^{-theta} term
//! absent. Same clocks, same couplings, same invariant product measures.
//!
//! Run with: cargo run --release --example zero_range

use bricklayers::equilibrium::sample_site;
use bricklayers::prelude::*;
use std::sync::Arc;

fn main() -> Result<()> {
    let rate = Arc::new(RateFunction::zero_range_exponential(1.0));
    let report = validate_rate_function(&rate, (-20, 20))?;
    println!("zero-range family usable: {}", report.usable);

    // the bounded family needs e^theta below sup r
    let capped = Arc::new(RateFunction::zero_range_linear_capped(1.0));
    match build_marginal(&capped, 0.2, 1e-10) {
        Err(e) => println!("capped family at theta = 0.2: {e}"),
        Ok(_) => unreachable!(),
    }
    let m = build_marginal(&capped, -0.7, 1e-10)?;
    println!(
        "capped family at theta = -0.7: density {:.4} (support [0, {}])",
        m.mean_density(),
        m.z_hi
    );

    // exponential zero-range equilibrium and the mean-rate identity
    let theta = 0.4;
    let marginal = build_marginal(&rate, theta, 1e-12)?;
    let (fwd, bwd) = marginal.mean_rates();
    println!(
        "zr-exp theta {theta}: density {:.4}, E r(w) = {:.6} (e^theta = {:.6}), E r(-w) = {bwd}",
        marginal.mean_density(),
        fwd,
        theta.exp()
    );

    // boundary-driven zero-range run: the left injection at e^theta is
    // kept, the right e^{-theta} term is dropped
    let (l, r) = (-3i64, 3i64);
    let window = SiteWindow::new(l - 1, r + 1);
    let omega: Vec<i64> = window
        .sites()
        .map(|s| if s >= l && s <= r { sample_site(&marginal, 5, s) } else { 0 })
        .collect();
    let spec = ProcessSpec::boundary_driven(Arc::clone(&rate), l, r, theta)?;
    let mut clocks = PoissonPlaneSet::with_seed(5);
    let traj = simulate(
        &spec,
        LatticeState::from_omega_origin(window, omega),
        4.0,
        &mut clocks,
        &SimOptions::default(),
    )?;
    println!(
        "{} events; final occupancies {:?}",
        traj.events.len(),
        traj.final_state.omega
    );
    let nonneg = (l..=r).all(|s| traj.final_state.omega_at(s) >= 0);
    println!("occupancies on the volume stay nonnegative: {nonneg}");
    Ok(())
}
