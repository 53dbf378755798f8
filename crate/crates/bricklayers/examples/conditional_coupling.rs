//! The conditional coupling: a fixed wall with controlled slopes is
//! dominated, with positive probability, by a random wall drawn from the
//! two-sided step profile. Conditioning the dominating process on that
//! event leaves the fixed process untouched and keeps the walls ordered
//! forever.
//!
//! Run with: cargo run --release --example conditional_coupling

use bricklayers::coupling::{
    acceptance_probability, conditional_coupling, window_slope, ConditionalCoupling,
    ConditionalCouplingSetup,
};
use bricklayers::prelude::*;
use std::sync::Arc;

fn main() -> Result<()> {
    let rate = Arc::new(RateFunction::exponential_bricklayers(1.0));
    let window = SiteWindow::new(-7, 7);

    // a mildly sloped deterministic wall
    let omega: Vec<i64> = window
        .sites()
        .map(|s| match s.rem_euclid(4) {
            0 => 1,
            2 => -1,
            _ => 0,
        })
        .collect();
    let fixed = LatticeState::from_omega_origin(window, omega);
    println!("fixed wall window slope K = {:.3}", window_slope(&fixed));

    // dominating parameters: densities must straddle the slope
    let lower = build_marginal(&rate, -1.2, 1e-12)?;
    let upper = build_marginal(&rate, 1.2, 1e-12)?;
    println!(
        "E^(theta1)(z) = {:.3} < -K < K < E^(theta2)(z) = {:.3}",
        lower.mean_density(),
        upper.mean_density()
    );
    let setup = ConditionalCouplingSetup::new(Arc::clone(&rate), fixed, (-6, 6), lower, upper)?;

    let (p, (lo, hi)) = acceptance_probability(&setup, 31415, 20_000);
    println!("acceptance probability pi(A^omega) = {p:.4} (Wilson 95% [{lo:.4}, {hi:.4}])");

    match conditional_coupling(&setup, 1.5, 2718, 100_000, &SimOptions::default())? {
        ConditionalCoupling::Accepted {
            outcome, attempts, ..
        } => {
            println!("accepted after {attempts} draw(s)");
            let ms = &outcome.run.members;
            let ordered = (-7..7i64)
                .all(|c| ms[0].state.height_at(c) <= ms[1].state.height_at(c));
            println!("h_i(t) <= g_i(t) at t = 1.5 on every column: {ordered}");
            let hs: Vec<i64> = (-3..3).map(|c| ms[0].state.height_at(c)).collect();
            let gs: Vec<i64> = (-3..3).map(|c| ms[1].state.height_at(c)).collect();
            println!("  fixed-wall heights  (cols -3..3): {hs:?}");
            println!("  dominating heights  (cols -3..3): {gs:?}");
        }
        ConditionalCoupling::Exhausted { attempts, .. } => {
            println!("no acceptance within {attempts} draws");
        }
    }
    Ok(())
}
