//! Approximating the infinite-volume process: monotone volumes of
//! doubling half-width share one set of clocks; once two consecutive
//! volumes agree exactly on the target window the limit has stabilized
//! there, by monotone convergence of the heights.
//!
//! Run with: cargo run --release --example window_limit

use bricklayers::equilibrium::sample_site;
use bricklayers::prelude::*;
use std::sync::Arc;

fn main() -> Result<()> {
    let rate = Arc::new(RateFunction::exponential_bricklayers(1.0));
    let marginal = build_marginal(&rate, 0.0, 1e-12)?;
    let schedule = GrowthSchedule::default();

    println!("target columns [-2, 2], horizon T = 1, equilibrium initial state\n");
    let mut radii = Vec::new();
    for seed in 0..20u64 {
        let init_seed = bricklayers::rng::replica_seed(1000, seed);
        let wl = window_limit(
            &rate,
            &|site| sample_site(&marginal, init_seed, site),
            (-2, 2),
            1.0,
            init_seed,
            schedule,
            ClockConfig::default(),
        )?;
        radii.push(wl.stabilization_radius);
        if seed < 5 {
            println!(
                "seed {seed}: stabilized at radius {} after {} doubling(s), {} events on the target",
                wl.stabilization_radius,
                wl.doublings_used,
                wl.events.len()
            );
        }
    }
    let max = radii.iter().max().unwrap();
    println!("\nmax stabilization radius over 20 seeds: {max}");

    // volume monotonicity behind the limit: heights of a nested volume
    // never exceed those of a larger one on shared clocks
    let seed = 4242u64;
    let heights_at = |half: i64| -> Result<Vec<i64>> {
        let window = SiteWindow::new(-half, half);
        let omega: Vec<i64> = window.sites().map(|s| sample_site(&marginal, seed, s)).collect();
        let spec = ProcessSpec::monotone(Arc::clone(&rate), -half, half)?;
        let mut clocks = PoissonPlaneSet::with_seed(seed);
        let traj = simulate(
            &spec,
            LatticeState::from_omega_origin(window, omega),
            1.0,
            &mut clocks,
            &SimOptions::default(),
        )?;
        Ok((-3..=3).map(|c| traj.final_state.height_at(c)).collect())
    };
    let small = heights_at(4)?;
    let big = heights_at(16)?;
    println!("heights on columns -3..3 at t=1: volume 4 {small:?} <= volume 16 {big:?}");
    assert!(small.iter().zip(&big).all(|(a, b)| a <= b));
    Ok(())
}
