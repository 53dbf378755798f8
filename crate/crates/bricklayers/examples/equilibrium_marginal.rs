//! Single-site equilibrium measures: build a marginal, inspect its
//! moments and the mean-rate identity, invert the density map, and couple
//! two parameters monotonically.
//!
//! Run with: cargo run --release --example equilibrium_marginal

use bricklayers::prelude::*;
use std::sync::Arc;

fn main() -> Result<()> {
    let rate = Arc::new(RateFunction::exponential_bricklayers(1.0));
    let report = validate_rate_function(&rate, (-50, 50))?;
    println!("rate family usable: {}", report.usable);
    for check in &report.checks {
        println!("  {:28} pass={} {}", check.name, check.passed, check.note);
    }

    for theta in [-1.0, 0.0, 0.7] {
        let m = build_marginal(&rate, theta, 1e-12)?;
        let (er, erm) = m.mean_rates();
        println!(
            "theta {theta:+.1}: Z = {:.9}, density = {:+.6}, var = {:.6}, E r(w) = {:.6} (e^theta = {:.6}), E r(-w) = {:.6}",
            m.z_of_theta(),
            m.mean_density(),
            m.variance(),
            er,
            theta.exp(),
            erm,
        );
    }

    // density -> theta inversion round trip
    let rho = 0.5;
    let theta = invert_density(&rate, rho, 1e-9)?;
    let back = build_marginal(&rate, theta, 1e-12)?.mean_density();
    println!("invert_density(0.5) = {theta:.6}; density(theta) = {back:.9}");

    // common-uniform monotone coupling between two parameters
    let m1 = build_marginal(&rate, -0.5, 1e-12)?;
    let m2 = build_marginal(&rate, 0.5, 1e-12)?;
    let mut inversions = 0;
    let mut rng = bricklayers::rng::substream(&[7, 7]);
    for _ in 0..50_000 {
        let u = bricklayers::rng::uniform_open01(&mut rng);
        let (z1, z2) = monotone_coupled_sample(&m1, &m2, u)?;
        if z1 > z2 {
            inversions += 1;
        }
    }
    println!("monotone coupling inversions over 5e4 draws: {inversions}");

    // a few pmf rows around the origin
    let m = build_marginal(&rate, 0.0, 1e-12)?;
    println!("pmf near 0 at theta = 0:");
    for z in -3..=3 {
        println!("  z = {z:+}: {:.8}", m.pmf(z));
    }
    Ok(())
}
