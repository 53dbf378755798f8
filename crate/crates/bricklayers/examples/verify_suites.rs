//! Running verification suites from code: the exact generator residual,
//! time stationarity with its negative control, and the small-volume
//! matrix-exponential oracle.
//!
//! Run with: cargo run --release --example verify_suites

use bricklayers::prelude::*;
use bricklayers::verify::{self, generator::CylinderFunction};
use std::sync::Arc;

fn main() -> Result<()> {
    let rate = Arc::new(RateFunction::exponential_bricklayers(1.0));

    // exact stationarity of the product measure under the boundary-driven
    // generator: the truncated sum collapses to the dropped tail
    let marginal = build_marginal(&rate, 0.0, 1e-14)?;
    let phi = CylinderFunction::IndicatorEq { site: 0, value: 0 };
    for m in [4, 6, 8, 12] {
        let r = generator_mean_zero(&rate, &marginal, (-1, 1), &phi, m)?;
        println!("generator residual at truncation {m:>2}: {:.3e}", r.abs());
    }

    // statistical stationarity in time, then the deliberately broken
    // boundary rate as a negative control
    let phis = vec![
        CylinderFunction::IndicatorEq { site: 0, value: 0 },
        CylinderFunction::ClampedValue { site: 0, clamp: 8 },
    ];
    let ok = verify::stationarity_test(&rate, 0.0, (-3, 3), 3.0, 5000, &phis, 1.0, 11)?;
    println!("\n{}", ok.summary());
    let bad = verify::stationarity_test(&rate, 0.0, (-3, 3), 3.0, 5000, &phis, 2.0, 12)?;
    println!("\nnegative control (left boundary rate doubled):");
    println!("{}", bad.summary());

    // the tiny single-site volume against its exact transient oracle
    let oracle = verify::ctmc_oracle_check(&rate, 0.0, 3, 0.5, 30_000, 13)?;
    println!("\n{}", oracle.summary());
    Ok(())
}
