//! Simulator and verification harness for the totally asymmetric zero
//! range process and the bricklayers' deposition process with
//! exponentially growing jump rates.
//!
//! The dynamics are built on the Poisson-clock graphical construction:
//! each column's two growth parts (a bricklayer laying right, its right
//! neighbor laying left) read dedicated planar Poisson point processes,
//! realized lazily and deterministically from counter-based substreams.
//! Processes coupled on a shared plane set realize the basic coupling and
//! its attractivity, monotonicity and second-class-particle structure
//! pathwise; the `verify` module turns the model's exact identities
//! (product invariant measures, generator stationarity, growth bounds,
//! forward equations, ergodic averages) into reproducible checks.
//!
//! # Quick start
//!
//! ```
//! use bricklayers::prelude::*;
//! use std::sync::Arc;
//!
//! // exponential bricklayers rates r(z) = e^{beta (z - 1/2)}
//! let rate = Arc::new(RateFunction::exponential_bricklayers(1.0));
//!
//! // the single-site equilibrium at theta = 0 is a discrete Gaussian
//! let marginal = build_marginal(&rate, 0.0, 1e-12).unwrap();
//! assert!((marginal.z_of_theta() - 2.5066282880).abs() < 1e-8);
//!
//! // simulate a boundary-driven volume for one unit of time
//! let spec = ProcessSpec::boundary_driven(Arc::clone(&rate), -2, 2, 0.0).unwrap();
//! let init = LatticeState::flat(SiteWindow::new(-3, 3));
//! let mut clocks = PoissonPlaneSet::with_seed(1);
//! let traj = simulate(&spec, init, 1.0, &mut clocks, &SimOptions::default()).unwrap();
//! assert!(traj.final_state.heights_consistent());
//! ```
//!
//! The `examples/` directory walks through each capability: equilibrium
//! measures, deterministic clocks, simulation, window limits, couplings,
//! second-class particles, and the verification suites.

pub mod clocks;
pub mod config;
pub mod coupling;
pub mod dynamics;
pub mod equilibrium;
pub mod cli;
mod error;
pub mod output;
pub mod rates;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::clocks::{ClockConfig, Direction, PoissonPlaneSet};
    pub use crate::coupling::{
        annihilation_probability, conditional_coupling, run_coupled, ConditionalCoupling,
        ConditionalCouplingSetup, CoupledRun,
    };
    pub use crate::dynamics::{
        heights_from_increments, increments_from_heights, simulate, window_limit, Event,
        GrowthSchedule, LatticeState, Member, ProcessKind, ProcessSpec, SimOptions, SiteWindow,
        Trajectory, WindowLimit,
    };
    pub use crate::equilibrium::{
        build_marginal, invert_density, monotone_coupled_sample, GoodMeasureSpec, Marginal,
        SiteProfile,
    };
    pub use crate::error::{Error, Result};
    pub use crate::rates::{
        validate_rate_function, Extrapolation, Family, RateFunction, Regime, ValidationReport,
    };
    pub use crate::verify::generator::{
        apply_generator, apply_infinite_generator, generator_mean_zero, CylinderFunction,
    };
    pub use crate::verify::{CheckResult, Metric, Verdict};
}
