//! Property tests for the structural invariants: height/increment
//! duality, stochastic-order preservation under common uniforms, clock
//! nesting, and conservation under the monotone dynamics.

use bricklayers::prelude::*;
use proptest::prelude::*;
use std::sync::Arc;

proptest! {
    #[test]
    fn heights_and_increments_are_mutually_inverse(
        omega in prop::collection::vec(-6i64..=6, 4..24),
        anchor_h in -20i64..=20,
    ) {
        let n = omega.len() as i64;
        let window = SiteWindow::new(-(n / 2), n - n / 2 - 1);
        let st = LatticeState::from_omega(window, omega.clone(), 0, anchor_h);
        prop_assert!(st.heights_consistent());
        let back = increments_from_heights(
            window,
            &st.heights,
            (omega[0], omega[omega.len() - 1]),
        );
        prop_assert_eq!(back, omega);
    }

    #[test]
    fn common_uniform_coupling_is_ordered(
        t1 in -2.0f64..2.0,
        gap in 0.0f64..2.0,
        us in prop::collection::vec(1e-9f64..1.0, 1..64),
    ) {
        let rate = Arc::new(RateFunction::exponential_bricklayers(1.0));
        let m1 = build_marginal(&rate, t1, 1e-10).unwrap();
        let m2 = build_marginal(&rate, t1 + gap, 1e-10).unwrap();
        for u in us {
            let (z1, z2) = monotone_coupled_sample(&m1, &m2, u).unwrap();
            prop_assert!(z1 <= z2);
        }
    }

    #[test]
    fn clock_acceptances_nest_across_levels(
        seed in 0u64..1_000_000,
        level_lo in 0.05f64..2.0,
        extra in 0.1f64..4.0,
    ) {
        let level_hi = level_lo + extra;
        let collect = |level: f64| {
            let mut ps = PoissonPlaneSet::with_seed(seed);
            let mut t = 0.0;
            let mut pts = Vec::new();
            while let Some((nt, y)) = ps
                .next_point(2, Direction::RightLay, t, level, 30.0)
                .unwrap()
            {
                pts.push((nt, y));
                t = nt;
            }
            pts
        };
        let low = collect(level_lo);
        let high = collect(level_hi);
        for p in &low {
            prop_assert!(high.contains(p));
        }
    }

    #[test]
    fn monotone_dynamics_conserve_volume_mass(
        seed in 0u64..1_000_000,
        l in -5i64..=0,
        width in 1i64..=6,
        omega in prop::collection::vec(-3i64..=3, 16),
    ) {
        let r = l + width;
        let window = SiteWindow::new(-7, 8);
        let rate = Arc::new(RateFunction::exponential_bricklayers(1.0));
        let init = LatticeState::from_omega_origin(window, omega);
        let sum_before: i64 = (l..=r).map(|s| init.omega_at(s)).sum();
        let outside_before: Vec<i64> = window
            .sites()
            .filter(|s| *s < l || *s > r)
            .map(|s| init.omega_at(s))
            .collect();

        let spec = ProcessSpec::monotone(Arc::clone(&rate), l, r).unwrap();
        let mut clocks = PoissonPlaneSet::with_seed(seed);
        let traj = simulate(&spec, init, 0.5, &mut clocks, &SimOptions::default()).unwrap();

        let sum_after: i64 = (l..=r).map(|s| traj.final_state.omega_at(s)).sum();
        let outside_after: Vec<i64> = window
            .sites()
            .filter(|s| *s < l || *s > r)
            .map(|s| traj.final_state.omega_at(s))
            .collect();
        prop_assert_eq!(sum_before, sum_after);
        prop_assert_eq!(outside_before, outside_after);
        prop_assert!(traj.final_state.heights_consistent());
    }
}
