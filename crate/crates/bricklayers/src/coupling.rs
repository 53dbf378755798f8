//! Couplings: several processes on one shared plane set.
//!
//! The coupled generator is never written out; sharing planes realizes it
//! operationally. A plane point (t, y) at (column, dir) triggers a jump in
//! every member whose rate at that pair strictly exceeds y, which is
//! exactly the min / positive-part rate decomposition of the coupling
//! tables. Discrepancies d_i = zeta_i - omega_i between members are the
//! second class particles (d_i > 0) and antiparticles (d_i < 0).

use crate::clocks::PoissonPlaneSet;
use crate::dynamics::{
    run_members, Event, LatticeState, Member, ProcessSpec, SimOptions, SiteWindow,
};
use crate::equilibrium::{GoodMeasureSpec, Marginal};
use crate::error::{Error, Result};
use crate::rates::RateFunction;
use crate::rng::{self, domain};
use crate::verify::stats::wilson_interval;
use serde::Serialize;
use std::sync::Arc;

/// Several processes sharing one plane set, with discrepancy tracking for
/// one designated ordered pair of members.
#[derive(Debug)]
pub struct CoupledRun {
    pub members: Vec<Member>,
    /// (index of omega-member, index of zeta-member) for discrepancies.
    pub pair: (usize, usize),
    /// Common site window of the tracked pair.
    pub common: SiteWindow,
    /// d_i = zeta_i - omega_i, maintained incrementally at every event.
    pub discrepancy: Vec<i64>,
}

/// One row of discrepancy history: nonzero d values at an event time.
#[derive(Debug, Clone, Serialize)]
pub struct DiscrepancyRecord {
    pub t: f64,
    pub nonzero: Vec<(i64, i64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Census {
    pub particles: i64,
    pub antiparticles: i64,
}

impl CoupledRun {
    pub fn new(members: Vec<Member>, pair: (usize, usize)) -> Result<Self> {
        assert!(members.len() >= 2, "a coupling needs at least two members");
        assert!(pair.0 < members.len() && pair.1 < members.len());
        let a = &members[pair.0].state.window;
        let b = &members[pair.1].state.window;
        let common = SiteWindow::new(a.lo.max(b.lo), a.hi.min(b.hi));
        let discrepancy = common
            .sites()
            .map(|s| members[pair.1].state.omega_at(s) - members[pair.0].state.omega_at(s))
            .collect();
        Ok(CoupledRun {
            members,
            pair,
            common,
            discrepancy,
        })
    }

    /// Recompute d from the member states; must equal the incremental
    /// values at every event.
    pub fn discrepancy_from_states(&self) -> Vec<i64> {
        self.common
            .sites()
            .map(|s| {
                self.members[self.pair.1].state.omega_at(s)
                    - self.members[self.pair.0].state.omega_at(s)
            })
            .collect()
    }

    /// Particle / antiparticle counts and their positions.
    pub fn census(&self) -> (Census, Vec<(i64, i64)>) {
        let mut particles = 0i64;
        let mut antiparticles = 0i64;
        let mut positions = Vec::new();
        for (k, site) in self.common.sites().enumerate() {
            let d = self.discrepancy[k];
            if d > 0 {
                particles += d;
            } else if d < 0 {
                antiparticles -= d;
            }
            if d != 0 {
                positions.push((site, d));
            }
        }
        (
            Census {
                particles,
                antiparticles,
            },
            positions,
        )
    }

}

/// Outcome of a coupled run.
#[derive(Debug)]
pub struct CoupledOutcome {
    pub run: CoupledRun,
    pub history: Vec<DiscrepancyRecord>,
    pub events: u64,
}

/// Run the members jointly to `horizon` on shared clocks. The observer,
/// when given, sees the members after every event and may record pathwise
/// statistics; returning is not optional, violations are counted outside.
pub fn run_coupled(
    mut run: CoupledRun,
    horizon: f64,
    clocks: &mut PoissonPlaneSet,
    opts: &SimOptions,
    mut observer: Option<&mut dyn FnMut(&[Member], Event, &[usize])>,
) -> Result<CoupledOutcome> {
    let mut members = std::mem::take(&mut run.members);
    let mut history: Vec<DiscrepancyRecord> = Vec::new();
    let mut events = 0u64;
    let record_history = opts.record_events;
    {
        let pair = run.pair;
        let common = run.common;
        let discrepancy = &mut run.discrepancy;
        let history_ref = &mut history;
        let observer_ref = &mut observer;
        let mut hook = |ms: &[Member], ev: Event, jumped: &[usize]| {
            for &k in jumped {
                // replicate bump_discrepancy inline over the borrow
                let sign = if k == pair.1 {
                    1
                } else if k == pair.0 {
                    -1
                } else {
                    continue;
                };
                for (site, delta) in [(ev.column, -sign), (ev.column + 1, sign)] {
                    if common.contains(site) {
                        discrepancy[(site - common.lo) as usize] += delta;
                    }
                }
            }
            events += 1;
            if record_history {
                let nonzero: Vec<(i64, i64)> = common
                    .sites()
                    .zip(discrepancy.iter())
                    .filter(|(_, &d)| d != 0)
                    .map(|(s, &d)| (s, d))
                    .collect();
                history_ref.push(DiscrepancyRecord { t: ev.t, nonzero });
            }
            if let Some(obs) = observer_ref.as_mut() {
                obs(ms, ev, jumped);
            }
        };
        run_members(&mut members, horizon, clocks, opts, Some(&mut hook))?;
    }
    run.members = members;
    Ok(CoupledOutcome {
        run,
        history,
        events,
    })
}

/// Setup for the conditional coupling: a fixed initial configuration, the
/// dominating step-profile measure, and the acceptance event
/// A^omega = { zeta : g_i >= h_i for all window columns }.
#[derive(Debug)]
pub struct ConditionalCouplingSetup {
    pub rate: Arc<RateFunction>,
    pub omega_init: LatticeState,
    pub volume: (i64, i64),
    pub profile: GoodMeasureSpec,
    /// Finite-window analogue of the Cesaro slope of the fixed state.
    pub k_omega: f64,
}

impl ConditionalCouplingSetup {
    /// Validates the slope condition E^(theta1)(z) < -K < K < E^(theta2)(z)
    /// on the window analogue of K_omega.
    pub fn new(
        rate: Arc<RateFunction>,
        omega_init: LatticeState,
        volume: (i64, i64),
        lower: Marginal,
        upper: Marginal,
    ) -> Result<Self> {
        let (l, r) = volume;
        // the zeta member is boundary-driven, so its window needs the
        // bookkeeping sites l-1 and r+1
        if omega_init.window.lo > l - 1 || omega_init.window.hi < r + 1 {
            return Err(Error::WindowTooSmall {
                have_lo: omega_init.window.lo,
                have_hi: omega_init.window.hi,
                need_lo: l - 1,
                need_hi: r + 1,
            });
        }
        let k_omega = window_slope(&omega_init);
        let mean1 = lower.mean_density();
        let mean2 = upper.mean_density();
        if !(mean1 < -k_omega && k_omega < mean2) {
            return Err(Error::SlopeNotDominated {
                mean1,
                mean2,
                k: k_omega,
            });
        }
        let profile = GoodMeasureSpec::step(lower, upper)?;
        Ok(ConditionalCouplingSetup {
            rate,
            omega_init,
            volume,
            profile,
            k_omega,
        })
    }
}

/// Max over directions of the averaged absolute increments, the finite
/// analogue of K_omega over the state's window.
pub fn window_slope(state: &LatticeState) -> f64 {
    let mut worst = 0.0f64;
    let mut acc = 0i64;
    let mut i = 1i64;
    while state.window.contains(i) {
        acc += state.omega_at(i).abs();
        worst = worst.max(acc as f64 / i as f64);
        i += 1;
    }
    acc = 0;
    let mut i = 0i64;
    while state.window.contains(i) {
        acc += state.omega_at(i).abs();
        // sites i..0 average over depth 1 - i
        worst = worst.max(acc as f64 / (1 - i) as f64);
        i -= 1;
    }
    worst
}

#[derive(Debug)]
pub enum ConditionalCoupling {
    Accepted {
        outcome: CoupledOutcome,
        zeta_init: Vec<i64>,
        attempts: u64,
        acceptance_rate: f64,
    },
    Exhausted {
        attempts: u64,
        acceptance_rate: f64,
    },
}

/// Rejection-sample zeta ~ pi until its height profile dominates the fixed
/// wall on the whole window, then run the basic coupling of the
/// (l,r,theta1)-process zeta against the [l,r]-monotone process omega.
///
/// The acceptance event quantifies over all of Z in the construction; here
/// it is restricted to the simulated window, and that truncation is part
/// of the reported result.
pub fn conditional_coupling(
    setup: &ConditionalCouplingSetup,
    horizon: f64,
    seed: u64,
    max_rejections: u64,
    opts: &SimOptions,
) -> Result<ConditionalCoupling> {
    let (l, r) = setup.volume;
    let window = setup.omega_init.window;
    let h_of = |omega: &LatticeState, c: i64| omega.height_at(c);

    let mut attempts = 0u64;
    while attempts < max_rejections {
        attempts += 1;
        let draw_seed = rng::mix(&[seed, domain::REJECTION, attempts]);
        let zeta: Vec<i64> = window
            .sites()
            .map(|s| {
                let mut rng = rng::substream(&[draw_seed, domain::INIT, s as u64]);
                setup
                    .profile
                    .site_marginal(s)
                    .sample(rng::uniform_open01(&mut rng))
            })
            .collect();
        let zeta_state = LatticeState::from_omega_origin(window, zeta.clone());
        let accepted = zeta_state
            .columns()
            .all(|c| zeta_state.height_at(c) >= h_of(&setup.omega_init, c));
        if !accepted {
            continue;
        }

        let omega_member = Member::new(
            "omega",
            ProcessSpec::monotone(Arc::clone(&setup.rate), l, r)?,
            setup.omega_init.clone(),
        )?;
        let zeta_member = Member::new(
            "zeta",
            ProcessSpec::boundary_driven(
                Arc::clone(&setup.rate),
                l,
                r,
                setup.profile.lower.theta,
            )?,
            zeta_state,
        )?;
        let run = CoupledRun::new(vec![omega_member, zeta_member], (0, 1))?;
        let mut clocks = PoissonPlaneSet::with_seed(rng::mix(&[seed, domain::CLOCKS, attempts]));
        let outcome = run_coupled(run, horizon, &mut clocks, opts, None)?;
        return Ok(ConditionalCoupling::Accepted {
            outcome,
            zeta_init: zeta,
            attempts,
            acceptance_rate: 1.0 / attempts as f64,
        });
    }
    Ok(ConditionalCoupling::Exhausted {
        attempts,
        acceptance_rate: 0.0,
    })
}

/// Estimate the acceptance probability of the domination event itself,
/// with a Wilson interval; it must be strictly positive whenever the
/// slope condition holds.
pub fn acceptance_probability(
    setup: &ConditionalCouplingSetup,
    seed: u64,
    trials: u64,
) -> (f64, (f64, f64)) {
    let window = setup.omega_init.window;
    let mut hits = 0u64;
    for k in 0..trials {
        let draw_seed = rng::mix(&[seed, domain::REJECTION, k]);
        let zeta: Vec<i64> = window
            .sites()
            .map(|s| {
                let mut rng = rng::substream(&[draw_seed, domain::INIT, s as u64]);
                setup
                    .profile
                    .site_marginal(s)
                    .sample(rng::uniform_open01(&mut rng))
            })
            .collect();
        let zeta_state = LatticeState::from_omega_origin(window, zeta);
        if zeta_state
            .columns()
            .all(|c| zeta_state.height_at(c) >= setup.omega_init.height_at(c))
        {
            hits += 1;
        }
    }
    let p = hits as f64 / trials as f64;
    (p, wilson_interval(hits, trials, 1.96))
}

/// Annihilation probability estimates over a time grid, from one set of
/// coupled replicas. Per path the event {omega(t) = zeta(t)} is increasing
/// in t, so the estimates are nondecreasing by construction.
#[derive(Debug, Clone, Serialize)]
pub struct AnnihilationEstimate {
    pub t: f64,
    pub probability: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub replicas: u64,
}

pub fn annihilation_probability(
    rate: &Arc<RateFunction>,
    base_marginal: &Marginal,
    volume: (i64, i64),
    site: i64,
    t_grid: &[f64],
    replicas: u64,
    seed: u64,
) -> Result<Vec<AnnihilationEstimate>> {
    use rayon::prelude::*;
    let horizon = t_grid.iter().cloned().fold(0.0, f64::max);
    let firsts: Vec<Option<f64>> = (0..replicas)
        .into_par_iter()
        .map(|k| {
            first_annihilation_time(
                rate,
                base_marginal,
                volume,
                site,
                horizon,
                rng::replica_seed(seed, k),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(t_grid
        .iter()
        .map(|&t| {
            let hits = firsts
                .iter()
                .filter(|f| f.map_or(false, |ft| ft <= t))
                .count() as u64;
            let p = hits as f64 / replicas as f64;
            let (lo, hi) = wilson_interval(hits, replicas, 1.96);
            AnnihilationEstimate {
                t,
                probability: p,
                wilson_low: lo,
                wilson_high: hi,
                replicas,
            }
        })
        .collect())
}

/// First time the single-brick discrepancy pair annihilates, tracked
/// incrementally inside the event loop.
pub fn first_annihilation_time(
    rate: &Arc<RateFunction>,
    base_marginal: &Marginal,
    volume: (i64, i64),
    site: i64,
    horizon: f64,
    seed: u64,
) -> Result<Option<f64>> {
    let (l, r) = volume;
    let window = SiteWindow::new(l, r);
    let omega: Vec<i64> = window
        .sites()
        .map(|s| crate::equilibrium::sample_site(base_marginal, seed, s))
        .collect();
    let mut zeta = omega.clone();
    zeta[(site - l) as usize] -= 1;
    zeta[(site + 1 - l) as usize] += 1;

    let spec = ProcessSpec::monotone(Arc::clone(rate), l, r)?;
    let a = Member::new(
        "omega",
        spec.clone(),
        LatticeState::from_omega_origin(window, omega),
    )?;
    let b = Member::new("zeta", spec, LatticeState::from_omega_origin(window, zeta))?;
    let mut members = vec![a, b];
    let mut clocks = PoissonPlaneSet::with_seed(rng::mix(&[seed, domain::CLOCKS]));

    let mut d_live: Vec<i64> = window
        .sites()
        .map(|s| members[1].state.omega_at(s) - members[0].state.omega_at(s))
        .collect();
    let mut first: Option<f64> = None;
    let opts = SimOptions {
        record_events: false,
        ..SimOptions::default()
    };
    {
        let lo = window.lo;
        let mut hook = |_ms: &[Member], ev: Event, jumped: &[usize]| {
            if first.is_some() {
                return;
            }
            for &k in jumped {
                let sign: i64 = if k == 1 { 1 } else { -1 };
                for (s, delta) in [(ev.column, -sign), (ev.column + 1, sign)] {
                    let idx = s - lo;
                    if idx >= 0 && (idx as usize) < d_live.len() {
                        d_live[idx as usize] += delta;
                    }
                }
            }
            if d_live.iter().all(|&d| d == 0) {
                first = Some(ev.t);
            }
        };
        run_members(&mut members, horizon, &mut clocks, &opts, Some(&mut hook))?;
    }
    Ok(first)
}
