//! Subcommand implementations behind the thin binary. Each command loads a
//! config, applies flag overrides, runs, and writes outputs atomically
//! with the resolved config embedded.

use crate::config::ExperimentConfig;
use crate::dynamics::{
    simulate, window_limit, GrowthSchedule, LatticeState, Member, SimOptions, SiteWindow,
};
use crate::equilibrium::build_marginal;
use crate::error::{Error, Result};
use crate::output;
use crate::verify::generator::CylinderFunction;
use crate::verify::{self, CheckResult};
use crate::{clocks::PoissonPlaneSet, coupling, rng};
use std::path::Path;

/// Process exit codes: 0 pass, 1 check-fail, 2 usage, 3 runtime error.
pub enum Outcome {
    Pass,
    CheckFail,
}

impl Outcome {
    pub fn code(&self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::CheckFail => 1,
        }
    }
}

pub struct Overrides {
    pub seed: Option<u64>,
    pub replicas: Option<u64>,
}

pub fn load_config(path: &Path, over: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_path(path)?;
    if let Some(seed) = over.seed {
        cfg.run.seed = seed;
    }
    if let Some(replicas) = over.replicas {
        cfg.run.replicas = replicas;
    }
    Ok(cfg)
}

pub fn init_threads(threads: usize) {
    if threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

/// `sample-equilibrium`: marginal dump plus a sample file.
pub fn cmd_sample_equilibrium(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Outcome> {
    let rate = cfg.rate.build()?;
    let theta = cfg.init.theta.unwrap_or(0.0);
    let marginal = build_marginal(&rate, theta, 1e-12)?;
    output::write_atomic(
        &out_dir.join("marginal.txt"),
        output::marginal_dump(&marginal).as_bytes(),
    )?;

    let n = cfg.run.samples.unwrap_or(10_000);
    let mut samples = String::with_capacity(n as usize * 4);
    for k in 0..n {
        samples.push_str(&format!(
            "{}\n",
            crate::equilibrium::sample_site(&marginal, cfg.run.seed, k as i64)
        ));
    }
    output::write_atomic(&out_dir.join("samples.txt"), samples.as_bytes())?;
    output::write_atomic(&out_dir.join("config.toml"), cfg.to_toml().as_bytes())?;
    Ok(Outcome::Pass)
}

fn initial_state(
    cfg: &ExperimentConfig,
    rate: &std::sync::Arc<crate::rates::RateFunction>,
    window: SiteWindow,
    volume: (i64, i64),
    seed: u64,
) -> Result<LatticeState> {
    let sampler = cfg.init.site_sampler(rate, seed)?;
    let omega: Vec<i64> = window
        .sites()
        .map(|s| {
            if s >= volume.0 && s <= volume.1 {
                sampler(s)
            } else {
                0
            }
        })
        .collect();
    Ok(LatticeState::from_omega_origin(window, omega))
}

/// `simulate`: one trajectory file per replica, with derived seeds.
pub fn cmd_simulate(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Outcome> {
    let rate = cfg.rate.build()?;
    if cfg.window_limit.enabled.unwrap_or(false) {
        return cmd_simulate_window_limit(cfg, &rate, out_dir);
    }
    let pc = cfg
        .process
        .as_ref()
        .ok_or_else(|| Error::Config("simulate needs a [process] table".into()))?;
    let spec = pc.build(&rate)?;
    let need = spec.required_sites();
    let window = SiteWindow::new(need.lo.min(pc.l - 1), need.hi.max(pc.r + 1));
    for k in 0..cfg.run.replicas {
        let seed = rng::replica_seed(cfg.run.seed, k);
        let init = initial_state(cfg, &rate, window, (pc.l, pc.r), seed)?;
        let mut clocks = PoissonPlaneSet::with_seed(seed);
        let opts = SimOptions {
            snapshot_grid: cfg.run.snapshots.clone(),
            ..SimOptions::default()
        };
        let traj = simulate(&spec, init, cfg.run.t, &mut clocks, &opts)?;
        output::write_atomic(
            &out_dir.join(format!("trajectory-{k}.jsonl")),
            output::trajectory_jsonl(&traj, cfg, k)?.as_bytes(),
        )?;
        output::write_atomic(
            &out_dir.join(format!("snapshots-{k}.csv")),
            output::trajectory_csv(&traj).as_bytes(),
        )?;
    }
    Ok(Outcome::Pass)
}

fn cmd_simulate_window_limit(
    cfg: &ExperimentConfig,
    rate: &std::sync::Arc<crate::rates::RateFunction>,
    out_dir: &Path,
) -> Result<Outcome> {
    let wl = &cfg.window_limit;
    let target = (wl.target_lo.unwrap_or(-2), wl.target_hi.unwrap_or(2));
    let schedule = GrowthSchedule {
        base_halfwidth: wl.base_halfwidth.unwrap_or(4),
        max_doublings: wl.max_doublings.unwrap_or(12),
    };
    for k in 0..cfg.run.replicas {
        let seed = rng::replica_seed(cfg.run.seed, k);
        let sampler = cfg.init.site_sampler(rate, seed)?;
        // a non-stabilized window is an error with a nonzero exit, never a
        // silently unstable output
        let res = window_limit(
            rate,
            &sampler,
            target,
            cfg.run.t,
            seed,
            schedule,
            crate::clocks::ClockConfig::default(),
        )?;
        let doc = serde_json::json!({
            "target": target,
            "seed": seed,
            "replica": k,
            "stabilization_radius": res.stabilization_radius,
            "doublings_used": res.doublings_used,
            "events": res.events,
            "final_heights": res.final_heights,
            "final_omega": res.final_omega,
            "config": cfg,
        });
        output::write_atomic(
            &out_dir.join(format!("window-limit-{k}.json")),
            serde_json::to_string_pretty(&doc)?.as_bytes(),
        )?;
    }
    Ok(Outcome::Pass)
}

/// `couple`: coupled trajectories plus discrepancy history and census.
pub fn cmd_couple(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Outcome> {
    let rate = cfg.rate.build()?;
    if cfg.members.len() < 2 {
        return Err(Error::Config(
            "couple needs at least two [[members]] tables".into(),
        ));
    }
    let lo = cfg.members.iter().map(|m| m.process.l).min().unwrap() - 1;
    let hi = cfg.members.iter().map(|m| m.process.r).max().unwrap() + 1;
    let window = SiteWindow::new(lo, hi);

    for k in 0..cfg.run.replicas {
        let seed = rng::replica_seed(cfg.run.seed, k);
        let mut members = Vec::new();
        for mc in &cfg.members {
            let spec = mc.process.build(&rate)?;
            let sampler = mc.init.site_sampler(&rate, seed)?;
            let omega: Vec<i64> = window
                .sites()
                .map(|s| {
                    if s >= mc.process.l && s <= mc.process.r {
                        sampler(s)
                    } else {
                        0
                    }
                })
                .collect();
            members.push(Member::new(
                mc.label.clone(),
                spec,
                LatticeState::from_omega_origin(window, omega),
            )?);
        }
        let run = coupling::CoupledRun::new(members, (0, 1))?;
        let mut clocks = PoissonPlaneSet::with_seed(seed);
        let opts = SimOptions {
            snapshot_grid: cfg.run.snapshots.clone(),
            ..SimOptions::default()
        };
        let out = coupling::run_coupled(run, cfg.run.t, &mut clocks, &opts, None)?;

        for m in &out.run.members {
            let traj = m.trajectory(seed);
            output::write_atomic(
                &out_dir.join(format!("member-{}-{k}.jsonl", m.label)),
                output::trajectory_jsonl(&traj, cfg, k)?.as_bytes(),
            )?;
        }
        // discrepancy history: JSON-lines of sparse nonzeros
        let mut hist = String::new();
        for rec in &out.history {
            hist.push_str(&serde_json::to_string(rec)?);
            hist.push('\n');
        }
        output::write_atomic(
            &out_dir.join(format!("discrepancy-{k}.jsonl")),
            hist.as_bytes(),
        )?;
        // census summary CSV
        let (census, positions) = out.run.census();
        let mut csv = String::from("particles,antiparticles,positions\n");
        csv.push_str(&format!(
            "{},{},\"{:?}\"\n",
            census.particles, census.antiparticles, positions
        ));
        output::write_atomic(&out_dir.join(format!("census-{k}.csv")), csv.as_bytes())?;
    }
    Ok(Outcome::Pass)
}

fn default_phis() -> Vec<CylinderFunction> {
    vec![
        CylinderFunction::IndicatorEq { site: 0, value: 0 },
        CylinderFunction::ClampedValue { site: 0, clamp: 8 },
    ]
}

/// `verify`: run named suites, write one JSON document per suite plus a
/// summary; exit 0 iff everything passed.
pub fn cmd_verify(cfg: &ExperimentConfig, suites: &[String], out_dir: &Path) -> Result<Outcome> {
    let rate = cfg.rate.build()?;
    let v = &cfg.verify;
    let names: Vec<String> = if suites.is_empty() {
        v.suites.clone()
    } else {
        suites.to_vec()
    };
    if names.is_empty() {
        return Err(Error::Config(
            "no suites requested: pass --suite or set [verify] suites".into(),
        ));
    }
    let pc = cfg.process.clone().unwrap_or(crate::config::ProcessConfig {
        kind: "boundary-driven".into(),
        l: -3,
        r: 3,
        theta: 0.0,
        virtual_scale: None,
    });
    let volume = (pc.l, pc.r);
    let theta = pc.theta;
    let seed = cfg.run.seed;
    let phis = v.phis.clone().unwrap_or_else(default_phis);

    let mut results: Vec<CheckResult> = Vec::new();
    for name in &names {
        let res = match name.as_str() {
            "stationarity" => verify::stationarity_test(
                &rate,
                theta,
                volume,
                v.t.unwrap_or(5.0),
                v.replicas.unwrap_or(10_000),
                &phis,
                pc.virtual_scale.unwrap_or(1.0),
                seed,
            )?,
            "growth-bound" => {
                let profile = cfg.init.good_measure(&rate)?;
                verify::growth_bound_check(
                    &rate,
                    &profile,
                    volume,
                    &v.t_grid.clone().unwrap_or_else(|| vec![0.5, 1.0, 2.0]),
                    v.replicas.unwrap_or(10_000),
                    seed,
                )?
            }
            "block-growth-decay" => verify::block_growth_decay(
                &rate,
                theta,
                v.t.unwrap_or(0.05),
                &v.i_values
                    .clone()
                    .unwrap_or_else(|| (-8..=-2).rev().map(|i| i).collect()),
                v.replicas.unwrap_or(1_000_000),
                seed,
            )?,
            "forward-equation" => verify::forward_equation_check(
                &rate,
                &phis,
                &v.t_grid
                    .clone()
                    .unwrap_or_else(|| vec![0.05, 0.1, 0.15, 0.2]),
                v.volume_halfwidth.unwrap_or(8),
                v.replicas.unwrap_or(40_000),
                seed,
            )?,
            "ergodic-average" => {
                let marginal = build_marginal(&rate, theta, 1e-12)?;
                let phi = phis
                    .first()
                    .cloned()
                    .unwrap_or(CylinderFunction::IndicatorEq { site: 0, value: 0 });
                let target = expectation_of(&marginal, &phi);
                verify::ergodic_average_check(
                    &rate,
                    theta,
                    volume,
                    v.t.unwrap_or(2000.0),
                    &phi,
                    target,
                    v.batches.unwrap_or(40),
                    seed,
                )?
            }
            "ctmc-oracle" => verify::ctmc_oracle_check(
                &rate,
                theta,
                v.oracle_m.unwrap_or(3),
                v.t.unwrap_or(0.5),
                v.replicas.unwrap_or(100_000),
                seed,
            )?,
            "generator-stationarity" => {
                let marginal = build_marginal(&rate, theta, 1e-14)?;
                let mut metrics = Vec::new();
                for phi in &phis {
                    let r = verify::generator::generator_mean_zero(
                        &rate,
                        &marginal,
                        volume,
                        phi,
                        v.oracle_m.unwrap_or(12),
                    )?;
                    metrics.push(verify::Metric::below(
                        format!("|residual| {}", phi.name()),
                        r.abs(),
                        1e-8,
                    ));
                }
                let verdict = if metrics.iter().all(|m| m.pass) {
                    verify::Verdict::Pass
                } else {
                    verify::Verdict::Fail
                };
                CheckResult {
                    suite: "generator-stationarity".into(),
                    verdict,
                    metrics,
                    replicas: 0,
                    seed,
                    runtime_secs: 0.0,
                    notes: vec![format!("theta={theta}, volume={volume:?}")],
                }
            }
            "slope-bound" => {
                let sampler = cfg.init.site_sampler(&rate, seed)?;
                let i_max = v.volume_halfwidth.unwrap_or(6);
                let wl = window_limit(
                    &rate,
                    &sampler,
                    (-i_max - 1, i_max + 1),
                    v.t.unwrap_or(5.0),
                    seed,
                    GrowthSchedule::default(),
                    crate::clocks::ClockConfig::default(),
                )?;
                // re-run the stabilized volume in full for the slope series
                let half = wl.stabilization_radius * 2;
                let window = SiteWindow::new(-half, half);
                let omega: Vec<i64> = window.sites().map(&sampler).collect();
                let spec =
                    crate::dynamics::ProcessSpec::monotone(std::sync::Arc::clone(&rate), -half, half)?;
                let mut clocks = PoissonPlaneSet::with_seed(seed);
                let traj = simulate(
                    &spec,
                    LatticeState::from_omega_origin(window, omega),
                    v.t.unwrap_or(5.0),
                    &mut clocks,
                    &SimOptions::default(),
                )?;
                let horizon = v.t.unwrap_or(5.0);
                let grid: Vec<f64> = (0..=50).map(|k| horizon * k as f64 / 50.0).collect();
                let i_grid: Vec<i64> = (1..=i_max).collect();
                verify::slope_bound_check(&traj, &i_grid, &grid, seed)?
            }
            other => return Err(Error::UnknownSuite(other.into())),
        };
        println!("{}", res.summary());
        results.push(res);
    }

    let all = serde_json::to_string_pretty(&results)?;
    output::write_atomic(&out_dir.join("verify.json"), all.as_bytes())?;
    for res in &results {
        output::write_atomic(
            &out_dir.join(format!("{}.json", res.suite)),
            serde_json::to_string_pretty(res)?.as_bytes(),
        )?;
    }
    let ok = results.iter().all(|r| r.passed());
    Ok(if ok { Outcome::Pass } else { Outcome::CheckFail })
}

fn expectation_of(marginal: &crate::equilibrium::Marginal, phi: &CylinderFunction) -> f64 {
    // phi is a single-site function of site s under the product measure
    let (lo, hi) = phi.support();
    assert_eq!(lo, hi, "ergodic target needs a single-site phi");
    let window = SiteWindow::new(lo - 1, hi + 1);
    marginal
        .support()
        .map(|z| {
            let mut omega = vec![0i64; window.len()];
            omega[(lo - window.lo) as usize] = z;
            let st = LatticeState::from_omega_origin(window, omega);
            marginal.pmf(z) * phi.eval(&st)
        })
        .sum()
}
