//! Event-driven dynamics: the [l,r]-monotone process, the boundary-driven
//! (l,r,theta)-process, and the infinite-volume process approximated by a
//! stabilized window limit.
//!
//! The engine is the graphical construction run literally: between jumps
//! every active (column, direction) pair holds a constant rate level; the
//! next jump is the earliest plane point below its pair's level; applying
//! a jump at column i moves one brick (omega_i -= 1, omega_{i+1} += 1,
//! h_i += 1) and only the neighboring pairs re-read their planes, from the
//! jump time, at the new level. Re-reading the same plane rather than
//! drawing fresh randomness is what makes couplings work.

use crate::clocks::{Direction, PoissonPlaneSet};
use crate::error::{Error, Result};
use crate::rates::{RateFunction, Regime};
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::Arc;

/// Inclusive site interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteWindow {
    pub lo: i64,
    pub hi: i64,
}

impl SiteWindow {
    pub fn new(lo: i64, hi: i64) -> Self {
        assert!(lo < hi, "window needs at least two sites");
        SiteWindow { lo, hi }
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, site: i64) -> bool {
        site >= self.lo && site <= self.hi
    }

    pub fn sites(&self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi
    }
}

/// Increment configuration over a finite window plus the height field.
/// Heights live on columns lo..hi-1 (column i sits between sites i and
/// i+1) and are anchored so that h at the anchor column starts at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeState {
    pub window: SiteWindow,
    pub omega: Vec<i64>,
    pub heights: Vec<i64>,
    pub time: f64,
}

impl LatticeState {
    /// Flat wall: omega = 0, heights = 0.
    pub fn flat(window: SiteWindow) -> Self {
        LatticeState {
            omega: vec![0; window.len()],
            heights: vec![0; window.len() - 1],
            window,
            time: 0.0,
        }
    }

    /// Build from increments with height anchor h_anchor at column
    /// `anchor` (the column between sites anchor and anchor+1).
    pub fn from_omega(window: SiteWindow, omega: Vec<i64>, anchor: i64, h_anchor: i64) -> Self {
        assert_eq!(omega.len(), window.len());
        let heights = heights_from_increments(window, &omega, anchor, h_anchor);
        LatticeState {
            window,
            omega,
            heights,
            time: 0.0,
        }
    }

    /// Build from increments anchored at column 0 with h_0 = 0.
    pub fn from_omega_origin(window: SiteWindow, omega: Vec<i64>) -> Self {
        Self::from_omega(window, omega, 0, 0)
    }

    #[inline]
    pub fn omega_at(&self, site: i64) -> i64 {
        self.omega[(site - self.window.lo) as usize]
    }

    #[inline]
    pub fn height_at(&self, column: i64) -> i64 {
        self.heights[(column - self.window.lo) as usize]
    }

    pub fn columns(&self) -> impl Iterator<Item = i64> {
        self.window.lo..self.window.hi
    }

    fn apply_jump(&mut self, column: i64) {
        let k = (column - self.window.lo) as usize;
        self.omega[k] -= 1;
        self.omega[k + 1] += 1;
        self.heights[k] = self.heights[k]
            .checked_add(1)
            .expect("height overflowed i64");
    }

    /// Re-derive omega from heights on the interior and compare; the
    /// relation omega_i = h_{i-1} - h_i holds at all times.
    pub fn heights_consistent(&self) -> bool {
        for site in (self.window.lo + 1)..self.window.hi {
            let k = (site - self.window.lo) as usize;
            if self.omega[k] != self.heights[k - 1] - self.heights[k] {
                return false;
            }
        }
        true
    }
}

/// heights from increments: walking right from the anchor column,
/// h_i = h_{i-1} - omega_i; anchored at `anchor` with value `h_anchor`.
pub fn heights_from_increments(
    window: SiteWindow,
    omega: &[i64],
    anchor: i64,
    h_anchor: i64,
) -> Vec<i64> {
    let ncols = window.len() - 1;
    assert!(
        anchor >= window.lo && anchor < window.hi,
        "anchor column {anchor} outside window"
    );
    let mut heights = vec![0i64; ncols];
    let a = (anchor - window.lo) as usize;
    heights[a] = h_anchor;
    for k in (a + 1)..ncols {
        // column k sits right of column k-1; omega at site (lo + k)
        heights[k] = heights[k - 1] - omega[k];
    }
    for k in (0..a).rev() {
        heights[k] = heights[k + 1] + omega[k + 1];
    }
    heights
}

/// increments from heights on the interior sites; boundary sites cannot be
/// recovered and are taken from `edge` (usually the stored state).
pub fn increments_from_heights(window: SiteWindow, heights: &[i64], edge: (i64, i64)) -> Vec<i64> {
    let mut omega = vec![0i64; window.len()];
    omega[0] = edge.0;
    let n = window.len();
    omega[n - 1] = edge.1;
    for k in 1..(n - 1) {
        omega[k] = heights[k - 1] - heights[k];
    }
    omega
}

/// Process kinds. `Monotone` freezes all columns outside [l, r-1]
/// (equivalently: columns of [l, r] in the interval sense, growth only
/// between them). `BoundaryDriven` adds the two virtual bricklayers with
/// mean equilibrium rates e^theta and e^{-theta}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProcessKind {
    Monotone {
        l: i64,
        r: i64,
    },
    BoundaryDriven {
        l: i64,
        r: i64,
        theta: f64,
        /// Multiplies the left virtual rate e^theta. 1.0 is the process of
        /// the construction; anything else is a deliberate perturbation
        /// (negative controls in the verification suites).
        #[serde(default = "one")]
        virtual_scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub kind: ProcessKind,
    #[serde(skip, default = "default_rate")]
    pub rate: Arc<RateFunction>,
}

fn default_rate() -> Arc<RateFunction> {
    Arc::new(RateFunction::exponential_bricklayers(1.0))
}

impl ProcessSpec {
    pub fn monotone(rate: Arc<RateFunction>, l: i64, r: i64) -> Result<Self> {
        if l >= r {
            return Err(Error::InvalidVolume {
                l,
                r,
                reason: "monotone volume needs l < r".into(),
            });
        }
        Ok(ProcessSpec {
            kind: ProcessKind::Monotone { l, r },
            rate,
        })
    }

    /// Boundary-driven volume; l == r is the single-site birth-death chain
    /// used by the exact-oracle checks.
    pub fn boundary_driven(rate: Arc<RateFunction>, l: i64, r: i64, theta: f64) -> Result<Self> {
        Self::boundary_driven_scaled(rate, l, r, theta, 1.0)
    }

    pub fn boundary_driven_scaled(
        rate: Arc<RateFunction>,
        l: i64,
        r: i64,
        theta: f64,
        virtual_scale: f64,
    ) -> Result<Self> {
        if l > r {
            return Err(Error::InvalidVolume {
                l,
                r,
                reason: "boundary-driven volume needs l <= r".into(),
            });
        }
        Ok(ProcessSpec {
            kind: ProcessKind::BoundaryDriven {
                l,
                r,
                theta,
                virtual_scale,
            },
            rate,
        })
    }

    /// Columns that can grow: [l, r-1] for monotone, [l-1, r] for
    /// boundary-driven.
    pub fn active_columns(&self) -> (i64, i64) {
        match self.kind {
            ProcessKind::Monotone { l, r } => (l, r - 1),
            ProcessKind::BoundaryDriven { l, r, .. } => (l - 1, r),
        }
    }

    /// Sites the state window must cover.
    pub fn required_sites(&self) -> SiteWindow {
        let (clo, chi) = self.active_columns();
        SiteWindow::new(clo, chi + 1)
    }

    /// The (right-lay, left-lay) rate pair for a column; (0, 0) off the
    /// active range. In the zero-range regime every r(-.) term and the
    /// right virtual rate e^{-theta} vanish.
    pub fn rate_field(&self, state: &LatticeState, column: i64) -> (f64, f64) {
        let (clo, chi) = self.active_columns();
        if column < clo || column > chi {
            return (0.0, 0.0);
        }
        let rate = &self.rate;
        match self.kind {
            ProcessKind::Monotone { .. } => (
                rate.eval(state.omega_at(column)),
                rate.eval(-state.omega_at(column + 1)),
            ),
            ProcessKind::BoundaryDriven {
                l,
                r,
                theta,
                virtual_scale,
            } => {
                let right = if column == l - 1 {
                    virtual_scale * theta.exp()
                } else {
                    rate.eval(state.omega_at(column))
                };
                let left = if column == r {
                    if rate.regime == Regime::ZeroRange {
                        0.0
                    } else {
                        (-theta).exp()
                    }
                } else {
                    rate.eval(-state.omega_at(column + 1))
                };
                (right, left)
            }
        }
    }

    fn rate_at(&self, state: &LatticeState, column: i64, dir: Direction) -> f64 {
        let (r, l) = self.rate_field(state, column);
        match dir {
            Direction::RightLay => r,
            Direction::LeftLay => l,
        }
    }
}

/// One jump of one process: column `column` grew at time `t` from a point
/// of plane (column, dir).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub column: i64,
    pub dir: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub omega: Vec<i64>,
    pub heights: Vec<i64>,
}

/// A simulated path: initial state, ordered events, snapshots on a grid.
/// Replaying the events from the initial state reproduces every snapshot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub seed: u64,
    pub initial: LatticeState,
    pub final_state: LatticeState,
    pub events: Vec<Event>,
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    /// Events restricted to columns [lo, hi] (both inclusive).
    pub fn restrict_columns(&self, lo: i64, hi: i64) -> Vec<Event> {
        self.events
            .iter()
            .copied()
            .filter(|e| e.column >= lo && e.column <= hi)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub snapshot_grid: Vec<f64>,
    pub event_cap: u64,
    /// Record per-member event lists (the coupled verification sweeps with
    /// millions of replicas turn this off and read final states only).
    pub record_events: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            snapshot_grid: Vec::new(),
            event_cap: 50_000_000,
            record_events: true,
        }
    }
}

/// One member of a (possibly coupled) run.
#[derive(Debug, Clone)]
pub struct Member {
    pub label: String,
    pub spec: ProcessSpec,
    pub state: LatticeState,
    pub events: Vec<Event>,
    pub snapshots: Vec<Snapshot>,
    initial: LatticeState,
}

impl Member {
    pub fn new(label: impl Into<String>, spec: ProcessSpec, state: LatticeState) -> Result<Self> {
        let need = spec.required_sites();
        if state.window.lo > need.lo || state.window.hi < need.hi {
            return Err(Error::WindowTooSmall {
                have_lo: state.window.lo,
                have_hi: state.window.hi,
                need_lo: need.lo,
                need_hi: need.hi,
            });
        }
        if spec.rate.regime == Regime::ZeroRange {
            let (l, r) = match spec.kind {
                ProcessKind::Monotone { l, r } => (l, r),
                ProcessKind::BoundaryDriven { l, r, .. } => (l, r),
            };
            for site in l..=r {
                if state.omega_at(site) < 0 {
                    return Err(Error::RegimeMismatch(format!(
                        "zero-range occupancy must be nonnegative, got {} at site {site}",
                        state.omega_at(site)
                    )));
                }
            }
        }
        Ok(Member {
            label: label.into(),
            spec,
            initial: state.clone(),
            state,
            events: Vec::new(),
            snapshots: Vec::new(),
        })
    }

    pub fn initial(&self) -> &LatticeState {
        &self.initial
    }

    pub fn into_trajectory(self, seed: u64) -> Trajectory {
        Trajectory {
            seed,
            initial: self.initial,
            final_state: self.state,
            events: self.events,
            snapshots: self.snapshots,
        }
    }

    /// Trajectory view without consuming the member.
    pub fn trajectory(&self, seed: u64) -> Trajectory {
        Trajectory {
            seed,
            initial: self.initial.clone(),
            final_state: self.state.clone(),
            events: self.events.clone(),
            snapshots: self.snapshots.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    t: f64,
    column: i64,
    dir: Direction,
    version: u64,
    y: f64,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // ties in float time break to lower column, RightLay first;
        // deterministic and measure-zero
        self.t
            .total_cmp(&other.t)
            .then(self.column.cmp(&other.column))
            .then(self.dir.cmp(&other.dir))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Observer invoked after every applied event, with the member list and the
/// indices of the members that jumped. Pathwise invariant checks hook here.
pub type EventObserver<'o> = dyn FnMut(&[Member], Event, &[usize]) + 'o;

/// Core merged event loop over one shared plane set.
///
/// Every plane point (t, y) at (column, dir) triggers a jump in exactly the
/// members whose current rate at that pair strictly exceeds y; with two
/// members and rates a <= b this realizes the coupled rates min(a,b) (both
/// jump) and b - a (only the larger) of the basic-coupling tables.
pub fn run_members(
    members: &mut [Member],
    horizon: f64,
    clocks: &mut PoissonPlaneSet,
    opts: &SimOptions,
    mut observer: Option<&mut EventObserver<'_>>,
) -> Result<()> {
    assert!(!members.is_empty());
    let col_lo = members
        .iter()
        .map(|m| m.spec.active_columns().0)
        .min()
        .unwrap();
    let col_hi = members
        .iter()
        .map(|m| m.spec.active_columns().1)
        .max()
        .unwrap();
    let t0 = members.iter().map(|m| m.state.time).fold(0.0, f64::max);

    let ncols = (col_hi - col_lo + 1) as usize;
    let pair_index = |column: i64, dir: Direction| -> usize {
        2 * (column - col_lo) as usize + (dir == Direction::LeftLay) as usize
    };
    let mut versions = vec![0u64; 2 * ncols];
    let mut heap: BinaryHeap<Reverse<Candidate>> = BinaryHeap::new();

    let level_of = |members: &[Member], column: i64, dir: Direction| -> f64 {
        members
            .iter()
            .map(|m| m.spec.rate_at(&m.state, column, dir))
            .fold(0.0, f64::max)
    };

    let requery = |members: &[Member],
                       heap: &mut BinaryHeap<Reverse<Candidate>>,
                       versions: &mut Vec<u64>,
                       clocks: &mut PoissonPlaneSet,
                       column: i64,
                       dir: Direction,
                       after: f64|
     -> Result<()> {
        let idx = pair_index(column, dir);
        versions[idx] += 1;
        let level = level_of(members, column, dir);
        if level <= 0.0 {
            return Ok(());
        }
        if let Some((t, y)) = clocks.next_point(column, dir, after, level, horizon)? {
            heap.push(Reverse(Candidate {
                t,
                column,
                dir,
                version: versions[idx],
                y,
            }));
        }
        Ok(())
    };

    for column in col_lo..=col_hi {
        for dir in [Direction::RightLay, Direction::LeftLay] {
            requery(members, &mut heap, &mut versions, clocks, column, dir, t0)?;
        }
    }

    let mut grid = opts.snapshot_grid.clone();
    grid.sort_by(f64::total_cmp);
    grid.retain(|&g| g >= t0 && g <= horizon);
    let mut next_grid = 0usize;
    let take_snapshots_until = |members: &mut [Member], t: f64, next_grid: &mut usize| {
        while *next_grid < grid.len() && grid[*next_grid] <= t {
            let g = grid[*next_grid];
            for m in members.iter_mut() {
                m.snapshots.push(Snapshot {
                    t: g,
                    omega: m.state.omega.clone(),
                    heights: m.state.heights.clone(),
                });
            }
            *next_grid += 1;
        }
    };

    let mut n_events = 0u64;
    while let Some(Reverse(cand)) = heap.pop() {
        let idx = pair_index(cand.column, cand.dir);
        if cand.version != versions[idx] {
            continue; // stale candidate
        }
        debug_assert!(cand.t <= horizon);
        take_snapshots_until(members, cand.t, &mut next_grid);

        // fire: strict comparison against each member's current rate
        let mut jumped: Vec<usize> = Vec::with_capacity(members.len());
        for (k, m) in members.iter().enumerate() {
            if m.spec.rate_at(&m.state, cand.column, cand.dir) > cand.y {
                jumped.push(k);
            }
        }
        debug_assert!(
            !jumped.is_empty(),
            "candidate fired below every member's rate"
        );
        let ev = Event {
            t: cand.t,
            column: cand.column,
            dir: cand.dir,
        };
        for &k in &jumped {
            members[k].state.apply_jump(cand.column);
            members[k].state.time = cand.t;
            if opts.record_events {
                members[k].events.push(ev);
            }
        }
        for m in members.iter_mut() {
            m.state.time = cand.t;
        }
        n_events += 1;
        if n_events > opts.event_cap {
            return Err(Error::EventCapExceeded(opts.event_cap));
        }
        if let Some(obs) = observer.as_mut() {
            obs(members, ev, &jumped);
        }

        // a jump at column i touches omega_i and omega_{i+1}; the pairs
        // whose rates read those sites are (i-1,L), (i,R), (i,L), (i+1,R)
        let touched = [
            (cand.column - 1, Direction::LeftLay),
            (cand.column, Direction::RightLay),
            (cand.column, Direction::LeftLay),
            (cand.column + 1, Direction::RightLay),
        ];
        for (c, d) in touched {
            if c >= col_lo && c <= col_hi {
                requery(members, &mut heap, &mut versions, clocks, c, d, cand.t)?;
            }
        }
    }

    take_snapshots_until(members, horizon, &mut next_grid);
    for m in members.iter_mut() {
        m.state.time = horizon;
    }
    Ok(())
}

/// Simulate one process to `horizon` on the clocks' planes.
pub fn simulate(
    spec: &ProcessSpec,
    init: LatticeState,
    horizon: f64,
    clocks: &mut PoissonPlaneSet,
    opts: &SimOptions,
) -> Result<Trajectory> {
    let mut members = vec![Member::new("run", spec.clone(), init)?];
    run_members(&mut members, horizon, clocks, opts, None)?;
    Ok(members.pop().unwrap().into_trajectory(clocks.seed))
}

/// Schedule for the window limit: volumes [-w 2^k, w 2^k], k = 0..=cap.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GrowthSchedule {
    pub base_halfwidth: i64,
    pub max_doublings: u32,
}

impl Default for GrowthSchedule {
    fn default() -> Self {
        GrowthSchedule {
            base_halfwidth: 4,
            max_doublings: 12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WindowLimit {
    /// Trajectory of the last (agreeing) volume, restricted to the target.
    pub events: Vec<Event>,
    pub final_heights: Vec<i64>,
    pub final_omega: Vec<i64>,
    /// Half-width at which two consecutive volumes first agreed exactly.
    pub stabilization_radius: i64,
    pub doublings_used: u32,
}

/// Approximate the infinite-volume process on target columns [a, b] over
/// [0, T]: run monotone volumes of doubling half-width on shared clocks
/// until two consecutive runs agree exactly on the target window. Monotone
/// convergence of the heights makes agreement mean stabilization.
///
/// `init_site` supplies the initial increment at any site, independent of
/// the volume, so every volume starts from the same configuration.
pub fn window_limit(
    rate: &Arc<RateFunction>,
    init_site: &dyn Fn(i64) -> i64,
    target: (i64, i64),
    horizon: f64,
    seed: u64,
    schedule: GrowthSchedule,
    clock_config: crate::clocks::ClockConfig,
) -> Result<WindowLimit> {
    let (a, b) = target;
    assert!(a <= b, "target window must be nonempty");
    let w0 = schedule
        .base_halfwidth
        .max(a.abs() + 1)
        .max(b.abs() + 2)
        .max(2);

    let run_volume = |half: i64| -> Result<Trajectory> {
        let window = SiteWindow::new(-half, half);
        let omega: Vec<i64> = window.sites().map(init_site).collect();
        let init = LatticeState::from_omega_origin(window, omega);
        let spec = ProcessSpec::monotone(Arc::clone(rate), -half, half)?;
        // same seed => same planes: this is the shared-clock coupling
        let mut clocks = PoissonPlaneSet::new(seed, clock_config);
        simulate(&spec, init, horizon, &mut clocks, &SimOptions::default())
    };

    let restrict = |traj: &Trajectory| -> (Vec<Event>, Vec<i64>, Vec<i64>) {
        let events = traj.restrict_columns(a, b);
        let heights: Vec<i64> = (a..=b).map(|c| traj.final_state.height_at(c)).collect();
        let omega: Vec<i64> = (a..=b + 1).map(|s| traj.final_state.omega_at(s)).collect();
        (events, heights, omega)
    };

    let mut prev = restrict(&run_volume(w0)?);
    for k in 1..=schedule.max_doublings {
        let half = w0 << k;
        let cur = restrict(&run_volume(half)?);
        if cur == prev {
            return Ok(WindowLimit {
                events: cur.0,
                final_heights: cur.1,
                final_omega: cur.2,
                stabilization_radius: w0 << (k - 1),
                doublings_used: k,
            });
        }
        prev = cur;
    }
    Err(Error::NotStabilized {
        max_doublings: schedule.max_doublings,
        lo: -(w0 << schedule.max_doublings),
        hi: w0 << schedule.max_doublings,
    })
}
