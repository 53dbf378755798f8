//! Exact generator computations: cylinder functions, L phi, the truncated
//! stationarity sum, and the matrix-exponential oracle for tiny volumes.

use crate::dynamics::{LatticeState, ProcessSpec, SiteWindow};
use crate::equilibrium::Marginal;
use crate::error::{Error, Result};
use crate::rates::{RateFunction, Regime};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Bounded functions of finitely many increments: the test-function class
/// for the generator and semigroup checks. Each variant carries its
/// support interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum CylinderFunction {
    Constant { c: f64 },
    /// 1{omega_site = value}
    IndicatorEq { site: i64, value: i64 },
    /// 1{omega_site <= value}
    IndicatorLe { site: i64, value: i64 },
    /// omega_site clamped to [-clamp, clamp], so the function stays bounded
    ClampedValue { site: i64, clamp: i64 },
    /// product 1{omega_a = va} 1{omega_b = vb}
    PairIndicator { a: i64, va: i64, b: i64, vb: i64 },
}

impl CylinderFunction {
    /// Inclusive support interval [lo, hi]; the value depends only on the
    /// restriction of omega to it.
    pub fn support(&self) -> (i64, i64) {
        match *self {
            CylinderFunction::Constant { .. } => (0, 0),
            CylinderFunction::IndicatorEq { site, .. }
            | CylinderFunction::IndicatorLe { site, .. }
            | CylinderFunction::ClampedValue { site, .. } => (site, site),
            CylinderFunction::PairIndicator { a, b, .. } => (a.min(b), a.max(b)),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match *self {
            CylinderFunction::Constant { c } => c.abs(),
            CylinderFunction::IndicatorEq { .. }
            | CylinderFunction::IndicatorLe { .. }
            | CylinderFunction::PairIndicator { .. } => 1.0,
            CylinderFunction::ClampedValue { clamp, .. } => clamp as f64,
        }
    }

    pub fn eval(&self, state: &LatticeState) -> f64 {
        match *self {
            CylinderFunction::Constant { c } => c,
            CylinderFunction::IndicatorEq { site, value } => {
                (state.omega_at(site) == value) as u8 as f64
            }
            CylinderFunction::IndicatorLe { site, value } => {
                (state.omega_at(site) <= value) as u8 as f64
            }
            CylinderFunction::ClampedValue { site, clamp } => {
                state.omega_at(site).clamp(-clamp, clamp) as f64
            }
            CylinderFunction::PairIndicator { a, va, b, vb } => {
                ((state.omega_at(a) == va) && (state.omega_at(b) == vb)) as u8 as f64
            }
        }
    }

    pub fn name(&self) -> String {
        match *self {
            CylinderFunction::Constant { c } => format!("const({c})"),
            CylinderFunction::IndicatorEq { site, value } => format!("1{{w_{site}={value}}}"),
            CylinderFunction::IndicatorLe { site, value } => format!("1{{w_{site}<={value}}}"),
            CylinderFunction::ClampedValue { site, clamp } => format!("clamp(w_{site},{clamp})"),
            CylinderFunction::PairIndicator { a, va, b, vb } => {
                format!("1{{w_{a}={va},w_{b}={vb}}}")
            }
        }
    }
}

/// (L phi)(omega) as an exact finite sum. For the infinite generator only
/// the columns touching phi's support contribute, so the sum runs over
/// columns [support_lo - 1, support_hi]; for finite-volume kinds the
/// spec's own rate field already vanishes off the active columns.
///
/// The state must cover the touched sites with one site of margin.
pub fn apply_generator(spec: &ProcessSpec, phi: &CylinderFunction, state: &LatticeState) -> f64 {
    let (slo, shi) = phi.support();
    let (alo, ahi) = spec.active_columns();
    let clo = (slo - 1).max(alo);
    let chi = shi.min(ahi);
    let base = phi.eval(state);
    let mut acc = 0.0;
    let mut work = state.clone();
    for col in clo..=chi {
        let (right, left) = spec.rate_field(state, col);
        let rate = right + left;
        if rate == 0.0 {
            continue;
        }
        // omega -> omega^{(col, col+1)}
        let ki = (col - state.window.lo) as usize;
        work.omega[ki] -= 1;
        work.omega[ki + 1] += 1;
        acc += rate * (phi.eval(&work) - base);
        work.omega[ki] += 1;
        work.omega[ki + 1] -= 1;
    }
    acc
}

/// Same sum against the infinite-volume generator of the construction:
/// every column carries rate r(omega_i) + r(-omega_{i+1}) (zero-range:
/// the r(-.) part vanishes on its own).
pub fn apply_infinite_generator(
    rate: &RateFunction,
    phi: &CylinderFunction,
    state: &LatticeState,
) -> f64 {
    let (slo, shi) = phi.support();
    let base = phi.eval(state);
    let mut acc = 0.0;
    let mut work = state.clone();
    for col in (slo - 1)..=shi {
        let r = rate.eval(state.omega_at(col)) + rate.eval(-state.omega_at(col + 1));
        if r == 0.0 {
            continue;
        }
        let ki = (col - state.window.lo) as usize;
        work.omega[ki] -= 1;
        work.omega[ki + 1] += 1;
        acc += r * (phi.eval(&work) - base);
        work.omega[ki] += 1;
        work.omega[ki + 1] -= 1;
    }
    acc
}

const STATE_SPACE_CAP: u128 = 40_000_000;

/// Exact truncated stationarity residual:
/// sum over configurations with |omega_i| <= m of
/// mu^{(l,r,theta)}(omega) (G phi)(omega). The untruncated sum is zero, so
/// the residual is (minus) the dropped tail and shrinks as m grows.
pub fn generator_mean_zero(
    rate: &Arc<RateFunction>,
    marginal: &Marginal,
    volume: (i64, i64),
    phi: &CylinderFunction,
    m: i64,
) -> Result<f64> {
    let (l, r) = volume;
    let (slo, shi) = phi.support();
    if slo < l || shi > r {
        return Err(Error::CylinderOutsideVolume {
            lo: slo,
            hi: shi,
            l,
            r,
        });
    }
    let spec = ProcessSpec::boundary_driven(Arc::clone(rate), l, r, marginal.theta)?;
    let zero_range = rate.regime == Regime::ZeroRange;
    let (z_lo, z_hi) = if zero_range { (0, m) } else { (-m, m) };
    let base = (z_hi - z_lo + 1) as u128;
    let sites = (r - l + 1) as u32;
    let size = base.pow(sites);
    if size > STATE_SPACE_CAP {
        return Err(Error::StateSpaceTooLarge {
            size,
            cap: STATE_SPACE_CAP,
        });
    }

    // state window [l-1, r+1]; the boundary bookkeeping sites stay 0 (no
    // rate and no phi reads them)
    let window = SiteWindow::new(l - 1, r + 1);
    let mut omega = vec![0i64; window.len()];
    let nsites = sites as usize;
    let mut digits = vec![0i64; nsites];

    let mut residual = 0.0;
    let mut comp = 0.0; // Neumaier compensation
    loop {
        for (k, &d) in digits.iter().enumerate() {
            omega[k + 1] = z_lo + d;
        }
        let state = LatticeState {
            window,
            omega: omega.clone(),
            heights: vec![0; window.len() - 1],
            time: 0.0,
        };
        // product weight
        let mut logw = 0.0;
        for site in l..=r {
            logw += marginal.log_weight(state.omega_at(site)) - marginal.log_z;
        }
        let term = logw.exp() * apply_generator(&spec, phi, &state);
        // compensated summation: the residual lives many orders below the
        // individual terms
        let t = residual + term;
        if residual.abs() >= term.abs() {
            comp += (residual - t) + term;
        } else {
            comp += (term - t) + residual;
        }
        residual = t;

        // odometer
        let mut k = 0;
        loop {
            if k == nsites {
                return Ok(residual + comp);
            }
            digits[k] += 1;
            if digits[k] < base as i64 {
                break;
            }
            digits[k] = 0;
            k += 1;
        }
    }
}

/// Exact transient distribution of the single-site boundary-driven chain
/// (volume (0,0)) truncated to |z| <= m with reflecting truncation,
/// computed by uniformization. Returns the pmf over z = -m..=m at time t
/// starting from z = start.
///
/// The single-site chain moves z -> z+1 at rate e^theta + r(-z) (column
/// -1 grows) and z -> z-1 at rate e^{-theta} + r(z) (column 0 grows);
/// zero-range drops the r(-z) and e^{-theta} parts.
pub fn single_site_transient(
    rate: &RateFunction,
    theta: f64,
    m: i64,
    start: i64,
    t: f64,
) -> Vec<f64> {
    let n = (2 * m + 1) as usize;
    let zero_range = rate.regime == Regime::ZeroRange;
    let idx = |z: i64| (z + m) as usize;
    let up = |z: i64| -> f64 {
        if z >= m {
            return 0.0; // reflecting truncation
        }
        if zero_range {
            theta.exp()
        } else {
            theta.exp() + rate.eval(-z)
        }
    };
    let down = |z: i64| -> f64 {
        if z <= -m {
            return 0.0;
        }
        if zero_range {
            rate.eval(z)
        } else {
            (-theta).exp() + rate.eval(z)
        }
    };

    let mut lam = 0.0f64;
    for z in -m..=m {
        lam = lam.max(up(z) + down(z));
    }
    lam *= 1.05;

    // p(t) = e^{-lam t} sum_k (lam t)^k / k! P^k p0, P = I + Q/lam
    let mut p = vec![0.0f64; n];
    p[idx(start)] = 1.0;
    let mut result = vec![0.0f64; n];
    let x = lam * t;
    let mut log_poisson = -x; // ln of e^{-x} x^k / k! at k = 0
    let mut k = 0u64;
    loop {
        let w = log_poisson.exp();
        for i in 0..n {
            result[i] += w * p[i];
        }
        // advance p <- P p
        let mut next = vec![0.0f64; n];
        for z in -m..=m {
            let i = idx(z);
            let u = up(z);
            let d = down(z);
            let stay = 1.0 - (u + d) / lam;
            next[i] += stay * p[i];
            if z < m {
                next[idx(z + 1)] += (u / lam) * p[i];
            }
            if z > -m {
                next[idx(z - 1)] += (d / lam) * p[i];
            }
        }
        p = next;
        k += 1;
        log_poisson += x.ln() - (k as f64).ln();
        // stop once the remaining Poisson tail is negligible
        if k as f64 > x + 12.0 * x.sqrt().max(3.0) && log_poisson < -40.0 {
            break;
        }
        if k > 100_000 {
            break;
        }
    }
    result
}

/// Total variation distance between two pmfs on the same support.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
}
