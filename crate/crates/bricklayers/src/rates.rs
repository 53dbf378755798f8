//! Jump-rate functions and their validation.
//!
//! A rate function `r: Z -> R+` drives both regimes. In the bricklayers
//! regime the column between sites `i` and `i+1` grows at rate
//! `r(omega_i) + r(-omega_{i+1})` and the rates must satisfy the symmetry
//! `r(z) * r(1-z) = 1`. In the zero-range regime `r(z) = 0` for `z <= 0`
//! and only the `r(omega_i)` part is present.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Bricklayers,
    ZeroRange,
}

/// How a table-defined family behaves outside its declared support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Extrapolation {
    /// Evaluation outside the table is an error.
    Reject,
    /// Continue geometrically: r(z_max + k) = r(z_max) * ratio^k.
    Geometric { ratio: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Family {
    /// r(z) = e^{beta (z - 1/2)} on all of Z. The minimal family satisfying
    /// all four conditions: the symmetry r(z) r(1-z) = 1 holds identically
    /// and the single-site equilibrium becomes a discrete Gaussian.
    ExponentialBricklayers { beta: f64 },
    /// Values on a contiguous integer support, with an extrapolation rule.
    /// In the bricklayers regime, values at z below the support are derived
    /// from the symmetry r(z) = 1 / r(1-z) where possible.
    TableDefined {
        z_lo: i64,
        values: Vec<f64>,
        extrapolation: Extrapolation,
    },
    /// Zero-range with exponential growth: r(z) = e^{beta (z - 1/2)} for
    /// z >= 1, zero otherwise. Unbounded, so every theta is admissible.
    ZeroRangeExponential { beta: f64 },
    /// Zero-range r(z) = min(z, cap) for z >= 1. Bounded: sup r = cap, so
    /// equilibrium requires e^theta < cap.
    ZeroRangeLinearCapped { cap: f64 },
}

/// A jump-rate map plus regime metadata. Immutable after validation; share
/// freely across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFunction {
    pub regime: Regime,
    pub family: Family,
    /// The beta of the exponential bound r(z) < e^{beta z} for z > 0.
    pub beta_bound: f64,
}

impl RateFunction {
    pub fn exponential_bricklayers(beta: f64) -> Self {
        assert!(beta > 0.0, "beta must be positive");
        RateFunction {
            regime: Regime::Bricklayers,
            family: Family::ExponentialBricklayers { beta },
            beta_bound: beta,
        }
    }

    pub fn zero_range_exponential(beta: f64) -> Self {
        assert!(beta > 0.0, "beta must be positive");
        RateFunction {
            regime: Regime::ZeroRange,
            family: Family::ZeroRangeExponential { beta },
            beta_bound: beta,
        }
    }

    pub fn zero_range_linear_capped(cap: f64) -> Self {
        assert!(cap > 0.0, "cap must be positive");
        // min(z, cap) < e^{beta z} for all z > 0 once beta >= ln(cap) + 1.
        let beta_bound = (cap.ln() + 1.0).max(1.0);
        RateFunction {
            regime: Regime::ZeroRange,
            family: Family::ZeroRangeLinearCapped { cap },
            beta_bound,
        }
    }

    pub fn table(
        regime: Regime,
        z_lo: i64,
        values: Vec<f64>,
        extrapolation: Extrapolation,
        beta_bound: f64,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::TableEmpty);
        }
        Ok(RateFunction {
            regime,
            family: Family::TableDefined {
                z_lo,
                values,
                extrapolation,
            },
            beta_bound,
        })
    }

    /// Parse a two-column `z r(z)` text table (comments start with '#').
    /// Gaps in the support are rejected with the offending index.
    pub fn table_from_text(
        regime: Regime,
        text: &str,
        extrapolation: Extrapolation,
        beta_bound: f64,
    ) -> Result<Self> {
        let mut rows: Vec<(i64, f64)> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let z: i64 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidRate(format!("bad table line: {line:?}")))?;
            let r: f64 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidRate(format!("bad table line: {line:?}")))?;
            rows.push((z, r));
        }
        rows.sort_by_key(|&(z, _)| z);
        if rows.is_empty() {
            return Err(Error::TableEmpty);
        }
        let z_lo = rows[0].0;
        for (k, &(z, _)) in rows.iter().enumerate() {
            let expect = z_lo + k as i64;
            if z != expect {
                return Err(Error::TableGap(expect));
            }
        }
        let values = rows.into_iter().map(|(_, r)| r).collect();
        RateFunction::table(regime, z_lo, values, extrapolation, beta_bound)
    }

    /// Evaluate r(z). Total on Z: zero-range families return 0 for z <= 0,
    /// bricklayers negative arguments go through r(z) = 1 / r(1-z).
    pub fn eval(&self, z: i64) -> f64 {
        match (&self.family, self.regime) {
            (Family::ExponentialBricklayers { beta }, _) => (beta * (z as f64 - 0.5)).exp(),
            (Family::ZeroRangeExponential { beta }, _) => {
                if z >= 1 {
                    (beta * (z as f64 - 0.5)).exp()
                } else {
                    0.0
                }
            }
            (Family::ZeroRangeLinearCapped { cap }, _) => {
                if z >= 1 {
                    (z as f64).min(*cap)
                } else {
                    0.0
                }
            }
            (Family::TableDefined { .. }, Regime::ZeroRange) if z <= 0 => 0.0,
            (
                Family::TableDefined {
                    z_lo,
                    values,
                    extrapolation,
                },
                regime,
            ) => {
                let z_hi = z_lo + values.len() as i64 - 1;
                if z >= *z_lo && z <= z_hi {
                    return values[(z - z_lo) as usize];
                }
                if regime == Regime::Bricklayers {
                    // derive from the symmetry when the mirror point is tabled
                    let m = 1 - z;
                    if m >= *z_lo && m <= z_hi {
                        return 1.0 / values[(m - z_lo) as usize];
                    }
                }
                match extrapolation {
                    Extrapolation::Geometric { ratio } => {
                        if z > z_hi {
                            values[values.len() - 1] * ratio.powi((z - z_hi) as i32)
                        } else if regime == Regime::Bricklayers {
                            // mirror of the geometric tail
                            let m = 1 - z;
                            1.0 / (values[values.len() - 1] * ratio.powi((m - z_hi) as i32))
                        } else {
                            0.0
                        }
                    }
                    Extrapolation::Reject => {
                        panic!("rate evaluation outside table support at z = {z}; validate first")
                    }
                }
            }
        }
    }

    /// ln r(z), finite only where r(z) > 0. Exact for the exponential
    /// families even where e^{beta(z-1/2)} would overflow.
    pub fn ln_eval(&self, z: i64) -> f64 {
        match &self.family {
            Family::ExponentialBricklayers { beta } => beta * (z as f64 - 0.5),
            Family::ZeroRangeExponential { beta } => {
                if z >= 1 {
                    beta * (z as f64 - 0.5)
                } else {
                    f64::NEG_INFINITY
                }
            }
            _ => self.eval(z).ln(),
        }
    }

    /// ln r(n)! = sum_{y=1}^{n} ln r(y), with r(0)! = 1.
    ///
    /// Log scale is mandatory: r(n)! grows like e^{beta n^2 / 2} and
    /// overflows f64 around n = 40 for beta = 1.
    pub fn ln_rate_factorial(&self, n: u64) -> Result<f64> {
        let mut acc = 0.0;
        for y in 1..=n as i64 {
            let r = self.ln_eval(y);
            if r == f64::NEG_INFINITY {
                return Err(Error::ZeroRateFactorial(y));
            }
            acc += r;
        }
        Ok(acc)
    }

    /// sup of r over its effective domain, when the family is bounded.
    /// `None` means the rates diverge and every theta is admissible.
    pub fn bounded_sup(&self) -> Option<f64> {
        match &self.family {
            Family::ExponentialBricklayers { .. } | Family::ZeroRangeExponential { .. } => None,
            Family::ZeroRangeLinearCapped { cap } => Some(*cap),
            // divergence beyond a table is unknowable from the data alone
            Family::TableDefined { .. } => None,
        }
    }

    pub fn is_zero_range(&self) -> bool {
        self.regime == Regime::ZeroRange
    }
}

/// Outcome of checking one of the rate conditions on a declared range.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub name: String,
    pub mandatory: bool,
    pub passed: bool,
    pub first_violation: Option<i64>,
    pub note: String,
}

/// Validation report over a declared z-range. The conditions hold on all of
/// Z mathematically; the range is the machine-checked contract.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub z_lo: i64,
    pub z_hi: i64,
    pub checks: Vec<ConditionCheck>,
    /// Strictly increasing rates are needed only for the ergodicity
    /// arguments; nondecreasing-but-not-strict families are usable but
    /// flagged here.
    pub strictly_increasing: bool,
    /// sup r observed/known for bounded families; equilibrium must have
    /// e^theta below this.
    pub bounded_sup: Option<f64>,
    pub usable: bool,
}

pub const DEFAULT_VALIDATION_RANGE: (i64, i64) = (-50, 50);
const SYMMETRY_RTOL: f64 = 1e-12;

/// Check the four conditions on `[z_lo, z_hi]`.
///
/// Monotonicity and the exponential bound are checked on the regime's
/// effective domain (all of Z for bricklayers, z >= 0 for zero range).
pub fn validate_rate_function(
    rate: &RateFunction,
    z_range: (i64, i64),
) -> Result<ValidationReport> {
    let (z_lo, z_hi) = z_range;
    if z_lo > z_hi {
        return Err(Error::InvalidRate(format!(
            "empty validation range [{z_lo}, {z_hi}]"
        )));
    }
    // Table evaluation under Reject must stay inside support; surface that
    // as a validation failure rather than a panic.
    if let Family::TableDefined {
        z_lo: t_lo,
        values,
        extrapolation: Extrapolation::Reject,
    } = &rate.family
    {
        let t_hi = t_lo + values.len() as i64 - 1;
        let (need_lo, need_hi) = match rate.regime {
            Regime::Bricklayers => {
                // the symmetry supplies z when 1-z is tabled
                let lo_cover = (1 - t_hi).min(*t_lo);
                let hi_cover = (1 - t_lo).max(t_hi);
                (lo_cover, hi_cover)
            }
            Regime::ZeroRange => (i64::MIN, t_hi),
        };
        if z_lo < need_lo || z_hi > need_hi {
            return Err(Error::TableOutOfSupport {
                z: if z_lo < need_lo { z_lo } else { z_hi },
            });
        }
    }

    let effective_lo = match rate.regime {
        Regime::Bricklayers => z_lo,
        Regime::ZeroRange => z_lo.max(0),
    };

    let mut checks = Vec::new();

    // (1) monotone: r(z+1) >= r(z); strict needed for ergodicity only.
    let mut nondecreasing = true;
    let mut strict = true;
    let mut first_mono = None;
    for z in effective_lo..z_hi {
        let a = rate.eval(z);
        let b = rate.eval(z + 1);
        if b < a {
            nondecreasing = false;
            first_mono.get_or_insert(z);
        } else if b == a {
            strict = false;
        }
    }
    checks.push(ConditionCheck {
        name: "monotone".into(),
        mandatory: true,
        passed: nondecreasing,
        first_violation: first_mono,
        note: if strict {
            "strictly increasing".into()
        } else {
            "nondecreasing but not strict: ergodicity checks unavailable".into()
        },
    });

    // (2) regime symmetry: r(z) r(1-z) = 1 (bricklayers) / r(z) = 0 for
    //     z <= 0 (zero range). Checked in log space away from z ~ 0 so the
    //     product of a huge and a tiny rate does not lose precision.
    match rate.regime {
        Regime::Bricklayers => {
            let mut passed = true;
            let mut first = None;
            for z in z_lo..=z_hi {
                if 1 - z < z_lo || 1 - z > z_hi {
                    continue;
                }
                let resid = (rate.ln_eval(z) + rate.ln_eval(1 - z)).abs();
                // |ln(r(z) r(1-z))| ~ relative error of the product near 1
                if resid > SYMMETRY_RTOL {
                    passed = false;
                    first.get_or_insert(z);
                    break;
                }
            }
            checks.push(ConditionCheck {
                name: "symmetry r(z)r(1-z)=1".into(),
                mandatory: true,
                passed,
                first_violation: first,
                note: String::new(),
            });
        }
        Regime::ZeroRange => {
            let mut passed = true;
            let mut first = None;
            for z in z_lo..=0.min(z_hi) {
                if rate.eval(z) != 0.0 {
                    passed = false;
                    first.get_or_insert(z);
                    break;
                }
            }
            checks.push(ConditionCheck {
                name: "r(z)=0 for z<=0".into(),
                mandatory: true,
                passed,
                first_violation: first,
                note: String::new(),
            });
        }
    }

    // (3) divergence r(z) -> infinity. Not decidable from a finite range;
    //     report what the family guarantees. Bounded families stay usable
    //     but equilibrium must respect e^theta < sup r.
    let bounded_sup = rate.bounded_sup();
    let diverges = bounded_sup.is_none()
        && matches!(
            rate.family,
            Family::ExponentialBricklayers { .. } | Family::ZeroRangeExponential { .. }
        )
        || matches!(
            rate.family,
            Family::TableDefined {
                extrapolation: Extrapolation::Geometric { ratio },
                ..
            } if ratio > 1.0
        );
    let sup_on_range = rate.eval(z_hi);
    checks.push(ConditionCheck {
        name: "divergence".into(),
        mandatory: false,
        passed: diverges || bounded_sup.is_some(),
        first_violation: None,
        note: match bounded_sup {
            Some(s) => format!("bounded: sup r = {s}, requires e^theta < {s}"),
            None if diverges => "diverges by construction".into(),
            None => format!("unknown beyond range; sup r on range = {sup_on_range:.6}"),
        },
    });

    // (4) exponential bound r(z) < e^{beta z} for z > 0, in log space.
    let mut passed = true;
    let mut first = None;
    for z in z_lo.max(1)..=z_hi {
        let lr = rate.ln_eval(z);
        if lr >= rate.beta_bound * z as f64 {
            passed = false;
            first.get_or_insert(z);
            break;
        }
    }
    checks.push(ConditionCheck {
        name: "exponential bound".into(),
        mandatory: true,
        passed,
        first_violation: first,
        note: format!("beta = {}", rate.beta_bound),
    });

    let usable = checks.iter().all(|c| !c.mandatory || c.passed);
    Ok(ValidationReport {
        z_lo,
        z_hi,
        checks,
        strictly_increasing: strict && nondecreasing,
        bounded_sup,
        usable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_bricklayers_passes_all_conditions() {
        let r = RateFunction::exponential_bricklayers(1.0);
        let rep = validate_rate_function(&r, (-20, 20)).unwrap();
        assert!(rep.usable);
        assert!(rep.strictly_increasing);
        assert!(rep.checks.iter().all(|c| c.passed));
    }

    #[test]
    fn eval_closed_forms() {
        let r = RateFunction::exponential_bricklayers(1.0);
        assert!((r.eval(1) - 0.5f64.exp()).abs() < 1e-15);
        // symmetry at z = 3: r(-2) r(3) = 1
        assert!((r.eval(-2) * r.eval(3) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_range_negative_args_are_zero() {
        for r in [
            RateFunction::zero_range_exponential(1.0),
            RateFunction::zero_range_linear_capped(1.0),
        ] {
            assert_eq!(r.eval(-5), 0.0);
            assert_eq!(r.eval(0), 0.0);
        }
    }

    #[test]
    fn table_with_broken_symmetry_fails_at_z1() {
        // e^{z-1/2} everywhere except r(0) = 0, so r(1) r(0) = 0 != 1
        let vals: Vec<f64> = (-2..=2)
            .map(|z| if z == 0 { 0.0 } else { (z as f64 - 0.5).exp() })
            .collect();
        let r = RateFunction::table(
            Regime::Bricklayers,
            -2,
            vals,
            Extrapolation::Geometric { ratio: 2.0 },
            3.0,
        )
        .unwrap();
        let rep = validate_rate_function(&r, (-2, 2)).unwrap();
        let sym = rep
            .checks
            .iter()
            .find(|c| c.name.starts_with("symmetry"))
            .unwrap();
        assert!(!sym.passed);
        // z = 0 and z = 1 name the same broken product r(0) r(1)
        let v = sym.first_violation.unwrap();
        assert!(v == 0 || v == 1);
        assert!(!rep.usable);
    }

    #[test]
    fn linear_capped_flagged_bounded() {
        let r = RateFunction::zero_range_linear_capped(1.0);
        let rep = validate_rate_function(&r, (-5, 20)).unwrap();
        assert!(rep.usable);
        assert!(!rep.strictly_increasing); // min(z,1) plateaus at 1
        assert_eq!(rep.bounded_sup, Some(1.0));
        let div = rep.checks.iter().find(|c| c.name == "divergence").unwrap();
        assert!(div.note.contains("sup r = 1"));
    }

    #[test]
    fn table_gap_rejected_with_offending_index() {
        let txt = "1 0.5\n2 1.0\n4 2.0\n";
        let err = RateFunction::table_from_text(
            Regime::ZeroRange,
            txt,
            Extrapolation::Reject,
            2.0,
        )
        .unwrap_err();
        match err {
            Error::TableGap(z) => assert_eq!(z, 3),
            other => panic!("expected TableGap, got {other:?}"),
        }
    }

    #[test]
    fn ln_factorial_matches_term_by_term_summation() {
        // independent oracle: term-by-term ln of the evaluated rates
        let r = RateFunction::exponential_bricklayers(1.0);
        let oracle: f64 = (1..=3).map(|y| r.eval(y).ln()).sum();
        let got = r.ln_rate_factorial(3).unwrap();
        assert!((got - oracle).abs() <= 1e-12 * oracle.abs().max(1.0));
        // closed form beta n^2 / 2
        assert!((got - 4.5).abs() < 1e-12);
        let r2 = RateFunction::exponential_bricklayers(2.0);
        assert!((r2.ln_rate_factorial(10).unwrap() - 100.0).abs() < 1e-10);
    }

    #[test]
    fn factorial_of_zero_is_log_one() {
        let r = RateFunction::zero_range_linear_capped(1.0);
        assert_eq!(r.ln_rate_factorial(0).unwrap(), 0.0);
    }

    #[test]
    fn zero_range_factorial_with_zero_rate_rejected() {
        let r = RateFunction::table(
            Regime::ZeroRange,
            1,
            vec![0.0, 1.0],
            Extrapolation::Reject,
            2.0,
        )
        .unwrap();
        assert!(matches!(
            r.ln_rate_factorial(2),
            Err(Error::ZeroRateFactorial(1))
        ));
    }

    #[test]
    fn symmetry_holds_in_log_space_over_wide_range() {
        let r = RateFunction::exponential_bricklayers(1.0);
        for z in -50..=50 {
            let resid = (r.ln_eval(z) + r.ln_eval(1 - z)).abs();
            assert!(resid < 1e-12, "symmetry residual {resid} at z = {z}");
        }
    }
}
