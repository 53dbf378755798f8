//! Experiment configuration: a TOML file binding rate families, process
//! volumes, initial conditions, horizons and suite parameters to
//! reproducible seeds. Every output embeds the fully resolved config, and
//! the embedded copy re-parses to an equal config.

use crate::equilibrium::{build_marginal, GoodMeasureSpec};
use crate::error::{Error, Result};
use crate::rates::{Extrapolation, RateFunction, Regime};
use crate::verify::generator::CylinderFunction;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RateConfig {
    /// exp-bricklayers | zr-exp | zr-linear-capped | table-bricklayers | table-zr
    pub family: String,
    pub beta: Option<f64>,
    pub cap: Option<f64>,
    pub table_path: Option<String>,
    /// "reject" or a geometric ratio
    pub extrapolation_ratio: Option<f64>,
    pub beta_bound: Option<f64>,
}

impl RateConfig {
    pub fn build(&self) -> Result<Arc<RateFunction>> {
        let rate = match self.family.as_str() {
            "exp-bricklayers" => RateFunction::exponential_bricklayers(
                self.beta
                    .ok_or_else(|| Error::Config("exp-bricklayers needs beta".into()))?,
            ),
            "zr-exp" => RateFunction::zero_range_exponential(
                self.beta
                    .ok_or_else(|| Error::Config("zr-exp needs beta".into()))?,
            ),
            "zr-linear-capped" => RateFunction::zero_range_linear_capped(
                self.cap
                    .ok_or_else(|| Error::Config("zr-linear-capped needs cap".into()))?,
            ),
            fam @ ("table-bricklayers" | "table-zr") => {
                let path = self
                    .table_path
                    .as_ref()
                    .ok_or_else(|| Error::Config("table families need table_path".into()))?;
                let text = std::fs::read_to_string(path)?;
                let regime = if fam == "table-zr" {
                    Regime::ZeroRange
                } else {
                    Regime::Bricklayers
                };
                let extrapolation = match self.extrapolation_ratio {
                    Some(ratio) => Extrapolation::Geometric { ratio },
                    None => Extrapolation::Reject,
                };
                RateFunction::table_from_text(
                    regime,
                    &text,
                    extrapolation,
                    self.beta_bound
                        .ok_or_else(|| Error::Config("table families need beta_bound".into()))?,
                )?
            }
            other => {
                return Err(Error::Config(format!("unknown rate family {other:?}")));
            }
        };
        Ok(Arc::new(rate))
    }

    pub fn exp_bricklayers(beta: f64) -> Self {
        RateConfig {
            family: "exp-bricklayers".into(),
            beta: Some(beta),
            cap: None,
            table_path: None,
            extrapolation_ratio: None,
            beta_bound: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ProcessConfig {
    /// monotone | boundary-driven
    pub kind: String,
    pub l: i64,
    pub r: i64,
    #[serde(default)]
    pub theta: f64,
    /// perturbation knob for negative controls; 1.0 is the true process
    pub virtual_scale: Option<f64>,
}

impl ProcessConfig {
    pub fn build(&self, rate: &Arc<RateFunction>) -> Result<crate::dynamics::ProcessSpec> {
        match self.kind.as_str() {
            "monotone" => crate::dynamics::ProcessSpec::monotone(Arc::clone(rate), self.l, self.r),
            "boundary-driven" => crate::dynamics::ProcessSpec::boundary_driven_scaled(
                Arc::clone(rate),
                self.l,
                self.r,
                self.theta,
                self.virtual_scale.unwrap_or(1.0),
            ),
            other => Err(Error::Config(format!("unknown process kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct InitConfig {
    /// flat | equilibrium | step | explicit
    pub kind: String,
    pub theta: Option<f64>,
    pub theta_left: Option<f64>,
    pub theta_right: Option<f64>,
    pub values: Option<Vec<i64>>,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig {
            kind: "flat".into(),
            theta: None,
            theta_left: None,
            theta_right: None,
            values: None,
        }
    }
}

impl InitConfig {
    /// Per-site initial increment, independent of any window so that every
    /// volume of a window-limit schedule sees the same configuration.
    pub fn site_sampler(
        &self,
        rate: &Arc<RateFunction>,
        seed: u64,
    ) -> Result<Box<dyn Fn(i64) -> i64 + Sync + Send>> {
        match self.kind.as_str() {
            "flat" => Ok(Box::new(|_| 0)),
            "equilibrium" => {
                let theta = self
                    .theta
                    .ok_or_else(|| Error::Config("equilibrium init needs theta".into()))?;
                let m = build_marginal(rate, theta, 1e-12)?;
                Ok(Box::new(move |site| {
                    crate::equilibrium::sample_site(&m, seed, site)
                }))
            }
            "step" => {
                // the two-sided profile: mu^(theta-left) for i <= 0,
                // mu^(theta-right) for i >= 1; theta-left >= theta-right
                // matches the conditional-coupling orientation
                let tl = self
                    .theta_left
                    .ok_or_else(|| Error::Config("step init needs theta-left".into()))?;
                let tr = self
                    .theta_right
                    .ok_or_else(|| Error::Config("step init needs theta-right".into()))?;
                let left = build_marginal(rate, tl, 1e-12)?;
                let right = build_marginal(rate, tr, 1e-12)?;
                Ok(Box::new(move |site| {
                    let m = if site <= 0 { &left } else { &right };
                    crate::equilibrium::sample_site(m, seed, site)
                }))
            }
            "explicit" => {
                let values = self
                    .values
                    .clone()
                    .ok_or_else(|| Error::Config("explicit init needs values".into()))?;
                // values are centered on site 0
                let offset = (values.len() / 2) as i64;
                Ok(Box::new(move |site| {
                    let idx = site + offset;
                    if idx >= 0 && (idx as usize) < values.len() {
                        values[idx as usize]
                    } else {
                        0
                    }
                }))
            }
            other => Err(Error::Config(format!("unknown init kind {other:?}"))),
        }
    }

    /// Good-measure profile for suites that need the sandwich parameters.
    pub fn good_measure(&self, rate: &Arc<RateFunction>) -> Result<GoodMeasureSpec> {
        match self.kind.as_str() {
            "equilibrium" => {
                let theta = self
                    .theta
                    .ok_or_else(|| Error::Config("equilibrium init needs theta".into()))?;
                let m = build_marginal(rate, theta, 1e-12)?;
                GoodMeasureSpec::constant(m.clone(), m.clone(), m)
            }
            "step" => {
                let tl = self
                    .theta_left
                    .ok_or_else(|| Error::Config("step init needs theta-left".into()))?;
                let tr = self
                    .theta_right
                    .ok_or_else(|| Error::Config("step init needs theta-right".into()))?;
                if tr > tl {
                    return Err(Error::UnorderedThetas {
                        theta1: tr,
                        theta2: tl,
                    });
                }
                let lower = build_marginal(rate, tr, 1e-12)?;
                let upper = build_marginal(rate, tl, 1e-12)?;
                GoodMeasureSpec::step(lower, upper)
            }
            other => Err(Error::Config(format!(
                "init kind {other:?} is not a good measure"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_horizon")]
    pub t: f64,
    #[serde(default)]
    pub snapshots: Vec<f64>,
    #[serde(default = "default_replicas")]
    pub replicas: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// 0 means all available cores
    #[serde(default)]
    pub threads: usize,
    pub samples: Option<u64>,
}

fn default_horizon() -> f64 {
    1.0
}
fn default_replicas() -> u64 {
    1
}
fn default_seed() -> u64 {
    1
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            t: default_horizon(),
            snapshots: Vec::new(),
            replicas: default_replicas(),
            seed: default_seed(),
            threads: 0,
            samples: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct WindowLimitConfig {
    pub enabled: Option<bool>,
    pub target_lo: Option<i64>,
    pub target_hi: Option<i64>,
    pub base_halfwidth: Option<i64>,
    pub max_doublings: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default)]
    pub suites: Vec<String>,
    pub t: Option<f64>,
    pub replicas: Option<u64>,
    pub phis: Option<Vec<CylinderFunction>>,
    pub i_values: Option<Vec<i64>>,
    pub t_grid: Option<Vec<f64>>,
    pub batches: Option<usize>,
    pub oracle_m: Option<i64>,
    pub volume_halfwidth: Option<i64>,
}

/// A couple subcommand member: process plus its own initial condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct MemberConfig {
    pub label: String,
    pub process: ProcessConfig,
    #[serde(default)]
    pub init: InitConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub rate: RateConfig,
    pub process: Option<ProcessConfig>,
    #[serde(default)]
    pub init: InitConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub window_limit: WindowLimitConfig,
    #[serde(default)]
    pub members: Vec<MemberConfig>,
    #[serde(default)]
    pub verify: VerifyConfig,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
