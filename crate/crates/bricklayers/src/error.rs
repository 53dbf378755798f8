use thiserror::Error;

/// Errors surfaced by rate validation, equilibrium construction and the
/// event-driven engines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("rate table has a gap at z = {0}: support must be contiguous")]
    TableGap(i64),

    #[error("rate table is empty")]
    TableEmpty,

    #[error("rate function failed validation: {0}")]
    InvalidRate(String),

    #[error("evaluation at z = {z} is outside the declared table support and extrapolation is disabled")]
    TableOutOfSupport { z: i64 },

    #[error("rate factorial undefined: r({0}) = 0 in the zero-range regime")]
    ZeroRateFactorial(i64),

    #[error("equilibrium series diverges: e^theta = {etheta:.6} must be below sup r = {sup_r:.6}")]
    DivergentSeries { etheta: f64, sup_r: f64 },

    #[error("density {rho} is not attainable; attainable range is {range}")]
    DensityUnattainable { rho: f64, range: String },

    #[error("marginal support cap {cap} reached before tail tolerance {tol:e} was certified")]
    SupportCapReached { cap: i64, tol: f64 },

    #[error("good measure sandwich violated at site {site}, support point {z}: CDF ordering does not hold")]
    SandwichViolation { site: i64, z: i64 },

    #[error("marginal CDFs are not stochastically ordered at support point {z}")]
    CdfOrderViolation { z: i64 },

    #[error("requested clock level {level:.6e} exceeds the hard envelope cap {cap:.6e}")]
    EnvelopeCap { level: f64, cap: f64 },

    #[error("event count exceeded the safety limit of {0} events")]
    EventCapExceeded(u64),

    #[error("state window [{have_lo}, {have_hi}] does not cover the sites [{need_lo}, {need_hi}] required by the process")]
    WindowTooSmall {
        have_lo: i64,
        have_hi: i64,
        need_lo: i64,
        need_hi: i64,
    },

    #[error("process volume is invalid: l = {l}, r = {r} ({reason})")]
    InvalidVolume { l: i64, r: i64, reason: String },

    #[error("window limit did not stabilize within {max_doublings} doublings (largest volume [{lo}, {hi}])")]
    NotStabilized {
        max_doublings: u32,
        lo: i64,
        hi: i64,
    },

    #[error("conditional coupling rejected {0} proposals without an acceptance")]
    RejectionExhausted(u64),

    #[error("conditional coupling precondition failed: need E^(theta1)(z) < -K < K < E^(theta2)(z), got mean1 = {mean1:.4}, K = {k:.4}, mean2 = {mean2:.4}")]
    SlopeNotDominated { mean1: f64, mean2: f64, k: f64 },

    #[error("generator state space too large: {size} configurations exceeds cap {cap}")]
    StateSpaceTooLarge { size: u128, cap: u128 },

    #[error("cylinder support [{lo}, {hi}] must lie within the process volume [{l}, {r}]")]
    CylinderOutsideVolume { lo: i64, hi: i64, l: i64, r: i64 },

    #[error("boundary-driven dynamics with theta parameters require the bricklayers regime unless noted; {0}")]
    RegimeMismatch(String),

    #[error("coupled boundary parameters must satisfy theta1 <= theta2, got {theta1} > {theta2}")]
    UnorderedThetas { theta1: f64, theta2: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown verification suite: {0}")]
    UnknownSuite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    TomlParse(#[from] toml::de::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
