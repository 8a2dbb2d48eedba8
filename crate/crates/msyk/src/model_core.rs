//! Model parameters, replica configuration and the saddle angle.
//!
//! Every downstream computation takes its couplings and sizes from
//! [`ModelParams`]; [`validate`] is the single gate that enforces the
//! parity and sign constraints of the model.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("J must be non-negative, got {0}")]
    NegativeJ(f64),
    #[error("U must be non-negative, got {0}")]
    NegativeU(f64),
    #[error("J + U must be positive")]
    NoCoupling,
    #[error("q must be multiple of 4, got {0}")]
    QNotMultipleOf4(u32),
    #[error("mu must be non-negative, got {0}")]
    NegativeMu(f64),
    #[error("N must be even, got {0}")]
    OddN(u32),
    #[error("N must be positive")]
    ZeroN,
    #[error("L must be at least 1")]
    ZeroL,
    #[error("T must be non-negative, got {0}")]
    NegativeT(f64),
    #[error("n must be positive, got {0}")]
    NonPositiveN(f64),
    #[error("saddle angle undefined: lambda and mu are both zero")]
    DegenerateAngle,
    #[error("lambda and mu must be non-negative (lambda={lambda}, mu={mu})")]
    NegativeRate { lambda: f64, mu: f64 },
    #[error("non-finite value for {0}")]
    NonFinite(&'static str),
}

/// Couplings and sizes of the two monitored chains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct ModelParams {
    /// Onsite two-Majorana coupling rate.
    pub J: f64,
    /// Nearest-neighbour q-Majorana coupling rate.
    pub U: f64,
    pub q: u32,
    /// Monitoring rate.
    pub mu: f64,
    /// Majorana flavours per site per chain.
    pub N: u32,
    /// Number of sites.
    pub L: u32,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { J: 1.0, U: 0.4, q: 4, mu: 0.0, N: 8, L: 2 }
    }
}

/// Parameters that passed [`validate`]. Construction is only possible
/// through validation, so holders can skip re-checking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidatedParams(ModelParams);

impl ValidatedParams {
    pub fn get(&self) -> &ModelParams {
        &self.0
    }

    pub fn into_inner(self) -> ModelParams {
        self.0
    }
}

impl std::ops::Deref for ValidatedParams {
    type Target = ModelParams;
    fn deref(&self) -> &ModelParams {
        &self.0
    }
}

pub fn validate(params: ModelParams) -> Result<ValidatedParams, ParamError> {
    let p = params;
    for (name, v) in [("J", p.J), ("U", p.U), ("mu", p.mu)] {
        if !v.is_finite() {
            return Err(ParamError::NonFinite(name));
        }
    }
    if p.J < 0.0 {
        return Err(ParamError::NegativeJ(p.J));
    }
    if p.U < 0.0 {
        return Err(ParamError::NegativeU(p.U));
    }
    if p.J + p.U <= 0.0 {
        return Err(ParamError::NoCoupling);
    }
    if p.q == 0 || !p.q.is_multiple_of(4) {
        return Err(ParamError::QNotMultipleOf4(p.q));
    }
    if p.mu < 0.0 {
        return Err(ParamError::NegativeMu(p.mu));
    }
    if p.N == 0 {
        return Err(ParamError::ZeroN);
    }
    if !p.N.is_multiple_of(2) {
        return Err(ParamError::OddN(p.N));
    }
    if p.L == 0 {
        return Err(ParamError::ZeroL);
    }
    Ok(ValidatedParams(p))
}

impl ValidatedParams {
    /// Re-validation of already valid parameters is a no-op.
    pub fn revalidate(self) -> Result<ValidatedParams, ParamError> {
        validate(self.0)
    }
}

/// Replica count and evolution time. `n` may be real for analytic
/// continuation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct ReplicaConfig {
    pub n: f64,
    pub T: f64,
}

impl ReplicaConfig {
    #[allow(non_snake_case)]
    pub fn new(n: f64, T: f64) -> Result<Self, ParamError> {
        if !n.is_finite() {
            return Err(ParamError::NonFinite("n"));
        }
        if !T.is_finite() {
            return Err(ParamError::NonFinite("T"));
        }
        if n <= 0.0 {
            return Err(ParamError::NonPositiveN(n));
        }
        if T < 0.0 {
            return Err(ParamError::NegativeT(T));
        }
        Ok(Self { n, T })
    }
}

/// Flat JSON record carrying both the model and replica fields, keyed
/// `J, U, q, mu, N, L, n, T`. Missing keys are left unset so a config file
/// can be layered over defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
#[serde(deny_unknown_fields)]
pub struct FlatConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub J: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub U: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub N: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub L: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub T: Option<f64>,
}

impl FlatConfig {
    /// Fields set in `other` win.
    pub fn overlay(&self, other: &FlatConfig) -> FlatConfig {
        FlatConfig {
            J: other.J.or(self.J),
            U: other.U.or(self.U),
            q: other.q.or(self.q),
            mu: other.mu.or(self.mu),
            N: other.N.or(self.N),
            L: other.L.or(self.L),
            n: other.n.or(self.n),
            T: other.T.or(self.T),
        }
    }

    pub fn model_params(&self, defaults: ModelParams) -> ModelParams {
        ModelParams {
            J: self.J.unwrap_or(defaults.J),
            U: self.U.unwrap_or(defaults.U),
            q: self.q.unwrap_or(defaults.q),
            mu: self.mu.unwrap_or(defaults.mu),
            N: self.N.unwrap_or(defaults.N),
            L: self.L.unwrap_or(defaults.L),
        }
    }
}

/// `(Λ, θ)` with `tan θ = μ/Λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleAngle {
    pub lambda: f64,
    pub theta: f64,
}

pub fn saddle_angle(lambda: f64, mu: f64) -> Result<SaddleAngle, ParamError> {
    if !lambda.is_finite() || !mu.is_finite() {
        return Err(ParamError::NonFinite("saddle_angle"));
    }
    if lambda < 0.0 || mu < 0.0 {
        return Err(ParamError::NegativeRate { lambda, mu });
    }
    if lambda == 0.0 && mu == 0.0 {
        return Err(ParamError::DegenerateAngle);
    }
    // atan2 returns exactly pi/2 for lambda == 0.
    Ok(SaddleAngle { lambda, theta: mu.atan2(lambda) })
}
