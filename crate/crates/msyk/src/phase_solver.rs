//! Self-consistent hopping `Λ(μ)` of the monitored saddle and the phase
//! diagram it implies.
//!
//! The self-consistency `Λ = U cos^{q−1}θ + J cos θ` with `tan θ = μ/Λ` is
//! solved in θ rather than Λ. Along the solution curve
//! `μ(θ) = sin θ (J + U cos^{q−2}θ)` is single valued and smooth, so every
//! root is a sign change on a θ grid.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

use crate::model_core::ValidatedParams;

/// θ grid used for root bracketing.
pub const THETA_GRID: usize = 2048;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhaseError {
    #[error("theta must lie in (0, pi/2], got {0}")]
    ThetaRange(f64),
    #[error("perturbative form needs mu < J (mu = {mu}, J = {j})")]
    AboveThreshold { mu: f64, j: f64 },
    #[error("mu must be non-negative and finite, got {0}")]
    BadMu(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseClass {
    VolumeLaw,
    AreaLaw,
    CoexistenceWindow,
}

impl PhaseClass {
    pub fn label(self) -> &'static str {
        match self {
            PhaseClass::VolumeLaw => "volume-law",
            PhaseClass::AreaLaw => "area-law",
            PhaseClass::CoexistenceWindow => "coexistence-window",
        }
    }
}

/// All `Λ > 0` solutions at one monitoring rate. `Λ = 0` always solves
/// the equation and is never listed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhasePoint {
    pub mu: f64,
    pub lambdas: Vec<f64>,
    pub theta_branch: Vec<f64>,
    pub classification: PhaseClass,
}

/// Solution curve `μ(θ)`. At θ = 0 this is 0, where `Λ = J + U`.
pub fn mu_of_theta(theta: f64, j: f64, u: f64, q: u32) -> Result<f64, PhaseError> {
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(PhaseError::ThetaRange(theta));
    }
    Ok(theta.sin() * (j + u * theta.cos().powi(q as i32 - 2)))
}

/// `Λ` on the solution curve at angle θ.
pub fn lambda_of_theta(theta: f64, j: f64, u: f64, q: u32) -> f64 {
    if theta == FRAC_PI_2 {
        return 0.0;
    }
    let c = theta.cos();
    c * (j + u * c.powi(q as i32 - 2))
}

/// `Λ − U(Λ/√(Λ²+μ²))^{q−1} − JΛ/√(Λ²+μ²)`.
pub fn phase_residual(lambda: f64, mu: f64, j: f64, u: f64, q: u32) -> f64 {
    let r = (lambda * lambda + mu * mu).sqrt();
    let c = if r == 0.0 { 0.0 } else { lambda / r };
    lambda - u * c.powi(q as i32 - 1) - j * c
}

fn theta_grid() -> Vec<f64> {
    (0..=THETA_GRID).map(|i| FRAC_PI_2 * i as f64 / THETA_GRID as f64).collect()
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All nonzero `Λ` at monitoring rate `mu`.
pub fn solve_lambda(params: &ValidatedParams, mu: f64) -> Result<PhasePoint, PhaseError> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(PhaseError::BadMu(mu));
    }
    let (j, u, q) = (params.J, params.U, params.q);
    if mu == 0.0 {
        return Ok(PhasePoint {
            mu,
            lambdas: vec![j + u],
            theta_branch: vec![0.0],
            classification: PhaseClass::VolumeLaw,
        });
    }
    let f = |th: f64| th.sin() * (j + u * th.cos().powi(q as i32 - 2)) - mu;
    let grid = theta_grid();
    let vals: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
    let mut thetas = Vec::new();
    // The last grid point is θ = π/2 where Λ = 0; roots there are dropped.
    for w in 0..THETA_GRID {
        let (a, b) = (vals[w], vals[w + 1]);
        if a == 0.0 && w > 0 {
            thetas.push(grid[w]);
        } else if a * b < 0.0 {
            let t = bisect(f, grid[w], grid[w + 1]);
            if t < FRAC_PI_2 {
                thetas.push(t);
            }
        }
    }
    let lambdas: Vec<f64> = thetas.iter().map(|&t| lambda_of_theta(t, j, u, q)).collect();
    let classification = match lambdas.len() {
        0 => PhaseClass::AreaLaw,
        1 => PhaseClass::VolumeLaw,
        _ => PhaseClass::CoexistenceWindow,
    };
    Ok(PhasePoint { mu, lambdas, theta_branch: thetas, classification })
}

/// Small-`U` expansion `J(1−μ²/J²)^{1/2} + U(1−μ²/J²)^{(q−3)/2}`.
pub fn perturbative_lambda(j: f64, u: f64, q: u32, mu: f64) -> Result<f64, PhaseError> {
    if !(mu < j) {
        return Err(PhaseError::AboveThreshold { mu, j });
    }
    let s = 1.0 - mu * mu / (j * j);
    Ok(j * s.sqrt() + u * s.powf((q as f64 - 3.0) / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TransitionKind {
    /// Unique root for every μ < `mu_c`.
    Continuous { mu_c: f64 },
    /// Several roots for μ in `[window_lo, window_hi]`; `theta_star`
    /// is where `μ(θ)` peaks.
    FirstOrder { window_lo: f64, window_hi: f64, theta_star: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitionRecord {
    pub kind: TransitionKind,
    /// Coupling `U` at which the transition turns first order for this
    /// `J` and `q`.
    pub tricritical_u: f64,
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    while (b - a).abs() > 1e-15 * b.abs().max(1.0) {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    0.5 * (a + b)
}

fn is_monotone(j: f64, u: f64, q: u32) -> bool {
    // dμ/dθ = cos θ [J + U cos^{q−4}θ ((q−1)cos²θ − (q−2))], sampled on a
    // grid in c = cos θ.
    (0..=THETA_GRID).all(|i| {
        let c = i as f64 / THETA_GRID as f64;
        j + u * c.powi(q as i32 - 4) * ((q as f64 - 1.0) * c * c - (q as f64 - 2.0)) >= -1e-14 * (j + u)
    })
}

/// Continuous versus first-order transition for the given couplings.
pub fn classify_transition(params: &ValidatedParams) -> TransitionRecord {
    let (j, u, q) = (params.J, params.U, params.q);
    let tricritical_u = tricritical_coupling(j, q);
    if is_monotone(j, u, q) {
        return TransitionRecord { kind: TransitionKind::Continuous { mu_c: j }, tricritical_u };
    }
    let mu = |t: f64| t.sin() * (j + u * t.cos().powi(q as i32 - 2));
    let grid = theta_grid();
    let imax = (0..grid.len()).max_by(|&a, &b| mu(grid[a]).total_cmp(&mu(grid[b]))).unwrap();
    let lo = grid[imax.saturating_sub(1)];
    let hi = grid[(imax + 1).min(grid.len() - 1)];
    let theta_star = golden_max(mu, lo, hi);
    let window_hi = mu(theta_star);
    let window_lo = grid.iter().filter(|&&t| t >= theta_star).map(|&t| mu(t)).fold(f64::INFINITY, f64::min);
    TransitionRecord { kind: TransitionKind::FirstOrder { window_lo, window_hi, theta_star }, tricritical_u }
}

/// Smallest `U` making `μ(θ)` non-monotone, by bisection (`J/2` at q = 4).
pub fn tricritical_coupling(j: f64, q: u32) -> f64 {
    let mut lo = 0.0;
    let mut hi = j.max(1e-300);
    while is_monotone(j, hi, q) {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if is_monotone(j, mid, q) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Phase points over a μ grid, evaluated in parallel with ordered output.
pub fn phase_scan(params: &ValidatedParams, mus: &[f64]) -> Result<Vec<PhasePoint>, PhaseError> {
    mus.par_iter().map(|&m| solve_lambda(params, m)).collect()
}
