//! Closed-form EPR transition amplitudes of single cycles.
//!
//! Every amplitude is split as `e^{growth·T} × stripped`. The growth rate
//! is returned as a number and never exponentiated here, so callers can
//! cancel it against the normalisation algebraically.
//!
//! Two flavours of stripped value exist. The large-`T` one is what the
//! saddle sums use. The finite-`T` one is the exact mode product and is
//! what gets compared against the Fock-space oracle at short times.

use serde::Serialize;
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

use crate::permutation_saddles::PermutationPair;
use crate::special_functions::{chebyshev_t, parity_momenta};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AmplitudeError {
    #[error("cycle length must be at least 1")]
    EmptyCycle,
    #[error("theta = {0} outside [0, pi/2]")]
    ThetaRange(f64),
    #[error("{name} must be non-negative and finite, got {value}")]
    BadRate { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GridParity {
    /// Odd length, `k = 2jπ/n`, contains the zero mode.
    Periodic,
    /// Even length, `k = (2j−1)π/n`.
    Antiperiodic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentumGrid {
    pub length: usize,
    pub momenta: Vec<f64>,
    pub parity: GridParity,
}

pub fn momentum_grid(n_cycle: usize) -> Result<MomentumGrid, AmplitudeError> {
    if n_cycle == 0 {
        return Err(AmplitudeError::EmptyCycle);
    }
    let parity = if n_cycle % 2 == 1 { GridParity::Periodic } else { GridParity::Antiperiodic };
    Ok(MomentumGrid { length: n_cycle, momenta: parity_momenta(n_cycle), parity })
}

/// `e^{growth_exponent·T} · stripped_value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleAmplitude {
    pub growth_exponent: f64,
    pub stripped_value: f64,
}

impl CycleAmplitude {
    /// Only for small `T`; saddle sums must keep the split.
    #[allow(non_snake_case)]
    pub fn value_at(&self, T: f64) -> f64 {
        (self.growth_exponent * T).exp() * self.stripped_value
    }
}

fn check_rate(name: &'static str, value: f64) -> Result<(), AmplitudeError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(AmplitudeError::BadRate { name, value })
    }
}

fn check_theta(theta: f64) -> Result<(), AmplitudeError> {
    if (0.0..=FRAC_PI_2).contains(&theta) {
        Ok(())
    } else {
        Err(AmplitudeError::ThetaRange(theta))
    }
}

/// Large-`T` single-chain amplitude: growth `nΛ/2`, stripped `2^{1−n}`.
#[allow(non_snake_case)]
pub fn unitary_cycle_amplitude(n_cycle: usize, lambda: f64, T: f64) -> Result<CycleAmplitude, AmplitudeError> {
    if n_cycle == 0 {
        return Err(AmplitudeError::EmptyCycle);
    }
    check_rate("lambda", lambda)?;
    check_rate("T", T)?;
    Ok(CycleAmplitude {
        growth_exponent: n_cycle as f64 * lambda / 2.0,
        stripped_value: 2f64.powi(1 - n_cycle as i32),
    })
}

/// Exact single-chain amplitude at finite `T`. Each pair `±k` with
/// `0 < k < π` contributes `cos²(k/2) + sin²(k/2)e^{−2ΛT}`; the zero mode
/// contributes 1.
#[allow(non_snake_case)]
pub fn unitary_cycle_amplitude_finite(n_cycle: usize, lambda: f64, T: f64) -> Result<CycleAmplitude, AmplitudeError> {
    let mut amp = unitary_cycle_amplitude(n_cycle, lambda, T)?;
    let decay = (-2.0 * lambda * T).exp();
    amp.stripped_value = momentum_grid(n_cycle)?
        .momenta
        .iter()
        .filter(|&&k| k > 0.0)
        .map(|k| {
            let c = (k / 2.0).cos().powi(2);
            c + (1.0 - c) * decay
        })
        .product();
    Ok(amp)
}

/// Exact two-chain monitored amplitude at finite `T` with
/// `Λ = scale·cos θ`, `μ = scale·sin θ`. Growth `n·scale`; each momentum
/// contributes `f_k + (1−f_k)e^{−2·scale·T}` with `f_k = ½(1 + cos θ cos k)`.
#[allow(non_snake_case)]
pub fn monitored_cycle_amplitude(n_cycle: usize, theta: f64, scale: f64, T: f64) -> Result<CycleAmplitude, AmplitudeError> {
    check_theta(theta)?;
    check_rate("scale", scale)?;
    check_rate("T", T)?;
    let grid = momentum_grid(n_cycle)?;
    let decay = (-2.0 * scale * T).exp();
    let ct = theta.cos();
    let stripped_value = grid
        .momenta
        .iter()
        .map(|k| {
            let f = 0.5 * (1.0 + ct * k.cos());
            f + (1.0 - f) * decay
        })
        .product();
    Ok(CycleAmplitude { growth_exponent: n_cycle as f64 * scale, stripped_value })
}

/// Large-`T` stripped two-chain factor `Π_k ½(1 + cos θ cos k)`, through
/// `2^{1−2n} cosⁿθ (T_n(sec θ) + 1)`. At exactly `θ = π/2` every factor
/// is ½ and the product is taken directly.
pub fn monitored_cycle_factor(n_cycle: usize, theta: f64) -> Result<f64, AmplitudeError> {
    let l = monitored_cycle_log_factor(n_cycle, theta)?;
    Ok(l.value())
}

/// `2^{pow2} · e^{rest}`. Keeping the power of two apart lets exact
/// cancellations (such as at `θ = π/2`) come out as exact zeros in logs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogFactor {
    pub pow2: i64,
    pub rest: f64,
}

impl LogFactor {
    pub const ONE: LogFactor = LogFactor { pow2: 0, rest: 0.0 };

    pub fn ln(&self) -> f64 {
        self.pow2 as f64 * std::f64::consts::LN_2 + self.rest
    }

    pub fn value(&self) -> f64 {
        2f64.powi(self.pow2 as i32) * self.rest.exp()
    }

    pub fn powi(self, k: i64) -> LogFactor {
        LogFactor { pow2: self.pow2 * k, rest: self.rest * k as f64 }
    }
}

impl std::ops::Mul for LogFactor {
    type Output = LogFactor;
    fn mul(self, o: LogFactor) -> LogFactor {
        LogFactor { pow2: self.pow2 + o.pow2, rest: self.rest + o.rest }
    }
}

impl std::ops::Div for LogFactor {
    type Output = LogFactor;
    fn div(self, o: LogFactor) -> LogFactor {
        LogFactor { pow2: self.pow2 - o.pow2, rest: self.rest - o.rest }
    }
}

pub fn monitored_cycle_log_factor(n_cycle: usize, theta: f64) -> Result<LogFactor, AmplitudeError> {
    if n_cycle == 0 {
        return Err(AmplitudeError::EmptyCycle);
    }
    check_theta(theta)?;
    let n = n_cycle as i64;
    if theta == FRAC_PI_2 {
        return Ok(LogFactor { pow2: -n, rest: 0.0 });
    }
    let sec = 1.0 / theta.cos();
    let t = chebyshev_t(n as f64, sec).expect("sec theta >= 1");
    Ok(LogFactor { pow2: 1 - 2 * n, rest: n as f64 * theta.cos().ln() + (t + 1.0).ln() })
}

/// Product of [`monitored_cycle_factor`] over the cycles of both members
/// of a saddle pair.
pub fn pair_pfaffian_factor(pair: &PermutationPair, theta: f64) -> Result<f64, AmplitudeError> {
    Ok(pair_pfaffian_log_factor(pair, theta)?.value())
}

pub fn pair_pfaffian_log_factor(pair: &PermutationPair, theta: f64) -> Result<LogFactor, AmplitudeError> {
    pair.all_cycle_lengths()
        .into_iter()
        .try_fold(LogFactor::ONE, |acc, len| Ok(acc * monitored_cycle_log_factor(len, theta)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::permutation_saddles::enumerate_maximal_pairs;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, PI};

    fn direct_product(n: usize, theta: f64) -> f64 {
        parity_momenta(n).iter().map(|k| 0.5 * (1.0 + theta.cos() * k.cos())).product()
    }

    #[test]
    fn grids() {
        assert_eq!(momentum_grid(1).unwrap().momenta, vec![0.0]);
        let g2 = momentum_grid(2).unwrap();
        assert_eq!(g2.parity, GridParity::Antiperiodic);
        assert!((g2.momenta[0] + PI / 2.0).abs() < 1e-15 && (g2.momenta[1] - PI / 2.0).abs() < 1e-15);
        let g3 = momentum_grid(3).unwrap().momenta;
        for (a, b) in g3.iter().zip([-2.0 * PI / 3.0, 0.0, 2.0 * PI / 3.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(momentum_grid(0).is_err());
    }

    #[test]
    fn unitary_examples() {
        let a = unitary_cycle_amplitude(1, 0.8, 1.0).unwrap();
        assert_eq!((a.growth_exponent, a.stripped_value), (0.4, 1.0));
        let a = unitary_cycle_amplitude(2, 0.8, 1.0).unwrap();
        assert_eq!((a.growth_exponent, a.stripped_value), (0.8, 0.5));
        for n in 1..6 {
            let f = unitary_cycle_amplitude_finite(n, 1.0, 0.0).unwrap();
            assert!((f.stripped_value - 1.0).abs() < 1e-15);
            let f = unitary_cycle_amplitude_finite(n, 1.0, 40.0).unwrap();
            assert!((f.stripped_value - 2f64.powi(1 - n as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn monitored_factor_examples() {
        for theta in [0.0, 0.3, 1.0, 1.5] {
            assert!((monitored_cycle_factor(1, theta).unwrap() - (theta / 2.0).cos().powi(2)).abs() < 1e-15);
        }
        for n in 1..8 {
            let v = monitored_cycle_factor(n, 0.0).unwrap();
            assert!((v - 2f64.powi(2 - 2 * n as i32)).abs() < 1e-15 * v);
            assert_eq!(monitored_cycle_factor(n, FRAC_PI_2).unwrap(), 2f64.powi(-(n as i32)));
        }
        assert!(monitored_cycle_factor(2, 1.6).is_err());
    }

    #[test]
    fn closed_form_equals_product() {
        for n in 1..=8 {
            for theta in [0.0, 0.1, 0.3, FRAC_PI_4, 1.2, 1.5, 1.57] {
                let a = monitored_cycle_factor(n, theta).unwrap();
                let b = direct_product(n, theta);
                assert!((a - b).abs() < 1e-12 * b, "n={n} theta={theta}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn large_time_limit_of_finite_amplitude() {
        for n in 1..6 {
            let f = monitored_cycle_amplitude(n, 0.7, 1.0, 50.0).unwrap();
            assert!((f.stripped_value - monitored_cycle_factor(n, 0.7).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn theta_zero_is_two_unitary_chains() {
        for n in 1..7 {
            for t in [0.0, 0.3, 1.1] {
                let m = monitored_cycle_amplitude(n, 0.0, 1.3, t).unwrap();
                let u = unitary_cycle_amplitude_finite(n, 1.3, t).unwrap();
                assert!((m.growth_exponent - 2.0 * u.growth_exponent).abs() < 1e-15);
                assert!((m.stripped_value - u.stripped_value.powi(2)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn pair_factor_examples() {
        for n in 2..=5 {
            for pair in enumerate_maximal_pairs(n).unwrap() {
                let z = pair_pfaffian_factor(&pair, 0.0).unwrap();
                assert!((z - 2f64.powi(2 - 2 * n as i32)).abs() < 1e-14 * z);
                let l = pair_pfaffian_log_factor(&pair, FRAC_PI_2).unwrap();
                assert_eq!(l, LogFactor { pow2: -2 * n as i64, rest: 0.0 });
            }
        }
        // Identity saddle on both sides: 2n unit cycles, giving the
        // cos^{4n}(θ/2) normalisation of the quasi entropy.
        let n = 3;
        let v: f64 = (0..2 * n).map(|_| monitored_cycle_factor(1, FRAC_PI_3).unwrap()).product();
        assert!((v - (FRAC_PI_3 / 2.0).cos().powi(4 * n)).abs() < 1e-15);
    }
}
