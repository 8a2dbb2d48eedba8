//! Entropy outputs built from the saddle sums.
//!
//! Everything is assembled in log space. The extensive part, the parity
//! degeneracy and the saddle multiplicity are reported separately so each
//! can be checked on its own.

use num_complex::Complex64;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::{FRAC_PI_2, LN_2, PI};
use thiserror::Error;

use crate::amplitudes::{monitored_cycle_log_factor, pair_pfaffian_log_factor, AmplitudeError, LogFactor};
use crate::permutation_saddles::{catalan, enumerate_maximal_pairs, PermError, PermutationPair};
use crate::special_functions::{chebyshev_t, chebyshev_t_order_derivative};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntropyError {
    #[error("Renyi order must be at least 2, got {0}")]
    OrderTooSmall(u32),
    #[error("N must be even and at least {min}, got {got}")]
    BadN { got: u32, min: u32 },
    #[error("L must be at least 1")]
    ZeroL,
    #[error("theta = {0} outside [0, pi/2]")]
    ThetaRange(f64),
    #[error("epsilon = {0} outside (0, 0.3]")]
    EpsilonRange(f64),
    #[error("lambda = {0} lies on the branch cut; use the complex resolvent")]
    OnBranchCut(f64),
    #[error("non-positive real order {0}")]
    BadOrder(f64),
    #[error(transparent)]
    Saddles(#[from] PermError),
    #[error(transparent)]
    Amplitude(#[from] AmplitudeError),
}

/// One saddle's contribution: `(NL/2)·log(per-site bracket)`.
#[derive(Debug, Clone, Serialize)]
pub struct SaddleTerm {
    pub pair: PermutationPair,
    pub log_bracket: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyDecomposition {
    /// Dominant-saddle contribution, proportional to `N`.
    pub extensive: f64,
    /// Parity-degeneracy contribution.
    pub parity: f64,
    /// `log Σ_μ e^{a_μ − a_max}/(1−n)`, the saddle-count term.
    pub multiplicity: f64,
    /// Entropy if only the dominant saddle were counted. This is the
    /// reading in which `n = 2` has a single nontrivial saddle.
    pub single_saddle_value: f64,
    pub saddles: Vec<SaddleTerm>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyResult {
    pub order: f64,
    pub value: f64,
    pub decomposition: EntropyDecomposition,
}

fn check_theta(theta: f64) -> Result<(), EntropyError> {
    if (0.0..=FRAC_PI_2).contains(&theta) {
        Ok(())
    } else {
        Err(EntropyError::ThetaRange(theta))
    }
}

#[allow(non_snake_case)]
fn check_even_n(N: u32, min: u32) -> Result<(), EntropyError> {
    if N.is_multiple_of(2) && N >= min {
        Ok(())
    } else {
        Err(EntropyError::BadN { got: N, min })
    }
}

/// Rényi entropy of one cluster of `N` flavours against its partner:
/// `(N−2) log 2 + log C_n / (1−n)`.
#[allow(non_snake_case)]
pub fn cluster_renyi(n: u32, N: u32) -> Result<EntropyResult, EntropyError> {
    if n < 2 {
        return Err(EntropyError::OrderTooSmall(n));
    }
    check_even_n(N, 2)?;
    let nf = n as f64;
    let log_c = biguint_ln(&catalan(n as u64));
    let extensive = N as f64 * LN_2;
    // Degeneracy 2^{2(n−1)} divided by (1−n).
    let parity = -2.0 * LN_2;
    let multiplicity = log_c / (1.0 - nf);
    Ok(EntropyResult {
        order: nf,
        value: extensive + parity + multiplicity,
        decomposition: EntropyDecomposition {
            extensive,
            parity,
            multiplicity,
            single_saddle_value: extensive + parity,
            saddles: Vec::new(),
        },
    })
}

fn biguint_ln(x: &num_bigint::BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        num_traits::ToPrimitive::to_f64(x).expect("fits in f64").ln()
    } else {
        let shift = bits - 64;
        let top: num_bigint::BigUint = x >> shift;
        num_traits::ToPrimitive::to_f64(&top).unwrap().ln() + shift as f64 * LN_2
    }
}

/// `ln C_x = ln Γ(2x+1) − ln Γ(x+1) − ln Γ(x+2)` for real `x > 0`.
pub fn ln_catalan_continued(x: f64) -> f64 {
    ln_gamma(2.0 * x + 1.0) - ln_gamma(x + 1.0) - ln_gamma(x + 2.0)
}

fn harmonic(n: u32) -> f64 {
    (1..=n).map(|k| 1.0 / k as f64).sum()
}

/// `d ln C_x / dx` at a positive integer, `2H_{2n} − H_n − H_{n+1}`.
pub fn ln_catalan_slope(n: u32) -> f64 {
    2.0 * harmonic(2 * n) - harmonic(n) - harmonic(n + 1)
}

/// Real-order continuation of [`cluster_renyi`]. At `x = 1` the exact
/// limit `N log 2 − 2 log 2 − ½` is returned.
#[allow(non_snake_case)]
pub fn cluster_renyi_continued(x: f64, N: u32) -> Result<f64, EntropyError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(EntropyError::BadOrder(x));
    }
    check_even_n(N, 2)?;
    let base = (N as f64 - 2.0) * LN_2;
    if x == 1.0 {
        return Ok(base - ln_catalan_slope(1));
    }
    Ok(base + ln_catalan_continued(x) / (1.0 - x))
}

/// Per-site bracket of a saddle pair, `Pf-factor / cos^{4n}(θ/2)`, exact in
/// powers of two.
pub fn saddle_log_bracket(pair: &PermutationPair, theta: f64) -> Result<LogFactor, EntropyError> {
    let n = pair.n() as i64;
    let num = pair_pfaffian_log_factor(pair, theta)?;
    Ok(num / cos_half_pow(theta, 4 * n))
}

/// `cos^k(θ/2)` as a [`LogFactor`], exact at `θ = π/2`.
fn cos_half_pow(theta: f64, k: i64) -> LogFactor {
    if theta == FRAC_PI_2 {
        // cos(π/4)^k = 2^{−k/2}; k is always even here.
        debug_assert!(k % 2 == 0);
        LogFactor { pow2: -k / 2, rest: 0.0 }
    } else {
        LogFactor { pow2: 0, rest: k as f64 * (theta / 2.0).cos().ln() }
    }
}

/// Half-chain quasi entropy of two monitored chains of `L` sites and `N`
/// flavours, summed over all maximal saddle pairs. At `θ = π/2` every
/// pair collapses onto the unique replica-symmetric solution and neither
/// degeneracy is counted.
#[allow(non_snake_case)]
pub fn quasi_entropy(n: u32, theta: f64, N: u32, L: u32) -> Result<EntropyResult, EntropyError> {
    if n < 2 {
        return Err(EntropyError::OrderTooSmall(n));
    }
    check_theta(theta)?;
    check_even_n(N, 2)?;
    if L == 0 {
        return Err(EntropyError::ZeroL);
    }
    let pairs = enumerate_maximal_pairs(n as usize)?;
    let power = N as f64 * L as f64 / 2.0;
    let mut saddles = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let b = saddle_log_bracket(&pair, theta)?;
        saddles.push(SaddleTerm { log_bracket: b.ln(), pair });
    }
    let one_minus_n = 1.0 - n as f64;
    let amax = saddles.iter().map(|s| power * s.log_bracket).fold(f64::NEG_INFINITY, f64::max);
    let extensive = amax / one_minus_n;
    let (parity, multiplicity) = if theta == FRAC_PI_2 {
        (0.0, 0.0)
    } else {
        let lse: f64 = saddles.iter().map(|s| (power * s.log_bracket - amax).exp()).sum::<f64>().ln();
        (L as f64 * (n as f64 - 1.0) * LN_2 / one_minus_n, lse / one_minus_n)
    };
    Ok(EntropyResult {
        order: n as f64,
        value: extensive + parity + multiplicity,
        decomposition: EntropyDecomposition { extensive, parity, multiplicity, single_saddle_value: extensive + parity, saddles },
    })
}

/// `log` of the continued per-site bracket of the cyclic saddle,
/// `log[cos^{2x}(θ/2) · 2^{1−2x} cos^xθ (T_x(sec θ) + 1) / cos^{4x}(θ/2)]`.
pub fn continued_log_bracket(x: f64, theta: f64) -> Result<f64, EntropyError> {
    check_theta(theta)?;
    if !(x > 0.0) {
        return Err(EntropyError::BadOrder(x));
    }
    if theta == FRAC_PI_2 {
        return Ok(0.0);
    }
    let t = chebyshev_t(x, 1.0 / theta.cos()).expect("sec >= 1");
    Ok(x * theta.cos().ln() + (1.0 - 2.0 * x) * LN_2 + (t + 1.0).ln() - 2.0 * x * (theta / 2.0).cos().ln())
}

/// Von Neumann entropy per site per flavour,
/// `log 2(1 + sec θ) − tan(θ/2) arccosh(sec θ)`.
pub fn vn_entropy_density(theta: f64) -> Result<f64, EntropyError> {
    check_theta(theta)?;
    if theta == FRAC_PI_2 {
        return Ok(0.0);
    }
    let sec = 1.0 / theta.cos();
    Ok((2.0 * (1.0 + sec)).ln() - (theta / 2.0).tan() * sec.acosh())
}

/// `σ(θ)` as minus the order derivative of the continued bracket at 1,
/// using the analytic order derivative of `T_x`.
pub fn vn_entropy_density_symbolic(theta: f64) -> Result<f64, EntropyError> {
    check_theta(theta)?;
    if theta == FRAC_PI_2 {
        return Ok(0.0);
    }
    let sec = 1.0 / theta.cos();
    let dt = chebyshev_t_order_derivative(1.0, sec).expect("sec >= 1");
    let slope = theta.cos().ln() - 2.0 * LN_2 + dt / (sec + 1.0) - 2.0 * (theta / 2.0).cos().ln();
    Ok(-slope)
}

/// `σ(θ)` by central difference of the continued bracket.
pub fn vn_entropy_density_fd(theta: f64, h: f64) -> Result<f64, EntropyError> {
    let up = continued_log_bracket(1.0 + h, theta)?;
    let dn = continued_log_bracket(1.0 - h, theta)?;
    Ok(-(up - dn) / (2.0 * h))
}

/// Entropy for `L_A` sites of monitored chains with the identity saddle on
/// the larger complement: `N L_A` copies of the cyclic bracket.
#[allow(non_snake_case)]
pub fn unequal_cut_entropy(x: f64, theta: f64, N: u32, L_A: u32) -> Result<f64, EntropyError> {
    let copies = N as f64 * L_A as f64;
    if x == 1.0 {
        return Ok(copies * vn_entropy_density(theta)?);
    }
    // Cyclic factor over cos^{2x}(θ/2) is the same continued bracket.
    Ok(copies * continued_log_bracket(x, theta)? / (1.0 - x))
}

/// Which near-critical asymptote to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NearCriticalForm {
    /// `ε log(2e/ε)`, the leading behaviour of [`vn_entropy_density`].
    #[default]
    Expanded,
    /// `ε (log ε − log 2e)`, which is negative for small `ε`.
    Printed,
}

/// Leading behaviour of `σ(π/2 − ε)` for small `ε`.
pub fn near_critical_density(epsilon: f64, form: NearCriticalForm) -> Result<f64, EntropyError> {
    if !(epsilon > 0.0 && epsilon <= 0.3) {
        return Err(EntropyError::EpsilonRange(epsilon));
    }
    let log_2e = LN_2 + 1.0;
    Ok(match form {
        NearCriticalForm::Expanded => epsilon * (log_2e - epsilon.ln()),
        NearCriticalForm::Printed => epsilon * (epsilon.ln() - log_2e),
    })
}

/// Entanglement-spectrum density of one cluster,
/// `D(λ) = (2^{2N−5}/π) √(λ(b−λ))/λ` on `(0, b]`, `b = 2^{4−N}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct SpectrumDensity {
    pub N: u32,
    pub support: (f64, f64),
}

impl SpectrumDensity {
    fn prefactor(&self) -> f64 {
        2f64.powi(2 * self.N as i32 - 5) / PI
    }

    pub fn density(&self, lambda: f64) -> f64 {
        let b = self.support.1;
        if lambda <= 0.0 || lambda >= b {
            return 0.0;
        }
        self.prefactor() * (lambda * (b - lambda)).sqrt() / lambda
    }

    /// `∫ λ^k D(λ) dλ` by adaptive Simpson after `λ = b sin²φ`, which
    /// removes both endpoint singularities.
    pub fn moment(&self, k: u32) -> f64 {
        let b = self.support.1;
        let f = |phi: f64| phi.sin().powi(2 * k as i32) * phi.cos().powi(2);
        2.0 * self.prefactor() * b.powi(k as i32 + 1) * adaptive_simpson(&f, 0.0, FRAC_PI_2, 1e-14)
    }
}

#[allow(non_snake_case)]
pub fn spectrum_density(N: u32) -> Result<SpectrumDensity, EntropyError> {
    check_even_n(N, 4)?;
    Ok(SpectrumDensity { N, support: (0.0, 2f64.powi(4 - N as i32)) })
}

/// `Tr (λ − ρ_A)^{-1} = 2^{2N−5}(1 − √(1 − b/λ))` for real `λ` off the cut.
/// The `2^{N−2}/λ` pole of the zero eigenvalues is already contained in
/// this expression (it is the leading term of the expansion).
#[allow(non_snake_case)]
pub fn resolvent_trace(lambda: f64, N: u32) -> Result<f64, EntropyError> {
    check_even_n(N, 4)?;
    let b = 2f64.powi(4 - N as i32);
    if lambda > 0.0 && lambda <= b || lambda == 0.0 {
        return Err(EntropyError::OnBranchCut(lambda));
    }
    Ok(2f64.powi(2 * N as i32 - 5) * (1.0 - (1.0 - b / lambda).sqrt()))
}

/// Complex resolvent with the principal square root; the cut is `(0, b]`.
#[allow(non_snake_case)]
pub fn resolvent_trace_complex(z: Complex64, N: u32) -> Result<Complex64, EntropyError> {
    check_even_n(N, 4)?;
    let b = 2f64.powi(4 - N as i32);
    Ok((Complex64::new(1.0, 0.0) - (Complex64::new(1.0, 0.0) - b / z).sqrt()) * 2f64.powi(2 * N as i32 - 5))
}

/// `(1/2πi)[R(λ − iδ) − R(λ + iδ)]`.
#[allow(non_snake_case)]
pub fn density_from_discontinuity(lambda: f64, N: u32, delta: f64) -> Result<f64, EntropyError> {
    let lo = resolvent_trace_complex(Complex64::new(lambda, -delta), N)?;
    let hi = resolvent_trace_complex(Complex64::new(lambda, delta), N)?;
    Ok(((lo - hi) / Complex64::new(0.0, 2.0 * PI)).re)
}

pub(crate) fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    // Seed with panels so a lucky three-point agreement cannot stop early.
    const PANELS: usize = 16;
    let h = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (fa, fb, fm) = (f(lo), f(hi), f(0.5 * (lo + hi)));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            rec(f, lo, hi, fa, fm, fb, whole, tol / PANELS as f64, 40)
        })
        .sum()
}

/// Cyclic-saddle log bracket at integer order, for cross-checks against
/// the continued expression.
pub fn cyclic_saddle_log_bracket(n: u32, theta: f64) -> Result<f64, EntropyError> {
    let pair = PermutationPair::new(crate::permutation_saddles::Permutation::identity(n as usize));
    Ok(saddle_log_bracket(&pair, theta)?.ln())
}

/// Log of a single monitored cycle factor; re-exported for the CLI tables.
pub fn log_cycle_factor(n: usize, theta: f64) -> Result<f64, EntropyError> {
    Ok(monitored_cycle_log_factor(n, theta)?.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_3;

    #[test]
    fn cluster_examples() {
        let r = cluster_renyi(2, 8).unwrap();
        assert!((r.value - 5.0 * LN_2).abs() < 1e-13);
        let r = cluster_renyi(3, 10).unwrap();
        assert!((r.value - (8.0 * LN_2 - 0.5 * 5f64.ln())).abs() < 1e-13);
        assert!(cluster_renyi(1, 8).is_err());
        for n in 2..7u32 {
            let a = cluster_renyi(n, 12).unwrap().value;
            let b = cluster_renyi_continued(n as f64, 12).unwrap();
            assert!((a - b).abs() < 1e-11, "n={n}");
        }
        let vn = cluster_renyi_continued(1.0, 8).unwrap();
        assert!((vn - (8.0 * LN_2 - 2.0 * LN_2 - 0.5)).abs() < 1e-15);
        let near = cluster_renyi_continued(1.0 + 1e-6, 8).unwrap();
        assert!((near - vn).abs() < 1e-5);
    }

    #[test]
    fn sigma_examples() {
        assert!((vn_entropy_density(0.0).unwrap() - 2.0 * LN_2).abs() < 1e-15);
        assert_eq!(vn_entropy_density(FRAC_PI_2).unwrap(), 0.0);
        let expect = 6f64.ln() - 2f64.acosh() / 3f64.sqrt();
        assert!((vn_entropy_density(FRAC_PI_3).unwrap() - expect).abs() < 1e-14);
        assert!((expect - 1.0314).abs() < 1e-4);
        for th in [0.1, 0.5, FRAC_PI_3, 1.3, 1.55] {
            let a = vn_entropy_density(th).unwrap();
            let b = vn_entropy_density_symbolic(th).unwrap();
            let c = vn_entropy_density_fd(th, 1e-4).unwrap();
            assert!((a - b).abs() < 1e-12, "{th}");
            assert!((a - c).abs() < 1e-7, "{th}");
        }
    }

    #[test]
    fn near_critical_forms() {
        let eps = 0.01;
        let s = vn_entropy_density(FRAC_PI_2 - eps).unwrap();
        let a = near_critical_density(eps, NearCriticalForm::Expanded).unwrap();
        assert!((a - s).abs() / s < 0.05);
        assert!(near_critical_density(eps, NearCriticalForm::Printed).unwrap() < 0.0);
        assert!(near_critical_density(0.0, NearCriticalForm::Expanded).is_err());
        assert!(near_critical_density(0.31, NearCriticalForm::Expanded).is_err());
    }

    #[test]
    fn quasi_limits() {
        for n in 2..=5 {
            let r = quasi_entropy(n, FRAC_PI_2, 8, 2).unwrap();
            assert_eq!(r.decomposition.extensive, 0.0);
            assert_eq!(r.value, 0.0);
            // θ = 0: two decoupled unitary chains, σ(0)·N·L/2 = N L log 2.
            let r = quasi_entropy(n, 0.0, 8, 2).unwrap();
            assert!((r.decomposition.extensive - 16.0 * LN_2).abs() < 1e-12);
        }
    }

    #[test]
    fn quasi_two_saddle_sum() {
        // Independent direct summation in linear space.
        let (n, theta, nn, l) = (2u32, 0.6, 10u32, 2u32);
        let r = quasi_entropy(n, theta, nn, l).unwrap();
        assert_eq!(r.decomposition.saddles.len(), 2);
        let ct = theta.cos();
        let half = (theta / 2.0).cos();
        let cyc = |m: i32| {
            let ks: Vec<f64> = crate::special_functions::parity_momenta(m as usize);
            ks.iter().map(|k| 0.5 * (1.0 + ct * k.cos())).product::<f64>()
        };
        let mut sum = 0.0;
        for s in &r.decomposition.saddles {
            let prod: f64 = s.pair.all_cycle_lengths().iter().map(|&m| cyc(m as i32)).product();
            sum += (prod / half.powi(8)).powf(nn as f64 * l as f64 / 2.0);
        }
        let direct = (2f64.powi(l as i32) * sum).ln() / (1.0 - n as f64);
        assert!((r.value - direct).abs() < 1e-12 * direct.abs().max(1.0));
    }

    #[test]
    fn continuation_matches_cyclic_saddle() {
        for n in 2..=4 {
            for th in [0.2, 0.7, 1.3] {
                let a = continued_log_bracket(n as f64, th).unwrap();
                let b = cyclic_saddle_log_bracket(n, th).unwrap();
                assert!((a - b).abs() < 1e-10 * a.abs().max(1e-300) || (a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn unequal_cut_is_linear() {
        let th = 0.8;
        let s = vn_entropy_density(th).unwrap();
        for la in 1..5 {
            assert!((unequal_cut_entropy(1.0, th, 6, la).unwrap() - s * 6.0 * la as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn spectrum_moments() {
        for nn in [4u32, 6, 8, 10] {
            let d = spectrum_density(nn).unwrap();
            for k in 0..=5u32 {
                let expect = num_traits::ToPrimitive::to_f64(&catalan(k as u64)).unwrap() * 2f64.powf((1.0 - k as f64) * (nn as f64 - 2.0));
                let got = d.moment(k);
                assert!((got - expect).abs() < 1e-10 * expect, "N={nn} k={k}: {got} vs {expect}");
            }
        }
        assert!(spectrum_density(3).is_err());
    }

    #[test]
    fn resolvent_properties() {
        let nn = 6;
        let b = 2f64.powi(4 - nn as i32);
        let big = 1e8;
        let r = resolvent_trace(big, nn).unwrap();
        assert!((r * big - 2f64.powi(nn as i32 - 2)).abs() < 1e-6);
        assert!(resolvent_trace(b / 2.0, nn).is_err());
        let d = spectrum_density(nn).unwrap();
        for frac in [0.1, 0.4, 0.8] {
            let lam = frac * b;
            let disc = density_from_discontinuity(lam, nn, 1e-8).unwrap();
            assert!((disc - d.density(lam)).abs() < 1e-5 * d.density(lam));
        }
        // Laurent coefficients in 1/λ by a contour integral on |w| = r.
        let m = 256;
        let rad = 0.5 / b;
        for k in 0..=5 {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..m {
                let phi = 2.0 * PI * j as f64 / m as f64;
                let w = Complex64::from_polar(rad, phi);
                let val = resolvent_trace_complex(w.inv(), nn).unwrap();
                acc += val / w.powi(k + 1);
            }
            let coeff = (acc / m as f64).re;
            let expect = num_traits::ToPrimitive::to_f64(&catalan(k as u64)).unwrap() * 2f64.powf((1.0 - k as f64) * (nn as f64 - 2.0));
            assert!((coeff - expect).abs() < 1e-9 * expect, "k={k}: {coeff} vs {expect}");
        }
    }
}
