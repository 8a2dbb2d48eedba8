//! Replica-diagonal `n = 2` saddle equations of motion: the six coupled
//! ODEs, their quadratic invariants, fixed-step integration and the
//! closed-form hyperbolic and elliptic solutions.
//!
//! The late-time fixed point `(x1, x2, z1) = (1, 0, 0)` is a saddle with
//! rates `±2√(U(2J+U))`. The boundary-value solution rides its stable
//! manifold, so plain forward integration in `f64` peels off after roughly
//! ten time units. [`shoot_separatrix`] instead bisects the initial
//! condition in double-double arithmetic.

use serde::Serialize;
use std::ops::{Add, Mul, Neg, Sub};
use thiserror::Error;

use crate::special_functions::{jacobi_sn_cn_dn, SpecialError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("step {dt} exceeds the stability bound {bound}")]
    StepTooLarge { dt: f64, bound: f64 },
    #[error("U must be positive for a kink scale, got {0}")]
    NoKinkScale(f64),
    #[error("J must be positive, got {0}")]
    NonPositiveJ(f64),
    #[error("need 0 < c1 and 0 < c2 <= 1, got c1={c1}, c2={c2}")]
    EllipticDomain { c1: f64, c2: f64 },
    #[error("time must be non-negative and finite")]
    BadTime,
    #[error(transparent)]
    Special(#[from] SpecialError),
}

/// Arithmetic needed by the integrator, so the same right-hand side runs
/// in `f64` and in double-double.
pub trait Real: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self> {
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
}

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`, about 32 digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        (s, b - (s - a))
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let (s, e) = Self::two_sum(self.hi, o.hi);
        let (t, f) = Self::two_sum(self.lo, o.lo);
        let (s, e) = Self::quick_two_sum(s, e + t);
        let (hi, lo) = Self::quick_two_sum(s, e + f);
        DoubleDouble { hi, lo }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        DoubleDouble { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = Self::quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }
}

impl Real for DoubleDouble {
    fn from_f64(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }
    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// `A`-site coefficients `(x1, x2, z1)` and `Ā`-site `(y1, y2, w1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeState<T = f64> {
    pub x1: T,
    pub x2: T,
    pub z1: T,
    pub y1: T,
    pub y2: T,
    pub w1: T,
}

impl<T: Real> OdeState<T> {
    fn axpy(self, h: T, d: OdeState<T>) -> Self {
        OdeState {
            x1: self.x1 + h * d.x1,
            x2: self.x2 + h * d.x2,
            z1: self.z1 + h * d.z1,
            y1: self.y1 + h * d.y1,
            y2: self.y2 + h * d.y2,
            w1: self.w1 + h * d.w1,
        }
    }

    pub fn to_f64(self) -> OdeState<f64> {
        OdeState {
            x1: self.x1.to_f64(),
            x2: self.x2.to_f64(),
            z1: self.z1.to_f64(),
            y1: self.y1.to_f64(),
            y2: self.y2.to_f64(),
            w1: self.w1.to_f64(),
        }
    }

    /// `(x1² + x2² − z1², y1² + y2² − w1²)`.
    pub fn invariants(&self) -> (T, T) {
        (
            self.x1 * self.x1 + self.x2 * self.x2 - self.z1 * self.z1,
            self.y1 * self.y1 + self.y2 * self.y2 - self.w1 * self.w1,
        )
    }
}

impl OdeState<f64> {
    /// `Ā` frozen at `y2 = −1`, the sector of the boundary-value problem.
    pub fn reduced(x1: f64, x2: f64, z1: f64) -> Self {
        OdeState { x1, x2, z1, y1: 0.0, y2: -1.0, w1: 0.0 }
    }
}

/// The six equations of motion.
pub fn ode_rhs<T: Real>(s: &OdeState<T>, j: f64, u: f64) -> OdeState<T> {
    let (j4, u2) = (T::from_f64(4.0 * j), T::from_f64(2.0 * u));
    let (y1s, y2s, w1s) = (s.y1 * s.y1, s.y2 * s.y2, s.w1 * s.w1);
    let (x1s, x2s, z1s) = (s.x1 * s.x1, s.x2 * s.x2, s.z1 * s.z1);
    OdeState {
        x1: j4 * s.x2 * s.z1 + u2 * s.x2 * s.z1 * (y1s + w1s),
        x2: -(j4 * s.x1 * s.z1) - u2 * s.x1 * s.z1 * (y2s + w1s),
        z1: u2 * s.x1 * s.x2 * (y1s - y2s),
        y1: j4 * s.y2 * s.w1 + u2 * s.y2 * s.w1 * (x1s + z1s),
        y2: -(j4 * s.y1 * s.w1) - u2 * s.y1 * s.w1 * (x2s + z1s),
        w1: u2 * s.y1 * s.y2 * (x1s - x2s),
    }
}

fn rk4_step<T: Real>(s: OdeState<T>, j: f64, u: f64, dt: f64) -> OdeState<T> {
    let h = T::from_f64(dt);
    let half = T::from_f64(0.5 * dt);
    let k1 = ode_rhs(&s, j, u);
    let k2 = ode_rhs(&s.axpy(half, k1), j, u);
    let k3 = ode_rhs(&s.axpy(half, k2), j, u);
    let k4 = ode_rhs(&s.axpy(h, k3), j, u);
    let sixth = T::from_f64(dt / 6.0);
    let two = T::from_f64(2.0);
    let comb = |a: T, b: T, c: T, d: T| sixth * (a + two * b + two * c + d);
    OdeState {
        x1: s.x1 + comb(k1.x1, k2.x1, k3.x1, k4.x1),
        x2: s.x2 + comb(k1.x2, k2.x2, k3.x2, k4.x2),
        z1: s.z1 + comb(k1.z1, k2.z1, k3.z1, k4.z1),
        y1: s.y1 + comb(k1.y1, k2.y1, k3.y1, k4.y1),
        y2: s.y2 + comb(k1.y2, k2.y2, k3.y2, k4.y2),
        w1: s.w1 + comb(k1.w1, k2.w1, k3.w1, k4.w1),
    }
}

/// Kink rate `√(U(2J+U))`.
pub fn kink_rate(j: f64, u: f64) -> f64 {
    (u * (2.0 * j + u)).sqrt()
}

fn check_step(j: f64, u: f64, dt: f64) -> Result<(), DynamicsError> {
    let rate = kink_rate(j, u).max(j.abs()).max(1e-300);
    let bound = 0.01 / rate;
    if !(dt > 0.0 && dt <= bound) {
        return Err(DynamicsError::StepTooLarge { dt, bound });
    }
    Ok(())
}

/// Classical RK4 at fixed step; returns the state at every step,
/// including the initial one.
#[allow(non_snake_case)]
pub fn integrate(state0: OdeState, j: f64, u: f64, T: f64, dt: f64) -> Result<Vec<OdeState>, DynamicsError> {
    check_step(j, u, dt)?;
    if !(T >= 0.0) || !T.is_finite() {
        return Err(DynamicsError::BadTime);
    }
    let steps = (T / dt).round() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut s = state0;
    out.push(s);
    for _ in 0..steps {
        s = rk4_step(s, j, u, dt);
        out.push(s);
    }
    Ok(out)
}

/// Offset of the kink from `t = 0` fixing `x2(0) = −1`:
/// `arccosh((J+U)/J) / (4√(U(2J+U)))`.
pub fn shift_t0(j: f64, u: f64) -> Result<f64, DynamicsError> {
    if !(j > 0.0) {
        return Err(DynamicsError::NonPositiveJ(j));
    }
    if !(u > 0.0) {
        return Err(DynamicsError::NoKinkScale(u));
    }
    Ok(((j + u) / j).acosh() / (4.0 * kink_rate(j, u)))
}

/// Infinite-time solution: a tanh kink in `x1` with sech bumps in
/// `x2` and `z1`.
pub fn hyperbolic_solution(t: f64, j: f64, u: f64) -> Result<(f64, f64, f64), DynamicsError> {
    if !(t >= 0.0) {
        return Err(DynamicsError::BadTime);
    }
    let t0 = shift_t0(j, u)?;
    let arg = 2.0 * kink_rate(j, u) * (t - t0);
    let sech = 1.0 / arg.cosh();
    Ok((arg.tanh(), -((2.0 * j + u) / (2.0 * j)).sqrt() * sech, -(u / (2.0 * j)).sqrt() * sech))
}

/// Branch used for `x2` in the elliptic solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EllipticBranch {
    /// `x2 ∝ cn`, which solves the equations of motion.
    #[default]
    Cn,
    /// `x2 ∝ (1 − sn)^{1/2}`, kept only to exhibit its residual.
    OneMinusSn,
    /// `x2 ∝ (1 − sn²)^{1/2} = |cn|`; agrees with `Cn` until `cn` turns negative.
    OneMinusSnSquared,
}

/// `(sn, cn, dn)` for any `m ≥ 0`; `m > 1` goes through the reciprocal
/// modulus transformation.
pub fn jacobi_any_parameter(u: f64, m: f64) -> Result<(f64, f64, f64), DynamicsError> {
    if m <= 1.0 {
        return Ok(jacobi_sn_cn_dn(u, m)?);
    }
    let k = m.sqrt();
    let (sn, cn, dn) = jacobi_sn_cn_dn(k * u, 1.0 / m)?;
    Ok((sn / k, dn, cn))
}

/// Finite-time elliptic solution with parameter `m = c1/c2` and the same
/// kink offset as the hyperbolic one. `c1 > c2` is accepted (the
/// boundary-value example in the literature uses `c2 = 1 − 10⁻⁷ < c1 = 1`).
pub fn elliptic_solution(
    t: f64,
    j: f64,
    u: f64,
    c1: f64,
    c2: f64,
    branch: EllipticBranch,
) -> Result<(f64, f64, f64), DynamicsError> {
    if !(c1 > 0.0 && c2 > 0.0 && c2 <= 1.0) {
        return Err(DynamicsError::EllipticDomain { c1, c2 });
    }
    if !(t >= 0.0) {
        return Err(DynamicsError::BadTime);
    }
    let t0 = shift_t0(j, u)?;
    let arg = 2.0 * (u * (2.0 * j + u) * c2).sqrt() * (t - t0);
    let (sn, cn, dn) = jacobi_any_parameter(arg, c1 / c2)?;
    let amp2 = ((2.0 * j + u) * c1 / (2.0 * j)).sqrt();
    let x2 = match branch {
        EllipticBranch::Cn => -amp2 * cn,
        EllipticBranch::OneMinusSn => -amp2 * (1.0 - sn).max(0.0).sqrt(),
        EllipticBranch::OneMinusSnSquared => -amp2 * (1.0 - sn * sn).max(0.0).sqrt(),
    };
    Ok((c1.sqrt() * sn, x2, -(u * c2 / (2.0 * j)).sqrt() * dn))
}

/// The four solutions related by flipping the signs of two of the three
/// `A`-site coefficients; the identity comes first.
pub fn sign_related_solutions((x1, x2, z1): (f64, f64, f64)) -> [(f64, f64, f64); 4] {
    [(x1, x2, z1), (-x1, -x2, z1), (-x1, x2, -z1), (x1, -x2, -z1)]
}

/// Max-norm ODE residual of a closed-form solution on `[t_lo, t_hi]`,
/// from central differences with step `h`.
pub fn closed_form_residual(
    f: impl Fn(f64) -> Result<(f64, f64, f64), DynamicsError>,
    j: f64,
    u: f64,
    t_lo: f64,
    t_hi: f64,
    samples: usize,
    h: f64,
) -> Result<f64, DynamicsError> {
    let mut worst: f64 = 0.0;
    for i in 0..=samples {
        let t = t_lo + (t_hi - t_lo) * i as f64 / samples as f64;
        let t = t.max(h);
        let (a, b) = (f(t + h)?, f(t - h)?);
        let (x1, x2, z1) = f(t)?;
        let d = ode_rhs(&OdeState::reduced(x1, x2, z1), j, u);
        let r = [(a.0 - b.0) / (2.0 * h) - d.x1, (a.1 - b.1) / (2.0 * h) - d.x2, (a.2 - b.2) / (2.0 * h) - d.z1];
        worst = r.iter().fold(worst, |w, v| w.max(v.abs()));
    }
    Ok(worst)
}

/// Result of the boundary-value shooting.
#[derive(Debug, Clone, Serialize)]
pub struct SeparatrixTrajectory {
    pub dt: f64,
    /// Initial `x1 = z1` that lands on the fixed point.
    pub x1_initial: f64,
    pub states: Vec<OdeState>,
}

/// Which side of the stable manifold a trajectory leaves on, or `None` if
/// it is still on it at `T`. The unstable coordinate near `(1,0,0)` is
/// `2w·x2 − (4J+2U)·z1`.
fn departure<T: Real>(mut s: OdeState<T>, j: f64, u: f64, t_end: f64, dt: f64) -> f64 {
    let w = kink_rate(j, u);
    let steps = (t_end / dt).round() as usize;
    let xi = |s: &OdeState<T>| 2.0 * w * s.x2.to_f64() - (4.0 * j + 2.0 * u) * s.z1.to_f64();
    for _ in 0..steps {
        s = rk4_step(s, j, u, dt);
        let v = xi(&s);
        if v.abs() > 1e-3 {
            return v;
        }
    }
    xi(&s)
}

/// Boundary-value trajectory from `x2(0) = −1` onto `(1, 0, 0)` with the
/// invariant fixed to 1 (so `z1(0) = x1(0)`). The initial `x1` is bisected
/// in double-double arithmetic until the discrete RK4 flow stays on the
/// stable manifold up to `T`.
#[allow(non_snake_case)]
pub fn shoot_separatrix(j: f64, u: f64, T: f64, dt: f64) -> Result<SeparatrixTrajectory, DynamicsError> {
    check_step(j, u, dt)?;
    let (x1h, _, _) = hyperbolic_solution(0.0, j, u)?;
    let dd = DoubleDouble::from_f64;
    let start = |a: DoubleDouble| OdeState { x1: a, x2: dd(-1.0), z1: a, y1: dd(0.0), y2: dd(-1.0), w1: dd(0.0) };
    // Bracket around the exact-flow value.
    let mut lo = dd(x1h - 0.05);
    let mut hi = dd(x1h + 0.05);
    let side_lo = departure(start(lo), j, u, T, dt).signum();
    let side_hi = departure(start(hi), j, u, T, dt).signum();
    if side_lo == side_hi {
        // The separatrix is not bracketed; fall back to the closed form.
        lo = dd(x1h);
        hi = dd(x1h);
    }
    for _ in 0..120 {
        let mid = (lo + hi) * dd(0.5);
        if mid == lo || mid == hi {
            break;
        }
        let v = departure(start(mid), j, u, T, dt);
        if v == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if v.signum() == side_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = (lo + hi) * dd(0.5);
    let steps = (T / dt).round() as usize;
    let mut s = start(a);
    let mut states = Vec::with_capacity(steps + 1);
    states.push(s.to_f64());
    for _ in 0..steps {
        s = rk4_step(s, j, u, dt);
        states.push(s.to_f64());
    }
    Ok(SeparatrixTrajectory { dt, x1_initial: a.to_f64(), states })
}
