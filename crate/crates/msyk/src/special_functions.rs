//! Special functions used by the amplitude and entropy layers.
//!
//! The hypergeometric family `₂F₁(x, −x; ½; z)` is only ever evaluated
//! through its Chebyshev form `T_x(1−2z)`, which is also what makes real
//! order `x` meaningful.

use nalgebra::DMatrix;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecialError {
    #[error("Chebyshev argument {0} < -1 is outside the supported domain")]
    ChebyshevDomain(f64),
    #[error("hypergeometric argument z = {0} > 1/2 is outside the supported domain")]
    Hyp2f1Domain(f64),
    #[error("elliptic parameter m = {0} outside [0, 1]")]
    EllipticParameter(f64),
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("matrix is not antisymmetric (max |A + A^T| = {0:e})")]
    NotSkew(f64),
    #[error("Pfaffian of odd dimension {0}")]
    OddDimension(usize),
    #[error("non-finite input")]
    NonFinite,
}

/// `T_x(a)` for real order `x` and `a ≥ −1`.
pub fn chebyshev_t(x: f64, a: f64) -> Result<f64, SpecialError> {
    if !x.is_finite() || !a.is_finite() {
        return Err(SpecialError::NonFinite);
    }
    if a < -1.0 {
        return Err(SpecialError::ChebyshevDomain(a));
    }
    if a <= 1.0 {
        Ok((x * a.acos()).cos())
    } else {
        Ok((x * a.acosh()).cosh())
    }
}

/// `∂T_x(a)/∂x`, the order derivative used by the replica limit.
pub fn chebyshev_t_order_derivative(x: f64, a: f64) -> Result<f64, SpecialError> {
    if !x.is_finite() || !a.is_finite() {
        return Err(SpecialError::NonFinite);
    }
    if a < -1.0 {
        return Err(SpecialError::ChebyshevDomain(a));
    }
    if a <= 1.0 {
        let t = a.acos();
        Ok(-t * (x * t).sin())
    } else {
        let t = a.acosh();
        Ok(t * (x * t).sinh())
    }
}

/// `₂F₁(x, −x; ½; z)` evaluated as `T_x(1−2z)`.
pub fn hyp2f1_spectral(x: f64, z: f64) -> Result<f64, SpecialError> {
    if !z.is_finite() {
        return Err(SpecialError::NonFinite);
    }
    if z > 0.5 {
        return Err(SpecialError::Hyp2f1Domain(z));
    }
    chebyshev_t(x, 1.0 - 2.0 * z)
}

/// Jacobi `sn`, `cn`, `dn` with parameter `m = k²`, by descending Landen
/// (arithmetic-geometric mean) transformation.
pub fn jacobi_sn_cn_dn(u: f64, m: f64) -> Result<(f64, f64, f64), SpecialError> {
    if !u.is_finite() || !m.is_finite() {
        return Err(SpecialError::NonFinite);
    }
    if !(0.0..=1.0).contains(&m) {
        return Err(SpecialError::EllipticParameter(m));
    }
    if m == 0.0 {
        return Ok((u.sin(), u.cos(), 1.0));
    }
    if m == 1.0 {
        let sech = 1.0 / u.cosh();
        return Ok((u.tanh(), sech, sech));
    }
    const MAX_ITER: usize = 32;
    let mut a = [0.0f64; MAX_ITER + 1];
    let mut c = [0.0f64; MAX_ITER + 1];
    a[0] = 1.0;
    let mut b = (1.0 - m).sqrt();
    c[0] = m.sqrt();
    let mut n = 0;
    while c[n].abs() > f64::EPSILON * a[n] && n < MAX_ITER {
        let an = a[n];
        a[n + 1] = 0.5 * (an + b);
        c[n + 1] = 0.5 * (an - b);
        b = (an * b).sqrt();
        n += 1;
    }
    let mut phi = (1u64 << n) as f64 * a[n] * u;
    for k in (1..=n).rev() {
        phi = 0.5 * (phi + (c[k] / a[k] * phi.sin()).asin());
    }
    let sn = phi.sin();
    let cn = phi.cos();
    // 1 − m sn² written as a sum of non-negative terms.
    let dn = ((1.0 - m) + m * cn * cn).sqrt();
    Ok((sn, cn, dn))
}

/// `(sn, dn)` with parameter `m = k²`.
pub fn jacobi_sn_dn(u: f64, m: f64) -> Result<(f64, f64), SpecialError> {
    jacobi_sn_cn_dn(u, m).map(|(sn, _, dn)| (sn, dn))
}

/// Real antisymmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix(DMatrix<f64>);

impl SkewMatrix {
    pub const TOLERANCE: f64 = 1e-12;

    pub fn new(a: DMatrix<f64>) -> Result<Self, SpecialError> {
        if a.nrows() != a.ncols() {
            return Err(SpecialError::NotSquare(a.nrows(), a.ncols()));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(SpecialError::NonFinite);
        }
        let asym = (&a + a.transpose()).amax();
        if asym > Self::TOLERANCE {
            return Err(SpecialError::NotSkew(asym));
        }
        Ok(Self(a))
    }

    /// Builds from the strictly upper triangle listed row by row.
    pub fn from_upper(dim: usize, upper: &[f64]) -> Result<Self, SpecialError> {
        assert_eq!(upper.len(), dim * dim.saturating_sub(1) / 2, "upper triangle length");
        let mut a = DMatrix::zeros(dim, dim);
        let mut it = upper.iter();
        for i in 0..dim {
            for j in i + 1..dim {
                let v = *it.next().unwrap();
                a[(i, j)] = v;
                a[(j, i)] = -v;
            }
        }
        Self::new(a)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Pivots smaller than this are treated as an exactly singular matrix.
pub const PFAFFIAN_PIVOT_TOL: f64 = 1e-13;

/// Pfaffian by Parlett-Reid tridiagonalisation with partial pivoting.
pub fn pfaffian(a: &SkewMatrix) -> Result<f64, SpecialError> {
    let n = a.dim();
    if n % 2 == 1 {
        return Err(SpecialError::OddDimension(n));
    }
    let mut m = a.0.clone();
    let mut pf = 1.0;
    let mut k = 0;
    while k + 1 < n {
        let mut kp = k + 1;
        for i in k + 2..n {
            if m[(i, k)].abs() > m[(kp, k)].abs() {
                kp = i;
            }
        }
        if kp != k + 1 {
            m.swap_rows(k + 1, kp);
            m.swap_columns(k + 1, kp);
            pf = -pf;
        }
        let pivot = m[(k, k + 1)];
        if pivot.abs() < PFAFFIAN_PIVOT_TOL {
            return Ok(0.0);
        }
        pf *= pivot;
        if k + 2 < n {
            let tau: Vec<f64> = (k + 2..n).map(|j| m[(k, j)] / pivot).collect();
            let col: Vec<f64> = (k + 2..n).map(|i| m[(i, k + 1)]).collect();
            for (ii, i) in (k + 2..n).enumerate() {
                for (jj, j) in (k + 2..n).enumerate() {
                    m[(i, j)] += tau[ii] * col[jj] - col[ii] * tau[jj];
                }
            }
        }
        k += 2;
    }
    Ok(pf)
}

/// Momenta of a length-`n` ring: `2jπ/n` for odd `n` (periodic) and
/// `(2j−1)π/n` for even `n` (antiperiodic), symmetric about zero.
pub fn parity_momenta(n: usize) -> Vec<f64> {
    let nf = n as f64;
    if n % 2 == 1 {
        let h = (n as i64 - 1) / 2;
        (-h..=h).map(|j| 2.0 * j as f64 * PI / nf).collect()
    } else {
        let h = n as i64 / 2;
        (-h + 1..=h).map(|j| (2 * j - 1) as f64 * PI / nf).collect()
    }
}

/// `(Π_k (2a + 2cos k), 2(T_n(a) + 1))` over the parity momenta of `n`.
pub fn trig_product_identity(n: usize, a: f64) -> Result<(f64, f64), SpecialError> {
    let lhs = parity_momenta(n).iter().map(|k| 2.0 * a + 2.0 * k.cos()).product();
    let rhs = 2.0 * (chebyshev_t(n as f64, a)? + 1.0);
    Ok((lhs, rhs))
}
