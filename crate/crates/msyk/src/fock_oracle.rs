//! Brute-force Fock-space machinery: Jordan-Wigner Majoranas, EPR states,
//! the replica cyclic permutation operator and exact transition amplitudes.
//!
//! This is the independent check for every closed form in
//! [`crate::amplitudes`]; it never uses Gaussian-state shortcuts.
//!
//! Conventions: Majorana `2q` and `2q+1` live on qubit `q`, which is bit
//! `q` of the basis index. `{γ_i, γ_j} = δ_ij`, so `γ_i² = ½`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::collections::BTreeMap;
use thiserror::Error;

use crate::permutation_saddles::canonical_cycle;

pub type CMatrix = DMatrix<Complex64>;

/// Mode cap for dense matrices (dimension 2^8).
pub const DENSE_MODE_CAP: usize = 16;
/// Mode cap for state-vector propagation (dimension 2^12).
pub const VECTOR_MODE_CAP: usize = 24;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("number of Majorana modes must be even, got {0}")]
    OddModes(usize),
    #[error("{modes} Majorana modes exceed the cap of {cap}")]
    TooManyModes { modes: usize, cap: usize },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("density matrix has odd-parity components (norm {0:e})")]
    OddDensityMatrix(f64),
}

/// Operator mapping `|b⟩ → phase[b] |b ⊕ flip⟩`. Majorana monomials in
/// the Jordan-Wigner basis all have this form.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliWord {
    flip: usize,
    phase: Vec<Complex64>,
}

impl PauliWord {
    pub fn identity(dim: usize) -> Self {
        Self { flip: 0, phase: vec![ONE; dim] }
    }

    pub fn dim(&self) -> usize {
        self.phase.len()
    }

    /// `self · rhs`.
    pub fn mul(&self, rhs: &PauliWord) -> PauliWord {
        let phase = (0..rhs.dim()).map(|b| self.phase[b ^ rhs.flip] * rhs.phase[b]).collect();
        PauliWord { flip: self.flip ^ rhs.flip, phase }
    }

    pub fn scale(&self, c: Complex64) -> PauliWord {
        PauliWord { flip: self.flip, phase: self.phase.iter().map(|p| p * c).collect() }
    }

    pub fn adjoint(&self) -> PauliWord {
        let mut phase = vec![ZERO; self.dim()];
        for (b, p) in self.phase.iter().enumerate() {
            phase[b ^ self.flip] = p.conj();
        }
        PauliWord { flip: self.flip, phase }
    }

    /// `out += c · self · v`.
    pub fn apply_add(&self, c: Complex64, v: &[Complex64], out: &mut [Complex64]) {
        for (b, (&vb, &pb)) in v.iter().zip(&self.phase).enumerate() {
            out[b ^ self.flip] += c * pb * vb;
        }
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; v.len()];
        self.apply_add(ONE, v, &mut out);
        out
    }

    pub fn to_dense(&self) -> CMatrix {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for b in 0..d {
            m[(b ^ self.flip, b)] += self.phase[b];
        }
        m
    }
}

/// Sum of Pauli words, merged by flip mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    words: Vec<PauliWord>,
}

impl SparseOperator {
    pub fn zero(dim: usize) -> Self {
        Self { dim, words: Vec::new() }
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Complex64, PauliWord)>) -> Self {
        let mut by_flip: BTreeMap<usize, Vec<Complex64>> = BTreeMap::new();
        for (c, w) in terms {
            assert_eq!(w.dim(), dim, "word dimension mismatch");
            let acc = by_flip.entry(w.flip).or_insert_with(|| vec![ZERO; dim]);
            for (a, p) in acc.iter_mut().zip(&w.phase) {
                *a += c * p;
            }
        }
        let words = by_flip
            .into_iter()
            .filter(|(_, ph)| ph.iter().any(|p| p.norm() > 0.0))
            .map(|(flip, phase)| PauliWord { flip, phase })
            .collect();
        Self { dim, words }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; v.len()];
        for w in &self.words {
            w.apply_add(ONE, v, &mut out);
        }
        out
    }

    /// Upper bound on the operator norm: sum over words of max |phase|.
    pub fn norm_bound(&self) -> f64 {
        self.words.iter().map(|w| w.phase.iter().map(|p| p.norm()).fold(0.0, f64::max)).sum()
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for w in &self.words {
            for b in 0..self.dim {
                m[(b ^ w.flip, b)] += w.phase[b];
            }
        }
        m
    }

    /// `exp(z·self)·v` by a scaled Taylor series; exact to rounding.
    pub fn expm_apply(&self, z: Complex64, v: &[Complex64]) -> Vec<Complex64> {
        let bound = self.norm_bound() * z.norm();
        let steps = bound.ceil().max(1.0) as usize;
        let zs = z / steps as f64;
        let mut x = v.to_vec();
        for _ in 0..steps {
            let mut term = x.clone();
            let mut sum = x.clone();
            for k in 1..200 {
                let next = self.apply(&term);
                let f = zs / k as f64;
                term = next.into_iter().map(|t| t * f).collect();
                let tn: f64 = term.iter().map(|t| t.norm_sqr()).sum::<f64>().sqrt();
                for (s, t) in sum.iter_mut().zip(&term) {
                    *s += t;
                }
                let sn: f64 = sum.iter().map(|t| t.norm_sqr()).sum::<f64>().sqrt();
                if tn <= 1e-17 * sn {
                    break;
                }
            }
            x = sum;
        }
        x
    }
}

/// Jordan-Wigner Majorana operators on `m/2` qubits.
#[derive(Debug, Clone)]
pub struct MajoranaAlgebra {
    m: usize,
    ops: Vec<PauliWord>,
}

pub fn build_majorana_ops(m: usize) -> Result<MajoranaAlgebra, FockError> {
    MajoranaAlgebra::with_cap(m, DENSE_MODE_CAP)
}

impl MajoranaAlgebra {
    /// Like [`build_majorana_ops`] but with an explicit mode cap, for
    /// callers that only ever act on state vectors.
    pub fn with_cap(m: usize, cap: usize) -> Result<Self, FockError> {
        if m % 2 == 1 {
            return Err(FockError::OddModes(m));
        }
        if m > cap {
            return Err(FockError::TooManyModes { modes: m, cap });
        }
        let qubits = m / 2;
        let dim = 1usize << qubits;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut ops = Vec::with_capacity(m);
        for q in 0..qubits {
            let lower = (1usize << q) - 1;
            let string = |b: usize| if (b & lower).count_ones().is_multiple_of(2) { s } else { -s };
            let x: Vec<Complex64> = (0..dim).map(|b| Complex64::new(string(b), 0.0)).collect();
            let y: Vec<Complex64> = (0..dim)
                .map(|b| {
                    let sign = if (b >> q) & 1 == 0 { 1.0 } else { -1.0 };
                    I * (sign * string(b))
                })
                .collect();
            ops.push(PauliWord { flip: 1 << q, phase: x });
            ops.push(PauliWord { flip: 1 << q, phase: y });
        }
        Ok(Self { m, ops })
    }

    pub fn modes(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        1 << (self.m / 2)
    }

    pub fn word(&self, i: usize) -> &PauliWord {
        &self.ops[i]
    }

    pub fn matrix(&self, i: usize) -> CMatrix {
        self.ops[i].to_dense()
    }

    /// `γ_{i_1} γ_{i_2} ⋯` (leftmost factor first).
    pub fn monomial(&self, idx: &[usize]) -> PauliWord {
        let mut w = PauliWord::identity(self.dim());
        for &i in idx.iter().rev() {
            w = self.ops[i].mul(&w);
        }
        w
    }

    /// `½ Σ_ij γ_{modes[i]} A_ij γ_{modes[j]}`.
    pub fn quadratic(&self, modes: &[usize], a: &CMatrix) -> SparseOperator {
        assert_eq!(a.nrows(), modes.len());
        let mut terms = Vec::new();
        for (i, &mi) in modes.iter().enumerate() {
            for (j, &mj) in modes.iter().enumerate() {
                let c = a[(i, j)];
                if c != ZERO {
                    terms.push((c * 0.5, self.monomial(&[mi, mj])));
                }
            }
        }
        SparseOperator::from_terms(self.dim(), terms)
    }

    /// Fermion parity `Π_q (-1)^{n_q}` as a diagonal word.
    pub fn parity(&self) -> PauliWord {
        let phase = (0..self.dim())
            .map(|b| if b.count_ones() % 2 == 0 { ONE } else { -ONE })
            .collect();
        PauliWord { flip: 0, phase }
    }
}

/// Normalised state annihilated by `ψ_j + iχ_j` for each listed pair.
#[derive(Debug, Clone)]
pub struct EprState {
    vector: Vec<Complex64>,
}

impl EprState {
    pub fn vector(&self) -> &[Complex64] {
        &self.vector
    }
}

/// EPR state of `pairs` (ψ, χ) pairs laid out as `[ψ_1..ψ_p, χ_1..χ_p]`.
pub fn epr_state(pairs: usize) -> Result<EprState, FockError> {
    if pairs == 0 {
        return Err(FockError::Invalid("pairs must be at least 1".into()));
    }
    let alg = build_majorana_ops(2 * pairs)?;
    let psi: Vec<usize> = (0..pairs).collect();
    let chi: Vec<usize> = (pairs..2 * pairs).collect();
    Ok(epr_for_pairs(&alg, &psi, &chi))
}

/// EPR state for arbitrary (ψ, χ) mode pairs inside an algebra.
pub fn epr_for_pairs(alg: &MajoranaAlgebra, psi: &[usize], chi: &[usize]) -> EprState {
    assert_eq!(psi.len(), chi.len());
    let dim = alg.dim();
    // c c† = ½ − iψχ projects onto the empty c mode.
    let projectors: Vec<SparseOperator> = psi
        .iter()
        .zip(chi)
        .map(|(&p, &c)| {
            SparseOperator::from_terms(
                dim,
                [(Complex64::new(0.5, 0.0), PauliWord::identity(dim)), (-I, alg.monomial(&[p, c]))],
            )
        })
        .collect();
    for b in 0..dim {
        let mut v = vec![ZERO; dim];
        v[b] = ONE;
        for p in &projectors {
            v = p.apply(&v);
        }
        let norm: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            let pivot = v.iter().copied().fold(ZERO, |m, x| if x.norm() > m.norm() + 1e-12 { x } else { m });
            let rot = pivot.conj() / pivot.norm() / norm;
            return EprState { vector: v.into_iter().map(|x| x * rot).collect() };
        }
    }
    unreachable!("every basis state is annihilated; EPR projector cannot vanish")
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Replica space of `n` copies of `N` (ψ, χ) pairs, laid out replica-major
/// with ψ before χ: replica α occupies `[ψ^α_1..ψ^α_N, χ^α_1..χ^α_N]`.
#[derive(Debug, Clone)]
#[allow(non_snake_case)]
pub struct ReplicaSpace {
    pub n: usize,
    pub N: usize,
    alg: MajoranaAlgebra,
}

impl ReplicaSpace {
    #[allow(non_snake_case)]
    pub fn new(n: usize, N: usize, cap: usize) -> Result<Self, FockError> {
        if n == 0 || N == 0 {
            return Err(FockError::Invalid("n and N must be positive".into()));
        }
        let alg = MajoranaAlgebra::with_cap(2 * n * N, cap)?;
        Ok(Self { n, N, alg })
    }

    pub fn psi(&self, alpha: usize, i: usize) -> usize {
        alpha * 2 * self.N + i
    }

    pub fn chi(&self, alpha: usize, i: usize) -> usize {
        alpha * 2 * self.N + self.N + i
    }

    pub fn algebra(&self) -> &MajoranaAlgebra {
        &self.alg
    }

    pub fn epr(&self) -> EprState {
        let (psi, chi): (Vec<usize>, Vec<usize>) = (0..self.n)
            .flat_map(|a| (0..self.N).map(move |i| (a, i)))
            .map(|(a, i)| (self.psi(a, i), self.chi(a, i)))
            .unzip();
        epr_for_pairs(&self.alg, &psi, &chi)
    }

    /// Factors `exp(π/2 ψ^α_i ψ^{α+1}_i) = (1 + 2ψ^α_iψ^{α+1}_i)/√2` of the
    /// cyclic permutation operator restricted to `flavours`, leftmost first.
    fn cyclic_factors(&self, flavours: &[usize]) -> Vec<SparseOperator> {
        let dim = self.alg.dim();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut out = Vec::new();
        for &i in flavours {
            for a in 0..self.n - 1 {
                let w = self.alg.monomial(&[self.psi(a, i), self.psi(a + 1, i)]);
                out.push(SparseOperator::from_terms(
                    dim,
                    [(Complex64::new(s, 0.0), PauliWord::identity(dim)), (Complex64::new(2.0 * s, 0.0), w)],
                ));
            }
        }
        out
    }

    /// `M_cyc(A) v` for the subsystem made of `flavours`.
    pub fn apply_cyclic(&self, flavours: &[usize], v: &[Complex64]) -> Vec<Complex64> {
        let mut x = v.to_vec();
        for f in self.cyclic_factors(flavours).iter().rev() {
            x = f.apply(&x);
        }
        x
    }

    pub fn cyclic_dense(&self, flavours: &[usize]) -> CMatrix {
        let dim = self.alg.dim();
        let mut m = CMatrix::identity(dim, dim);
        for f in self.cyclic_factors(flavours) {
            m *= f.to_dense();
        }
        m
    }
}

/// `M_cyc` on `n` replicas of `N` ψ-flavours (with their χ partners).
#[allow(non_snake_case)]
pub fn cyclic_permutation_operator(n: usize, N: usize) -> Result<CMatrix, FockError> {
    let space = ReplicaSpace::new(n, N, DENSE_MODE_CAP)?;
    let flavours: Vec<usize> = (0..N).collect();
    Ok(space.cyclic_dense(&flavours))
}

/// The signed image predicted for `M ψ^α M†`: `Σ_β sgn(α−β) δ^{α+1,β} ψ^β`,
/// returned as `(β, sign)` with 0-based replica labels.
pub fn conjugation_image(alpha: usize, n: usize) -> (usize, f64) {
    let beta = (alpha + 1) % n;
    let sign = match alpha.cmp(&beta) {
        std::cmp::Ordering::Greater => 1.0,
        std::cmp::Ordering::Less => -1.0,
        std::cmp::Ordering::Equal => 0.0,
    };
    (beta, sign)
}

/// Number of chains in a cycle amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chains {
    One,
    Two,
}

impl Chains {
    pub fn count(self) -> usize {
        match self {
            Chains::One => 1,
            Chains::Two => 2,
        }
    }
}

/// Single-particle coupling matrix `A` of the cycle Hamiltonian
/// `H = ½ (ψ, χ, …) A (ψ, χ, …)ᵀ`, in the mode order
/// `[ψ, χ]` (one chain) or `[ψ_L, χ_L, ψ_R, χ_R]` (two chains).
pub fn cycle_coupling_matrix(cycle_length: usize, theta: f64, scale: f64, chains: Chains) -> CMatrix {
    let n = cycle_length;
    let tau = canonical_cycle(n).expect("cycle length validated by caller").map(|x| Complex64::new(x, 0.0));
    let tt = tau.transpose();
    match chains {
        Chains::One => {
            let mut a = CMatrix::zeros(2 * n, 2 * n);
            a.view_mut((0, n), (n, n)).copy_from(&(&tt * (-I * scale)));
            a.view_mut((n, 0), (n, n)).copy_from(&(&tau * (I * scale)));
            a
        }
        Chains::Two => {
            let lam = scale * theta.cos();
            let mu = scale * theta.sin();
            let e = CMatrix::identity(n, n);
            let mut a = CMatrix::zeros(4 * n, 4 * n);
            let mut put = |r: usize, c: usize, m: CMatrix| a.view_mut((r * n, c * n), (n, n)).copy_from(&m);
            put(0, 1, &tt * (-I * lam));
            put(0, 2, &e * (I * mu));
            put(1, 0, &tau * (I * lam));
            put(1, 3, &e * (-I * mu));
            put(2, 0, &e * (-I * mu));
            put(2, 3, &tt * (-I * lam));
            put(3, 1, &e * (I * mu));
            put(3, 2, &tau * (I * lam));
            a
        }
    }
}

/// Hamiltonian, EPR state and dimension for a cycle amplitude.
pub struct CycleProblem {
    pub hamiltonian: SparseOperator,
    pub epr: EprState,
}

pub fn cycle_problem(cycle_length: usize, theta: f64, scale: f64, chains: Chains) -> Result<CycleProblem, FockError> {
    if cycle_length == 0 {
        return Err(FockError::Invalid("cycle length must be at least 1".into()));
    }
    let n = cycle_length;
    let modes = 2 * chains.count() * n;
    let alg = MajoranaAlgebra::with_cap(modes, VECTOR_MODE_CAP)?;
    let a = cycle_coupling_matrix(n, theta, scale, chains);
    let all: Vec<usize> = (0..modes).collect();
    let hamiltonian = alg.quadratic(&all, &a);
    let (psi, chi): (Vec<usize>, Vec<usize>) = match chains {
        Chains::One => ((0..n).collect(), (n..2 * n).collect()),
        Chains::Two => ((0..n).chain(2 * n..3 * n).collect(), (n..2 * n).chain(3 * n..4 * n).collect()),
    };
    let epr = epr_for_pairs(&alg, &psi, &chi);
    Ok(CycleProblem { hamiltonian, epr })
}

/// `⟨EPR| e^{TH} |EPR⟩` for one canonical cycle, by explicit Fock-space
/// exponentiation. Dense Padé exponential up to 2^8 states, Taylor
/// propagation of the EPR vector above that.
#[allow(non_snake_case)]
pub fn oracle_cycle_amplitude(
    cycle_length: usize,
    theta: f64,
    scale: f64,
    T: f64,
    chains: Chains,
) -> Result<f64, FockError> {
    let prob = cycle_problem(cycle_length, theta, scale, chains)?;
    let v = prob.epr.vector();
    let amp = if prob.hamiltonian.dim() <= 1 << (DENSE_MODE_CAP / 2) {
        let e = (prob.hamiltonian.to_dense() * Complex64::new(T, 0.0)).exp();
        let ev: Vec<Complex64> = (0..v.len()).map(|r| (0..v.len()).map(|c| e[(r, c)] * v[c]).sum()).collect();
        inner(v, &ev)
    } else {
        inner(v, &prob.hamiltonian.expm_apply(Complex64::new(T, 0.0), v))
    };
    if amp.im.abs() > 1e-9 * amp.re.abs().max(1.0) {
        return Err(FockError::Invalid(format!("amplitude has imaginary part {}", amp.im)));
    }
    Ok(amp.re)
}

/// Large-`T` coefficient `lim e^{−E_max T}⟨EPR|e^{TH}|EPR⟩`, with `E_max`
/// itself extracted from the propagated amplitude.
pub fn oracle_leading_coefficient(cycle_length: usize, theta: f64, scale: f64, chains: Chains) -> Result<(f64, f64), FockError> {
    let prob = cycle_problem(cycle_length, theta, scale, chains)?;
    let v = prob.epr.vector();
    let gap_scale = scale.abs().max(1e-300);
    let t1 = 24.0 / gap_scale;
    let dt = 1.0 / gap_scale;
    let w1 = prob.hamiltonian.expm_apply(Complex64::new(t1, 0.0), v);
    let a1 = inner(v, &w1).re;
    let a2 = inner(v, &prob.hamiltonian.expm_apply(Complex64::new(dt, 0.0), &w1)).re;
    let e_max = (a2 / a1).ln() / dt;
    Ok(((a1.ln() - e_max * t1).exp(), e_max))
}

fn monomial_basis(n_modes: usize) -> Vec<Vec<usize>> {
    (0..1usize << n_modes)
        .map(|mask| (0..n_modes).filter(|i| mask >> i & 1 == 1).collect())
        .collect()
}

/// Replica-trace evaluation of `Tr[(Tr_Ā ρ)^n]` next to the direct
/// partial-trace value. `rho` acts on `N` Majoranas (`2^{N/2}` states) and
/// must be parity even; `A` is the first `subsystem_qubits` complex modes.
#[allow(non_snake_case)]
pub fn oracle_renyi_trace(rho: &CMatrix, n: usize, subsystem_qubits: usize) -> Result<(f64, f64), FockError> {
    let d = rho.nrows();
    if d == 0 || !d.is_power_of_two() || rho.ncols() != d {
        return Err(FockError::Invalid("rho must be square with power-of-two dimension".into()));
    }
    if n == 0 {
        return Err(FockError::Invalid("n must be at least 1".into()));
    }
    let qubits = d.trailing_zeros() as usize;
    if subsystem_qubits > qubits {
        return Err(FockError::Invalid("subsystem larger than system".into()));
    }
    let N = 2 * qubits;
    let small = MajoranaAlgebra::with_cap(N, VECTOR_MODE_CAP)?;
    // Expand rho in Majorana monomials; Tr(γ_S† γ_S) = d / 2^{|S|}.
    let mut coeffs = Vec::new();
    let mut odd = 0.0;
    for s in monomial_basis(N) {
        let w = small.monomial(&s);
        let dense = w.to_dense();
        let c = (dense.adjoint() * rho).trace() / (d as f64 / (1u64 << s.len()) as f64);
        if c.norm() > 0.0 {
            if s.len() % 2 == 1 {
                odd += c.norm_sqr();
            }
            coeffs.push((c, s));
        }
    }
    if odd.sqrt() > 1e-12 {
        return Err(FockError::OddDensityMatrix(odd.sqrt()));
    }
    let space = ReplicaSpace::new(n, N, VECTOR_MODE_CAP)?;
    let alg = space.algebra();
    let epr = space.epr();
    let flavours: Vec<usize> = (0..2 * subsystem_qubits).collect();
    let mut x = space.apply_cyclic(&flavours, epr.vector());
    for alpha in (0..n).rev() {
        let terms = coeffs.iter().map(|(c, s)| {
            let idx: Vec<usize> = s.iter().map(|&i| space.psi(alpha, i)).collect();
            (*c, alg.monomial(&idx))
        });
        x = SparseOperator::from_terms(alg.dim(), terms).apply(&x);
    }
    let replica = inner(epr.vector(), &x) * (d as f64).powi(n as i32);

    let da = 1usize << subsystem_qubits;
    let db = d / da;
    let mut rho_a = CMatrix::zeros(da, da);
    for i in 0..da {
        for j in 0..da {
            rho_a[(i, j)] = (0..db).map(|b| rho[(i + da * b, j + da * b)]).sum();
        }
    }
    let mut p = CMatrix::identity(da, da);
    for _ in 0..n {
        p *= &rho_a;
    }
    Ok((replica.re, p.trace().re))
}
