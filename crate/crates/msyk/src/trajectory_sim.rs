//! State-vector Monte Carlo of the monitored Brownian chains at desk
//! scale: Brownian unitaries, weak L-R parity measurements with Born
//! sampling, and trajectory-averaged half-cut entanglement.
//!
//! Mode layout is site-major, `[ψ_{x,L,1..N}, ψ_{x,R,1..N}, (χ copies)]`
//! per site, so Jordan-Wigner qubits never straddle a site. The entangling
//! cut is always the first half of the modes: the first `L/2` sites for
//! even `L`, and chain L against chain R for a single site.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::fock_oracle::{epr_for_pairs, CMatrix, FockError, MajoranaAlgebra, PauliWord, SparseOperator};
use crate::model_core::{validate, ModelParams, ParamError};

/// Cap on physical Majorana modes `2·L·N`.
pub const SIM_MODE_CAP: usize = 16;
/// Cap when every mode carries a reference copy.
pub const DOUBLED_MODE_CAP: usize = 20;
/// Cap on exhaustively enumerated measurement events.
pub const MAX_ENUMERATED_EVENTS: usize = 16;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error("{modes} Majorana modes exceed the simulation cap of {cap}")]
    TooLarge { modes: usize, cap: usize },
    #[error("measurement strength s² = μ·dt = {0} exceeds 0.1")]
    StrongMeasurement(f64),
    #[error("measurement strength must lie in [0, 1], got {0}")]
    StrengthRange(f64),
    #[error("state has zero norm after measurement")]
    ZeroNorm,
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    /// Every L-R pair in the `π⁻ = 1` eigenstate; dark under monitoring.
    #[default]
    ParityProduct,
    /// Each mode maximally entangled with a reference copy.
    Epr,
    /// Haar-like random state in the even total-parity sector.
    RandomPure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: ModelParams,
    pub dt: f64,
    pub steps: usize,
    pub n_traj: usize,
    pub seed: u64,
    pub initial_state: InitialState,
}

impl SimConfig {
    /// Measurement strength `s = √(μ·dt)`.
    pub fn strength(&self) -> f64 {
        (self.params.mu * self.dt).sqrt()
    }

    pub fn check(&self) -> Result<(), SimError> {
        check_params(&self.params)?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SimError::Invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if self.steps == 0 || self.n_traj == 0 {
            return Err(SimError::Invalid("steps and n_traj must be positive".into()));
        }
        let s2 = self.params.mu * self.dt;
        if s2 > 0.1 {
            return Err(SimError::StrongMeasurement(s2));
        }
        Layout::new(self.params.L as usize, self.params.N as usize, self.initial_state == InitialState::Epr)?;
        Ok(())
    }
}

/// Like [`validate`] but admits `J = U = 0`, the pure-monitoring limit.
fn check_params(p: &ModelParams) -> Result<(), SimError> {
    match validate(*p) {
        Ok(_) | Err(ParamError::NoCoupling) => Ok(()),
        Err(e) => Err(e.into()),
    }
}

/// Mode bookkeeping and the prebuilt operator words of one system size.
#[derive(Debug, Clone)]
pub struct Layout {
    sites: usize,
    flavours: usize,
    doubled: bool,
    alg: MajoranaAlgebra,
}

impl Layout {
    pub fn new(sites: usize, flavours: usize, doubled: bool) -> Result<Self, SimError> {
        if sites == 0 || flavours == 0 || flavours % 2 == 1 {
            return Err(SimError::Invalid(format!("need L ≥ 1 and even N ≥ 2, got L={sites}, N={flavours}")));
        }
        let physical = 2 * sites * flavours;
        let (modes, cap) = if doubled { (2 * physical, DOUBLED_MODE_CAP) } else { (physical, SIM_MODE_CAP) };
        if modes > cap {
            return Err(SimError::TooLarge { modes, cap });
        }
        let alg = MajoranaAlgebra::with_cap(modes, cap)?;
        Ok(Self { sites, flavours, doubled, alg })
    }

    fn per_site(&self) -> usize {
        if self.doubled {
            4 * self.flavours
        } else {
            2 * self.flavours
        }
    }

    /// Mode index of `ψ_{x, chain, i}` (chain 0 = L, 1 = R).
    pub fn psi(&self, x: usize, chain: usize, i: usize) -> usize {
        x * self.per_site() + chain * self.flavours + i
    }

    /// Reference copy of `ψ_{x, chain, i}`.
    pub fn chi(&self, x: usize, chain: usize, i: usize) -> usize {
        assert!(self.doubled, "layout has no reference copies");
        x * self.per_site() + 2 * self.flavours + chain * self.flavours + i
    }

    pub fn algebra(&self) -> &MajoranaAlgebra {
        &self.alg
    }

    pub fn dim(&self) -> usize {
        self.alg.dim()
    }

    /// Qubits on the `A` side of the cut.
    pub fn cut_qubits(&self) -> usize {
        self.alg.modes() / 4
    }

    /// `2iψ_{x,L,i}ψ_{x,R,i}`, with eigenvalue `+1` on the `π⁻` sector.
    pub fn pair_parity(&self, x: usize, i: usize) -> PauliWord {
        self.alg.monomial(&[self.psi(x, 0, i), self.psi(x, 1, i)]).scale(Complex64::new(0.0, 2.0))
    }

    /// Parity of chain `chain` at site `x`, `Π_i 2iψ_{2i}ψ_{2i+1}`.
    pub fn chain_parity(&self, x: usize, chain: usize) -> PauliWord {
        let idx: Vec<usize> = (0..self.flavours).map(|i| self.psi(x, chain, i)).collect();
        let sign = Complex64::new(0.0, 2.0).powu((self.flavours / 2) as u32);
        self.alg.monomial(&idx).scale(sign)
    }

    /// Interaction words with their Hermitian phase, and the variance
    /// class (`false` for two-body, `true` for `q`-body).
    fn hamiltonian_words(&self, q: usize) -> Vec<(Complex64, bool, PauliWord)> {
        let n = self.flavours;
        let mut out = Vec::new();
        for x in 0..self.sites {
            for chain in 0..2 {
                for i in 0..n {
                    for j in i + 1..n {
                        out.push((I, false, self.alg.monomial(&[self.psi(x, chain, i), self.psi(x, chain, j)])));
                    }
                }
            }
        }
        if self.sites >= 2 && q / 2 <= n {
            let phase = I.powu((q / 2) as u32);
            let left = combinations(n, q / 2);
            for x in 0..self.sites {
                let y = (x + 1) % self.sites;
                for chain in 0..2 {
                    for a in &left {
                        for b in &left {
                            let idx: Vec<usize> = a
                                .iter()
                                .map(|&i| self.psi(x, chain, i))
                                .chain(b.iter().map(|&i| self.psi(y, chain, i)))
                                .collect();
                            out.push((phase, true, self.alg.monomial(&idx)));
                        }
                    }
                }
            }
        }
        out
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Per-step coupling variances `(two-body, q-body)`: the white-noise
/// strengths divided by `dt`.
pub fn coupling_variances(p: &ModelParams, dt: f64) -> (f64, f64) {
    let n = p.N as f64;
    let q = p.q as usize;
    let two = 4.0 * p.J / (n * dt);
    let many = 2f64.powi(q as i32) * factorial(q / 2).powi(2) * p.U / (q as f64 * n.powi(q as i32 - 1) * dt);
    (two, many)
}

/// Sampler of Brownian Hamiltonians for a fixed layout.
#[derive(Debug, Clone)]
pub struct BrownianSampler {
    words: Vec<(Complex64, bool, PauliWord)>,
    sd: (f64, f64),
    dim: usize,
}

impl BrownianSampler {
    pub fn new(layout: &Layout, p: &ModelParams, dt: f64) -> Self {
        let (v2, vq) = coupling_variances(p, dt);
        Self { words: layout.hamiltonian_words(p.q as usize), sd: (v2.sqrt(), vq.sqrt()), dim: layout.dim() }
    }

    /// One realization of `H` with independent Gaussian couplings.
    pub fn sample(&self, rng: &mut impl Rng) -> SparseOperator {
        let terms: Vec<(Complex64, PauliWord)> = self
            .words
            .iter()
            .filter_map(|(phase, many, w)| {
                let sd = if *many { self.sd.1 } else { self.sd.0 };
                (sd > 0.0).then(|| {
                    let g: f64 = rng.sample(StandardNormal);
                    (phase * (g * sd), w.clone())
                })
            })
            .collect();
        SparseOperator::from_terms(self.dim, terms)
    }
}

/// `exp(−iH·dt)` applied to a state.
pub fn evolve(h: &SparseOperator, dt: f64, state: &[Complex64]) -> Vec<Complex64> {
    h.expm_apply(Complex64::new(0.0, -dt), state)
}

/// Dense `exp(−iH·dt)` for one sampled `H`; small layouts only.
pub fn sample_unitary_step(layout: &Layout, p: &ModelParams, dt: f64, rng: &mut impl Rng) -> Result<CMatrix, SimError> {
    check_params(p)?;
    if layout.dim() > 256 {
        return Err(SimError::TooLarge { modes: layout.alg.modes(), cap: 16 });
    }
    let h = BrownianSampler::new(layout, p, dt).sample(rng);
    let d = layout.dim();
    let mut u = CMatrix::zeros(d, d);
    for c in 0..d {
        let mut e = vec![ZERO; d];
        e[c] = Complex64::new(1.0, 0.0);
        for (r, v) in evolve(&h, dt, &e).into_iter().enumerate() {
            u[(r, c)] = v;
        }
    }
    Ok(u)
}

/// Outcome `1` or `2` of one Kraus pair.
pub type Outcome = u8;

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

/// `(π⁻φ, π⁺φ)` for the pair parity word `p`.
fn split_parity(p: &PauliWord, v: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let pv = p.apply(v);
    let minus = v.iter().zip(&pv).map(|(a, b)| (a + b) * 0.5).collect();
    let plus = v.iter().zip(&pv).map(|(a, b)| (a - b) * 0.5).collect();
    (minus, plus)
}

/// `K_ν φ` without renormalisation.
pub fn apply_kraus(p: &PauliWord, s: f64, outcome: Outcome, v: &[Complex64]) -> Vec<Complex64> {
    let (minus, plus) = split_parity(p, v);
    match outcome {
        1 => {
            let c = (1.0 - s * s).sqrt();
            minus.iter().zip(&plus).map(|(m, q)| m + q * c).collect()
        }
        _ => plus.into_iter().map(|q| q * s).collect(),
    }
}

/// Dense Kraus pair for one parity word, for completeness checks.
pub fn kraus_matrices(p: &PauliWord, s: f64) -> (CMatrix, CMatrix) {
    let pd = p.to_dense();
    let id = CMatrix::identity(pd.nrows(), pd.ncols());
    let minus = (&id + &pd) * Complex64::new(0.5, 0.0);
    let plus = (&id - &pd) * Complex64::new(0.5, 0.0);
    let k1 = &minus + &plus * Complex64::new((1.0 - s * s).sqrt(), 0.0);
    let k2 = plus * Complex64::new(s, 0.0);
    (k1, k2)
}

/// Result of one measurement layer.
#[derive(Debug, Clone)]
pub struct MeasurementLayer {
    pub state: Vec<Complex64>,
    pub outcomes: Vec<Outcome>,
    /// Probability of this outcome string given the input state.
    pub weight_factor: f64,
}

/// Sequential Born sampling of every site-flavour pair, renormalising
/// after each outcome.
pub fn apply_measurement_layer(
    layout: &Layout,
    state: &[Complex64],
    s: f64,
    rng: &mut impl Rng,
) -> Result<MeasurementLayer, SimError> {
    if !(0.0..=1.0).contains(&s) {
        return Err(SimError::StrengthRange(s));
    }
    let mut v = state.to_vec();
    let mut outcomes = Vec::with_capacity(layout.sites * layout.flavours);
    let mut weight = 1.0;
    for x in 0..layout.sites {
        for i in 0..layout.flavours {
            let p = layout.pair_parity(x, i);
            let (minus, plus) = split_parity(&p, &v);
            let total = norm_sqr(&v);
            if total <= 0.0 {
                return Err(SimError::ZeroNorm);
            }
            let p2 = s * s * norm_sqr(&plus) / total;
            let u: f64 = rng.random();
            let (outcome, next, prob) = if u < p2 {
                (2, plus.into_iter().map(|q| q * s).collect::<Vec<_>>(), p2)
            } else {
                let c = (1.0 - s * s).sqrt();
                (1, minus.iter().zip(&plus).map(|(m, q)| m + q * c).collect(), 1.0 - p2)
            };
            let nrm = norm_sqr(&next).sqrt();
            if nrm <= 0.0 {
                return Err(SimError::ZeroNorm);
            }
            v = next.into_iter().map(|z| z / nrm).collect();
            outcomes.push(outcome);
            weight *= prob;
        }
    }
    Ok(MeasurementLayer { state: v, outcomes, weight_factor: weight })
}

/// Von Neumann entropy (natural log) of the first `cut` qubits.
pub fn half_cut_entropy(state: &[Complex64], cut: usize) -> f64 {
    let rows = 1usize << cut;
    let cols = state.len() / rows;
    let m = CMatrix::from_fn(rows, cols, |lo, hi| state[lo + hi * rows]);
    let norm = norm_sqr(state);
    m.singular_values()
        .iter()
        .map(|sv| sv * sv / norm)
        .filter(|&p| p > 1e-300)
        .map(|p| -p * p.ln())
        .sum()
}

/// Counter-based stream for `(seed, trajectory, step, slot)`.
fn stream_rng(seed: u64, traj: u64, step: u64, slot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(traj);
    rng.set_word_pos(((step as u128) << 40) | ((slot as u128) << 32));
    rng
}

const SLOT_UNITARY: u64 = 0;
const SLOT_MEASURE: u64 = 1;
const SLOT_INIT: u64 = 2;

/// Initial state vector.
pub fn initial_state(layout: &Layout, kind: InitialState, rng: &mut impl Rng) -> Vec<Complex64> {
    let alg = layout.algebra();
    match kind {
        InitialState::ParityProduct => {
            // ½ − iψ_Rψ_L = π⁻ of each pair.
            let (mut r, mut l) = (Vec::new(), Vec::new());
            for x in 0..layout.sites {
                for i in 0..layout.flavours {
                    r.push(layout.psi(x, 1, i));
                    l.push(layout.psi(x, 0, i));
                }
            }
            if layout.doubled {
                // The reference copies pair up among themselves.
                for x in 0..layout.sites {
                    for i in 0..layout.flavours {
                        r.push(layout.chi(x, 1, i));
                        l.push(layout.chi(x, 0, i));
                    }
                }
            }
            epr_for_pairs(alg, &r, &l).vector().to_vec()
        }
        InitialState::Epr => {
            let (mut psi, mut chi) = (Vec::new(), Vec::new());
            for x in 0..layout.sites {
                for c in 0..2 {
                    for i in 0..layout.flavours {
                        psi.push(layout.psi(x, c, i));
                        chi.push(layout.chi(x, c, i));
                    }
                }
            }
            epr_for_pairs(alg, &psi, &chi).vector().to_vec()
        }
        InitialState::RandomPure => {
            let mut v: Vec<Complex64> = (0..layout.dim())
                .map(|b| {
                    if b.count_ones() % 2 == 0 {
                        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                    } else {
                        ZERO
                    }
                })
                .collect();
            let n = norm_sqr(&v).sqrt();
            v.iter_mut().for_each(|z| *z /= n);
            v
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRecord {
    /// Outcomes per step, site-major then flavour.
    pub outcomes: Vec<Vec<Outcome>>,
    /// Born probability of the whole outcome string.
    pub weight: f64,
    /// Half-cut entropy at every step, starting with the initial state.
    pub entropy_series: Vec<f64>,
}

/// One Born-sampled trajectory; deterministic in `(config.seed, traj)`.
pub fn run_trajectory(config: &SimConfig, traj: u64) -> Result<TrajectoryRecord, SimError> {
    config.check()?;
    let layout = Layout::new(config.params.L as usize, config.params.N as usize, config.initial_state == InitialState::Epr)?;
    let sampler = BrownianSampler::new(&layout, &config.params, config.dt);
    run_with(&layout, &sampler, config, traj)
}

fn run_with(layout: &Layout, sampler: &BrownianSampler, config: &SimConfig, traj: u64) -> Result<TrajectoryRecord, SimError> {
    let s = config.strength();
    let cut = layout.cut_qubits();
    let mut v = initial_state(layout, config.initial_state, &mut stream_rng(config.seed, traj, 0, SLOT_INIT));
    let mut entropy_series = Vec::with_capacity(config.steps + 1);
    entropy_series.push(half_cut_entropy(&v, cut));
    let mut outcomes = Vec::with_capacity(config.steps);
    let mut weight = 1.0;
    for step in 0..config.steps as u64 {
        let h = sampler.sample(&mut stream_rng(config.seed, traj, step, SLOT_UNITARY));
        v = evolve(&h, config.dt, &v);
        if s > 0.0 {
            let layer = apply_measurement_layer(layout, &v, s, &mut stream_rng(config.seed, traj, step, SLOT_MEASURE))?;
            v = layer.state;
            weight *= layer.weight_factor;
            outcomes.push(layer.outcomes);
        } else {
            let n = norm_sqr(&v).sqrt();
            v.iter_mut().for_each(|z| *z /= n);
            outcomes.push(vec![1; layout.sites * layout.flavours]);
        }
        entropy_series.push(half_cut_entropy(&v, cut));
    }
    Ok(TrajectoryRecord { outcomes, weight, entropy_series })
}

/// All trajectories of a configuration, in trajectory order.
pub fn run_ensemble(config: &SimConfig) -> Result<Vec<TrajectoryRecord>, SimError> {
    config.check()?;
    let layout = Layout::new(config.params.L as usize, config.params.N as usize, config.initial_state == InitialState::Epr)?;
    let sampler = BrownianSampler::new(&layout, &config.params, config.dt);
    (0..config.n_traj as u64).into_par_iter().map(|t| run_with(&layout, &sampler, config, t)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyCurve {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    /// Batch-means standard error; `None` for a single trajectory.
    pub stderr: Option<Vec<f64>>,
}

/// Number of batches for the batch-means error estimate.
const BATCHES: usize = 10;

fn batch_stderr(samples: &[f64]) -> f64 {
    let b = BATCHES.min(samples.len());
    let size = samples.len() / b;
    let means: Vec<f64> = (0..b).map(|k| samples[k * size..(k + 1) * size].iter().sum::<f64>() / size as f64).collect();
    let m = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (b as f64 - 1.0);
    (var / b as f64).sqrt()
}

/// Mean entropy over Born-sampled trajectories. Born sampling makes the
/// weighted average a plain mean.
pub fn estimate_entropy_curve(config: &SimConfig) -> Result<EntropyCurve, SimError> {
    let records = run_ensemble(config)?;
    Ok(curve_from_records(&records, config.dt))
}

pub fn curve_from_records(records: &[TrajectoryRecord], dt: f64) -> EntropyCurve {
    let len = records[0].entropy_series.len();
    let n = records.len();
    let column = |k: usize| records.iter().map(|r| r.entropy_series[k]).collect::<Vec<_>>();
    let mean = (0..len).map(|k| column(k).iter().sum::<f64>() / n as f64).collect();
    let stderr = (n >= 2).then(|| (0..len).map(|k| batch_stderr(&column(k))).collect());
    EntropyCurve { times: (0..len).map(|k| k as f64 * dt).collect(), mean, stderr }
}

/// Per-trajectory time average of the entropy over the last
/// `1 − burn_in` fraction of steps.
pub fn steady_state_samples(records: &[TrajectoryRecord], burn_in: f64) -> Vec<f64> {
    records
        .iter()
        .map(|r| {
            let start = ((r.entropy_series.len() as f64) * burn_in).floor() as usize;
            let tail = &r.entropy_series[start..];
            tail.iter().sum::<f64>() / tail.len() as f64
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    /// One-sided p-value for `mean(a) > mean(b)`.
    pub p_value: f64,
}

pub fn welch_greater(a: &[f64], b: &[f64]) -> WelchTest {
    let stats = |x: &[f64]| {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        (n, m, x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0))
    };
    let (na, ma, va) = stats(a);
    let (nb, mb, vb) = stats(b);
    let (sa, sb) = (va / na, vb / nb);
    let t = (ma - mb) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let p_value = match StudentsT::new(0.0, 1.0, df) {
        Ok(dist) => 1.0 - dist.cdf(t),
        Err(_) => f64::NAN,
    };
    WelchTest { t, df, p_value }
}

/// One fully specified outcome branch of a fixed-disorder process.
#[derive(Debug, Clone)]
pub struct Branch {
    pub outcomes: Vec<Outcome>,
    /// Unnormalised `K_ν ⋯ U|φ⟩`; its squared norm is the Born weight.
    pub state: Vec<Complex64>,
}

impl Branch {
    pub fn weight(&self) -> f64 {
        norm_sqr(&self.state)
    }
}

/// Every outcome branch of `unitaries.len()` steps of unitary then
/// measurement, for fixed Hamiltonians.
pub fn enumerate_branches(
    layout: &Layout,
    hamiltonians: &[SparseOperator],
    dt: f64,
    s: f64,
    init: &[Complex64],
) -> Result<Vec<Branch>, SimError> {
    let events = hamiltonians.len() * layout.sites * layout.flavours;
    if events > MAX_ENUMERATED_EVENTS {
        return Err(SimError::Invalid(format!("{events} measurement events exceed {MAX_ENUMERATED_EVENTS}")));
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(SimError::StrengthRange(s));
    }
    let mut branches = vec![Branch { outcomes: Vec::new(), state: init.to_vec() }];
    for h in hamiltonians {
        for b in &mut branches {
            b.state = evolve(h, dt, &b.state);
        }
        for x in 0..layout.sites {
            for i in 0..layout.flavours {
                let p = layout.pair_parity(x, i);
                branches = branches
                    .into_iter()
                    .flat_map(|b| {
                        [1, 2].map(|nu| {
                            let mut outcomes = b.outcomes.clone();
                            outcomes.push(nu);
                            Branch { outcomes, state: apply_kraus(&p, s, nu, &b.state) }
                        })
                    })
                    .collect();
            }
        }
    }
    Ok(branches)
}

/// Eigenvalues of the reduced density matrix of the first `cut` qubits of
/// an unnormalised pure state.
fn reduced_spectrum(state: &[Complex64], cut: usize) -> Vec<f64> {
    let rows = 1usize << cut;
    let cols = state.len() / rows;
    let m = CMatrix::from_fn(rows, cols, |lo, hi| state[lo + hi * rows]);
    let rho = &m * m.adjoint();
    rho.symmetric_eigenvalues().iter().map(|&e| e.max(0.0)).collect()
}

/// Quasi entropy `log(Σ_ν Tr ρ̃_{ν,A}ⁿ / Σ_ν (Tr ρ̃_ν)ⁿ)/(1−n)` of a
/// branch set, at real `n ≠ 1`.
pub fn branch_quasi_entropy(branches: &[Branch], cut: usize, n: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for b in branches {
        num += reduced_spectrum(&b.state, cut).iter().filter(|&&e| e > 0.0).map(|e| e.powf(n)).sum::<f64>();
        den += b.weight().powf(n);
    }
    (num / den).ln() / (1.0 - n)
}

/// `n → 1` limit of [`branch_quasi_entropy`] by the symmetric average of
/// `n = 1 ± h`.
pub fn branch_quasi_entropy_limit(branches: &[Branch], cut: usize, h: f64) -> f64 {
    0.5 * (branch_quasi_entropy(branches, cut, 1.0 + h) + branch_quasi_entropy(branches, cut, 1.0 - h))
}

/// `Σ_ν Tr ρ̃_ν · S_A(ν)`.
pub fn born_average_entropy(branches: &[Branch], cut: usize) -> f64 {
    branches.iter().map(|b| if b.weight() > 0.0 { b.weight() * half_cut_entropy(&b.state, cut) } else { 0.0 }).sum()
}

/// Fixed-disorder data for the exhaustive identity check: layout, sampled
/// Hamiltonians and a random even-parity initial state.
pub fn sample_process(config: &SimConfig) -> Result<(Layout, Vec<SparseOperator>, Vec<Complex64>), SimError> {
    config.check()?;
    let layout = Layout::new(config.params.L as usize, config.params.N as usize, config.initial_state == InitialState::Epr)?;
    let sampler = BrownianSampler::new(&layout, &config.params, config.dt);
    let hs = (0..config.steps as u64).map(|k| sampler.sample(&mut stream_rng(config.seed, 0, k, SLOT_UNITARY))).collect();
    let init = initial_state(&layout, config.initial_state, &mut stream_rng(config.seed, 0, 0, SLOT_INIT));
    Ok((layout, hs, init))
}
