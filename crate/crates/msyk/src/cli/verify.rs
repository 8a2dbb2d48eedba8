//! Quick oracle cross-checks behind `msyk verify`. The full-tolerance
//! versions live in the `acceptance` test target; these are sized to run
//! in a few seconds each.

use clap::ValueEnum;
use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, LN_2};

use crate::amplitudes::{monitored_cycle_amplitude, unitary_cycle_amplitude_finite};
use crate::entropy_observables::{
    cluster_renyi_continued, quasi_entropy, spectrum_density, vn_entropy_density, vn_entropy_density_fd,
    vn_entropy_density_symbolic,
};
use crate::fock_oracle::{conjugation_image, oracle_cycle_amplitude, oracle_renyi_trace, Chains, ReplicaSpace, DENSE_MODE_CAP};
use crate::model_core::{validate, ModelParams};
use crate::permutation_saddles::{catalan, enumerate_maximal_pairs, for_each_permutation, pair_cycle_count};
use crate::phase_solver::{classify_transition, solve_lambda, TransitionKind};
use crate::saddle_dynamics::{closed_form_residual, elliptic_solution, shoot_separatrix, EllipticBranch};
use crate::special_functions::trig_product_identity;
use crate::trajectory_sim::{
    born_average_entropy, branch_quasi_entropy_limit, enumerate_branches, kraus_matrices, sample_process, InitialState,
    Layout, SimConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Saddles,
    Amplitudes,
    Entropy,
    Phase,
    Dynamics,
    Special,
    Replica,
    Trajectory,
    All,
}

#[derive(Debug, Clone)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(suite: &'static str, name: &str, passed: bool, detail: String) -> Check {
    Check { suite, name: name.into(), passed, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

pub fn run_suite(suite: Suite, seed: u64) -> Vec<Check> {
    match suite {
        Suite::Saddles => saddles(),
        Suite::Amplitudes => amplitudes(),
        Suite::Entropy => entropy(),
        Suite::Phase => phase(),
        Suite::Dynamics => dynamics(),
        Suite::Special => special(),
        Suite::Replica => replica(seed),
        Suite::Trajectory => trajectory(seed),
        Suite::All => [
            Suite::Saddles,
            Suite::Amplitudes,
            Suite::Entropy,
            Suite::Phase,
            Suite::Dynamics,
            Suite::Special,
            Suite::Replica,
            Suite::Trajectory,
        ]
        .into_iter()
        .flat_map(|s| run_suite(s, seed))
        .collect(),
    }
}

fn saddles() -> Vec<Check> {
    (1..=6)
        .map(|n| {
            let mut brute = 0u64;
            for_each_permutation(n, |p| {
                if pair_cycle_count(p) == n + 1 {
                    brute += 1;
                }
            });
            let listed = enumerate_maximal_pairs(n).map(|v| v.len() as u64).unwrap_or(0);
            let c = catalan(n as u64).to_u64().unwrap_or(0);
            check("saddles", &format!("catalan_n{n}"), brute == c && listed == c, format!("listed={listed} brute={brute} catalan={c}"))
        })
        .collect()
}

fn amplitudes() -> Vec<Check> {
    let mut worst: f64 = 0.0;
    let mut err = None;
    for len in 1..=3 {
        for th in [0.0, 0.3, FRAC_PI_4, 1.2, FRAC_PI_2] {
            let one = (|| {
                let o = oracle_cycle_amplitude(len, th, 1.0, 1.0, Chains::One).ok()?;
                let c = unitary_cycle_amplitude_finite(len, 1.0, 1.0).ok()?;
                Some(rel(o * (-c.growth_exponent).exp(), c.stripped_value))
            })();
            let two = (|| {
                let o = oracle_cycle_amplitude(len, th, 1.0, 1.0, Chains::Two).ok()?;
                let c = monitored_cycle_amplitude(len, th, 1.0, 1.0).ok()?;
                Some(rel(o * (-c.growth_exponent).exp(), c.stripped_value))
            })();
            match (one, two) {
                (Some(a), Some(b)) => worst = worst.max(a).max(b),
                _ => err = Some(format!("evaluation failed at len={len} theta={th}")),
            }
        }
    }
    vec![check("amplitudes", "closed_form_vs_fock", err.is_none() && worst < 1e-9, err.unwrap_or(format!("max rel err {worst:e}")))]
}

fn entropy() -> Vec<Check> {
    let mut out = Vec::new();
    let s0 = vn_entropy_density(0.0).unwrap_or(f64::NAN);
    let s1 = vn_entropy_density(FRAC_PI_2).unwrap_or(f64::NAN);
    out.push(check(
        "entropy",
        "sigma_endpoints",
        (s0 - 2.0 * LN_2).abs() < 1e-12 && s1.abs() < 1e-12,
        format!("sigma(0)={s0:?} sigma(pi/2)={s1:?}"),
    ));
    let th = 0.7;
    let (a, b, c) = (
        vn_entropy_density(th).unwrap_or(f64::NAN),
        vn_entropy_density_symbolic(th).unwrap_or(f64::NAN),
        vn_entropy_density_fd(th, 1e-4).unwrap_or(f64::NAN),
    );
    out.push(check("entropy", "sigma_three_routes", (a - b).abs() < 1e-12 && (a - c).abs() < 1e-6, format!("{a:?} {b:?} {c:?}")));
    let n = 8;
    let cl = cluster_renyi_continued(1.0, n).unwrap_or(f64::NAN);
    let want = (n as f64 - 2.0) * LN_2 - 0.5;
    out.push(check("entropy", "cluster_vn_endpoint", (cl - want).abs() < 1e-12, format!("{cl:?} vs {want:?}")));
    let moments = spectrum_density(n)
        .map(|d| {
            (0..=5u32)
                .map(|k| {
                    let c = catalan(k as u64).to_f64().unwrap_or(f64::NAN);
                    rel(d.moment(k), c * 2f64.powi((1 - k as i32) * (n as i32 - 2)))
                })
                .fold(0.0, f64::max)
        })
        .unwrap_or(f64::NAN);
    out.push(check("entropy", "spectrum_moments", moments < 1e-8, format!("max rel err {moments:e}")));
    let ext: Vec<f64> =
        (2..=5).map(|n| quasi_entropy(n, FRAC_PI_2, 8, 2).map(|r| r.decomposition.extensive).unwrap_or(f64::NAN)).collect();
    out.push(check("entropy", "quasi_vanishes_at_pi_2", ext.iter().all(|&e| e == 0.0), format!("{ext:?}")));
    out
}

fn phase() -> Vec<Check> {
    let mut out = Vec::new();
    let free = validate(ModelParams { J: 1.0, U: 0.0, ..ModelParams::default() }).expect("valid");
    let worst = (1..=9)
        .map(|k| {
            let mu = k as f64 / 10.0;
            solve_lambda(&free, mu).map(|p| (p.lambdas[0] - (1.0 - mu * mu).sqrt()).abs()).unwrap_or(f64::NAN)
        })
        .fold(0.0, f64::max);
    out.push(check("phase", "free_fermion_branch", worst < 1e-10, format!("max err {worst:e}")));
    let strong = validate(ModelParams { J: 1.0, U: 1.0, ..ModelParams::default() }).expect("valid");
    let (passed, detail) = match classify_transition(&strong).kind {
        TransitionKind::FirstOrder { window_hi, .. } => ((window_hi - 1.0887).abs() < 1e-4, format!("mu*={window_hi:?}")),
        k => (false, format!("{k:?}")),
    };
    out.push(check("phase", "first_order_window", passed, detail));
    let weak = validate(ModelParams { J: 1.0, U: 0.1, ..ModelParams::default() }).expect("valid");
    let kind = classify_transition(&weak).kind;
    out.push(check("phase", "weak_u_continuous", matches!(kind, TransitionKind::Continuous { .. }), format!("{kind:?}")));
    out
}

fn dynamics() -> Vec<Check> {
    let mut out = Vec::new();
    match shoot_separatrix(1.0, 0.4, 20.0, 1e-3) {
        Ok(t) => {
            let last = t.states.last().copied().expect("non-empty trajectory");
            let dist = (last.x1 - 1.0).abs().max(last.x2.abs()).max(last.z1.abs());
            let drift = t.states.iter().map(|s| (s.invariants().0 - 1.0).abs()).fold(0.0, f64::max);
            out.push(check("dynamics", "separatrix", dist < 1e-6 && drift < 1e-8, format!("dist={dist:e} drift={drift:e}")));
        }
        Err(e) => out.push(check("dynamics", "separatrix", false, e.to_string())),
    }
    let r = closed_form_residual(|t| elliptic_solution(t, 1.0, 0.4, 1.0, 1.0 - 1e-7, EllipticBranch::Cn), 1.0, 0.4, 0.0, 20.0, 400, 1e-4)
        .unwrap_or(f64::NAN);
    out.push(check("dynamics", "elliptic_residual", r < 1e-6, format!("{r:e}")));
    out
}

fn special() -> Vec<Check> {
    let mut worst: f64 = 0.0;
    for n in 1..=20 {
        for a in [1.0, 1.5, 2.0, 5.0] {
            let e = trig_product_identity(n, a).map(|(l, r)| rel(l, r)).unwrap_or(f64::NAN);
            worst = worst.max(e);
        }
    }
    vec![check("special", "trig_product_identity", worst < 1e-9, format!("max rel err {worst:e}"))]
}

fn random_density(qubits: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let d = 1 << qubits;
    let g = DMatrix::from_fn(d, d, |r, c| {
        if (r.count_ones() + c.count_ones()) % 2 == 0 {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    rho / tr
}

fn replica(seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    let mut worst: f64 = 0.0;
    for n in 2..=3 {
        let space = ReplicaSpace::new(n, 2, DENSE_MODE_CAP).expect("within cap");
        let m = space.cyclic_dense(&[0, 1]);
        let alg = space.algebra();
        for a in 0..n {
            let (b, sign) = conjugation_image(a, n);
            for i in 0..2 {
                let lhs = &m * alg.matrix(space.psi(a, i)) * m.adjoint();
                let rhs = alg.matrix(space.psi(b, i)) * Complex64::new(sign, 0.0);
                worst = worst.max((lhs - rhs).camax());
            }
        }
    }
    out.push(check("replica", "conjugation_law", worst < 1e-10, format!("max err {worst:e}")));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for n in 2..=3 {
        let rho = random_density(2, &mut rng);
        worst = worst.max(oracle_renyi_trace(&rho, n, 1).map(|(r, p)| (r - p).abs()).unwrap_or(f64::NAN));
    }
    out.push(check("replica", "renyi_replica_identity", worst < 1e-10, format!("max err {worst:e}")));
    out
}

fn trajectory(seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    let layout = Layout::new(1, 2, false).expect("small layout");
    let p = layout.pair_parity(0, 0);
    let worst = [0.0, 0.3, 1.0]
        .into_iter()
        .map(|s| {
            let (k1, k2) = kraus_matrices(&p, s);
            (k1.adjoint() * &k1 + k2.adjoint() * &k2 - DMatrix::identity(4, 4)).camax()
        })
        .fold(0.0, f64::max);
    out.push(check("trajectory", "kraus_completeness", worst < 1e-12, format!("{worst:e}")));
    let config = SimConfig {
        params: ModelParams { J: 1.0, U: 0.4, q: 4, mu: 1.0, N: 2, L: 1 },
        dt: 0.1,
        steps: 2,
        n_traj: 1,
        seed,
        initial_state: InitialState::RandomPure,
    };
    let (passed, detail) = match sample_process(&config)
        .and_then(|(l, hs, init)| Ok((enumerate_branches(&l, &hs, config.dt, config.strength(), &init)?, l.cut_qubits())))
    {
        Ok((branches, cut)) => {
            let q = branch_quasi_entropy_limit(&branches, cut, 1e-4);
            let a = born_average_entropy(&branches, cut);
            ((q - a).abs() < 1e-6, format!("branches={} quasi={q:?} born={a:?}", branches.len()))
        }
        Err(e) => (false, e.to_string()),
    };
    out.push(check("trajectory", "quasi_entropy_replica_limit", passed, detail));
    out
}
