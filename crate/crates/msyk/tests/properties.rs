//! Property tests for the structural invariants of each module.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::FRAC_PI_2;

use msyk::entropy_observables::{quasi_entropy, unequal_cut_entropy, vn_entropy_density};
use msyk::model_core::{saddle_angle, validate, ModelParams};
use msyk::permutation_saddles::{cycle_decompose, enumerate_maximal_pairs, Permutation};
use msyk::phase_solver::{lambda_of_theta, mu_of_theta, phase_residual, solve_lambda};
use msyk::saddle_dynamics::{hyperbolic_solution, integrate, kink_rate, ode_rhs, shift_t0, sign_related_solutions, OdeState};
use msyk::special_functions::{chebyshev_t, hyp2f1_spectral, pfaffian, SkewMatrix};
use msyk::trajectory_sim::{apply_measurement_layer, evolve, initial_state, kraus_matrices, BrownianSampler, InitialState, Layout};

fn params() -> impl Strategy<Value = ModelParams> {
    (0.0..3.0f64, 0.0..3.0f64, 1u32..3, 0.0..5.0f64, 1u32..6, 1u32..10)
        .prop_filter("need J + U > 0", |(j, u, ..)| j + u > 0.0)
        .prop_map(|(j, u, q4, mu, n2, l)| ModelParams { J: j, U: u, q: 4 * q4, mu, N: 2 * n2, L: l })
}

fn permutation(max: usize) -> impl Strategy<Value = Vec<usize>> {
    (1..=max).prop_flat_map(|n| Just((0..n).collect::<Vec<_>>()).prop_shuffle())
}

proptest! {
    #[test]
    fn validate_is_idempotent(p in params()) {
        let v = validate(p).unwrap();
        prop_assert_eq!(v.revalidate().unwrap(), v);
        prop_assert_eq!(validate(*v.get()).unwrap(), v);
    }

    #[test]
    fn saddle_angle_is_monotone(lambda in 0.01..5.0f64, mu in 0.0..5.0f64, d in 0.001..1.0f64) {
        let base = saddle_angle(lambda, mu).unwrap().theta;
        prop_assert!(saddle_angle(lambda, mu + d).unwrap().theta > base);
        prop_assert!(saddle_angle(lambda + d, mu).unwrap().theta <= base);
        if mu > 0.0 {
            prop_assert!(saddle_angle(lambda + d, mu).unwrap().theta < base);
        }
    }

    #[test]
    fn cycle_decomposition_round_trips(images in permutation(9)) {
        let p = Permutation::new(images).unwrap();
        let d = cycle_decompose(&p);
        prop_assert_eq!(d.reconstruct(), p.clone());
        prop_assert_eq!(cycle_decompose(&d.reconstruct()), d.clone());
        prop_assert_eq!(d.lengths().iter().sum::<usize>(), p.len());
        prop_assert!(d.lengths().iter().all(|&l| l >= 1));
    }

    #[test]
    fn chebyshev_matches_recurrence(k in 0usize..=12, a in 1.0..5.0f64) {
        let (mut t0, mut t1) = (1.0, a);
        let exact = match k {
            0 => 1.0,
            _ => {
                for _ in 1..k {
                    (t0, t1) = (t1, 2.0 * a * t1 - t0);
                }
                t1
            }
        };
        let got = chebyshev_t(k as f64, a).unwrap();
        prop_assert!((got - exact).abs() <= 1e-10 * exact.abs());
    }

    #[test]
    fn pfaffian_flips_sign_under_swap(upper in prop::collection::vec(-1.0..1.0f64, 15), i in 0usize..6, j in 0usize..6) {
        prop_assume!(i != j);
        let a = SkewMatrix::from_upper(6, &upper).unwrap();
        let mut m = a.matrix().clone();
        m.swap_rows(i, j);
        m.swap_columns(i, j);
        let swapped = SkewMatrix::new(m).unwrap();
        let (p, q) = (pfaffian(&a).unwrap(), pfaffian(&swapped).unwrap());
        prop_assert!((p + q).abs() <= 1e-12 * p.abs().max(1.0));
    }

    #[test]
    fn hyp2f1_bracket_is_positive(n in 1u32..12, theta in 0.0..(FRAC_PI_2 - 1e-3)) {
        let z = (1.0 - 1.0 / theta.cos()) / 2.0;
        let v = (hyp2f1_spectral(n as f64, z).unwrap() + 1.0) * theta.cos().powi(n as i32);
        prop_assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn unequal_cut_is_linear_in_cut_size(theta in 0.0..FRAC_PI_2, n2 in 1u32..8, la in 1u32..20) {
        let n = 2 * n2;
        let s = unequal_cut_entropy(1.0, theta, n, la).unwrap();
        let expect = vn_entropy_density(theta).unwrap() * n as f64 * la as f64;
        prop_assert!((s - expect).abs() <= 1e-12 * expect.abs().max(1.0));
    }

    #[test]
    fn quasi_entropy_extensive_term_is_nonnegative(n in 2u32..6, theta in 0.0..=FRAC_PI_2, n2 in 1u32..40, l in 1u32..20) {
        // The parity and multiplicity corrections are O(L) and O(1) and may
        // push the total below zero once the extensive term closes near
        // θ = π/2; only the leading term is sign definite.
        let r = quasi_entropy(n, theta, 2 * n2, l).unwrap();
        prop_assert!(r.decomposition.extensive >= 0.0, "S_ext = {}", r.decomposition.extensive);
    }

    #[test]
    fn quasi_entropy_is_nonnegative_away_from_criticality(n in 2u32..6, theta in 0.0..1.0f64, n2 in 4u32..40, l in 1u32..20) {
        let r = quasi_entropy(n, theta, 2 * n2, l).unwrap();
        prop_assert!(r.value >= 0.0, "S = {}", r.value);
    }

    #[test]
    fn reported_roots_solve_the_phase_equation(j in 0.1..2.0f64, u in 0.0..2.0f64, q4 in 1u32..3, frac in 0.0..1.5f64) {
        let q = 4 * q4;
        let p = validate(ModelParams { J: j, U: u, q, mu: 0.0, N: 8, L: 2 }).unwrap();
        let mu = frac * (j + u);
        let pt = solve_lambda(&p, mu).unwrap();
        for &l in &pt.lambdas {
            prop_assert!(l > 0.0);
            prop_assert!(phase_residual(l, mu, j, u, q).abs() < 1e-10 * (j + u));
        }
    }

    #[test]
    fn solver_inverts_the_solution_curve(j in 0.1..2.0f64, u in 0.0..2.0f64, theta in 0.01..1.5f64) {
        let p = validate(ModelParams { J: j, U: u, q: 4, mu: 0.0, N: 8, L: 2 }).unwrap();
        let mu = mu_of_theta(theta, j, u, 4).unwrap();
        let target = lambda_of_theta(theta, j, u, 4);
        let pt = solve_lambda(&p, mu).unwrap();
        let best = pt.lambdas.iter().map(|l| (l - target).abs()).fold(f64::INFINITY, f64::min);
        prop_assert!(best < 1e-10 * (j + u), "Λ = {target}, roots {:?}", pt.lambdas);
    }

    #[test]
    fn free_branch_lies_on_the_circle(j in 0.1..3.0f64, frac in 0.0..0.999f64) {
        let p = validate(ModelParams { J: j, U: 0.0, q: 4, mu: 0.0, N: 8, L: 2 }).unwrap();
        let mu = frac * j;
        let pt = solve_lambda(&p, mu).unwrap();
        prop_assert_eq!(pt.lambdas.len(), 1);
        prop_assert!((pt.lambdas[0].powi(2) + mu * mu - j * j).abs() < 1e-10 * j * j);
    }

    #[test]
    fn integration_preserves_both_invariants(
        j in 0.1..2.0f64, u in 0.1..2.0f64,
        v in prop::collection::vec(-1.0..1.0f64, 6),
    ) {
        let s0 = OdeState { x1: v[0], x2: v[1], z1: v[2], y1: v[3], y2: v[4], w1: v[5] };
        let dt = 0.005 / kink_rate(j, u).max(j);
        let states = integrate(s0, j, u, 2.0, dt).unwrap();
        let (a0, b0) = s0.invariants();
        for s in &states {
            let (a, b) = s.invariants();
            prop_assert!((a - a0).abs() < 1e-8 && (b - b0).abs() < 1e-8);
        }
    }

    #[test]
    fn boundary_layer_decays_at_the_kink_rate(j in 0.1..2.0f64, u in 0.05..2.0f64, after in 0.0..10.0f64) {
        let t0 = shift_t0(j, u).unwrap();
        let (x1, _, _) = hyperbolic_solution(t0 + after, j, u).unwrap();
        let w = (u * (2.0 * j + u)).sqrt();
        prop_assert!((x1 - 1.0).abs() < 2.0 * (-2.0 * w * after).exp());
    }

    #[test]
    fn sign_flips_map_solutions_to_solutions(j in 0.1..2.0f64, u in 0.05..2.0f64, t in 0.0..5.0f64) {
        // Residual of the reduced equations by central differences, with
        // the right-hand side written out here.
        let rhs = |(x1, x2, z1): (f64, f64, f64)| (4.0 * j * x2 * z1, -(4.0 * j + 2.0 * u) * x1 * z1, -2.0 * u * x1 * x2);
        let h = 1e-5;
        let sol = |t: f64| hyperbolic_solution(t, j, u).unwrap();
        let (p, m, c) = (sign_related_solutions(sol(t + h)), sign_related_solutions(sol(t - h)), sign_related_solutions(sol(t)));
        for k in 0..4 {
            let d = rhs(c[k]);
            let scale = (4.0 * j + 2.0 * u).powi(2);
            prop_assert!(((p[k].0 - m[k].0) / (2.0 * h) - d.0).abs() < 1e-6 * scale);
            prop_assert!(((p[k].1 - m[k].1) / (2.0 * h) - d.1).abs() < 1e-6 * scale);
            prop_assert!(((p[k].2 - m[k].2) / (2.0 * h) - d.2).abs() < 1e-6 * scale);
        }
    }

    #[test]
    fn kraus_pair_is_complete(s in 0.0..=1.0f64, x in 0usize..2, i in 0usize..2) {
        let layout = Layout::new(2, 2, false).unwrap();
        let (k1, k2) = kraus_matrices(&layout.pair_parity(x, i), s);
        let sum = k1.adjoint() * &k1 + k2.adjoint() * &k2;
        let d = layout.dim();
        prop_assert!((sum - DMatrix::<Complex64>::identity(d, d)).camax() < 1e-12);
    }

    #[test]
    fn measurement_layer_renormalises(seed in 0u64..1000, s in 0.01..1.0f64) {
        let layout = Layout::new(2, 2, false).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = initial_state(&layout, InitialState::RandomPure, &mut rng);
        let layer = apply_measurement_layer(&layout, &v, s, &mut rng).unwrap();
        let norm: f64 = layer.state.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() < 1e-12);
        prop_assert!(layer.weight_factor > 0.0 && layer.weight_factor <= 1.0);
    }
}

#[test]
fn every_maximal_pair_has_2n_cycle_lengths_and_the_cyclic_pair_is_present() {
    for n in 1..=7 {
        let pairs = enumerate_maximal_pairs(n).unwrap();
        for p in &pairs {
            assert_eq!(p.all_cycle_lengths().iter().sum::<usize>(), 2 * n);
            assert_eq!(p.tau_a(), Permutation::epsilon(n).compose(p.tau_abar()));
        }
        let cyclic = pairs.iter().find(|p| *p.tau_abar() == Permutation::identity(n)).expect("cyclic pair");
        assert_eq!(cyclic.tau_a(), Permutation::epsilon(n));
        assert!(cyclic.is_cyclic_symmetric());
    }
}

#[test]
fn sigma_is_strictly_decreasing() {
    let grid = 10_000;
    let values: Vec<f64> = (0..=grid).map(|k| vn_entropy_density(FRAC_PI_2 * k as f64 / grid as f64).unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn permutation_solutions_are_fixed_points() {
    let (j, u) = (1.0, 0.4);
    for (x1, x2) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
        for (y1, y2) in [(1.0, 0.0), (0.0, -1.0)] {
            let s = OdeState { x1, x2, z1: 0.0, y1, y2, w1: 0.0 };
            let d = ode_rhs(&s, j, u);
            for c in [d.x1, d.x2, d.z1, d.y1, d.y2, d.w1] {
                assert_eq!(c, 0.0);
            }
        }
    }
}

#[test]
fn site_parity_is_conserved_along_a_trajectory() {
    let p = ModelParams { J: 1.0, U: 0.4, q: 4, mu: 1.0, N: 2, L: 2 };
    let layout = Layout::new(2, 2, false).unwrap();
    let sampler = BrownianSampler::new(&layout, &p, 0.05);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut v = initial_state(&layout, InitialState::ParityProduct, &mut rng);
    let site_parity: Vec<_> = (0..2).map(|x| layout.chain_parity(x, 0).mul(&layout.chain_parity(x, 1))).collect();
    let expect = |v: &[Complex64]| -> Vec<f64> {
        site_parity.iter().map(|w| w.apply(v).iter().zip(v).map(|(a, b)| (b.conj() * a).re).sum()).collect()
    };
    let start = expect(&v);
    assert!(start.iter().all(|e| (e.abs() - 1.0).abs() < 1e-12));
    for _ in 0..40 {
        v = evolve(&sampler.sample(&mut rng), 0.05, &v);
        v = apply_measurement_layer(&layout, &v, 0.05f64.sqrt(), &mut rng).unwrap().state;
        let now = expect(&v);
        for (a, b) in now.iter().zip(&start) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
