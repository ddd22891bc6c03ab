//! Library results against independent reference computations.

mod common;

use approx::assert_relative_eq;
use common::{random_femto_targets, random_gains, rel_err, rng, targets_at_rho};
use femtopc::channel::{GainMatrix, PropagationParams};
use femtopc::feasibility::{
    achieved_sinr, is_feasible, max_min_sir, rho, scale_rows, solve_centralized, spectral_radius, NoiseModel,
    PowerIterOptions, SinrTargets,
};
use femtopc::game::{femto_equilibrium_sinr, run_to_equilibrium, utility_femto, Game, GameParams};
use femtopc::pareto::{femto_tier_rho, kappa_rule, max_cellular_sinr};
use femtopc::protection::{min_reduction_factor, run_protection, sufficient_reduction_check, ProtectionConfig, ToleranceMode};
use femtopc::from_db;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

fn eigen_oracle(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `I - M` is a nonsingular M-matrix iff its inverse applied to a positive
/// vector is positive. Holds exactly when `rho(M) < 1`.
fn m_matrix_ok(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    match (DMatrix::identity(n, n) - m).lu().solve(&DVector::from_element(n, 1.0)) {
        Some(x) => x.iter().all(|&v| v > 0.0),
        None => false,
    }
}

#[test]
fn cellular_loss_at_two_gigahertz() {
    let p = PropagationParams::from_frequency(2000.0);
    assert_relative_eq!(p.kc_db, 30.0 * 2000f64.log10() - 71.0, max_relative = 1e-12);
    assert_relative_eq!(p.kc_db, 28.0309, epsilon = 1e-4);
    assert_relative_eq!(p.kc(), from_db(-p.kc_db), max_relative = 1e-12);
}

#[test]
fn perron_root_against_dense_eigensolver() {
    let mut r = rng(101);
    for _ in 0..200 {
        let n = r.random_range(2..7);
        let m = DMatrix::from_fn(n, n, |_, _| {
            let x: f64 = r.random_range(0.0..1.0);
            x * 10f64.powf(r.random_range(-3.0..3.0))
        });
        let opts = PowerIterOptions::default();
        let root = spectral_radius(&m, &opts).unwrap();
        let expect = eigen_oracle(&m);
        assert!(rel_err(root.rho, expect) < 1e-8, "rho {} vs {expect}", root.rho);
        let residual = (&m * &root.vector - &root.vector * root.rho).amax();
        let scale = m.row_iter().map(|row| row.iter().sum::<f64>()).fold(0.0, f64::max);
        assert!(residual <= 1e-8 * scale, "residual {residual:e}");
        assert!(root.vector.iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn max_min_sir_matches_bisection() {
    let mut r = rng(102);
    for _ in 0..100 {
        let gm = random_gains(&mut r, 3, 0.3);
        let g = gm.normalized().clone();
        let (mut lo, mut hi) = (0.0, 1.0);
        while m_matrix_ok(&(&g * hi)) {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if m_matrix_ok(&(&g * mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let got = max_min_sir(&g).unwrap();
        assert!(rel_err(got, lo) < 1e-8, "{got} vs {lo}");
    }
}

#[test]
fn highest_cellular_target_matches_neumann_series() {
    let mut r = rng(103);
    for _ in 0..50 {
        let gm = random_gains(&mut r, 7, 0.05);
        let gamma_f = random_femto_targets(&mut r, &gm, 0.0, 10.0, 0.6);
        let rho_f = femto_tier_rho(&gamma_f, &gm).unwrap();
        let kappa = kappa_rule(rho_f);
        let got = max_cellular_sinr(&gamma_f, &gm, kappa).unwrap();

        // q_c^T sum_k (Gamma_f F / kappa)^k Gamma_f q_f
        let a = scale_rows(&gamma_f, &gm.f_block()) / kappa;
        let mut term = DVector::from_fn(gamma_f.len(), |i, _| gamma_f[i]).component_mul(&gm.q_f());
        let mut acc = DVector::zeros(gamma_f.len());
        for _ in 0..5000 {
            acc += &term;
            term = &a * term;
            if term.amax() < 1e-18 * acc.amax() {
                break;
            }
        }
        let expect = kappa * kappa / gm.q_c().dot(&acc);
        assert!(rel_err(got, expect) < 1e-9, "{got} vs {expect}");

        let all: Vec<f64> = std::iter::once(got).chain(gamma_f.iter().copied()).collect();
        assert_relative_eq!(rho(&scale_rows(&all, gm.normalized())).unwrap(), kappa, max_relative = 1e-8);
    }
}

#[test]
fn pareto_point_is_tight() {
    let mut r = rng(104);
    for _ in 0..50 {
        let gm = random_gains(&mut r, 4, 0.1);
        let gamma_f = random_femto_targets(&mut r, &gm, 0.0, 8.0, 0.5);
        let kappa = kappa_rule(femto_tier_rho(&gamma_f, &gm).unwrap());
        let gc = max_cellular_sinr(&gamma_f, &gm, kappa).unwrap();
        let bumped: Vec<f64> = std::iter::once(1.01 * gc).chain(gamma_f.iter().copied()).collect();
        assert!(rho(&scale_rows(&bumped, gm.normalized())).unwrap() > kappa);
    }
}

#[test]
fn centralized_powers_meet_targets_and_are_minimal() {
    let mut r = rng(105);
    let sigma2 = 1e-3;
    for _ in 0..100 {
        let gm = random_gains(&mut r, 5, 0.2);
        let level = r.random_range(0.1..0.95);
        let targets = targets_at_rho(&mut r, &gm, -3.0, 10.0, level);
        let alloc = solve_centralized(&targets, &gm, sigma2).unwrap();
        let sinr = achieved_sinr(&alloc.p, &gm, sigma2);
        for (s, t) in sinr.iter().zip(targets.all()) {
            assert!(rel_err(*s, t) < 1e-10, "{s} vs {t}");
        }

        // Any p with SINR >= Gamma solves (I - Gamma G) p = eta + s with s >= 0.
        let noise = NoiseModel::new(sigma2, &targets, &gm).unwrap();
        let system = DMatrix::identity(gm.size(), gm.size()) - scale_rows(&targets.all(), gm.normalized());
        for _ in 0..10 {
            let slack = DVector::from_fn(gm.size(), |_, _| r.random_range(0.0..1.0) * noise.eta.amax());
            let p = system.clone().lu().solve(&(&noise.eta + slack)).unwrap();
            for (a, b) in p.iter().zip(&alloc.p) {
                assert!(*a >= *b * (1.0 - 1e-12));
            }
        }
    }
}

#[test]
fn equilibrium_excess_peaks_at_one_over_e_ratio() {
    let base = [1e-10, 1e-12, 1e-12, 1e-9];
    let gm = GainMatrix::from_raw(DMatrix::from_row_slice(2, 2, &base)).unwrap();
    let ratio = gm.g(1, 1) / gm.g(0, 1);
    let gamma = 10.0;
    for b in [0.5, 1.0, 3.0] {
        // a ratio = e b puts the excess at its maximum 1/a
        let a_star = std::f64::consts::E * b / ratio;
        let at = femto_equilibrium_sinr(1, &gm, gamma, a_star, b).unwrap() - gamma;
        assert_relative_eq!(at, 1.0 / a_star, max_relative = 1e-12);
        for f in [0.5, 0.9, 1.1, 2.0] {
            let off = femto_equilibrium_sinr(1, &gm, gamma, a_star * f, b).unwrap() - gamma;
            assert!(off < at);
        }
    }
}

#[test]
fn interior_equilibrium_is_stationary_for_each_utility() {
    let mut r = rng(106);
    let sigma2 = 1e-3;
    let mut checked = 0;
    while checked < 30 {
        let gm = random_gains(&mut r, 3, 0.05);
        let gamma_f = random_femto_targets(&mut r, &gm, 0.0, 6.0, 0.3);
        let targets = SinrTargets::new(from_db(r.random_range(0.0..6.0)), gamma_f).unwrap();
        let a = r.random_range(0.5..2.0);
        let b = r.random_range(0.5..2.0);
        let mut params = GameParams::uniform(gm.n_femto(), a, b, 1e6);
        params.conv_tol = 1e-14;
        params.max_iter = 100_000;
        let Ok(eq) = run_to_equilibrium(&gm, sigma2, &targets, &params) else { continue };
        if !eq.converged || eq.state.p.iter().any(|&p| p <= 0.0 || p >= params.p_max) {
            continue;
        }
        let p = &eq.state.p;
        for i in 1..gm.size() {
            let interference: f64 =
                (0..gm.size()).filter(|&j| j != i).map(|j| p[j] * gm.raw()[(i, j)]).sum::<f64>() + sigma2;
            let sinr = p[i] * gm.raw()[(i, i)] / interference;
            let g = targets.gamma_f[i - 1];
            // dU/dp_i written out by hand
            let du = a * gm.raw()[(i, i)] / interference * (-a * (sinr - g)).exp() - b * gm.raw()[(0, i)] / interference;
            let scale = b * gm.raw()[(0, i)] / interference;
            assert!((du / scale).abs() < 1e-8, "relative gradient {}", du / scale);

            let u = |pi: f64| {
                let mut q = p.clone();
                q[i] = pi;
                utility_femto(i, &q, &gm, sigma2, g, a, b)
            };
            for f in [0.9, 0.99, 1.01, 1.1] {
                assert!(u(p[i] * f) <= u(p[i]) + 1e-15);
            }
        }
        checked += 1;
    }
}

#[test]
fn reduction_factor_matches_bisection_on_predicate() {
    let mut r = rng(107);
    let sigma2 = 1e-3;
    for _ in 0..200 {
        let gm = random_gains(&mut r, 2, 0.4);
        let p: Vec<f64> = (0..3).map(|_| r.random_range(0.1..1.0)).collect();
        let state = femtopc::game::GameState::new(p, &gm, sigma2);
        let target = state.sinr[0] * r.random_range(1.0..3.0);
        let t = min_reduction_factor(&state, &gm, &[1, 2], target, 0.05, 1.0);
        let ok = |x: f64| sufficient_reduction_check(&state, &gm, &[1, 2], x, target, 0.05, 1.0);
        if t.is_infinite() {
            assert!(!ok(1e12));
            continue;
        }
        let (mut lo, mut hi) = (1.0, 2.0);
        while !ok(hi) {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        if t > 1.0 {
            assert!(rel_err(t, hi) < 1e-9, "{t} vs {hi}");
        }
    }
}

#[test]
fn single_jammer_stops_at_first_certified_cut() {
    // One femtocell next to the macrocell; its power scales with its target,
    // so the sufficient condition is exact in linear mode.
    let gm = GainMatrix::from_raw(DMatrix::from_row_slice(2, 2, &[1e-10, 1e-10, 1e-13, 1e-9])).unwrap();
    let sigma2 = 1e-13;
    let targets = SinrTargets::new(from_db(15.0), vec![from_db(25.0)]).unwrap();
    let params = GameParams::uniform(1, 1.0, 1.0, 1.0);
    let cfg = ProtectionConfig {
        mode: ToleranceMode::Linear,
        ..ProtectionConfig::default()
    };
    let out = run_protection(&gm, sigma2, &targets, &params, &cfg).unwrap();
    assert!(out.protected);
    assert!(out.reductions > 0);

    let game = Game::new(&gm, sigma2, &targets, &params).unwrap();
    let first = game.run(game.initial_state()).state;
    assert_eq!(first.p[0], 1.0);
    assert!(first.p[1] < 1.0);
    let t_total = |k: usize| cfg.t().powi(k as i32);
    let check = |k| sufficient_reduction_check(&first, &gm, &[1], t_total(k), targets.gamma_c, cfg.epsilon, 1.0);
    assert!(check(out.reductions));
    assert!(!check(out.reductions - 1));
}

#[test]
fn full_power_limit_reaches_targets() {
    let mut r = rng(108);
    let sigma2 = 1e-6;
    for _ in 0..30 {
        let gm = random_gains(&mut r, 4, 0.1);
        let targets = targets_at_rho(&mut r, &gm, 0.0, 8.0, 0.7);
        let working: Vec<f64> = targets.gamma_f.clone();
        let mut params = GameParams::uniform(gm.n_femto(), 1.0, 1.0, 1e9);
        params.max_iter = 100_000;
        params.conv_tol = 1e-13;
        let game = Game::with_working_targets(&gm, sigma2, targets.gamma_c, working, &params).unwrap();
        let eq = game.run(game.initial_state());
        assert!(eq.converged);
        for (s, t) in eq.state.sinr.iter().zip(targets.all()) {
            assert!(rel_err(*s, t) < 1e-4, "{s} vs {t}");
        }
        assert!(is_feasible(&targets, &gm).unwrap().feasible);
    }
}
