mod common;

use common::{random_femto_targets, random_gains, rng, targets_at_rho};
use femtopc::channel::GainMatrix;
use femtopc::experiments::rescale_infeasible;
use femtopc::feasibility::{rho, scale_rows, SinrTargets};
use femtopc::game::{femto_equilibrium_sinr, utility_femto, Game, GameParams, GameState};
use femtopc::protection::{dominant_set, run_protection, ProtectionConfig};
use femtopc::from_db;
use proptest::prelude::*;
use rand::Rng;

const SIGMA2: f64 = 1e-3;

fn instance(seed: u64, n_femto: usize, coupling: f64) -> GainMatrix {
    random_gains(&mut rng(seed), n_femto, coupling)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn radius_grows_with_targets(seed: u64, n in 1usize..6, bump in 0.0f64..3.0) {
        let gm = instance(seed, n, 0.3);
        let mut r = rng(seed ^ 1);
        let base: Vec<f64> = (0..gm.size()).map(|_| from_db(r.random_range(-5.0..10.0))).collect();
        let raised: Vec<f64> = base.iter().map(|g| g * r.random_range(1.0..1.0 + bump)).collect();
        let lo = rho(&scale_rows(&base, gm.normalized())).unwrap();
        let hi = rho(&scale_rows(&raised, gm.normalized())).unwrap();
        prop_assert!(hi >= lo * (1.0 - 1e-9));
    }

    #[test]
    fn full_radius_dominates_femto_tier(seed: u64, n in 1usize..6) {
        let gm = instance(seed, n, 0.3);
        let mut r = rng(seed ^ 2);
        let level = r.random_range(0.1..2.0);
        let t = targets_at_rho(&mut r, &gm, -5.0, 10.0, level);
        let full = rho(&scale_rows(&t.all(), gm.normalized())).unwrap();
        let femto = rho(&scale_rows(&t.gamma_f, &gm.f_block())).unwrap();
        prop_assert!(full >= femto * (1.0 - 1e-9));
    }

    #[test]
    fn radius_is_homogeneous(seed: u64, n in 1usize..6, c in 1e-3f64..1e3) {
        let g = instance(seed, n, 0.5).normalized().clone();
        let r1 = rho(&g).unwrap();
        let rc = rho(&(&g * c)).unwrap();
        prop_assert!((rc - c * r1).abs() <= 1e-9 * c * r1);
    }

    #[test]
    fn receiver_gain_scaling_leaves_normalized_gains(seed: u64, n in 1usize..6) {
        let gm = instance(seed, n, 0.5);
        let mut r = rng(seed ^ 3);
        let mut raw = gm.raw().clone();
        for mut row in raw.row_iter_mut() {
            row *= 10f64.powf(r.random_range(-3.0..3.0));
        }
        let scaled = GainMatrix::from_raw(raw).unwrap();
        let (a, b) = (rho(gm.normalized()).unwrap(), rho(scaled.normalized()).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-300));
    }

    #[test]
    fn power_map_is_standard(seed: u64, n in 1usize..6, alpha in 1.01f64..10.0) {
        let gm = instance(seed, n, 0.3);
        let mut r = rng(seed ^ 4);
        let t = targets_at_rho(&mut r, &gm, 0.0, 10.0, 0.8);
        let params = GameParams::uniform(gm.n_femto(), 1.0, 1.0, 1e12);
        let game = Game::with_working_targets(&gm, SIGMA2, t.gamma_c, t.gamma_f.clone(), &params).unwrap();
        let p: Vec<f64> = (0..gm.size()).map(|_| r.random_range(0.0..1.0)).collect();
        let q: Vec<f64> = p.iter().map(|x| x + r.random_range(0.0..1.0)).collect();
        let (fp, fq) = (game.map(&p), game.map(&q));
        let ap: Vec<f64> = p.iter().map(|x| x * alpha).collect();
        let fap = game.map(&ap);
        for i in 0..gm.size() {
            prop_assert!(fp[i] > 0.0);
            prop_assert!(fq[i] >= fp[i]);
            prop_assert!(alpha * fp[i] > fap[i]);
        }
    }

    #[test]
    fn femto_utility_concave_in_own_power(seed: u64, n in 1usize..5, a in 0.1f64..3.0, b in 0.1f64..3.0) {
        let gm = instance(seed, n, 0.3);
        let mut r = rng(seed ^ 5);
        let mut p: Vec<f64> = (0..gm.size()).map(|_| r.random_range(0.0..1.0)).collect();
        let i = r.random_range(1..gm.size());
        let gamma = from_db(r.random_range(0.0..10.0));
        let h = 1e-3;
        let centre = r.random_range(h..1.0);
        let mut u = |x: f64| {
            p[i] = x;
            utility_femto(i, &p, &gm, SIGMA2, gamma, a, b)
        };
        let d2 = u(centre + h) - 2.0 * u(centre) + u(centre - h);
        prop_assert!(d2 <= 1e-12);
    }

    #[test]
    fn excess_grows_with_own_to_cross_ratio(a in 0.1f64..5.0, b in 0.1f64..5.0, g0 in 1e-3f64..1.0, k in 1.0f64..100.0) {
        let lo = GainMatrix::from_raw(nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, g0, 0.1, 1.0])).unwrap();
        let hi = GainMatrix::from_raw(nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, g0, 0.1, k])).unwrap();
        let x = femto_equilibrium_sinr(1, &lo, 3.0, a, b).unwrap();
        let y = femto_equilibrium_sinr(1, &hi, 3.0, a, b).unwrap();
        prop_assert!(y >= x);
    }

    #[test]
    fn dominant_sets_nest(seed: u64, n in 1usize..10, y in 1e-4f64..1.0, shrink in 1.0f64..100.0) {
        let gm = instance(seed, n, 0.3);
        let mut r = rng(seed ^ 6);
        let p: Vec<f64> = (0..gm.size()).map(|_| r.random_range(0.0..1.0)).collect();
        let state = GameState::new(p, &gm, SIGMA2);
        let big = dominant_set(&state, &gm, y);
        let small = dominant_set(&state, &gm, y / shrink);
        prop_assert!(big.iter().all(|i| small.contains(i)));
    }

    #[test]
    fn equilibrium_is_a_fixed_point(seed: u64, n in 1usize..6) {
        let gm = instance(seed, n, 0.2);
        let mut r = rng(seed ^ 7);
        let level = r.random_range(0.1..0.9);
        let t = targets_at_rho(&mut r, &gm, 0.0, 10.0, level);
        let mut params = GameParams::uniform(gm.n_femto(), 1.0, 1.0, 1e9);
        params.max_iter = 100_000;
        params.conv_tol = 1e-13;
        let game = Game::with_working_targets(&gm, SIGMA2, t.gamma_c, t.gamma_f.clone(), &params).unwrap();
        let eq = game.run(game.initial_state());
        prop_assert!(eq.converged);
        let next = game.map(&eq.state.p);
        for (x, y) in next.iter().zip(&eq.state.p) {
            prop_assert!((x - y).abs() <= 1e-11 * y.max(1e-300));
        }
    }

    #[test]
    fn rescaled_targets_are_feasible(seed: u64, n in 1usize..8, level in 0.1f64..20.0) {
        let gm = instance(seed, n, 0.5);
        let mut r = rng(seed ^ 8);
        let g = random_femto_targets(&mut r, &gm, 0.0, 20.0, f64::INFINITY);
        let base = rho(&scale_rows(&g, &gm.f_block())).unwrap();
        let g: Vec<f64> = g.iter().map(|x| x * level / base.max(1e-300)).collect();
        let out = rescale_infeasible(&g, &gm.f_block()).unwrap();
        prop_assert!(rho(&scale_rows(&out.gamma_f, &gm.f_block())).unwrap() < 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn protection_rounds_are_monotone(seed: u64, n in 1usize..6) {
        let gm = instance(seed, n, 0.3);
        let mut r = rng(seed ^ 9);
        let gamma_f = random_femto_targets(&mut r, &gm, 5.0, 15.0, 0.5);
        let t = SinrTargets::new(from_db(r.random_range(5.0..15.0)), gamma_f).unwrap();
        let params = GameParams::uniform(gm.n_femto(), 1.0, 1.0, 1.0);
        let cfg = ProtectionConfig { max_epochs: 60, ..ProtectionConfig::default() };
        let out = run_protection(&gm, SIGMA2, &t, &params, &cfg).unwrap();
        for w in out.trace.windows(2) {
            for (a, b) in w[0].working_targets.iter().zip(&w[1].working_targets) {
                prop_assert!(b <= a);
            }
            if w[0].converged && w[1].converged {
                prop_assert!(w[1].gamma0 >= w[0].gamma0 * (1.0 - 1e-8));
            }
        }
    }
}
