#![allow(dead_code)]

use femtopc::channel::GainMatrix;
use femtopc::feasibility::{rho, scale_rows, SinrTargets};
use femtopc::from_db;
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Raw gains with unit-scale direct links and cross gains up to `coupling`.
pub fn random_gains<R: Rng>(rng: &mut R, n_femto: usize, coupling: f64) -> GainMatrix {
    let n = n_femto + 1;
    let raw = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            rng.random_range(0.5..2.0)
        } else {
            coupling * rng.random_range(0.0..1.0)
        }
    });
    GainMatrix::from_raw(raw).unwrap()
}

/// Femtocell targets in `[lo_db, hi_db]` dB, rescaled so `rho(Gamma_f F) <= cap`.
pub fn random_femto_targets<R: Rng>(rng: &mut R, gm: &GainMatrix, lo_db: f64, hi_db: f64, cap: f64) -> Vec<f64> {
    let mut g: Vec<f64> = (0..gm.n_femto()).map(|_| from_db(rng.random_range(lo_db..hi_db))).collect();
    let r = rho(&scale_rows(&g, &gm.f_block())).unwrap();
    if r > cap {
        g.iter_mut().for_each(|x| *x *= cap / r);
    }
    g
}

/// Targets with `rho(Gamma G)` scaled to exactly `target_rho`.
pub fn targets_at_rho<R: Rng>(rng: &mut R, gm: &GainMatrix, lo_db: f64, hi_db: f64, target_rho: f64) -> SinrTargets {
    let all: Vec<f64> = (0..gm.size()).map(|_| from_db(rng.random_range(lo_db..hi_db))).collect();
    let r = rho(&scale_rows(&all, gm.normalized())).unwrap();
    let scaled: Vec<f64> = all.iter().map(|x| x * target_rho / r).collect();
    SinrTargets::new(scaled[0], scaled[1..].to_vec()).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
