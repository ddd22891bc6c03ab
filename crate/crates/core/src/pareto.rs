//! Per-tier SINR frontier: the largest cellular target compatible with a
//! given set of femtocell targets at a prescribed spectral radius `kappa`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::channel::GainMatrix;
use crate::error::{Error, Result};
use crate::feasibility::{rho, scale_rows};
use crate::table::{fmt, Table};
use crate::to_db;

/// Margin used by [`kappa_rule`].
pub const KAPPA_MARGIN: f64 = 1e-4;

/// `max{1 - 1e-4, r + (1 - 1e-4)(1 - r)}` where `r = rho(Gamma_f F)`.
pub fn kappa_rule(rho_femto: f64) -> f64 {
    (1.0 - KAPPA_MARGIN).max(rho_femto + (1.0 - KAPPA_MARGIN) * (1.0 - rho_femto))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KappaChoice {
    /// Derive kappa from `rho(Gamma_f F)` with [`kappa_rule`].
    Rule,
    Fixed(f64),
}

impl KappaChoice {
    pub fn resolve(self, rho_femto: f64) -> f64 {
        match self {
            KappaChoice::Rule => kappa_rule(rho_femto),
            KappaChoice::Fixed(k) => k,
        }
    }
}

fn check_len(gamma_f: &[f64], gm: &GainMatrix) -> Result<()> {
    if gamma_f.len() != gm.n_femto() {
        return Err(Error::Dimension {
            expected: gm.n_femto(),
            actual: gamma_f.len(),
        });
    }
    Ok(())
}

/// `rho(Gamma_f F)`.
pub fn femto_tier_rho(gamma_f: &[f64], gm: &GainMatrix) -> Result<f64> {
    check_len(gamma_f, gm)?;
    rho(&scale_rows(gamma_f, &gm.f_block()))
}

/// Highest cellular target keeping `rho(diag(Gamma_c, Gamma_f) G) = kappa`:
///
/// `Gamma_c = kappa^2 / (q_c^T [I - (Gamma_f / kappa) F]^-1 Gamma_f q_f)`.
///
/// Requires `rho(Gamma_f F) < kappa < 1`. Returns infinity when the femtocells
/// do not couple to the cellular link at all.
pub fn max_cellular_sinr(gamma_f: &[f64], gm: &GainMatrix, kappa: f64) -> Result<f64> {
    let rho_femto = femto_tier_rho(gamma_f, gm)?;
    max_cellular_sinr_with_rho(gamma_f, gm, kappa, rho_femto)
}

pub(crate) fn max_cellular_sinr_with_rho(gamma_f: &[f64], gm: &GainMatrix, kappa: f64, rho_femto: f64) -> Result<f64> {
    if !(kappa > rho_femto && kappa < 1.0) {
        return Err(Error::KappaOutOfRange { kappa, lower: rho_femto });
    }
    let n = gm.n_femto();
    let f = gm.f_block();
    let system = DMatrix::identity(n, n) - scale_rows(gamma_f, &f) / kappa;
    let rhs = DVector::from_fn(n, |i, _| gamma_f[i]).component_mul(&gm.q_f());
    let x = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("I - (Gamma_f / kappa) F is singular".into()))?;
    let denom = gm.q_c().dot(&x);
    Ok(if denom > 0.0 { kappa * kappa / denom } else { f64::INFINITY })
}

/// Necessary condition on any feasible cellular target:
/// `Gamma_c <= 1 / (q_c^T Gamma_f q_f)`.
pub fn cellular_upper_bound(gamma_f: &[f64], gm: &GainMatrix) -> Result<f64> {
    let rho_femto = femto_tier_rho(gamma_f, gm)?;
    if rho_femto >= 1.0 {
        return Err(Error::Infeasible { rho: rho_femto });
    }
    let denom: f64 = gm
        .q_c()
        .iter()
        .zip(gm.q_f().iter())
        .zip(gamma_f)
        .map(|((c, f), g)| c * g * f)
        .sum();
    Ok(if denom > 0.0 { 1.0 / denom } else { f64::INFINITY })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParetoPoint {
    pub gamma_c: f64,
    /// Common femtocell target.
    pub gamma_f: f64,
    pub kappa: f64,
    /// Upper bound `L / Gamma_f` on the cellular target.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Contour {
    pub points: Vec<ParetoPoint>,
    /// Femtocell targets left out, with the reason.
    pub skipped: Vec<(f64, String)>,
}

/// Frontier for a common femtocell target, one point per entry of `gamma_f_grid`.
pub fn pareto_contour(gamma_f_grid: &[f64], gm: &GainMatrix, kappa: KappaChoice) -> Result<Contour> {
    let n = gm.n_femto();
    let rho_f = rho(&gm.f_block())?;
    let mut contour = Contour::default();
    for &gf in gamma_f_grid {
        if !(gf > 0.0) || gf * rho_f >= 1.0 {
            contour
                .skipped
                .push((gf, format!("target {gf} outside (0, 1/rho(F)) with rho(F) = {rho_f}")));
            continue;
        }
        let common = vec![gf; n];
        let rho_femto = gf * rho_f;
        let k = kappa.resolve(rho_femto);
        match max_cellular_sinr_with_rho(&common, gm, k, rho_femto) {
            Ok(gamma_c) => contour.points.push(ParetoPoint {
                gamma_c,
                gamma_f: gf,
                kappa: k,
                bound: gm.link_budget().linear / gf,
            }),
            Err(e) => contour.skipped.push((gf, e.to_string())),
        }
    }
    Ok(contour)
}

/// `n` points spaced logarithmically over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
        }
    }
}

/// Default sampling grid: `n` log-spaced targets from `lo` up to `0.999 / rho(F)`.
pub fn default_grid(gm: &GainMatrix, lo: f64, n: usize) -> Result<Vec<f64>> {
    let rho_f = rho(&gm.f_block())?;
    let hi = if rho_f > 0.0 { 0.999 / rho_f } else { lo * 1e6 };
    Ok(log_grid(lo, hi.max(lo), n))
}

impl Contour {
    pub fn to_table(&self, label: &str) -> Table {
        let mut t = Table::new("contour", 1, &["label", "gamma_f_dB", "gamma_c_dB", "kappa", "bound_dB"]);
        for p in &self.points {
            t.push(vec![
                label.to_string(),
                fmt(to_db(p.gamma_f)),
                fmt(to_db(p.gamma_c)),
                fmt(p.kappa),
                fmt(to_db(p.bound)),
            ]);
        }
        t
    }
}
