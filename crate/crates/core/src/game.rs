//! Utility-based distributed SINR adaptation.
//!
//! The cellular user maximizes `-(gamma_0 - Gamma_0)^2`, which drives it to its
//! target (or to `p_max` when unreachable). Femtocell user `i` maximizes
//! `1 - exp(-a_i (gamma_i - Gamma_i)) - b_i p_i g_0i / I_i`, whose best response
//! is the SINR `[Gamma_i + ln(a_i g_ii / (b_i g_0i)) / a_i]^+`. Every user then
//! runs the target-tracking update `p <- min(I / g * target, p_max)`, a standard
//! interference function with a unique fixed point.

use serde::{Deserialize, Serialize};

use crate::channel::GainMatrix;
use crate::error::{Error, Result};
use crate::feasibility::SinrTargets;
use crate::table::{fmt, Table};
use crate::to_db;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    /// Reward steepness per femtocell.
    pub a: Vec<f64>,
    /// Interference penalty weight per femtocell.
    pub b: Vec<f64>,
    pub p_max: f64,
    pub max_iter: usize,
    /// Stop once the largest relative power change drops below this.
    pub conv_tol: f64,
}

impl GameParams {
    pub const DEFAULT_MAX_ITER: usize = 1000;
    pub const DEFAULT_CONV_TOL: f64 = 1e-9;

    /// Same `(a, b)` at every femtocell.
    pub fn uniform(n_femto: usize, a: f64, b: f64, p_max: f64) -> Self {
        GameParams {
            a: vec![a; n_femto],
            b: vec![b; n_femto],
            p_max,
            max_iter: Self::DEFAULT_MAX_ITER,
            conv_tol: Self::DEFAULT_CONV_TOL,
        }
    }

    pub fn validate(&self, n_femto: usize) -> Result<()> {
        for len in [self.a.len(), self.b.len()] {
            if len != n_femto {
                return Err(Error::Dimension {
                    expected: n_femto,
                    actual: len,
                });
            }
        }
        if let Some(&x) = self.a.iter().chain(&self.b).find(|&&x| !(x > 0.0)) {
            return Err(Error::InvalidParameter {
                name: "a/b",
                reason: format!("utility coefficients must be positive, got {x}"),
            });
        }
        if !(self.p_max > 0.0) {
            return Err(Error::InvalidParameter {
                name: "p_max",
                reason: format!("must be positive, got {}", self.p_max),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameState {
    pub p: Vec<f64>,
    pub sinr: Vec<f64>,
    pub iter: usize,
}

impl GameState {
    pub fn new(p: Vec<f64>, gm: &GainMatrix, sigma2: f64) -> Self {
        let sinr = crate::feasibility::achieved_sinr(&p, gm, sigma2);
        GameState { p, sinr, iter: 0 }
    }

    /// Everyone at full power.
    pub fn at_max(gm: &GainMatrix, sigma2: f64, p_max: f64) -> Self {
        Self::new(vec![p_max; gm.size()], gm, sigma2)
    }

    pub fn sinr_db(&self) -> Vec<f64> {
        self.sinr.iter().map(|&s| to_db(s)).collect()
    }
}

/// `I_i(p_-i) = sum_{j != i} p_j g_ij + sigma^2`.
pub fn interference(i: usize, p: &[f64], gm: &GainMatrix, sigma2: f64) -> f64 {
    let raw = gm.raw();
    (0..gm.size()).filter(|&j| j != i).map(|j| p[j] * raw[(i, j)]).sum::<f64>() + sigma2
}

fn all_interference(p: &[f64], gm: &GainMatrix, sigma2: f64) -> Vec<f64> {
    let raw = gm.raw();
    let n = gm.size();
    let mut out = vec![sigma2; n];
    for j in 0..n {
        let pj = p[j];
        if pj == 0.0 {
            continue;
        }
        let col = raw.column(j);
        for (i, acc) in out.iter_mut().enumerate() {
            if i != j {
                *acc += pj * col[i];
            }
        }
    }
    out
}

/// Equilibrium SINR of femtocell `i` (1-based):
/// `[Gamma_i + ln(a_i g_ii / (b_i g_0i)) / a_i]^+`.
pub fn femto_equilibrium_sinr(i: usize, gm: &GainMatrix, gamma_i: f64, a_i: f64, b_i: f64) -> Result<f64> {
    let g0i = gm.g(0, i);
    if g0i <= 0.0 {
        return Err(Error::InvisibleFemtocell { index: i });
    }
    let excess = (a_i * gm.g(i, i) / (b_i * g0i)).ln() / a_i;
    Ok((gamma_i + excess).max(0.0))
}

/// Equilibrium SINRs for all femtocells.
pub fn femto_equilibrium_targets(gm: &GainMatrix, targets: &SinrTargets, params: &GameParams) -> Result<Vec<f64>> {
    targets.check_dims(gm)?;
    params.validate(gm.n_femto())?;
    (1..=gm.n_femto())
        .map(|i| femto_equilibrium_sinr(i, gm, targets.gamma_f[i - 1], params.a[i - 1], params.b[i - 1]))
        .collect()
}

pub fn utility_cellular(gamma_0: f64, target: f64) -> f64 {
    -(gamma_0 - target).powi(2)
}

/// Femtocell utility for the exponential reward and linear cost pair.
pub fn utility_femto(i: usize, p: &[f64], gm: &GainMatrix, sigma2: f64, gamma_i: f64, a_i: f64, b_i: f64) -> f64 {
    let interference = interference(i, p, gm, sigma2);
    let sinr = p[i] * gm.g(i, i) / interference;
    1.0 - (-a_i * (sinr - gamma_i)).exp() - b_i * p[i] * gm.g(0, i) / interference
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equilibrium {
    pub state: GameState,
    pub converged: bool,
    pub iterations: usize,
}

/// One configured instance of the power-control game.
///
/// `femto_targets` are the working equilibrium SINRs the femtocells track;
/// link-quality protection lowers them between runs.
#[derive(Debug, Clone)]
pub struct Game<'a> {
    gm: &'a GainMatrix,
    sigma2: f64,
    cellular_target: f64,
    femto_targets: Vec<f64>,
    p_max: f64,
    max_iter: usize,
    conv_tol: f64,
}

impl<'a> Game<'a> {
    /// Femtocells track their utility-maximizing equilibrium SINRs.
    pub fn new(gm: &'a GainMatrix, sigma2: f64, targets: &SinrTargets, params: &GameParams) -> Result<Self> {
        let working = femto_equilibrium_targets(gm, targets, params)?;
        Self::with_working_targets(gm, sigma2, targets.gamma_c, working, params)
    }

    /// Femtocells track exactly `femto_targets` (linear).
    pub fn with_working_targets(
        gm: &'a GainMatrix,
        sigma2: f64,
        cellular_target: f64,
        femto_targets: Vec<f64>,
        params: &GameParams,
    ) -> Result<Self> {
        if femto_targets.len() != gm.n_femto() {
            return Err(Error::Dimension {
                expected: gm.n_femto(),
                actual: femto_targets.len(),
            });
        }
        if !(sigma2 > 0.0) {
            return Err(Error::InvalidParameter {
                name: "sigma2",
                reason: format!("noise power must be positive, got {sigma2}"),
            });
        }
        Ok(Game {
            gm,
            sigma2,
            cellular_target,
            femto_targets,
            p_max: params.p_max,
            max_iter: params.max_iter,
            conv_tol: params.conv_tol,
        })
    }

    pub fn gains(&self) -> &GainMatrix {
        self.gm
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn cellular_target(&self) -> f64 {
        self.cellular_target
    }

    pub fn femto_targets(&self) -> &[f64] {
        &self.femto_targets
    }

    pub fn femto_targets_mut(&mut self) -> &mut [f64] {
        &mut self.femto_targets
    }

    pub fn set_max_iter(&mut self, max_iter: usize) {
        self.max_iter = max_iter;
    }

    /// Target tracked by user `i` (0 = cellular).
    pub fn target(&self, i: usize) -> f64 {
        if i == 0 {
            self.cellular_target
        } else {
            self.femto_targets[i - 1]
        }
    }

    pub fn initial_state(&self) -> GameState {
        GameState::at_max(self.gm, self.sigma2, self.p_max)
    }

    /// Synchronous power map `f(p)_i = min(I_i(p_-i) / g_ii * target_i, p_max)`.
    ///
    /// Writing `p_i / gamma_i` as `I_i / g_ii` keeps the map defined when a user
    /// is silent.
    pub fn map(&self, p: &[f64]) -> Vec<f64> {
        all_interference(p, self.gm, self.sigma2)
            .into_iter()
            .enumerate()
            .map(|(i, interference)| (interference / self.gm.g(i, i) * self.target(i)).min(self.p_max))
            .collect()
    }

    pub fn update(&self, state: &GameState) -> GameState {
        let p = self.map(&state.p);
        let sinr = crate::feasibility::achieved_sinr(&p, self.gm, self.sigma2);
        GameState {
            p,
            sinr,
            iter: state.iter + 1,
        }
    }

    pub fn run(&self, initial: GameState) -> Equilibrium {
        self.run_inner(initial, |_| {})
    }

    /// Same as [`Game::run`], recording `(iter, user_id, p_W, sinr_dB)` rows.
    pub fn run_traced(&self, initial: GameState, trace: &mut Table) -> Equilibrium {
        let record = |t: &mut Table, s: &GameState| {
            for (u, (p, g)) in s.p.iter().zip(&s.sinr).enumerate() {
                t.push(vec![s.iter.to_string(), u.to_string(), fmt(*p), fmt(to_db(*g))]);
            }
        };
        record(trace, &initial);
        self.run_inner(initial, |s| record(trace, s))
    }

    fn run_inner(&self, initial: GameState, mut on_step: impl FnMut(&GameState)) -> Equilibrium {
        let mut state = initial;
        let start = state.iter;
        let mut converged = false;
        while state.iter - start < self.max_iter {
            let next = self.update(&state);
            let change = next
                .p
                .iter()
                .zip(&state.p)
                .map(|(&new, &old)| {
                    let scale = new.max(old);
                    if scale > 0.0 { (new - old).abs() / scale } else { 0.0 }
                })
                .fold(0.0, f64::max);
            on_step(&next);
            state = next;
            if change < self.conv_tol {
                converged = true;
                break;
            }
        }
        Equilibrium {
            iterations: state.iter - start,
            state,
            converged,
        }
    }
}

pub fn trace_table() -> Table {
    Table::new("game_trace", 1, &["iter", "user_id", "p_W", "sinr_dB"])
}

/// Runs the game from full power to its fixed point.
pub fn run_to_equilibrium(
    gm: &GainMatrix,
    sigma2: f64,
    targets: &SinrTargets,
    params: &GameParams,
) -> Result<Equilibrium> {
    let game = Game::new(gm, sigma2, targets, params)?;
    Ok(game.run(game.initial_state()))
}
