//! Cellular link-quality protection.
//!
//! The game runs for `M` iterations from full power; the macrocell then
//! broadcasts whether the cellular SINR is within tolerance of its target.
//! If not, every femtocell whose interference at the macrocell exceeds the
//! threshold `y` lowers its working SINR target by `t_dB`, `y` shrinks by
//! `delta_y`, and the next round starts.

use serde::{Deserialize, Serialize};

use crate::channel::GainMatrix;
use crate::error::{Error, Result};
use crate::feasibility::SinrTargets;
use crate::game::{Game, GameParams, GameState};
use crate::table::{fmt, Table};
use crate::{from_db, to_db};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToleranceMode {
    /// `gamma_0,dB >= (1 - eps) Gamma_0,dB`
    Db,
    /// `gamma_0 >= (1 - eps) Gamma_0`
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtectionConfig {
    pub epsilon: f64,
    /// Working-target cut per round for dominant femtocells.
    pub t_db: f64,
    /// Threshold reduction per round.
    pub delta_y_db: f64,
    /// Initial threshold in watts; `None` picks `max_i p_i g_0i / delta_y`
    /// after the first round.
    pub y0: Option<f64>,
    /// Game iterations per round (`M`).
    pub iters_per_epoch: usize,
    pub max_epochs: usize,
    pub mode: ToleranceMode,
}

impl Default for ProtectionConfig {
    fn default() -> Self {
        ProtectionConfig {
            epsilon: 0.05,
            t_db: 0.8,
            delta_y_db: 3.0,
            y0: None,
            iters_per_epoch: 1000,
            max_epochs: 500,
            mode: ToleranceMode::Db,
        }
    }
}

impl ProtectionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: String| Err(Error::InvalidParameter { name, reason });
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad("epsilon", format!("must lie in [0, 1], got {}", self.epsilon));
        }
        if !(self.t_db > 0.0) {
            return bad("t_db", format!("must be positive, got {}", self.t_db));
        }
        if !(self.delta_y_db > 0.0) {
            return bad("delta_y_db", format!("must be positive, got {}", self.delta_y_db));
        }
        if self.iters_per_epoch == 0 || self.max_epochs == 0 {
            return bad("iters_per_epoch/max_epochs", "must be at least 1".into());
        }
        Ok(())
    }

    /// Linear reduction factor `t > 1`.
    pub fn t(&self) -> f64 {
        from_db(self.t_db)
    }

    pub fn delta_y(&self) -> f64 {
        from_db(self.delta_y_db)
    }

    /// Whether the cellular SINR is close enough to its target.
    pub fn cellular_ok(&self, gamma_0: f64, target: f64) -> bool {
        match self.mode {
            ToleranceMode::Db => to_db(gamma_0) >= (1.0 - self.epsilon) * to_db(target),
            ToleranceMode::Linear => gamma_0 >= (1.0 - self.epsilon) * target,
        }
    }
}

/// Femtocells (1-based) whose received power at the macrocell exceeds `y`.
pub fn dominant_set(state: &GameState, gm: &GainMatrix, y: f64) -> Vec<usize> {
    (1..=gm.n_femto()).filter(|&i| state.p[i] * gm.g(0, i) > y).collect()
}

/// Sufficient condition for cutting the powers of `pi` by `t` to lift the
/// cellular SINR to `(1 - eps) Gamma_0`:
///
/// `(1 - 1/t) sum_{i in pi} p_i g_0i >= p_max g_00 (1/gamma_0 - 1/((1 - eps) Gamma_0))`.
pub fn sufficient_reduction_check(
    state: &GameState,
    gm: &GainMatrix,
    pi: &[usize],
    t: f64,
    cellular_target: f64,
    epsilon: f64,
    p_max: f64,
) -> bool {
    let (received, required) = reduction_terms(state, gm, pi, cellular_target, epsilon, p_max);
    (1.0 - 1.0 / t) * received >= required
}

/// Smallest `t` satisfying [`sufficient_reduction_check`]; infinite when no
/// `t` suffices for this set.
pub fn min_reduction_factor(
    state: &GameState,
    gm: &GainMatrix,
    pi: &[usize],
    cellular_target: f64,
    epsilon: f64,
    p_max: f64,
) -> f64 {
    let (received, required) = reduction_terms(state, gm, pi, cellular_target, epsilon, p_max);
    if required <= 0.0 {
        1.0
    } else if required >= received {
        f64::INFINITY
    } else {
        1.0 / (1.0 - required / received)
    }
}

fn reduction_terms(
    state: &GameState,
    gm: &GainMatrix,
    pi: &[usize],
    cellular_target: f64,
    epsilon: f64,
    p_max: f64,
) -> (f64, f64) {
    let received: f64 = pi.iter().map(|&i| state.p[i] * gm.g(0, i)).sum();
    let required = p_max * gm.g(0, 0) * (1.0 / state.sinr[0] - 1.0 / ((1.0 - epsilon) * cellular_target));
    (received, required)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    /// Mean femtocell SINR in dB.
    pub mean_sinr_db: f64,
    /// Fraction of femtocells below their minimum target.
    pub frac_degraded: f64,
    /// `(1/N) sum over degraded of (Gamma_dB - gamma_dB) / Gamma_dB`.
    pub mean_reduction: f64,
}

/// Outcome metrics from final femtocell SINRs and their original minimum targets.
pub fn compute_metrics(femto_sinr: &[f64], min_targets: &[f64]) -> Metrics {
    let n = femto_sinr.len() as f64;
    let mut degraded = 0usize;
    let mut reduction = 0.0;
    let mut sum_db = 0.0;
    for (&s, &target) in femto_sinr.iter().zip(min_targets) {
        sum_db += to_db(s);
        if s < target {
            degraded += 1;
            let target_db = to_db(target);
            reduction += (target_db - to_db(s)) / target_db;
        }
    }
    Metrics {
        mean_sinr_db: sum_db / n,
        frac_degraded: degraded as f64 / n,
        mean_reduction: reduction / n,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    /// 1-based round index.
    pub epoch: usize,
    /// Threshold used for the cut after this round (W); `None` when no cut happened.
    pub y: Option<f64>,
    /// Dominant set selected after this round.
    pub dominant: Vec<usize>,
    pub gamma0: f64,
    pub converged: bool,
    /// Working femtocell targets the round ran with (linear).
    pub working_targets: Vec<f64>,
}

impl EpochRecord {
    pub fn mean_target_db(&self) -> f64 {
        self.working_targets.iter().map(|&t| to_db(t)).sum::<f64>() / self.working_targets.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtectionOutcome {
    pub final_state: GameState,
    /// Number of `M`-iteration game runs.
    pub rounds: usize,
    /// Rounds that ended with a target cut.
    pub reductions: usize,
    pub protected: bool,
    /// Final working femtocell targets in dB.
    pub working_targets_db: Vec<f64>,
    pub metrics: Metrics,
    pub trace: Vec<EpochRecord>,
}

impl ProtectionOutcome {
    pub fn trace_table(&self) -> Table {
        let mut t = Table::new(
            "protection_epochs",
            1,
            &["epoch", "y_dBm", "pi_size", "gamma0_dB", "mean_femto_target_dB", "converged"],
        );
        for r in &self.trace {
            t.push(vec![
                r.epoch.to_string(),
                r.y.map(|y| fmt(to_db(y / 1e-3))).unwrap_or_default(),
                r.dominant.len().to_string(),
                fmt(to_db(r.gamma0)),
                fmt(r.mean_target_db()),
                r.converged.to_string(),
            ]);
        }
        t
    }
}

pub fn run_protection(
    gm: &GainMatrix,
    sigma2: f64,
    targets: &SinrTargets,
    params: &GameParams,
    cfg: &ProtectionConfig,
) -> Result<ProtectionOutcome> {
    cfg.validate()?;
    let mut game = Game::new(gm, sigma2, targets, params)?;
    game.set_max_iter(cfg.iters_per_epoch);
    let cut = 1.0 / cfg.t();
    let delta_y = cfg.delta_y();

    let mut y = cfg.y0;
    let mut trace = Vec::new();
    let mut protected = false;
    let mut reductions = 0;
    let mut last = None;

    for epoch in 1..=cfg.max_epochs {
        let eq = game.run(game.initial_state());
        let gamma0 = eq.state.sinr[0];
        let mut record = EpochRecord {
            epoch,
            y: None,
            dominant: Vec::new(),
            gamma0,
            converged: eq.converged,
            working_targets: game.femto_targets().to_vec(),
        };

        if cfg.cellular_ok(gamma0, targets.gamma_c) {
            protected = true;
        } else if epoch < cfg.max_epochs {
            let threshold = *y.get_or_insert_with(|| {
                (1..=gm.n_femto())
                    .map(|i| eq.state.p[i] * gm.g(0, i))
                    .fold(0.0, f64::max)
                    / delta_y
            });
            let pi = dominant_set(&eq.state, gm, threshold);
            let working = game.femto_targets_mut();
            for &i in &pi {
                working[i - 1] *= cut;
            }
            reductions += 1;
            record.y = Some(threshold);
            record.dominant = pi;
            y = Some(threshold / delta_y);
        }
        trace.push(record);
        last = Some(eq.state);
        if protected {
            break;
        }
    }

    let final_state = last.expect("at least one round runs");
    let metrics = compute_metrics(&final_state.sinr[1..], &targets.gamma_f);
    Ok(ProtectionOutcome {
        rounds: trace.len(),
        reductions,
        protected,
        working_targets_db: trace
            .last()
            .map(|r| r.working_targets.iter().map(|&t| to_db(t)).collect())
            .unwrap_or_default(),
        metrics,
        final_state,
        trace,
    })
}
