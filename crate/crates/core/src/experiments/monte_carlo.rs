use std::collections::BTreeMap;

use serde::Serialize;

use super::{
    cellular_target_rule, gains_for, layout_for, rescale_infeasible, run_trials, sample_targets, trial_rng,
    ExperimentConfig,
};
use crate::error::{Error, Result};
use crate::feasibility::{is_feasible, SinrTargets};
use crate::from_db;
use crate::game::{trace_table, Game, GameParams};
use crate::pareto::kappa_rule;
use crate::protection::run_protection;
use crate::table::{fmt, Table};
use crate::to_db;

const EXP_ONE: u64 = 1;
const EXP_TWO: u64 = 2;

/// Stream key shared by every `(a, b)` pair so coefficient sweeps stay paired.
fn scenario_tag(experiment: u64, n: usize, position: usize) -> u64 {
    (experiment << 48) | ((position as u64) << 32) | n as u64
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    sum / count as f64
}

fn mean_db(xs: &[f64]) -> f64 {
    mean(xs.iter().map(|&x| to_db(x)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOne {
    pub n: usize,
    pub d: f64,
    pub df: f64,
    pub a: f64,
    pub b: f64,
    pub seed: u64,
    pub trial: usize,
    pub rho_initial: f64,
    pub feasible: bool,
    pub kappa: f64,
    pub gamma0_target_db: f64,
    pub mean_target_db: f64,
    pub mean_sinr_db: f64,
    pub gamma0_db: f64,
    pub converged: bool,
    pub iterations: usize,
}

const ONE_HEADER: [&str; 16] = [
    "n_femto",
    "d",
    "df",
    "a",
    "b",
    "seed",
    "trial",
    "rho_initial",
    "feasible",
    "kappa",
    "gamma0_target_dB",
    "mean_target_dB",
    "mean_sinr_dB",
    "gamma0_dB",
    "converged",
    "iterations",
];

impl TrialOne {
    fn row(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.d.to_string(),
            self.df.to_string(),
            self.a.to_string(),
            self.b.to_string(),
            self.seed.to_string(),
            self.trial.to_string(),
            fmt(self.rho_initial),
            self.feasible.to_string(),
            fmt(self.kappa),
            fmt(self.gamma0_target_db),
            fmt(self.mean_target_db),
            fmt(self.mean_sinr_db),
            fmt(self.gamma0_db),
            self.converged.to_string(),
            self.iterations.to_string(),
        ]
    }
}

#[allow(clippy::too_many_arguments)]
fn trial_one(
    cfg: &ExperimentConfig,
    n: usize,
    position: usize,
    a: f64,
    b: f64,
    trial: usize,
    trace: Option<&mut Table>,
) -> Result<TrialOne> {
    let [d, df] = cfg.layout.positions[position];
    let mut rng = trial_rng(cfg.seed, scenario_tag(EXP_ONE, n, position), trial as u64);
    let geom = layout_for(cfg, n, d, df, &mut rng)?;
    let gm = gains_for(cfg, &geom)?;
    let sigma2 = cfg.sigma2();

    let sampled = sample_targets(&cfg.targets, n, &mut rng);
    let femto = rescale_infeasible(&sampled.gamma_f, &gm.f_block())?;
    let kappa = kappa_rule(femto.rho_after);
    let gamma_c = cellular_target_rule(
        &gm,
        &femto.gamma_f,
        kappa,
        femto.rho_after,
        cfg.targets.delta_c_db,
        from_db(cfg.targets.gamma_c_min_db),
    )?;
    let targets = SinrTargets::new(gamma_c, femto.gamma_f)?;
    let feas = is_feasible(&targets, &gm)?;

    let params = GameParams {
        max_iter: cfg.game.max_iter,
        conv_tol: cfg.game.conv_tol,
        ..GameParams::uniform(n, a, b, cfg.game.p_max)
    };
    let game = Game::new(&gm, sigma2, &targets, &params)?;
    let eq = match trace {
        Some(t) => game.run_traced(game.initial_state(), t),
        None => game.run(game.initial_state()),
    };

    Ok(TrialOne {
        n,
        d,
        df,
        a,
        b,
        seed: cfg.seed,
        trial,
        rho_initial: feas.rho,
        feasible: feas.feasible,
        kappa,
        gamma0_target_db: to_db(gamma_c),
        mean_target_db: mean_db(&targets.gamma_f),
        mean_sinr_db: mean_db(&eq.state.sinr[1..]),
        gamma0_db: to_db(eq.state.sinr[0]),
        converged: eq.converged,
        iterations: eq.iterations,
    })
}

/// Equilibrium femtocell SINRs under utility-based adaptation, for every
/// femtocell count, position and `(a, b)` pair in the config.
pub fn experiment_one(cfg: &ExperimentConfig) -> Result<(Vec<TrialOne>, Table)> {
    let mut all = Vec::new();
    for &n in &cfg.layout.n_femto {
        for position in 0..cfg.layout.positions.len() {
            for &[a, b] in &cfg.game.coefficients {
                all.extend(run_trials(cfg.trials, |t| trial_one(cfg, n, position, a, b, t, None))?);
            }
        }
    }
    let table = trial_one_table(&all);
    Ok((all, table))
}

/// One row per trial of the first experiment.
pub fn trial_one_table(trials: &[TrialOne]) -> Table {
    let mut table = Table::new("mc_exp1_trials", 1, &ONE_HEADER);
    for t in trials {
        table.push(t.row());
    }
    table
}

/// Single traced run of the first experiment's setup.
pub fn adapt_single(
    cfg: &ExperimentConfig,
    n: usize,
    position: usize,
    a: f64,
    b: f64,
    trial: usize,
) -> Result<(TrialOne, Table)> {
    check_position(cfg, position)?;
    let mut trace = trace_table();
    let result = trial_one(cfg, n, position, a, b, trial, Some(&mut trace))?;
    Ok((result, trace))
}

fn check_position(cfg: &ExperimentConfig, position: usize) -> Result<()> {
    if position >= cfg.layout.positions.len() {
        return Err(Error::Config(format!(
            "position index {position} out of range ({} configured)",
            cfg.layout.positions.len()
        )));
    }
    Ok(())
}

type Key = (usize, u64, u64, u64, u64);

fn key(n: usize, d: f64, df: f64, a: f64, b: f64) -> Key {
    (n, d.to_bits(), df.to_bits(), a.to_bits(), b.to_bits())
}

/// Per-configuration means of the first experiment.
pub fn summarize_one(trials: &[TrialOne]) -> Table {
    let mut groups: BTreeMap<Key, Vec<&TrialOne>> = BTreeMap::new();
    for t in trials {
        groups.entry(key(t.n, t.d, t.df, t.a, t.b)).or_default().push(t);
    }
    let mut table = Table::new(
        "mc_exp1_summary",
        1,
        &[
            "n_femto",
            "d",
            "df",
            "a",
            "b",
            "trials",
            "mean_target_dB",
            "mean_sinr_dB",
            "improvement_pct",
            "frac_converged",
        ],
    );
    for rows in groups.values() {
        let first = rows[0];
        let target = mean(rows.iter().map(|t| t.mean_target_db));
        let sinr = mean(rows.iter().map(|t| t.mean_sinr_db));
        table.push(vec![
            first.n.to_string(),
            first.d.to_string(),
            first.df.to_string(),
            first.a.to_string(),
            first.b.to_string(),
            rows.len().to_string(),
            fmt(target),
            fmt(sinr),
            fmt(100.0 * (sinr - target) / target),
            fmt(mean(rows.iter().map(|t| t.converged as u8 as f64))),
        ]);
    }
    table
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialTwo {
    pub n: usize,
    pub d: f64,
    pub df: f64,
    pub seed: u64,
    pub trial: usize,
    pub rho_initial: f64,
    pub feasible: bool,
    pub gamma0_target_db: f64,
    pub gamma0_db: f64,
    pub protected: bool,
    pub rounds: usize,
    pub mean_target_db: f64,
    pub mean_sinr_db: f64,
    pub frac_degraded: f64,
    pub mean_reduction: f64,
}

const TWO_HEADER: [&str; 15] = [
    "n_femto",
    "d",
    "df",
    "seed",
    "trial",
    "rho_initial",
    "feasible",
    "gamma0_target_dB",
    "gamma0_dB",
    "protected",
    "rounds",
    "mean_target_dB",
    "mean_sinr_dB",
    "frac_degraded",
    "mean_reduction",
];

impl TrialTwo {
    fn row(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.d.to_string(),
            self.df.to_string(),
            self.seed.to_string(),
            self.trial.to_string(),
            fmt(self.rho_initial),
            self.feasible.to_string(),
            fmt(self.gamma0_target_db),
            fmt(self.gamma0_db),
            self.protected.to_string(),
            self.rounds.to_string(),
            fmt(self.mean_target_db),
            fmt(self.mean_sinr_db),
            fmt(self.frac_degraded),
            fmt(self.mean_reduction),
        ]
    }
}

fn trial_two(
    cfg: &ExperimentConfig,
    n: usize,
    position: usize,
    trial: usize,
    epochs: Option<&mut Table>,
) -> Result<TrialTwo> {
    let [d, df] = cfg.layout.positions[position];
    let mut rng = trial_rng(cfg.seed, scenario_tag(EXP_TWO, n, position), trial as u64);
    let geom = layout_for(cfg, n, d, df, &mut rng)?;
    let gm = gains_for(cfg, &geom)?;
    let sigma2 = cfg.sigma2();

    let sampled = sample_targets(&cfg.targets, n, &mut rng);
    let femto = rescale_infeasible(&sampled.gamma_f, &gm.f_block())?;
    let targets = SinrTargets::new(sampled.gamma_c, femto.gamma_f)?;
    let feas = is_feasible(&targets, &gm)?;

    let [a, b] = cfg.game.protection_coefficients;
    let params = GameParams {
        max_iter: cfg.game.max_iter,
        conv_tol: cfg.game.conv_tol,
        ..GameParams::uniform(n, a, b, cfg.game.p_max)
    };
    let out = run_protection(&gm, sigma2, &targets, &params, &cfg.protection)?;
    if let Some(t) = epochs {
        t.extend(out.trace_table());
    }

    Ok(TrialTwo {
        n,
        d,
        df,
        seed: cfg.seed,
        trial,
        rho_initial: feas.rho,
        feasible: feas.feasible,
        gamma0_target_db: to_db(targets.gamma_c),
        gamma0_db: to_db(out.final_state.sinr[0]),
        protected: out.protected,
        rounds: out.rounds,
        mean_target_db: mean_db(&targets.gamma_f),
        mean_sinr_db: out.metrics.mean_sinr_db,
        frac_degraded: out.metrics.frac_degraded,
        mean_reduction: out.metrics.mean_reduction,
    })
}

/// Utility adaptation plus link-quality protection with random cellular targets.
pub fn experiment_two(cfg: &ExperimentConfig) -> Result<(Vec<TrialTwo>, Table)> {
    let mut all = Vec::new();
    for &n in &cfg.layout.n_femto {
        for position in 0..cfg.layout.positions.len() {
            all.extend(run_trials(cfg.trials, |t| trial_two(cfg, n, position, t, None))?);
        }
    }
    let table = trial_two_table(&all);
    Ok((all, table))
}

/// One row per trial of the second experiment.
pub fn trial_two_table(trials: &[TrialTwo]) -> Table {
    let mut table = Table::new("mc_exp2_trials", 1, &TWO_HEADER);
    for t in trials {
        table.push(t.row());
    }
    table
}

/// Single protection run of the second experiment's setup with its epoch trace.
pub fn protect_single(cfg: &ExperimentConfig, n: usize, position: usize, trial: usize) -> Result<(TrialTwo, Table)> {
    check_position(cfg, position)?;
    let mut epochs = Table::new(
        "protection_epochs",
        1,
        &["epoch", "y_dBm", "pi_size", "gamma0_dB", "mean_femto_target_dB", "converged"],
    );
    let result = trial_two(cfg, n, position, trial, Some(&mut epochs))?;
    Ok((result, epochs))
}

/// Per-configuration means of the second experiment.
pub fn summarize_two(trials: &[TrialTwo], reference_target_db: f64) -> Table {
    let mut groups: BTreeMap<Key, Vec<&TrialTwo>> = BTreeMap::new();
    for t in trials {
        groups.entry(key(t.n, t.d, t.df, 0.0, 0.0)).or_default().push(t);
    }
    let mut table = Table::new(
        "mc_exp2_summary",
        1,
        &[
            "n_femto",
            "d",
            "df",
            "trials",
            "reference_target_dB",
            "mean_target_dB",
            "mean_sinr_dB",
            "improvement_pct",
            "frac_degraded",
            "mean_reduction_pct",
            "frac_protected",
        ],
    );
    for rows in groups.values() {
        let first = rows[0];
        let target = mean(rows.iter().map(|t| t.mean_target_db));
        let sinr = mean(rows.iter().map(|t| t.mean_sinr_db));
        table.push(vec![
            first.n.to_string(),
            first.d.to_string(),
            first.df.to_string(),
            rows.len().to_string(),
            fmt(reference_target_db),
            fmt(target),
            fmt(sinr),
            fmt(100.0 * (sinr - target) / target),
            fmt(mean(rows.iter().map(|t| t.frac_degraded))),
            fmt(100.0 * mean(rows.iter().map(|t| t.mean_reduction))),
            fmt(mean(rows.iter().map(|t| t.protected as u8 as f64))),
        ]);
    }
    table
}
