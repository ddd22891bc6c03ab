use nalgebra::DMatrix;

use super::ExperimentConfig;
use crate::channel::{build_gain_matrix, GainMatrix};
use crate::error::Result;
use crate::feasibility::{is_feasible, rho, scale_rows, SinrTargets};
use crate::game::{Game, GameParams, GameState};
use crate::geometry::{make_grid_layout, NetworkGeometry};
use crate::protection::{run_protection, ProtectionOutcome};
use crate::table::{fmt, Table};
use crate::to_db;

/// Targets of the reference 16-femtocell scenario in dB, cellular user first.
pub const TABLE2_TARGETS_DB: [f64; 17] = [
    21.0034, 25.3945, 27.8943, 22.6351, 27.1217, 14.0872, 14.4560, 28.3470, 25.7148, 17.9488, 8.4026, 28.3375,
    12.3944, 8.6965, 19.4412, 20.3513, 26.7008,
];

/// 4x4 grid with cellular user and grid center both at `0.1 R_c`.
pub fn table2_geometry(cfg: &ExperimentConfig) -> Result<NetworkGeometry> {
    make_grid_layout(16, 0.1, 0.1, &cfg.layout.dims)
}

#[derive(Debug, Clone)]
pub struct Table2Report {
    pub geometry: NetworkGeometry,
    pub gains: GainMatrix,
    pub targets: SinrTargets,
    /// `rho(Gamma G)` of the requested targets.
    pub rho_initial: f64,
    /// State after the first `M`-iteration round, before any cut.
    pub first_round: GameState,
    pub outcome: ProtectionOutcome,
    /// `rho(diag(gamma) G)` with the achieved SINRs as targets.
    pub rho_effective: f64,
}

impl Table2Report {
    pub fn users_table(&self) -> Table {
        let mut t = Table::new(
            "table2_users",
            1,
            &["user_id", "d0i_over_R", "target_dB", "first_sinr_dB", "final_sinr_dB", "p_dBm", "working_target_dB"],
        );
        let dists = self.geometry.normalized_ap_distances();
        let all = self.targets.all();
        let last = &self.outcome.final_state;
        for u in 0..all.len() {
            t.push(vec![
                u.to_string(),
                if u == 0 { String::new() } else { fmt(dists[u - 1]) },
                fmt(to_db(all[u])),
                fmt(to_db(self.first_round.sinr[u])),
                fmt(to_db(last.sinr[u])),
                fmt(to_db(last.p[u] / 1e-3)),
                if u == 0 {
                    String::new()
                } else {
                    fmt(self.outcome.working_targets_db[u - 1])
                },
            ]);
        }
        t
    }

    pub fn summary_table(&self) -> Table {
        let mut t = Table::new("table2_summary", 1, &["quantity", "value"]);
        let m = &self.outcome.metrics;
        let rows = [
            ("rho_initial", fmt(self.rho_initial)),
            ("rho_effective", fmt(self.rho_effective)),
            ("rounds", self.outcome.rounds.to_string()),
            ("reductions", self.outcome.reductions.to_string()),
            ("protected", self.outcome.protected.to_string()),
            ("gamma0_first_dB", fmt(to_db(self.first_round.sinr[0]))),
            ("gamma0_final_dB", fmt(to_db(self.outcome.final_state.sinr[0]))),
            ("mean_femto_sinr_dB", fmt(m.mean_sinr_db)),
            ("frac_degraded", fmt(m.frac_degraded)),
            ("mean_reduction", fmt(m.mean_reduction)),
        ];
        for (k, v) in rows {
            t.push(vec![k.to_string(), v]);
        }
        t
    }
}

/// Runs link-quality protection on the fixed 16-femtocell scenario.
pub fn table2_scenario(cfg: &ExperimentConfig) -> Result<Table2Report> {
    let geometry = table2_geometry(cfg)?;
    let gains = build_gain_matrix(&geometry, &cfg.propagation)?;
    let targets = SinrTargets::from_db(TABLE2_TARGETS_DB[0], &TABLE2_TARGETS_DB[1..])?;
    let rho_initial = is_feasible(&targets, &gains)?.rho;
    let sigma2 = cfg.sigma2();
    let [a, b] = cfg.game.protection_coefficients;
    let params = GameParams {
        max_iter: cfg.protection.iters_per_epoch,
        conv_tol: cfg.game.conv_tol,
        ..GameParams::uniform(16, a, b, cfg.game.p_max)
    };

    let game = Game::new(&gains, sigma2, &targets, &params)?;
    let first_round = game.run(game.initial_state()).state;
    let outcome = run_protection(&gains, sigma2, &targets, &params, &cfg.protection)?;
    let rho_effective = effective_rho(&outcome.final_state.sinr, gains.normalized())?;

    Ok(Table2Report {
        geometry,
        gains,
        targets,
        rho_initial,
        first_round,
        outcome,
        rho_effective,
    })
}

fn effective_rho(sinr: &[f64], g: &DMatrix<f64>) -> Result<f64> {
    rho(&scale_rows(sinr, g))
}
