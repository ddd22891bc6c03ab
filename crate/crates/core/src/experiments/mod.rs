//! Experiment configuration, shared trial machinery and the Monte Carlo
//! harnesses.

mod analysis;
mod monte_carlo;
mod table2;

pub use analysis::{contour_experiment, link_budget_cdf, link_budget_vs_alpha};
pub use monte_carlo::{
    adapt_single, experiment_one, experiment_two, protect_single, summarize_one, summarize_two, trial_one_table,
    trial_two_table, TrialOne, TrialTwo,
};
pub use table2::{table2_geometry, table2_scenario, Table2Report, TABLE2_TARGETS_DB};

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{build_gain_matrix, GainMatrix, PropagationParams};
use crate::error::{Error, Result};
use crate::feasibility::{rho, scale_rows, SinrTargets};
use crate::from_db;
use crate::geometry::{make_grid_layout, make_random_layout_with, LayoutParams, NetworkGeometry};
use crate::pareto::max_cellular_sinr_with_rho;
use crate::protection::ProtectionConfig;

/// Target SNR of a full-power cell-edge cellular user.
pub const CELL_EDGE_SNR_DB: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutKind {
    Grid,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutConfig {
    pub kind: LayoutKind,
    /// Femtocell counts to sweep.
    pub n_femto: Vec<usize>,
    /// `(D, D_f)` positions as fractions of `R_c`.
    pub positions: Vec<[f64; 2]>,
    #[serde(flatten)]
    pub dims: LayoutParams,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            kind: LayoutKind::Grid,
            n_femto: vec![4, 16, 64],
            positions: vec![[0.9, 0.9]],
            dims: LayoutParams::default(),
        }
    }
}

/// Target ranges in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetRanges {
    pub gamma_c_min_db: f64,
    pub gamma_c_max_db: f64,
    pub gamma_f_min_db: f64,
    pub gamma_f_max_db: f64,
    /// Backoff applied to the highest obtainable cellular target.
    pub delta_c_db: f64,
}

impl Default for TargetRanges {
    fn default() -> Self {
        TargetRanges {
            gamma_c_min_db: 3.0,
            gamma_c_max_db: 10.0,
            gamma_f_min_db: 5.0,
            gamma_f_max_db: 25.0,
            delta_c_db: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameConfig {
    /// `(a, b)` pairs swept by the first experiment.
    pub coefficients: Vec<[f64; 2]>,
    /// `(a, b)` used under link-quality protection.
    pub protection_coefficients: [f64; 2],
    pub p_max: f64,
    pub max_iter: usize,
    pub conv_tol: f64,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            coefficients: vec![[0.1, 1.0], [1.0, 1.0], [10.0, 1.0]],
            protection_coefficients: [1.0, 1.0],
            p_max: 1.0,
            max_iter: 1000,
            conv_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Femtocell count used for the per-tier contours.
    pub contour_n_femto: usize,
    pub contour_positions: Vec<[f64; 2]>,
    pub contour_points: usize,
    /// Lowest common femtocell target on the contour grid (dB).
    pub contour_min_db: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_steps: usize,
    /// Random layouts per femtocell count for the link-budget CDF.
    pub cdf_layouts: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            contour_n_femto: 16,
            contour_positions: vec![[0.1, 0.1], [0.1, 0.5], [0.9, 0.9]],
            contour_points: 200,
            contour_min_db: -20.0,
            alpha_min: 2.0,
            alpha_max: 6.0,
            alpha_steps: 41,
            cdf_layouts: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    pub layout: LayoutConfig,
    pub propagation: PropagationParams,
    pub targets: TargetRanges,
    pub game: GameConfig,
    pub protection: ProtectionConfig,
    pub analysis: AnalysisConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            trials: 5000,
            layout: LayoutConfig::default(),
            propagation: PropagationParams::default(),
            targets: TargetRanges::default(),
            game: GameConfig::default(),
            protection: ProtectionConfig::default(),
            analysis: AnalysisConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::Config(reason));
        let t = &self.targets;
        if t.gamma_c_min_db > t.gamma_c_max_db || t.gamma_f_min_db > t.gamma_f_max_db {
            return bad("target ranges need min <= max".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.layout.n_femto.is_empty() || self.layout.n_femto.contains(&0) {
            return bad("layout.n_femto needs at least one positive count".into());
        }
        if self.layout.kind == LayoutKind::Grid {
            if let Some(n) = self.layout.n_femto.iter().find(|&&n| ((n as f64).sqrt().round() as usize).pow(2) != n) {
                return bad(format!("grid layouts need perfect-square femtocell counts, got {n}"));
            }
        }
        if self.game.coefficients.iter().flatten().any(|&c| !(c > 0.0)) {
            return bad("utility coefficients must be positive".into());
        }
        if !(self.game.p_max > 0.0) {
            return bad("p_max must be positive".into());
        }
        self.propagation.validate()?;
        self.protection.validate()?;
        Ok(())
    }

    /// Noise power from the cell-edge SNR rule.
    pub fn sigma2(&self) -> f64 {
        calibrate_noise(&self.propagation, self.layout.dims.cell_radius, self.game.p_max)
    }
}

/// Noise power such that a full-power cellular user at the cell edge sees a
/// 20 dB SNR at the macrocell.
pub fn calibrate_noise(params: &PropagationParams, cell_radius: f64, p_max: f64) -> f64 {
    let edge_gain = params.kc() * cell_radius.max(1.0).powf(-params.alpha_c).min(1.0);
    p_max * edge_gain / from_db(CELL_EDGE_SNR_DB)
}

/// Independent per-trial stream: the scenario tag selects the key and the
/// trial index selects the ChaCha stream, so any trial can be replayed alone.
pub fn trial_rng(master_seed: u64, scenario: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed ^ scenario.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(trial);
    rng
}

fn uniform_db<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Femtocell targets uniform in `[Gamma_f,min, Gamma_f,max]` dB and a cellular
/// target uniform in `[Gamma_c,min, Gamma_c,max]` dB.
pub fn sample_targets<R: Rng + ?Sized>(ranges: &TargetRanges, n_femto: usize, rng: &mut R) -> SinrTargets {
    let gamma_f: Vec<f64> = (0..n_femto)
        .map(|_| from_db(uniform_db(ranges.gamma_f_min_db, ranges.gamma_f_max_db, rng)))
        .collect();
    let gamma_c = from_db(uniform_db(ranges.gamma_c_min_db, ranges.gamma_c_max_db, rng));
    SinrTargets { gamma_c, gamma_f }
}

/// Femtocell targets after forcing `rho(Gamma_f F) < 1`, with the spectral
/// radius measured before rescaling.
#[derive(Debug, Clone, PartialEq)]
pub struct Rescaled {
    pub gamma_f: Vec<f64>,
    pub rho_before: f64,
    pub rho_after: f64,
    pub scaled: bool,
}

/// Divides all femtocell targets by `rho(Gamma_f F) (1 + 1e-3)` when the
/// femtocell tier alone is infeasible.
pub fn rescale_infeasible(gamma_f: &[f64], f: &nalgebra::DMatrix<f64>) -> Result<Rescaled> {
    let rho_before = rho(&scale_rows(gamma_f, f))?;
    if rho_before < 1.0 {
        return Ok(Rescaled {
            gamma_f: gamma_f.to_vec(),
            rho_before,
            rho_after: rho_before,
            scaled: false,
        });
    }
    let factor = rho_before * (1.0 + 1e-3);
    Ok(Rescaled {
        gamma_f: gamma_f.iter().map(|g| g / factor).collect(),
        rho_before,
        rho_after: rho_before / factor,
        scaled: true,
    })
}

/// `max{Gamma_c,min, Gamma_c,max-obtainable / Delta_c}` (all linear except
/// `delta_c_db`).
pub fn cellular_target_rule(
    gm: &GainMatrix,
    gamma_f: &[f64],
    kappa: f64,
    rho_femto: f64,
    delta_c_db: f64,
    gamma_c_min: f64,
) -> Result<f64> {
    let best = max_cellular_sinr_with_rho(gamma_f, gm, kappa, rho_femto)?;
    Ok(gamma_c_min.max(best / from_db(delta_c_db)))
}

pub(crate) fn layout_for(cfg: &ExperimentConfig, n: usize, d: f64, df: f64, trial_seed: &mut ChaCha8Rng) -> Result<NetworkGeometry> {
    match cfg.layout.kind {
        LayoutKind::Grid => make_grid_layout(n, d, df, &cfg.layout.dims),
        LayoutKind::Random => make_random_layout_with(n, df, d, &cfg.layout.dims, trial_seed),
    }
}

pub(crate) fn gains_for(cfg: &ExperimentConfig, geom: &NetworkGeometry) -> Result<GainMatrix> {
    build_gain_matrix(geom, &cfg.propagation)
}

/// Runs `f` for every trial index in parallel and returns results in index order.
pub(crate) fn run_trials<T, F>(trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    (0..trials).into_par_iter().map(f).collect()
}
