use super::{trial_rng, ExperimentConfig};
use crate::channel::{build_gain_matrix, closed_form_link_budget, link_budget_slope_check};
use crate::error::Result;
use crate::from_db;
use crate::geometry::{make_grid_layout, make_random_layout_with};
use crate::pareto::{default_grid, pareto_contour, KappaChoice};
use crate::table::{fmt, Table};
use crate::to_db;

const CDF_SCENARIO: u64 = 3 << 48;

/// Per-tier SINR contours for each configured `(D, D_f)` position.
pub fn contour_experiment(cfg: &ExperimentConfig) -> Result<Table> {
    let a = &cfg.analysis;
    let mut out = Table::new("contour", 1, &["label", "gamma_f_dB", "gamma_c_dB", "kappa", "bound_dB"]);
    for &[d, df] in &a.contour_positions {
        let geom = make_grid_layout(a.contour_n_femto, d, df, &cfg.layout.dims)?;
        let gm = build_gain_matrix(&geom, &cfg.propagation)?;
        let grid = default_grid(&gm, from_db(a.contour_min_db), a.contour_points)?;
        let contour = pareto_contour(&grid, &gm, KappaChoice::Rule)?;
        out.extend(contour.to_table(&format!("D={d} Df={df}")));
    }
    Ok(out)
}

fn alpha_grid(cfg: &ExperimentConfig) -> Vec<f64> {
    let a = &cfg.analysis;
    match a.alpha_steps {
        0 => Vec::new(),
        1 => vec![a.alpha_min],
        n => (0..n)
            .map(|k| a.alpha_min + (a.alpha_max - a.alpha_min) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Link budget against the common outdoor exponent on grid layouts, with the
/// closed form and the sign of its slope.
pub fn link_budget_vs_alpha(cfg: &ExperimentConfig) -> Result<Table> {
    let mut out = Table::new(
        "link_budget_alpha",
        1,
        &["n_femto", "d", "df", "alpha", "L_dB", "L_closed_dB", "increasing"],
    );
    for &n in &cfg.layout.n_femto {
        for &[d, df] in &cfg.layout.positions {
            let geom = make_grid_layout(n, d, df, &cfg.layout.dims)?;
            for alpha in alpha_grid(cfg) {
                let params = cfg.propagation.with_outdoor_exponent(alpha);
                let gm = build_gain_matrix(&geom, &params)?;
                out.push(vec![
                    n.to_string(),
                    d.to_string(),
                    df.to_string(),
                    fmt(alpha),
                    fmt(gm.link_budget().db),
                    fmt(to_db(closed_form_link_budget(&geom, &params))),
                    link_budget_slope_check(&geom, alpha).to_string(),
                ]);
            }
        }
    }
    Ok(out)
}

/// Empirical CDF of the link budget over random femtocell drops.
pub fn link_budget_cdf(cfg: &ExperimentConfig) -> Result<Table> {
    let layouts = cfg.analysis.cdf_layouts;
    let mut out = Table::new("link_budget_cdf", 1, &["n_femto", "d", "df", "rank", "L_dB", "cdf"]);
    for &n in &cfg.layout.n_femto {
        for (position, &[d, df]) in cfg.layout.positions.iter().enumerate() {
            let tag = CDF_SCENARIO | ((position as u64) << 32) | n as u64;
            let mut values = super::run_trials(layouts, |k| {
                let mut rng = trial_rng(cfg.seed, tag, k as u64);
                let geom = make_random_layout_with(n, df, d, &cfg.layout.dims, &mut rng)?;
                Ok(build_gain_matrix(&geom, &cfg.propagation)?.link_budget().db)
            })?;
            values.sort_by(f64::total_cmp);
            for (rank, v) in values.iter().enumerate() {
                out.push(vec![
                    n.to_string(),
                    d.to_string(),
                    df.to_string(),
                    (rank + 1).to_string(),
                    fmt(*v),
                    fmt((rank + 1) as f64 / layouts as f64),
                ]);
            }
        }
    }
    Ok(out)
}
