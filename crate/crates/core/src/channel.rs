//! Path-loss gains, the normalized gain matrix and link budgets.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::from_db;
use crate::geometry::{gain_distance, NetworkGeometry};
use crate::table::{fmt, Table};

/// Fixed cellular loss in dB at carrier frequency `f_mhz`.
pub fn cellular_fixed_loss_db(f_mhz: f64) -> f64 {
    30.0 * f_mhz.log10() - 71.0
}

/// IMT-2000 style propagation constants. Losses are in dB and applied as
/// attenuation factors `10^(-L/10)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationParams {
    /// Outdoor exponent for cellular-user links.
    pub alpha_c: f64,
    /// Outdoor exponent for femto-user links to other base stations.
    pub alpha_fo: f64,
    /// Indoor exponent of the femto user to its own AP.
    pub beta: f64,
    pub kc_db: f64,
    pub kfi_db: f64,
    pub kfo_db: f64,
    /// Partition (wall) loss per indoor/outdoor crossing.
    pub w_db: f64,
    pub f_mhz: f64,
}

impl Default for PropagationParams {
    fn default() -> Self {
        Self::from_frequency(2000.0)
    }
}

impl PropagationParams {
    /// Defaults with `K_c` (and `K_fo = K_c`) derived from the carrier frequency.
    pub fn from_frequency(f_mhz: f64) -> Self {
        let kc_db = cellular_fixed_loss_db(f_mhz);
        PropagationParams {
            alpha_c: 4.0,
            alpha_fo: 4.0,
            beta: 3.0,
            kc_db,
            kfi_db: 37.0,
            kfo_db: kc_db,
            w_db: 5.0,
            f_mhz,
        }
    }

    /// Same constants with both outdoor exponents set to `alpha`.
    pub fn with_outdoor_exponent(mut self, alpha: f64) -> Self {
        self.alpha_c = alpha;
        self.alpha_fo = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha_c", self.alpha_c), ("alpha_fo", self.alpha_fo), ("beta", self.beta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("path-loss exponent must be positive, got {v}"),
                });
            }
        }
        Ok(())
    }

    pub fn kc(&self) -> f64 {
        from_db(-self.kc_db)
    }
    pub fn kfi(&self) -> f64 {
        from_db(-self.kfi_db)
    }
    pub fn kfo(&self) -> f64 {
        from_db(-self.kfo_db)
    }
    /// Linear partition-loss factor (< 1 for positive `w_db`).
    pub fn wall(&self) -> f64 {
        from_db(-self.w_db)
    }
}

fn path_factor(d: f64, exponent: f64) -> f64 {
    d.powf(-exponent).min(1.0)
}

/// Gain `g_{i,j}` from user `j` to base station `i`.
pub fn gain(i: usize, j: usize, geom: &NetworkGeometry, params: &PropagationParams) -> f64 {
    let d = gain_distance(geom.bs(i), geom.user(j));
    match (i, j) {
        (0, 0) => params.kc() * path_factor(d, params.alpha_c),
        (i, j) if i == j => params.kfi() * path_factor(geom.femto_radius.max(1.0), params.beta),
        (0, _) => params.kfo() * params.wall() * path_factor(d, params.alpha_fo),
        (_, 0) => params.kc() * params.wall() * path_factor(d, params.alpha_c),
        _ => params.kfo() * params.wall().powi(2) * path_factor(d, params.alpha_fo),
    }
}

/// Raw gains `g_{i,j}` and the normalized matrix `G_ij = g_{i,j} / g_{i,i}`
/// (zero diagonal).
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    raw: DMatrix<f64>,
    normalized: DMatrix<f64>,
}

impl GainMatrix {
    /// Builds from a square matrix of raw linear gains.
    pub fn from_raw(raw: DMatrix<f64>) -> Result<Self> {
        if !raw.is_square() || raw.nrows() < 1 {
            return Err(Error::Dimension {
                expected: raw.nrows(),
                actual: raw.ncols(),
            });
        }
        let n = raw.nrows();
        if let Some(k) = raw.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::NegativeEntry {
                row: k % n,
                col: k / n,
                value: raw[k],
            });
        }
        let mut normalized = DMatrix::zeros(n, n);
        for i in 0..n {
            let own = raw[(i, i)];
            if own <= 0.0 {
                return Err(Error::ZeroDirectGain { index: i });
            }
            for j in 0..n {
                if i != j {
                    normalized[(i, j)] = raw[(i, j)] / own;
                }
            }
        }
        Ok(GainMatrix { raw, normalized })
    }

    /// Number of femtocells `N` (matrix is `(N+1) x (N+1)`).
    pub fn n_femto(&self) -> usize {
        self.raw.nrows() - 1
    }

    pub fn size(&self) -> usize {
        self.raw.nrows()
    }

    pub fn raw(&self) -> &DMatrix<f64> {
        &self.raw
    }

    pub fn normalized(&self) -> &DMatrix<f64> {
        &self.normalized
    }

    pub fn g(&self, i: usize, j: usize) -> f64 {
        self.raw[(i, j)]
    }

    /// Normalized femto-to-macro gains `[G_01, ..., G_0N]`.
    pub fn q_c(&self) -> DVector<f64> {
        self.normalized.row(0).columns(1, self.n_femto()).transpose()
    }

    /// Normalized cellular-user-to-femto gains `[G_10, ..., G_N0]`.
    pub fn q_f(&self) -> DVector<f64> {
        self.normalized.column(0).rows(1, self.n_femto()).into_owned()
    }

    /// Femto-to-femto block `F`.
    pub fn f_block(&self) -> DMatrix<f64> {
        let n = self.n_femto();
        self.normalized.view((1, 1), (n, n)).into_owned()
    }

    pub fn link_budget(&self) -> LinkBudget {
        LinkBudget::from_product(self.q_c().dot(&self.q_f()))
    }

    pub fn to_table(&self) -> Table {
        let n = self.size();
        let mut header = vec!["row".to_string()];
        header.extend((0..n).map(|j| format!("g{j}")));
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut table = Table::new(&format!("gain_matrix_n{}", self.n_femto()), 1, &header_refs);
        for i in 0..n {
            let mut row = vec![i.to_string()];
            row.extend((0..n).map(|j| fmt(self.raw[(i, j)])));
            table.push(row);
        }
        table
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        self.to_table().write_csv(out)
    }
}

pub fn build_gain_matrix(geom: &NetworkGeometry, params: &PropagationParams) -> Result<GainMatrix> {
    params.validate()?;
    if geom.n_femto() == 0 {
        return Err(Error::InvalidParameter {
            name: "geometry",
            reason: "at least one femtocell is required".into(),
        });
    }
    let n = geom.n_femto() + 1;
    let raw = DMatrix::from_fn(n, n, |i, j| gain(i, j, geom, params));
    GainMatrix::from_raw(raw)
}

/// Link budget `L = 1 / (q_c^T q_f)`. An infinite value marks the case where
/// the tiers do not couple at all.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkBudget {
    pub linear: f64,
    pub db: f64,
}

impl LinkBudget {
    pub fn from_product(cross: f64) -> Self {
        if cross > 0.0 {
            LinkBudget {
                linear: 1.0 / cross,
                db: -10.0 * cross.log10(),
            }
        } else {
            LinkBudget {
                linear: f64::INFINITY,
                db: f64::INFINITY,
            }
        }
    }

    pub fn is_unbounded(&self) -> bool {
        self.linear.is_infinite()
    }
}

pub fn link_budget(gm: &GainMatrix) -> LinkBudget {
    gm.link_budget()
}

/// Closed-form link budget under equal outdoor exponents, assuming every link
/// is longer than the reference distance.
pub fn closed_form_link_budget(geom: &NetworkGeometry, params: &PropagationParams) -> f64 {
    let alpha = params.alpha_c;
    let d = geom.link_distance(0, 0);
    let sum: f64 = (1..=geom.n_femto())
        .map(|i| geom.link_distance(0, i).powf(-alpha) * geom.link_distance(i, 0).powf(-alpha))
        .sum();
    params.kfi() * geom.femto_radius.powf(-params.beta) / (params.wall().powi(2) * params.kfo())
        * d.powf(-alpha)
        / sum
}

/// Interference distance products `D_{0,i} * D_{i,0}` for every femtocell.
pub fn interference_products(geom: &NetworkGeometry) -> Vec<f64> {
    (1..=geom.n_femto())
        .map(|i| geom.link_distance(0, i) * geom.link_distance(i, 0))
        .collect()
}

/// True when the link budget grows with the common outdoor exponent at
/// `alpha`: the `P^-alpha`-weighted mean of `ln P` over interference distance
/// products exceeds `ln D`.
pub fn slope_condition(products: &[f64], cellular_distance: f64, alpha: f64) -> bool {
    let (num, den) = products.iter().fold((0.0, 0.0), |(num, den), &p| {
        let w = p.powf(-alpha);
        (num + w * p.ln(), den + w)
    });
    num / den > cellular_distance.ln()
}

pub fn link_budget_slope_check(geom: &NetworkGeometry, alpha: f64) -> bool {
    slope_condition(&interference_products(geom), geom.link_distance(0, 0), alpha)
}
