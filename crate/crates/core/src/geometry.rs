//! Two-tier network layouts.
//!
//! Index conventions used throughout the crate: base station `0` is the
//! macrocell, base stations `1..=N` are femtocell access points, user `0` is
//! the scheduled cellular user and user `i >= 1` is the scheduled user of
//! femtocell `i`. All lengths are meters.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::Table;

/// Reference distance below which path loss saturates.
pub const REFERENCE_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Point at `radius` from `self` along angle `theta` (radians).
    pub fn offset_polar(self, radius: f64, theta: f64) -> Self {
        Point::new(self.x + radius * theta.cos(), self.y + radius * theta.sin())
    }
}

/// Euclidean distance.
pub fn distance(a: Point, b: Point) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Distance used by the path-loss model, clamped below at the reference distance.
pub fn gain_distance(a: Point, b: Point) -> f64 {
    distance(a, b).max(REFERENCE_DISTANCE_M)
}

/// Dimensional constants shared by all layouts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutParams {
    /// Macrocell coverage radius `R_c`.
    pub cell_radius: f64,
    /// Femtocell radius `R_f`; femto users sit on this circle around their AP.
    pub femto_radius: f64,
    /// Side of the square femtocell grid `D_grid`.
    pub grid_extent: f64,
}

impl Default for LayoutParams {
    fn default() -> Self {
        LayoutParams {
            cell_radius: 1000.0,
            femto_radius: 30.0,
            grid_extent: 500.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkGeometry {
    pub macro_bs: Point,
    pub cell_radius: f64,
    pub femto_aps: Vec<Point>,
    pub femto_radius: f64,
    pub cellular_user: Point,
    pub femto_users: Vec<Point>,
    /// Grid side length, present for grid layouts only.
    pub grid_extent: Option<f64>,
}

impl NetworkGeometry {
    pub fn n_femto(&self) -> usize {
        self.femto_aps.len()
    }

    /// Position of base station `i` (0 = macrocell).
    pub fn bs(&self, i: usize) -> Point {
        if i == 0 {
            self.macro_bs
        } else {
            self.femto_aps[i - 1]
        }
    }

    /// Position of user `j` (0 = cellular user).
    pub fn user(&self, j: usize) -> Point {
        if j == 0 {
            self.cellular_user
        } else {
            self.femto_users[j - 1]
        }
    }

    /// Unclamped distance `D_{i,j}` between user `j` and base station `i`.
    pub fn link_distance(&self, i: usize, j: usize) -> f64 {
        distance(self.bs(i), self.user(j))
    }

    /// Distance from the macrocell to every femtocell AP, normalized by `R_c`.
    pub fn normalized_ap_distances(&self) -> Vec<f64> {
        self.femto_aps
            .iter()
            .map(|&ap| distance(self.macro_bs, ap) / self.cell_radius)
            .collect()
    }

    pub fn to_table(&self) -> Table {
        let mut table = Table::new("layout", 1, &["id", "x_m", "y_m", "kind"]);
        let mut push = |id: usize, p: Point, kind: &str| {
            table.push(vec![id.to_string(), p.x.to_string(), p.y.to_string(), kind.to_string()]);
        };
        push(0, self.macro_bs, "macro_bs");
        for (k, &ap) in self.femto_aps.iter().enumerate() {
            push(k + 1, ap, "femto_ap");
        }
        push(0, self.cellular_user, "cell_user");
        for (k, &u) in self.femto_users.iter().enumerate() {
            push(k + 1, u, "femto_user");
        }
        table
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        self.to_table().write_csv(out)
    }
}

fn check_fraction(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must lie in (0, 1], got {value}"),
        })
    }
}

/// Square grid of `n_femto` femtocells centered at `(df_norm * R_c, 0)`.
///
/// APs are ordered column by column (increasing x), each column from the
/// lowest y upward. The cellular user sits at `(d_norm * R_c, 0)` and femto
/// user `i` (1-based) sits on its AP circle at angle `2*pi*i/N`.
pub fn make_grid_layout(
    n_femto: usize,
    d_norm: f64,
    df_norm: f64,
    params: &LayoutParams,
) -> Result<NetworkGeometry> {
    check_fraction("d_norm", d_norm)?;
    check_fraction("df_norm", df_norm)?;
    let side = (n_femto as f64).sqrt().round() as usize;
    if n_femto == 0 || side * side != n_femto {
        return Err(Error::InvalidParameter {
            name: "n_femto",
            reason: format!("grid layouts need a nonzero perfect square, got {n_femto}"),
        });
    }

    let center = Point::new(df_norm * params.cell_radius, 0.0);
    let spacing = if side > 1 {
        params.grid_extent / (side - 1) as f64
    } else {
        0.0
    };
    let half = 0.5 * spacing * (side - 1) as f64;

    let mut femto_aps = Vec::with_capacity(n_femto);
    for col in 0..side {
        for row in 0..side {
            femto_aps.push(Point::new(
                center.x - half + col as f64 * spacing,
                center.y - half + row as f64 * spacing,
            ));
        }
    }
    let femto_users = femto_aps
        .iter()
        .enumerate()
        .map(|(k, &ap)| {
            let theta = 2.0 * PI * (k + 1) as f64 / n_femto as f64;
            ap.offset_polar(params.femto_radius, theta)
        })
        .collect();

    Ok(NetworkGeometry {
        macro_bs: Point::ORIGIN,
        cell_radius: params.cell_radius,
        femto_aps,
        femto_radius: params.femto_radius,
        cellular_user: Point::new(d_norm * params.cell_radius, 0.0),
        femto_users,
        grid_extent: Some(params.grid_extent),
    })
}

/// Radius of the disc holding randomly dropped femtocells (same area as the grid).
pub fn random_disc_radius(params: &LayoutParams) -> f64 {
    params.grid_extent / PI.sqrt()
}

/// `n_femto` APs uniform on a disc of radius `D_grid / sqrt(pi)` centered at
/// `(df_norm * R_c, 0)`; femto users at uniform angles on their AP circle.
pub fn make_random_layout(
    n_femto: usize,
    df_norm: f64,
    d_norm: f64,
    params: &LayoutParams,
    seed: u64,
) -> Result<NetworkGeometry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    make_random_layout_with(n_femto, df_norm, d_norm, params, &mut rng)
}

pub fn make_random_layout_with<R: Rng + ?Sized>(
    n_femto: usize,
    df_norm: f64,
    d_norm: f64,
    params: &LayoutParams,
    rng: &mut R,
) -> Result<NetworkGeometry> {
    check_fraction("d_norm", d_norm)?;
    check_fraction("df_norm", df_norm)?;
    if n_femto == 0 {
        return Err(Error::InvalidParameter {
            name: "n_femto",
            reason: "at least one femtocell is required".into(),
        });
    }
    let center = Point::new(df_norm * params.cell_radius, 0.0);
    let radius = random_disc_radius(params);

    let mut femto_aps = Vec::with_capacity(n_femto);
    let mut femto_users = Vec::with_capacity(n_femto);
    for _ in 0..n_femto {
        // sqrt of a uniform draw gives a uniform density over the disc area
        let r = radius * rng.random::<f64>().sqrt();
        let ap = center.offset_polar(r, 2.0 * PI * rng.random::<f64>());
        femto_aps.push(ap);
        femto_users.push(ap.offset_polar(params.femto_radius, 2.0 * PI * rng.random::<f64>()));
    }

    Ok(NetworkGeometry {
        macro_bs: Point::ORIGIN,
        cell_radius: params.cell_radius,
        femto_aps,
        femto_radius: params.femto_radius,
        cellular_user: Point::new(d_norm * params.cell_radius, 0.0),
        femto_users,
        grid_extent: None,
    })
}
