//! Perron roots of nonnegative matrices and SINR feasibility.
//!
//! A target vector `Gamma` is feasible iff `rho(Gamma G) < 1`; the
//! componentwise-minimal power vector meeting every target with equality is
//! then `p* = (I - Gamma G)^-1 eta` with `eta_i = sigma^2 Gamma_i / g_ii`.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::channel::GainMatrix;
use crate::error::{Error, Result};
use crate::from_db;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIterOptions {
    /// Relative tolerance on the Perron root.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerIterOptions {
    fn default() -> Self {
        PowerIterOptions {
            tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerronRoot {
    pub rho: f64,
    /// Nonnegative eigenvector with unit 1-norm.
    pub vector: DVector<f64>,
    pub iterations: usize,
}

fn check_nonnegative_square(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension {
            expected: m.nrows(),
            actual: m.ncols(),
        });
    }
    if let Some(k) = m.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::NegativeEntry {
            row: k % m.nrows(),
            col: k / m.nrows(),
            value: m[k],
        });
    }
    Ok(())
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().sum::<f64>()).fold(0.0, f64::max)
}

/// Perron root of a nonnegative square matrix.
///
/// Irreducible matrices are first balanced by a diagonal similarity
/// `B = D^-1 M D` (same spectrum) and then handled by power iteration on
/// `B + s I` with `s = ||B||_inf / 2`, which keeps the Perron root strictly
/// dominant for periodic matrices. From the all-ones vector the iterate stays
/// strictly positive, so the Collatz-Wielandt ratios `min_i (Bv)_i / v_i` and
/// `max_i (Bv)_i / v_i` bracket the root; iteration stops once the bracket is
/// within `tol` relative.
///
/// A reducible matrix gets the largest root over its strongly connected
/// diagonal blocks. Its `vector` is then the Perron vector of that block
/// padded with zeros, which need not be an eigenvector of the whole matrix.
pub fn spectral_radius(m: &DMatrix<f64>, opts: &PowerIterOptions) -> Result<PerronRoot> {
    check_nonnegative_square(m)?;
    let n = m.nrows();
    if n == 0 {
        return Err(Error::Dimension { expected: 1, actual: 0 });
    }
    if is_irreducible(m) {
        return irreducible_root(m, opts);
    }
    let mut best: Option<(Vec<usize>, PerronRoot)> = None;
    for comp in strong_components(m) {
        let block = DMatrix::from_fn(comp.len(), comp.len(), |r, c| m[(comp[r], comp[c])]);
        let root = irreducible_root(&block, opts)?;
        if best.as_ref().is_none_or(|(_, b)| root.rho > b.rho) {
            best = Some((comp, root));
        }
    }
    let (comp, root) = best.expect("a nonempty matrix has at least one component");
    let mut vector = DVector::zeros(n);
    for (k, &i) in comp.iter().enumerate() {
        vector[i] = root.vector[k];
    }
    Ok(PerronRoot { vector, ..root })
}

/// Osborne balancing: diagonal `d` making off-diagonal row and column sums of
/// `D^-1 M D` roughly equal. Returns the balanced matrix and `d`.
fn balance(m: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let n = m.nrows();
    let mut b = m.clone();
    let mut d = DVector::from_element(n, 1.0);
    for _ in 0..100 {
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let row: f64 = (0..n).filter(|&j| j != i).map(|j| b[(i, j)]).sum();
            let col: f64 = (0..n).filter(|&j| j != i).map(|j| b[(j, i)]).sum();
            if row == 0.0 || col == 0.0 {
                continue;
            }
            let g = (row / col).sqrt();
            worst = worst.max(g.ln().abs());
            for j in 0..n {
                b[(i, j)] /= g;
                b[(j, i)] *= g;
            }
            d[i] *= g;
        }
        if worst < 1e-3 {
            break;
        }
    }
    (b, d)
}

fn irreducible_root(m: &DMatrix<f64>, opts: &PowerIterOptions) -> Result<PerronRoot> {
    let n = m.nrows();
    let uniform = DVector::from_element(n, 1.0 / n as f64);
    if inf_norm(m) == 0.0 {
        return Ok(PerronRoot {
            rho: 0.0,
            vector: uniform,
            iterations: 0,
        });
    }
    let (b, d) = balance(m);
    let unbalance = |v: &DVector<f64>| {
        let x = v.component_mul(&d);
        let total = x.sum();
        x / total
    };

    let shift = 0.5 * inf_norm(&b);
    let mut v = uniform;
    let mut w = DVector::zeros(n);
    let mut estimate = f64::NAN;

    for k in 1..=opts.max_iter {
        b.mul_to(&v, &mut w);
        w.axpy(shift, &v, 1.0);

        let (lo, hi) = w
            .iter()
            .zip(v.iter())
            .map(|(a, b)| a / b)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)));
        let total = w.sum();
        estimate = total - shift;
        v = &w / total;

        let gap = hi - lo;
        if gap <= opts.tol * (lo - shift).max(0.0) || gap <= 64.0 * f64::EPSILON * hi {
            return Ok(PerronRoot {
                rho: (0.5 * (lo + hi) - shift).max(0.0),
                vector: unbalance(&v),
                iterations: k,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        estimate,
        vector: unbalance(&v).iter().copied().collect(),
    })
}

/// Perron root with default options.
pub fn rho(m: &DMatrix<f64>) -> Result<f64> {
    Ok(spectral_radius(m, &PowerIterOptions::default())?.rho)
}

fn reachable(m: &DMatrix<f64>, start: usize, forward: bool) -> Vec<bool> {
    let n = m.nrows();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            let w = if forward { m[(u, v)] } else { m[(v, u)] };
            if w > 0.0 && !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen
}

/// Strong connectivity of the digraph with an edge `i -> j` wherever `m[(i,j)] > 0`.
pub fn is_irreducible(m: &DMatrix<f64>) -> bool {
    m.nrows() <= 1 || (reachable(m, 0, true).iter().all(|&s| s) && reachable(m, 0, false).iter().all(|&s| s))
}

/// Strongly connected components, each as sorted indices.
fn strong_components(m: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut assigned = vec![false; n];
    let mut comps = Vec::new();
    for s in 0..n {
        if assigned[s] {
            continue;
        }
        let fwd = reachable(m, s, true);
        let bwd = reachable(m, s, false);
        let comp: Vec<usize> = (0..n).filter(|&i| fwd[i] && bwd[i]).collect();
        for &i in &comp {
            assigned[i] = true;
        }
        comps.push(comp);
    }
    comps
}

/// Per-user minimum SINR targets (linear).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinrTargets {
    pub gamma_c: f64,
    pub gamma_f: Vec<f64>,
}

impl SinrTargets {
    pub fn new(gamma_c: f64, gamma_f: Vec<f64>) -> Result<Self> {
        let targets = SinrTargets { gamma_c, gamma_f };
        if let Some(bad) = targets.all().into_iter().find(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(Error::InvalidParameter {
                name: "sinr_targets",
                reason: format!("targets must be positive and finite, got {bad}"),
            });
        }
        Ok(targets)
    }

    pub fn from_db(gamma_c_db: f64, gamma_f_db: &[f64]) -> Result<Self> {
        Self::new(from_db(gamma_c_db), gamma_f_db.iter().map(|&d| from_db(d)).collect())
    }

    pub fn n_femto(&self) -> usize {
        self.gamma_f.len()
    }

    /// `[Gamma_c, Gamma_1, ..., Gamma_N]`.
    pub fn all(&self) -> Vec<f64> {
        std::iter::once(self.gamma_c).chain(self.gamma_f.iter().copied()).collect()
    }

    pub fn check_dims(&self, gm: &GainMatrix) -> Result<()> {
        if self.n_femto() != gm.n_femto() {
            return Err(Error::Dimension {
                expected: gm.n_femto(),
                actual: self.n_femto(),
            });
        }
        Ok(())
    }
}

/// `diag(gamma) * G`.
pub fn scale_rows(gamma: &[f64], g: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = g.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row.scale_mut(gamma[i]);
    }
    out
}

/// `Gamma G` for the full two-tier target vector.
pub fn target_gain_product(targets: &SinrTargets, gm: &GainMatrix) -> Result<DMatrix<f64>> {
    targets.check_dims(gm)?;
    Ok(scale_rows(&targets.all(), gm.normalized()))
}

/// Normalized receiver noise.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub sigma2: f64,
    pub eta: DVector<f64>,
}

impl NoiseModel {
    pub fn new(sigma2: f64, targets: &SinrTargets, gm: &GainMatrix) -> Result<Self> {
        if !(sigma2 > 0.0) {
            return Err(Error::InvalidParameter {
                name: "sigma2",
                reason: format!("noise power must be positive, got {sigma2}"),
            });
        }
        targets.check_dims(gm)?;
        let gamma = targets.all();
        let eta = DVector::from_fn(gm.size(), |i, _| sigma2 * gamma[i] / gm.g(i, i));
        Ok(NoiseModel { sigma2, eta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub rho: f64,
}

pub fn is_feasible(targets: &SinrTargets, gm: &GainMatrix) -> Result<Feasibility> {
    let rho = rho(&target_gain_product(targets, gm)?)?;
    Ok(Feasibility { feasible: rho < 1.0, rho })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerAllocation {
    pub p: Vec<f64>,
}

/// Received SINR of every user for power vector `p`.
pub fn achieved_sinr(p: &[f64], gm: &GainMatrix, sigma2: f64) -> Vec<f64> {
    let raw = gm.raw();
    (0..gm.size())
        .map(|i| {
            let interference: f64 = (0..gm.size()).filter(|&j| j != i).map(|j| p[j] * raw[(i, j)]).sum();
            p[i] * raw[(i, i)] / (interference + sigma2)
        })
        .collect()
}

/// Pareto-minimal power allocation meeting every target with equality.
pub fn solve_centralized(targets: &SinrTargets, gm: &GainMatrix, sigma2: f64) -> Result<PowerAllocation> {
    let noise = NoiseModel::new(sigma2, targets, gm)?;
    let gg = target_gain_product(targets, gm)?;
    let rho = rho(&gg)?;
    if rho >= 1.0 {
        return Err(Error::Infeasible { rho });
    }
    let n = gm.size();
    let system = DMatrix::identity(n, n) - gg;
    let p = system
        .clone()
        .lu()
        .solve(&noise.eta)
        .ok_or_else(|| Error::Singular("I - Gamma G is singular".into()))?;

    let residual = (&system * &p - &noise.eta).amax();
    if residual > 1e-9 * noise.eta.amax() {
        return Err(Error::Singular(format!("residual {residual:e} exceeds tolerance")));
    }
    let floor = -1e-12 * p.amax();
    if let Some(&neg) = p.iter().find(|&&x| x < floor) {
        return Err(Error::Singular(format!("negative power {neg:e} in solution")));
    }
    Ok(PowerAllocation {
        p: p.iter().map(|&x| x.max(0.0)).collect(),
    })
}

/// Largest common SIR `1 / rho(G)`; infinite when `rho(G) = 0`.
pub fn max_min_sir(g: &DMatrix<f64>) -> Result<f64> {
    let r = rho(g)?;
    Ok(if r > 0.0 { 1.0 / r } else { f64::INFINITY })
}
