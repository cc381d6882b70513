//! Independent W2 baselines between mixture densities.
//!
//! These compute the ordinary Wasserstein-2 distance between the densities
//! (not the mixture metric `d`) and are used to check `d ≥ W2` and to
//! reproduce the `d` versus `W2` comparison for a split standard normal.
//!
//! - [`w2_1d_quantile`]: 1-D quantile coupling,
//!   `W2² = ∫₀¹ (F₀⁻¹(u) − F₁⁻¹(u))² du`, by the midpoint rule.
//! - [`w2_grid_lp`]: densities discretized on a regular grid and matched by
//!   an exact transportation LP (1-D and 2-D).

use std::f64::consts::SQRT_2;

use log::warn;
use nalgebra::{DMatrix, DVector};
use statrs::function::erf::erfc;

use crate::format::fmt12;
use crate::gaussian::Gaussian;
use crate::gmm_ot::mixture_distance;
use crate::mixture::GaussianMixture;
use crate::transport::{solve_transportation, TransportationProblem};
use crate::{Error, Result};

/// Bisection stops once `|F(x) − u|` is below this.
pub const QUANTILE_U_TOL: f64 = 1e-12;

/// Grids should cover every component mean ± this many standard deviations.
pub const ENVELOPE_SIGMAS: f64 = 6.0;

pub const MIN_GRID_POINTS: usize = 16;

/// Largest grid (total cells) accepted by [`w2_grid_lp`].
pub const MAX_GRID_CELLS: usize = 4096;

// Initial quantile bracket half-width in standard deviations; Φ(−40) underflows.
const BRACKET_SIGMAS: f64 = 40.0;

struct Cdf1d {
    terms: Vec<(f64, f64, f64)>,
    lo: f64,
    hi: f64,
}

impl Cdf1d {
    fn new(mu: &GaussianMixture) -> Result<Self> {
        if mu.dim() != 1 {
            return Err(Error::Dim {
                expected: 1,
                found: mu.dim(),
            });
        }
        let mut terms = Vec::with_capacity(mu.len());
        for (k, (w, g)) in mu.iter().enumerate() {
            let var = g.cov()[(0, 0)];
            if var <= 0.0 {
                return Err(Error::SingularDensity { component: k });
            }
            terms.push((w, g.mean()[0], var.sqrt()));
        }
        let lo = terms
            .iter()
            .map(|&(_, m, s)| m - BRACKET_SIGMAS * s)
            .fold(f64::INFINITY, f64::min);
        let hi = terms
            .iter()
            .map(|&(_, m, s)| m + BRACKET_SIGMAS * s)
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(Self { terms, lo, hi })
    }

    fn cdf(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(w, m, s)| w * 0.5 * erfc(-(x - m) / (s * SQRT_2)))
            .sum()
    }

    // Bisection on the monotone CDF, starting from a known lower bound.
    fn quantile_from(&self, u: f64, mut lo: f64) -> f64 {
        let mut hi = self.hi;
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return mid;
            }
            let f = self.cdf(mid);
            if (f - u).abs() <= QUANTILE_U_TOL {
                return mid;
            }
            if f < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
}

/// Quantile `F⁻¹(u)` of a 1-D mixture with nonsingular components.
pub fn mixture_quantile(mu: &GaussianMixture, u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!("quantile level {u} outside (0, 1)")));
    }
    let cdf = Cdf1d::new(mu)?;
    Ok(cdf.quantile_from(u, cdf.lo))
}

/// 1-D W2 between mixture densities via the quantile coupling, using the
/// midpoint rule at `resolution` levels `u_k = (k + ½)/resolution`.
pub fn w2_1d_quantile(
    mu0: &GaussianMixture,
    mu1: &GaussianMixture,
    resolution: usize,
) -> Result<f64> {
    if resolution == 0 {
        return Err(Error::Domain("resolution must be positive".into()));
    }
    let f0 = Cdf1d::new(mu0)?;
    let f1 = Cdf1d::new(mu1)?;
    let (mut x0, mut x1) = (f0.lo, f1.lo);
    let mut total = 0.0;
    for k in 0..resolution {
        let u = (k as f64 + 0.5) / resolution as f64;
        x0 = f0.quantile_from(u, x0);
        x1 = f1.quantile_from(u, x1);
        total += (x0 - x1).powi(2);
    }
    Ok((total / resolution as f64).sqrt())
}

/// A regular grid: per-axis bounds and points per axis. Cells are centered
/// on the points.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub points: usize,
}

impl GridSpec {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, points: usize) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Dim {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(l, u)| !l.is_finite() || !u.is_finite() || l >= u)
        {
            return Err(Error::Domain(
                "grid bounds must satisfy lower < upper".into(),
            ));
        }
        if points < MIN_GRID_POINTS {
            return Err(Error::Domain(format!(
                "grid needs at least {MIN_GRID_POINTS} points per axis, got {points}"
            )));
        }
        Ok(Self {
            lower,
            upper,
            points,
        })
    }

    /// Smallest box holding every component mean ± 6 standard deviations
    /// (per axis) of both mixtures.
    pub fn covering(mu0: &GaussianMixture, mu1: &GaussianMixture, points: usize) -> Result<Self> {
        let (lower, upper) = envelope(mu0, mu1)?;
        Self::new(lower, upper, points)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn cells(&self) -> usize {
        self.points.saturating_pow(self.dim() as u32)
    }

    pub fn cell_width(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / self.points as f64
    }

    pub fn covers(&self, mu0: &GaussianMixture, mu1: &GaussianMixture) -> Result<bool> {
        let (lower, upper) = envelope(mu0, mu1)?;
        Ok((0..self.dim()).all(|a| self.lower[a] <= lower[a] && self.upper[a] >= upper[a]))
    }

    fn centers(&self) -> Vec<DVector<f64>> {
        let n = self.dim();
        let axis = |a: usize, k: usize| self.lower[a] + (k as f64 + 0.5) * self.cell_width(a);
        let mut out = Vec::with_capacity(self.cells());
        for idx in 0..self.cells() {
            let mut rem = idx;
            let mut x = DVector::zeros(n);
            for a in 0..n {
                x[a] = axis(a, rem % self.points);
                rem /= self.points;
            }
            out.push(x);
        }
        out
    }
}

fn envelope(mu0: &GaussianMixture, mu1: &GaussianMixture) -> Result<(Vec<f64>, Vec<f64>)> {
    if mu0.dim() != mu1.dim() {
        return Err(Error::Dim {
            expected: mu0.dim(),
            found: mu1.dim(),
        });
    }
    let n = mu0.dim();
    let mut lower = vec![f64::INFINITY; n];
    let mut upper = vec![f64::NEG_INFINITY; n];
    for g in mu0.components().iter().chain(mu1.components()) {
        for a in 0..n {
            let reach = ENVELOPE_SIGMAS * g.cov()[(a, a)].max(0.0).sqrt();
            lower[a] = lower[a].min(g.mean()[a] - reach);
            upper[a] = upper[a].max(g.mean()[a] + reach);
        }
    }
    Ok((lower, upper))
}

/// W2 between mixture densities discretized on `grid`: cell mass is the
/// density at the cell center times the cell volume (renormalized), and the
/// cells are matched by an exact transportation LP with squared Euclidean
/// cost between centers.
pub fn w2_grid_lp(mu0: &GaussianMixture, mu1: &GaussianMixture, grid: &GridSpec) -> Result<f64> {
    if mu0.dim() != mu1.dim() {
        return Err(Error::Dim {
            expected: mu0.dim(),
            found: mu1.dim(),
        });
    }
    let n = mu0.dim();
    if n > 2 {
        return Err(Error::Domain(format!(
            "grid oracle supports n ≤ 2, got {n}"
        )));
    }
    if grid.dim() != n {
        return Err(Error::Dim {
            expected: n,
            found: grid.dim(),
        });
    }
    if grid.cells() > MAX_GRID_CELLS {
        return Err(Error::Resource(format!(
            "{} grid cells exceed the limit of {MAX_GRID_CELLS}",
            grid.cells()
        )));
    }
    if !grid.covers(mu0, mu1)? {
        warn!("grid does not cover all components to ±{ENVELOPE_SIGMAS}σ");
    }

    let centers = grid.centers();
    let (rows, p) = cell_masses(mu0, &centers)?;
    let (cols, q) = cell_masses(mu1, &centers)?;
    let cost = DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
        (&centers[rows[i]] - &centers[cols[j]]).norm_squared()
    });
    let coupling = solve_transportation(&TransportationProblem::new(&p, &q, cost)?)?;
    Ok(coupling.cost_value.max(0.0).sqrt())
}

// Indices of cells with nonzero mass, and their normalized masses.
fn cell_masses(mu: &GaussianMixture, centers: &[DVector<f64>]) -> Result<(Vec<usize>, Vec<f64>)> {
    let density = mu.density_evaluator()?;
    let mut idx = Vec::new();
    let mut mass = Vec::new();
    for (k, x) in centers.iter().enumerate() {
        let v = density.eval(x);
        if v > 0.0 {
            idx.push(k);
            mass.push(v);
        }
    }
    let total: f64 = mass.iter().sum();
    if total <= 0.0 {
        return Err(Error::Domain("grid carries no mass".into()));
    }
    mass.iter_mut().for_each(|m| *m /= total);
    Ok((idx, mass))
}

/// One row of the split-normal sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub delta: f64,
    pub d: f64,
    pub w2: f64,
}

/// `N(0, 1)` and `½N(−Δ, 1) + ½N(Δ, 1)`.
pub fn split_normal_pair(delta: f64) -> Result<(GaussianMixture, GaussianMixture)> {
    if !delta.is_finite() || delta < 0.0 {
        return Err(Error::Domain(format!(
            "Δ must be a nonnegative number, got {delta}"
        )));
    }
    let mu0 = GaussianMixture::single(Gaussian::scalar(0.0, 1.0)?);
    let mu1 = GaussianMixture::new(
        vec![0.5, 0.5],
        vec![
            Gaussian::scalar(-delta, 1.0)?,
            Gaussian::scalar(delta, 1.0)?,
        ],
    )?;
    Ok((mu0, mu1))
}

/// `Δ = 0, 0.25, …, 3`.
pub fn default_sweep_deltas() -> Vec<f64> {
    (0..=12).map(|k| k as f64 * 0.25).collect()
}

/// `d` and the quantile-oracle W2 for the split-normal pair at each Δ.
pub fn split_normal_sweep(deltas: &[f64], resolution: usize) -> Result<Vec<SweepRow>> {
    deltas
        .iter()
        .map(|&delta| {
            let (mu0, mu1) = split_normal_pair(delta)?;
            Ok(SweepRow {
                delta,
                d: mixture_distance(&mu0, &mu1)?.distance,
                w2: w2_1d_quantile(&mu0, &mu1, resolution)?,
            })
        })
        .collect()
}

/// CSV with header `delta,d,w2` and 12 significant digits.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("delta,d,w2\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt12(r.delta),
            fmt12(r.d),
            fmt12(r.w2)
        ));
    }
    out
}
