//! Optimal transport between Gaussian mixtures viewed as discrete measures
//! on the space of Gaussians.
//!
//! For `μ₀ = Σ_i p₀^i ν₀^i` and `μ₁ = Σ_j p₁^j ν₁^j` the unit cost is
//! `c(i,j) = W2(ν₀^i, ν₁^j)²` and
//!
//! ```text
//! d(μ₀, μ₁) = sqrt( min_{π ∈ Π(p₀,p₁)} Σ_{i,j} c(i,j) π(i,j) )
//! ```
//!
//! `d` is a metric on mixtures. Its geodesics `μ_t = Σ π*(i,j) ν_t^{ij}`
//! interpolate matched components pairwise and satisfy
//! `d(μ_s, μ_t) = (t − s) d(μ₀, μ₁)`.

use itertools::Itertools;
use nalgebra::DMatrix;

use crate::gaussian::{
    gaussian_barycenter, interpolate_gaussian, w2_gaussian, w2_gaussian_squared, Gaussian,
};
use crate::mixture::GaussianMixture;
use crate::transport::{
    solve_barycenter_lp, solve_transportation, BarycenterLp, BarycenterLpSolution, Coupling,
    MarginalProblem, TransportationProblem,
};
use crate::{Error, Result};

/// Coupling entries below this are treated as zero when building components.
pub const COUPLING_PRUNE_TOL: f64 = 1e-12;

/// Support Gaussians closer than `SUPPORT_MERGE_TOL · (1 + scale)` in W2 are merged.
pub const SUPPORT_MERGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct MixtureTransportResult {
    pub distance: f64,
    pub coupling: Coupling,
    /// `c(i,j) = W2(ν₀^i, ν₁^j)²`
    pub cost_matrix: DMatrix<f64>,
}

fn check_dims(a: &GaussianMixture, b: &GaussianMixture) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Dim {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// Pairwise squared Gaussian W2 costs between components.
pub fn component_costs(from: &[Gaussian], to: &[Gaussian]) -> Result<DMatrix<f64>> {
    let mut cost = DMatrix::zeros(from.len(), to.len());
    for (i, a) in from.iter().enumerate() {
        for (j, b) in to.iter().enumerate() {
            cost[(i, j)] = w2_gaussian_squared(a, b)?;
        }
    }
    Ok(cost)
}

/// The mixture transport distance `d` with its optimal coupling.
pub fn mixture_distance(
    mu0: &GaussianMixture,
    mu1: &GaussianMixture,
) -> Result<MixtureTransportResult> {
    check_dims(mu0, mu1)?;
    let cost_matrix = component_costs(mu0.components(), mu1.components())?;
    let prob = TransportationProblem::new(mu0.weights(), mu1.weights(), cost_matrix.clone())?;
    let coupling = solve_transportation(&prob)?;
    Ok(MixtureTransportResult {
        distance: coupling.cost_value.max(0.0).sqrt(),
        coupling,
        cost_matrix,
    })
}

/// A geodesic between two mixtures, fixed by one optimal coupling.
#[derive(Debug, Clone)]
pub struct Geodesic {
    start: GaussianMixture,
    end: GaussianMixture,
    pairs: Vec<(usize, usize, f64)>,
    distance: f64,
}

impl Geodesic {
    pub fn new(mu0: &GaussianMixture, mu1: &GaussianMixture) -> Result<Self> {
        let transport = mixture_distance(mu0, mu1)?;
        Ok(Self::from_transport(mu0, mu1, &transport))
    }

    /// Builds the geodesic from an already solved transport problem.
    pub fn from_transport(
        mu0: &GaussianMixture,
        mu1: &GaussianMixture,
        transport: &MixtureTransportResult,
    ) -> Self {
        let plan = &transport.coupling.plan;
        let mut pairs = Vec::new();
        for i in 0..plan.nrows() {
            for j in 0..plan.ncols() {
                if plan[(i, j)] >= COUPLING_PRUNE_TOL {
                    pairs.push((i, j, plan[(i, j)]));
                }
            }
        }
        let total: f64 = pairs.iter().map(|p| p.2).sum();
        for p in &mut pairs {
            p.2 /= total;
        }
        Self {
            start: mu0.clone(),
            end: mu1.clone(),
            pairs,
            distance: transport.distance,
        }
    }

    /// Matched component pairs `(i, j, π*(i,j))`, renormalized after pruning.
    pub fn pairs(&self) -> &[(usize, usize, f64)] {
        &self.pairs
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    /// The mixture `Σ π*(i,j) ν_t^{ij}` at time `t ∈ [0, 1]`.
    pub fn at(&self, t: f64) -> Result<GaussianMixture> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("geodesic time {t} outside [0, 1]")));
        }
        let mut weights = Vec::with_capacity(self.pairs.len());
        let mut comps = Vec::with_capacity(self.pairs.len());
        for &(i, j, w) in &self.pairs {
            let a = &self.start.components()[i];
            let b = &self.end.components()[j];
            weights.push(w);
            comps.push(interpolate_gaussian(a, b, t)?);
        }
        GaussianMixture::new(weights, comps)
    }
}

/// Point `t` of the mixture geodesic from `mu0` to `mu1`.
pub fn mixture_geodesic(
    mu0: &GaussianMixture,
    mu1: &GaussianMixture,
    t: f64,
) -> Result<GaussianMixture> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("geodesic time {t} outside [0, 1]")));
    }
    Geodesic::new(mu0, mu1)?.at(t)
}

/// Composes couplings `π₀₁` and `π₁₂` through their shared marginal:
/// `π₀₂(i,k) = Σ_j π₀₁(i,j) π₁₂(j,k) / p₁ʲ`, skipping atoms with `p₁ʲ = 0`.
pub fn glue_plans(pi01: &DMatrix<f64>, pi12: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if pi01.ncols() != pi12.nrows() {
        return Err(Error::Dim {
            expected: pi01.ncols(),
            found: pi12.nrows(),
        });
    }
    let mut out = DMatrix::zeros(pi01.nrows(), pi12.ncols());
    for j in 0..pi01.ncols() {
        let p1 = pi01.column(j).sum();
        if p1 <= 0.0 {
            continue;
        }
        for i in 0..pi01.nrows() {
            let a = pi01[(i, j)] / p1;
            if a == 0.0 {
                continue;
            }
            for k in 0..pi12.ncols() {
                out[(i, k)] += a * pi12[(j, k)];
            }
        }
    }
    Ok(out)
}

/// Where the barycenter's components come from.
#[derive(Debug, Clone)]
pub enum SupportMode {
    /// One Gaussian barycenter per tuple of input components, duplicates merged.
    Derived,
    /// A user-chosen set of Gaussians; only their weights are optimized.
    Fixed(Vec<Gaussian>),
}

#[derive(Debug, Clone)]
pub struct MixtureBarycenter {
    pub mixture: GaussianMixture,
    /// Candidate support passed to the LP (before zero-weight pruning).
    pub support: Vec<Gaussian>,
    pub lp: BarycenterLpSolution,
}

impl MixtureBarycenter {
    pub fn objective(&self) -> f64 {
        self.lp.objective
    }
}

/// Barycenter `argmin_μ Σ_k λ_k d(μ, μ_k)²` over mixtures supported on the
/// chosen candidate Gaussians.
pub fn mixture_barycenter(
    mixtures: &[GaussianMixture],
    weights: &[f64],
    mode: &SupportMode,
) -> Result<MixtureBarycenter> {
    let first = mixtures
        .first()
        .ok_or_else(|| Error::Domain("barycenter of no mixtures".into()))?;
    if weights.len() != mixtures.len() {
        return Err(Error::Domain(format!(
            "{} weights for {} mixtures",
            weights.len(),
            mixtures.len()
        )));
    }
    for m in mixtures {
        check_dims(first, m)?;
    }

    let support = match mode {
        SupportMode::Derived => derived_support(mixtures, weights)?,
        SupportMode::Fixed(list) => {
            if list.is_empty() {
                return Err(Error::Domain("fixed support is empty".into()));
            }
            if let Some(g) = list.iter().find(|g| g.dim() != first.dim()) {
                return Err(Error::Dim {
                    expected: first.dim(),
                    found: g.dim(),
                });
            }
            list.clone()
        }
    };

    let problems = mixtures
        .iter()
        .map(|m| {
            Ok(MarginalProblem {
                marginal: m.weights().to_vec(),
                cost: component_costs(&support, m.components())?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let lp = solve_barycenter_lp(&BarycenterLp::new(weights, problems)?)?;

    let support_weights: Vec<f64> = lp
        .marginal
        .iter()
        .map(|&p| if p < COUPLING_PRUNE_TOL { 0.0 } else { p })
        .collect();
    let mixture = GaussianMixture::new(support_weights, support.clone())?;
    Ok(MixtureBarycenter {
        mixture,
        support,
        lp,
    })
}

fn derived_support(mixtures: &[GaussianMixture], weights: &[f64]) -> Result<Vec<Gaussian>> {
    let mut support: Vec<Gaussian> = Vec::new();
    for tuple in mixtures
        .iter()
        .map(|m| 0..m.len())
        .multi_cartesian_product()
    {
        let items: Vec<(f64, Gaussian)> = tuple
            .iter()
            .zip(mixtures)
            .zip(weights)
            .map(|((&i, m), &w)| (w, m.components()[i].clone()))
            .collect();
        let candidate = gaussian_barycenter(&items)?;
        let mut duplicate = false;
        for existing in &support {
            let scale = candidate.scale().max(existing.scale());
            if w2_gaussian(&candidate, existing)? < SUPPORT_MERGE_TOL * (1.0 + scale) {
                duplicate = true;
                break;
            }
        }
        if !duplicate {
            support.push(candidate);
        }
    }
    Ok(support)
}
