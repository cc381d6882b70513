//! Gaussian mixture models and the JSON model format.
//!
//! A model file looks like
//!
//! ```json
//! {"dim": 1, "weights": [0.5, 0.5],
//!  "components": [{"mean": [0.5], "cov": [[0.01]]}, {"mean": [0.1], "cov": [[0.05]]}]}
//! ```
//!
//! Covariances are full `n×n` arrays. Asymmetry above [`ASYMMETRY_TOL`] is
//! rejected; smaller asymmetry is averaged away.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::gaussian::Gaussian;
use crate::psd::SymMatrix;
use crate::{Error, Result};

/// Largest accepted `|Σ_ij − Σ_ji|` in a model file.
pub const ASYMMETRY_TOL: f64 = 1e-8;

/// Largest accepted deviation of the raw weight sum from one.
pub const WEIGHT_SUM_TOL: f64 = 1e-6;

/// `μ = Σ_k p^k ν^k` with strictly positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    weights: Vec<f64>,
    components: Vec<Gaussian>,
}

impl GaussianMixture {
    /// Validates raw weights and components.
    ///
    /// Zero-weight components are dropped; the remaining weights are
    /// renormalized to sum to one. Component order is preserved and identical
    /// components are kept separate.
    pub fn new(weights: Vec<f64>, components: Vec<Gaussian>) -> Result<Self> {
        if weights.len() != components.len() {
            return Err(Error::InvalidModel(format!(
                "{} weights for {} components",
                weights.len(),
                components.len()
            )));
        }
        if weights.is_empty() {
            return Err(Error::InvalidModel("mixture has no components".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidModel(format!("invalid weight {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidModel(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        let dim = components[0].dim();
        if let Some(g) = components.iter().find(|g| g.dim() != dim) {
            return Err(Error::Dim {
                expected: dim,
                found: g.dim(),
            });
        }
        let (weights, components): (Vec<f64>, Vec<Gaussian>) = weights
            .into_iter()
            .zip(components)
            .filter(|(w, _)| *w > 0.0)
            .map(|(w, g)| (w / sum, g))
            .unzip();
        Ok(Self {
            weights,
            components,
        })
    }

    /// A mixture with a single component.
    pub fn single(g: Gaussian) -> Self {
        Self {
            weights: vec![1.0],
            components: vec![g],
        }
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[Gaussian] {
        &self.components
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &Gaussian)> {
        self.weights.iter().copied().zip(self.components.iter())
    }

    /// Mixture density `Σ_k p^k N(x; m_k, Σ_k)`. Fails on singular components.
    pub fn density_at(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Dim {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let x = DVector::from_column_slice(x);
        Ok(self.density_evaluator()?.eval(&x))
    }

    /// Precomputes Cholesky factors for repeated density evaluation.
    pub fn density_evaluator(&self) -> Result<DensityEvaluator> {
        let n = self.dim();
        let mut terms = Vec::with_capacity(self.len());
        for (k, (w, g)) in self.iter().enumerate() {
            let chol = g
                .cov()
                .as_matrix()
                .clone()
                .cholesky()
                .ok_or(Error::SingularDensity { component: k })?;
            let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
            if !log_det.is_finite() {
                return Err(Error::SingularDensity { component: k });
            }
            let norm = w * (-0.5 * (n as f64 * (2.0 * PI).ln() + log_det)).exp();
            terms.push(DensityTerm {
                mean: g.mean().clone(),
                l: chol.l(),
                norm,
            });
        }
        Ok(DensityEvaluator { terms })
    }

    /// Parses a JSON model document.
    pub fn read_model(bytes: &[u8]) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_slice(bytes).map_err(|e| {
            Error::parse(
                format!("line {} column {}", e.line(), e.column()),
                e.to_string(),
            )
        })?;
        doc.into_mixture()
    }

    /// Serializes to the canonical JSON model document.
    pub fn write_model(&self) -> Vec<u8> {
        let doc = ModelDoc::from(self);
        let mut out = serde_json::to_vec_pretty(&doc).expect("model serializes");
        out.push(b'\n');
        out
    }
}

struct DensityTerm {
    mean: DVector<f64>,
    l: DMatrix<f64>,
    norm: f64,
}

/// Mixture density with factored covariances.
pub struct DensityEvaluator {
    terms: Vec<DensityTerm>,
}

impl DensityEvaluator {
    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let diff = x - &t.mean;
                let z =
                    t.l.solve_lower_triangular(&diff)
                        .expect("cholesky factor has a nonzero diagonal");
                t.norm * (-0.5 * z.norm_squared()).exp()
            })
            .sum()
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    dim: usize,
    weights: Vec<f64>,
    components: Vec<ComponentDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentDoc {
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

impl ModelDoc {
    fn into_mixture(self) -> Result<GaussianMixture> {
        let n = self.dim;
        if n == 0 {
            return Err(Error::parse("dim", "dimension must be positive"));
        }
        if self.weights.len() != self.components.len() {
            return Err(Error::parse(
                "weights",
                format!(
                    "{} weights for {} components",
                    self.weights.len(),
                    self.components.len()
                ),
            ));
        }
        let mut comps = Vec::with_capacity(self.components.len());
        for (k, c) in self.components.into_iter().enumerate() {
            if c.mean.len() != n {
                return Err(Error::parse(
                    format!("components[{k}].mean"),
                    format!("expected {n} entries, found {}", c.mean.len()),
                ));
            }
            if c.cov.len() != n || c.cov.iter().any(|row| row.len() != n) {
                return Err(Error::parse(
                    format!("components[{k}].cov"),
                    format!("expected a {n}x{n} array"),
                ));
            }
            for i in 0..n {
                for j in 0..i {
                    if (c.cov[i][j] - c.cov[j][i]).abs() > ASYMMETRY_TOL {
                        return Err(Error::parse(
                            format!("components[{k}].cov[{i}][{j}]"),
                            "covariance is not symmetric",
                        ));
                    }
                }
            }
            let flat: Vec<f64> = c.cov.into_iter().flatten().collect();
            let cov = SymMatrix::from_row_slice(n, &flat)
                .map_err(|e| Error::parse(format!("components[{k}].cov"), e.to_string()))?;
            comps.push(Gaussian::new(DVector::from_vec(c.mean), cov)?);
        }
        GaussianMixture::new(self.weights, comps)
    }
}

impl From<&GaussianMixture> for ModelDoc {
    fn from(m: &GaussianMixture) -> Self {
        let n = m.dim();
        Self {
            dim: n,
            weights: m.weights.clone(),
            components: m
                .components
                .iter()
                .map(|g| ComponentDoc {
                    mean: g.mean().iter().copied().collect(),
                    cov: (0..n)
                        .map(|i| (0..n).map(|j| g.cov()[(i, j)]).collect())
                        .collect(),
                })
                .collect(),
        }
    }
}
