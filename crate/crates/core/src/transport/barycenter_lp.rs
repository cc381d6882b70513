//! The barycenter LP: `L` couplings `π_k` (support `N` × component `N_k`)
//! with fixed column marginals `p_k` and a shared, free row marginal,
//! minimizing `Σ_k λ_k ⟨c_k, π_k⟩`.
//!
//! Variables are stacked as `(k, i, j)` in row-major order. The constraint
//! rows are the `Σ_k N_k` column-marginal equalities followed by
//! `(L − 1)·N` chain equalities `Σ_j π_1(i,j) − Σ_j π_k(i,j) = 0`.

use nalgebra::{DMatrix, DVector};

use super::normalize_marginal;
use super::simplex::{self, LinearProgram};
use crate::{Error, Result};

const FEASIBILITY_TOL: f64 = 1e-9;

/// One input of the barycenter LP: a target marginal and its `N × N_k` cost.
#[derive(Debug, Clone)]
pub struct MarginalProblem {
    pub marginal: Vec<f64>,
    pub cost: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct BarycenterLp {
    weights: Vec<f64>,
    problems: Vec<MarginalProblem>,
    support_size: usize,
}

impl BarycenterLp {
    pub fn new(weights: &[f64], problems: Vec<MarginalProblem>) -> Result<Self> {
        if problems.is_empty() {
            return Err(Error::Domain(
                "barycenter LP needs at least one marginal".into(),
            ));
        }
        if weights.len() != problems.len() {
            return Err(Error::Dim {
                expected: problems.len(),
                found: weights.len(),
            });
        }
        let weights = normalize_marginal(weights, "barycenter weights")?;
        let support_size = problems[0].cost.nrows();
        if support_size == 0 {
            return Err(Error::Domain("empty barycenter support".into()));
        }
        let mut normalized = Vec::with_capacity(problems.len());
        for (k, prob) in problems.into_iter().enumerate() {
            let marginal = normalize_marginal(&prob.marginal, &format!("marginal {k}"))?;
            if prob.cost.shape() != (support_size, marginal.len()) {
                return Err(Error::Dim {
                    expected: support_size * marginal.len(),
                    found: prob.cost.len(),
                });
            }
            if let Some(c) = prob.cost.iter().find(|c| !c.is_finite() || **c < 0.0) {
                return Err(Error::Domain(format!("invalid transport cost {c}")));
            }
            normalized.push(MarginalProblem {
                marginal,
                cost: prob.cost,
            });
        }
        Ok(Self {
            weights,
            problems: normalized,
            support_size,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn problems(&self) -> &[MarginalProblem] {
        &self.problems
    }

    pub fn support_size(&self) -> usize {
        self.support_size
    }
}

#[derive(Debug, Clone)]
pub struct BarycenterLpSolution {
    pub plans: Vec<DMatrix<f64>>,
    /// Shared row marginal, `p^i = Σ_j π_1(i,j)`.
    pub marginal: Vec<f64>,
    pub objective: f64,
    pub duality_gap: f64,
    pub min_reduced_cost: f64,
}

pub fn solve_barycenter_lp(lp: &BarycenterLp) -> Result<BarycenterLpSolution> {
    let n = lp.support_size;
    let sizes: Vec<usize> = lp.problems.iter().map(|p| p.marginal.len()).collect();
    let offsets: Vec<usize> = sizes
        .iter()
        .scan(0, |acc, &nk| {
            let off = *acc;
            *acc += n * nk;
            Some(off)
        })
        .collect();
    let vars: usize = sizes.iter().map(|nk| n * nk).sum();
    let rows = sizes.iter().sum::<usize>() + (lp.problems.len() - 1) * n;

    let mut a = DMatrix::zeros(rows, vars);
    let mut b = DVector::zeros(rows);
    let mut c = DVector::zeros(vars);
    let mut row = 0;
    for (k, prob) in lp.problems.iter().enumerate() {
        let nk = sizes[k];
        for j in 0..nk {
            for i in 0..n {
                a[(row, offsets[k] + i * nk + j)] = 1.0;
            }
            b[row] = prob.marginal[j];
            row += 1;
        }
        for i in 0..n {
            for j in 0..nk {
                c[offsets[k] + i * nk + j] = lp.weights[k] * prob.cost[(i, j)];
            }
        }
    }
    for k in 1..lp.problems.len() {
        for i in 0..n {
            for j in 0..sizes[0] {
                a[(row, offsets[0] + i * sizes[0] + j)] = 1.0;
            }
            for j in 0..sizes[k] {
                a[(row, offsets[k] + i * sizes[k] + j)] = -1.0;
            }
            row += 1;
        }
    }

    let sol = simplex::solve(&LinearProgram { a, b, c })?;

    let plans: Vec<DMatrix<f64>> = (0..lp.problems.len())
        .map(|k| {
            DMatrix::from_fn(n, sizes[k], |i, j| {
                sol.x[offsets[k] + i * sizes[k] + j].max(0.0)
            })
        })
        .collect();
    for (k, plan) in plans.iter().enumerate() {
        for j in 0..sizes[k] {
            let err = (plan.column(j).sum() - lp.problems[k].marginal[j]).abs();
            if err > FEASIBILITY_TOL {
                return Err(Error::Solver(format!(
                    "column marginal {k}/{j} off by {err:e}"
                )));
            }
        }
    }
    let marginal: Vec<f64> = (0..n).map(|i| plans[0].row(i).sum()).collect();
    for plan in &plans[1..] {
        for (i, p) in marginal.iter().enumerate() {
            let err = (plan.row(i).sum() - p).abs();
            if err > FEASIBILITY_TOL {
                return Err(Error::Solver(format!(
                    "shared marginal row {i} off by {err:e}"
                )));
            }
        }
    }
    Ok(BarycenterLpSolution {
        plans,
        marginal,
        objective: sol.objective,
        duality_gap: sol.duality_gap,
        min_reduced_cost: sol.min_reduced_cost,
    })
}
