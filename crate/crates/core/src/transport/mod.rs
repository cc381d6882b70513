//! Exact linear-programming solvers.
//!
//! - [`solve_transportation`]: the two-marginal transportation problem,
//!   solved by the network simplex method on the bipartite graph.
//! - [`solve_barycenter_lp`]: `L` transportation problems coupled through a
//!   shared, free source marginal, solved by a dense two-phase revised
//!   simplex.

mod barycenter_lp;
pub mod simplex;
mod transportation;

pub use barycenter_lp::{solve_barycenter_lp, BarycenterLp, BarycenterLpSolution, MarginalProblem};
pub use transportation::{solve_transportation, Coupling, TransportationProblem};

use crate::{Error, Result};

/// Inputs whose sum is within this of one are renormalized; others are rejected.
pub const MARGINAL_SUM_TOL: f64 = 1e-9;

pub(crate) fn normalize_marginal(v: &[f64], name: &str) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::InfeasibleMarginals(format!("{name} is empty")));
    }
    if let Some(x) = v.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::InfeasibleMarginals(format!(
            "{name} has invalid entry {x}"
        )));
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > MARGINAL_SUM_TOL {
        return Err(Error::InfeasibleMarginals(format!(
            "{name} sums to {sum}, expected 1"
        )));
    }
    Ok(v.iter().map(|x| x / sum).collect())
}
