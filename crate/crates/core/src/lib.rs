//! Optimal mass transport restricted to Gaussian mixture models.
//!
//! A Gaussian mixture `μ = Σ_k p^k ν^k` is treated as a discrete measure on
//! the Wasserstein space of Gaussians. Transport between two mixtures is then
//! a small transportation LP whose unit costs are squared Gaussian W2
//! distances, which yields a metric `d`, geodesics that stay inside the
//! mixture family, and mixture barycenters.
//!
//! Layout:
//! - [`psd`]: symmetric PSD matrix primitives.
//! - [`gaussian`]: closed-form Gaussian W2 geometry and barycenters.
//! - [`mixture`]: the mixture type, densities and the JSON model format.
//! - [`transport`]: exact LP solvers (transportation and barycenter LP).
//! - [`gmm_ot`]: the mixture metric, geodesics and barycenters.
//! - [`oracle`]: independent W2 baselines between mixture densities.
//! - [`cli`]: the `gmmot` command-line front end.

pub mod cli;
pub mod error;
pub mod format;
pub mod gaussian;
pub mod gmm_ot;
pub mod mixture;
pub mod oracle;
pub mod psd;
pub mod transport;

pub use error::{Error, Result};
pub use gaussian::{
    gaussian_barycenter, interpolate_gaussian, optimal_cross_covariance, w2_gaussian,
    w2_gaussian_squared, Gaussian,
};
pub use gmm_ot::{
    glue_plans, mixture_barycenter, mixture_distance, mixture_geodesic, Geodesic,
    MixtureBarycenter, MixtureTransportResult, SupportMode,
};
pub use mixture::GaussianMixture;
pub use psd::SymMatrix;
pub use transport::{solve_barycenter_lp, solve_transportation, Coupling, TransportationProblem};
