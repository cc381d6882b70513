//! Wasserstein geometry of Gaussian distributions.
//!
//! For `N(m₀, Σ₀)` and `N(m₁, Σ₁)` the squared W2 distance has the closed form
//!
//! ```text
//! W2² = ‖m₀ − m₁‖² + tr(Σ₀ + Σ₁ − 2 (Σ₀^{1/2} Σ₁ Σ₀^{1/2})^{1/2})
//! ```
//!
//! which holds for singular covariances as well. Displacement interpolation
//! stays Gaussian, and the W2 barycenter of Gaussians is the Gaussian whose
//! covariance solves `Σ = Σ_k λ_k (Σ^{1/2} Σ_k Σ^{1/2})^{1/2}`, computed
//! here by the sandwiched fixed-point iteration.

use nalgebra::{DMatrix, DVector};

use crate::psd::SymMatrix;
use crate::{Error, Result};

/// Relative Frobenius tolerance on the barycenter fixed-point residual.
pub const FIXED_POINT_TOL: f64 = 1e-12;

/// Iteration cap for the barycenter fixed point.
pub const FIXED_POINT_MAX_ITER: usize = 1000;

/// Ridge, relative to `trace(Σ)/n`, added to rank-deficient iterates before
/// taking `Σ^{-1/2}`.
pub const SINGULAR_RIDGE: f64 = 1e-12;

// Allowed negative round-off of the Bures trace term before clamping.
const BURES_NEG_TOL: f64 = 1e-10;

/// A Gaussian distribution `N(mean, cov)` with PSD (possibly singular) covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    mean: DVector<f64>,
    cov: SymMatrix,
}

impl Gaussian {
    pub fn new(mean: DVector<f64>, cov: SymMatrix) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::Dim {
                expected: cov.dim(),
                found: mean.len(),
            });
        }
        if mean.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite mean".into()));
        }
        let cov = cov.clip_psd()?;
        Ok(Self { mean, cov })
    }

    /// Builds a Gaussian from a mean and a row-major covariance.
    pub fn from_slices(mean: &[f64], cov_rows: &[f64]) -> Result<Self> {
        let n = mean.len();
        Self::new(
            DVector::from_column_slice(mean),
            SymMatrix::from_row_slice(n, cov_rows)?,
        )
    }

    /// One-dimensional `N(mean, variance)`.
    pub fn scalar(mean: f64, variance: f64) -> Result<Self> {
        Self::from_slices(&[mean], &[variance])
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &SymMatrix {
        &self.cov
    }

    /// Magnitude used for relative comparisons: `max(‖m‖, sqrt(tr Σ))`.
    pub fn scale(&self) -> f64 {
        self.mean.norm().max(self.cov.trace().max(0.0).sqrt())
    }
}

fn check_dims(g0: &Gaussian, g1: &Gaussian) -> Result<()> {
    if g0.dim() != g1.dim() {
        return Err(Error::Dim {
            expected: g0.dim(),
            found: g1.dim(),
        });
    }
    Ok(())
}

/// Squared W2 distance between two Gaussians.
pub fn w2_gaussian_squared(g0: &Gaussian, g1: &Gaussian) -> Result<f64> {
    check_dims(g0, g1)?;
    if g0 == g1 {
        return Ok(0.0);
    }
    let mean_term = (&g0.mean - &g1.mean).norm_squared();
    let fidelity = bures_fidelity(&g0.cov, &g1.cov)?;
    let total = g0.cov.trace() + g1.cov.trace();
    let bures = total - 2.0 * fidelity;
    if bures < -BURES_NEG_TOL * total.max(1.0) {
        return Err(Error::InvalidMatrix(format!(
            "negative Bures term {bures:e}"
        )));
    }
    Ok(mean_term + bures.max(0.0))
}

/// W2 distance between two Gaussians.
pub fn w2_gaussian(g0: &Gaussian, g1: &Gaussian) -> Result<f64> {
    w2_gaussian_squared(g0, g1).map(f64::sqrt)
}

/// `tr (Σ₀^{1/2} Σ₁ Σ₀^{1/2})^{1/2}`
fn bures_fidelity(cov0: &SymMatrix, cov1: &SymMatrix) -> Result<f64> {
    let r0 = cov0.sqrt_psd()?;
    let inner = cov1.congruence(&r0);
    let eig = inner.psd_eigh()?;
    Ok(eig.values.iter().map(|v| v.sqrt()).sum())
}

// Smallest-to-largest eigenvalue ratio; 0 for singular matrices.
fn conditioning(cov: &SymMatrix) -> Result<f64> {
    let w = cov.psd_eigh()?.values;
    let max = w.max();
    if max <= 0.0 {
        return Ok(0.0);
    }
    let min = w.min();
    Ok(if min > crate::psd::RANK_REL_TOL * max {
        min / max
    } else {
        0.0
    })
}

/// `Σ_a^{1/2} (Σ_a^{1/2} Σ_b Σ_a^{1/2})^{1/2} (Σ_a^{1/2})†`
fn cross_covariance_from(cov_a: &SymMatrix, cov_b: &SymMatrix) -> Result<DMatrix<f64>> {
    let ra = cov_a.sqrt_psd()?;
    let ra_pinv = cov_a.pinv_sqrt_psd()?;
    let mid = cov_b.congruence(&ra).sqrt_psd()?;
    Ok(ra.as_matrix() * mid.as_matrix() * ra_pinv.as_matrix())
}

/// The cross-covariance `S = E[(X − m₀)(Y − m₁)ᵀ]` of the optimal coupling
/// between two Gaussians. In general `S` is not symmetric.
///
/// The closed form is evaluated from whichever side has the better
/// conditioned covariance (transposing when it is `Σ₁`). When both
/// covariances are singular the pseudoinverse form is used.
pub fn optimal_cross_covariance(g0: &Gaussian, g1: &Gaussian) -> Result<DMatrix<f64>> {
    check_dims(g0, g1)?;
    if conditioning(&g0.cov)? >= conditioning(&g1.cov)? {
        cross_covariance_from(&g0.cov, &g1.cov)
    } else {
        Ok(cross_covariance_from(&g1.cov, &g0.cov)?.transpose())
    }
}

/// Displacement interpolation between two Gaussians at time `t ∈ [0, 1]`.
///
/// `m_t = (1−t) m₀ + t m₁` and
/// `Σ_t = Σ₀^{-1/2} ((1−t) Σ₀ + t (Σ₀^{1/2} Σ₁ Σ₀^{1/2})^{1/2})² Σ₀^{-1/2}`,
/// evaluated from the better conditioned endpoint. If both covariances are
/// singular, `Σ_t = (1−t)² Σ₀ + t² Σ₁ + t(1−t)(S + Sᵀ)` with `S` from
/// [`optimal_cross_covariance`].
pub fn interpolate_gaussian(g0: &Gaussian, g1: &Gaussian, t: f64) -> Result<Gaussian> {
    check_dims(g0, g1)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!(
            "interpolation time {t} outside [0, 1]"
        )));
    }
    if t == 0.0 {
        return Ok(g0.clone());
    }
    if t == 1.0 {
        return Ok(g1.clone());
    }
    let mean = &g0.mean * (1.0 - t) + &g1.mean * t;
    let (c0, c1) = (conditioning(&g0.cov)?, conditioning(&g1.cov)?);
    let cov = if c0 > 0.0 && c0 >= c1 {
        displacement_cov(&g0.cov, &g1.cov, t)?
    } else if c1 > 0.0 {
        displacement_cov(&g1.cov, &g0.cov, 1.0 - t)?
    } else {
        let s = optimal_cross_covariance(g0, g1)?;
        let m = g0.cov.as_matrix() * (1.0 - t).powi(2)
            + g1.cov.as_matrix() * t.powi(2)
            + (&s + s.transpose()) * (t * (1.0 - t));
        SymMatrix::new(m)?
    };
    Gaussian::new(mean, cov)
}

// Requires cov_a nonsingular.
fn displacement_cov(cov_a: &SymMatrix, cov_b: &SymMatrix, t: f64) -> Result<SymMatrix> {
    let ra = cov_a.sqrt_psd()?;
    let ra_inv = cov_a.pinv_sqrt_psd()?;
    let mid = cov_b.congruence(&ra).sqrt_psd()?;
    let a = cov_a.as_matrix() * (1.0 - t) + mid.as_matrix() * t;
    let a = SymMatrix::new(a)?;
    let a2 = SymMatrix::symmetrized(a.as_matrix() * a.as_matrix());
    Ok(a2.congruence(&ra_inv))
}

/// Outcome of the barycenter fixed-point iteration.
#[derive(Debug, Clone)]
pub struct GaussianBarycenterReport {
    pub gaussian: Gaussian,
    pub iterations: usize,
    /// `‖Σ − Σ_k λ_k (Σ^{1/2} Σ_k Σ^{1/2})^{1/2}‖_F / (1 + ‖Σ‖_F)` at exit.
    pub residual: f64,
    /// Largest ridge added to a rank-deficient iterate, 0 if none was needed.
    pub ridge: f64,
}

/// W2 barycenter of weighted Gaussians. See [`gaussian_barycenter_report`].
pub fn gaussian_barycenter(items: &[(f64, Gaussian)]) -> Result<Gaussian> {
    gaussian_barycenter_report(items).map(|r| r.gaussian)
}

/// W2 barycenter of weighted Gaussians with iteration diagnostics.
///
/// Weights must be nonnegative and sum to one; zero-weight items are ignored.
/// The mean is `Σ_k λ_k m_k`; the covariance is found by iterating
/// `Σ ← Σ^{-1/2} (Σ_k λ_k (Σ^{1/2} Σ_k Σ^{1/2})^{1/2})² Σ^{-1/2}` from
/// `Σ_k λ_k Σ_k`.
pub fn gaussian_barycenter_report(items: &[(f64, Gaussian)]) -> Result<GaussianBarycenterReport> {
    let first = items
        .first()
        .ok_or_else(|| Error::Domain("barycenter of an empty set".into()))?;
    let n = first.1.dim();
    for (w, g) in items {
        if g.dim() != n {
            return Err(Error::Dim {
                expected: n,
                found: g.dim(),
            });
        }
        if !w.is_finite() || *w < 0.0 {
            return Err(Error::Domain(format!("invalid barycenter weight {w}")));
        }
    }
    let total: f64 = items.iter().map(|(w, _)| w).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "barycenter weights sum to {total}, expected 1"
        )));
    }
    let active: Vec<(f64, &Gaussian)> = items
        .iter()
        .filter(|(w, _)| *w > 0.0)
        .map(|(w, g)| (*w / total, g))
        .collect();
    if let [(_, g)] = active.as_slice() {
        return Ok(GaussianBarycenterReport {
            gaussian: (*g).clone(),
            iterations: 0,
            residual: 0.0,
            ridge: 0.0,
        });
    }

    let mean = active
        .iter()
        .fold(DVector::zeros(n), |acc, (w, g)| acc + &g.mean * *w);
    let mut cov = SymMatrix::new(active.iter().fold(DMatrix::zeros(n, n), |acc, (w, g)| {
        acc + g.cov.as_matrix() * *w
    }))?;

    let mut ridge_used: f64 = 0.0;
    let mut residual = f64::INFINITY;
    for iter in 0..FIXED_POINT_MAX_ITER {
        if cov.trace() <= 0.0 {
            // every input is a point mass
            return Ok(GaussianBarycenterReport {
                gaussian: Gaussian::new(mean, SymMatrix::zeros(n))?,
                iterations: iter,
                residual: 0.0,
                ridge: ridge_used,
            });
        }
        if cov.psd_rank()? < n {
            let ridge = SINGULAR_RIDGE * cov.trace() / n as f64;
            ridge_used = ridge_used.max(ridge);
            let bumped = cov.as_matrix() + DMatrix::identity(n, n) * ridge;
            cov = SymMatrix::new(bumped)?;
        }
        let root = cov.sqrt_psd()?;
        let mut avg = DMatrix::zeros(n, n);
        for (w, g) in &active {
            avg += g.cov.congruence(&root).sqrt_psd()?.as_matrix() * *w;
        }
        let avg = SymMatrix::new(avg)?;
        residual = (cov.as_matrix() - avg.as_matrix()).norm() / (1.0 + cov.frobenius_norm());
        if residual <= FIXED_POINT_TOL {
            return Ok(GaussianBarycenterReport {
                gaussian: Gaussian::new(mean, cov)?,
                iterations: iter,
                residual,
                ridge: ridge_used,
            });
        }
        let root_inv = cov.pinv_sqrt_psd()?;
        let avg_sq = SymMatrix::symmetrized(avg.as_matrix() * avg.as_matrix());
        cov = avg_sq.congruence(&root_inv);
    }
    Err(Error::Convergence {
        iterations: FIXED_POINT_MAX_ITER,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn g1d(m: f64, var: f64) -> Gaussian {
        Gaussian::scalar(m, var).unwrap()
    }

    fn g2d(mean: [f64; 2], cov: [f64; 4]) -> Gaussian {
        Gaussian::from_slices(&mean, &cov).unwrap()
    }

    fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).amax()
    }

    #[test]
    fn point_masses_reduce_to_euclidean_distance() {
        let a = Gaussian::from_slices(&[0.0, 0.0], &[0.0; 4]).unwrap();
        let b = Gaussian::from_slices(&[3.0, 4.0], &[0.0; 4]).unwrap();
        assert_eq!(w2_gaussian(&a, &b).unwrap(), 5.0);
    }

    #[test]
    fn identical_gaussians_are_at_distance_zero() {
        let g = g2d([0.0, 0.0], [1.0, 0.0, 0.0, 1.0]);
        assert_eq!(w2_gaussian(&g, &g.clone()).unwrap(), 0.0);
    }

    #[test]
    fn scalar_reduction() {
        // sqrt(Δ² + (σ₀ − σ₁)²)
        let d = w2_gaussian(&g1d(0.0, 4.0), &g1d(1.5, 0.25)).unwrap();
        assert_abs_diff_eq!(d, (1.5f64.powi(2) + 1.5f64.powi(2)).sqrt(), epsilon = 1e-13);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = g1d(0.0, 1.0);
        let b = g2d([0.0, 0.0], [1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(w2_gaussian(&a, &b), Err(Error::Dim { .. })));
        assert!(matches!(
            interpolate_gaussian(&a, &b, 0.5),
            Err(Error::Dim { .. })
        ));
    }

    #[test]
    fn cross_covariance_examples() {
        let id = g2d([0.0, 0.0], [1.0, 0.0, 0.0, 1.0]);
        let s = optimal_cross_covariance(&id, &id).unwrap();
        assert!(max_abs_diff(&s, &DMatrix::identity(2, 2)) < 1e-14);

        // σ₀σ₁
        let s = optimal_cross_covariance(&g1d(0.0, 4.0), &g1d(0.0, 9.0)).unwrap();
        assert_abs_diff_eq!(s[(0, 0)], 6.0, epsilon = 1e-13);

        // commuting: (Σ₀Σ₁)^{1/2}
        let a = g2d([0.0, 0.0], [1.0, 0.0, 0.0, 4.0]);
        let b = g2d([0.0, 0.0], [9.0, 0.0, 0.0, 1.0]);
        let s = optimal_cross_covariance(&a, &b).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 2.0]);
        assert!(max_abs_diff(&s, &expected) < 1e-13);
    }

    #[test]
    fn one_dimensional_coupling_matches_hand_solved_sdp() {
        // min −2S subject to S² ≤ σ₀²σ₁²: S = σ₀σ₁, scanned over a fine grid
        let (v0, v1) = (0.7f64, 2.3f64);
        let bound = (v0 * v1).sqrt();
        let best = (0..=10_000)
            .map(|k| -bound + 2.0 * bound * k as f64 / 10_000.0)
            .map(|s| (v0 + v1 - 2.0 * s, s))
            .fold(
                (f64::INFINITY, 0.0),
                |acc, x| if x.0 < acc.0 { x } else { acc },
            );
        let s = optimal_cross_covariance(&g1d(0.0, v0), &g1d(0.0, v1)).unwrap()[(0, 0)];
        assert_abs_diff_eq!(s, best.1, epsilon = 1e-12);
    }

    #[test]
    fn interpolation_examples() {
        let a = g2d([1.0, -1.0], [2.0, 0.3, 0.3, 1.0]);
        let b = g2d([3.0, 5.0], [2.0, 0.3, 0.3, 1.0]);
        assert_eq!(interpolate_gaussian(&a, &b, 0.0).unwrap(), a);
        let mid = interpolate_gaussian(&a, &b, 0.5).unwrap();
        assert!((mid.mean() - DVector::from_column_slice(&[2.0, 2.0])).amax() < 1e-14);
        assert!(max_abs_diff(mid.cov().as_matrix(), a.cov().as_matrix()) < 1e-12);

        // σ_t = (1−t)σ₀ + tσ₁
        let g = interpolate_gaussian(&g1d(0.0, 4.0), &g1d(1.0, 0.25), 0.3).unwrap();
        let sigma = 0.7 * 2.0 + 0.3 * 0.5;
        assert_abs_diff_eq!(g.cov()[(0, 0)], sigma * sigma, epsilon = 1e-13);
        assert_abs_diff_eq!(g.mean()[0], 0.3, epsilon = 1e-15);
    }

    #[test]
    fn interpolation_rejects_times_outside_unit_interval() {
        let a = g1d(0.0, 1.0);
        for t in [-0.1, 1.5, f64::NAN] {
            assert!(matches!(
                interpolate_gaussian(&a, &a, t),
                Err(Error::Domain(_))
            ));
        }
    }

    #[test]
    fn interpolation_from_point_mass() {
        // Σ₀ = 0: the geodesic is a pure dilation, Σ_t = t² Σ₁
        let a = Gaussian::from_slices(&[0.0, 0.0], &[0.0; 4]).unwrap();
        let b = g2d([1.0, 1.0], [2.0, 0.5, 0.5, 1.0]);
        let g = interpolate_gaussian(&a, &b, 0.4).unwrap();
        assert!(max_abs_diff(g.cov().as_matrix(), &(b.cov().as_matrix() * 0.16)) < 1e-13);
        let d = w2_gaussian(&a, &g).unwrap();
        assert_abs_diff_eq!(d, 0.4 * w2_gaussian(&a, &b).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn barycenter_examples() {
        let g = g2d([1.0, 2.0], [2.0, 0.4, 0.4, 1.0]);
        let b = gaussian_barycenter(&[(0.3, g.clone()), (0.7, g.clone())]).unwrap();
        assert!(max_abs_diff(b.cov().as_matrix(), g.cov().as_matrix()) < 1e-12);

        // σ = Σ λ_k σ_k
        let items = [
            (0.2, g1d(0.0, 1.0)),
            (0.5, g1d(1.0, 4.0)),
            (0.3, g1d(-2.0, 9.0)),
        ];
        let b = gaussian_barycenter(&items).unwrap();
        let sigma = 0.2 * 1.0 + 0.5 * 2.0 + 0.3 * 3.0;
        assert_abs_diff_eq!(b.cov()[(0, 0)], sigma * sigma, epsilon = 1e-12);
        assert_abs_diff_eq!(
            b.mean()[0],
            0.2 * 0.0 + 0.5 * 1.0 + 0.3 * -2.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn two_point_barycenter_is_the_geodesic() {
        let a = g2d([0.0, 1.0], [1.0, 0.6, 0.6, 2.0]);
        let b = g2d([2.0, -1.0], [3.0, -0.8, -0.8, 0.5]);
        for t in [0.25, 0.5, 0.75] {
            let bary = gaussian_barycenter(&[(1.0 - t, a.clone()), (t, b.clone())]).unwrap();
            let geo = interpolate_gaussian(&a, &b, t).unwrap();
            assert!(max_abs_diff(bary.cov().as_matrix(), geo.cov().as_matrix()) < 1e-8);
            assert!((bary.mean() - geo.mean()).amax() < 1e-12);
        }
    }

    #[test]
    fn barycenter_of_point_masses() {
        let a = Gaussian::from_slices(&[0.0, 0.0], &[0.0; 4]).unwrap();
        let b = Gaussian::from_slices(&[2.0, 0.0], &[0.0; 4]).unwrap();
        let r = gaussian_barycenter_report(&[(0.5, a), (0.5, b)]).unwrap();
        assert_eq!(r.gaussian.cov().frobenius_norm(), 0.0);
        assert_eq!(r.gaussian.mean()[0], 1.0);
    }

    #[test]
    fn singular_iterate_gets_ridge() {
        // both inputs share the null direction e₂
        let a = g2d([0.0, 0.0], [1.0, 0.0, 0.0, 0.0]);
        let b = g2d([0.0, 0.0], [4.0, 0.0, 0.0, 0.0]);
        let r = gaussian_barycenter_report(&[(0.5, a), (0.5, b)]).unwrap();
        assert!(r.ridge > 0.0);
        assert_abs_diff_eq!(r.gaussian.cov()[(0, 0)], 2.25, epsilon = 1e-9);
    }

    #[test]
    fn barycenter_rejects_bad_weights() {
        let g = g1d(0.0, 1.0);
        assert!(gaussian_barycenter(&[]).is_err());
        assert!(gaussian_barycenter(&[(0.5, g.clone())]).is_err());
        assert!(gaussian_barycenter(&[(-0.5, g.clone()), (1.5, g.clone())]).is_err());
    }

    fn arb_gaussian(n: usize) -> impl Strategy<Value = Gaussian> {
        (
            prop::collection::vec(-3.0f64..3.0, n),
            prop::collection::vec(-1.5f64..1.5, n * n),
            0.01f64..0.5,
        )
            .prop_map(move |(m, a, ridge)| {
                let a = DMatrix::from_row_slice(n, n, &a);
                let cov = a.transpose() * a + DMatrix::identity(n, n) * ridge;
                Gaussian::new(DVector::from_vec(m), SymMatrix::new(cov).unwrap()).unwrap()
            })
    }

    fn arb_triple() -> impl Strategy<Value = (Gaussian, Gaussian, Gaussian)> {
        (1usize..=4).prop_flat_map(|n| (arb_gaussian(n), arb_gaussian(n), arb_gaussian(n)))
    }

    proptest! {
        #[test]
        fn w2_is_a_metric((a, b, c) in arb_triple()) {
            let ab = w2_gaussian(&a, &b).unwrap();
            let ba = w2_gaussian(&b, &a).unwrap();
            let bc = w2_gaussian(&b, &c).unwrap();
            let ac = w2_gaussian(&a, &c).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-9);
            prop_assert!(ab >= 0.0);
            prop_assert!(ab + bc - ac >= -1e-8);
        }

        #[test]
        fn coupling_attains_w2((a, b, _c) in arb_triple()) {
            let s = optimal_cross_covariance(&a, &b).unwrap();
            let via_s = (a.mean() - b.mean()).norm_squared()
                + a.cov().trace() + b.cov().trace() - 2.0 * s.trace();
            let w2 = w2_gaussian_squared(&a, &b).unwrap();
            prop_assert!((via_s - w2).abs() <= 1e-8 * (1.0 + w2));
            // joint covariance is PSD
            let n = a.dim();
            let mut joint = DMatrix::zeros(2 * n, 2 * n);
            joint.view_mut((0, 0), (n, n)).copy_from(a.cov().as_matrix());
            joint.view_mut((n, n), (n, n)).copy_from(b.cov().as_matrix());
            joint.view_mut((0, n), (n, n)).copy_from(&s);
            joint.view_mut((n, 0), (n, n)).copy_from(&s.transpose());
            let min = SymMatrix::new(joint).unwrap().eigh().values.min();
            prop_assert!(min >= -1e-8 * (1.0 + a.cov().trace() + b.cov().trace()));
        }

        #[test]
        fn interpolation_is_constant_speed((a, b, _c) in arb_triple(), s in 0usize..4, len in 1usize..4) {
            let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
            let (s, t) = (grid[s], grid[(s + len).min(4)]);
            prop_assume!(s < t);
            let gs = interpolate_gaussian(&a, &b, s).unwrap();
            let gt = interpolate_gaussian(&a, &b, t).unwrap();
            let full = w2_gaussian(&a, &b).unwrap();
            let part = w2_gaussian(&gs, &gt).unwrap();
            prop_assert!((part - (t - s) * full).abs() <= 1e-6 * (1.0 + full));
            let end = interpolate_gaussian(&a, &b, 1.0).unwrap();
            prop_assert!((end.cov().as_matrix() - b.cov().as_matrix()).amax() <= 1e-8);
        }

        #[test]
        fn one_hot_barycenter_returns_that_input((a, b, c) in arb_triple(), k in 0usize..3) {
            let gs = [a, b, c];
            let items: Vec<(f64, Gaussian)> = gs.iter().enumerate()
                .map(|(i, g)| (if i == k { 1.0 } else { 0.0 }, g.clone())).collect();
            let r = gaussian_barycenter(&items).unwrap();
            prop_assert!(w2_gaussian(&r, &gs[k]).unwrap() <= 1e-9);
        }

        #[test]
        fn barycenter_residual_is_small((a, b, c) in arb_triple(), w in prop::collection::vec(0.05f64..1.0, 3)) {
            let total: f64 = w.iter().sum();
            let items = vec![(w[0] / total, a), (w[1] / total, b), (w[2] / total, c)];
            let r = gaussian_barycenter_report(&items).unwrap();
            prop_assert!(r.residual <= FIXED_POINT_TOL);
            prop_assert!(r.iterations <= FIXED_POINT_MAX_ITER);
            let mean = items.iter().fold(DVector::zeros(r.gaussian.dim()), |acc, (w, g)| acc + g.mean() * *w);
            prop_assert!((r.gaussian.mean() - mean).amax() <= 1e-14);
        }

        #[test]
        fn commuting_barycenter_has_closed_form(d in prop::collection::vec(0.05f64..4.0, 6), w in prop::collection::vec(0.05f64..1.0, 3)) {
            let total: f64 = w.iter().sum();
            let items: Vec<(f64, Gaussian)> = (0..3)
                .map(|k| (w[k] / total, g2d([0.0, 0.0], [d[2 * k], 0.0, 0.0, d[2 * k + 1]])))
                .collect();
            let b = gaussian_barycenter(&items).unwrap();
            let root = b.cov().sqrt_psd().unwrap();
            let mut expected = DMatrix::zeros(2, 2);
            for (lam, g) in &items {
                expected += g.cov().sqrt_psd().unwrap().as_matrix() * *lam;
            }
            prop_assert!(max_abs_diff(root.as_matrix(), &expected) <= 1e-8);
        }
    }
}
