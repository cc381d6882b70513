//! Helpers shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::path::PathBuf;

use gmmot::{Gaussian, GaussianMixture, SymMatrix};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn fixture(name: &str) -> GaussianMixture {
    let bytes = std::fs::read(fixture_path(name)).expect("fixture readable");
    GaussianMixture::read_model(&bytes).expect("fixture valid")
}

/// `A Aᵀ + floor·I` with `A` uniform in `[-1, 1]`.
pub fn random_spd(rng: &mut impl Rng, n: usize, floor: f64) -> SymMatrix {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let m = &a * a.transpose() * 0.5 + DMatrix::identity(n, n) * floor;
    SymMatrix::new(m).unwrap()
}

pub fn random_gaussian(rng: &mut impl Rng, n: usize) -> Gaussian {
    let mean = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
    Gaussian::new(mean, random_spd(rng, n, 0.05)).unwrap()
}

pub fn random_mixture(rng: &mut impl Rng, n: usize, max_components: usize) -> GaussianMixture {
    let k = rng.gen_range(1..=max_components);
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / sum).collect();
    let comps = (0..k).map(|_| random_gaussian(rng, n)).collect();
    GaussianMixture::new(weights, comps).unwrap()
}

/// A probability vector `a / Σa` with small positive integers `a`.
pub fn random_rational_marginal(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let a: Vec<u32> = (0..len).map(|_| rng.gen_range(1..=9)).collect();
    let total: u32 = a.iter().sum();
    a.iter().map(|&x| f64::from(x) / f64::from(total)).collect()
}

/// Minimum transportation cost by enumerating every basic solution.
///
/// A basis of the `m×n` transportation polytope is a spanning tree of the
/// complete bipartite graph; its flows are fixed by peeling leaves.
pub fn brute_force_transport(p: &[f64], q: &[f64], cost: &DMatrix<f64>) -> f64 {
    let (m, n) = (p.len(), q.len());
    let cells: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let k = m + n - 1;
    let mut best = f64::INFINITY;
    let mut chosen = Vec::with_capacity(k);
    enumerate(&cells, 0, k, &mut chosen, &mut |tree| {
        if let Some(flow) = tree_flows(p, q, tree) {
            let value: f64 = tree
                .iter()
                .zip(&flow)
                .map(|(&(i, j), f)| cost[(i, j)] * f)
                .sum();
            best = best.min(value);
        }
    });
    best
}

fn enumerate(
    cells: &[(usize, usize)],
    start: usize,
    k: usize,
    chosen: &mut Vec<(usize, usize)>,
    visit: &mut impl FnMut(&[(usize, usize)]),
) {
    if chosen.len() == k {
        visit(chosen);
        return;
    }
    let need = k - chosen.len();
    for idx in start..=cells.len() - need {
        chosen.push(cells[idx]);
        enumerate(cells, idx + 1, k, chosen, visit);
        chosen.pop();
    }
}

// Flows on a spanning tree, or None if the cells contain a cycle or a flow is negative.
fn tree_flows(p: &[f64], q: &[f64], tree: &[(usize, usize)]) -> Option<Vec<f64>> {
    let m = p.len();
    let nodes = m + q.len();
    let mut supply: Vec<f64> = p.iter().chain(q).copied().collect();
    let mut degree = vec![0usize; nodes];
    for &(i, j) in tree {
        degree[i] += 1;
        degree[m + j] += 1;
    }
    let mut flow = vec![f64::NAN; tree.len()];
    let mut done = vec![false; tree.len()];
    for _ in 0..tree.len() {
        let leaf = (0..nodes).find(|&v| degree[v] == 1)?;
        let e =
            (0..tree.len()).find(|&e| !done[e] && (tree[e].0 == leaf || m + tree[e].1 == leaf))?;
        let (i, j) = tree[e];
        let other = if i == leaf { m + j } else { i };
        let f = supply[leaf];
        if f < -1e-12 {
            return None;
        }
        flow[e] = f;
        done[e] = true;
        supply[other] -= f;
        supply[leaf] = 0.0;
        degree[leaf] -= 1;
        degree[other] -= 1;
    }
    // A tree uses every node; a leftover cycle leaves some edge unassigned.
    if done.iter().all(|d| *d)
        && supply[m..]
            .iter()
            .chain(&supply[..m])
            .all(|s| s.abs() < 1e-9)
    {
        Some(flow)
    } else {
        None
    }
}

/// Displacement interpolation between two Gaussians written directly from
/// the square-root formula, for cross-checking the library.
pub fn reference_interpolation(a: &Gaussian, b: &Gaussian, t: f64) -> (DVector<f64>, DMatrix<f64>) {
    let s0 = a.cov().as_matrix();
    let s1 = b.cov().as_matrix();
    let root0 = spectral(s0, f64::sqrt);
    let inv_root0 = spectral(s0, |x| 1.0 / x.sqrt());
    let middle = spectral(&(&root0 * s1 * &root0), f64::sqrt);
    let inner = s0 * (1.0 - t) + middle * t;
    let cov = &inv_root0 * &inner * &inner * &inv_root0;
    let mean = a.mean() * (1.0 - t) + b.mean() * t;
    (mean, cov)
}

pub fn spectral(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| f(x.max(0.0))));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

/// Structural validity: positive weights summing to one and PSD covariances.
pub fn check_valid_mixture(m: &GaussianMixture) -> Result<(), String> {
    let sum: f64 = m.weights().iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(format!("weights sum to {sum}"));
    }
    if m.weights().iter().any(|w| w.is_nan() || *w <= 0.0) {
        return Err("nonpositive weight".into());
    }
    for g in m.components() {
        let lo = g.cov().eigh().values.min();
        if lo < -g.cov().psd_tolerance() {
            return Err(format!("covariance eigenvalue {lo}"));
        }
    }
    Ok(())
}
