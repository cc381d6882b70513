//! Network simplex for the transportation problem
//! `min Σ c(i,j) π(i,j)` over couplings of `p` and `q`.
//!
//! The basis is a spanning tree of the bipartite graph rows ∪ columns with
//! `N₀ + N₁ − 1` cells. It starts from the north-west-corner rule. Entering
//! cells are priced in blocks of about `√(N₀N₁)` cells, taking the most
//! negative reduced cost of the first block that has one. After a run of
//! `N₀ + N₁` degenerate pivots the solver switches to Bland's rule (first
//! row-major cell with a negative reduced cost) until a pivot moves flow, so
//! it cannot cycle. Ties for the leaving cell go to the smallest cell index.

use nalgebra::{DMatrix, DVector};

use super::normalize_marginal;
use crate::{Error, Result};

/// Reduced costs above `-REDUCED_COST_TOL · max(1, max c)` count as optimal.
const REDUCED_COST_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct TransportationProblem {
    p: Vec<f64>,
    q: Vec<f64>,
    cost: DMatrix<f64>,
}

impl TransportationProblem {
    /// Marginals within `1e-9` of summing to one are renormalized.
    pub fn new(p: &[f64], q: &[f64], cost: DMatrix<f64>) -> Result<Self> {
        let p = normalize_marginal(p, "source marginal")?;
        let q = normalize_marginal(q, "target marginal")?;
        if cost.shape() != (p.len(), q.len()) {
            return Err(Error::Dim {
                expected: p.len() * q.len(),
                found: cost.len(),
            });
        }
        if let Some(c) = cost.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::Domain(format!("invalid transport cost {c}")));
        }
        Ok(Self { p, q, cost })
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn cost(&self) -> &DMatrix<f64> {
        &self.cost
    }
}

/// An optimal vertex of the transportation polytope with its dual certificate.
#[derive(Debug, Clone)]
pub struct Coupling {
    pub plan: DMatrix<f64>,
    /// `⟨cost, plan⟩`
    pub cost_value: f64,
    pub row_potentials: DVector<f64>,
    pub col_potentials: DVector<f64>,
    pub pivots: usize,
}

impl Coupling {
    /// `min_{i,j} c(i,j) − u_i − v_j`; nonnegative up to round-off at optimality.
    pub fn min_reduced_cost(&self, cost: &DMatrix<f64>) -> f64 {
        let mut min = f64::INFINITY;
        for i in 0..cost.nrows() {
            for j in 0..cost.ncols() {
                min = min.min(cost[(i, j)] - self.row_potentials[i] - self.col_potentials[j]);
            }
        }
        min
    }

    /// Dual objective `Σ p_i u_i + Σ q_j v_j`.
    pub fn dual_value(&self, p: &[f64], q: &[f64]) -> f64 {
        let u: f64 = p
            .iter()
            .zip(self.row_potentials.iter())
            .map(|(a, b)| a * b)
            .sum();
        let v: f64 = q
            .iter()
            .zip(self.col_potentials.iter())
            .map(|(a, b)| a * b)
            .sum();
        u + v
    }
}

// Spanning tree over nodes 0..m (rows) and m..m+n (columns), rooted at row 0.
struct Tree {
    parent: Vec<usize>,
    parent_edge: Vec<usize>,
    depth: Vec<usize>,
    potential: Vec<f64>,
}

impl Tree {
    fn build(m: usize, n: usize, basis: &[(usize, usize)], cost: &DMatrix<f64>) -> Result<Self> {
        let nodes = m + n;
        // compressed adjacency: neighbours of node a are adj[start[a]..start[a + 1]]
        let mut start = vec![0usize; nodes + 1];
        for &(i, j) in basis {
            start[i + 1] += 1;
            start[m + j + 1] += 1;
        }
        for a in 0..nodes {
            start[a + 1] += start[a];
        }
        let mut fill = start.clone();
        let mut adj = vec![(0usize, 0usize); 2 * basis.len()];
        for (e, &(i, j)) in basis.iter().enumerate() {
            adj[fill[i]] = (m + j, e);
            fill[i] += 1;
            adj[fill[m + j]] = (i, e);
            fill[m + j] += 1;
        }
        let mut parent = vec![usize::MAX; nodes];
        let mut parent_edge = vec![usize::MAX; nodes];
        let mut depth = vec![0; nodes];
        let mut potential = vec![0.0; nodes];
        let mut seen = vec![false; nodes];
        let mut queue = std::collections::VecDeque::with_capacity(nodes);
        seen[0] = true;
        queue.push_back(0);
        let mut visited = 1;
        while let Some(a) = queue.pop_front() {
            for &(b, e) in &adj[start[a]..start[a + 1]] {
                if seen[b] {
                    continue;
                }
                seen[b] = true;
                visited += 1;
                parent[b] = a;
                parent_edge[b] = e;
                depth[b] = depth[a] + 1;
                let (i, j) = basis[e];
                // u_i + v_j = c_ij
                potential[b] = cost[(i, j)] - potential[a];
                queue.push_back(b);
            }
        }
        if visited != nodes {
            return Err(Error::Solver("basis is not a spanning tree".into()));
        }
        Ok(Self {
            parent,
            parent_edge,
            depth,
            potential,
        })
    }

    // Basis edges on the tree path from node a to node b, in order.
    fn path(&self, mut a: usize, mut b: usize) -> Vec<usize> {
        let mut from_a = Vec::new();
        let mut from_b = Vec::new();
        while a != b {
            if self.depth[a] >= self.depth[b] {
                from_a.push(self.parent_edge[a]);
                a = self.parent[a];
            } else {
                from_b.push(self.parent_edge[b]);
                b = self.parent[b];
            }
        }
        from_a.extend(from_b.into_iter().rev());
        from_a
    }
}

/// Solves the transportation problem to an optimal basic (vertex) solution.
///
/// When the optimum is not unique, the vertex returned is whichever the
/// pivoting sequence reaches first; it is not canonical.
pub fn solve_transportation(prob: &TransportationProblem) -> Result<Coupling> {
    let (m, n) = prob.cost.shape();
    let cost = &prob.cost;

    // north-west corner: a staircase of exactly m + n - 1 cells
    let mut basis = Vec::with_capacity(m + n - 1);
    let mut flow = Vec::with_capacity(m + n - 1);
    let (mut supply, mut demand) = (prob.p.clone(), prob.q.clone());
    let (mut i, mut j) = (0, 0);
    loop {
        let amount = supply[i].min(demand[j]);
        basis.push((i, j));
        flow.push(amount);
        supply[i] -= amount;
        demand[j] -= amount;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if j == n - 1 || (i < m - 1 && supply[i] <= demand[j]) {
            i += 1;
        } else {
            j += 1;
        }
    }
    // round-off left in the final cell
    let last = flow.len() - 1;
    flow[last] += supply[m - 1].max(0.0).min(demand[n - 1].max(0.0));

    let mut is_basic = vec![false; m * n];
    for &(i, j) in &basis {
        is_basic[i * n + j] = true;
    }

    let tol = REDUCED_COST_TOL * cost.max().max(1.0);
    let max_pivots = 100_000 + 50 * m * n;
    let mut pivots = 0;
    let cells = m * n;
    let block = ((cells as f64).sqrt().ceil() as usize).max(16);
    let mut cursor = 0;
    let mut degenerate_run = 0;
    let tree = loop {
        let tree = Tree::build(m, n, &basis, cost)?;
        let reduced = |idx: usize| {
            let (i, j) = (idx / n, idx % n);
            cost[(i, j)] - tree.potential[i] - tree.potential[m + j]
        };
        let entering = if degenerate_run >= m + n {
            (0..cells).find(|&idx| !is_basic[idx] && reduced(idx) < -tol)
        } else {
            let mut best: Option<(f64, usize)> = None;
            let mut scanned = 0;
            while scanned < cells {
                let idx = (cursor + scanned) % cells;
                scanned += 1;
                if !is_basic[idx] {
                    let r = reduced(idx);
                    if r < -tol && best.is_none_or(|(b, _)| r < b) {
                        best = Some((r, idx));
                    }
                }
                if scanned % block == 0 && best.is_some() {
                    break;
                }
            }
            cursor = (cursor + scanned) % cells;
            best.map(|(_, idx)| idx)
        };
        let Some(enter) = entering else {
            break tree;
        };
        if pivots == max_pivots {
            return Err(Error::Solver(format!(
                "network simplex exceeded {max_pivots} pivots"
            )));
        }
        pivots += 1;

        let (ei, ej) = (enter / n, enter % n);
        // cycle: entering cell (+), then the tree path from column ej back to
        // row ei with alternating signs starting at (−)
        let path = tree.path(m + ej, ei);
        // (flow, cell index, basis position) of the leaving candidate
        let mut leaving: Option<(f64, usize, usize)> = None;
        for &e in path.iter().step_by(2) {
            let (li, lj) = basis[e];
            let cell = li * n + lj;
            let better = match leaving {
                None => true,
                Some((f, idx, _)) => flow[e] < f || (flow[e] == f && cell < idx),
            };
            if better {
                leaving = Some((flow[e], cell, e));
            }
        }
        let (theta, _, leave_pos) = leaving.expect("cycle has a backward edge");
        if theta > 0.0 {
            degenerate_run = 0;
        } else {
            degenerate_run += 1;
        }
        for (k, &e) in path.iter().enumerate() {
            if k % 2 == 0 {
                flow[e] -= theta;
            } else {
                flow[e] += theta;
            }
        }
        let (li, lj) = basis[leave_pos];
        is_basic[li * n + lj] = false;
        is_basic[enter] = true;
        basis[leave_pos] = (ei, ej);
        flow[leave_pos] = theta;
    };

    let mut plan = DMatrix::zeros(m, n);
    for (&(i, j), &f) in basis.iter().zip(&flow) {
        plan[(i, j)] = f.max(0.0);
    }
    let cost_value = cost.component_mul(&plan).sum();
    Ok(Coupling {
        plan,
        cost_value,
        row_potentials: DVector::from_iterator(m, tree.potential[..m].iter().copied()),
        col_potentials: DVector::from_iterator(n, tree.potential[m..].iter().copied()),
        pivots,
    })
}
