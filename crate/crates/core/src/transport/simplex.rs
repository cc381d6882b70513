//! Dense two-phase revised simplex for `min cᵀx  s.t.  Ax = b, x ≥ 0`, `b ≥ 0`.
//!
//! The basis inverse is kept explicitly and updated by elementary row
//! operations, with a fresh LU-based inverse every [`REFACTOR_EVERY`]
//! pivots. Entering variables follow Dantzig's rule; the leaving variable is
//! chosen by the lexicographic ratio test, which rules out cycling.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

pub const REFACTOR_EVERY: usize = 50;
const PIVOT_TOL: f64 = 1e-9;
const REDUCED_COST_TOL: f64 = 1e-11;
const TIE_TOL: f64 = 1e-12;
const MAX_ITER: usize = 200_000;

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    /// Row duals `y` with `yᵀA ≤ c` at optimality.
    pub duals: DVector<f64>,
    /// `|cᵀx − bᵀy|` from a freshly factored final basis.
    pub duality_gap: f64,
    /// `min_j c_j − yᵀA_j`; nonnegative up to round-off at optimality.
    pub min_reduced_cost: f64,
    pub iterations: usize,
}

struct State {
    // [A | I]
    a: DMatrix<f64>,
    b: DVector<f64>,
    structural: usize,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    binv: DMatrix<f64>,
    xb: DVector<f64>,
    since_refactor: usize,
    iterations: usize,
}

impl State {
    fn new(lp: &LinearProgram) -> Self {
        let (m, n) = lp.a.shape();
        let mut a = DMatrix::zeros(m, n + m);
        a.view_mut((0, 0), (m, n)).copy_from(&lp.a);
        a.view_mut((0, n), (m, m)).fill_with_identity();
        let mut is_basic = vec![false; n + m];
        is_basic[n..].iter_mut().for_each(|f| *f = true);
        Self {
            a,
            b: lp.b.clone(),
            structural: n,
            basis: (n..n + m).collect(),
            is_basic,
            binv: DMatrix::identity(m, m),
            xb: lp.b.clone(),
            since_refactor: 0,
            iterations: 0,
        }
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.basis.len();
        let mut bmat = DMatrix::zeros(m, m);
        for (r, &j) in self.basis.iter().enumerate() {
            bmat.set_column(r, &self.a.column(j));
        }
        self.binv = bmat
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Solver("singular basis".into()))?;
        self.xb = &self.binv * &self.b;
        for x in self.xb.iter_mut() {
            if *x < 0.0 {
                if *x < -1e-9 {
                    return Err(Error::Solver(format!("basis lost feasibility ({x:e})")));
                }
                *x = 0.0;
            }
        }
        self.since_refactor = 0;
        Ok(())
    }

    fn duals(&self, cost: &DVector<f64>) -> DVector<f64> {
        let cb = DVector::from_iterator(self.basis.len(), self.basis.iter().map(|&j| cost[j]));
        self.binv.transpose() * cb
    }

    fn pivot(&mut self, row: usize, enter: usize, alpha: &DVector<f64>) {
        let theta = self.xb[row] / alpha[row];
        for r in 0..self.xb.len() {
            if r != row {
                self.xb[r] -= theta * alpha[r];
                if self.xb[r] < 0.0 && self.xb[r] > -1e-12 {
                    self.xb[r] = 0.0;
                }
            }
        }
        self.xb[row] = theta;
        let pivot_row = self.binv.row(row) / alpha[row];
        for r in 0..self.binv.nrows() {
            if r != row && alpha[r] != 0.0 {
                let f = alpha[r];
                let mut dst = self.binv.row_mut(r);
                dst -= &pivot_row * f;
            }
        }
        self.binv.set_row(row, &pivot_row);
        self.is_basic[self.basis[row]] = false;
        self.is_basic[enter] = true;
        self.basis[row] = enter;
        self.since_refactor += 1;
        self.iterations += 1;
    }

    // Lexicographic ratio test over rows with a positive pivot entry.
    fn leaving_row(&self, alpha: &DVector<f64>) -> Option<usize> {
        let rows: Vec<usize> = (0..alpha.len()).filter(|&r| alpha[r] > PIVOT_TOL).collect();
        let min = rows
            .iter()
            .map(|&r| self.xb[r] / alpha[r])
            .fold(f64::INFINITY, f64::min);
        let ties: Vec<usize> = rows
            .into_iter()
            .filter(|&r| self.xb[r] / alpha[r] <= min + TIE_TOL * min.max(1.0))
            .collect();
        ties.into_iter().reduce(|best, r| {
            for k in 0..self.binv.ncols() {
                let a = self.binv[(r, k)] / alpha[r];
                let b = self.binv[(best, k)] / alpha[best];
                if (a - b).abs() > TIE_TOL {
                    return if a < b { r } else { best };
                }
            }
            best.min(r)
        })
    }

    // Runs simplex iterations on `cost` with only structural columns allowed to enter.
    fn optimize(&mut self, cost: &DVector<f64>) -> Result<()> {
        let tol = REDUCED_COST_TOL * cost.amax().max(1.0);
        loop {
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            if self.iterations >= MAX_ITER {
                return Err(Error::Solver(format!(
                    "simplex stalled after {MAX_ITER} pivots"
                )));
            }
            let y = self.duals(cost);
            let mut entering = None;
            let mut best = -tol;
            for j in 0..self.structural {
                if self.is_basic[j] {
                    continue;
                }
                let d = cost[j] - self.a.column(j).dot(&y);
                if d < best {
                    best = d;
                    entering = Some(j);
                }
            }
            let Some(j) = entering else {
                return Ok(());
            };
            let alpha = &self.binv * self.a.column(j);
            let row = self
                .leaving_row(&alpha)
                .ok_or_else(|| Error::Solver("linear program is unbounded".into()))?;
            self.pivot(row, j, &alpha);
        }
    }

    // Replace zero-level artificials by structural columns where possible.
    // Artificials that cannot leave sit on redundant rows and stay at zero.
    fn drive_out_artificials(&mut self) {
        for row in 0..self.basis.len() {
            if self.basis[row] < self.structural {
                continue;
            }
            let tableau_row = self.binv.row(row) * &self.a;
            let candidate = (0..self.structural)
                .filter(|&j| !self.is_basic[j] && tableau_row[j].abs() > PIVOT_TOL)
                .max_by(|&x, &y| tableau_row[x].abs().total_cmp(&tableau_row[y].abs()));
            if let Some(j) = candidate {
                let alpha = &self.binv * self.a.column(j);
                self.pivot(row, j, &alpha);
            }
        }
    }
}

/// Solves a standard-form LP. Errors with [`Error::InfeasibleMarginals`] when
/// phase one cannot reach a feasible point.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    let (m, n) = lp.a.shape();
    if lp.b.len() != m || lp.c.len() != n {
        return Err(Error::Dim {
            expected: m,
            found: lp.b.len(),
        });
    }
    if lp.b.iter().any(|&x| x.is_nan() || x < 0.0) {
        return Err(Error::Domain("right-hand side must be nonnegative".into()));
    }
    let mut state = State::new(lp);

    let mut phase1 = DVector::zeros(n + m);
    phase1.rows_mut(n, m).fill(1.0);
    state.optimize(&phase1)?;
    state.refactor()?;
    let infeasibility: f64 = state
        .basis
        .iter()
        .zip(state.xb.iter())
        .filter(|(&j, _)| j >= n)
        .map(|(_, x)| x)
        .sum();
    if infeasibility > 1e-9 * lp.b.amax().max(1.0) {
        return Err(Error::InfeasibleMarginals(format!(
            "constraints are infeasible (residual {infeasibility:e})"
        )));
    }
    state.drive_out_artificials();
    state.refactor()?;

    let mut cost = DVector::zeros(n + m);
    cost.rows_mut(0, n).copy_from(&lp.c);
    state.optimize(&cost)?;
    state.refactor()?;

    let mut x = DVector::zeros(n);
    for (&j, &v) in state.basis.iter().zip(state.xb.iter()) {
        if j < n {
            x[j] = v;
        }
    }
    let duals = state.duals(&cost);
    let objective = lp.c.dot(&x);
    let dual_objective = lp.b.dot(&duals);
    let min_reduced_cost = (0..n)
        .map(|j| lp.c[j] - lp.a.column(j).dot(&duals))
        .fold(f64::INFINITY, f64::min);
    Ok(LpSolution {
        x,
        objective,
        duals,
        duality_gap: (objective - dual_objective).abs(),
        min_reduced_cost,
        iterations: state.iterations,
    })
}
