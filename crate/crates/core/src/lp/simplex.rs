//! Bounded two-phase revised simplex over `min cᵀx, A_ineq x ≤ b, A_eq x = b, 0 ≤ x ≤ u`.
//!
//! Every row gets a logical column (`[0, ∞)` for inequalities, `[0, 0]` for
//! equalities). Rows whose logical cannot start feasible get an artificial
//! with phase-1 cost 1; after phase 1 artificials are clamped to `[0, 0]`.

use super::lu::{BasisFactor, Lu};
use super::{LpOptions, LpOutcome, LpProblem};
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;
const PIV_TOL: f64 = 1e-9;

struct Cols {
    n: usize,
    m: usize,
    start: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<f64>,
    art_row: Vec<usize>,
    art_sign: Vec<f64>,
}

impl Cols {
    fn total(&self) -> usize {
        self.n + self.m + self.art_row.len()
    }

    fn for_each(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for k in self.start[j]..self.start[j + 1] {
                f(self.rows[k], self.vals[k]);
            }
        } else if j < self.n + self.m {
            f(j - self.n, 1.0);
        } else {
            let a = j - self.n - self.m;
            f(self.art_row[a], self.art_sign[a]);
        }
    }

    fn sparse(&self, j: usize) -> Vec<(usize, f64)> {
        let mut v = Vec::new();
        self.for_each(j, |r, a| v.push((r, a)));
        v
    }

    fn dot(&self, j: usize, y: &[f64]) -> f64 {
        let mut s = 0.0;
        self.for_each(j, |r, a| s += a * y[r]);
        s
    }

    fn dense(&self, j: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.m];
        self.for_each(j, |r, a| v[r] += a);
        v
    }
}

struct State<'o> {
    cols: Cols,
    b: Vec<f64>,
    ub: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    pos: Vec<usize>,
    factor: BasisFactor,
    opts: &'o LpOptions,
    pivots: usize,
    feas_tol: f64,
}

enum Step {
    Optimal,
    Unbounded(Vec<f64>),
}

impl<'o> State<'o> {
    fn refactor(&mut self) -> Result<()> {
        loop {
            let basis = self.basis.clone();
            match Lu::factor(self.cols.m, |p| self.cols.sparse(basis[p])) {
                Ok(lu) => {
                    self.factor = BasisFactor::new(lu);
                    break;
                }
                Err(sing) => {
                    log::debug!("basis repair on {} columns", sing.pairs.len());
                    for (p, r) in sing.pairs {
                        let old = self.basis[p];
                        let logical = self.cols.n + r;
                        if self.pos[logical] != NONE {
                            return Err(Error::NumericalFailure("singular basis could not be repaired".into()));
                        }
                        self.pos[old] = NONE;
                        self.x[old] =
                            if self.x[old] > self.ub[old] / 2.0 && self.ub[old].is_finite() { self.ub[old] } else { 0.0 };
                        self.basis[p] = logical;
                        self.pos[logical] = p;
                    }
                }
            }
        }
        self.recompute_xb();
        Ok(())
    }

    fn recompute_xb(&mut self) {
        let mut rhs = self.b.clone();
        for j in 0..self.cols.total() {
            if self.pos[j] == NONE && self.x[j] != 0.0 {
                let xj = self.x[j];
                self.cols.for_each(j, |r, a| rhs[r] -= a * xj);
            }
        }
        let xb = self.factor.ftran(&rhs);
        for (p, &j) in self.basis.iter().enumerate() {
            self.x[j] = xb[p];
        }
    }

    fn duals(&self) -> Vec<f64> {
        let cb: Vec<f64> = self.basis.iter().map(|&j| self.cost[j]).collect();
        self.factor.btran(&cb)
    }

    fn primal_infeasibility(&self) -> f64 {
        self.basis.iter().map(|&j| (-self.x[j]).max(self.x[j] - self.ub[j]).max(0.0)).fold(0.0, f64::max)
    }

    fn run(&mut self) -> Result<Step> {
        let total = self.cols.total();
        let mut degenerate = 0usize;
        let mut bland = false;
        loop {
            if self.pivots >= self.opts.max_pivots {
                return Err(Error::NumericalFailure(format!("simplex pivot limit {} reached", self.opts.max_pivots)));
            }
            let y = self.duals();
            let mut enter = NONE;
            let mut best = 0.0;
            for j in 0..total {
                if self.pos[j] != NONE || self.ub[j] <= 0.0 {
                    continue;
                }
                let d = self.cost[j] - self.cols.dot(j, &y);
                let at_upper = self.ub[j].is_finite() && self.x[j] >= self.ub[j];
                let gain = if at_upper { d } else { -d };
                if gain > self.opts.opt_tol {
                    if bland {
                        enter = j;
                        break;
                    }
                    if gain > best {
                        best = gain;
                        enter = j;
                    }
                }
            }
            if enter == NONE {
                return Ok(Step::Optimal);
            }
            let q = enter;
            let dir = if self.ub[q].is_finite() && self.x[q] >= self.ub[q] { -1.0 } else { 1.0 };
            let alpha = self.factor.ftran(&self.cols.dense(q));

            // Harris two-pass ratio test.
            let tol = self.feas_tol;
            let mut theta_max = f64::INFINITY;
            for (p, &j) in self.basis.iter().enumerate() {
                let a = dir * alpha[p];
                if a > PIV_TOL {
                    theta_max = theta_max.min((self.x[j] + tol) / a);
                } else if a < -PIV_TOL && self.ub[j].is_finite() {
                    theta_max = theta_max.min((self.ub[j] + tol - self.x[j]) / -a);
                }
            }
            let flip = self.ub[q];
            let mut leave = NONE;
            let mut leave_ratio = f64::INFINITY;
            let mut leave_abs = 0.0;
            for (p, &j) in self.basis.iter().enumerate() {
                let a = dir * alpha[p];
                let ratio = if a > PIV_TOL {
                    self.x[j] / a
                } else if a < -PIV_TOL && self.ub[j].is_finite() {
                    (self.ub[j] - self.x[j]) / -a
                } else {
                    continue;
                };
                if bland {
                    if ratio < leave_ratio - 1e-12 || (ratio <= leave_ratio + 1e-12 && leave != NONE && j < self.basis[leave]) {
                        leave = p;
                        leave_ratio = ratio;
                        leave_abs = a.abs();
                    }
                } else if ratio <= theta_max && a.abs() > leave_abs {
                    leave = p;
                    leave_ratio = ratio;
                    leave_abs = a.abs();
                }
            }
            if leave == NONE && flip.is_infinite() {
                let mut ray = vec![0.0; self.cols.n];
                if q < self.cols.n {
                    ray[q] = dir;
                }
                for (p, &j) in self.basis.iter().enumerate() {
                    if j < self.cols.n {
                        ray[j] = -dir * alpha[p];
                    }
                }
                return Ok(Step::Unbounded(ray));
            }
            self.pivots += 1;
            let step = leave_ratio.max(0.0);
            if leave == NONE || flip <= step {
                // Entering variable runs to its opposite bound.
                for (p, &j) in self.basis.iter().enumerate() {
                    self.x[j] -= dir * alpha[p] * flip;
                }
                self.x[q] = if dir > 0.0 { flip } else { 0.0 };
                degenerate = 0;
                bland = false;
                continue;
            }
            for (p, &j) in self.basis.iter().enumerate() {
                self.x[j] -= dir * alpha[p] * step;
            }
            self.x[q] += dir * step;
            let out = self.basis[leave];
            let a = dir * alpha[leave];
            self.x[out] = if a > 0.0 { 0.0 } else { self.ub[out] };
            self.pos[out] = NONE;
            self.basis[leave] = q;
            self.pos[q] = leave;
            self.factor.update(leave, &alpha);
            if step <= 1e-12 && self.ub[out] > 0.0 {
                degenerate += 1;
                if degenerate > self.opts.bland_after {
                    bland = true;
                }
            } else if step > 1e-12 {
                degenerate = 0;
                bland = false;
            }
            if self.factor.updates() >= self.opts.refactor_every {
                self.refactor()?;
            }
        }
    }
}

pub fn solve(p: &LpProblem, opts: &LpOptions) -> Result<LpOutcome> {
    let n = p.n;
    let mi = p.ineq.len();
    let m = mi + p.eq.len();
    let mut counts = vec![0usize; n + 1];
    for row in p.ineq.iter().chain(&p.eq) {
        for &(j, _) in row {
            counts[j + 1] += 1;
        }
    }
    for j in 0..n {
        counts[j + 1] += counts[j];
    }
    let start = counts.clone();
    let mut fill = counts;
    let nnz = start[n];
    let mut rows = vec![0usize; nnz];
    let mut vals = vec![0.0f64; nnz];
    for (i, row) in p.ineq.iter().chain(&p.eq).enumerate() {
        for &(j, a) in row {
            rows[fill[j]] = i;
            vals[fill[j]] = a;
            fill[j] += 1;
        }
    }
    let b: Vec<f64> = p.b_ineq.iter().chain(&p.b_eq).copied().collect();
    let scale = 1.0 + b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let feas_tol = opts.feas_tol * scale;

    let mut art_row = Vec::new();
    let mut art_sign = Vec::new();
    for (i, &bi) in b.iter().enumerate() {
        let needs = if i < mi { bi < 0.0 } else { bi != 0.0 };
        if needs {
            art_row.push(i);
            art_sign.push(bi.signum());
        }
    }
    let cols = Cols { n, m, start, rows, vals, art_row, art_sign };
    let total = cols.total();
    let mut ub = vec![f64::INFINITY; total];
    for j in 0..n {
        ub[j] = p.upper.get(j).copied().unwrap_or(f64::INFINITY);
        if ub[j] < 0.0 {
            return Err(Error::Domain(format!("upper bound of column {j} is negative")));
        }
    }
    for i in mi..m {
        ub[n + i] = 0.0;
    }
    let mut basis: Vec<usize> = (0..m).map(|i| n + i).collect();
    for (a, &r) in cols.art_row.iter().enumerate() {
        basis[r] = n + m + a;
    }
    let mut pos = vec![NONE; total];
    for (p_, &j) in basis.iter().enumerate() {
        pos[j] = p_;
    }
    let mut cost = vec![0.0; total];
    for j in n + m..total {
        cost[j] = 1.0;
    }
    let n_art = cols.art_row.len();
    let lu =
        Lu::factor(m, |k| cols.sparse(basis[k])).map_err(|_| Error::NumericalFailure("starting basis is singular".into()))?;
    let mut st =
        State { cols, b, ub, cost, x: vec![0.0; total], basis, pos, factor: BasisFactor::new(lu), opts, pivots: 0, feas_tol };
    st.recompute_xb();

    if n_art > 0 {
        match st.run()? {
            Step::Optimal => {}
            Step::Unbounded(_) => return Err(Error::NumericalFailure("phase 1 reported unbounded".into())),
        }
        let infeas: f64 = (n + m..total).map(|j| st.x[j]).sum();
        if infeas > feas_tol {
            st.refactor()?;
            let pi = st.duals();
            let farkas: Vec<f64> = pi.iter().map(|v| -v).collect();
            return Ok(LpOutcome::Infeasible { farkas });
        }
        for j in n + m..total {
            st.ub[j] = 0.0;
            st.cost[j] = 0.0;
            if st.pos[j] == NONE {
                st.x[j] = 0.0;
            }
        }
    }
    for j in 0..n {
        st.cost[j] = p.c[j];
    }
    match st.run()? {
        Step::Optimal => {}
        Step::Unbounded(ray) => return Ok(LpOutcome::Unbounded { ray }),
    }
    st.refactor()?;
    if st.primal_infeasibility() > 1e3 * feas_tol {
        // One more pass from the refreshed factorization usually restores feasibility.
        return Err(Error::NumericalFailure(format!("final basis violates bounds by {:.3e}", st.primal_infeasibility())));
    }
    let duals = st.duals();
    let x: Vec<f64> = st.x[..n].iter().map(|&v| v.max(0.0)).collect();
    let objective = x.iter().zip(&p.c).map(|(a, b)| a * b).sum();
    log::trace!("lp solved: m={m} n={n} pivots={}", st.pivots);
    Ok(LpOutcome::Optimal { x, duals, objective, pivots: st.pivots })
}
