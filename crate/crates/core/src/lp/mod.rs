//! Linear programming: primal solutions, duals and infeasibility
//! certificates, plus the Benders subproblem built on top.

mod lu;
mod simplex;
mod subproblem;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub use subproblem::{check_dual_feasible, solve_subproblem, solve_subproblem_with, SubproblemOutcome, SubproblemStats};

/// `min cᵀx  s.t.  ineq·x ≤ b_ineq,  eq·x = b_eq,  0 ≤ x ≤ upper`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub n: usize,
    pub c: Vec<f64>,
    pub ineq: Vec<Vec<(usize, f64)>>,
    pub b_ineq: Vec<f64>,
    pub eq: Vec<Vec<(usize, f64)>>,
    pub b_eq: Vec<f64>,
    /// Per-column upper bounds; empty means all infinite.
    pub upper: Vec<f64>,
}

impl LpProblem {
    pub fn new(n: usize) -> Self {
        LpProblem { n, c: vec![0.0; n], ..Default::default() }
    }

    pub fn add_le(&mut self, row: Vec<(usize, f64)>, rhs: f64) {
        self.ineq.push(row);
        self.b_ineq.push(rhs);
    }

    pub fn add_eq(&mut self, row: Vec<(usize, f64)>, rhs: f64) {
        self.eq.push(row);
        self.b_eq.push(rhs);
    }

    pub fn rows(&self) -> usize {
        self.ineq.len() + self.eq.len()
    }

    fn upper(&self, j: usize) -> f64 {
        self.upper.get(j).copied().unwrap_or(f64::INFINITY)
    }

    /// `Aᵀy` over all rows, duals laid out as [ineq | eq].
    pub fn at_y(&self, y: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.n];
        for (row, &yi) in self.ineq.iter().chain(&self.eq).zip(y) {
            for &(j, a) in row {
                v[j] += a * yi;
            }
        }
        v
    }

    pub fn b(&self) -> Vec<f64> {
        self.b_ineq.iter().chain(&self.b_eq).copied().collect()
    }

    /// Max violation of `x` against rows and bounds.
    pub fn primal_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (row, &b) in self.ineq.iter().zip(&self.b_ineq) {
            let s: f64 = row.iter().map(|&(j, a)| a * x[j]).sum();
            worst = worst.max(s - b);
        }
        for (row, &b) in self.eq.iter().zip(&self.b_eq) {
            let s: f64 = row.iter().map(|&(j, a)| a * x[j]).sum();
            worst = worst.max((s - b).abs());
        }
        for (j, &xj) in x.iter().enumerate() {
            worst = worst.max(-xj).max(xj - self.upper(j));
        }
        worst
    }

    /// Dual objective of `y` for a problem without finite upper bounds, or
    /// with the bound terms added from reduced costs otherwise.
    pub fn dual_objective(&self, y: &[f64]) -> f64 {
        let atv = self.at_y(y);
        let mut obj: f64 = self.b().iter().zip(y).map(|(b, y)| b * y).sum();
        for j in 0..self.n {
            let u = self.upper(j);
            if u.is_finite() {
                obj += u * (self.c[j] - atv[j]).min(0.0);
            }
        }
        obj
    }

    /// Check that `y` proves infeasibility: y ≥ 0 on inequality rows,
    /// Aᵀy ≥ 0 on unbounded columns and bᵀy plus bound terms < 0.
    pub fn is_farkas_certificate(&self, y: &[f64], tol: f64) -> bool {
        if y.len() != self.rows() {
            return false;
        }
        if y[..self.ineq.len()].iter().any(|&v| v < -tol) {
            return false;
        }
        let atv = self.at_y(y);
        let mut val: f64 = self.b().iter().zip(y).map(|(b, y)| b * y).sum();
        for (j, &a) in atv.iter().enumerate() {
            let u = self.upper(j);
            if u.is_finite() {
                val += u * a.min(0.0);
            } else if a < -tol {
                return false;
            }
        }
        val < -tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpOptions {
    pub max_pivots: usize,
    pub refactor_every: usize,
    pub bland_after: usize,
    pub feas_tol: f64,
    pub opt_tol: f64,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions { max_pivots: 1_000_000, refactor_every: 100, bland_after: 500, feas_tol: 1e-9, opt_tol: 1e-7 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal {
        x: Vec<f64>,
        /// Row duals [ineq | eq]: nonpositive on inequalities, free on equalities.
        duals: Vec<f64>,
        objective: f64,
        pivots: usize,
    },
    /// `farkas` is laid out like the duals and satisfies [`LpProblem::is_farkas_certificate`].
    Infeasible {
        farkas: Vec<f64>,
    },
    Unbounded {
        ray: Vec<f64>,
    },
}

pub fn solve_lp(p: &LpProblem) -> Result<LpOutcome> {
    solve_lp_with(p, &LpOptions::default())
}

pub fn solve_lp_with(p: &LpProblem, opts: &LpOptions) -> Result<LpOutcome> {
    simplex::solve(p, opts)
}

#[cfg(test)]
mod tests;
