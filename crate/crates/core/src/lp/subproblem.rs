//! The Benders subproblem: fix w, solve `min −cᵀq` over the coupled rows.
//!
//! Rows whose right-hand side is zero and whose live coefficients share a
//! sign force all their columns to zero; these are peeled off before the
//! LP and their duals rebuilt afterwards so that the returned vector is
//! dual feasible for the full subproblem (the cut stays globally valid).

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{solve_lp_with, LpOptions, LpOutcome, LpProblem};
use crate::error::{Error, Result};
use crate::milp::MilpProblem;

const ZERO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubproblemStats {
    pub rows: usize,
    pub cols: usize,
    pub reduced_rows: usize,
    pub reduced_cols: usize,
    pub pivots: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SubproblemOutcome {
    /// `value` is the optimum of `min −cᵀq`; the cut is `α + βᵀw ≤ θ`.
    Optimality { dual: Vec<f64>, value: f64, q: Vec<f64>, alpha: f64, beta: Vec<f64>, stats: SubproblemStats },
    /// The cut is `α + βᵀw ≤ 0`, violated by the current w.
    Feasibility { ray: Vec<f64>, alpha: f64, beta: Vec<f64>, stats: SubproblemStats },
}

impl SubproblemOutcome {
    pub fn stats(&self) -> &SubproblemStats {
        match self {
            SubproblemOutcome::Optimality { stats, .. } | SubproblemOutcome::Feasibility { stats, .. } => stats,
        }
    }
}

struct Presolve {
    col_alive: Vec<bool>,
    row_alive: Vec<bool>,
    /// Forcing rows in the order they fired, each with the columns it fixed.
    forced: Vec<(usize, Vec<usize>)>,
}

fn presolve(rows: &[&[(usize, f64)]], n_ineq: usize, rhs: &[f64], n_cols: usize, cols: &[Vec<(usize, f64)>]) -> Presolve {
    let m = rows.len();
    let mut col_alive = vec![true; n_cols];
    let mut row_alive = vec![true; m];
    let mut forced = Vec::new();
    let mut queue: VecDeque<usize> = (0..m).collect();
    let mut queued = vec![true; m];
    while let Some(r) = queue.pop_front() {
        queued[r] = false;
        if !row_alive[r] || rhs[r].abs() > ZERO {
            continue;
        }
        let live: Vec<(usize, f64)> = rows[r].iter().copied().filter(|&(j, a)| col_alive[j] && a != 0.0).collect();
        if live.is_empty() {
            continue;
        }
        let all_pos = live.iter().all(|&(_, a)| a > 0.0);
        let all_neg = live.iter().all(|&(_, a)| a < 0.0);
        let forcing = if r < n_ineq { all_pos } else { all_pos || all_neg };
        if !forcing {
            continue;
        }
        row_alive[r] = false;
        let fixed: Vec<usize> = live.iter().map(|&(j, _)| j).collect();
        for &j in &fixed {
            col_alive[j] = false;
            for &(i, _) in &cols[j] {
                if row_alive[i] && !queued[i] {
                    queued[i] = true;
                    queue.push_back(i);
                }
            }
        }
        forced.push((r, fixed));
    }
    Presolve { col_alive, row_alive, forced }
}

/// Give forcing rows duals that make every fixed column dual feasible:
/// `cost_j − Σ_i a_ij u_i ≥ 0`, with `u ≤ 0` on inequality rows.
fn postsolve(ps: &Presolve, rows: &[&[(usize, f64)]], n_ineq: usize, cols: &[Vec<(usize, f64)>], cost: &[f64], u: &mut [f64]) {
    for (r, fixed) in ps.forced.iter().rev() {
        let r = *r;
        let coef = |j: usize| rows[r].iter().filter(|e| e.0 == j).map(|e| e.1).sum::<f64>();
        let mut bound_hi = f64::INFINITY;
        let mut bound_lo = f64::NEG_INFINITY;
        for &j in fixed {
            let a = coef(j);
            let rc = cost[j] - cols[j].iter().filter(|e| e.0 != r).map(|&(i, v)| v * u[i]).sum::<f64>();
            if a > 0.0 {
                bound_hi = bound_hi.min(rc / a);
            } else if a < 0.0 {
                bound_lo = bound_lo.max(rc / a);
            }
        }
        u[r] = if r < n_ineq {
            bound_hi.min(0.0)
        } else if bound_hi.is_finite() {
            bound_hi
        } else if bound_lo.is_finite() {
            bound_lo
        } else {
            0.0
        };
    }
}

pub fn solve_subproblem(p: &MilpProblem, w: &[u8]) -> Result<SubproblemOutcome> {
    solve_subproblem_with(p, w, &LpOptions::default())
}

pub fn solve_subproblem_with(p: &MilpProblem, w: &[u8], opts: &LpOptions) -> Result<SubproblemOutcome> {
    if w.len() != p.n0() {
        return Err(Error::Dimension(format!("w has length {}, expected {}", w.len(), p.n0())));
    }
    let (r1, r2) = p.sub_rhs(w);
    let n_ineq = r1.len();
    let rhs: Vec<f64> = r1.into_iter().chain(r2).collect();
    let rows: Vec<&[(usize, f64)]> = p.coupled_rows().map(|r| r.q.as_slice()).collect();
    let m = rows.len();
    let n = p.m0();
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, r) in rows.iter().enumerate() {
        for &(j, a) in r.iter() {
            cols[j].push((i, a));
        }
    }
    let cost: Vec<f64> = p.c.iter().map(|c| -c).collect();
    let ps = presolve(&rows, n_ineq, &rhs, n, &cols);

    let col_map: Vec<usize> = {
        let mut k = 0;
        ps.col_alive
            .iter()
            .map(|&a| {
                if a {
                    k += 1;
                    k - 1
                } else {
                    usize::MAX
                }
            })
            .collect()
    };
    let live_cols: Vec<usize> = (0..n).filter(|&j| ps.col_alive[j]).collect();
    let mut lp = LpProblem::new(live_cols.len());
    for (k, &j) in live_cols.iter().enumerate() {
        lp.c[k] = cost[j];
    }
    let mut row_ids = Vec::new();
    for pass in 0..2 {
        for i in 0..m {
            if (i < n_ineq) != (pass == 0) || !ps.row_alive[i] {
                continue;
            }
            let r: Vec<(usize, f64)> = rows[i].iter().filter(|&&(j, _)| ps.col_alive[j]).map(|&(j, a)| (col_map[j], a)).collect();
            if r.is_empty() && (if i < n_ineq { rhs[i] >= -ZERO } else { rhs[i].abs() <= ZERO }) {
                continue;
            }
            if pass == 0 {
                lp.add_le(r, rhs[i]);
            } else {
                lp.add_eq(r, rhs[i]);
            }
            row_ids.push(i);
        }
    }
    let mut stats = SubproblemStats { rows: m, cols: n, reduced_rows: row_ids.len(), reduced_cols: live_cols.len(), pivots: 0 };

    match solve_lp_with(&lp, opts)? {
        LpOutcome::Optimal { x, duals, objective, pivots } => {
            stats.pivots = pivots;
            let mut u = vec![0.0; m];
            for (k, &i) in row_ids.iter().enumerate() {
                u[i] = duals[k];
            }
            postsolve(&ps, &rows, n_ineq, &cols, &cost, &mut u);
            let mut q = vec![0.0; n];
            for (k, &j) in live_cols.iter().enumerate() {
                q[j] = x[k];
            }
            let dual_value: f64 = rhs.iter().zip(&u).map(|(a, b)| a * b).sum();
            if (dual_value - objective).abs() > 1e-6 * (1.0 + objective.abs()) {
                return Err(Error::NumericalFailure(format!("subproblem duality gap: primal {objective} dual {dual_value}")));
            }
            let (alpha, beta) = p.cut_from_dual(&u);
            Ok(SubproblemOutcome::Optimality { dual: u, value: objective, q, alpha, beta, stats })
        }
        LpOutcome::Infeasible { farkas } => {
            // Work with u = −y so the postsolve sign rules match the optimality case.
            let mut u = vec![0.0; m];
            for (k, &i) in row_ids.iter().enumerate() {
                u[i] = -farkas[k];
            }
            let zero = vec![0.0; n];
            postsolve(&ps, &rows, n_ineq, &cols, &zero, &mut u);
            // e₁ = −y = u; the cut (d − Gw)ᵀe₁ ≤ 0 is violated by this w.
            let (alpha, beta) = p.cut_from_dual(&u);
            Ok(SubproblemOutcome::Feasibility { ray: u, alpha, beta, stats })
        }
        LpOutcome::Unbounded { .. } => Err(Error::NumericalFailure("subproblem unbounded".into())),
    }
}

/// `u ≤ 0` on inequality rows and `−c − Bᵀu ≥ 0` columnwise.
pub fn check_dual_feasible(p: &MilpProblem, u: &[f64], tol: f64) -> bool {
    let n_ineq = p.ineq.len();
    if u[..n_ineq].iter().any(|&v| v > tol) {
        return false;
    }
    let mut atu = vec![0.0; p.m0()];
    for (r, &ui) in p.coupled_rows().zip(u) {
        for &(j, a) in &r.q {
            atu[j] += a * ui;
        }
    }
    atu.iter().zip(&p.c).all(|(a, c)| -c - a >= -tol)
}
