//! Best-first branch and bound over LP relaxations for problems whose
//! integer columns are binary.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{solve_lp_with, LpOptions, LpOutcome, LpProblem};

pub const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnbLimits {
    pub max_nodes: usize,
    pub time_limit: Option<Duration>,
}

impl Default for BnbLimits {
    fn default() -> Self {
        BnbLimits { max_nodes: 200_000, time_limit: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnbOutcome {
    /// Best integral point found, if any.
    pub x: Option<Vec<f64>>,
    pub objective: f64,
    /// Proven lower bound on the optimum.
    pub bound: f64,
    pub optimal: bool,
    /// LP relaxations solved after the root.
    pub nodes: usize,
}

struct Node {
    bound: f64,
    id: usize,
    fix: Vec<(usize, bool)>,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: smallest bound first, then oldest node.
    fn cmp(&self, o: &Self) -> Ordering {
        o.bound.total_cmp(&self.bound).then(o.id.cmp(&self.id))
    }
}

struct Columns(Vec<Vec<(usize, f64)>>);

impl Columns {
    fn new(lp: &LpProblem) -> Self {
        let mut cols = vec![Vec::new(); lp.n];
        for (r, row) in lp.ineq.iter().chain(&lp.eq).enumerate() {
            for &(j, a) in row {
                cols[j].push((r, a));
            }
        }
        Columns(cols)
    }
}

/// Node LP with fixed columns removed through their bounds; fixing to one
/// moves the column into the right-hand side.
fn restrict(lp: &LpProblem, cols: &Columns, fix: &[(usize, bool)]) -> LpProblem {
    let mut q = lp.clone();
    if q.upper.is_empty() {
        q.upper = vec![f64::INFINITY; q.n];
    }
    let ni = q.ineq.len();
    for &(j, one) in fix {
        q.upper[j] = 0.0;
        if one {
            for &(r, a) in &cols.0[j] {
                if r < ni {
                    q.b_ineq[r] -= a;
                } else {
                    q.b_eq[r - ni] -= a;
                }
            }
        }
    }
    q
}

fn most_fractional(x: &[f64], ints: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &j in ints {
        let f = x[j] - x[j].floor();
        if f > INTEGRALITY_TOL && f < 1.0 - INTEGRALITY_TOL {
            let d = (f - 0.5).abs();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
    }
    best.map(|(j, _)| j)
}

/// Minimize `lp` with the columns in `ints` restricted to {0, 1} (their
/// upper bounds must be 1). `incumbent` seeds the cutoff.
pub fn branch_and_bound(
    lp: &LpProblem,
    ints: &[usize],
    limits: &BnbLimits,
    incumbent: Option<(Vec<f64>, f64)>,
) -> Result<BnbOutcome> {
    let start = Instant::now();
    let cols = Columns::new(lp);
    let opts = LpOptions::default();
    let (mut best_x, mut best) = match incumbent {
        Some((x, v)) => (Some(x), v),
        None => (None, f64::INFINITY),
    };
    let cutoff = |best: f64, bound: f64| bound >= best - 1e-9 * best.abs().max(1.0);
    let mut heap = BinaryHeap::new();
    heap.push(Node { bound: f64::NEG_INFINITY, id: 0, fix: Vec::new() });
    let mut next_id = 1;
    let mut solved = 0usize;
    while let Some(node) = heap.pop() {
        if cutoff(best, node.bound) {
            continue;
        }
        let over_time = limits.time_limit.is_some_and(|t| start.elapsed() > t);
        if solved > limits.max_nodes || over_time {
            let open = heap.iter().map(|n| n.bound).fold(node.bound, f64::min);
            return Ok(BnbOutcome {
                x: best_x,
                objective: best,
                bound: open.min(best),
                optimal: false,
                nodes: solved.saturating_sub(1),
            });
        }
        let q = restrict(lp, &cols, &node.fix);
        solved += 1;
        let mut x = match solve_lp_with(&q, &opts)? {
            LpOutcome::Optimal { x, .. } => x,
            LpOutcome::Infeasible { .. } => continue,
            LpOutcome::Unbounded { .. } => {
                return Err(Error::NumericalFailure("branch-and-bound relaxation is unbounded".into()))
            }
        };
        for &(j, one) in &node.fix {
            x[j] = if one { 1.0 } else { 0.0 };
        }
        let value: f64 = lp.c.iter().zip(&x).map(|(c, x)| c * x).sum();
        if cutoff(best, value) {
            continue;
        }
        match most_fractional(&x, ints) {
            None => {
                for &j in ints {
                    x[j] = x[j].round();
                }
                best = value;
                best_x = Some(x);
            }
            Some(j) => {
                for one in [false, true] {
                    let mut fix = node.fix.clone();
                    fix.push((j, one));
                    heap.push(Node { bound: value, id: next_id, fix });
                    next_id += 1;
                }
            }
        }
    }
    Ok(BnbOutcome { x: best_x, objective: best, bound: best, optimal: true, nodes: solved.saturating_sub(1) })
}
