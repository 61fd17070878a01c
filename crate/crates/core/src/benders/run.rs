use std::collections::HashMap;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bnb::{branch_and_bound, BnbLimits};
use super::log::{IterationLog, IterationRecord, StopReason};
use super::master::{Cut, CutKind, MasterState};
use crate::error::{Error, Result};
use crate::lp::{solve_subproblem, LpProblem, SubproblemOutcome};
use crate::milp::{decode_solution, MilpProblem, SolutionReport};
use crate::qubo::{build_master_qubo, encode_theta, PenaltyConfig};
use crate::sampler::{anneal, extract_candidates, AnnealSchedule, BRUTE_FORCE_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MasterBackend {
    /// Simulated annealing on the master QUBO.
    Sa,
    /// Exhaustive search over w with θ taken from the cuts.
    BruteForce,
    /// Branch and bound on the master's LP relaxation.
    Bnb,
}

impl MasterBackend {
    pub fn is_exact(self) -> bool {
        !matches!(self, MasterBackend::Sa)
    }
}

impl FromStr for MasterBackend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sa" => Ok(MasterBackend::Sa),
            "brute" | "brute-force" => Ok(MasterBackend::BruteForce),
            "bnb" => Ok(MasterBackend::Bnb),
            other => Err(Error::Validation(format!("unknown master backend {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Relative gap tolerance.
    pub eps: f64,
    pub max_iter: usize,
    /// Candidates taken from the master per iteration.
    pub rho: usize,
    pub backend: MasterBackend,
    pub schedule: AnnealSchedule,
    pub seed: u64,
    /// Annealing runs stop after this many iterations without a better UB.
    pub stall: usize,
    pub theta_bits: usize,
    pub max_escalations: u32,
    pub bnb: BnbLimits,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eps: 1e-3,
            max_iter: 200,
            rho: 1,
            backend: MasterBackend::Sa,
            schedule: AnnealSchedule::default(),
            seed: 0,
            stall: 15,
            theta_bits: 20,
            max_escalations: 6,
            bnb: BnbLimits::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(Error::Domain(format!("eps must be positive, got {}", self.eps)));
        }
        if self.rho == 0 || self.max_iter == 0 || self.stall == 0 {
            return Err(Error::Domain("rho, max_iter and stall must be at least 1".into()));
        }
        if self.theta_bits < 2 {
            return Err(Error::Domain("theta needs at least 2 bits".into()));
        }
        Ok(())
    }
}

/// `|UB − LB| / |UB|`, absolute below |UB| < 10⁻⁶.
pub fn relative_gap(ub: f64, lb: f64) -> f64 {
    if !ub.is_finite() || !lb.is_finite() {
        return f64::INFINITY;
    }
    let d = (ub - lb).abs();
    if ub.abs() < 1e-6 {
        d
    } else {
        d / ub.abs()
    }
}

#[derive(Debug, Clone)]
pub struct BendersResult {
    pub report: SolutionReport,
    pub w: Vec<u8>,
    pub q: Vec<f64>,
    /// Delivered data, the maximization objective (−UB).
    pub objective: f64,
    pub ub: f64,
    pub lb: f64,
    pub gap: f64,
    pub stop: StopReason,
    pub log: IterationLog,
    pub master: MasterState,
}

struct MasterPick {
    points: Vec<(Vec<u8>, f64)>,
    certified: bool,
    bits: usize,
    best: Option<f64>,
    median: Option<f64>,
    escalations: u32,
}

fn master_lp(state: &MasterState) -> LpProblem {
    let n = state.n0;
    let t = n;
    let mut lp = LpProblem::new(n + 1);
    lp.c[t] = 1.0;
    lp.upper = vec![1.0; n + 1];
    lp.upper[t] = state.theta_hi - state.theta_lo;
    for r in &state.rows {
        lp.add_le(r.w.clone(), r.rhs);
    }
    for c in &state.feasibility {
        lp.add_le(c.beta.clone(), -c.alpha);
    }
    for c in &state.optimality {
        let mut row = c.beta.clone();
        row.push((t, -1.0));
        lp.add_le(row, state.theta_lo - c.alpha);
    }
    lp
}

fn solve_master_bnb(state: &MasterState, limits: &BnbLimits, hints: &[&[u8]]) -> Result<MasterPick> {
    let lp = master_lp(state);
    let ints: Vec<usize> = (0..state.n0).collect();
    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    for w in hints {
        if w.len() == state.n0 && state.feasible(w, 1e-9) {
            let v = state.theta_at(w) - state.theta_lo;
            if incumbent.as_ref().is_none_or(|(_, b)| v < *b) {
                let mut x: Vec<f64> = w.iter().map(|&b| f64::from(b)).collect();
                x.push(v);
                incumbent = Some((x, v));
            }
        }
    }
    let out = branch_and_bound(&lp, &ints, limits, incumbent)?;
    if !out.optimal {
        return Err(Error::NodeLimit(format!(
            "master stopped after {} nodes with bound {} and incumbent {}",
            out.nodes,
            out.bound + state.theta_lo,
            out.objective + state.theta_lo
        )));
    }
    let x = out.x.ok_or_else(|| Error::Infeasible(vec!["master problem has no feasible w".into()]))?;
    let w: Vec<u8> = x[..state.n0].iter().map(|&v| u8::from(v > 0.5)).collect();
    let theta = state.theta_at(&w);
    Ok(MasterPick { points: vec![(w, theta)], certified: true, bits: state.n0, best: None, median: None, escalations: 0 })
}

fn solve_master_brute(state: &MasterState) -> Result<MasterPick> {
    let n = state.n0;
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::SizeGuard { bits: n, limit: BRUTE_FORCE_LIMIT });
    }
    let mut best: Option<(Vec<u8>, f64)> = None;
    let mut w = vec![0u8; n];
    // w[0] is the most significant bit, so masks run in lexicographic order.
    for mask in 0u64..1 << n {
        for (i, b) in w.iter_mut().enumerate() {
            *b = ((mask >> (n - 1 - i)) & 1) as u8;
        }
        if !state.feasible(&w, 1e-9) {
            continue;
        }
        let t = state.theta_at(&w);
        if best.as_ref().is_none_or(|(_, b)| t < *b - 1e-12) {
            best = Some((w.clone(), t));
        }
    }
    let point = best.ok_or_else(|| Error::Infeasible(vec!["master problem has no feasible w".into()]))?;
    Ok(MasterPick { points: vec![point], certified: true, bits: n, best: None, median: None, escalations: 0 })
}

fn solve_master_sa(state: &MasterState, cfg: &SolverConfig, iteration: usize) -> Result<MasterPick> {
    let enc = encode_theta(state.theta_lo, state.theta_hi, cfg.theta_bits)?;
    let mut base = PenaltyConfig::default_for(&enc);
    let mut load = vec![0.0; state.n0];
    for c in state.optimality.iter().chain(&state.feasibility) {
        for &(j, b) in &c.beta {
            load[j] += b * b;
        }
    }
    base.eta_rows *= 2.0 * load.iter().copied().fold(1.0, f64::max);
    let mut last_bits = 0;
    for k in 0..=cfg.max_escalations {
        let model = build_master_qubo(state, &base.scaled(2f64.powi(k as i32)), &enc)?;
        last_bits = model.n;
        let seed = cfg.seed ^ ((iteration as u64) << 20) ^ u64::from(k);
        let set = anneal(&model, &cfg.schedule, seed)?;
        match extract_candidates(&set, &model, cfg.rho) {
            Ok(c) => {
                return Ok(MasterPick {
                    points: c.into_iter().map(|c| (c.w, c.theta)).collect(),
                    certified: false,
                    bits: model.n,
                    best: set.best().map(|s| s.energy),
                    median: set.median_energy(),
                    escalations: k,
                })
            }
            Err(Error::EmptyCandidates) => {
                log::debug!("iteration {iteration}: no master-feasible sample, doubling penalties (round {})", k + 1)
            }
            Err(e) => return Err(e),
        }
    }
    log::error!(
        "iteration {iteration}: {} escalations of the penalties left every sample master-infeasible ({last_bits} bits)",
        cfg.max_escalations
    );
    Err(Error::EmptyCandidates)
}

/// Algorithm 1: one master point per iteration. Requires `rho == 1`.
pub fn run_hqcbd(p: &MilpProblem, w0: &[u8], cfg: &SolverConfig) -> Result<BendersResult> {
    if cfg.rho != 1 {
        return Err(Error::Domain(format!("single-cut run needs rho = 1, got {}", cfg.rho)));
    }
    run_benders(p, w0, cfg)
}

/// Algorithm 2: up to `rho` distinct master points per iteration, one
/// subproblem each, LB the smallest of their θ.
pub fn run_multicut(p: &MilpProblem, w0: &[u8], cfg: &SolverConfig) -> Result<BendersResult> {
    run_benders(p, w0, cfg)
}

/// The same loop with the master solved exactly by branch and bound.
pub fn run_classical_bd(p: &MilpProblem, w0: &[u8], cfg: &SolverConfig) -> Result<BendersResult> {
    let cfg = SolverConfig { backend: MasterBackend::Bnb, rho: 1, ..cfg.clone() };
    run_benders(p, w0, &cfg)
}

fn run_benders(p: &MilpProblem, w0: &[u8], cfg: &SolverConfig) -> Result<BendersResult> {
    cfg.validate()?;
    if w0.len() != p.n0() {
        return Err(Error::Dimension(format!("initial w has {} entries, problem has {}", w0.len(), p.n0())));
    }
    let mut state = MasterState::new(p);
    let mut log = IterationLog::default();
    let mut points: Vec<Vec<u8>> = vec![w0.to_vec()];
    // Subproblem value per evaluated w (None when infeasible).
    let mut seen: HashMap<Vec<u8>, Option<f64>> = HashMap::new();
    let mut best_q: Vec<f64> = Vec::new();
    let mut since_improvement = 0;
    let mut stop = StopReason::IterationLimit;
    for iteration in 1..=cfg.max_iter {
        state.iteration = iteration;
        let fresh: Vec<&Vec<u8>> = {
            let mut v: Vec<&Vec<u8>> = Vec::new();
            for w in &points {
                if !seen.contains_key(w) && !v.contains(&w) {
                    v.push(w);
                }
            }
            v
        };
        let t_sub = Instant::now();
        let outcomes: Vec<SubproblemOutcome> = fresh.par_iter().map(|w| solve_subproblem(p, w)).collect::<Result<_>>()?;
        let sub_ms = t_sub.elapsed().as_secs_f64() * 1e3;
        let mut cuts = String::new();
        let mut improved = false;
        for (w, out) in fresh.iter().zip(outcomes) {
            match out {
                SubproblemOutcome::Optimality { value, q, alpha, beta, .. } => {
                    seen.insert((*w).clone(), Some(value));
                    if !state.ub.is_finite() || value < state.ub - 1e-9 * state.ub.abs().max(1.0) {
                        state.ub = value;
                        state.incumbent = Some(((*w).clone(), q.clone()));
                        best_q = q;
                        improved = true;
                    }
                    if state.add_cut(Cut::new(CutKind::Optimality, alpha, &beta, iteration)) {
                        cuts.push('O');
                    }
                }
                SubproblemOutcome::Feasibility { alpha, beta, .. } => {
                    seen.insert((*w).clone(), None);
                    if state.add_cut(Cut::new(CutKind::Feasibility, alpha, &beta, iteration)) {
                        cuts.push('F');
                    }
                }
            }
        }
        since_improvement = if improved { 0 } else { since_improvement + 1 };

        let t_master = Instant::now();
        let hints: Vec<&[u8]> =
            points.iter().map(|w| w.as_slice()).chain(state.incumbent.as_ref().map(|(w, _)| w.as_slice())).collect();
        let pick = match cfg.backend {
            MasterBackend::Bnb => solve_master_bnb(&state, &cfg.bnb, &hints)?,
            MasterBackend::BruteForce => solve_master_brute(&state)?,
            MasterBackend::Sa => solve_master_sa(&state, cfg, iteration)?,
        };
        let master_ms = t_master.elapsed().as_secs_f64() * 1e3;
        state.lb = pick.points.iter().map(|(_, t)| *t).fold(f64::INFINITY, f64::min);
        state.lb_certified = pick.certified;
        let gap = relative_gap(state.ub, state.lb);
        log.push(IterationRecord {
            iteration,
            ub: state.ub,
            lb: state.lb,
            gap,
            lb_certified: pick.certified,
            cuts,
            subproblems: fresh.len(),
            master_bits: pick.bits,
            master_ms,
            sub_ms,
            sampler_best: pick.best,
            sampler_median: pick.median,
            escalations: pick.escalations,
        });
        log::debug!("iteration {iteration}: UB {} LB {} gap {gap:.3e}", state.ub, state.lb);
        points = pick.points.into_iter().map(|(w, _)| w).collect();
        if cfg.backend.is_exact() {
            let repeated = points.iter().all(|w| seen.contains_key(w));
            if gap <= cfg.eps || (repeated && state.ub.is_finite()) {
                stop = StopReason::Converged;
                break;
            }
        } else if since_improvement >= cfg.stall && state.ub.is_finite() {
            stop = StopReason::Stalled;
            break;
        }
    }
    log.stop = Some(stop);
    let (w, _) =
        state.incumbent.clone().ok_or_else(|| Error::Infeasible(vec!["no evaluated w had a feasible subproblem".into()]))?;
    let report = decode_solution(p, &best_q, &w)?;
    Ok(BendersResult {
        report,
        w,
        q: best_q,
        objective: -state.ub,
        ub: state.ub,
        lb: state.lb,
        gap: relative_gap(state.ub, state.lb),
        stop,
        log,
        master: state,
    })
}

#[derive(Debug, Clone)]
pub struct MonolithicResult {
    pub report: Option<SolutionReport>,
    pub w: Vec<u8>,
    pub q: Vec<f64>,
    /// Delivered data of the best point found.
    pub objective: f64,
    /// Proven upper bound on delivered data.
    pub bound: f64,
    pub optimal: bool,
    pub nodes: usize,
}

/// Branch and bound on the full MILP with LP relaxation bounds.
pub fn solve_monolithic(p: &MilpProblem, limits: &BnbLimits) -> Result<MonolithicResult> {
    let m0 = p.m0();
    let n0 = p.n0();
    let mut lp = LpProblem::new(m0 + n0);
    for (j, &c) in p.c.iter().enumerate() {
        lp.c[j] = -c;
    }
    lp.upper = vec![f64::INFINITY; m0 + n0];
    for j in 0..n0 {
        lp.upper[m0 + j] = 1.0;
    }
    let row = |r: &crate::milp::Row| -> Vec<(usize, f64)> {
        r.q.iter().copied().chain(r.w.iter().map(|&(j, g)| (m0 + j, g))).collect()
    };
    for r in p.ineq.iter().chain(&p.bin) {
        lp.add_le(row(r), r.rhs);
    }
    for r in &p.eq {
        lp.add_eq(row(r), r.rhs);
    }
    let ints: Vec<usize> = (m0..m0 + n0).collect();
    let out = branch_and_bound(&lp, &ints, limits, None)?;
    // Binaries within the integrality tolerance can still leak flow through
    // big capacity coefficients, so the flows are re-solved at the rounded w.
    let (w, q, report, objective) = match &out.x {
        Some(x) => {
            let w: Vec<u8> = x[m0..].iter().map(|&v| u8::from(v > 0.5)).collect();
            match solve_subproblem(p, &w)? {
                SubproblemOutcome::Optimality { q, value, .. } => {
                    let report = decode_solution(p, &q, &w)?;
                    (w, q, Some(report), -value)
                }
                SubproblemOutcome::Feasibility { .. } => {
                    return Err(Error::NumericalFailure("rounded branch-and-bound point has an infeasible subproblem".into()))
                }
            }
        }
        None => (Vec::new(), Vec::new(), None, f64::NEG_INFINITY),
    };
    Ok(MonolithicResult { report, w, q, objective, bound: -out.bound, optimal: out.optimal, nodes: out.nodes })
}
