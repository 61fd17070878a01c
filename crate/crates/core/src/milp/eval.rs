use serde::{Deserialize, Serialize};

use super::{BinVar, ContVar, MilpProblem, Row, RowTag};
use crate::error::{Error, Result};

pub const FEAS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub tag: RowTag,
    /// Amount by which the row is violated (positive).
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub feasible: bool,
    pub objective: f64,
    pub violations: Vec<Violation>,
}

fn lhs(r: &Row, q: &[f64], w: &[u8]) -> f64 {
    r.q.iter().map(|&(j, a)| a * q[j]).sum::<f64>() + r.w.iter().map(|&(j, g)| g * f64::from(w[j])).sum::<f64>()
}

pub fn evaluate(p: &MilpProblem, q: &[f64], w: &[u8]) -> Result<Evaluation> {
    if q.len() != p.m0() || w.len() != p.n0() {
        return Err(Error::Dimension(format!(
            "expected q of length {} and w of length {}, got {} and {}",
            p.m0(),
            p.n0(),
            q.len(),
            w.len()
        )));
    }
    let mut violations = Vec::new();
    for r in p.ineq.iter().chain(&p.bin) {
        let v = lhs(r, q, w) - r.rhs;
        if v > FEAS_TOL {
            violations.push(Violation { tag: r.tag.clone(), residual: v });
        }
    }
    for r in &p.eq {
        let v = (lhs(r, q, w) - r.rhs).abs();
        if v > FEAS_TOL {
            violations.push(Violation { tag: r.tag.clone(), residual: v });
        }
    }
    for (j, &qj) in q.iter().enumerate() {
        if qj < -FEAS_TOL {
            violations.push(Violation {
                tag: RowTag { family: super::Family::Nonnegativity, element: format!("q[{j}] nonnegativity") },
                residual: -qj,
            });
        }
    }
    let objective = p.c.iter().zip(q).map(|(c, x)| c * x).sum();
    Ok(Evaluation { feasible: violations.is_empty(), objective, violations })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowOnLink {
    pub var: ContVar,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub objective: f64,
    pub delivered: Vec<f64>,
    /// Association per flow and slot: (source satellite, destination satellite).
    pub association: Vec<Vec<(Option<usize>, Option<usize>)>>,
    /// Virtual function template per flow and stage (index 0 unused).
    pub placement: Vec<Vec<Option<usize>>>,
    pub flows: Vec<FlowOnLink>,
}

/// Full binary assignment over free and fixed variables.
pub fn all_binaries(p: &MilpProblem, w: &[u8]) -> Vec<(BinVar, u8)> {
    p.vars.bin.iter().copied().zip(w.iter().copied()).chain(p.fixed.iter().copied()).collect()
}

pub fn decode_solution(p: &MilpProblem, q: &[f64], w: &[u8]) -> Result<SolutionReport> {
    let ev = evaluate(p, q, w)?;
    if !ev.feasible {
        return Err(Error::Infeasible(ev.violations.iter().map(|v| format!("{} by {:.3e}", v.tag, v.residual)).collect()));
    }
    let mut delivered = vec![0.0; p.num_flows];
    for (j, &cj) in p.c.iter().enumerate() {
        if cj != 0.0 {
            if let ContVar::X { flow, .. } = p.vars.cont[j] {
                delivered[flow] += cj * q[j];
            }
        }
    }
    let mut association = vec![vec![(None, None); p.horizon]; p.num_flows];
    let max_stage = p
        .vars
        .bin
        .iter()
        .chain(p.fixed.iter().map(|(b, _)| b))
        .filter_map(|b| match b {
            BinVar::Lambda { stage, .. } => Some(*stage),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    let mut placement = vec![vec![None; max_stage + 1]; p.num_flows];
    for (b, v) in all_binaries(p, w) {
        if v == 0 {
            continue;
        }
        match b {
            BinVar::PhiU2s { flow, slot, sat } => association[flow][slot].0 = Some(sat),
            BinVar::PhiS2u { flow, slot, sat } => association[flow][slot].1 = Some(sat),
            BinVar::Lambda { flow, stage, vfn } => placement[flow][stage] = Some(vfn),
        }
    }
    let flows =
        p.vars.cont.iter().zip(q).filter(|(_, &v)| v > FEAS_TOL).map(|(var, &value)| FlowOnLink { var: *var, value }).collect();
    Ok(SolutionReport { objective: ev.objective, delivered, association, placement, flows })
}
