use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{BinVar, Family, MilpProblem, Row, VariableIndex};
use crate::error::{Error, Result};
use crate::mfteg::MfTeg;
use crate::scenario::{ground_snr, GroundDirection, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Unrestricted joint optimization.
    Full,
    Lvnf,
    Fvnf,
    Hu,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::Full => "U-VNF-R",
            Scheme::Lvnf => "U-LVNF-R",
            Scheme::Fvnf => "U-FVNF-R",
            Scheme::Hu => "HU-VNF-R",
        }
    }

    pub fn all() -> [Scheme; 4] {
        [Scheme::Full, Scheme::Lvnf, Scheme::Fvnf, Scheme::Hu]
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" | "uvnfr" | "u-vnf-r" => Ok(Scheme::Full),
            "lvnf" | "u-lvnf-r" => Ok(Scheme::Lvnf),
            "fvnf" | "u-fvnf-r" => Ok(Scheme::Fvnf),
            "hu" | "hu-vnf-r" => Ok(Scheme::Hu),
            other => Err(Error::Validation(format!("unknown scheme {other:?}"))),
        }
    }
}

/// Per flow and slot, the (uplink, downlink) satellite with the strongest
/// signal that still has a free user slot, flows served in index order.
pub fn greedy_association(g: &MfTeg, s: &Scenario) -> Result<Vec<Vec<(usize, usize)>>> {
    let n_sats = s.num_satellites();
    let mut out = vec![vec![(0, 0); g.horizon]; s.num_flows()];
    for t in 0..g.horizon {
        for dir in [GroundDirection::U2s, GroundDirection::S2u] {
            let mut used = vec![0u32; n_sats];
            for l in 0..s.num_flows() {
                let user = match dir {
                    GroundDirection::U2s => s.source_node(l),
                    GroundDirection::S2u => s.dest_node(l),
                };
                let mut best: Option<(usize, f64)> = None;
                for i in 0..n_sats {
                    let sv = s.sat_node(i);
                    let (a, b) = if dir == GroundDirection::U2s { (user, sv) } else { (sv, user) };
                    if !s.visibility.available(a, b, t) {
                        continue;
                    }
                    let cap = match dir {
                        GroundDirection::U2s => s.satellites[i].u2s_cap(),
                        GroundDirection::S2u => s.satellites[i].s2u_cap(),
                    };
                    if used[i] >= cap {
                        continue;
                    }
                    let snr = ground_snr(&s.link_budget, s.visibility.range(a, b, t), dir)?;
                    if best.is_none_or(|(_, v)| snr > v) {
                        best = Some((i, snr));
                    }
                }
                let (i, _) = best.ok_or_else(|| {
                    Error::Baseline(format!("no satellite with a free user slot for flow {} at slot {}", s.flows[l].id, t + 1))
                })?;
                used[i] += 1;
                match dir {
                    GroundDirection::U2s => out[l][t].0 = i,
                    GroundDirection::S2u => out[l][t].1 = i,
                }
            }
        }
    }
    Ok(out)
}

/// Starting master point: greedy association and, per chain step, the
/// lowest-indexed capable virtual function node not already in use.
pub fn initial_w(p: &MilpProblem, g: &MfTeg, s: &Scenario) -> Result<Vec<u8>> {
    let assoc = greedy_association(g, s)?;
    let mut w = vec![0u8; p.n0()];
    let mut lambda_free: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
    for (j, b) in p.vars.bin.iter().enumerate() {
        match *b {
            BinVar::PhiU2s { flow, slot, sat } => w[j] = u8::from(assoc[flow][slot].0 == sat),
            BinVar::PhiS2u { flow, slot, sat } => w[j] = u8::from(assoc[flow][slot].1 == sat),
            BinVar::Lambda { flow, stage, vfn } => lambda_free.entry((flow, stage)).or_default().push((vfn, j)),
        }
    }
    let mut keys: Vec<_> = lambda_free.keys().copied().collect();
    keys.sort_unstable();
    let mut in_use: HashSet<usize> = p
        .fixed
        .iter()
        .filter_map(|(b, v)| match b {
            BinVar::Lambda { vfn, .. } if *v == 1 => Some(*vfn),
            _ => None,
        })
        .collect();
    for key in keys {
        let mut cands = lambda_free[&key].clone();
        cands.sort_unstable();
        let pick = cands.iter().find(|(v, _)| !in_use.contains(v)).unwrap_or(&cands[0]);
        w[pick.1] = 1;
        in_use.insert(pick.0);
    }
    Ok(w)
}

fn fixes_for(p: &MilpProblem, scheme: Scheme, g: &MfTeg, s: &Scenario) -> Result<HashMap<BinVar, u8>> {
    let mut fix = HashMap::new();
    match scheme {
        Scheme::Full => {}
        Scheme::Lvnf => {
            let mut keep = HashSet::new();
            for i in 0..s.num_satellites() {
                if let Some(&v) = g.vfns_of(i).iter().min_by_key(|&&v| (g.vfns[v].function, v)) {
                    keep.insert(v);
                }
            }
            for b in &p.vars.bin {
                if let BinVar::Lambda { vfn, .. } = *b {
                    if !keep.contains(&vfn) {
                        fix.insert(*b, 0);
                    }
                }
            }
        }
        Scheme::Fvnf => {
            let mut uses: HashMap<usize, usize> = HashMap::new();
            for l in 0..s.num_flows() {
                for k in 1..=g.chain_len[l] {
                    let cands = g.capable(l, k);
                    if cands.is_empty() {
                        return Err(Error::Baseline(format!(
                            "no capable virtual function node for flow {} stage {k}",
                            s.flows[l].id
                        )));
                    }
                    let f = g.chain[l][k];
                    let n = uses.entry(f).or_default();
                    let pinned = cands[*n % cands.len()];
                    *n += 1;
                    for v in cands {
                        fix.insert(BinVar::Lambda { flow: l, stage: k, vfn: v }, u8::from(v == pinned));
                    }
                }
            }
        }
        Scheme::Hu => {
            let assoc = greedy_association(g, s)?;
            for b in &p.vars.bin {
                match *b {
                    BinVar::PhiU2s { flow, slot, sat } => {
                        fix.insert(*b, u8::from(assoc[flow][slot].0 == sat));
                    }
                    BinVar::PhiS2u { flow, slot, sat } => {
                        fix.insert(*b, u8::from(assoc[flow][slot].1 == sat));
                    }
                    BinVar::Lambda { .. } => {}
                }
            }
        }
    }
    Ok(fix)
}

/// Fix binaries and fold them into right-hand sides. Placement rows that end
/// up with no free column are dropped: the step cannot be served and its
/// flow delivers nothing.
pub fn fix_binaries(p: &MilpProblem, fix: &HashMap<BinVar, u8>) -> Result<MilpProblem> {
    let mut remap = vec![None; p.n0()];
    let mut bins = Vec::new();
    let mut fixed = p.fixed.clone();
    for (j, b) in p.vars.bin.iter().enumerate() {
        match fix.get(b) {
            Some(&v) => fixed.push((*b, v)),
            None => {
                remap[j] = Some(bins.len());
                bins.push(*b);
            }
        }
    }
    let fold = |r: &Row| {
        let mut rhs = r.rhs;
        let mut w = Vec::with_capacity(r.w.len());
        for &(j, gj) in &r.w {
            match remap[j] {
                Some(nj) => w.push((nj, gj)),
                None => rhs -= gj * f64::from(fix[&p.vars.bin[j]]),
            }
        }
        Row { q: r.q.clone(), w, rhs, tag: r.tag.clone() }
    };
    let mut bin_rows = Vec::new();
    for r in &p.bin {
        let nr = fold(r);
        if nr.w.is_empty() {
            let unplaceable = r.tag.family == Family::SinglePlacement && r.w.iter().all(|&(j, _)| fix[&p.vars.bin[j]] == 0);
            if nr.rhs < -1e-9 && !unplaceable {
                return Err(Error::Baseline(format!("restriction violates {}", r.tag)));
            }
            continue;
        }
        bin_rows.push(nr);
    }
    let cont = p.vars.cont.clone();
    Ok(MilpProblem {
        vars: VariableIndex::from_lists(cont, bins),
        c: p.c.clone(),
        ineq: p.ineq.iter().map(fold).collect(),
        eq: p.eq.iter().map(fold).collect(),
        bin: bin_rows,
        fixed,
        ub_cap: p.ub_cap,
        horizon: p.horizon,
        num_flows: p.num_flows,
        num_sats: p.num_sats,
    })
}

pub fn restrict_baseline(p: &MilpProblem, scheme: Scheme, g: &MfTeg, s: &Scenario) -> Result<MilpProblem> {
    let fix = fixes_for(p, scheme, g, s)?;
    fix_binaries(p, &fix)
}
