//! The joint association / placement / routing MILP in block form:
//!
//! ```text
//! max cᵀq  s.t.  B₁q + G₁w ≤ d₁,  B₂q + G₂w = d₂,  G₃w ≤ d₃,  q ≥ 0,  w ∈ {0,1}
//! ```
//!
//! Continuous columns are ordered `[x | y | z | o]`, binary columns
//! `[φU2S | φS2U | λ]`. Binaries that can only be zero (unavailable user
//! links, incapable virtual function nodes) are never created, so their
//! upper-bound families emit no rows.

mod baseline;
mod eval;

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::mfteg::{LinkKind, MfTeg, NodeKind, TrClass};
use crate::scenario::Scenario;

pub use baseline::{fix_binaries, greedy_association, initial_w, restrict_baseline, Scheme};
pub use eval::{all_binaries, decode_solution, evaluate, Evaluation, FlowOnLink, SolutionReport, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ContVar {
    /// Data of stage `stage` on transmission link `link`.
    X { flow: usize, stage: usize, link: usize },
    /// Stage `stage - 1` data entering a virtual function node that serves stage `stage`.
    Y { flow: usize, stage: usize, vfn: usize, slot: usize },
    /// Stage `stage` data leaving the virtual function node.
    Z { flow: usize, stage: usize, vfn: usize, slot: usize },
    /// Stage `stage` data stored on satellite `sat` from `slot` to `slot + 1`.
    O { flow: usize, stage: usize, sat: usize, slot: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BinVar {
    PhiU2s { flow: usize, slot: usize, sat: usize },
    PhiS2u { flow: usize, slot: usize, sat: usize },
    Lambda { flow: usize, stage: usize, vfn: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    SingleU2s,
    SingleS2u,
    CapU2s,
    CapS2u,
    SinglePlacement,
    U2sCapacity,
    S2uCapacity,
    S2sCapacity,
    VirtualInCapacity,
    VirtualOutCapacity,
    Computation,
    Storage,
    ConservationNonFunction,
    ConservationSub,
    Scaling,
    SourceRestriction,
    DestRestriction,
    Nonnegativity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowTag {
    pub family: Family,
    /// Element description with 1-based flow, stage, slot and satellite numbers.
    pub element: String,
}

impl fmt::Display for RowTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}[{}]", self.family, self.element)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub q: Vec<(usize, f64)>,
    pub w: Vec<(usize, f64)>,
    pub rhs: f64,
    pub tag: RowTag,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct VariableIndex {
    pub cont: Vec<ContVar>,
    pub bin: Vec<BinVar>,
    #[serde(skip)]
    cont_pos: HashMap<ContVar, usize>,
    #[serde(skip)]
    bin_pos: HashMap<BinVar, usize>,
}

impl VariableIndex {
    fn push_cont(&mut self, v: ContVar) -> usize {
        let i = self.cont.len();
        self.cont.push(v);
        self.cont_pos.insert(v, i);
        i
    }

    fn push_bin(&mut self, v: BinVar) -> usize {
        let i = self.bin.len();
        self.bin.push(v);
        self.bin_pos.insert(v, i);
        i
    }

    pub fn cont_index(&self, v: &ContVar) -> Option<usize> {
        self.cont_pos.get(v).copied()
    }

    pub fn bin_index(&self, v: &BinVar) -> Option<usize> {
        self.bin_pos.get(v).copied()
    }

    pub fn m0(&self) -> usize {
        self.cont.len()
    }

    pub fn n0(&self) -> usize {
        self.bin.len()
    }

    pub(crate) fn from_lists(cont: Vec<ContVar>, bin: Vec<BinVar>) -> Self {
        let mut v = VariableIndex::default();
        for c in cont {
            v.push_cont(c);
        }
        for b in bin {
            v.push_bin(b);
        }
        v
    }
}

#[derive(Debug, Clone)]
pub struct MilpProblem {
    pub vars: VariableIndex,
    /// Objective coefficients on q (maximized).
    pub c: Vec<f64>,
    pub ineq: Vec<Row>,
    pub eq: Vec<Row>,
    /// Binary-only rows; the w part of each row is used, q is empty.
    pub bin: Vec<Row>,
    /// Binaries eliminated by a baseline restriction, with their fixed value.
    pub fixed: Vec<(BinVar, u8)>,
    /// Upper bound on the objective from per-flow ground capacities.
    pub ub_cap: f64,
    pub horizon: usize,
    pub num_flows: usize,
    pub num_sats: usize,
}

impl MilpProblem {
    pub fn m0(&self) -> usize {
        self.vars.m0()
    }

    pub fn n0(&self) -> usize {
        self.vars.n0()
    }

    /// Rows of the subproblem in dual order: inequalities, then equalities.
    pub fn coupled_rows(&self) -> impl Iterator<Item = &Row> {
        self.ineq.iter().chain(self.eq.iter())
    }

    /// `d - G w` for the inequality and equality blocks.
    pub fn sub_rhs(&self, w: &[u8]) -> (Vec<f64>, Vec<f64>) {
        let f = |rows: &[Row]| rows.iter().map(|r| r.rhs - r.w.iter().map(|&(j, g)| g * f64::from(w[j])).sum::<f64>()).collect();
        (f(&self.ineq), f(&self.eq))
    }

    /// Cut `α + βᵀw` for a dual vector laid out as [ineq | eq]:
    /// α = dᵀu, β = −Gᵀu.
    pub fn cut_from_dual(&self, u: &[f64]) -> (f64, Vec<f64>) {
        let mut alpha = 0.0;
        let mut beta = vec![0.0; self.n0()];
        for (r, &ui) in self.coupled_rows().zip(u) {
            if ui == 0.0 {
                continue;
            }
            alpha += r.rhs * ui;
            for &(j, g) in &r.w {
                beta[j] -= g * ui;
            }
        }
        (alpha, beta)
    }

    pub fn family_counts(&self) -> Vec<(Family, usize)> {
        let mut m: std::collections::BTreeMap<Family, usize> = Default::default();
        for r in self.ineq.iter().chain(&self.eq).chain(&self.bin) {
            *m.entry(r.tag.family).or_default() += 1;
        }
        m.into_iter().collect()
    }

    /// Triplet dump: `block row col value` lines with a provenance comment per row.
    pub fn dump_triplets(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# sinflow-milp v1");
        let _ = writeln!(s, "# m0 {} n0 {}", self.m0(), self.n0());
        for (j, &cj) in self.c.iter().enumerate() {
            if cj != 0.0 {
                let _ = writeln!(s, "c {j} {cj}");
            }
        }
        for (name, rows) in [("1", &self.ineq), ("2", &self.eq), ("3", &self.bin)] {
            for (i, r) in rows.iter().enumerate() {
                let _ = writeln!(s, "# {name}:{i} {}", r.tag);
                for &(j, v) in &r.q {
                    let _ = writeln!(s, "B{name} {i} {j} {v}");
                }
                for &(j, v) in &r.w {
                    let _ = writeln!(s, "G{name} {i} {j} {v}");
                }
                let _ = writeln!(s, "d{name} {i} {}", r.rhs);
            }
        }
        s
    }
}

struct Builder {
    vars: VariableIndex,
    ineq: Vec<Row>,
    eq: Vec<Row>,
    bin: Vec<Row>,
}

impl Builder {
    fn row(q: Vec<(usize, f64)>, w: Vec<(usize, f64)>, rhs: f64, family: Family, element: String) -> Row {
        Row { q, w, rhs, tag: RowTag { family, element } }
    }

    fn push(block: &mut Vec<Row>, r: Row) {
        if !r.q.is_empty() || !r.w.is_empty() {
            block.push(r);
        }
    }

    /// `Σ w = 1` as the pair `Σ w ≤ 1`, `−Σ w ≤ −1`.
    fn bin_equality(&mut self, cols: &[usize], family: Family, element: String) {
        if cols.is_empty() {
            return;
        }
        let pos: Vec<_> = cols.iter().map(|&j| (j, 1.0)).collect();
        let neg: Vec<_> = cols.iter().map(|&j| (j, -1.0)).collect();
        self.bin.push(Self::row(Vec::new(), pos, 1.0, family, format!("{element} le")));
        self.bin.push(Self::row(Vec::new(), neg, -1.0, family, format!("{element} ge")));
    }
}

fn sat_name(s: &Scenario, i: usize) -> &str {
    &s.satellites[i].id
}

/// Upper bound on deliverable data: per flow, the smaller of its best
/// downlink capacity and its best uplink capacity shrunk by the chain.
pub fn ub_cap(g: &MfTeg, s: &Scenario) -> f64 {
    let mut total = 0.0;
    for l in 0..g.num_flows() {
        let mut up = 0.0;
        let mut down = 0.0;
        for t in 0..g.horizon {
            let best = |class: TrClass, node: usize| {
                let ids = if class == TrClass::U2s { g.out_links(node) } else { g.in_links(node) };
                ids.iter().map(|&k| g.links[k].capacity).fold(0.0f64, f64::max)
            };
            up += best(TrClass::U2s, g.source_node(l, t));
            down += best(TrClass::S2u, g.dest_node(l, t));
        }
        let shrink: f64 = s.flows[l].scaling_factors.iter().product();
        total += down.min(up / shrink);
    }
    total
}

pub fn assemble(g: &MfTeg, s: &Scenario) -> MilpProblem {
    let t_len = g.horizon;
    let n_flows = g.num_flows();
    let n_sats = g.num_sats();
    let delta = s.slot_duration_s;
    let mut b = Builder { vars: VariableIndex::default(), ineq: Vec::new(), eq: Vec::new(), bin: Vec::new() };

    // Continuous columns.
    let usable = |l: usize, link: &crate::mfteg::MfTegLink| {
        link.kind == LinkKind::Transmission
            && link.available
            && match link.class {
                Some(TrClass::U2s) => g.nodes[link.from].base == l,
                Some(TrClass::S2u) => g.nodes[link.to].base == l,
                _ => true,
            }
    };
    for l in 0..n_flows {
        for k in 0..=g.chain_len[l] {
            for (id, link) in g.links.iter().enumerate() {
                if usable(l, link) {
                    b.vars.push_cont(ContVar::X { flow: l, stage: k, link: id });
                }
            }
        }
    }
    let capable: Vec<Vec<Vec<usize>>> =
        (0..n_flows).map(|l| (0..=g.chain_len[l]).map(|k| if k == 0 { Vec::new() } else { g.capable(l, k) }).collect()).collect();
    for l in 0..n_flows {
        for k in 1..=g.chain_len[l] {
            for t in 0..t_len {
                for &v in &capable[l][k] {
                    b.vars.push_cont(ContVar::Y { flow: l, stage: k, vfn: v, slot: t });
                }
            }
        }
    }
    for l in 0..n_flows {
        for k in 1..=g.chain_len[l] {
            for t in 0..t_len {
                for &v in &capable[l][k] {
                    b.vars.push_cont(ContVar::Z { flow: l, stage: k, vfn: v, slot: t });
                }
            }
        }
    }
    for l in 0..n_flows {
        for k in 0..=g.chain_len[l] {
            for t in 0..t_len.saturating_sub(1) {
                for i in 0..n_sats {
                    b.vars.push_cont(ContVar::O { flow: l, stage: k, sat: i, slot: t });
                }
            }
        }
    }

    // Binary columns.
    for l in 0..n_flows {
        for t in 0..t_len {
            for &k in g.out_links(g.source_node(l, t)) {
                if g.links[k].available {
                    let sat = g.nodes[g.links[k].to].base;
                    b.vars.push_bin(BinVar::PhiU2s { flow: l, slot: t, sat });
                }
            }
        }
    }
    for l in 0..n_flows {
        for t in 0..t_len {
            for &k in g.in_links(g.dest_node(l, t)) {
                if g.links[k].available {
                    let sat = g.nodes[g.links[k].from].base;
                    b.vars.push_bin(BinVar::PhiS2u { flow: l, slot: t, sat });
                }
            }
        }
    }
    for l in 0..n_flows {
        for k in 1..=g.chain_len[l] {
            for &v in &capable[l][k] {
                b.vars.push_bin(BinVar::Lambda { flow: l, stage: k, vfn: v });
            }
        }
    }

    let x = |vars: &VariableIndex, l, k, link| vars.cont_index(&ContVar::X { flow: l, stage: k, link });
    let yv = |vars: &VariableIndex, l, k, v, t| vars.cont_index(&ContVar::Y { flow: l, stage: k, vfn: v, slot: t });
    let zv = |vars: &VariableIndex, l, k, v, t| vars.cont_index(&ContVar::Z { flow: l, stage: k, vfn: v, slot: t });
    let ov = |vars: &VariableIndex, l, k, i, t| vars.cont_index(&ContVar::O { flow: l, stage: k, sat: i, slot: t });

    // Binary-only rows: single association, per-satellite caps, single placement.
    for (dir, fam, cap_fam) in [(0, Family::SingleU2s, Family::CapU2s), (1, Family::SingleS2u, Family::CapS2u)] {
        let var = |l, t, i| {
            if dir == 0 {
                BinVar::PhiU2s { flow: l, slot: t, sat: i }
            } else {
                BinVar::PhiS2u { flow: l, slot: t, sat: i }
            }
        };
        for l in 0..n_flows {
            for t in 0..t_len {
                let cols: Vec<usize> = (0..n_sats).filter_map(|i| b.vars.bin_index(&var(l, t, i))).collect();
                b.bin_equality(&cols, fam, format!("l={} t={}", l + 1, t + 1));
            }
        }
        for t in 0..t_len {
            for i in 0..n_sats {
                let cols: Vec<(usize, f64)> =
                    (0..n_flows).filter_map(|l| b.vars.bin_index(&var(l, t, i)).map(|j| (j, 1.0))).collect();
                let cap = if dir == 0 { s.satellites[i].u2s_cap() } else { s.satellites[i].s2u_cap() };
                if cols.len() > cap as usize {
                    b.bin.push(Builder::row(
                        Vec::new(),
                        cols,
                        f64::from(cap),
                        cap_fam,
                        format!("{} t={}", sat_name(s, i), t + 1),
                    ));
                }
            }
        }
    }
    for l in 0..n_flows {
        for k in 1..=g.chain_len[l] {
            let cols: Vec<usize> =
                capable[l][k].iter().filter_map(|&v| b.vars.bin_index(&BinVar::Lambda { flow: l, stage: k, vfn: v })).collect();
            b.bin_equality(&cols, Family::SinglePlacement, format!("l={} k={}", l + 1, k));
        }
    }

    // Transmission capacities.
    for (id, link) in g.links.iter().enumerate() {
        if link.kind != LinkKind::Transmission || !link.available {
            continue;
        }
        let t = link.slot;
        match link.class {
            Some(TrClass::U2s) => {
                let l = g.nodes[link.from].base;
                let i = g.nodes[link.to].base;
                let phi = b.vars.bin_index(&BinVar::PhiU2s { flow: l, slot: t, sat: i }).expect("phi");
                let q = x(&b.vars, l, 0, id).into_iter().map(|j| (j, 1.0)).collect();
                let r = Builder::row(
                    q,
                    vec![(phi, -link.capacity)],
                    0.0,
                    Family::U2sCapacity,
                    format!("l={} t={} {}", l + 1, t + 1, sat_name(s, i)),
                );
                Builder::push(&mut b.ineq, r);
            }
            Some(TrClass::S2u) => {
                let l = g.nodes[link.to].base;
                let i = g.nodes[link.from].base;
                let kl = g.chain_len[l];
                let phi = b.vars.bin_index(&BinVar::PhiS2u { flow: l, slot: t, sat: i }).expect("phi");
                let q = x(&b.vars, l, kl, id).into_iter().map(|j| (j, 1.0)).collect();
                let r = Builder::row(
                    q,
                    vec![(phi, -link.capacity)],
                    0.0,
                    Family::S2uCapacity,
                    format!("l={} t={} {}", l + 1, t + 1, sat_name(s, i)),
                );
                Builder::push(&mut b.ineq, r);
            }
            _ => {
                let mut q = Vec::new();
                for l in 0..n_flows {
                    for k in 0..=g.chain_len[l] {
                        if let Some(j) = x(&b.vars, l, k, id) {
                            q.push((j, 1.0));
                        }
                    }
                }
                let (i, j) = (g.nodes[link.from].base, g.nodes[link.to].base);
                let r = Builder::row(
                    q,
                    Vec::new(),
                    link.capacity,
                    Family::S2sCapacity,
                    format!("{}->{} t={}", sat_name(s, i), sat_name(s, j), t + 1),
                );
                Builder::push(&mut b.ineq, r);
            }
        }
    }

    // Virtual link capacities, coupled with placement.
    let vcap = s.defaults.virtual_link_capacity_mbit;
    for (fam, is_in) in [(Family::VirtualInCapacity, true), (Family::VirtualOutCapacity, false)] {
        for l in 0..n_flows {
            for k in 1..=g.chain_len[l] {
                for &v in &capable[l][k] {
                    let lam = b.vars.bin_index(&BinVar::Lambda { flow: l, stage: k, vfn: v }).expect("lambda");
                    for t in 0..t_len {
                        let col = if is_in { yv(&b.vars, l, k, v, t) } else { zv(&b.vars, l, k, v, t) };
                        let vf = &g.vfns[v];
                        let r = Builder::row(
                            vec![(col.expect("virtual column"), 1.0)],
                            vec![(lam, -vcap)],
                            0.0,
                            fam,
                            format!("l={} k={} t={} {}#{}", l + 1, k, t + 1, sat_name(s, vf.sat), vf.offer + 1),
                        );
                        Builder::push(&mut b.ineq, r);
                    }
                }
            }
        }
    }

    // Computation per function node and slot.
    for i in 0..n_sats {
        if g.vfns_of(i).is_empty() {
            continue;
        }
        for t in 0..t_len {
            let mut q = Vec::new();
            for l in 0..n_flows {
                for k in 1..=g.chain_len[l] {
                    let kappa = s.flows[l].compute_factors[k - 1];
                    for &v in g.vfns_of(i) {
                        if let Some(j) = yv(&b.vars, l, k, v, t) {
                            q.push((j, kappa));
                        }
                    }
                }
            }
            let r = Builder::row(
                q,
                Vec::new(),
                s.satellites[i].compute_capacity_mbps * delta,
                Family::Computation,
                format!("{} t={}", sat_name(s, i), t + 1),
            );
            Builder::push(&mut b.ineq, r);
        }
    }

    // Storage per satellite and slot boundary.
    for i in 0..n_sats {
        for t in 0..t_len.saturating_sub(1) {
            let mut q = Vec::new();
            for l in 0..n_flows {
                for k in 0..=g.chain_len[l] {
                    if let Some(j) = ov(&b.vars, l, k, i, t) {
                        q.push((j, 1.0));
                    }
                }
            }
            let r = Builder::row(
                q,
                Vec::new(),
                s.satellites[i].storage_capacity_mbit,
                Family::Storage,
                format!("{} t={}->{}", sat_name(s, i), t + 1, t + 2),
            );
            Builder::push(&mut b.ineq, r);
        }
    }

    // Conservation per satellite, slot, flow and stage: inflow − outflow = 0.
    for i in 0..n_sats {
        let is_fn = !g.vfns_of(i).is_empty();
        for t in 0..t_len {
            let node = g.sat_node(i, t);
            debug_assert!(matches!(g.nodes[node].kind, NodeKind::NonFunction | NodeKind::VirtualSub));
            for l in 0..n_flows {
                let kl = g.chain_len[l];
                for k in 0..=kl {
                    let mut q = Vec::new();
                    for &id in g.in_links(node) {
                        if let Some(j) = x(&b.vars, l, k, id) {
                            q.push((j, 1.0));
                        }
                    }
                    for &id in g.out_links(node) {
                        if let Some(j) = x(&b.vars, l, k, id) {
                            q.push((j, -1.0));
                        }
                    }
                    if t > 0 {
                        if let Some(j) = ov(&b.vars, l, k, i, t - 1) {
                            q.push((j, 1.0));
                        }
                    }
                    if let Some(j) = ov(&b.vars, l, k, i, t) {
                        q.push((j, -1.0));
                    }
                    if is_fn {
                        for &v in g.vfns_of(i) {
                            if k >= 1 {
                                if let Some(j) = zv(&b.vars, l, k, v, t) {
                                    q.push((j, 1.0));
                                }
                            }
                            if k < kl {
                                if let Some(j) = yv(&b.vars, l, k + 1, v, t) {
                                    q.push((j, -1.0));
                                }
                            }
                        }
                    }
                    let fam = if is_fn { Family::ConservationSub } else { Family::ConservationNonFunction };
                    let r = Builder::row(q, Vec::new(), 0.0, fam, format!("{} t={} l={} k={}", sat_name(s, i), t + 1, l + 1, k));
                    Builder::push(&mut b.eq, r);
                }
            }
        }
    }

    // Scaling at each virtual function node: y(k−1) − β z(k) = 0.
    for l in 0..n_flows {
        for k in 1..=g.chain_len[l] {
            let beta = s.flows[l].scaling_factors[k - 1];
            for &v in &capable[l][k] {
                for t in 0..t_len {
                    let (yj, zj) = (yv(&b.vars, l, k, v, t).expect("y"), zv(&b.vars, l, k, v, t).expect("z"));
                    let vf = &g.vfns[v];
                    let r = Builder::row(
                        vec![(yj, 1.0), (zj, -beta)],
                        Vec::new(),
                        0.0,
                        Family::Scaling,
                        format!("l={} k={} t={} {}#{}", l + 1, k, t + 1, sat_name(s, vf.sat), vf.offer + 1),
                    );
                    Builder::push(&mut b.eq, r);
                }
            }
        }
    }

    // Source may only emit stage 0; destination may only receive stage K.
    for (id, link) in g.links.iter().enumerate() {
        if link.kind != LinkKind::Transmission || !link.available {
            continue;
        }
        let (l, fam, keep) = match link.class {
            Some(TrClass::U2s) => (g.nodes[link.from].base, Family::SourceRestriction, 0),
            Some(TrClass::S2u) => {
                let l = g.nodes[link.to].base;
                (l, Family::DestRestriction, g.chain_len[l])
            }
            _ => continue,
        };
        for k in 0..=g.chain_len[l] {
            if k == keep {
                continue;
            }
            if let Some(j) = x(&b.vars, l, k, id) {
                let r = Builder::row(
                    vec![(j, 1.0)],
                    Vec::new(),
                    0.0,
                    fam,
                    format!("l={} k={} t={} link={}", l + 1, k, link.slot + 1, id),
                );
                Builder::push(&mut b.eq, r);
            }
        }
    }

    let mut c = vec![0.0; b.vars.m0()];
    for (j, v) in b.vars.cont.iter().enumerate() {
        if let ContVar::X { flow, stage, link } = *v {
            if g.links[link].class == Some(TrClass::S2u) && stage == g.chain_len[flow] {
                c[j] = 1.0;
            }
        }
    }

    MilpProblem {
        vars: b.vars,
        c,
        ineq: b.ineq,
        eq: b.eq,
        bin: b.bin,
        fixed: Vec::new(),
        ub_cap: ub_cap(g, s),
        horizon: t_len,
        num_flows: n_flows,
        num_sats: n_sats,
    }
}

#[cfg(test)]
mod tests;
