//! Multi-functional time-expanded graph.
//!
//! Every function node is split into a virtual sub-node, which inherits the
//! satellite's transmission and storage links, and one virtual function node
//! per offered function, joined to the sub-node by a virtual in/out pair.
//! The physical layer is replicated once per slot and consecutive copies of
//! each satellite are joined by storage links.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{ground_link_rate, link_capacity, s2s_rate, GroundDirection, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    SourceUser,
    DestUser,
    NonFunction,
    VirtualSub,
    VirtualFunction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfTegNode {
    pub kind: NodeKind,
    /// Flow index for users, satellite index otherwise.
    pub base: usize,
    /// 0-based slot.
    pub slot: usize,
    /// Catalog index carried by a virtual function node.
    pub function: Option<usize>,
    /// Position within the satellite's offered list.
    pub offer: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LinkKind {
    Transmission,
    VirtualIn,
    VirtualOut,
    Storage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TrClass {
    U2s,
    S2s,
    S2u,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfTegLink {
    pub kind: LinkKind,
    pub class: Option<TrClass>,
    pub from: usize,
    pub to: usize,
    pub slot: usize,
    /// Mbit per slot; zero on unavailable transmission links.
    pub capacity: f64,
    pub available: bool,
    /// Virtual function template for virtual links.
    pub vfn: Option<usize>,
}

/// A virtual function node independent of slot: the unit that placement
/// variables refer to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualFunction {
    pub sat: usize,
    pub offer: usize,
    pub function: usize,
}

/// Placement of each chain step: `(flow, stage)` with stage in `1..=K_l`
/// mapped to a virtual function template.
pub type LambdaAssignment = BTreeMap<(usize, usize), usize>;

#[derive(Debug, Clone)]
pub struct MfTeg {
    pub horizon: usize,
    pub nodes: Vec<MfTegNode>,
    pub links: Vec<MfTegLink>,
    pub vfns: Vec<VirtualFunction>,
    /// Chain length per flow.
    pub chain_len: Vec<usize>,
    /// Catalog index of stage k (1-based) per flow; index 0 is unused.
    pub chain: Vec<Vec<usize>>,
    src_nodes: Vec<Vec<usize>>,
    dst_nodes: Vec<Vec<usize>>,
    sat_nodes: Vec<Vec<usize>>,
    vfn_nodes: Vec<Vec<usize>>,
    sat_vfns: Vec<Vec<usize>>,
    out_links: Vec<Vec<usize>>,
    in_links: Vec<Vec<usize>>,
}

impl MfTeg {
    pub fn num_flows(&self) -> usize {
        self.chain_len.len()
    }

    pub fn num_sats(&self) -> usize {
        self.sat_nodes.len()
    }

    pub fn source_node(&self, flow: usize, t: usize) -> usize {
        self.src_nodes[flow][t]
    }

    pub fn dest_node(&self, flow: usize, t: usize) -> usize {
        self.dst_nodes[flow][t]
    }

    /// Physical-layer node of a satellite: its virtual sub-node when it is a
    /// function node.
    pub fn sat_node(&self, sat: usize, t: usize) -> usize {
        self.sat_nodes[sat][t]
    }

    pub fn vfn_node(&self, vfn: usize, t: usize) -> usize {
        self.vfn_nodes[vfn][t]
    }

    pub fn vfns_of(&self, sat: usize) -> &[usize] {
        &self.sat_vfns[sat]
    }

    pub fn out_links(&self, node: usize) -> &[usize] {
        &self.out_links[node]
    }

    pub fn in_links(&self, node: usize) -> &[usize] {
        &self.in_links[node]
    }

    /// Capability indicator: 1 when the template carries `function`.
    pub fn h(&self, vfn: usize, function: usize) -> u8 {
        u8::from(self.vfns[vfn].function == function)
    }

    /// Templates able to serve stage `k` (1-based) of `flow`.
    pub fn capable(&self, flow: usize, k: usize) -> Vec<usize> {
        let f = self.chain[flow][k];
        (0..self.vfns.len()).filter(|&v| self.h(v, f) == 1).collect()
    }

    pub fn link_count(&self, kind: LinkKind) -> usize {
        self.links.iter().filter(|l| l.kind == kind).count()
    }

    /// Stages (0..=K_l) of `flow` allowed on `link` under a placement.
    pub fn admissible_flows(&self, link: usize, flow: usize, lambda: &LambdaAssignment) -> Result<Vec<usize>> {
        let kl = self.chain_len[flow];
        for k in 1..=kl {
            if !lambda.contains_key(&(flow, k)) {
                return Err(Error::Domain(format!("stage {k} of flow {flow} has no virtual function node assigned")));
            }
        }
        let l = &self.links[link];
        let served = |v: usize| (1..=kl).find(|&k| lambda[&(flow, k)] == v);
        Ok(match (l.kind, l.class) {
            (LinkKind::Transmission, Some(TrClass::U2s)) => {
                if self.nodes[l.from].base == flow {
                    vec![0]
                } else {
                    Vec::new()
                }
            }
            (LinkKind::Transmission, Some(TrClass::S2u)) => {
                if self.nodes[l.to].base == flow {
                    vec![kl]
                } else {
                    Vec::new()
                }
            }
            (LinkKind::Transmission, _) | (LinkKind::Storage, _) => (0..=kl).collect(),
            (LinkKind::VirtualIn, _) => served(l.vfn.expect("virtual link")).map(|k| vec![k - 1]).unwrap_or_default(),
            (LinkKind::VirtualOut, _) => served(l.vfn.expect("virtual link")).map(|k| vec![k]).unwrap_or_default(),
        })
    }

    /// One line per node and link, tab separated.
    pub fn export_text(&self) -> String {
        let mut s = String::from("# mfteg v1\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let f = n.function.map(|f| f.to_string()).unwrap_or_else(|| "-".into());
            let _ = writeln!(s, "node\t{i}\t{:?}\t{}\t{}\t{f}", n.kind, n.base, n.slot + 1);
        }
        for (i, l) in self.links.iter().enumerate() {
            let class = l.class.map(|c| format!("{c:?}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                s,
                "link\t{i}\t{:?}\t{class}\t{}\t{}\t{}\t{}\t{}",
                l.kind,
                l.from,
                l.to,
                l.slot + 1,
                l.capacity,
                u8::from(l.available)
            );
        }
        s
    }
}

pub fn build_mfteg(s: &Scenario) -> Result<MfTeg> {
    let t_len = s.horizon;
    let n_sats = s.num_satellites();
    let n_flows = s.num_flows();
    let delta = s.slot_duration_s;
    let vlink_cap = s.defaults.virtual_link_capacity_mbit;

    let mut nodes = Vec::new();
    let mut push = |n: MfTegNode| {
        nodes.push(n);
        nodes.len() - 1
    };
    let mut src_nodes = vec![Vec::with_capacity(t_len); n_flows];
    let mut dst_nodes = vec![Vec::with_capacity(t_len); n_flows];
    for (l, v) in src_nodes.iter_mut().enumerate() {
        for t in 0..t_len {
            v.push(push(MfTegNode { kind: NodeKind::SourceUser, base: l, slot: t, function: None, offer: None }));
        }
    }
    for (l, v) in dst_nodes.iter_mut().enumerate() {
        for t in 0..t_len {
            v.push(push(MfTegNode { kind: NodeKind::DestUser, base: l, slot: t, function: None, offer: None }));
        }
    }
    let mut sat_nodes = vec![Vec::with_capacity(t_len); n_sats];
    for kind in [NodeKind::NonFunction, NodeKind::VirtualSub] {
        for (i, sat) in s.satellites.iter().enumerate() {
            let want = if sat.is_function_node { NodeKind::VirtualSub } else { NodeKind::NonFunction };
            if want != kind {
                continue;
            }
            for t in 0..t_len {
                sat_nodes[i].push(push(MfTegNode { kind, base: i, slot: t, function: None, offer: None }));
            }
        }
    }
    let mut vfns = Vec::new();
    let mut sat_vfns = vec![Vec::new(); n_sats];
    let mut vfn_nodes = Vec::new();
    for (i, sat) in s.satellites.iter().enumerate() {
        for (n, &f) in sat.offered_functions.iter().enumerate() {
            sat_vfns[i].push(vfns.len());
            vfns.push(VirtualFunction { sat: i, offer: n, function: f });
            let mut per_slot = Vec::with_capacity(t_len);
            for t in 0..t_len {
                per_slot.push(push(MfTegNode {
                    kind: NodeKind::VirtualFunction,
                    base: i,
                    slot: t,
                    function: Some(f),
                    offer: Some(n),
                }));
            }
            vfn_nodes.push(per_slot);
        }
    }

    let sat_vis: Vec<usize> = (0..n_sats).map(|i| s.sat_node(i)).collect();
    let lb = &s.link_budget;
    let mut links = Vec::new();
    for t in 0..t_len {
        let vis = &s.visibility;
        let tr = |from_vis: usize, to_vis: usize, class: TrClass| -> Result<(bool, f64)> {
            if !vis.available(from_vis, to_vis, t) {
                return Ok((false, 0.0));
            }
            let d = vis.range(from_vis, to_vis, t);
            let rate = match class {
                TrClass::S2s => s2s_rate(lb, d)?,
                TrClass::U2s => ground_link_rate(lb, d, GroundDirection::U2s)?,
                TrClass::S2u => ground_link_rate(lb, d, GroundDirection::S2u)?,
            };
            Ok((true, link_capacity(rate, delta)))
        };
        for l in 0..n_flows {
            let a = s.source_node(l);
            for i in 0..n_sats {
                let (available, capacity) = tr(a, sat_vis[i], TrClass::U2s)?;
                links.push(MfTegLink {
                    kind: LinkKind::Transmission,
                    class: Some(TrClass::U2s),
                    from: src_nodes[l][t],
                    to: sat_nodes[i][t],
                    slot: t,
                    capacity,
                    available,
                    vfn: None,
                });
            }
        }
        for i in 0..n_sats {
            for j in 0..n_sats {
                if i == j {
                    continue;
                }
                let (available, capacity) = tr(sat_vis[i], sat_vis[j], TrClass::S2s)?;
                links.push(MfTegLink {
                    kind: LinkKind::Transmission,
                    class: Some(TrClass::S2s),
                    from: sat_nodes[i][t],
                    to: sat_nodes[j][t],
                    slot: t,
                    capacity,
                    available,
                    vfn: None,
                });
            }
        }
        for l in 0..n_flows {
            let b = s.dest_node(l);
            for i in 0..n_sats {
                let (available, capacity) = tr(sat_vis[i], b, TrClass::S2u)?;
                links.push(MfTegLink {
                    kind: LinkKind::Transmission,
                    class: Some(TrClass::S2u),
                    from: sat_nodes[i][t],
                    to: dst_nodes[l][t],
                    slot: t,
                    capacity,
                    available,
                    vfn: None,
                });
            }
        }
    }
    for kind in [LinkKind::VirtualIn, LinkKind::VirtualOut] {
        for (v, vf) in vfns.iter().enumerate() {
            for t in 0..t_len {
                let (sub, fnode) = (sat_nodes[vf.sat][t], vfn_nodes[v][t]);
                let (from, to) = if kind == LinkKind::VirtualIn { (sub, fnode) } else { (fnode, sub) };
                links.push(MfTegLink {
                    kind,
                    class: None,
                    from,
                    to,
                    slot: t,
                    capacity: vlink_cap,
                    available: true,
                    vfn: Some(v),
                });
            }
        }
    }
    for (i, sat) in s.satellites.iter().enumerate() {
        for t in 0..t_len.saturating_sub(1) {
            links.push(MfTegLink {
                kind: LinkKind::Storage,
                class: None,
                from: sat_nodes[i][t],
                to: sat_nodes[i][t + 1],
                slot: t,
                capacity: sat.storage_capacity_mbit,
                available: true,
                vfn: None,
            });
        }
    }

    let mut out_links = vec![Vec::new(); nodes.len()];
    let mut in_links = vec![Vec::new(); nodes.len()];
    for (k, l) in links.iter().enumerate() {
        out_links[l.from].push(k);
        in_links[l.to].push(k);
    }
    let chain = s.flows.iter().map(|f| std::iter::once(usize::MAX).chain(f.sfc.iter().copied()).collect()).collect();
    Ok(MfTeg {
        horizon: t_len,
        nodes,
        links,
        vfns,
        chain_len: s.flows.iter().map(|f| f.chain_len()).collect(),
        chain,
        src_nodes,
        dst_nodes,
        sat_nodes,
        vfn_nodes,
        sat_vfns,
        out_links,
        in_links,
    })
}
