//! Synthetic scenarios from a three-ring circular constellation.
//!
//! Each ring is a circular orbit plane at 781 km. A user is pinned to one
//! ring and sees the satellites of that ring whose argument of latitude
//! lies within a window slightly wider than the in-ring spacing, so every
//! user sees at least one satellite in every slot.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    paper_link_budget, ConnectivityTable, Defaults, FunctionSpec, LinkBudgetParams, SatelliteSpec, Scenario, TaskFlowSpec,
    SCHEMA_VERSION,
};
use crate::error::{Error, Result};

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;
pub const ALTITUDE_M: f64 = 781_000.0;
const MU_EARTH: f64 = 3.986_004_418e14;
const INCLINATION_DEG: f64 = 86.4;
const RAAN_SPACING_DEG: f64 = 30.0;
const MAX_RINGS: usize = 3;
/// Coverage half-window as a multiple of pi / n_ring.
const WINDOW_FACTOR: f64 = 1.25;
/// Central angle between user and satellite at the window edge.
const MAX_CENTRAL_ANGLE: f64 = 0.35;
const CROSS_RING_MAX_M: f64 = 5_000_000.0;
const POLAR_CUTOFF: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub n_sats: usize,
    pub n_flows: usize,
    pub n_functions: usize,
    pub sfc_len: usize,
    pub horizon: usize,
    pub seed: u64,
    pub slot_duration_s: f64,
    pub compute_capacity_mbps: f64,
    pub storage_capacity_mbit: f64,
    pub user_cap: u32,
    pub functions_per_node: usize,
    pub beta_range: (f64, f64),
    pub link_budget: LinkBudgetParams,
}

impl SynthParams {
    pub fn new(n_sats: usize, n_flows: usize, n_functions: usize, sfc_len: usize, horizon: usize, seed: u64) -> Self {
        SynthParams {
            n_sats,
            n_flows,
            n_functions,
            sfc_len,
            horizon,
            seed,
            slot_duration_s: 10.0,
            compute_capacity_mbps: 1500.0,
            storage_capacity_mbit: 50.0,
            user_cap: super::DEFAULT_USER_CAP,
            functions_per_node: 2,
            beta_range: (0.8, 1.2),
            link_budget: paper_link_budget(),
        }
    }

    /// 12 satellites, 4 flows over 4 functions with chains of length 2, 30 slots.
    pub fn paper_shape(seed: u64) -> Self {
        Self::new(12, 4, 4, 2, 30, seed)
    }

    pub fn minimal() -> Self {
        Self::new(1, 1, 1, 1, 1, 0)
    }

    /// Seeded random instance with at most 4 satellites, 2 slots and 2 flows
    /// of chain length 1. Computation is scarce, so placement matters.
    pub fn tiny(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sp = Self::new(rng.gen_range(1..=4), rng.gen_range(1..=2), rng.gen_range(1..=2), 1, rng.gen_range(1..=2), seed);
        sp.compute_capacity_mbps = rng.gen_range(0.001..0.01);
        sp
    }
}

pub fn paper_shape(seed: u64) -> Result<Scenario> {
    generate_synthetic(&SynthParams::paper_shape(seed))
}

struct Orbit {
    raan: f64,
    u0: f64,
}

fn position(o: &Orbit, u: f64) -> [f64; 3] {
    let a = EARTH_RADIUS_M + ALTITUDE_M;
    let inc = INCLINATION_DEG.to_radians();
    let (su, cu) = u.sin_cos();
    let (so, co) = o.raan.sin_cos();
    [a * (co * cu - so * su * inc.cos()), a * (so * cu + co * su * inc.cos()), a * su * inc.sin()]
}

fn dist(p: [f64; 3], q: [f64; 3]) -> f64 {
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
}

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

fn slant_range(gamma: f64) -> f64 {
    let r = EARTH_RADIUS_M;
    let a = EARTH_RADIUS_M + ALTITUDE_M;
    (r * r + a * a - 2.0 * r * a * gamma.cos()).sqrt()
}

pub fn generate_synthetic(p: &SynthParams) -> Result<Scenario> {
    let gen_err = |m: String| Err(Error::Generator(m));
    if p.n_sats == 0 || p.n_flows == 0 || p.n_functions == 0 || p.sfc_len == 0 || p.horizon == 0 {
        return gen_err("all counts must be at least 1".into());
    }
    if p.sfc_len > p.n_functions {
        return gen_err(format!("sfc_len {} exceeds the catalog size {}", p.sfc_len, p.n_functions));
    }
    let rings = p.n_sats.min(MAX_RINGS);
    if (rings as u64) * (p.user_cap as u64) < p.n_flows as u64 {
        return gen_err(format!(
            "{} flows cannot be associated: {} rings with user cap {} serve at most {}",
            p.n_flows,
            rings,
            p.user_cap,
            rings * p.user_cap as usize
        ));
    }
    let n_fn = p.n_sats.div_ceil(2);
    let per_node = p.functions_per_node.min(p.n_functions).max(1);
    if n_fn * per_node < p.n_functions {
        return gen_err(format!("{n_fn} function nodes with {per_node} functions each cannot cover {} functions", p.n_functions));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let functions: Vec<FunctionSpec> =
        (0..p.n_functions).map(|f| FunctionSpec { id: format!("f{}", f + 1), kappa: Some(1.0) }).collect();

    let mut order: Vec<usize> = (0..p.n_sats).collect();
    order.shuffle(&mut rng);
    let mut fn_nodes = order[..n_fn].to_vec();
    fn_nodes.sort_unstable();
    let mut catalog: Vec<usize> = (0..p.n_functions).collect();
    catalog.shuffle(&mut rng);

    let mut satellites = Vec::with_capacity(p.n_sats);
    for i in 0..p.n_sats {
        let offered = match fn_nodes.iter().position(|&s| s == i) {
            Some(j) => (0..per_node).map(|k| catalog[(j * per_node + k) % p.n_functions]).collect(),
            None => Vec::new(),
        };
        satellites.push(SatelliteSpec {
            id: format!("sat{}", i + 1),
            is_function_node: !offered.is_empty(),
            offered_functions: offered,
            compute_capacity_mbps: p.compute_capacity_mbps,
            storage_capacity_mbit: p.storage_capacity_mbit,
            u2s_user_cap: Some(p.user_cap),
            s2u_user_cap: Some(p.user_cap),
        });
    }

    let mut flows = Vec::with_capacity(p.n_flows);
    for l in 0..p.n_flows {
        let mut cat: Vec<usize> = (0..p.n_functions).collect();
        cat.shuffle(&mut rng);
        let mut sfc = cat[..p.sfc_len].to_vec();
        sfc.sort_unstable();
        let (lo, hi) = p.beta_range;
        let betas = (0..p.sfc_len).map(|_| if hi > lo { rng.gen_range(lo..=hi) } else { lo }).collect();
        flows.push(TaskFlowSpec {
            id: format!("flow{}", l + 1),
            source: format!("src{}", l + 1),
            destination: format!("dst{}", l + 1),
            sfc,
            scaling_factors: betas,
            compute_factors: vec![1.0; p.sfc_len],
        });
    }

    // Ring membership: satellite i sits in ring i % rings at in-ring index i / rings.
    let ring_size: Vec<usize> = (0..rings).map(|r| (0..p.n_sats).filter(|i| i % rings == r).count()).collect();
    let phase: Vec<f64> = (0..rings).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
    let orbits: Vec<Orbit> = (0..p.n_sats)
        .map(|i| {
            let r = i % rings;
            Orbit {
                raan: (r as f64 * RAAN_SPACING_DEG).to_radians(),
                u0: phase[r] + 2.0 * PI * (i / rings) as f64 / ring_size[r] as f64,
            }
        })
        .collect();
    // Users of the same ring share a sweep angle so per-satellite caps suffice.
    let user_angle: Vec<f64> = (0..rings).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
    let dst_angle: Vec<f64> = (0..rings).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();

    let a = EARTH_RADIUS_M + ALTITUDE_M;
    let period = 2.0 * PI * (a.powi(3) / MU_EARTH).sqrt();
    let n_nodes = p.n_sats + 2 * p.n_flows;
    let mut nodes: Vec<String> = satellites.iter().map(|s| s.id.clone()).collect();
    for f in &flows {
        nodes.push(f.source.clone());
        nodes.push(f.destination.clone());
    }
    let mut links = vec![vec![vec![0u8; n_nodes]; n_nodes]; p.horizon];
    let mut ranges = vec![vec![vec![0.0f64; n_nodes]; n_nodes]; p.horizon];

    for t in 0..p.horizon {
        let advance = 2.0 * PI * (t as f64 * p.slot_duration_s) / period;
        let u: Vec<f64> = orbits.iter().map(|o| o.u0 + advance).collect();
        let pos: Vec<[f64; 3]> = orbits.iter().zip(&u).map(|(o, &ui)| position(o, ui)).collect();
        for i in 0..p.n_sats {
            for j in (i + 1)..p.n_sats {
                let (ri, rj) = (i % rings, j % rings);
                let d = dist(pos[i], pos[j]);
                let ok = if ri == rj {
                    let n = ring_size[ri];
                    let (ki, kj) = (i / rings, j / rings);
                    n > 1 && ((ki + 1) % n == kj || (kj + 1) % n == ki)
                } else {
                    d <= CROSS_RING_MAX_M && u[i].sin().abs() < POLAR_CUTOFF && u[j].sin().abs() < POLAR_CUTOFF
                };
                if ok && d > 0.0 {
                    for (x, y) in [(i, j), (j, i)] {
                        links[t][x][y] = 1;
                        ranges[t][x][y] = d;
                    }
                }
            }
        }
        for l in 0..p.n_flows {
            let r = l % rings;
            let window = WINDOW_FACTOR * PI / ring_size[r] as f64;
            let src = p.n_sats + 2 * l;
            let dst = src + 1;
            for i in (0..p.n_sats).filter(|i| i % rings == r) {
                for (user, angle, up) in [(src, user_angle[r], true), (dst, dst_angle[r], false)] {
                    let delta = wrap(u[i] - angle).abs();
                    if delta <= window {
                        let d = slant_range(delta / window * MAX_CENTRAL_ANGLE);
                        let (x, y) = if up { (user, i) } else { (i, user) };
                        links[t][x][y] = 1;
                        ranges[t][x][y] = d;
                    }
                }
            }
        }
    }

    let mut scenario = Scenario {
        schema_version: SCHEMA_VERSION.to_string(),
        horizon: p.horizon,
        slot_duration_s: p.slot_duration_s,
        functions,
        satellites,
        flows,
        visibility: ConnectivityTable { nodes, links, ranges_m: ranges },
        link_budget: p.link_budget.clone(),
        defaults: Defaults { user_cap: p.user_cap, ..Defaults::default() },
    };
    scenario.normalize();
    scenario.validate()?;
    Ok(scenario)
}
