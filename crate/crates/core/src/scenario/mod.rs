//! Scenario data model: satellites, task flows with their service chains,
//! per-slot connectivity and link-budget parameters.
//!
//! Scenarios are stored as JSON (schema version "1"). [`load_scenario`]
//! parses, fills defaults and validates; [`save_scenario`] writes the
//! canonical form, so `load(save(s)) == s` for any loaded scenario.

pub mod link;
pub mod synth;

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use link::{db_to_linear, free_space_loss, ground_link_rate, ground_snr, link_capacity, s2s_rate, GroundDirection};
pub use synth::{generate_synthetic, paper_shape, SynthParams};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub schema_version: String,
    /// Number of slots `T`.
    pub horizon: usize,
    pub slot_duration_s: f64,
    pub functions: Vec<FunctionSpec>,
    pub satellites: Vec<SatelliteSpec>,
    pub flows: Vec<TaskFlowSpec>,
    pub visibility: ConnectivityTable,
    pub link_budget: LinkBudgetParams,
    #[serde(default)]
    pub defaults: Defaults,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub id: String,
    /// Computation factor applied to data entering this function.
    #[serde(default)]
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatelliteSpec {
    pub id: String,
    pub is_function_node: bool,
    /// Indices into the function catalog, in offering order.
    #[serde(default)]
    pub offered_functions: Vec<usize>,
    /// Mbit/s available to the virtual function nodes of this satellite.
    pub compute_capacity_mbps: f64,
    /// Mbit that may be held from one slot to the next.
    pub storage_capacity_mbit: f64,
    #[serde(default)]
    pub u2s_user_cap: Option<u32>,
    #[serde(default)]
    pub s2u_user_cap: Option<u32>,
}

impl SatelliteSpec {
    pub fn u2s_cap(&self) -> u32 {
        self.u2s_user_cap.unwrap_or(DEFAULT_USER_CAP)
    }

    pub fn s2u_cap(&self) -> u32 {
        self.s2u_user_cap.unwrap_or(DEFAULT_USER_CAP)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskFlowSpec {
    pub id: String,
    pub source: String,
    pub destination: String,
    /// Service chain as catalog indices, processed in order.
    pub sfc: Vec<usize>,
    /// Ratio of input to output data volume at each chain step.
    pub scaling_factors: Vec<f64>,
    #[serde(default)]
    pub compute_factors: Vec<f64>,
}

impl TaskFlowSpec {
    pub fn chain_len(&self) -> usize {
        self.sfc.len()
    }
}

/// Dense `[slot][from][to]` connectivity with slant ranges in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityTable {
    /// Node ids indexing the two inner axes: satellites and users.
    pub nodes: Vec<String>,
    pub links: Vec<Vec<Vec<u8>>>,
    pub ranges_m: Vec<Vec<Vec<f64>>>,
}

impl ConnectivityTable {
    pub fn position(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == id)
    }

    /// Slots are 0-based here.
    pub fn available(&self, from: usize, to: usize, slot: usize) -> bool {
        self.links[slot][from][to] == 1
    }

    pub fn range(&self, from: usize, to: usize, slot: usize) -> f64 {
        self.ranges_m[slot][from][to]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct S2sParams {
    pub power_w: f64,
    /// Combined transmit times receive gain, linear.
    pub gain: f64,
    pub frequency_hz: f64,
    pub line_loss: f64,
    pub boltzmann_j_per_k: f64,
    pub noise_temp_k: f64,
    pub margin: f64,
    #[serde(default)]
    pub ebn0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundParams {
    pub power_w: f64,
    pub gain: f64,
    pub frequency_hz: f64,
    pub line_loss: f64,
    pub bandwidth_hz: f64,
    #[serde(default)]
    pub noise_w: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkBudgetParams {
    pub s2s: S2sParams,
    pub u2s: GroundParams,
    pub s2u: GroundParams,
}

impl LinkBudgetParams {
    pub fn ground(&self, dir: GroundDirection) -> &GroundParams {
        match dir {
            GroundDirection::U2s => &self.u2s,
            GroundDirection::S2u => &self.s2u,
        }
    }
}

pub const DEFAULT_USER_CAP: u32 = 2;
pub const DEFAULT_KAPPA: f64 = 1.0;
pub const DEFAULT_VIRTUAL_LINK_CAPACITY_MBIT: f64 = 1.0e4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Defaults {
    pub ebn0: f64,
    pub noise_temp_k: f64,
    pub user_cap: u32,
    pub kappa: f64,
    pub virtual_link_capacity_mbit: f64,
}

impl Default for Defaults {
    fn default() -> Self {
        Defaults {
            ebn0: link::DEFAULT_EBN0,
            noise_temp_k: link::DEFAULT_NOISE_TEMP_K,
            user_cap: DEFAULT_USER_CAP,
            kappa: DEFAULT_KAPPA,
            virtual_link_capacity_mbit: DEFAULT_VIRTUAL_LINK_CAPACITY_MBIT,
        }
    }
}

/// Table values for the link classes (linear units throughout).
pub fn paper_link_budget() -> LinkBudgetParams {
    let line_loss = db_to_linear(-23.0);
    let ground = |power_w: f64| GroundParams {
        power_w,
        gain: db_to_linear(42.0),
        frequency_hz: 30.0e9,
        line_loss,
        bandwidth_hz: 30.0e6,
        noise_w: None,
    };
    LinkBudgetParams {
        s2s: S2sParams {
            power_w: 20.0,
            gain: db_to_linear(52.0),
            frequency_hz: 2.2e9,
            line_loss,
            boltzmann_j_per_k: link::BOLTZMANN,
            noise_temp_k: 1000.0,
            margin: db_to_linear(5.0),
            ebn0: None,
        },
        u2s: ground(1.0),
        s2u: ground(20.0),
    }
}

impl Scenario {
    pub fn num_slots(&self) -> usize {
        self.horizon
    }

    pub fn num_satellites(&self) -> usize {
        self.satellites.len()
    }

    pub fn num_flows(&self) -> usize {
        self.flows.len()
    }

    /// Visibility-table index of a satellite.
    pub fn sat_node(&self, sat: usize) -> usize {
        self.visibility.position(&self.satellites[sat].id).expect("validated scenario")
    }

    pub fn source_node(&self, flow: usize) -> usize {
        self.visibility.position(&self.flows[flow].source).expect("validated scenario")
    }

    pub fn dest_node(&self, flow: usize) -> usize {
        self.visibility.position(&self.flows[flow].destination).expect("validated scenario")
    }

    pub fn function_kappa(&self, function: usize) -> f64 {
        self.functions[function].kappa.unwrap_or(self.defaults.kappa)
    }

    /// Fill every optional field from `defaults`, producing the canonical form.
    pub fn normalize(&mut self) {
        let d = self.defaults.clone();
        if self.link_budget.s2s.ebn0.is_none() {
            self.link_budget.s2s.ebn0 = Some(d.ebn0);
        }
        let kb = self.link_budget.s2s.boltzmann_j_per_k;
        for g in [&mut self.link_budget.u2s, &mut self.link_budget.s2u] {
            if g.noise_w.is_none() {
                g.noise_w = Some(kb * d.noise_temp_k * g.bandwidth_hz);
            }
        }
        for f in &mut self.functions {
            if f.kappa.is_none() {
                f.kappa = Some(d.kappa);
            }
        }
        for s in &mut self.satellites {
            s.u2s_user_cap.get_or_insert(d.user_cap);
            s.s2u_user_cap.get_or_insert(d.user_cap);
        }
        let kappas: Vec<f64> = (0..self.functions.len()).map(|f| self.function_kappa(f)).collect();
        for fl in &mut self.flows {
            if fl.compute_factors.is_empty() {
                fl.compute_factors = fl.sfc.iter().map(|&f| kappas.get(f).copied().unwrap_or(d.kappa)).collect();
            }
        }
    }

    /// Check every structural invariant. Errors name the first violation.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Validation(m));
        if self.schema_version != SCHEMA_VERSION {
            return fail(format!("unsupported schema_version {:?} (expected {SCHEMA_VERSION:?})", self.schema_version));
        }
        if self.horizon < 1 {
            return fail("horizon must be at least 1 slot".into());
        }
        if !(self.slot_duration_s > 0.0 && self.slot_duration_s.is_finite()) {
            return fail("slot_duration_s must be positive".into());
        }
        let nf = self.functions.len();
        if nf == 0 {
            return fail("function catalog is empty".into());
        }
        for f in &self.functions {
            if let Some(k) = f.kappa {
                if !(k > 0.0 && k.is_finite()) {
                    return fail(format!("function {} has nonpositive kappa", f.id));
                }
            }
        }
        if self.satellites.is_empty() {
            return fail("no satellites".into());
        }
        let mut ids = HashSet::new();
        for s in &self.satellites {
            if !ids.insert(s.id.as_str()) {
                return fail(format!("duplicate satellite id {}", s.id));
            }
            if s.is_function_node == s.offered_functions.is_empty() {
                return fail(if s.is_function_node {
                    format!("function node {} offers no functions", s.id)
                } else {
                    format!("non-function node {} lists offered functions", s.id)
                });
            }
            let mut seen = HashSet::new();
            for &f in &s.offered_functions {
                if f >= nf {
                    return fail(format!("satellite {} offers unknown function index {f}", s.id));
                }
                if !seen.insert(f) {
                    return fail(format!("satellite {} offers function {f} twice", s.id));
                }
            }
            for (name, v) in
                [("compute_capacity_mbps", s.compute_capacity_mbps), ("storage_capacity_mbit", s.storage_capacity_mbit)]
            {
                if !(v >= 0.0 && v.is_finite()) {
                    return fail(format!("satellite {} has negative {name}", s.id));
                }
            }
        }
        if self.flows.is_empty() {
            return fail("no task flows".into());
        }
        let offered: HashSet<usize> = self.satellites.iter().flat_map(|s| s.offered_functions.iter().copied()).collect();
        for fl in &self.flows {
            if fl.sfc.is_empty() {
                return fail(format!("flow {}: SFC empty", fl.id));
            }
            if ids.contains(fl.source.as_str()) || ids.contains(fl.destination.as_str()) {
                return fail(format!("flow {} uses a satellite id as a user", fl.id));
            }
            if fl.source == fl.destination {
                return fail(format!("flow {} has identical source and destination", fl.id));
            }
            let mut seen = HashSet::new();
            for (k, &f) in fl.sfc.iter().enumerate() {
                if f >= nf {
                    return fail(format!("flow {} stage {} names unknown function {f}", fl.id, k + 1));
                }
                if !seen.insert(f) {
                    return fail(format!("flow {} repeats function {f} in its SFC", fl.id));
                }
                if !offered.contains(&f) {
                    return fail(format!(
                        "flow {} stage {} needs function {} which no function node offers",
                        fl.id,
                        k + 1,
                        self.functions[f].id
                    ));
                }
            }
            if fl.scaling_factors.len() != fl.sfc.len() {
                return fail(format!("flow {}: scaling_factors length differs from SFC", fl.id));
            }
            if fl.scaling_factors.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
                return fail(format!("flow {}: scaling factors must be positive", fl.id));
            }
            if !fl.compute_factors.is_empty() && fl.compute_factors.len() != fl.sfc.len() {
                return fail(format!("flow {}: compute_factors length differs from SFC", fl.id));
            }
            if fl.compute_factors.iter().any(|k| !(*k > 0.0 && k.is_finite())) {
                return fail(format!("flow {}: compute factors must be positive", fl.id));
            }
        }
        self.validate_visibility()?;
        self.validate_link_budget()
    }

    fn validate_visibility(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Validation(m));
        let vis = &self.visibility;
        let mut pos: HashMap<&str, usize> = HashMap::new();
        for (i, n) in vis.nodes.iter().enumerate() {
            if pos.insert(n.as_str(), i).is_some() {
                return fail(format!("visibility lists node {n} twice"));
            }
        }
        for s in &self.satellites {
            if !pos.contains_key(s.id.as_str()) {
                return fail(format!("visibility is missing satellite {}", s.id));
            }
        }
        for fl in &self.flows {
            for u in [&fl.source, &fl.destination] {
                if !pos.contains_key(u.as_str()) {
                    return fail(format!("visibility is missing user {u}"));
                }
            }
        }
        let n = vis.nodes.len();
        let t_len = self.horizon;
        if vis.links.len() != t_len || vis.ranges_m.len() != t_len {
            return fail(format!("visibility must have {t_len} slots"));
        }
        for t in 0..t_len {
            if vis.links[t].len() != n || vis.ranges_m[t].len() != n {
                return fail(format!("visibility slot {} must be {n} x {n}", t + 1));
            }
            for i in 0..n {
                if vis.links[t][i].len() != n || vis.ranges_m[t][i].len() != n {
                    return fail(format!("visibility slot {} row {} must have {n} entries", t + 1, i));
                }
                for j in 0..n {
                    let k = vis.links[t][i][j];
                    if k > 1 {
                        return fail(format!("visibility entry at slot {} is not 0/1", t + 1));
                    }
                    let d = vis.ranges_m[t][i][j];
                    if k == 1 && !(d > 0.0 && d.is_finite()) {
                        return fail(format!(
                            "link {} -> {} available at slot {} without a positive range",
                            vis.nodes[i],
                            vis.nodes[j],
                            t + 1
                        ));
                    }
                }
            }
        }
        let sats: Vec<usize> = self.satellites.iter().map(|s| pos[s.id.as_str()]).collect();
        for fl in &self.flows {
            let a = pos[fl.source.as_str()];
            let b = pos[fl.destination.as_str()];
            for t in 0..t_len {
                if !sats.iter().any(|&s| vis.links[t][a][s] == 1) {
                    return fail(format!(
                        "user {} has no visible satellite at slot {} (its single-association equality cannot hold)",
                        fl.source,
                        t + 1
                    ));
                }
                if !sats.iter().any(|&s| vis.links[t][s][b] == 1) {
                    return fail(format!(
                        "user {} has no visible satellite at slot {} (its single-association equality cannot hold)",
                        fl.destination,
                        t + 1
                    ));
                }
            }
        }
        Ok(())
    }

    fn validate_link_budget(&self) -> Result<()> {
        let lb = &self.link_budget;
        let mut checks = vec![
            ("s2s.power_w", lb.s2s.power_w),
            ("s2s.gain", lb.s2s.gain),
            ("s2s.frequency_hz", lb.s2s.frequency_hz),
            ("s2s.line_loss", lb.s2s.line_loss),
            ("s2s.boltzmann_j_per_k", lb.s2s.boltzmann_j_per_k),
            ("s2s.noise_temp_k", lb.s2s.noise_temp_k),
            ("s2s.margin", lb.s2s.margin),
            ("s2s.ebn0", lb.s2s.ebn0.unwrap_or(self.defaults.ebn0)),
        ];
        for (name, g) in [("u2s", &lb.u2s), ("s2u", &lb.s2u)] {
            let nn = g.noise_w.unwrap_or(1.0);
            checks.extend([
                (if name == "u2s" { "u2s.power_w" } else { "s2u.power_w" }, g.power_w),
                (if name == "u2s" { "u2s.gain" } else { "s2u.gain" }, g.gain),
                (if name == "u2s" { "u2s.frequency_hz" } else { "s2u.frequency_hz" }, g.frequency_hz),
                (if name == "u2s" { "u2s.line_loss" } else { "s2u.line_loss" }, g.line_loss),
                (if name == "u2s" { "u2s.bandwidth_hz" } else { "s2u.bandwidth_hz" }, g.bandwidth_hz),
                (if name == "u2s" { "u2s.noise_w" } else { "s2u.noise_w" }, nn),
            ]);
        }
        for (name, v) in checks {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("link budget {name} must be positive")));
            }
        }
        let d = &self.defaults;
        if !(d.virtual_link_capacity_mbit >= 0.0 && d.kappa > 0.0 && d.ebn0 > 0.0 && d.noise_temp_k > 0.0) {
            return Err(Error::Validation("defaults must be positive".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Scenario> {
        let mut s: Scenario = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        s.normalize();
        s.validate()?;
        Ok(s)
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Scenario::from_json(&text)
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = scenario.to_json();
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}
