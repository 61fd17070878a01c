use std::path::Path;

use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};
use sinflow::scenario::synth::{generate_synthetic, SynthParams};

use crate::manifest::{Outputs, RunManifest};
use crate::Exit;

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GenArgs {
    /// 12 satellites, 4 flows, chains of 2 over 4 functions, 30 slots (the default shape).
    #[arg(long, conflicts_with = "minimal")]
    pub paper_shape: bool,
    /// One satellite, one flow, one slot.
    #[arg(long)]
    pub minimal: bool,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub sats: Option<usize>,
    #[arg(long)]
    pub flows: Option<usize>,
    #[arg(long)]
    pub functions: Option<usize>,
    #[arg(long)]
    pub sfc_len: Option<usize>,
    #[arg(long)]
    pub slots: Option<usize>,
    /// Computation capacity of function nodes, Mbit/s.
    #[arg(long)]
    pub compute: Option<f64>,
    /// Storage capacity per satellite, Mbit.
    #[arg(long)]
    pub storage: Option<f64>,
    /// Base name of the output files.
    #[arg(long)]
    pub name: Option<String>,
}

impl GenArgs {
    pub fn params(&self) -> SynthParams {
        let mut p = if self.minimal { SynthParams::minimal() } else { SynthParams::paper_shape(self.seed) };
        p.seed = self.seed;
        p.n_sats = self.sats.unwrap_or(p.n_sats);
        p.n_flows = self.flows.unwrap_or(p.n_flows);
        p.n_functions = self.functions.unwrap_or(p.n_functions);
        p.sfc_len = self.sfc_len.unwrap_or(p.sfc_len);
        p.horizon = self.slots.unwrap_or(p.horizon);
        p.compute_capacity_mbps = self.compute.unwrap_or(p.compute_capacity_mbps);
        p.storage_capacity_mbit = self.storage.unwrap_or(p.storage_capacity_mbit);
        p
    }

    fn customized(&self) -> bool {
        self.sats.is_some()
            || self.flows.is_some()
            || self.functions.is_some()
            || self.sfc_len.is_some()
            || self.slots.is_some()
            || self.compute.is_some()
            || self.storage.is_some()
    }

    pub fn default_name(&self) -> String {
        match (&self.name, self.minimal, self.customized()) {
            (Some(n), ..) => n.clone(),
            (None, true, false) => "minimal".into(),
            (None, false, false) => format!("paper-shape-s{}", self.seed),
            (None, _, true) => format!("synthetic-s{}", self.seed),
        }
    }
}

pub fn run(a: &GenArgs, out: &Path) -> Result<Exit> {
    let s = generate_synthetic(&a.params())?;
    let name = a.default_name();
    let m = RunManifest::new("gen", serde_json::to_value(crate::Command::Gen(a.clone()))?, None, vec![a.seed]);
    let mut o = Outputs::new(out, &name, m)?;
    let path = o.write(".json", &s.to_json())?;
    o.finish()?;
    println!("{}", path.display());
    Ok(Exit::Ok)
}
