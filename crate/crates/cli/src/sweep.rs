use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sinflow::milp::Scheme;
use sinflow::scenario::{load_scenario, Scenario};

use crate::manifest::{sha256_file, Outputs, RunManifest, SWEEP_FORMAT};
use crate::solve::{prepare, solve_problem, SolverArgs};
use crate::svg::{line_chart, Series};
use crate::{Algo, Exit, SchemeArg};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    /// Computation capacity of every function node, Mbit/s.
    Compute,
    /// Storage capacity of every satellite, Mbit.
    Storage,
    /// Number of task flows, keeping the first ones.
    Flows,
    /// U2S and S2U bandwidth, MHz.
    Bandwidth,
}

impl Axis {
    fn label(self) -> &'static str {
        match self {
            Axis::Compute => "computation capacity (Mbit/s)",
            Axis::Storage => "storage capacity (Mbit)",
            Axis::Flows => "task flows",
            Axis::Bandwidth => "U2S/S2U bandwidth (MHz)",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    pub scenario: PathBuf,
    #[arg(long, value_enum)]
    pub axis: Axis,
    #[arg(long)]
    pub from: f64,
    /// Last value (inclusive); defaults to `--from`.
    #[arg(long)]
    pub to: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    /// Schemes to run; all four by default.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub schemes: Vec<SchemeArg>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Sweep points solved in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub scheme: Scheme,
    pub objective: f64,
    pub gap: f64,
    pub iterations: usize,
    pub stop: &'static str,
}

pub fn axis_points(from: f64, to: Option<f64>, step: Option<f64>) -> Result<Vec<f64>> {
    let to = to.unwrap_or(from);
    if !from.is_finite() || !to.is_finite() || to < from {
        bail!("invalid range {from}..{to}");
    }
    if to == from {
        return Ok(vec![from]);
    }
    let step = step.unwrap_or(to - from);
    if !step.is_finite() || step <= 0.0 {
        bail!("step must be positive, got {step}");
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    if n > 10_000 {
        bail!("range {from}..{to} step {step} has too many points");
    }
    Ok((0..=n).map(|k| from + k as f64 * step).collect())
}

/// The scenario with the swept parameter set to `v`.
pub fn apply_axis(s: &Scenario, axis: Axis, v: f64) -> Result<Scenario> {
    let mut s = s.clone();
    match axis {
        Axis::Compute | Axis::Storage | Axis::Bandwidth if v < 0.0 => bail!("{} must be non-negative, got {v}", axis.label()),
        Axis::Compute => {
            for sat in s.satellites.iter_mut().filter(|x| x.is_function_node) {
                sat.compute_capacity_mbps = v;
            }
        }
        Axis::Storage => {
            for sat in &mut s.satellites {
                sat.storage_capacity_mbit = v;
            }
        }
        Axis::Bandwidth => {
            if v == 0.0 {
                bail!("bandwidth must be positive");
            }
            s.link_budget.u2s.bandwidth_hz = v * 1e6;
            s.link_budget.s2u.bandwidth_hz = v * 1e6;
        }
        Axis::Flows => {
            if v.fract() != 0.0 || v < 1.0 || v as usize > s.flows.len() {
                bail!("flow count must be an integer in 1..={}, got {v}", s.flows.len());
            }
            s.flows.truncate(v as usize);
        }
    }
    s.validate()?;
    Ok(s)
}

fn csv(rows: &[SweepRow], axis: Axis, manifest: &str) -> String {
    let mut out = format!("# manifest: {manifest}\naxis,value,scheme,objective,gap,iterations,stop\n");
    let axis = serde_json::to_value(axis).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    for r in rows {
        let _ = writeln!(out, "{axis},{},{},{},{},{},{}", r.value, r.scheme.label(), r.objective, r.gap, r.iterations, r.stop);
    }
    out
}

pub fn sweep_rows(a: &SweepArgs, s: &Scenario) -> Result<Vec<Vec<SweepRow>>> {
    let points = axis_points(a.from, a.to, a.step)?;
    let schemes: Vec<Scheme> = if a.schemes.is_empty() {
        SchemeArg::all().map(Into::into).to_vec()
    } else {
        a.schemes.iter().map(|&x| x.into()).collect()
    };
    let scenarios: Vec<Scenario> = points.iter().map(|&v| apply_axis(s, a.axis, v)).collect::<Result<_>>()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.jobs.max(1)).build()?;
    pool.install(|| {
        points
            .par_iter()
            .zip(&scenarios)
            .map(|(&v, sc)| {
                schemes
                    .iter()
                    .map(|&scheme| {
                        let (g, p) = prepare(sc, scheme)?;
                        let r = solve_problem(&p, &g, sc, &a.solver).with_context(|| format!("{} at {v}", scheme.label()))?;
                        Ok(SweepRow {
                            value: v,
                            scheme,
                            objective: r.objective(),
                            gap: r.gap(),
                            iterations: r.iterations(),
                            stop: r.stop_label(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect()
    })
}

pub fn run(a: &SweepArgs, out: &Path) -> Result<Exit> {
    if a.solver.algo != Algo::ClassicalBd && a.solver.algo != Algo::Monolithic && a.solver.master.is_none() {
        log::warn!("sweeping with the annealing master: objectives are not certified optimal");
    }
    let s = load_scenario(&a.scenario)?;
    let per_point = sweep_rows(a, &s)?;
    let name = a.name.clone().unwrap_or_else(|| {
        let stem = a.scenario.file_stem().map_or("scenario".into(), |x| x.to_string_lossy().into_owned());
        format!(
            "{stem}.sweep-{}",
            serde_json::to_value(a.axis).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
        )
    });
    let m = RunManifest::new(
        "sweep",
        serde_json::to_value(crate::Command::Sweep(a.clone()))?,
        Some(sha256_file(&a.scenario)?),
        vec![a.solver.seed],
    );
    let mut o = Outputs::new(out, &name, m)?;
    let manifest = o.manifest_name();

    // Per-point files first, then the merged table in axis order.
    let dir = format!("{name}.points");
    fs::create_dir_all(out.join(&dir)).with_context(|| format!("creating {dir}"))?;
    for (k, rows) in per_point.iter().enumerate() {
        let file = format!("{dir}/{k:04}.csv");
        fs::write(out.join(&file), csv(rows, a.axis, &manifest)).with_context(|| format!("writing {file}"))?;
        o.manifest.outputs.push(file);
    }
    let rows: Vec<SweepRow> = per_point.into_iter().flatten().collect();
    o.write(".csv", &csv(&rows, a.axis, &manifest))?;

    let mut series: Vec<Series> = Vec::new();
    for r in &rows {
        match series.iter_mut().find(|x| x.label == r.scheme.label()) {
            Some(x) => x.points.push((r.value, r.objective)),
            None => series.push(Series { label: r.scheme.label().into(), points: vec![(r.value, r.objective)] }),
        }
    }
    let svg = line_chart(
        &format!("Total received data vs {}", a.axis.label()),
        a.axis.label(),
        "delivered data (Mbit)",
        &series,
        &format!("{SWEEP_FORMAT}; manifest: {manifest}"),
    );
    o.write(".svg", &svg)?;
    o.finish()?;
    for r in &rows {
        println!("{}\t{}\t{}", r.value, r.scheme.label(), r.objective);
    }
    let budget = rows.iter().any(|r| r.stop == "iteration-limit" || r.stop == "node-limit");
    Ok(if budget { Exit::Budget } else { Exit::Ok })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_are_inclusive_and_validated() {
        assert_eq!(axis_points(800.0, Some(1850.0), Some(150.0)).unwrap().len(), 8);
        assert_eq!(axis_points(3.0, None, None).unwrap(), vec![3.0]);
        assert!(axis_points(2.0, Some(1.0), Some(1.0)).is_err());
        assert!(axis_points(1.0, Some(2.0), Some(0.0)).is_err());
        assert!(axis_points(f64::NAN, Some(2.0), Some(1.0)).is_err());
    }
}
