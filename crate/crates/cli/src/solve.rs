use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sinflow::benders::{
    initial_w, run_classical_bd, run_hqcbd, run_multicut, solve_monolithic, BendersResult, BnbLimits, MasterBackend,
    MonolithicResult, SolverConfig, StopReason,
};
use sinflow::mfteg::{build_mfteg, MfTeg};
use sinflow::milp::{assemble, restrict_baseline, MilpProblem, Scheme};
use sinflow::sampler::AnnealSchedule;
use sinflow::scenario::{load_scenario, Scenario};

use crate::manifest::{sha256_file, Outputs, RunManifest, CUTS_FORMAT, REPORT_FORMAT};
use crate::svg::{line_chart, Series};
use crate::{Algo, Exit, Master, SchemeArg};

/// Solver flags shared by `solve` and `sweep`.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value_t = Algo::Hqcbd)]
    pub algo: Algo,
    /// Master candidates per iteration (multi-cut width ρ).
    #[arg(long, default_value_t = 1)]
    pub cuts: usize,
    /// Master backend; annealing for hqcbd and multicut unless given.
    #[arg(long, value_enum)]
    pub master: Option<Master>,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Annealing reads per master solve.
    #[arg(long, default_value_t = 1000)]
    pub reads: usize,
    /// Annealing sweeps per read.
    #[arg(long, default_value_t = 1000)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 20)]
    pub theta_bits: usize,
    /// Annealing runs stop after this many iterations without a better incumbent.
    #[arg(long, default_value_t = 15)]
    pub stall: usize,
}

impl Default for SolverArgs {
    fn default() -> Self {
        SolverArgs {
            algo: Algo::Hqcbd,
            cuts: 1,
            master: None,
            eps: 1e-3,
            max_iter: 200,
            seed: 0,
            reads: 1000,
            sweeps: 1000,
            theta_bits: 20,
            stall: 15,
        }
    }
}

impl SolverArgs {
    pub fn resolved_master(&self) -> Master {
        match (self.master, self.algo) {
            (Some(m), _) => m,
            (None, Algo::ClassicalBd | Algo::Monolithic) => Master::Bnb,
            (None, _) => Master::Sa,
        }
    }

    pub fn backend(&self) -> MasterBackend {
        self.resolved_master().into()
    }

    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            eps: self.eps,
            max_iter: self.max_iter,
            rho: self.cuts,
            backend: self.backend(),
            schedule: AnnealSchedule::new(self.reads, self.sweeps),
            seed: self.seed,
            stall: self.stall,
            theta_bits: self.theta_bits,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SolveArgs {
    pub scenario: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, value_enum, default_value_t = SchemeArg::Uvnfr)]
    pub scheme: SchemeArg,
    /// Write wall-clock timings into the log (breaks byte reproducibility).
    #[arg(long)]
    pub times: bool,
    /// Base name of the output files.
    #[arg(long)]
    pub name: Option<String>,
}

pub enum Solved {
    Benders(Box<BendersResult>),
    Monolithic(MonolithicResult),
}

impl Solved {
    /// Delivered data of the returned point.
    pub fn objective(&self) -> f64 {
        match self {
            Solved::Benders(r) => r.objective,
            Solved::Monolithic(m) => m.objective,
        }
    }

    pub fn gap(&self) -> f64 {
        match self {
            Solved::Benders(r) => r.gap,
            Solved::Monolithic(m) => sinflow::benders::relative_gap(-m.objective, -m.bound),
        }
    }

    pub fn iterations(&self) -> usize {
        match self {
            Solved::Benders(r) => r.log.iterations(),
            Solved::Monolithic(_) => 0,
        }
    }

    pub fn exit(&self) -> Exit {
        match self {
            Solved::Benders(r) if r.stop == StopReason::IterationLimit => Exit::Budget,
            Solved::Monolithic(m) if !m.optimal => Exit::Budget,
            _ => Exit::Ok,
        }
    }

    pub fn stop_label(&self) -> &'static str {
        match self {
            Solved::Benders(r) => r.stop.label(),
            Solved::Monolithic(m) if m.optimal => "optimal",
            Solved::Monolithic(_) => "node-limit",
        }
    }
}

/// Graph and (possibly restricted) problem for one scheme.
pub fn prepare(s: &Scenario, scheme: Scheme) -> Result<(MfTeg, MilpProblem)> {
    let g = build_mfteg(s)?;
    let p = assemble(&g, s);
    let p = match scheme {
        Scheme::Full => p,
        other => restrict_baseline(&p, other, &g, s).with_context(|| format!("restricting to {}", other.label()))?,
    };
    Ok((g, p))
}

pub fn solve_problem(p: &MilpProblem, g: &MfTeg, s: &Scenario, a: &SolverArgs) -> Result<Solved> {
    if a.algo == Algo::Monolithic {
        return Ok(Solved::Monolithic(solve_monolithic(p, &BnbLimits::default())?));
    }
    let w0 = initial_w(p, g, s)?;
    let cfg = a.config();
    let r = match a.algo {
        Algo::Hqcbd => run_hqcbd(p, &w0, &cfg)?,
        Algo::Multicut => run_multicut(p, &w0, &cfg)?,
        Algo::ClassicalBd => {
            if a.backend() != MasterBackend::Bnb {
                bail!("classical-bd always uses the branch-and-bound master");
            }
            run_classical_bd(p, &w0, &cfg)?
        }
        Algo::Monolithic => unreachable!(),
    };
    Ok(Solved::Benders(Box::new(r)))
}

fn default_name(a: &SolveArgs) -> String {
    let stem = a.scenario.file_stem().map_or("scenario".into(), |s| s.to_string_lossy().into_owned());
    let algo = serde_json::to_value(a.solver.algo).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    let scheme = serde_json::to_value(a.scheme).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    format!("{stem}.{algo}.{scheme}")
}

/// Delivered-data bounds per iteration: incumbent (−UB) and master bound (−LB).
pub fn convergence_series(r: &BendersResult) -> Vec<Series> {
    let its = || r.log.records.iter();
    vec![
        Series { label: "incumbent".into(), points: its().map(|x| (x.iteration as f64, -x.ub)).collect() },
        Series { label: "master bound".into(), points: its().map(|x| (x.iteration as f64, -x.lb)).collect() },
    ]
}

pub fn run(a: &SolveArgs, out: &Path) -> Result<Exit> {
    let s = load_scenario(&a.scenario)?;
    let scheme: Scheme = a.scheme.into();
    let (g, p) = prepare(&s, scheme)?;
    let solved = solve_problem(&p, &g, &s, &a.solver)?;

    let name = a.name.clone().unwrap_or_else(|| default_name(a));
    let m = RunManifest::new(
        "solve",
        serde_json::to_value(crate::Command::Solve(a.clone()))?,
        Some(sha256_file(&a.scenario)?),
        vec![a.solver.seed],
    );
    let mut o = Outputs::new(out, &name, m)?;
    let manifest = o.manifest_name();
    let mut report = json!({
        "format": REPORT_FORMAT,
        "manifest": manifest,
        "scenario": a.scenario,
        "scheme": scheme.label(),
        "algo": a.solver.algo,
        "objective": solved.objective(),
        "gap": solved.gap(),
        "iterations": solved.iterations(),
        "stop": solved.stop_label(),
        "n0": p.n0(),
        "m0": p.m0(),
    });
    match &solved {
        Solved::Benders(r) => {
            report["ub"] = json!(r.ub);
            report["lb"] = json!(r.lb);
            report["lb_certified"] = json!(r.master.lb_certified);
            report["master"] = json!(a.solver.resolved_master());
            report["solution"] = serde_json::to_value(&r.report)?;
            let head = format!("# manifest: {manifest}\n");
            o.write(".log.tsv", &(head.clone() + &r.log.to_tsv(a.times)))?;
            o.write(".iterations.csv", &(head + &r.log.to_csv(a.times)))?;
            let cuts = json!({
                "format": CUTS_FORMAT,
                "manifest": manifest,
                "theta_lo": r.master.theta_lo,
                "optimality": r.master.optimality,
                "feasibility": r.master.feasibility,
            });
            o.write(".cuts.json", &(serde_json::to_string_pretty(&cuts)? + "\n"))?;
            let svg = line_chart(
                &format!("Convergence, {}", scheme.label()),
                "iteration",
                "delivered data (Mbit)",
                &convergence_series(r),
                &format!("manifest: {manifest}"),
            );
            o.write(".convergence.svg", &svg)?;
        }
        Solved::Monolithic(mr) => {
            report["bound"] = json!(mr.bound);
            report["nodes"] = json!(mr.nodes);
            report["solution"] = serde_json::to_value(&mr.report)?;
        }
    }
    o.write(".report.json", &(serde_json::to_string_pretty(&report)? + "\n"))?;
    o.finish()?;
    println!(
        "{}: objective {} Mbit, gap {:.3e}, {} iterations, {}",
        scheme.label(),
        solved.objective(),
        solved.gap(),
        solved.iterations(),
        solved.stop_label()
    );
    Ok(solved.exit())
}
