//! Time the Benders variants on a paper-shaped scenario.
//! Usage: paper_run <classical|sa> [seed] [rho] [max_iter] [scenario_seed]

use std::time::Instant;

use sinflow::benders::{initial_w, run_classical_bd, run_multicut, MasterBackend, SolverConfig};
use sinflow::mfteg::build_mfteg;
use sinflow::milp::assemble;
use sinflow::sampler::AnnealSchedule;
use sinflow::scenario::synth::paper_shape;

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let mode = args.get(1).map_or("classical", |s| s.as_str());
    let seed: u64 = args.get(2).map_or(Ok(1), |s| s.parse())?;
    let rho: usize = args.get(3).map_or(Ok(1), |s| s.parse())?;
    let max_iter: usize = args.get(4).map_or(Ok(200), |s| s.parse())?;
    let scenario_seed: u64 = args.get(5).map_or(Ok(1), |s| s.parse())?;
    let s = paper_shape(scenario_seed)?;
    let g = build_mfteg(&s)?;
    let p = assemble(&g, &s);
    let w0 = initial_w(&p, &g, &s)?;
    println!("n0 {} m0 {} ub_cap {}", p.n0(), p.m0(), p.ub_cap);
    let cfg = SolverConfig {
        seed,
        rho,
        max_iter,
        backend: if mode == "sa" { MasterBackend::Sa } else { MasterBackend::Bnb },
        schedule: AnnealSchedule::new(20, 300),
        ..Default::default()
    };
    let t = Instant::now();
    let r = if mode == "sa" { run_multicut(&p, &w0, &cfg)? } else { run_classical_bd(&p, &w0, &cfg)? };
    print!("{}", r.log.to_tsv(true));
    println!("objective {} gap {} stop {:?} in {:.1}s", r.objective, r.gap, r.stop, t.elapsed().as_secs_f64());
    Ok(())
}
