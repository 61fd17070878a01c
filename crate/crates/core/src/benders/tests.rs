use super::*;
use crate::lp::{solve_subproblem, SubproblemOutcome};
use crate::mfteg::{build_mfteg, MfTeg};
use crate::milp::{assemble, restrict_baseline, MilpProblem, Scheme};
use crate::sampler::AnnealSchedule;
use crate::scenario::synth::{generate_synthetic, SynthParams};
use crate::scenario::Scenario;

fn tiny(seed: u64) -> (Scenario, MfTeg, MilpProblem) {
    let s = generate_synthetic(&SynthParams::tiny(seed)).unwrap();
    let g = build_mfteg(&s).unwrap();
    let p = assemble(&g, &s);
    (s, g, p)
}

/// Optimum by enumerating every w and solving its subproblem.
fn enumerate(p: &MilpProblem) -> (f64, Vec<u8>) {
    let n = p.n0();
    let mut best = (f64::NEG_INFINITY, vec![]);
    for mask in 0u32..1 << n {
        let w: Vec<u8> = (0..n).map(|i| ((mask >> i) & 1) as u8).collect();
        let ok = p.bin.iter().all(|r| r.w.iter().map(|&(j, g)| g * f64::from(w[j])).sum::<f64>() <= r.rhs + 1e-9);
        if !ok {
            continue;
        }
        if let SubproblemOutcome::Optimality { value, .. } = solve_subproblem(p, &w).unwrap() {
            if -value > best.0 {
                best = (-value, w);
            }
        }
    }
    best
}

fn exact(backend: MasterBackend) -> SolverConfig {
    SolverConfig { backend, eps: 1e-9, ..Default::default() }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-12)
}

#[test]
fn gap_switches_to_absolute_near_zero() {
    assert_eq!(relative_gap(-2.0, -3.0), 0.5);
    assert_eq!(relative_gap(1e-7, -1e-3), 1e-3 + 1e-7);
    assert_eq!(relative_gap(f64::INFINITY, -1.0), f64::INFINITY);
}

#[test]
fn config_is_validated() {
    let w = [0u8; 3];
    let s = generate_synthetic(&SynthParams::minimal()).unwrap();
    let p = assemble(&build_mfteg(&s).unwrap(), &s);
    for cfg in [
        SolverConfig { eps: 0.0, ..Default::default() },
        SolverConfig { rho: 0, ..Default::default() },
        SolverConfig { theta_bits: 1, ..Default::default() },
    ] {
        assert!(run_multicut(&p, &w, &cfg).is_err());
    }
    assert!(run_hqcbd(&p, &w, &SolverConfig { rho: 2, ..Default::default() }).is_err());
    assert!(run_hqcbd(&p, &[0, 0], &Default::default()).is_err());
    assert_eq!("brute".parse::<MasterBackend>().unwrap(), MasterBackend::BruteForce);
    assert!("gurobi".parse::<MasterBackend>().is_err());
}

#[test]
fn minimal_instance_monolithic_matches_enumeration() {
    let s = generate_synthetic(&SynthParams::minimal()).unwrap();
    let p = assemble(&build_mfteg(&s).unwrap(), &s);
    let (best, _) = enumerate(&p);
    let m = solve_monolithic(&p, &BnbLimits::default()).unwrap();
    assert!(m.optimal);
    assert!(close(m.objective, best, 1e-9));
    assert_eq!(m.nodes, 0);
    assert!(close(m.report.unwrap().objective, best, 1e-9));
}

#[test]
fn optimal_start_converges_at_once() {
    let s = generate_synthetic(&SynthParams::minimal()).unwrap();
    let g = build_mfteg(&s).unwrap();
    let p = assemble(&g, &s);
    let w0 = initial_w(&p, &g, &s).unwrap();
    for backend in [MasterBackend::BruteForce, MasterBackend::Bnb] {
        let r = run_hqcbd(&p, &w0, &SolverConfig { backend, ..Default::default() }).unwrap();
        assert_eq!(r.stop, StopReason::Converged);
        assert!(r.log.iterations() <= 2, "{backend:?}: {}", r.log.to_tsv(false));
        assert!(r.gap <= 1e-3);
    }
}

#[test]
fn exact_backends_agree_with_enumeration() {
    for seed in 0..12 {
        let (s, g, p) = tiny(seed);
        let w0 = initial_w(&p, &g, &s).unwrap();
        let (best, _) = enumerate(&p);
        let mono = solve_monolithic(&p, &BnbLimits::default()).unwrap();
        let brute = run_hqcbd(&p, &w0, &exact(MasterBackend::BruteForce)).unwrap();
        let bd = run_classical_bd(&p, &w0, &exact(MasterBackend::Bnb)).unwrap();
        for (name, v) in [("monolithic", mono.objective), ("brute", brute.objective), ("bnb", bd.objective)] {
            assert!(close(v, best, 1e-5), "seed {seed} {name}: {v} vs {best}");
        }
        for r in [&brute, &bd] {
            assert_eq!(r.stop, StopReason::Converged);
            for (a, b) in r.log.records.iter().zip(r.log.records.iter().skip(1)) {
                assert!(b.ub <= a.ub && b.lb >= a.lb - 1e-9, "seed {seed}: bounds moved the wrong way");
            }
            for rec in &r.log.records {
                assert!(rec.lb <= -best + 1e-9 && -best <= rec.ub + 1e-9);
            }
        }
    }
}

#[test]
fn optimality_cuts_hold_at_the_optimum() {
    for seed in 0..12 {
        let (s, g, p) = tiny(seed);
        let w0 = initial_w(&p, &g, &s).unwrap();
        let (best, w_opt) = enumerate(&p);
        let r = run_hqcbd(&p, &w0, &exact(MasterBackend::BruteForce)).unwrap();
        for c in &r.master.optimality {
            assert!(c.value(&w_opt) <= -best + 1e-6, "seed {seed}: cut excludes the optimum");
        }
        for c in &r.master.feasibility {
            assert!(c.value(&w_opt) <= 1e-9);
        }
    }
}

#[test]
fn full_scheme_dominates_baselines() {
    for seed in 0..20 {
        let (s, g, p) = tiny(seed);
        let full = solve_monolithic(&p, &BnbLimits::default()).unwrap();
        for scheme in [Scheme::Lvnf, Scheme::Fvnf, Scheme::Hu] {
            let Ok(rp) = restrict_baseline(&p, scheme, &g, &s) else { continue };
            let r = solve_monolithic(&rp, &BnbLimits::default()).unwrap();
            assert!(full.objective >= r.objective - 1e-9, "seed {seed} {scheme:?}");
        }
    }
}

fn sa_config(rho: usize, seed: u64) -> SolverConfig {
    SolverConfig { rho, seed, schedule: AnnealSchedule::new(32, 200), max_iter: 30, ..Default::default() }
}

#[test]
fn width_one_multicut_is_the_single_cut_run() {
    let (s, g, p) = tiny(3);
    let w0 = initial_w(&p, &g, &s).unwrap();
    let a = run_hqcbd(&p, &w0, &sa_config(1, 4)).unwrap();
    let b = run_multicut(&p, &w0, &sa_config(1, 4)).unwrap();
    assert_eq!(a.log.to_csv(false), b.log.to_csv(false));
    assert_eq!(a.w, b.w);
}

#[test]
fn annealing_runs_keep_a_valid_upper_bound() {
    for seed in [1, 5, 9] {
        let (s, g, p) = tiny(seed);
        let w0 = initial_w(&p, &g, &s).unwrap();
        let (best, _) = enumerate(&p);
        for rho in [1, 3] {
            let r = run_multicut(&p, &w0, &sa_config(rho, seed)).unwrap();
            assert!(r.objective <= best + 1e-9);
            for (a, b) in r.log.records.iter().zip(r.log.records.iter().skip(1)) {
                assert!(b.ub <= a.ub);
            }
            for rec in &r.log.records {
                assert!(!rec.lb_certified);
                // Repeated candidates are not re-solved.
                assert!(rec.subproblems <= rho);
            }
            assert_ne!(r.stop, StopReason::Converged);
        }
    }
}

#[test]
fn annealing_runs_are_reproducible() {
    let (s, g, p) = tiny(7);
    let w0 = initial_w(&p, &g, &s).unwrap();
    let a = run_multicut(&p, &w0, &sa_config(3, 11)).unwrap();
    let b = run_multicut(&p, &w0, &sa_config(3, 11)).unwrap();
    assert_eq!(a.log.to_tsv(false), b.log.to_tsv(false));
    assert_eq!(a.report, b.report);
}
