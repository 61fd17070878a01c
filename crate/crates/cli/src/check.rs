//! Oracle suites for instances small enough to enumerate every w.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use sinflow::benders::{
    initial_w, run_classical_bd, run_hqcbd, solve_monolithic, BnbLimits, Cut, MasterBackend, MasterState, SolverConfig,
};
use sinflow::lp::{check_dual_feasible, solve_subproblem, SubproblemOutcome};
use sinflow::milp::MilpProblem;
use sinflow::qubo::{build_master_qubo, decode, encode_theta, PenaltyConfig};
use sinflow::sampler::brute_force;
use sinflow::scenario::synth::{generate_synthetic, SynthParams};
use sinflow::scenario::{load_scenario, Scenario};

use crate::manifest::{sha256_file, Outputs, RunManifest, CHECK_FORMAT, CUTS_FORMAT};
use crate::solve::prepare;
use crate::Exit;

/// Largest number of master binaries the enumeration oracles accept.
pub const CHECK_N0_LIMIT: usize = 14;
/// Total QUBO bits allowed for the ground-state check.
pub const QUBO_CHECK_BITS: usize = 22;

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CheckArgs {
    /// Scenario to check; omit with `--random`.
    #[arg(required_unless_present = "random")]
    pub scenario: Option<PathBuf>,
    /// Check this many seeded random tiny instances instead.
    #[arg(long, conflicts_with = "scenario")]
    pub random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Validate the cuts in this file instead of those of a fresh run.
    #[arg(long)]
    pub cuts: Option<PathBuf>,
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckLine {
    pub suite: String,
    pub instance: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutFile {
    pub format: String,
    #[serde(default)]
    pub manifest: Option<String>,
    pub theta_lo: f64,
    pub optimality: Vec<Cut>,
    pub feasibility: Vec<Cut>,
}

impl CutFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let f: CutFile = serde_json::from_str(&text).with_context(|| format!("parsing cut file {}", path.display()))?;
        if f.format != CUTS_FORMAT {
            bail!("{} has format {:?}, expected {CUTS_FORMAT:?}", path.display(), f.format);
        }
        Ok(f)
    }
}

/// Seeds from `seed` upward whose tiny instance has at most
/// [`CHECK_N0_LIMIT`] binaries; the first `count` of them.
pub fn tiny_batch(seed: u64, count: usize) -> Result<Vec<(u64, Scenario)>> {
    let mut out = Vec::with_capacity(count);
    let mut k = seed;
    while out.len() < count {
        let s = generate_synthetic(&SynthParams::tiny(k))?;
        let (_, p) = prepare(&s, sinflow::milp::Scheme::Full)?;
        if p.n0() <= CHECK_N0_LIMIT {
            out.push((k, s));
        }
        k += 1;
    }
    Ok(out)
}

/// Every w meeting the binary rows, with its subproblem outcome.
pub struct Enumeration {
    pub points: Vec<(Vec<u8>, SubproblemOutcome)>,
}

impl Enumeration {
    pub fn new(p: &MilpProblem) -> Result<Self> {
        let n = p.n0();
        if n > CHECK_N0_LIMIT {
            bail!("instance has {n} binaries; the enumeration oracles accept at most {CHECK_N0_LIMIT}");
        }
        let mut points = Vec::new();
        for mask in 0u32..1 << n {
            let w: Vec<u8> = (0..n).map(|i| ((mask >> i) & 1) as u8).collect();
            let ok = p.bin.iter().all(|r| r.w.iter().map(|&(j, g)| g * f64::from(w[j])).sum::<f64>() <= r.rhs + 1e-9);
            if ok {
                let out = solve_subproblem(p, &w)?;
                points.push((w, out));
            }
        }
        Ok(Enumeration { points })
    }

    /// Subproblem value per w with a feasible subproblem.
    pub fn values(&self) -> impl Iterator<Item = (&[u8], f64)> {
        self.points.iter().filter_map(|(w, o)| match o {
            SubproblemOutcome::Optimality { value, .. } => Some((w.as_slice(), *value)),
            SubproblemOutcome::Feasibility { .. } => None,
        })
    }

    /// Best delivered data and its w.
    pub fn optimum(&self) -> Option<(f64, Vec<u8>)> {
        self.values().fold(None, |best: Option<(f64, Vec<u8>)>, (w, v)| match best {
            Some((b, _)) if -v <= b => best,
            _ => Some((-v, w.to_vec())),
        })
    }
}

fn line(suite: &str, instance: &str, pass: bool, detail: String) -> CheckLine {
    CheckLine { suite: suite.into(), instance: instance.into(), pass, detail }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-12)
}

pub fn strong_duality(p: &MilpProblem, e: &Enumeration, inst: &str) -> CheckLine {
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for (w, out) in &e.points {
        match out {
            SubproblemOutcome::Optimality { dual, q, alpha, beta, .. } => {
                let primal: f64 = p.c.iter().zip(q).map(|(c, x)| -c * x).sum();
                let dual_value = alpha + beta.iter().zip(w).map(|(b, &x)| b * f64::from(x)).sum::<f64>();
                let r = (primal - dual_value).abs() / (1.0 + primal.abs());
                worst = worst.max(r);
                if r > 1e-7 || !check_dual_feasible(p, dual, 1e-7) {
                    bad.push(format!("{w:?}"));
                }
            }
            SubproblemOutcome::Feasibility { alpha, beta, .. } => {
                let v = alpha + beta.iter().zip(w).map(|(b, &x)| b * f64::from(x)).sum::<f64>();
                if v <= 1e-9 {
                    bad.push(format!("{w:?} (certificate does not cut it off)"));
                }
            }
        }
    }
    let detail = format!("{} subproblems, worst relative duality gap {worst:.2e}", e.points.len());
    if bad.is_empty() {
        line("strong-duality", inst, true, detail)
    } else {
        line("strong-duality", inst, false, format!("{detail}; failing w: {}", bad.join(", ")))
    }
}

pub fn cut_validity(optimality: &[Cut], feasibility: &[Cut], e: &Enumeration, inst: &str) -> CheckLine {
    let mut bad = Vec::new();
    for (k, c) in optimality.iter().enumerate() {
        if let Some((w, v)) = e.values().find(|(w, v)| c.value(w) > v + 1e-6) {
            bad.push(format!(
                "optimality cut {} (iteration {}) exceeds θ at {w:?} by {:.3e}",
                k + 1,
                c.iteration,
                c.value(w) - v
            ));
        }
    }
    for (k, c) in feasibility.iter().enumerate() {
        if let Some((w, _)) = e.values().find(|(w, _)| c.value(w) > 1e-9) {
            bad.push(format!("feasibility cut {} (iteration {}) excludes feasible {w:?}", k + 1, c.iteration));
        }
    }
    let detail = format!("{} optimality and {} feasibility cuts", optimality.len(), feasibility.len());
    if bad.is_empty() {
        line("cut-validity", inst, true, detail)
    } else {
        line("cut-validity", inst, false, format!("{detail}; {}", bad.join("; ")))
    }
}

/// MP1 optimum by enumeration against the brute-force QUBO ground state,
/// with as many cuts and θ bits as fit in [`QUBO_CHECK_BITS`].
pub fn qubo_ground_state(master: &MasterState, inst: &str) -> Result<CheckLine> {
    let mut pick = None;
    'outer: for k in (0..=master.optimality.len()).rev() {
        let mut m = master.clone();
        m.optimality.truncate(k);
        for bits in (3..=10).rev() {
            let Ok(enc) = encode_theta(m.theta_lo, m.theta_hi, bits) else { continue };
            let model = build_master_qubo(&m, &PenaltyConfig::default_for(&enc), &enc)?;
            if model.n <= QUBO_CHECK_BITS {
                pick = Some((m, enc, model));
                break 'outer;
            }
        }
    }
    let Some((m, enc, model)) = pick else {
        return Ok(line("qubo-ground-state", inst, false, format!("no master model fits in {QUBO_CHECK_BITS} bits")));
    };
    let n = m.n0;
    let opt = (0u32..1 << n)
        .map(|mask| (0..n).map(|i| ((mask >> i) & 1) as u8).collect::<Vec<u8>>())
        .filter(|w| m.feasible(w, 0.0))
        .map(|w| m.theta_at(&w))
        .fold(f64::INFINITY, f64::min);
    let (x, _) = brute_force(&model)?;
    let d = decode(&model, &x)?;
    let res = enc.resolution();
    let ok = d.feasible && (d.theta - opt).abs() <= res + 1e-9 && m.theta_at(&d.w) <= opt + res + 1e-9;
    let detail = format!(
        "{} bits, {} cuts, θ resolution {res}: ground state θ {} vs MP1 optimum {opt}",
        model.n,
        m.optimality.len() + m.feasibility.len(),
        d.theta
    );
    Ok(line("qubo-ground-state", inst, ok, detail))
}

fn exact(backend: MasterBackend) -> SolverConfig {
    SolverConfig { backend, eps: 1e-9, ..Default::default() }
}

/// All suites on one instance. Returns the lines and the brute-force run's
/// master state for reuse.
pub fn check_instance(s: &Scenario, inst: &str, cuts: Option<&CutFile>) -> Result<Vec<CheckLine>> {
    let (g, p) = prepare(s, sinflow::milp::Scheme::Full)?;
    let e = Enumeration::new(&p)?;
    let mut out = vec![strong_duality(&p, &e, inst)];
    let w0 = initial_w(&p, &g, s)?;
    let brute = run_hqcbd(&p, &w0, &exact(MasterBackend::BruteForce))?;
    let bd = run_classical_bd(&p, &w0, &exact(MasterBackend::Bnb))?;
    match cuts {
        Some(f) => out.push(cut_validity(&f.optimality, &f.feasibility, &e, inst)),
        None => {
            let mut opt = brute.master.optimality.clone();
            opt.extend(bd.master.optimality.iter().cloned());
            let mut feas = brute.master.feasibility.clone();
            feas.extend(bd.master.feasibility.iter().cloned());
            out.push(cut_validity(&opt, &feas, &e, inst));
        }
    }
    out.push(qubo_ground_state(&brute.master, inst)?);

    let mono = solve_monolithic(&p, &BnbLimits::default())?;
    let (best, _) = e.optimum().context("no w has a feasible subproblem")?;
    let agree = [mono.objective, brute.objective, bd.objective].iter().all(|&v| close(v, best, 1e-5));
    out.push(line(
        "monolithic-equivalence",
        inst,
        agree && mono.optimal,
        format!(
            "enumeration {best}, monolithic {}, brute-force BD {}, classical BD {}",
            mono.objective, brute.objective, bd.objective
        ),
    ));

    let mut monotone = true;
    for r in [&brute, &bd] {
        for (a, b) in r.log.records.iter().zip(r.log.records.iter().skip(1)) {
            monotone &= b.ub <= a.ub && b.lb >= a.lb - 1e-9;
        }
    }
    out.push(line(
        "bound-monotonicity",
        inst,
        monotone,
        format!("{} + {} exact-master iterations", brute.log.iterations(), bd.log.iterations()),
    ));
    Ok(out)
}

pub fn render(lines: &[CheckLine], manifest: &str) -> String {
    let mut s = format!("# {CHECK_FORMAT}; manifest: {manifest}\n");
    for l in lines {
        let _ = writeln!(s, "{}\t{}\t{}\t{}", if l.pass { "PASS" } else { "FAIL" }, l.suite, l.instance, l.detail);
    }
    s
}

pub fn run(a: &CheckArgs, out: &Path) -> Result<Exit> {
    let cuts = a.cuts.as_deref().map(CutFile::load).transpose()?;
    let mut lines = Vec::new();
    let (hash, name) = match (&a.scenario, a.random) {
        (Some(path), _) => {
            let s = load_scenario(path)?;
            let inst = path.file_stem().map_or("scenario".into(), |x| x.to_string_lossy().into_owned());
            lines.extend(check_instance(&s, &inst, cuts.as_ref())?);
            (Some(sha256_file(path)?), a.name.clone().unwrap_or(inst))
        }
        (None, Some(count)) => {
            for (seed, s) in tiny_batch(a.seed, count)? {
                lines.extend(check_instance(&s, &format!("tiny-{seed}"), cuts.as_ref())?);
            }
            (None, a.name.clone().unwrap_or(format!("tiny-batch-s{}", a.seed)))
        }
        (None, None) => bail!("give a scenario or --random N"),
    };
    let m = RunManifest::new("check", serde_json::to_value(crate::Command::Check(a.clone()))?, hash, vec![a.seed]);
    let mut o = Outputs::new(out, &name, m)?;
    let text = render(&lines, &o.manifest_name());
    o.write(".check.tsv", &text)?;
    o.finish()?;
    print!("{}", text.lines().skip(1).map(|l| format!("{l}\n")).collect::<String>());
    let failed = lines.iter().filter(|l| !l.pass).count();
    if failed > 0 {
        eprintln!("{failed} of {} checks failed", lines.len());
        return Ok(Exit::Failed);
    }
    Ok(Exit::Ok)
}
