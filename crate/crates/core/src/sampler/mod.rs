//! QUBO solvers: seeded simulated annealing, exhaustive search, and an
//! adapter for external samplers that exchange files.

mod external;

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use external::ExternalSampler;

use crate::error::{Error, Result};
use crate::qubo::{decode, QuboModel};

/// Largest model [`brute_force`] accepts.
pub const BRUTE_FORCE_LIMIT: usize = 26;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub reads: usize,
    pub sweeps: usize,
    /// Tuned from the model when absent.
    pub t_start: Option<f64>,
    /// Defaults to 10⁻³ of the start temperature.
    pub t_end: Option<f64>,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule { reads: 1000, sweeps: 1000, t_start: None, t_end: None }
    }
}

impl AnnealSchedule {
    pub fn new(reads: usize, sweeps: usize) -> Self {
        AnnealSchedule { reads, sweeps, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub bits: Vec<u8>,
    pub energy: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    /// Ascending energy, ties by bitstring.
    pub samples: Vec<Sample>,
    pub seed: u64,
}

impl SampleSet {
    /// Merge raw reads into counted samples with energies from the model.
    pub fn from_reads(model: &QuboModel, reads: Vec<Vec<u8>>, seed: u64) -> Self {
        let mut raw: Vec<(Vec<u8>, f64)> = reads
            .into_iter()
            .map(|b| {
                let e = model.energy(&b);
                (b, e)
            })
            .collect();
        raw.sort_by(|a, b| a.0.cmp(&b.0));
        let mut samples: Vec<Sample> = Vec::new();
        for (bits, energy) in raw {
            match samples.last_mut() {
                Some(s) if s.bits == bits => s.count += 1,
                _ => samples.push(Sample { bits, energy, count: 1 }),
            }
        }
        samples.sort_by(|a, b| a.energy.partial_cmp(&b.energy).unwrap_or(Ordering::Equal).then_with(|| a.bits.cmp(&b.bits)));
        SampleSet { samples, seed }
    }

    pub fn best(&self) -> Option<&Sample> {
        self.samples.first()
    }

    pub fn reads(&self) -> usize {
        self.samples.iter().map(|s| s.count).sum()
    }

    /// Median energy over reads (multiplicity counted).
    pub fn median_energy(&self) -> Option<f64> {
        let total = self.reads();
        if total == 0 {
            return None;
        }
        let mut seen = 0;
        for s in &self.samples {
            seen += s.count;
            if 2 * seen > total {
                return Some(s.energy);
            }
        }
        self.samples.last().map(|s| s.energy)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bitstring,energy,count\n");
        for s in &self.samples {
            let b: String = s.bits.iter().map(|&x| if x == 1 { '1' } else { '0' }).collect();
            out += &format!("{b},{:?},{}\n", s.energy, s.count);
        }
        out
    }
}

/// Incremental energy changes for single-bit flips, using the factored
/// penalties directly so a flip touches only the rows that contain the bit.
struct FlipState<'a> {
    lin: &'a [f64],
    adj: &'a [Vec<(usize, f64)>],
    pen_of: &'a [Vec<(usize, f64)>],
    eta: &'a [f64],
    x: Vec<u8>,
    field: Vec<f64>,
    resid: Vec<f64>,
}

struct Compiled {
    lin: Vec<f64>,
    adj: Vec<Vec<(usize, f64)>>,
    pen_of: Vec<Vec<(usize, f64)>>,
    eta: Vec<f64>,
    constant: Vec<f64>,
}

impl Compiled {
    fn new(m: &QuboModel) -> Self {
        let mut adj = vec![Vec::new(); m.n];
        for (&(i, j), &v) in &m.quad {
            adj[i].push((j, v));
            adj[j].push((i, v));
        }
        let mut pen_of = vec![Vec::new(); m.n];
        let mut eta = Vec::with_capacity(m.penalties.len());
        let mut constant = Vec::with_capacity(m.penalties.len());
        for (k, p) in m.penalties.iter().enumerate() {
            for (j, a) in p.terms() {
                pen_of[j].push((k, a));
            }
            eta.push(p.eta);
            constant.push(p.constant());
        }
        Compiled { lin: m.linear.clone(), adj, pen_of, eta, constant }
    }

    fn state(&self, x: Vec<u8>) -> FlipState<'_> {
        let n = x.len();
        let mut field = vec![0.0; n];
        for i in 0..n {
            if x[i] == 1 {
                for &(j, v) in &self.adj[i] {
                    field[j] += v;
                }
            }
        }
        let mut resid = self.constant.clone();
        for i in 0..n {
            if x[i] == 1 {
                for &(k, a) in &self.pen_of[i] {
                    resid[k] += a;
                }
            }
        }
        FlipState { lin: &self.lin, adj: &self.adj, pen_of: &self.pen_of, eta: &self.eta, x, field, resid }
    }
}

impl FlipState<'_> {
    fn delta(&self, i: usize) -> f64 {
        let d = if self.x[i] == 0 { 1.0 } else { -1.0 };
        let mut e = d * (self.lin[i] + self.field[i]);
        for &(k, a) in &self.pen_of[i] {
            e += self.eta[k] * (2.0 * a * d * self.resid[k] + a * a);
        }
        e
    }

    fn flip(&mut self, i: usize) {
        let d = if self.x[i] == 0 { 1.0 } else { -1.0 };
        self.x[i] ^= 1;
        for &(j, v) in &self.adj[i] {
            self.field[j] += d * v;
        }
        for &(k, a) in &self.pen_of[i] {
            self.resid[k] += d * a;
        }
    }

    /// Flip improving bits until none is left.
    fn descend(&mut self) {
        loop {
            let mut improved = false;
            for i in 0..self.x.len() {
                if self.delta(i) < -1e-12 {
                    self.flip(i);
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
    }
}

/// 90th percentile of |ΔE| over random single flips from random states.
pub fn auto_start_temperature(model: &QuboModel, seed: u64) -> f64 {
    if model.n == 0 {
        return 1.0;
    }
    let c = Compiled::new(model);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut deltas = Vec::with_capacity(1000);
    let mut st = c.state((0..model.n).map(|_| rng.gen_range(0..2)).collect());
    for k in 0..1000 {
        if k % 50 == 0 {
            st = c.state((0..model.n).map(|_| rng.gen_range(0..2)).collect());
        }
        let i = rng.gen_range(0..model.n);
        deltas.push(st.delta(i).abs());
    }
    deltas.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let t = deltas[(deltas.len() * 9) / 10];
    if t > 0.0 && t.is_finite() {
        t
    } else {
        1.0
    }
}

/// Metropolis single-flip sweeps on a geometric temperature ladder, one
/// chain per read, each read seeded from `seed` and its index, finishing
/// with a zero-temperature descent.
pub fn anneal(model: &QuboModel, sched: &AnnealSchedule, seed: u64) -> Result<SampleSet> {
    anneal_from(model, sched, seed, &[])
}

/// As [`anneal`], with some reads started from the given states instead of
/// random ones.
pub fn anneal_from(model: &QuboModel, sched: &AnnealSchedule, seed: u64, starts: &[Vec<u8>]) -> Result<SampleSet> {
    if sched.reads == 0 {
        return Err(Error::Domain("anneal needs at least one read".into()));
    }
    let t0 = sched.t_start.unwrap_or_else(|| auto_start_temperature(model, seed));
    let t1 = sched.t_end.unwrap_or(t0 * 1e-3);
    if !(t0 > t1 && t1 > 0.0) {
        return Err(Error::Domain(format!("temperatures must satisfy T_start > T_end > 0, got {t0} and {t1}")));
    }
    let c = Compiled::new(model);
    let n = model.n;
    let sweeps = sched.sweeps.max(1);
    let ratio = if sweeps > 1 { (t1 / t0).powf(1.0 / (sweeps - 1) as f64) } else { 1.0 };
    let reads: Vec<Vec<u8>> = (0..sched.reads)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let x0 = match starts.get(r) {
                Some(s) if s.len() == n => s.clone(),
                _ => (0..n).map(|_| rng.gen_range(0..2)).collect(),
            };
            let mut st = c.state(x0);
            let mut t = t0;
            for _ in 0..sweeps {
                for i in 0..n {
                    let d = st.delta(i);
                    if d <= 0.0 || rng.gen::<f64>() < (-d / t).exp() {
                        st.flip(i);
                    }
                }
                t *= ratio;
            }
            st.descend();
            st.x
        })
        .collect();
    Ok(SampleSet::from_reads(model, reads, seed))
}

/// Exact minimum by Gray-code enumeration; ties go to the lexicographically
/// smallest bitstring.
pub fn brute_force(model: &QuboModel) -> Result<(Vec<u8>, f64)> {
    let n = model.n;
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::SizeGuard { bits: n, limit: BRUTE_FORCE_LIMIT });
    }
    if n == 0 {
        return Ok((Vec::new(), model.energy(&[])));
    }
    let c = Compiled::new(model);
    let prefix = n.min(6);
    let low = n - prefix;
    let tie = |a: &(Vec<u8>, f64), b: &(Vec<u8>, f64)| {
        let tol = 1e-9 * (1.0 + a.1.abs().max(b.1.abs()));
        if a.1 < b.1 - tol || ((a.1 - b.1).abs() <= tol && a.0 < b.0) {
            a.clone()
        } else {
            b.clone()
        }
    };
    let best = (0u64..1 << prefix)
        .into_par_iter()
        .map(|hi| {
            let mut x = vec![0u8; n];
            for b in 0..prefix {
                x[low + b] = ((hi >> b) & 1) as u8;
            }
            let mut st = c.state(x);
            let mut e = model.energy(&st.x);
            let mut best = (st.x.clone(), e);
            for g in 1u64..1 << low {
                let i = g.trailing_zeros() as usize;
                e += st.delta(i);
                st.flip(i);
                let cand = (st.x.clone(), e);
                if e <= best.1 + 1e-9 * (1.0 + e.abs()) {
                    best = tie(&cand, &best);
                }
            }
            best
        })
        .reduce_with(|a, b| tie(&a, &b))
        .expect("at least one chunk");
    let e = model.energy(&best.0);
    Ok((best.0, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub w: Vec<u8>,
    pub theta: f64,
    pub energy: f64,
}

/// Up to `rho` distinct master-feasible assignments in ascending energy.
pub fn extract_candidates(samples: &SampleSet, model: &QuboModel, rho: usize) -> Result<Vec<Candidate>> {
    if rho == 0 {
        return Err(Error::Domain("rho must be at least 1".into()));
    }
    let mut out: Vec<Candidate> = Vec::new();
    for s in &samples.samples {
        let d = decode(model, &s.bits)?;
        if !d.feasible || out.iter().any(|c| c.w == d.w) {
            continue;
        }
        out.push(Candidate { w: d.w, theta: d.theta, energy: s.energy });
        if out.len() == rho {
            break;
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    Ok(out)
}

/// Anything that turns a QUBO into samples.
pub trait Sampler: Send + Sync {
    fn sample(&self, model: &QuboModel, seed: u64) -> Result<SampleSet>;
    fn name(&self) -> &'static str;
}

pub struct AnnealSampler(pub AnnealSchedule);

impl Sampler for AnnealSampler {
    fn sample(&self, model: &QuboModel, seed: u64) -> Result<SampleSet> {
        anneal(model, &self.0, seed)
    }

    fn name(&self) -> &'static str {
        "sa"
    }
}

pub struct BruteForceSampler;

impl Sampler for BruteForceSampler {
    fn sample(&self, model: &QuboModel, seed: u64) -> Result<SampleSet> {
        let (x, _) = brute_force(model)?;
        Ok(SampleSet::from_reads(model, vec![x], seed))
    }

    fn name(&self) -> &'static str {
        "brute"
    }
}

#[cfg(test)]
mod tests;
