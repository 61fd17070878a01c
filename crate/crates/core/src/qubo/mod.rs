//! Compile the master problem into a QUBO and decode bitstrings back.
//!
//! Penalty terms are kept factored as `η (aᵀx − b + slackᵀx)²` next to the
//! explicit linear and pairwise coefficients. The energy is the same as the
//! expanded upper-triangular form, which [`QuboModel::coefficients`] produces
//! on demand; samplers use the factored form to keep single flips cheap.

mod ising;
mod text;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use ising::{from_ising, spins, to_ising, IsingModel};
pub use text::{read_qubo, write_qubo};

use crate::benders::MasterState;
use crate::error::{Error, Result};
use crate::milp::Row;

/// Cut violation still treated as satisfied when decoding, in cut units.
pub const CUT_TOL: f64 = 1e-3;

/// θ̄ = Σ_{i=−frac..=pos} 2^i v − Σ_{j=0..=neg} 2^j v.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThetaEncoding {
    pub neg_int: u32,
    pub pos_int: u32,
    pub pos_frac: u32,
}

impl ThetaEncoding {
    pub fn new(neg_int: u32, pos_int: u32, pos_frac: u32) -> Self {
        ThetaEncoding { neg_int, pos_int, pos_frac }
    }

    pub fn bits(&self) -> usize {
        (self.neg_int + self.pos_int + self.pos_frac + 2) as usize
    }

    /// Bit weights: positive part from 2^−frac upward, then the negative part.
    pub fn weights(&self) -> Vec<f64> {
        let mut w: Vec<f64> = (-(self.pos_frac as i32)..=self.pos_int as i32).map(|i| 2f64.powi(i)).collect();
        w.extend((0..=self.neg_int as i32).map(|j| -(2f64.powi(j))));
        w
    }

    pub fn resolution(&self) -> f64 {
        2f64.powi(-(self.pos_frac as i32))
    }

    pub fn lo(&self) -> f64 {
        -(2f64.powi(self.neg_int as i32 + 1) - 1.0)
    }

    pub fn hi(&self) -> f64 {
        2f64.powi(self.pos_int as i32 + 1) - self.resolution()
    }

    pub fn decode(&self, v: &[u8]) -> f64 {
        self.weights().iter().zip(v).map(|(w, &b)| w * f64::from(b)).sum()
    }

    /// Bits of the smallest representable value ≥ `t`, clamped to the range.
    pub fn bits_for(&self, t: f64) -> Vec<u8> {
        let t = t.clamp(self.lo(), self.hi());
        let res = self.resolution();
        let neg = (-t).ceil().max(0.0);
        let pos = (((t + neg) / res).ceil() * res).min(self.hi());
        let mut bits = Vec::with_capacity(self.bits());
        let mut p = (pos / res).round() as u64;
        for _ in 0..=(self.pos_frac + self.pos_int) {
            bits.push((p & 1) as u8);
            p >>= 1;
        }
        let mut n = neg as u64;
        for _ in 0..=self.neg_int {
            bits.push((n & 1) as u8);
            n >>= 1;
        }
        bits
    }
}

/// Pick the split of `bits` that covers `[lo, hi]` with the finest resolution.
pub fn encode_theta(lo: f64, hi: f64, bits: usize) -> Result<ThetaEncoding> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Encoding(format!("theta bounds [{lo}, {hi}] are not an interval")));
    }
    if bits < 2 {
        return Err(Error::Encoding(format!("theta needs at least 2 bits, got {bits}")));
    }
    // Smallest k with 2^(k+1) − 1 ≥ x.
    let int_bits = |x: f64| -> u32 {
        let mut k = 0;
        while 2f64.powi(k as i32 + 1) - 1.0 < x {
            k += 1;
        }
        k
    };
    let neg = int_bits(-lo.min(0.0));
    let pos = int_bits(hi.max(0.0));
    let used = (neg + pos + 2) as usize;
    if used > bits {
        return Err(Error::Encoding(format!(
            "theta range [{lo}, {hi}] needs {used} bits at unit resolution, only {bits} available"
        )));
    }
    Ok(ThetaEncoding::new(neg, pos, (bits - used) as u32))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub eta_rows: f64,
    pub eta_feasibility: f64,
    pub eta_optimality: f64,
}

impl PenaltyConfig {
    pub fn uniform(eta: f64) -> Self {
        PenaltyConfig { eta_rows: eta, eta_feasibility: eta, eta_optimality: eta }
    }

    /// Twice the encodable θ width, and at least 2/resolution so that a cut
    /// cannot be traded against θ by more than one resolution step.
    pub fn default_for(enc: &ThetaEncoding) -> Self {
        Self::uniform((2.0 * (enc.hi() - enc.lo())).max(2.0 / enc.resolution()))
    }

    pub fn scaled(&self, k: f64) -> Self {
        PenaltyConfig {
            eta_rows: self.eta_rows * k,
            eta_feasibility: self.eta_feasibility * k,
            eta_optimality: self.eta_optimality * k,
        }
    }

    fn validate(&self) -> Result<()> {
        if [self.eta_rows, self.eta_feasibility, self.eta_optimality].iter().all(|&e| e > 0.0 && e.is_finite()) {
            Ok(())
        } else {
            Err(Error::Domain(format!("penalties must be positive: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyGroup {
    Rows,
    Feasibility,
    Optimality,
    /// `θ ≥ θ_lo` when the encoding reaches below it.
    ThetaFloor,
}

/// `η (rowᵀx − rhs + slackᵀx)²`, with the slack part kept apart so the
/// constraint itself can be checked without it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Penalty {
    pub eta: f64,
    pub row: Vec<(usize, f64)>,
    pub rhs: f64,
    pub slack: Vec<(usize, f64)>,
    pub group: PenaltyGroup,
    /// Index of the row or cut within its group.
    pub index: usize,
    /// `rowᵀx = rhs`: no slack, and violated on either side.
    #[serde(default)]
    pub equality: bool,
}

impl Penalty {
    pub fn lhs(&self, x: &[u8]) -> f64 {
        self.row.iter().map(|&(j, a)| a * f64::from(x[j])).sum()
    }

    pub fn residual(&self, x: &[u8]) -> f64 {
        self.lhs(x) - self.rhs + self.slack.iter().map(|&(j, a)| a * f64::from(x[j])).sum::<f64>()
    }

    pub fn energy(&self, x: &[u8]) -> f64 {
        let r = self.residual(x);
        self.eta * r * r
    }

    /// All terms of the square, merged by column.
    pub fn terms(&self) -> Vec<(usize, f64)> {
        let mut m: BTreeMap<usize, f64> = BTreeMap::new();
        for &(j, a) in self.row.iter().chain(&self.slack) {
            *m.entry(j).or_default() += a;
        }
        m.into_iter().filter(|e| e.1 != 0.0).collect()
    }

    pub fn constant(&self) -> f64 {
        -self.rhs
    }
}

/// Interval bound on `b − aᵀx` over binary x.
pub fn slack_range(row: &[(usize, f64)], rhs: f64) -> f64 {
    rhs - row.iter().map(|&(_, a)| a.min(0.0)).sum::<f64>()
}

/// Slack weights `step·2^ψ` covering `[0, range]`.
pub fn slack_ladder(range: f64, step: f64) -> Vec<f64> {
    let units = (range / step - 1e-9).max(0.0);
    if units <= 0.0 {
        return Vec::new();
    }
    let k = (units + 1.0).log2().ceil() as i32;
    (0..k).map(|i| step * 2f64.powi(i)).collect()
}

/// Build the penalty for `aᵀx ≤ b`, appending slack bits from `next_bit`.
/// Integer rows use unit slack steps; real rows use `step`.
pub fn inequality_penalty(row: &[(usize, f64)], rhs: f64, eta: f64, step: f64, next_bit: &mut usize) -> Result<Option<Penalty>> {
    let range = slack_range(row, rhs);
    if range < -1e-9 {
        return Err(Error::Unsatisfiable(format!("row with rhs {rhs} cannot be satisfied by any binary point")));
    }
    if row.iter().all(|&(_, a)| a == 0.0) {
        return Ok(None);
    }
    let integral = row.iter().all(|&(_, a)| a.fract() == 0.0) && rhs.fract() == 0.0;
    let ladder = slack_ladder(range, if integral { 1.0 } else { step });
    let slack = ladder
        .into_iter()
        .map(|w| {
            *next_bit += 1;
            (*next_bit - 1, w)
        })
        .collect();
    Ok(Some(Penalty { eta, row: row.to_vec(), rhs, slack, group: PenaltyGroup::Rows, index: 0, equality: false }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub n_w: usize,
    pub theta_start: usize,
    pub theta: Option<ThetaEncoding>,
}

impl Layout {
    pub fn plain(n: usize) -> Self {
        Layout { n_w: n, theta_start: n, theta: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboModel {
    pub n: usize,
    pub offset: f64,
    pub linear: Vec<f64>,
    /// Explicit pairwise terms, `i < j`.
    pub quad: BTreeMap<(usize, usize), f64>,
    pub penalties: Vec<Penalty>,
    pub layout: Layout,
}

impl QuboModel {
    pub fn new(n: usize) -> Self {
        QuboModel { n, offset: 0.0, linear: vec![0.0; n], quad: BTreeMap::new(), penalties: Vec::new(), layout: Layout::plain(n) }
    }

    /// Build from an upper-triangular map (diagonal entries are linear terms).
    pub fn from_coefficients(n: usize, offset: f64, q: &BTreeMap<(usize, usize), f64>) -> Result<Self> {
        let mut m = QuboModel::new(n);
        m.offset = offset;
        for (&(i, j), &v) in q {
            if i > j || j >= n {
                return Err(Error::Dimension(format!("coefficient ({i},{j}) outside the upper triangle of {n} bits")));
            }
            m.add(i, j, v);
        }
        Ok(m)
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        if i == j {
            self.linear[i] += v;
        } else {
            *self.quad.entry((i.min(j), i.max(j))).or_default() += v;
        }
    }

    pub fn energy(&self, x: &[u8]) -> f64 {
        let mut e = self.offset;
        for (i, &l) in self.linear.iter().enumerate() {
            if x[i] == 1 {
                e += l;
            }
        }
        for (&(i, j), &v) in &self.quad {
            if x[i] == 1 && x[j] == 1 {
                e += v;
            }
        }
        e + self.penalties.iter().map(|p| p.energy(x)).sum::<f64>()
    }

    /// Expanded upper-triangular coefficients and offset.
    pub fn coefficients(&self) -> (BTreeMap<(usize, usize), f64>, f64) {
        let mut q: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut offset = self.offset;
        for (i, &l) in self.linear.iter().enumerate() {
            if l != 0.0 {
                *q.entry((i, i)).or_default() += l;
            }
        }
        for (&k, &v) in &self.quad {
            *q.entry(k).or_default() += v;
        }
        for p in &self.penalties {
            let t = p.terms();
            let c = p.constant();
            offset += p.eta * c * c;
            for (a, &(i, ai)) in t.iter().enumerate() {
                *q.entry((i, i)).or_default() += p.eta * (ai * ai + 2.0 * c * ai);
                for &(j, aj) in &t[a + 1..] {
                    *q.entry((i.min(j), i.max(j))).or_default() += 2.0 * p.eta * ai * aj;
                }
            }
        }
        q.retain(|_, v| *v != 0.0);
        (q, offset)
    }

    /// Expanded model without factored penalties.
    pub fn expanded(&self) -> QuboModel {
        let (q, offset) = self.coefficients();
        let mut m = QuboModel::from_coefficients(self.n, offset, &q).expect("coefficients stay in range");
        m.layout = self.layout.clone();
        m
    }

    pub fn slack_bits(&self) -> usize {
        self.penalties.iter().map(|p| p.slack.len()).sum()
    }
}

/// MP2: θ̄(v) plus penalties for the binary rows and every pooled cut.
/// Bit layout: `[w | θ bits | slack bits per row, then per cut]`.
fn negates(a: &Row, b: &Row) -> bool {
    !a.w.is_empty() && a.rhs == -b.rhs && a.w.len() == b.w.len() && a.w.iter().zip(&b.w).all(|(x, y)| x.0 == y.0 && x.1 == -y.1)
}

pub fn build_master_qubo(master: &MasterState, cfg: &PenaltyConfig, enc: &ThetaEncoding) -> Result<QuboModel> {
    cfg.validate()?;
    let n_w = master.n0;
    let theta_bits = enc.bits();
    let weights = enc.weights();
    let mut next = n_w + theta_bits;
    let step = enc.resolution();
    let mut penalties = Vec::new();
    let mut idx = 0;
    while idx < master.rows.len() {
        let r = &master.rows[idx];
        // A row followed by its own negation is an equality. One slack-free
        // square replaces the two slacked ones, whose sum has single-flip
        // local minima at every violated point.
        if master.rows.get(idx + 1).is_some_and(|s| negates(r, s)) {
            if slack_range(&r.w, r.rhs).min(slack_range(&master.rows[idx + 1].w, -r.rhs)) < -1e-9 {
                return Err(Error::Unsatisfiable(format!("{}: no binary point meets the equality", r.tag)));
            }
            penalties.push(Penalty {
                eta: cfg.eta_rows,
                row: r.w.clone(),
                rhs: r.rhs,
                slack: Vec::new(),
                group: PenaltyGroup::Rows,
                index: idx,
                equality: true,
            });
            idx += 2;
            continue;
        }
        if let Some(mut p) = inequality_penalty(&r.w, r.rhs, cfg.eta_rows, step, &mut next)
            .map_err(|e| Error::Unsatisfiable(format!("{}: {e}", r.tag)))?
        {
            p.index = idx;
            penalties.push(p);
        }
        idx += 1;
    }
    for (idx, c) in master.feasibility.iter().enumerate() {
        if let Some(mut p) = inequality_penalty(&c.beta, -c.alpha, cfg.eta_feasibility, step, &mut next)
            .map_err(|e| Error::Unsatisfiable(format!("feasibility cut {}: {e}", idx + 1)))?
        {
            p.group = PenaltyGroup::Feasibility;
            p.index = idx;
            penalties.push(p);
        }
    }
    for (idx, c) in master.optimality.iter().enumerate() {
        let mut row = c.beta.clone();
        row.extend(weights.iter().enumerate().map(|(b, &wt)| (n_w + b, -wt)));
        if let Some(mut p) = inequality_penalty(&row, -c.alpha, cfg.eta_optimality, step, &mut next)
            .map_err(|e| Error::Unsatisfiable(format!("optimality cut {}: {e}", idx + 1)))?
        {
            p.group = PenaltyGroup::Optimality;
            p.index = idx;
            penalties.push(p);
        }
    }
    if enc.lo() < master.theta_lo {
        let row: Vec<(usize, f64)> = weights.iter().enumerate().map(|(b, &wt)| (n_w + b, -wt)).collect();
        if let Some(mut p) = inequality_penalty(&row, -master.theta_lo, cfg.eta_optimality, step, &mut next)? {
            p.group = PenaltyGroup::ThetaFloor;
            penalties.push(p);
        }
    }
    let mut m = QuboModel::new(next);
    for (b, &wt) in weights.iter().enumerate() {
        m.linear[n_w + b] = wt;
    }
    m.penalties = penalties;
    m.layout = Layout { n_w, theta_start: n_w, theta: Some(*enc) };
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decoded {
    pub w: Vec<u8>,
    pub theta: f64,
    /// Slack value of each penalty, in model order.
    pub slack: Vec<f64>,
    /// Energy minus θ̄; zero when every penalty is met exactly.
    pub penalty_residual: f64,
    /// Binary rows hold exactly and feasibility cuts within [`CUT_TOL`].
    /// Constraints on θ may be off by one θ resolution step, since θ lives
    /// on the encoding grid and the cut values do not.
    pub feasible: bool,
}

pub fn decode(model: &QuboModel, bits: &[u8]) -> Result<Decoded> {
    if bits.len() != model.n {
        return Err(Error::Dimension(format!("bitstring has {} bits, model has {}", bits.len(), model.n)));
    }
    let l = &model.layout;
    let w = bits[..l.n_w].to_vec();
    let theta = match &l.theta {
        Some(enc) => enc.decode(&bits[l.theta_start..l.theta_start + enc.bits()]),
        None => 0.0,
    };
    let slack = model.penalties.iter().map(|p| p.slack.iter().map(|&(j, a)| a * f64::from(bits[j])).sum()).collect();
    let theta_tol = l.theta.map_or(CUT_TOL, |e| e.resolution().max(CUT_TOL));
    let feasible = model.penalties.iter().all(|p| {
        let v = p.lhs(bits) - p.rhs;
        match p.group {
            PenaltyGroup::Rows if p.equality => v.abs() <= 1e-9,
            PenaltyGroup::Rows => v <= 1e-9,
            PenaltyGroup::Feasibility => v <= CUT_TOL,
            PenaltyGroup::Optimality | PenaltyGroup::ThetaFloor => v <= theta_tol,
        }
    });
    Ok(Decoded { w, theta, slack, penalty_residual: model.energy(bits) - theta, feasible })
}

/// Bitstring placing `w` and `theta` into the layout with slacks chosen greedily.
pub fn encode_point(model: &QuboModel, w: &[u8], theta_bits: &[u8]) -> Vec<u8> {
    let mut x = vec![0u8; model.n];
    x[..w.len()].copy_from_slice(w);
    if model.layout.theta.is_some() {
        x[model.layout.theta_start..model.layout.theta_start + theta_bits.len()].copy_from_slice(theta_bits);
    }
    for p in &model.penalties {
        let mut need = p.rhs - p.lhs(&x);
        let mut sl: Vec<_> = p.slack.clone();
        sl.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        for (j, a) in sl {
            if a <= need + 1e-12 {
                x[j] = 1;
                need -= a;
            }
        }
    }
    x
}
