//! Spin form under `x = (s + 1) / 2`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::QuboModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingModel {
    pub n: usize,
    pub h: Vec<f64>,
    /// Couplings, `i < j`.
    pub j: BTreeMap<(usize, usize), f64>,
    pub offset: f64,
}

impl IsingModel {
    pub fn energy(&self, s: &[i8]) -> f64 {
        let mut e = self.offset;
        for (i, &h) in self.h.iter().enumerate() {
            e += h * f64::from(s[i]);
        }
        for (&(a, b), &v) in &self.j {
            e += v * f64::from(s[a]) * f64::from(s[b]);
        }
        e
    }
}

pub fn to_ising(model: &QuboModel) -> IsingModel {
    let (q, mut offset) = model.coefficients();
    let mut h = vec![0.0; model.n];
    let mut j = BTreeMap::new();
    for (&(a, b), &v) in &q {
        if a == b {
            h[a] += v / 2.0;
            offset += v / 2.0;
        } else {
            *j.entry((a, b)).or_insert(0.0) += v / 4.0;
            h[a] += v / 4.0;
            h[b] += v / 4.0;
            offset += v / 4.0;
        }
    }
    IsingModel { n: model.n, h, j, offset }
}

/// Inverse map `s = 2x − 1`.
pub fn from_ising(ising: &IsingModel) -> QuboModel {
    let mut m = QuboModel::new(ising.n);
    m.offset = ising.offset;
    for (i, &h) in ising.h.iter().enumerate() {
        m.linear[i] += 2.0 * h;
        m.offset -= h;
    }
    for (&(a, b), &v) in &ising.j {
        m.add(a, b, 4.0 * v);
        m.linear[a] -= 2.0 * v;
        m.linear[b] -= 2.0 * v;
        m.offset += v;
    }
    m
}

pub fn spins(x: &[u8]) -> Vec<i8> {
    x.iter().map(|&b| if b == 1 { 1 } else { -1 }).collect()
}
