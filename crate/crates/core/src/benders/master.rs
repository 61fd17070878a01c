//! Master problem state: binary-only rows plus the cut pools.

use serde::{Deserialize, Serialize};

use crate::milp::{MilpProblem, Row};

/// Coefficient distance under which two cuts count as the same cut.
pub const CUT_DEDUP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutKind {
    Feasibility,
    Optimality,
}

/// `α + βᵀw ≤ θ` (optimality) or `α + βᵀw ≤ 0` (feasibility); β is sparse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub kind: CutKind,
    pub alpha: f64,
    pub beta: Vec<(usize, f64)>,
    pub iteration: usize,
}

impl Cut {
    pub fn new(kind: CutKind, alpha: f64, beta: &[f64], iteration: usize) -> Self {
        let beta = beta.iter().enumerate().filter(|(_, b)| b.abs() > 1e-12).map(|(j, &b)| (j, b)).collect();
        Cut { kind, alpha, beta, iteration }
    }

    pub fn value(&self, w: &[u8]) -> f64 {
        self.alpha + self.beta.iter().map(|&(j, b)| b * f64::from(w[j])).sum::<f64>()
    }

    fn same_as(&self, other: &Cut) -> bool {
        if self.kind != other.kind || (self.alpha - other.alpha).abs() > CUT_DEDUP_TOL {
            return false;
        }
        let (mut a, mut b) = (self.beta.iter().peekable(), other.beta.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (None, None) => return true,
                (Some(&&(i, x)), Some(&&(j, y))) if i == j => {
                    if (x - y).abs() > CUT_DEDUP_TOL {
                        return false;
                    }
                    a.next();
                    b.next();
                }
                (Some(&&(i, x)), Some(&&(j, _))) if i < j => {
                    if x.abs() > CUT_DEDUP_TOL {
                        return false;
                    }
                    a.next();
                }
                (Some(_), Some(&&(_, y))) => {
                    if y.abs() > CUT_DEDUP_TOL {
                        return false;
                    }
                    b.next();
                }
                (Some(&&(_, x)), None) => {
                    if x.abs() > CUT_DEDUP_TOL {
                        return false;
                    }
                    a.next();
                }
                (None, Some(&&(_, y))) => {
                    if y.abs() > CUT_DEDUP_TOL {
                        return false;
                    }
                    b.next();
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MasterState {
    pub n0: usize,
    /// Binary-only rows `Σ g w ≤ d`.
    pub rows: Vec<Row>,
    pub feasibility: Vec<Cut>,
    pub optimality: Vec<Cut>,
    /// θ range used for the encoding and as the master's lower limit.
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub ub: f64,
    pub lb: f64,
    /// Whether `lb` comes from an exact master solve.
    pub lb_certified: bool,
    pub iteration: usize,
    pub incumbent: Option<(Vec<u8>, Vec<f64>)>,
}

impl MasterState {
    pub fn new(p: &MilpProblem) -> Self {
        MasterState {
            n0: p.n0(),
            rows: p.bin.clone(),
            feasibility: Vec::new(),
            optimality: Vec::new(),
            theta_lo: -p.ub_cap.max(1.0),
            theta_hi: 0.0,
            ub: f64::INFINITY,
            lb: f64::NEG_INFINITY,
            lb_certified: false,
            iteration: 0,
            incumbent: None,
        }
    }

    /// Coefficient tightening over binary w and θ ≥ `theta_lo`. A negative
    /// β_j so large that `w_j = 1` alone satisfies the cut is raised to the
    /// smallest value that still does. The (w, θ) points cut off stay the
    /// same; big-M coefficients shrink to the scale of the θ range.
    pub fn tighten(&self, mut cut: Cut) -> Cut {
        let pos: f64 = cut.beta.iter().map(|&(_, b)| b.max(0.0)).sum();
        let floor_at = |b: f64| {
            let rest = pos - b.max(0.0);
            match cut.kind {
                CutKind::Optimality => -cut.alpha - rest + self.theta_lo,
                CutKind::Feasibility => -cut.alpha - rest,
            }
        };
        for e in 0..cut.beta.len() {
            let b = cut.beta[e].1;
            let floor = floor_at(b);
            if b < floor && floor < 0.0 {
                cut.beta[e].1 = floor;
            }
        }
        cut
    }

    /// Tighten and add a cut unless an identical one is pooled; returns
    /// whether it was new.
    pub fn add_cut(&mut self, cut: Cut) -> bool {
        let cut = self.tighten(cut);
        let pool = match cut.kind {
            CutKind::Feasibility => &mut self.feasibility,
            CutKind::Optimality => &mut self.optimality,
        };
        if pool.iter().any(|c| c.same_as(&cut)) {
            return false;
        }
        pool.push(cut);
        true
    }

    pub fn rows_satisfied(&self, w: &[u8]) -> bool {
        self.rows.iter().all(|r| r.w.iter().map(|&(j, g)| g * f64::from(w[j])).sum::<f64>() <= r.rhs + 1e-9)
    }

    /// Feasible for MP1: binary rows hold exactly and no feasibility cut is violated.
    pub fn feasible(&self, w: &[u8], cut_tol: f64) -> bool {
        self.rows_satisfied(w) && self.feasibility.iter().all(|c| c.value(w) <= cut_tol)
    }

    /// Smallest θ allowed at w by the optimality cuts and the range floor.
    pub fn theta_at(&self, w: &[u8]) -> f64 {
        self.optimality.iter().map(|c| c.value(w)).fold(self.theta_lo, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dedup_ignores_tiny_differences() {
        let mut m = MasterState {
            n0: 3,
            rows: vec![],
            feasibility: vec![],
            optimality: vec![],
            theta_lo: -10.0,
            theta_hi: 0.0,
            ub: f64::INFINITY,
            lb: f64::NEG_INFINITY,
            lb_certified: false,
            iteration: 0,
            incumbent: None,
        };
        assert!(m.add_cut(Cut::new(CutKind::Optimality, -1.0, &[0.5, 0.0, -2.0], 1)));
        assert!(!m.add_cut(Cut::new(CutKind::Optimality, -1.0 + 1e-12, &[0.5, 1e-13, -2.0], 2)));
        assert!(m.add_cut(Cut::new(CutKind::Optimality, -1.0, &[0.5, 0.1, -2.0], 3)));
        assert!(m.add_cut(Cut::new(CutKind::Feasibility, -1.0, &[0.5, 0.0, -2.0], 3)));
        assert_eq!(m.optimality.len(), 2);
        assert_eq!(m.theta_at(&[1, 1, 0]), -0.4);
        assert_eq!(m.theta_at(&[0, 0, 1]), -3.0);
    }

    fn state(lo: f64) -> MasterState {
        MasterState {
            n0: 6,
            rows: vec![],
            feasibility: vec![],
            optimality: vec![],
            theta_lo: lo,
            theta_hi: 0.0,
            ub: f64::INFINITY,
            lb: f64::NEG_INFINITY,
            lb_certified: false,
            iteration: 0,
            incumbent: None,
        }
    }

    #[test]
    fn tightening_shrinks_big_coefficients() {
        let m = state(-6.0);
        let c = m.tighten(Cut::new(CutKind::Optimality, 0.0, &[-3e5, -1.0, 0.0, -40.0], 1));
        assert_eq!(c.beta, vec![(0, -6.0), (1, -1.0), (3, -6.0)]);
    }

    proptest::proptest! {
        #[test]
        fn tightening_keeps_the_cut_set(
            alpha in -5.0f64..5.0,
            beta in proptest::collection::vec(-1e4f64..3.0, 6),
            lo in -8.0f64..-0.5,
            feas in proptest::bool::ANY,
        ) {
            let kind = if feas { CutKind::Feasibility } else { CutKind::Optimality };
            let m = state(lo);
            let a = Cut::new(kind, alpha, &beta, 1);
            let b = m.tighten(a.clone());
            for mask in 0u8..64 {
                let w: Vec<u8> = (0..6).map(|i| (mask >> i) & 1).collect();
                for k in 0..=16 {
                    let theta = if feas { 0.0 } else { lo * f64::from(k) / 16.0 };
                    proptest::prop_assert_eq!(a.value(&w) <= theta + 1e-9, b.value(&w) <= theta + 1e-9, "{:?} at {}", w, theta);
                }
            }
        }
    }
}
