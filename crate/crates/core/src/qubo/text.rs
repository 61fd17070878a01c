//! Coordinate text format for external samplers:
//!
//! ```text
//! # sinflow-qubo v1
//! n 5
//! offset 1.5
//! layout 3 3 0 1 0
//! 0 0 -1
//! 0 2 2.5
//! ```
//!
//! `layout` is `n_w theta_start neg pos frac`, with `- - -` when there is no θ.

use std::collections::BTreeMap;

use super::{Layout, QuboModel, ThetaEncoding};
use crate::error::{Error, Result};

pub const HEADER: &str = "# sinflow-qubo v1";

pub fn write_qubo(model: &QuboModel) -> String {
    let (q, offset) = model.coefficients();
    let l = &model.layout;
    let mut s = format!("{HEADER}\nn {}\noffset {:?}\n", model.n, offset);
    match &l.theta {
        Some(t) => s += &format!("layout {} {} {} {} {}\n", l.n_w, l.theta_start, t.neg_int, t.pos_int, t.pos_frac),
        None => s += &format!("layout {} {} - - -\n", l.n_w, l.theta_start),
    }
    for ((i, j), v) in q {
        s += &format!("{i} {j} {v:?}\n");
    }
    s
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, column: 1, message: message.into() }
}

pub fn read_qubo(text: &str) -> Result<QuboModel> {
    let mut n = None;
    let mut offset = 0.0;
    let mut layout = None;
    let mut q = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = t.split_whitespace().collect();
        let num = |s: &str| s.parse::<f64>().map_err(|e| perr(line, format!("{s:?}: {e}")));
        let int = |s: &str| s.parse::<usize>().map_err(|e| perr(line, format!("{s:?}: {e}")));
        match f[0] {
            "n" if f.len() == 2 => n = Some(int(f[1])?),
            "offset" if f.len() == 2 => offset = num(f[1])?,
            "layout" if f.len() == 6 => {
                let theta = if f[3] == "-" {
                    None
                } else {
                    Some(ThetaEncoding::new(int(f[3])? as u32, int(f[4])? as u32, int(f[5])? as u32))
                };
                layout = Some(Layout { n_w: int(f[1])?, theta_start: int(f[2])?, theta });
            }
            _ if f.len() == 3 => {
                let (i, j, v) = (int(f[0])?, int(f[1])?, num(f[2])?);
                *q.entry((i, j)).or_insert(0.0) += v;
            }
            _ => return Err(perr(line, format!("unrecognised line {t:?}"))),
        }
    }
    let n = n.ok_or_else(|| perr(1, "missing `n` line"))?;
    let mut m = QuboModel::from_coefficients(n, offset, &q)?;
    if let Some(l) = layout {
        m.layout = l;
    }
    Ok(m)
}
