//! Sparse left-looking LU with partial pivoting and a product-form eta
//! file for basis updates between refactorizations.

const NONE: usize = usize::MAX;
const PIVOT_TOL: f64 = 1e-11;
const DROP_TOL: f64 = 1e-14;

#[derive(Debug)]
pub struct Singular {
    /// Basis positions that found no pivot, paired with rows left unpivoted.
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct Lu {
    m: usize,
    /// Unit lower factor, columns in pivot order, row indices in pivot space.
    l: Vec<Vec<(usize, f64)>>,
    /// Strict upper factor, columns in pivot order, row indices in pivot space.
    u: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
    /// Row to pivot step.
    pinv: Vec<usize>,
    /// Pivot step to basis position.
    q: Vec<usize>,
}

struct Eta {
    p: usize,
    pivot: f64,
    rest: Vec<(usize, f64)>,
}

impl Lu {
    /// Factor the m x m matrix whose column `p` is `col(p)`.
    pub fn factor<'a, F>(m: usize, col: F) -> Result<Lu, Singular>
    where
        F: Fn(usize) -> Vec<(usize, f64)> + 'a,
    {
        let cols: Vec<Vec<(usize, f64)>> = (0..m).map(&col).collect();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| cols[p].len());

        let mut pinv = vec![NONE; m];
        let mut prow = Vec::with_capacity(m);
        let mut l: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
        let mut u: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
        let mut diag = Vec::with_capacity(m);
        let mut q = Vec::with_capacity(m);
        let mut singular_pos = Vec::new();

        let mut x = vec![0.0f64; m];
        let mut row_mark = vec![0u32; m];
        let mut node_mark = vec![0u32; m];
        let mut stamp = 0u32;
        let mut touched: Vec<usize> = Vec::new();
        let mut post: Vec<usize> = Vec::new();
        let mut stack: Vec<(usize, usize)> = Vec::new();

        for &p in &order {
            stamp += 1;
            touched.clear();
            post.clear();
            for &(r, v) in &cols[p] {
                if row_mark[r] != stamp {
                    row_mark[r] = stamp;
                    touched.push(r);
                }
                x[r] += v;
            }
            // Reach of the column pattern in the graph of L.
            for idx in 0..cols[p].len() {
                let r = cols[p][idx].0;
                let j0 = pinv[r];
                if j0 == NONE || node_mark[j0] == stamp {
                    continue;
                }
                node_mark[j0] = stamp;
                stack.push((j0, 0));
                while let Some(top) = stack.last_mut() {
                    let (j, next) = *top;
                    if next < l[j].len() {
                        top.1 += 1;
                        let row = l[j][next].0;
                        let j2 = pinv[row];
                        if j2 != NONE && node_mark[j2] != stamp {
                            node_mark[j2] = stamp;
                            stack.push((j2, 0));
                        }
                    } else {
                        post.push(j);
                        stack.pop();
                    }
                }
            }
            for &j in post.iter().rev() {
                let xj = x[prow[j]];
                if xj == 0.0 {
                    continue;
                }
                for &(row, lv) in &l[j] {
                    if row_mark[row] != stamp {
                        row_mark[row] = stamp;
                        touched.push(row);
                    }
                    x[row] -= lv * xj;
                }
            }
            let mut best = NONE;
            let mut best_abs = 0.0;
            for &r in &touched {
                if pinv[r] == NONE {
                    let a = x[r].abs();
                    if a > best_abs || (a == best_abs && a > 0.0 && r < best) {
                        best_abs = a;
                        best = r;
                    }
                }
            }
            let mut ucol: Vec<(usize, f64)> = Vec::new();
            for &j in &post {
                let v: f64 = x[prow[j]];
                if v.abs() > DROP_TOL {
                    ucol.push((j, v));
                }
            }
            if best == NONE || best_abs < PIVOT_TOL {
                singular_pos.push(p);
                for &r in &touched {
                    x[r] = 0.0;
                }
                continue;
            }
            let k = prow.len();
            let piv = x[best];
            let mut lcol = Vec::new();
            for &r in &touched {
                if pinv[r] == NONE && r != best && x[r].abs() > DROP_TOL {
                    lcol.push((r, x[r] / piv));
                }
            }
            for &r in &touched {
                x[r] = 0.0;
            }
            pinv[best] = k;
            prow.push(best);
            l.push(lcol);
            ucol.sort_unstable_by_key(|e| e.0);
            u.push(ucol);
            diag.push(piv);
            q.push(p);
        }

        if !singular_pos.is_empty() {
            let free_rows: Vec<usize> = (0..m).filter(|&r| pinv[r] == NONE).collect();
            return Err(Singular { pairs: singular_pos.into_iter().zip(free_rows).collect() });
        }
        for col in &mut l {
            for e in col.iter_mut() {
                e.0 = pinv[e.0];
            }
        }
        Ok(Lu { m, l, u, diag, pinv, q })
    }

    /// Solve B x = a; `a` is indexed by row, the result by basis position.
    pub fn ftran(&self, a: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (i, &v) in a.iter().enumerate() {
            y[self.pinv[i]] = v;
        }
        for j in 0..m {
            let v = y[j];
            if v != 0.0 {
                for &(i, lv) in &self.l[j] {
                    y[i] -= lv * v;
                }
            }
        }
        for j in (0..m).rev() {
            y[j] /= self.diag[j];
            let v = y[j];
            if v != 0.0 {
                for &(i, uv) in &self.u[j] {
                    y[i] -= uv * v;
                }
            }
        }
        let mut x = vec![0.0; m];
        for k in 0..m {
            x[self.q[k]] = y[k];
        }
        x
    }

    /// Solve Bᵀ y = c; `c` is indexed by basis position, the result by row.
    pub fn btran(&self, c: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut w = vec![0.0; m];
        for j in 0..m {
            let mut s = c[self.q[j]];
            for &(i, uv) in &self.u[j] {
                s -= uv * w[i];
            }
            w[j] = s / self.diag[j];
        }
        for j in (0..m).rev() {
            let mut s = w[j];
            for &(i, lv) in &self.l[j] {
                s -= lv * w[i];
            }
            w[j] = s;
        }
        let mut y = vec![0.0; m];
        for (i, &k) in self.pinv.iter().enumerate() {
            y[i] = w[k];
        }
        y
    }
}

/// LU of a starting basis plus the eta factors of later column swaps.
pub struct BasisFactor {
    lu: Lu,
    etas: Vec<Eta>,
}

impl BasisFactor {
    pub fn new(lu: Lu) -> Self {
        BasisFactor { lu, etas: Vec::new() }
    }

    pub fn updates(&self) -> usize {
        self.etas.len()
    }

    pub fn ftran(&self, a: &[f64]) -> Vec<f64> {
        let mut x = self.lu.ftran(a);
        for e in &self.etas {
            let xp = x[e.p] / e.pivot;
            x[e.p] = xp;
            if xp != 0.0 {
                for &(i, a) in &e.rest {
                    x[i] -= a * xp;
                }
            }
        }
        x
    }

    pub fn btran(&self, c: &[f64]) -> Vec<f64> {
        let mut c = c.to_vec();
        for e in self.etas.iter().rev() {
            let mut s = c[e.p];
            for &(i, a) in &e.rest {
                s -= a * c[i];
            }
            c[e.p] = s / e.pivot;
        }
        self.lu.btran(&c)
    }

    /// Record that basis position `p` was replaced by a column whose FTRAN is `alpha`.
    pub fn update(&mut self, p: usize, alpha: &[f64]) {
        let rest = alpha.iter().enumerate().filter(|&(i, &a)| i != p && a.abs() > DROP_TOL).map(|(i, &a)| (i, a)).collect();
        self.etas.push(Eta { p, pivot: alpha[p], rest });
    }
}
