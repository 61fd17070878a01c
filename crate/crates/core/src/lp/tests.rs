use super::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, PartialEq)]
pub(crate) enum Oracle {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

/// Dense two-phase tableau simplex with Bland's rule.
pub(crate) fn tableau_oracle(p: &LpProblem) -> Oracle {
    let n = p.n;
    let mut rows: Vec<(Vec<f64>, f64, bool)> = Vec::new();
    for (r, &b) in p.ineq.iter().zip(&p.b_ineq) {
        let mut a = vec![0.0; n];
        for &(j, v) in r {
            a[j] += v;
        }
        rows.push((a, b, true));
    }
    for (j, &u) in p.upper.iter().enumerate() {
        if u.is_finite() {
            let mut a = vec![0.0; n];
            a[j] = 1.0;
            rows.push((a, u, true));
        }
    }
    for (r, &b) in p.eq.iter().zip(&p.b_eq) {
        let mut a = vec![0.0; n];
        for &(j, v) in r {
            a[j] += v;
        }
        rows.push((a, b, false));
    }
    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.2).count();
    let width = n + n_slack + m + 1;
    let mut t = vec![vec![0.0; width]; m];
    let mut basis = vec![0usize; m];
    let mut s = 0;
    for (i, (a, b, le)) in rows.iter().enumerate() {
        t[i][..n].copy_from_slice(a);
        if *le {
            t[i][n + s] = 1.0;
            s += 1;
        }
        t[i][width - 1] = *b;
        if *b < 0.0 {
            for v in t[i].iter_mut() {
                *v = -*v;
            }
        }
        t[i][n + n_slack + i] = 1.0;
        basis[i] = n + n_slack + i;
    }
    let pivot = |t: &mut Vec<Vec<f64>>, r: usize, c: usize| {
        let pv = t[r][c];
        for v in t[r].iter_mut() {
            *v /= pv;
        }
        for i in 0..t.len() {
            if i != r && t[i][c] != 0.0 {
                let f = t[i][c];
                for k in 0..width {
                    t[i][k] -= f * t[r][k];
                }
            }
        }
    };
    let run = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, cost: &[f64], allowed: usize| -> bool {
        loop {
            let mut enter = None;
            for j in 0..allowed {
                if basis.contains(&j) {
                    continue;
                }
                let d = cost[j] - (0..m).map(|i| cost[basis[i]] * t[i][j]).sum::<f64>();
                if d < -1e-10 {
                    enter = Some(j);
                    break;
                }
            }
            let Some(q) = enter else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                if t[i][q] > 1e-10 {
                    let r = t[i][width - 1] / t[i][q];
                    match leave {
                        None => leave = Some((i, r)),
                        Some((li, lr)) => {
                            if r < lr - 1e-12 || (r <= lr + 1e-12 && basis[i] < basis[li]) {
                                leave = Some((i, r));
                            }
                        }
                    }
                }
            }
            let Some((r, _)) = leave else { return false };
            pivot(t, r, q);
            basis[r] = q;
        }
    };
    let mut c1 = vec![0.0; width - 1];
    for v in c1.iter_mut().skip(n + n_slack) {
        *v = 1.0;
    }
    run(&mut t, &mut basis, &c1, width - 1);
    let infeas: f64 = (0..m).filter(|&i| basis[i] >= n + n_slack).map(|i| t[i][width - 1]).sum();
    if infeas > 1e-7 {
        return Oracle::Infeasible;
    }
    for i in 0..m {
        if basis[i] >= n + n_slack {
            if let Some(j) = (0..n + n_slack).find(|&j| t[i][j].abs() > 1e-9 && !basis.contains(&j)) {
                pivot(&mut t, i, j);
                basis[i] = j;
            }
        }
    }
    let mut c2 = vec![0.0; width - 1];
    c2[..n].copy_from_slice(&p.c);
    // Artificials left in the basis sit at zero on redundant rows; keep them out of pricing.
    if !run(&mut t, &mut basis, &c2, n + n_slack) {
        return Oracle::Unbounded;
    }
    let obj = (0..m).map(|i| c2[basis[i]] * t[i][width - 1]).sum();
    Oracle::Optimal(obj)
}

fn random_feasible(rng: &mut ChaCha8Rng, with_upper: bool) -> LpProblem {
    let n = rng.gen_range(1..=30);
    let mi = rng.gen_range(0..=30);
    let me = rng.gen_range(0..=n.min(8));
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
    let mut p = LpProblem::new(n);
    for j in 0..n {
        p.c[j] = rng.gen_range(-1.0..1.0);
    }
    let row = |rng: &mut ChaCha8Rng| -> (Vec<(usize, f64)>, f64) {
        let mut r: Vec<(usize, f64)> = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.6) {
                r.push((j, rng.gen_range(-2.0..2.0)));
            }
        }
        let s = r.iter().map(|&(j, a)| a * x0[j]).sum();
        (r, s)
    };
    for _ in 0..mi {
        let (r, s) = row(rng);
        let slack = rng.gen_range(0.0..2.0);
        p.add_le(r, s + slack);
    }
    for _ in 0..me {
        let (r, s) = row(rng);
        p.add_eq(r, s);
    }
    p.add_le((0..n).map(|j| (j, 1.0)).collect(), 100.0);
    if with_upper {
        p.upper = x0.iter().map(|v| if rng.gen_bool(0.5) { v + rng.gen_range(0.0..2.0) } else { f64::INFINITY }).collect();
    }
    p
}

fn check_optimal(p: &LpProblem, x: &[f64], duals: &[f64], obj: f64) {
    assert!(p.primal_violation(x) < 1e-7, "primal violation {}", p.primal_violation(x));
    for &d in &duals[..p.ineq.len()] {
        assert!(d <= 1e-9, "inequality dual {d} must be nonpositive");
    }
    let dual = p.dual_objective(duals);
    assert!((dual - obj).abs() <= 1e-7 * (1.0 + obj.abs()), "gap {obj} vs {dual}");
    // Complementary slackness on inequality rows.
    for ((row, &b), &d) in p.ineq.iter().zip(&p.b_ineq).zip(duals) {
        let s: f64 = row.iter().map(|&(j, a)| a * x[j]).sum();
        assert!((d * (b - s)).abs() < 1e-7 * (1.0 + b.abs()));
    }
}

#[test]
fn one_dimensional() {
    let mut p = LpProblem::new(1);
    p.c[0] = -1.0;
    p.add_le(vec![(0, 1.0)], 5.0);
    match solve_lp(&p).unwrap() {
        LpOutcome::Optimal { x, duals, objective, .. } => {
            assert!((x[0] - 5.0).abs() < 1e-12);
            assert!((duals[0] + 1.0).abs() < 1e-12);
            assert!((objective + 5.0).abs() < 1e-12);
        }
        o => panic!("{o:?}"),
    }
}

#[test]
fn contradictory_bounds() {
    let mut p = LpProblem::new(1);
    p.add_le(vec![(0, 1.0)], 1.0);
    p.add_le(vec![(0, -1.0)], -2.0);
    match solve_lp(&p).unwrap() {
        LpOutcome::Infeasible { farkas } => {
            assert!(p.is_farkas_certificate(&farkas, 1e-9), "{farkas:?}");
            assert!(farkas.iter().all(|&v| v >= 0.0));
        }
        o => panic!("{o:?}"),
    }
}

#[test]
fn unbounded_ray() {
    let mut p = LpProblem::new(2);
    p.c = vec![-1.0, 0.0];
    p.add_le(vec![(0, 1.0), (1, -1.0)], 1.0);
    match solve_lp(&p).unwrap() {
        LpOutcome::Unbounded { ray } => {
            assert!(ray[0] > 0.0);
            assert!(ray[0] - ray[1] <= 1e-12);
        }
        o => panic!("{o:?}"),
    }
}

#[test]
fn hundred_random_lps_match_tableau() {
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    for case in 0..100 {
        let p = random_feasible(&mut rng, case % 3 == 0);
        let oracle = tableau_oracle(&p);
        match (solve_lp(&p).unwrap(), oracle) {
            (LpOutcome::Optimal { x, duals, objective, .. }, Oracle::Optimal(o)) => {
                assert!((objective - o).abs() <= 1e-7 * (1.0 + o.abs()), "case {case}: {objective} vs {o}");
                check_optimal(&p, &x, &duals, objective);
            }
            (got, want) => panic!("case {case}: {got:?} vs {want:?}"),
        }
    }
}

#[test]
fn random_infeasible_certificates() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut seen = 0;
    for _ in 0..60 {
        let n = rng.gen_range(1..8);
        let mut p = LpProblem::new(n);
        for _ in 0..rng.gen_range(1..10) {
            let r: Vec<(usize, f64)> = (0..n).map(|j| (j, rng.gen_range(-2.0..2.0))).collect();
            p.add_le(r, rng.gen_range(-3.0..1.0));
        }
        if rng.gen_bool(0.3) {
            p.add_eq((0..n).map(|j| (j, 1.0)).collect(), rng.gen_range(0.0..2.0));
        }
        let oracle = tableau_oracle(&p);
        match solve_lp(&p).unwrap() {
            LpOutcome::Infeasible { farkas } => {
                assert_eq!(oracle, Oracle::Infeasible);
                assert!(p.is_farkas_certificate(&farkas, 1e-9));
                seen += 1;
            }
            LpOutcome::Optimal { objective, .. } => match oracle {
                Oracle::Optimal(o) => assert!((o - objective).abs() <= 1e-7 * (1.0 + o.abs())),
                other => panic!("solver optimal, oracle {other:?}"),
            },
            LpOutcome::Unbounded { .. } => assert_eq!(oracle, Oracle::Unbounded),
        }
    }
    assert!(seen > 5, "only {seen} infeasible cases");
}

#[test]
fn degenerate_transportation() {
    // Highly degenerate assignment LP.
    let k = 12;
    let mut p = LpProblem::new(k * k);
    for i in 0..k {
        for j in 0..k {
            p.c[i * k + j] = -(((i * 7 + j * 3) % 5) as f64);
        }
    }
    for i in 0..k {
        p.add_eq((0..k).map(|j| (i * k + j, 1.0)).collect(), 1.0);
        p.add_le((0..k).map(|j| (j * k + i, 1.0)).collect(), 1.0);
    }
    let oracle = tableau_oracle(&p);
    match (solve_lp(&p).unwrap(), oracle) {
        (LpOutcome::Optimal { objective, x, duals, .. }, Oracle::Optimal(o)) => {
            assert!((objective - o).abs() < 1e-7);
            check_optimal(&p, &x, &duals, objective);
        }
        (g, w) => panic!("{g:?} {w:?}"),
    }
}

#[test]
fn deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = random_feasible(&mut rng, false);
    assert_eq!(solve_lp(&p).unwrap(), solve_lp(&p).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn strong_duality_on_random(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_feasible(&mut rng, seed % 2 == 0);
        if let LpOutcome::Optimal { x, duals, objective, .. } = solve_lp(&p).unwrap() {
            check_optimal(&p, &x, &duals, objective);
        } else {
            prop_assert!(false, "feasible bounded LP not solved");
        }
    }
}

#[test]
fn paper_shape_start_point_has_a_tight_dual() {
    use crate::mfteg::build_mfteg;
    use crate::milp::{assemble, initial_w};
    use crate::scenario::synth::paper_shape;
    let s = paper_shape(1).unwrap();
    let g = build_mfteg(&s).unwrap();
    let p = assemble(&g, &s);
    let w = initial_w(&p, &g, &s).unwrap();
    let super::SubproblemOutcome::Optimality { value, alpha, beta, .. } = super::solve_subproblem(&p, &w).unwrap() else {
        panic!("max-SNR start point should be feasible");
    };
    let dual = alpha + beta.iter().zip(&w).map(|(b, &x)| b * f64::from(x)).sum::<f64>();
    assert!((value - dual).abs() <= 1e-7 * (1.0 + value.abs()), "{value} vs {dual}");
    assert!(value < 0.0);
}
