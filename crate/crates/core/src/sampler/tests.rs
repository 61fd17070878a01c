use super::*;
use crate::benders::{Cut, CutKind, MasterState};
use crate::milp::{Family, Row, RowTag};
use crate::qubo::{build_master_qubo, encode_theta, PenaltyConfig};

fn random_model(seed: u64, n: usize) -> QuboModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = QuboModel::new(n);
    for i in 0..n {
        m.linear[i] = rng.gen_range(-2.0..2.0);
        for j in i + 1..n {
            if rng.gen_bool(0.5) {
                m.add(i, j, rng.gen_range(-2.0..2.0));
            }
        }
    }
    m
}

fn toy_master(seed: u64) -> MasterState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let row = |w: Vec<(usize, f64)>, rhs: f64| Row {
        q: vec![],
        w,
        rhs,
        tag: RowTag { family: Family::SingleU2s, element: "toy".into() },
    };
    let mut m = MasterState {
        n0: 3,
        rows: vec![row(vec![(0, 1.0), (1, 1.0), (2, 1.0)], 1.0), row(vec![(0, -1.0), (1, -1.0), (2, -1.0)], -1.0)],
        feasibility: vec![],
        optimality: vec![],
        theta_lo: -3.0,
        theta_hi: 0.0,
        ub: f64::INFINITY,
        lb: f64::NEG_INFINITY,
        lb_certified: false,
        iteration: 0,
        incumbent: None,
    };
    let beta: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..1.5)).collect();
    m.add_cut(Cut::new(CutKind::Optimality, -2.0, &beta, 1));
    m
}

#[test]
fn single_positive_bit_stays_off() {
    let mut m = QuboModel::new(1);
    m.linear[0] = 5.0;
    let s = anneal(&m, &AnnealSchedule::new(20, 50), 1).unwrap();
    assert_eq!(s.samples.len(), 1);
    assert_eq!(s.samples[0].bits, vec![0]);
    assert_eq!(s.samples[0].count, 20);
}

#[test]
fn anneal_finds_twelve_bit_ground_states() {
    let mut hits = 0;
    for seed in 0..100 {
        let m = random_model(1000 + seed, 12);
        let (_, e) = brute_force(&m).unwrap();
        let s = anneal(&m, &AnnealSchedule::new(4, 2000), seed).unwrap();
        let best = s.best().unwrap().energy;
        assert!(best >= e - 1e-9, "anneal below the exact minimum");
        if (best - e).abs() <= 1e-9 {
            hits += 1;
        }
    }
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn anneal_is_deterministic() {
    let m = random_model(4, 30);
    let a = anneal(&m, &AnnealSchedule::new(16, 100), 9).unwrap();
    let b = anneal(&m, &AnnealSchedule::new(16, 100), 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.reads(), 16);
    for s in &a.samples {
        assert!((s.energy - m.energy(&s.bits)).abs() < 1e-9);
    }
    assert!(a.samples.windows(2).all(|w| w[0].energy <= w[1].energy));
}

#[test]
fn schedule_is_validated() {
    let m = random_model(4, 3);
    assert!(anneal(&m, &AnnealSchedule::new(0, 10), 1).is_err());
    let bad = AnnealSchedule { reads: 1, sweeps: 10, t_start: Some(1.0), t_end: Some(2.0) };
    assert!(anneal(&m, &bad, 1).is_err());
}

#[test]
fn brute_force_small_cases() {
    let mut empty = QuboModel::new(0);
    empty.offset = 2.5;
    assert_eq!(brute_force(&empty).unwrap(), (vec![], 2.5));
    let mut m = QuboModel::new(2);
    m.offset = 0.5;
    m.linear = vec![1.0, -1.0];
    assert_eq!(brute_force(&m).unwrap(), (vec![0, 1], -0.5));
    // All-zero model: every string ties, the smallest wins.
    assert_eq!(brute_force(&QuboModel::new(9)).unwrap().0, vec![0; 9]);
    assert!(matches!(brute_force(&QuboModel::new(27)), Err(Error::SizeGuard { bits: 27, limit: 26 })));
}

#[test]
fn brute_force_matches_plain_enumeration() {
    for seed in 0..10 {
        let m = random_model(seed, 10);
        let mut best = f64::INFINITY;
        for mask in 0u32..1 << 10 {
            let x: Vec<u8> = (0..10).map(|i| ((mask >> i) & 1) as u8).collect();
            best = best.min(m.energy(&x));
        }
        assert!((brute_force(&m).unwrap().1 - best).abs() < 1e-9);
    }
}

#[test]
fn brute_force_bounds_anneal_on_master_models() {
    for seed in 0..10 {
        let ms = toy_master(seed);
        let enc = encode_theta(ms.theta_lo, ms.theta_hi, 4).unwrap();
        let m = build_master_qubo(&ms, &PenaltyConfig::default_for(&enc), &enc).unwrap();
        assert!(m.n <= 22, "{} bits", m.n);
        let (_, e) = brute_force(&m).unwrap();
        let s = anneal(&m, &AnnealSchedule::new(20, 200), seed).unwrap();
        for x in &s.samples {
            assert!(x.energy >= e - 1e-9);
        }
    }
}

#[test]
fn candidates_are_distinct_and_feasible() {
    let ms = toy_master(3);
    let enc = encode_theta(ms.theta_lo, ms.theta_hi, 4).unwrap();
    let m = build_master_qubo(&ms, &PenaltyConfig::default_for(&enc), &enc).unwrap();
    let s = anneal(&m, &AnnealSchedule::new(64, 200), 5).unwrap();
    let c3 = extract_candidates(&s, &m, 3).unwrap();
    assert!(!c3.is_empty() && c3.len() <= 3);
    for (i, c) in c3.iter().enumerate() {
        assert!(ms.rows_satisfied(&c.w));
        assert!(c3[..i].iter().all(|d| d.w != c.w));
    }
    let c1 = extract_candidates(&s, &m, 1).unwrap();
    assert_eq!(c1, c3[..1].to_vec());
    assert!(extract_candidates(&s, &m, 0).is_err());
}

#[test]
fn all_infeasible_samples_give_no_candidates() {
    let ms = toy_master(3);
    let enc = encode_theta(ms.theta_lo, ms.theta_hi, 4).unwrap();
    let m = build_master_qubo(&ms, &PenaltyConfig::default_for(&enc), &enc).unwrap();
    let mut bad = vec![0u8; m.n];
    bad[0] = 1;
    bad[1] = 1;
    let s = SampleSet::from_reads(&m, vec![vec![0; m.n], bad], 0);
    assert!(matches!(extract_candidates(&s, &m, 2), Err(Error::EmptyCandidates)));
}

/// ±1 couplings on a periodic grid, a frustrated but sparse landscape.
fn grid_glass(seed: u64, side: usize) -> QuboModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = side * side;
    let mut m = QuboModel::new(n);
    for r in 0..side {
        for c in 0..side {
            let i = r * side + c;
            for j in [r * side + (c + 1) % side, ((r + 1) % side) * side + c] {
                let jv = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                // s_i s_j with s = 2x - 1
                m.add(i.min(j), i.max(j), 4.0 * jv);
                m.linear[i] -= 2.0 * jv;
                m.linear[j] -= 2.0 * jv;
            }
        }
    }
    m
}

#[test]
fn more_sweeps_do_not_hurt_the_median() {
    let m = grid_glass(77, 20);
    let mut last = f64::INFINITY;
    for sweeps in [8, 16, 32, 64, 128, 256] {
        let mut best: Vec<f64> =
            (0..20).map(|seed| anneal(&m, &AnnealSchedule::new(1, sweeps), seed).unwrap().best().unwrap().energy).collect();
        best.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = (best[9] + best[10]) / 2.0;
        assert!(median <= last + 1e-9, "sweeps {sweeps}: {median} > {last}");
        last = median;
    }
}

#[test]
fn csv_lists_every_sample() {
    let mut m = QuboModel::new(2);
    m.linear = vec![1.0, -1.0];
    let s = SampleSet::from_reads(&m, vec![vec![0, 1], vec![1, 1], vec![0, 1]], 3);
    assert_eq!(s.to_csv(), "bitstring,energy,count\n01,-1.0,2\n11,0.0,1\n");
    assert_eq!(s.median_energy(), Some(-1.0));
}

#[test]
fn external_sampler_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = QuboModel::new(2);
    m.linear = vec![1.0, -1.0];
    let ext = ExternalSampler::new(
        "sh",
        vec!["-c".into(), "test -s {qubo} && printf '10\\n01,whatever\\n' > {out}".into()],
        dir.path(),
    );
    let s = ext.sample(&m, 1).unwrap();
    assert_eq!(s.best().unwrap().bits, vec![0, 1]);
    assert_eq!(s.reads(), 2);
    let broken = ExternalSampler::new("sh", vec!["-c".into(), "printf '1x\\n' > {out}".into()], dir.path());
    assert!(matches!(broken.sample(&m, 2), Err(Error::Parse { line: 1, .. })));
    let failing = ExternalSampler::new("sh", vec!["-c".into(), "exit 3".into()], dir.path());
    assert!(matches!(failing.sample(&m, 3), Err(Error::External(_))));
}
