use super::*;
use crate::error::Error;
use crate::mfteg::build_mfteg;
use crate::scenario::synth::{generate_synthetic, paper_shape, SynthParams};

fn build(s: &Scenario) -> (MfTeg, MilpProblem) {
    let g = build_mfteg(s).unwrap();
    let p = assemble(&g, s);
    (g, p)
}

#[test]
fn minimal_binary_count() {
    let s = generate_synthetic(&SynthParams::minimal()).unwrap();
    let (_, p) = build(&s);
    assert_eq!(p.n0(), 3);
}

/// Counts from tests/oracles/count_rows.py on the same scenario.
fn expected_families(with_caps: bool) -> Vec<(Family, usize)> {
    use Family::*;
    let mut v = vec![(SingleU2s, 240), (SingleS2u, 240)];
    if with_caps {
        v.extend([(CapU2s, 30), (CapS2u, 30)]);
    }
    v.extend([
        (SinglePlacement, 16),
        (U2sCapacity, 152),
        (S2uCapacity, 120),
        (S2sCapacity, 1080),
        (VirtualInCapacity, 720),
        (VirtualOutCapacity, 720),
        (Computation, 180),
        (Storage, 348),
        (ConservationNonFunction, 2160),
        (ConservationSub, 2160),
        (Scaling, 720),
        (SourceRestriction, 304),
        (DestRestriction, 240),
    ]);
    v
}

#[test]
fn paper_shape_counts_match_counting_script() {
    let s = paper_shape(1).unwrap();
    let (_, p) = build(&s);
    assert_eq!((p.m0(), p.n0()), (19392, 296));
    assert_eq!(p.family_counts(), expected_families(false));
}

#[test]
fn tight_user_caps_add_cap_rows() {
    let mut s = paper_shape(1).unwrap();
    for sat in &mut s.satellites {
        sat.u2s_user_cap = Some(1);
        sat.s2u_user_cap = Some(1);
    }
    let (_, p) = build(&s);
    assert_eq!((p.m0(), p.n0()), (19392, 296));
    assert_eq!(p.family_counts(), expected_families(true));
}

#[test]
fn equalities_land_in_the_right_blocks() {
    let s = paper_shape(2).unwrap();
    let (_, p) = build(&s);
    use Family::*;
    for r in &p.eq {
        assert!(matches!(
            r.tag.family,
            ConservationNonFunction | ConservationSub | Scaling | SourceRestriction | DestRestriction
        ));
        assert!(!r.q.is_empty());
    }
    for r in &p.bin {
        assert!(r.q.is_empty());
        assert!(matches!(r.tag.family, SingleU2s | SingleS2u | CapU2s | CapS2u | SinglePlacement));
    }
    for r in &p.ineq {
        assert!(!r.q.is_empty());
    }
}

#[test]
fn zero_flow_is_feasible() {
    for seed in [1, 2, 3] {
        let s = paper_shape(seed).unwrap();
        let (g, p) = build(&s);
        let w = initial_w(&p, &g, &s).unwrap();
        let ev = evaluate(&p, &vec![0.0; p.m0()], &w).unwrap();
        assert!(ev.feasible, "{:?}", ev.violations.first());
        assert_eq!(ev.objective, 0.0);
    }
}

#[test]
fn broken_association_is_reported() {
    let s = paper_shape(1).unwrap();
    let (g, p) = build(&s);
    let mut w = initial_w(&p, &g, &s).unwrap();
    for (j, b) in p.vars.bin.iter().enumerate() {
        if let BinVar::PhiU2s { flow: 0, slot: 1, .. } = b {
            w[j] = 0;
        }
    }
    let ev = evaluate(&p, &vec![0.0; p.m0()], &w).unwrap();
    assert!(!ev.feasible);
    assert_eq!(ev.violations.len(), 1);
    assert_eq!(ev.violations[0].tag.to_string(), "SingleU2s[l=1 t=2 ge]");
    assert_eq!(ev.violations[0].residual, 1.0);
}

#[test]
fn evaluate_checks_dimensions() {
    let s = generate_synthetic(&SynthParams::minimal()).unwrap();
    let (_, p) = build(&s);
    assert!(matches!(evaluate(&p, &[0.0], &[0, 0, 0]), Err(Error::Dimension(_))));
}

#[test]
fn scaling_rows_have_two_entries() {
    let s = paper_shape(1).unwrap();
    let (_, p) = build(&s);
    for r in p.eq.iter().filter(|r| r.tag.family == Family::Scaling) {
        assert_eq!(r.q.len(), 2);
        let (y, z) = (r.q[0], r.q[1]);
        assert_eq!(y.1, 1.0);
        let (ContVar::Y { flow, stage, vfn, slot }, ContVar::Z { flow: f2, stage: k2, vfn: v2, slot: t2 }) =
            (p.vars.cont[y.0], p.vars.cont[z.0])
        else {
            panic!("scaling row over {:?}", r.q);
        };
        assert_eq!((flow, stage, vfn, slot), (f2, k2, v2, t2));
        assert_eq!(z.1, -s.flows[flow].scaling_factors[stage - 1]);
    }
}

#[test]
fn every_binary_is_in_a_binary_row() {
    let s = paper_shape(4).unwrap();
    let (_, p) = build(&s);
    let mut seen = vec![false; p.n0()];
    for r in &p.bin {
        for &(j, _) in &r.w {
            seen[j] = true;
        }
    }
    assert!(seen.iter().all(|&b| b));
}

#[test]
fn every_column_is_used() {
    let s = paper_shape(1).unwrap();
    let (_, p) = build(&s);
    let mut seen = vec![false; p.m0()];
    for r in p.coupled_rows() {
        for &(j, _) in &r.q {
            seen[j] = true;
        }
    }
    assert!(seen.iter().all(|&b| b));
}

#[test]
fn objective_only_on_final_downlinks() {
    let s = paper_shape(1).unwrap();
    let (g, p) = build(&s);
    for (j, &c) in p.c.iter().enumerate() {
        let want = match p.vars.cont[j] {
            ContVar::X { flow, stage, link } => {
                g.links[link].class == Some(crate::mfteg::TrClass::S2u) && stage == g.chain_len[flow]
            }
            _ => false,
        };
        assert_eq!(c, if want { 1.0 } else { 0.0 });
    }
}

#[test]
fn assembly_is_deterministic() {
    let s = paper_shape(3).unwrap();
    let a = build(&s).1.dump_triplets();
    let s2 = Scenario::from_json(&s.to_json()).unwrap();
    let b = build(&s2).1.dump_triplets();
    assert_eq!(a, b);
}

#[test]
fn optimum_respects_capacity_bound() {
    let s = paper_shape(1).unwrap();
    let (g, p) = build(&s);
    let w = initial_w(&p, &g, &s).unwrap();
    let crate::lp::SubproblemOutcome::Optimality { value, q, .. } = crate::lp::solve_subproblem(&p, &w).unwrap() else {
        panic!("subproblem infeasible at the greedy point");
    };
    assert!(-value <= p.ub_cap + 1e-9);
    let ev = evaluate(&p, &q, &w).unwrap();
    assert!(ev.feasible, "{:?}", ev.violations.first());
    assert!((ev.objective + value).abs() < 1e-6 * (1.0 + value.abs()));
    let rep = decode_solution(&p, &q, &w).unwrap();
    let total: f64 = rep.delivered.iter().sum();
    assert!((total - rep.objective).abs() < 1e-6 * (1.0 + total));
}

#[test]
fn minimal_route_follows_the_only_path() {
    let s = generate_synthetic(&SynthParams::minimal()).unwrap();
    let (g, p) = build(&s);
    let w = initial_w(&p, &g, &s).unwrap();
    assert_eq!(w, vec![1, 1, 1]);
    let crate::lp::SubproblemOutcome::Optimality { q, .. } = crate::lp::solve_subproblem(&p, &w).unwrap() else {
        panic!("infeasible");
    };
    let rep = decode_solution(&p, &q, &w).unwrap();
    assert_eq!(rep.association, vec![vec![(Some(0), Some(0))]]);
    assert_eq!(rep.placement, vec![vec![None, Some(0)]]);
    // uplink -> into the function -> out of it -> downlink.
    let kinds: Vec<&str> = rep
        .flows
        .iter()
        .map(|f| match f.var {
            ContVar::X { stage: 0, .. } => "up",
            ContVar::Y { .. } => "in",
            ContVar::Z { .. } => "out",
            ContVar::X { stage: 1, .. } => "down",
            _ => "other",
        })
        .collect();
    assert_eq!(kinds, ["up", "down", "in", "out"]);
    let up = 0.037886777477228725;
    let beta = s.flows[0].scaling_factors[0];
    approx::assert_relative_eq!(rep.objective, up / beta, max_relative = 1e-9);
}

#[test]
fn zero_solution_decodes_empty() {
    let s = paper_shape(1).unwrap();
    let (g, p) = build(&s);
    let w = initial_w(&p, &g, &s).unwrap();
    let rep = decode_solution(&p, &vec![0.0; p.m0()], &w).unwrap();
    assert!(rep.flows.is_empty());
    assert_eq!(rep.objective, 0.0);
}

#[test]
fn infeasible_decode_is_rejected() {
    let s = generate_synthetic(&SynthParams::minimal()).unwrap();
    let (_, p) = build(&s);
    assert!(decode_solution(&p, &vec![0.0; p.m0()], &[0, 0, 0]).is_err());
}

#[test]
fn hu_fixes_the_greedy_association() {
    let s = paper_shape(1).unwrap();
    let (g, p) = build(&s);
    let w = initial_w(&p, &g, &s).unwrap();
    let r = restrict_baseline(&p, Scheme::Hu, &g, &s).unwrap();
    assert!(r.vars.bin.iter().all(|b| matches!(b, BinVar::Lambda { .. })));
    for (b, v) in &r.fixed {
        let j = p.vars.bin_index(b).unwrap();
        assert_eq!(w[j], *v, "{b:?}");
    }
    assert_eq!(r.fixed.len() + r.n0(), p.n0());
}

#[test]
fn hu_picks_the_strongest_visible_satellite() {
    let s = paper_shape(1).unwrap();
    let (g, _) = build(&s);
    let assoc = greedy_association(&g, &s).unwrap();
    // Paper shape keeps at most two users per satellite, so caps never bind
    // and the choice is the plain argmax of SNR (shortest slant range).
    for l in 0..s.num_flows() {
        for t in 0..s.horizon {
            let a = s.source_node(l);
            let best = (0..s.num_satellites())
                .filter(|&i| s.visibility.links[t][a][s.sat_node(i)] == 1)
                .min_by(|&i, &j| {
                    let (ri, rj) = (s.visibility.ranges_m[t][a][s.sat_node(i)], s.visibility.ranges_m[t][a][s.sat_node(j)]);
                    ri.partial_cmp(&rj).unwrap().then(i.cmp(&j))
                })
                .unwrap();
            assert_eq!(assoc[l][t].0, best, "flow {l} slot {t}");
        }
    }
}

#[test]
fn lvnf_keeps_the_smallest_function() {
    let s = paper_shape(1).unwrap();
    let (g, p) = build(&s);
    let r = restrict_baseline(&p, Scheme::Lvnf, &g, &s).unwrap();
    for i in 0..s.num_satellites() {
        let vf = g.vfns_of(i);
        if vf.is_empty() {
            continue;
        }
        let min_f = vf.iter().map(|&v| g.vfns[v].function).min().unwrap();
        for &v in vf {
            let kept = r.vars.bin.iter().any(|b| matches!(b, BinVar::Lambda { vfn, .. } if *vfn == v));
            let has_lambda = p.vars.bin.iter().any(|b| matches!(b, BinVar::Lambda { vfn, .. } if *vfn == v));
            if has_lambda {
                assert_eq!(kept, g.vfns[v].function == min_f, "sat {i} vfn {v}");
            }
        }
    }
}

#[test]
fn fvnf_pins_every_stage() {
    let s = paper_shape(1).unwrap();
    let (g, p) = build(&s);
    let r = restrict_baseline(&p, Scheme::Fvnf, &g, &s).unwrap();
    assert!(r.vars.bin.iter().all(|b| !matches!(b, BinVar::Lambda { .. })));
    for l in 0..s.num_flows() {
        for k in 1..=g.chain_len[l] {
            let ones = r
                .fixed
                .iter()
                .filter(|(b, v)| *v == 1 && matches!(b, BinVar::Lambda { flow, stage, .. } if *flow == l && *stage == k))
                .count();
            assert_eq!(ones, 1);
        }
    }
}

#[test]
fn fvnf_without_capable_node_names_the_step() {
    let mut s = paper_shape(1).unwrap();
    let f = s.flows[0].sfc[0];
    for sat in &mut s.satellites {
        sat.offered_functions.retain(|&x| x != f);
    }
    let g = build_mfteg(&s).unwrap();
    let p = assemble(&g, &s);
    let err = restrict_baseline(&p, Scheme::Fvnf, &g, &s).unwrap_err();
    assert!(err.to_string().contains("flow1 stage 1"), "{err}");
}
