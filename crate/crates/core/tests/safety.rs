mod common;

use cdspec::geometry::{min_pairwise_distance, Closure, Point, Simplex};
use cdspec::ltl::{build_psi, satisfies, PsiOptions};
use cdspec::safety::{check_eigenvalue_certificate, check_leader_only, compute_margins, deformation_eigenvalues, LeaderCheck, SafetyMargins};
use cdspec::scenario::Scenario;
use cdspec::Exec;
use common::oracle::jacobi_eigenvalues;
use common::{
    check_implications, compressed_scenario, deform_formation, obstacle_scenario, passage_scenario, random_deformation, rng, run, small_3d_json, small_scenario,
    stationary_scenario,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn eigenvalues_match_jacobi_on_gram_matrix(seed in any::<u64>(), dim in 2usize..=3) {
        let mut r = rng(seed);
        let q = random_deformation(&mut r, dim, 0.05, 4.0, None);
        let got = deformation_eigenvalues(&q).unwrap();
        let want: Vec<f64> = jacobi_eigenvalues(&(q.transpose() * &q)).iter().map(|x| x.sqrt()).collect();
        for (a, b) in got.iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-10, "{:?} vs {:?}", got, want);
        }
        prop_assert!(got.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn rigid_motions_meet_any_attainable_bound(seed in any::<u64>(), dim in 2usize..=3) {
        let mut r = rng(seed);
        let q = random_deformation(&mut r, dim, 1.0, 1.0 + f64::EPSILON, None);
        let ev = deformation_eigenvalues(&q).unwrap();
        let m = SafetyMargins::from_distances(2.7348, 1.5996, 0.25, r.random_range(0.0..1.1174));
        prop_assert!(m.lambda_min <= 1.0);
        prop_assert!(ev.iter().all(|&x| x >= m.lambda_min));
    }
}

#[test]
fn singular_jacobian_is_rejected() {
    assert!(deformation_eigenvalues(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0])).is_err());
    let ev = deformation_eigenvalues(&DMatrix::from_row_slice(2, 2, &[0.0, -3.0, 0.5, 0.0])).unwrap();
    assert!((ev[0] - 0.5).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
}

#[test]
fn reconstructed_formation_margins() {
    let m = compute_margins(&passage_scenario()).unwrap();
    assert!((m.d_b - 2.7348).abs() < 5e-5, "{}", m.d_b);
    assert!((m.d_s - 1.5996).abs() < 5e-5, "{}", m.d_s);
    assert_eq!(format!("{:.4}", m.delta_max), "1.1174");
    assert_eq!(format!("{:.4}", m.lambda_min), "0.3500");
    assert!(m.feasible);

    let infeasible = SafetyMargins::from_distances(2.7348, 1.5996, 0.25, 1.2);
    assert!(!infeasible.feasible);
    assert!(!SafetyMargins::from_distances(0.4, 1.0, 0.25, 0.01).feasible);
}

#[test]
fn certificate_conditions_prevent_collisions() {
    let s = passage_scenario();
    let m = compute_margins(&s).unwrap();
    let formation = s.reference_positions();
    let mut r = rng(21);
    for case in 0..2000 {
        let q = random_deformation(&mut r, 2, m.lambda_min, 2.5, None);
        let pts = deform_formation(&mut r, formation, &q, m.deviation_bound, None);
        let (d, pair) = min_pairwise_distance(&pts).unwrap();
        assert!(d >= 2.0 * m.agent_radius, "case {case}: pair {pair:?} at {d}");
    }
}

#[test]
fn compression_below_the_bound_is_flagged() {
    let s = compressed_scenario();
    let trace = run(&s);
    let m = compute_margins(&s).unwrap();
    let cert = check_eigenvalue_certificate(&trace, &m, Exec::Parallel);
    assert!(!cert.satisfied);
    assert!((cert.min_eigenvalue - 0.2).abs() < 1e-9, "{}", cert.min_eigenvalue);
    let w = cert.witness.unwrap();
    assert!(w.atom.contains("lambda_min"), "{}", w.atom);
    assert!(w.rhs < m.lambda_min);
}

#[test]
fn stationary_team_is_certified() {
    let s = stationary_scenario();
    let trace = run(&s);
    let m = compute_margins(&s).unwrap();
    let cert = check_eigenvalue_certificate(&trace, &m, Exec::Sequential);
    assert!(cert.satisfied);
    assert!((cert.min_eigenvalue - 1.0).abs() < 1e-12);
    assert!(cert.max_deviation < 1e-12);
    assert_eq!(cert, check_eigenvalue_certificate(&trace, &m, Exec::Parallel));
}

#[test]
fn leader_checks_agree_with_formulas() {
    let s = small_scenario();
    let trace = run(&s);
    assert!(check_leader_only(&trace, &s, LeaderCheck::MotionSpace, Exec::Parallel).satisfied);
    assert!(check_leader_only(&trace, &s, LeaderCheck::Obstacles, Exec::Parallel).satisfied);

    let bad = obstacle_scenario();
    let trace = run(&bad);
    for (which, k) in [(LeaderCheck::MotionSpace, 7), (LeaderCheck::Obstacles, 8)] {
        let geometric = check_leader_only(&trace, &bad, which, Exec::Parallel);
        let formula = satisfies(&build_psi(&bad, k, &PsiOptions::default()).unwrap(), &trace, 0).unwrap();
        assert!(!geometric.satisfied && !formula.satisfied, "psi{k}");
        let (gw, fw) = (geometric.witness.unwrap(), formula.witness.unwrap());
        assert_eq!(gw.sample, fw.sample, "psi{k}: {gw:?} vs {fw:?}");
    }
}

#[test]
fn convex_motion_space_contains_sampled_followers() {
    let mut r = rng(22);
    for s in [small_scenario(), passage_scenario()] {
        let trace = run(&s);
        let psi7 = check_leader_only(&trace, &s, LeaderCheck::MotionSpace, Exec::Parallel);
        assert!(psi7.satisfied);
        for k in (0..trace.len()).step_by(trace.len() / 40) {
            let sample = trace.sample(k);
            let leaders: Vec<Point> = s.leaders().iter().map(|&l| sample.states[l - 1].position.clone()).collect();
            let tri = Simplex::new(leaders.clone()).unwrap();
            for _ in 0..50 {
                let raw: Vec<f64> = (0..3).map(|_| r.random_range(0.0..1.0)).collect();
                let sum: f64 = raw.iter().sum();
                let p = Point::new((0..2).map(|j| leaders.iter().zip(&raw).map(|(v, a)| v[j] * a / sum).sum()).collect());
                assert!(tri.contains(&p, Closure::Closed).unwrap());
                assert!(s.motion_space().iter().any(|c| c.contains(&p, Closure::Closed).unwrap()), "sample {k}: {p:?}");
            }
        }
    }
}

#[test]
fn certificates_imply_requirements_on_every_test_trace() {
    let three_d = Scenario::from_json(&small_3d_json()).unwrap();
    let cases = [
        ("small", small_scenario()),
        ("stationary", stationary_scenario()),
        ("compressed", compressed_scenario()),
        ("obstacle", obstacle_scenario()),
        ("3d", three_d),
    ];
    let mut checked = 0;
    for (label, s) in &cases {
        let res = check_implications(label, s, &run(s));
        assert!(res.counterexamples.is_empty(), "{:?}", res.counterexamples);
        checked += res.checked;
    }
    assert!(checked >= 6, "only {checked} implications had true premises");
}
