#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;

use cdspec::dynamics::{simulate, Trace};
use cdspec::geometry::{Point, Simplex};
use cdspec::scenario::{load_scenario, Scenario};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_point(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Point {
    Point::new((0..dim).map(|_| rng.random_range(-scale..scale)).collect())
}

/// A random simplex whose vertex matrix has condition number below `max_cond`.
pub fn random_simplex(rng: &mut ChaCha8Rng, dim: usize, max_cond: f64) -> Simplex {
    loop {
        let verts: Vec<Point> = (0..=dim).map(|_| random_point(rng, dim, 10.0)).collect();
        let edges = DMatrix::from_fn(dim, dim, |r, c| verts[c + 1][r] - verts[0][r]);
        let sv = edges.singular_values();
        let (hi, lo) = (sv.max(), sv.min());
        if lo > 1e-3 && hi / lo < max_cond {
            return Simplex::new(verts).unwrap();
        }
    }
}

/// Random invertible affine map with condition number below `max_cond`.
pub fn random_affine(rng: &mut ChaCha8Rng, dim: usize, max_cond: f64) -> (DMatrix<f64>, DVector<f64>) {
    loop {
        let a = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-3.0..3.0));
        let sv = a.singular_values();
        if sv.min() > 1e-3 && sv.max() / sv.min() < max_cond {
            let b = DVector::from_fn(dim, |_, _| rng.random_range(-20.0..20.0));
            return (a, b);
        }
    }
}

pub fn apply(a: &DMatrix<f64>, b: &DVector<f64>, p: &Point) -> Point {
    let v = a * DVector::from_column_slice(p.coords()) + b;
    Point::new(v.iter().copied().collect())
}

/// Four agents in the plane: three leaders, one follower at the centroid-ish
/// point (1, 1); leader 2 slides one metre right over five seconds.
pub fn small_json() -> String {
    r#"{
      "schema": 1,
      "dimension": 2,
      "agents": [
        {"id": 1, "position": [0, 0]},
        {"id": 2, "position": [3, 0]},
        {"id": 3, "position": [0, 3]},
        {"id": 4, "position": [1, 1]}
      ],
      "leaders": [1, 2, 3],
      "followers": [{"id": 4, "neighbors": [1, 2, 3]}],
      "leader_waypoints": [
        {"leader": 2, "waypoints": [{"t": 5, "position": [4, 0]}]}
      ],
      "motion_space": [[[-10, -10], [10, -10], [0, 10]]],
      "obstacles": [[[6, 6], [8, 6], [7, 8]]],
      "gains": {"beta_r": 2, "beta_v": 4},
      "margins": {"deviation_bound": 0.2, "agent_radius": 0.25},
      "sim": {"tf": 10}
    }"#
    .to_string()
}

pub fn small_scenario() -> Scenario {
    Scenario::from_json(&small_json()).unwrap()
}

/// The small team with leaders 2 and 3 pulled in to a fifth of their spacing.
pub fn compressed_scenario() -> Scenario {
    let text = small_json().replace(
        r#"{"leader": 2, "waypoints": [{"t": 5, "position": [4, 0]}]}"#,
        r#"{"leader": 2, "waypoints": [{"t": 5, "position": [0.6, 0]}]},
        {"leader": 3, "waypoints": [{"t": 5, "position": [0, 0.6]}]}"#,
    );
    Scenario::from_json(&text).unwrap()
}

/// The small team with leader 2 driven into the obstacle, outside the motion space.
pub fn obstacle_scenario() -> Scenario {
    let text = small_json().replace("[4, 0]}", "[7, 6.5]}");
    Scenario::from_json(&text).unwrap()
}

/// Same team with every leader stationary.
pub fn stationary_scenario() -> Scenario {
    let text = small_json().replace(r#"{"leader": 2, "waypoints": [{"t": 5, "position": [4, 0]}]}"#, "");
    Scenario::from_json(&text).unwrap()
}

/// Four leaders and two followers in 3-D under a smooth stretch.
pub fn small_3d_json() -> String {
    r#"{
      "schema": 1,
      "dimension": 3,
      "agents": [
        {"id": 1, "position": [0, 0, 0]},
        {"id": 2, "position": [4, 0, 0]},
        {"id": 3, "position": [0, 4, 0]},
        {"id": 4, "position": [0, 0, 4]},
        {"id": 5, "position": [1, 1, 1]},
        {"id": 6, "position": [1.2, 1.2, 1.2]}
      ],
      "leaders": [1, 2, 3, 4],
      "followers": [
        {"id": 5, "neighbors": [1, 2, 3, 4]},
        {"id": 6, "neighbors": [5, 2, 3, 4]}
      ],
      "leader_waypoints": [
        {"leader": 2, "waypoints": [{"t": 4, "position": [5, 0, 0]}]},
        {"leader": 4, "waypoints": [{"t": 4, "position": [0, 0, 3.5]}]}
      ],
      "gains": {"beta_r": 2, "beta_v": 4},
      "margins": {"deviation_bound": 0.2, "agent_radius": 0.1},
      "sim": {"tf": 8}
    }"#
    .to_string()
}

pub fn passage_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/paper_analog_10agents.json")
}

pub fn passage_scenario() -> Scenario {
    load_scenario(passage_path()).unwrap()
}

pub fn run(s: &Scenario) -> Trace {
    simulate(s, s.sim().h, s.sim().tf).unwrap()
}

/// Largest absolute difference between the final positions and velocities of two traces.
pub fn final_state_gap(a: &Trace, b: &Trace) -> f64 {
    a.last()
        .states
        .iter()
        .zip(&b.last().states)
        .flat_map(|(x, y)| {
            let p = x.position.coords().iter().zip(y.position.coords());
            let v = x.velocity.coords().iter().zip(y.velocity.coords());
            p.chain(v).map(|(u, w)| (u - w).abs())
        })
        .fold(0.0, f64::max)
}

/// err(h) / err(h/2), each measured against a run at h/8.
pub fn order_ratio(s: &Scenario, h: f64) -> (f64, f64, f64) {
    let tf = s.sim().tf;
    let coarse = simulate(s, h, tf).unwrap();
    let fine = simulate(s, h / 2.0, tf).unwrap();
    let reference = simulate(s, h / 8.0, tf).unwrap();
    let e1 = final_state_gap(&coarse, &reference);
    let e2 = final_state_gap(&fine, &reference);
    (e1 / e2, e1, e2)
}

/// Random linear map U·diag(s)·Vᵀ whose singular values lie in [lo, hi]; with
/// `pin` the smallest one equals `lo` and acts along `pin`.
pub fn random_deformation(rng: &mut ChaCha8Rng, dim: usize, lo: f64, hi: f64, pin: Option<&DVector<f64>>) -> DMatrix<f64> {
    let orthogonal = |rng: &mut ChaCha8Rng, first: Option<&DVector<f64>>| {
        let mut m = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
        if let Some(v) = first {
            m.set_column(0, v);
        }
        m.qr().q()
    };
    let u = orthogonal(rng, None);
    let v = orthogonal(rng, pin);
    let mut s: Vec<f64> = (0..dim).map(|_| rng.random_range(lo..hi)).collect();
    if pin.is_some() {
        s[0] = lo;
    }
    u * DMatrix::from_diagonal(&DVector::from_vec(s)) * v.transpose()
}

/// Outcome of checking one requirement implication on one trace.
pub struct Implications {
    pub checked: usize,
    pub counterexamples: Vec<String>,
}

/// Certificate ⟹ ψ2 ∧ ψ3, ψ2 ∧ ψ7 ⟹ ψ4 and ψ2 ∧ ψ8 ⟹ ψ5, with every right-hand
/// side evaluated directly by the monitor.
pub fn check_implications(label: &str, s: &Scenario, trace: &Trace) -> Implications {
    use cdspec::verify::{verify, VerifyRequest};
    let has_space = !s.motion_space().is_empty();
    let psi = (1..=8).filter(|k| has_space || !matches!(k, 4 | 7)).collect();
    let report = verify(s, trace, &VerifyRequest { psi, ..Default::default() }).unwrap();
    let holds = |name: &str| report.formula(name).is_some_and(|f| f.satisfied);
    let mut out = Implications { checked: 0, counterexamples: Vec::new() };
    let mut imply = |premise: bool, conclusion: &str| {
        if premise {
            out.checked += 1;
            if !holds(conclusion) {
                out.counterexamples.push(format!("{label}: {conclusion} violated"));
            }
        }
    };
    imply(report.theorem1.satisfied, "psi2");
    imply(report.theorem1.satisfied, "psi3");
    imply(holds("psi2") && holds("psi7"), "psi4");
    imply(holds("psi2") && holds("psi8"), "psi5");
    if (has_space && report.psi7.satisfied != holds("psi7")) || report.psi8.satisfied != holds("psi8") {
        out.counterexamples.push(format!("{label}: geometric and formula leader checks disagree"));
    }
    out
}

/// Applies `q` and a random translation to `formation`, then moves each
/// agent by a random offset of norm ≤ `delta`. With `push = Some((i, j))`
/// agents i and j are instead moved exactly `delta` towards each other.
pub fn deform_formation(rng: &mut ChaCha8Rng, formation: &[Point], q: &DMatrix<f64>, delta: f64, push: Option<(usize, usize)>) -> Vec<Point> {
    let dim = q.nrows();
    let shift = DVector::from_fn(dim, |_, _| rng.random_range(-50.0..50.0));
    let base: Vec<DVector<f64>> = formation.iter().map(|p| q * DVector::from_column_slice(p.coords()) + &shift).collect();
    let mut out: Vec<DVector<f64>> = base
        .iter()
        .map(|b| {
            let dir = loop {
                let v = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
                let n = v.norm();
                if n > 1e-3 && n <= 1.0 {
                    break v / n;
                }
            };
            b + dir * (delta * rng.random_range(0.0_f64..=1.0).powf(1.0 / dim as f64))
        })
        .collect();
    if let Some((i, j)) = push {
        let u = (&base[j] - &base[i]).normalize();
        out[i] = &base[i] + &u * delta;
        out[j] = &base[j] - &u * delta;
    }
    out.into_iter().map(|v| Point::new(v.iter().copied().collect())).collect()
}

/// A simulated trace of `s` with agent 4 moved to (7, 6.8) for samples `from..to`.
pub fn teleported(s: &Scenario, from: usize, to: usize) -> Trace {
    use cdspec::dynamics::RawSample;
    let trace = run(s);
    let raw: Vec<RawSample> = trace
        .samples()
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let mut states = x.states.clone();
            if (from..to).contains(&k) {
                states[3].position = Point::new(vec![7.0, 6.8]);
            }
            RawSample { t: x.t, states, desired: x.desired.clone() }
        })
        .collect();
    Trace::assemble(s.dim(), s.leaders(), raw, cdspec::Exec::Parallel).unwrap()
}
