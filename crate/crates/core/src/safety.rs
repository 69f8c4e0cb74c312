//! Inter-agent and obstacle safety certificates.
//!
//! Given the initial formation's minimum separation D_B, the followers'
//! minimum distance D_S to the leading simplex boundary, the agent radius ε
//! and the deviation bound δ:
//!
//! ```text
//! δ_max = min{ (D_B − 2ε)/2, D_S − ε }
//! λ_min = (δ + ε) / (δ_max + ε)
//! ```
//!
//! If δ ≤ δ_max, every sample has all deviations within δ and the smallest
//! eigenvalue of the deformation (singular value of Q) stays at or above
//! λ_min, then agents never collide and followers never leave the leading
//! simplex.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::continuum::DET_TOL;
use crate::dynamics::Trace;
use crate::geometry::{min_pairwise_distance, Closure, GeometryError, Point, Simplex, CONTAIN_TOL};
use crate::ltl::{Verdict, Witness};
use crate::par::{self, Exec};
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SafetyError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("follower {0} is not inside the leading simplex")]
    FollowerOutside(usize),
    #[error("deformation Jacobian is singular (|det Q| = {0:e})")]
    SingularJacobian(f64),
    #[error("trace does not match the scenario: {0}")]
    Mismatch(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SafetyMargins {
    #[serde(rename = "D_B")]
    pub d_b: f64,
    #[serde(rename = "D_S")]
    pub d_s: f64,
    pub agent_radius: f64,
    pub deviation_bound: f64,
    pub delta_max: f64,
    pub lambda_min: f64,
    pub feasible: bool,
}

impl SafetyMargins {
    pub fn from_distances(d_b: f64, d_s: f64, agent_radius: f64, deviation_bound: f64) -> Self {
        let delta_max = (0.5 * (d_b - 2.0 * agent_radius)).min(d_s - agent_radius);
        let lambda_min = (deviation_bound + agent_radius) / (delta_max + agent_radius);
        SafetyMargins {
            d_b,
            d_s,
            agent_radius,
            deviation_bound,
            delta_max,
            lambda_min,
            feasible: delta_max > 0.0 && deviation_bound <= delta_max,
        }
    }
}

/// D_B, D_S and the derived margins for the scenario's initial formation.
pub fn compute_margins(scenario: &Scenario) -> Result<SafetyMargins, SafetyError> {
    let reference = scenario.reference_positions();
    let (d_b, _) = min_pairwise_distance(reference)?;
    let simplex = scenario.leading_simplex();
    let mut d_s = f64::INFINITY;
    for id in scenario.followers() {
        let dist = simplex
            .boundary_distance(&reference[id - 1])
            .map_err(|e| match e {
                GeometryError::OutsideSimplex => SafetyError::FollowerOutside(id),
                other => other.into(),
            })?;
        d_s = d_s.min(dist);
    }
    let m = scenario.margins();
    Ok(SafetyMargins::from_distances(d_b, d_s, m.agent_radius, m.deviation_bound))
}

/// Eigenvalues of the pure deformation part of Q (its singular values), ascending.
pub fn deformation_eigenvalues(q: &DMatrix<f64>) -> Result<Vec<f64>, SafetyError> {
    let det = q.determinant();
    if !(det.abs() > DET_TOL) {
        return Err(SafetyError::SingularJacobian(det));
    }
    let mut sv: Vec<f64> = q.singular_values().iter().copied().collect();
    sv.sort_by(f64::total_cmp);
    Ok(sv)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueCertificate {
    pub satisfied: bool,
    pub min_eigenvalue: f64,
    pub max_deviation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

struct SampleStats {
    min_eig: f64,
    worst_agent: usize,
    worst_dev: f64,
}

/// Checks the eigenvalue and deviation conditions over every sample.
/// `satisfied` is false whenever the margins are infeasible.
pub fn check_eigenvalue_certificate(trace: &Trace, margins: &SafetyMargins, exec: Exec) -> EigenvalueCertificate {
    let n = trace.n_agents();
    let stats = par::map_range(trace.len(), exec, |k| {
        let s = trace.sample(k);
        let min_eig = deformation_eigenvalues(s.transform.jacobian()).map(|v| v[0]).unwrap_or(0.0);
        let (worst_agent, worst_dev) = (0..n)
            .map(|i| (i + 1, s.deviation(i)))
            .fold((1, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        SampleStats { min_eig, worst_agent, worst_dev }
    });
    let min_eigenvalue = stats.iter().map(|s| s.min_eig).fold(f64::INFINITY, f64::min);
    let max_deviation = stats.iter().map(|s| s.worst_dev).fold(0.0, f64::max);

    let violation = stats.iter().enumerate().find_map(|(k, s)| {
        let t = trace.sample(k).t;
        if s.min_eig < margins.lambda_min {
            Some(Witness {
                t,
                sample: k,
                atom: "lambda_min <= min eig(Q)".into(),
                lhs: margins.lambda_min,
                rhs: s.min_eig,
            })
        } else if s.worst_dev > margins.deviation_bound {
            Some(Witness {
                t,
                sample: k,
                atom: format!("|r[{0}] - rht[{0}]| <= delta", s.worst_agent),
                lhs: s.worst_dev,
                rhs: margins.deviation_bound,
            })
        } else {
            None
        }
    });
    EigenvalueCertificate {
        satisfied: margins.feasible && violation.is_none(),
        min_eigenvalue,
        max_deviation,
        witness: violation,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LeaderCheck {
    /// Every leader inside some motion-space cell.
    MotionSpace,
    /// No leader inside any obstacle.
    Obstacles,
}

fn min_alpha(cell: &Simplex, p: &Point) -> f64 {
    cell.barycentric(p)
        .map(|b| b.alphas().iter().copied().fold(f64::INFINITY, f64::min))
        .unwrap_or(f64::NEG_INFINITY)
}

/// Geometric check of the leader-only requirements on actual leader positions.
/// A point is in a cell iff its smallest barycentric coordinate is ≥ −τ.
pub fn check_leader_only(trace: &Trace, scenario: &Scenario, which: LeaderCheck, exec: Exec) -> Verdict {
    let leaders = scenario.leaders();
    let hits = par::map_range(trace.len(), exec, |k| {
        let s = trace.sample(k);
        leaders.iter().find_map(|&l| {
            let p = &s.states[l - 1].position;
            match which {
                LeaderCheck::MotionSpace => {
                    let best = scenario.motion_space().iter().map(|c| min_alpha(c, p)).fold(f64::NEG_INFINITY, f64::max);
                    (best < -CONTAIN_TOL).then(|| Witness {
                        t: s.t,
                        sample: k,
                        atom: format!("leader {l} in motion space"),
                        lhs: -CONTAIN_TOL,
                        rhs: best,
                    })
                }
                LeaderCheck::Obstacles => scenario.obstacles().iter().enumerate().find_map(|(o, c)| {
                    c.contains(p, Closure::Closed).unwrap_or(false).then(|| Witness {
                        t: s.t,
                        sample: k,
                        atom: format!("leader {l} outside obstacle {}", o + 1),
                        lhs: -CONTAIN_TOL,
                        rhs: min_alpha(c, p),
                    })
                }),
            }
        })
    });
    let witness = hits.into_iter().flatten().next();
    Verdict { satisfied: witness.is_none(), witness }
}
