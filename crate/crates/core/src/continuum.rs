//! Homogeneous-transformation machinery.
//!
//! The desired formation at time t is an affine image of the initial one,
//! `r_i^HT(t) = Q(t) r_i^0 + d(t)`, and is pinned down by the d+1 leaders. The
//! transform is recovered from leader positions with one (d+1)×(d+1) solve:
//!
//! ```text
//! [P(t0) 1] [Qᵀ; dᵀ] = P(t)
//! ```
//!
//! where P stacks leader positions row-wise.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{rank_measure, Closure, GeometryError, Point, Simplex};

/// Smallest admissible |det Q|.
pub const DET_TOL: f64 = 1e-12;
/// Allowed gap between stored and recomputed communication weights.
pub const WEIGHT_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContinuumError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("leaders do not span a {dim}-simplex (rank {rank})")]
    DegenerateLeaders { rank: usize, dim: usize },
    #[error("expected {expected} leaders, got {found}")]
    LeaderCount { expected: usize, found: usize },
    #[error("Jacobian is singular (|det Q| = {det:e})")]
    SingularJacobian { det: f64 },
}

/// Affine map `x ↦ Q x + d` valid at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousTransform {
    q: DMatrix<f64>,
    d: DVector<f64>,
    t: f64,
}

impl HomogeneousTransform {
    pub fn identity(dim: usize, t: f64) -> Self {
        HomogeneousTransform { q: DMatrix::identity(dim, dim), d: DVector::zeros(dim), t }
    }

    /// Builds a transform, rejecting near-singular Jacobians.
    pub fn new(q: DMatrix<f64>, d: DVector<f64>, t: f64) -> Result<Self, ContinuumError> {
        assert!(q.is_square() && q.nrows() == d.len(), "Q must be d×d and d a d-vector");
        let det = q.determinant();
        if !(det.abs() > DET_TOL) {
            return Err(ContinuumError::SingularJacobian { det });
        }
        Ok(HomogeneousTransform { q, d, t })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn jacobian(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn translation(&self) -> &DVector<f64> {
        &self.d
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Desired position `Q r0 + d`.
    pub fn apply(&self, r0: &Point) -> Point {
        Point::from_dvector(&(&self.q * r0.to_dvector() + &self.d))
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &HomogeneousTransform) -> HomogeneousTransform {
        HomogeneousTransform {
            q: &next.q * &self.q,
            d: &next.q * &self.d + &next.d,
            t: next.t,
        }
    }
}

/// Positions of the d+1 leaders at one instant; always spans a d-simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct LeaderConfiguration(Vec<Point>);

impl LeaderConfiguration {
    pub fn new(positions: Vec<Point>) -> Result<Self, ContinuumError> {
        let dim = positions.first().map(Point::dim).unwrap_or(0);
        if positions.len() != dim + 1 || dim == 0 {
            return Err(ContinuumError::LeaderCount { expected: dim + 1, found: positions.len() });
        }
        let rank = rank_measure(&positions)?;
        if rank != dim {
            return Err(ContinuumError::DegenerateLeaders { rank, dim });
        }
        Ok(LeaderConfiguration(positions))
    }

    pub fn positions(&self) -> &[Point] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0[0].dim()
    }

    pub fn simplex(&self) -> Result<Simplex, GeometryError> {
        Simplex::new(self.0.clone())
    }
}

/// Factorizes `[P(t0) 1]` once so transforms for many instants are cheap.
#[derive(Clone, Debug)]
pub struct TransformSolver {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    dim: usize,
}

impl TransformSolver {
    pub fn new(initial: &LeaderConfiguration) -> Self {
        let dim = initial.dim();
        let p = initial.positions();
        let m = DMatrix::from_fn(dim + 1, dim + 1, |r, c| if c < dim { p[r][c] } else { 1.0 });
        TransformSolver { lu: m.lu(), dim }
    }

    pub fn solve(&self, current: &LeaderConfiguration, t: f64) -> Result<HomogeneousTransform, ContinuumError> {
        let dim = self.dim;
        if current.dim() != dim {
            return Err(GeometryError::DimensionMismatch { expected: dim, found: current.dim() }.into());
        }
        let p = current.positions();
        let rhs = DMatrix::from_fn(dim + 1, dim, |r, c| p[r][c]);
        let x = self.lu.solve(&rhs).ok_or(GeometryError::Singular)?;
        let q = x.rows(0, dim).transpose();
        let d = x.row(dim).transpose();
        HomogeneousTransform::new(q, d, t)
    }
}

/// Recovers (Q, d) such that every leader maps from its t0 to its t position.
pub fn solve_transform(
    leaders_t0: &LeaderConfiguration,
    leaders_t: &LeaderConfiguration,
    t: f64,
) -> Result<HomogeneousTransform, ContinuumError> {
    TransformSolver::new(leaders_t0).solve(leaders_t, t)
}

/// Communication weights of a follower: its barycentric coordinates in the
/// simplex of its in-neighbors at t0.
pub fn communication_weights(neighbors_t0: &[Point], follower_t0: &Point) -> Result<Vec<f64>, GeometryError> {
    Ok(Simplex::new(neighbors_t0.to_vec())?.barycentric(follower_t0)?.into_vec())
}

/// One follower's in-neighbor set, as written in scenario files. Agent ids are 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FollowerLink {
    pub id: usize,
    pub neighbors: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

/// Weights recomputed from t0 positions.
#[derive(Clone, Debug, PartialEq)]
pub struct FollowerWeights {
    pub id: usize,
    pub neighbors: Vec<usize>,
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightTable {
    rows: Vec<FollowerWeights>,
}

impl WeightTable {
    /// Computes weights for every follower from `positions` (index = id − 1).
    pub fn compute(positions: &[Point], followers: &[FollowerLink]) -> Result<Self, GeometryError> {
        let rows = followers
            .iter()
            .map(|f| {
                let nb: Vec<Point> = f.neighbors.iter().map(|&j| positions[j - 1].clone()).collect();
                Ok(FollowerWeights {
                    id: f.id,
                    neighbors: f.neighbors.clone(),
                    weights: communication_weights(&nb, &positions[f.id - 1])?,
                })
            })
            .collect::<Result<_, GeometryError>>()?;
        Ok(WeightTable { rows })
    }

    pub fn rows(&self) -> &[FollowerWeights] {
        &self.rows
    }

    pub fn get(&self, id: usize) -> Option<&FollowerWeights> {
        self.rows.iter().find(|r| r.id == id)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    LeadersDegenerate { rank: usize },
    FollowerOutsideLeadingSimplex { follower: usize, alphas: Vec<f64> },
    NeighborCount { follower: usize, expected: usize, found: usize },
    UnknownNeighbor { follower: usize, neighbor: usize },
    NeighborsDegenerate { follower: usize },
    WeightCount { follower: usize, expected: usize, found: usize },
    WeightMismatch { follower: usize, stored: Vec<f64>, computed: Vec<f64> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LeadersDegenerate { rank } => {
                write!(f, "leaders do not form a valid d-simplex at t0 (rank {rank})")
            }
            Violation::FollowerOutsideLeadingSimplex { follower, alphas } => write!(
                f,
                "follower {follower} is not strictly inside the leading simplex at t0 (alphas {alphas:?})"
            ),
            Violation::NeighborCount { follower, expected, found } => write!(
                f,
                "follower {follower} must have exactly d+1 in-neighbors ({expected}), got {found}"
            ),
            Violation::UnknownNeighbor { follower, neighbor } => {
                write!(f, "follower {follower} lists unknown neighbor {neighbor}")
            }
            Violation::NeighborsDegenerate { follower } => {
                write!(f, "in-neighbors of follower {follower} do not form a valid simplex at t0")
            }
            Violation::WeightCount { follower, expected, found } => {
                write!(f, "follower {follower} lists {found} weights, expected {expected}")
            }
            Violation::WeightMismatch { follower, stored, computed } => write!(
                f,
                "follower {follower} stored weights {stored:?} differ from recomputed {computed:?}"
            ),
        }
    }
}

/// Checks the structural assumptions on an initial formation:
/// non-degenerate leaders, followers strictly inside the leading simplex,
/// d+1 non-degenerate in-neighbors per follower, and stored weights that
/// agree with the recomputed ones. `positions` is indexed by id − 1.
pub fn validate_structure(positions: &[Point], leaders: &[usize], followers: &[FollowerLink]) -> Vec<Violation> {
    let mut out = Vec::new();
    let Some(dim) = positions.first().map(Point::dim) else {
        return out;
    };
    let n = positions.len();
    let leader_pts: Vec<Point> = leaders.iter().filter(|&&i| i >= 1 && i <= n).map(|&i| positions[i - 1].clone()).collect();
    let leading = match Simplex::new(leader_pts) {
        Ok(s) => Some(s),
        Err(GeometryError::Degenerate { rank, .. }) => {
            out.push(Violation::LeadersDegenerate { rank });
            None
        }
        Err(_) => {
            out.push(Violation::LeadersDegenerate { rank: 0 });
            None
        }
    };

    for link in followers {
        let fid = link.id;
        if fid == 0 || fid > n {
            continue;
        }
        let here = &positions[fid - 1];
        if let Some(simplex) = &leading {
            if let Ok(alphas) = simplex.barycentric(here) {
                if !alphas.is_inside(Closure::Open) {
                    out.push(Violation::FollowerOutsideLeadingSimplex { follower: fid, alphas: alphas.into_vec() });
                }
            }
        }
        if link.neighbors.len() != dim + 1 {
            out.push(Violation::NeighborCount { follower: fid, expected: dim + 1, found: link.neighbors.len() });
            continue;
        }
        if let Some(&bad) = link.neighbors.iter().find(|&&j| j == 0 || j > n) {
            out.push(Violation::UnknownNeighbor { follower: fid, neighbor: bad });
            continue;
        }
        let nb: Vec<Point> = link.neighbors.iter().map(|&j| positions[j - 1].clone()).collect();
        let computed = match communication_weights(&nb, here) {
            Ok(w) => w,
            Err(_) => {
                out.push(Violation::NeighborsDegenerate { follower: fid });
                continue;
            }
        };
        if let Some(stored) = &link.weights {
            if stored.len() != computed.len() {
                out.push(Violation::WeightCount { follower: fid, expected: computed.len(), found: stored.len() });
            } else if stored.iter().zip(&computed).any(|(s, c)| (s - c).abs() >= WEIGHT_TOL) {
                out.push(Violation::WeightMismatch { follower: fid, stored: stored.clone(), computed });
            }
        }
    }
    out
}
