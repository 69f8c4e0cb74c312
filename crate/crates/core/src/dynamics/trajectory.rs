//! Leader reference paths: waypoints joined by rest-to-rest quintic segments.

use serde::{Deserialize, Serialize};

use super::DynamicsError;
use crate::geometry::Point;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub t: f64,
    pub position: Point,
}

/// Piecewise quintic path through waypoints, with zero velocity and
/// acceleration at every waypoint. The position is held after the last one.
#[derive(Clone, Debug, PartialEq)]
pub struct LeaderTrajectory {
    waypoints: Vec<Waypoint>,
}

/// s(τ) = 10τ³ − 15τ⁴ + 6τ⁵ and its first two derivatives.
fn quintic(tau: f64) -> (f64, f64, f64) {
    let t2 = tau * tau;
    let t3 = t2 * tau;
    (
        t3 * (10.0 - 15.0 * tau + 6.0 * t2),
        30.0 * t2 * (1.0 - 2.0 * tau + t2),
        60.0 * tau * (1.0 - 3.0 * tau + 2.0 * t2),
    )
}

impl LeaderTrajectory {
    pub fn new(waypoints: Vec<Waypoint>) -> Result<Self, DynamicsError> {
        let Some(first) = waypoints.first() else {
            return Err(DynamicsError::InvalidTrajectory("no waypoints".into()));
        };
        let dim = first.position.dim();
        for w in &waypoints {
            if w.position.dim() != dim {
                return Err(DynamicsError::InvalidTrajectory("waypoint dimensions differ".into()));
            }
            if !w.t.is_finite() || !w.position.is_finite() {
                return Err(DynamicsError::InvalidTrajectory("non-finite waypoint".into()));
            }
        }
        if waypoints.windows(2).any(|p| p[1].t <= p[0].t) {
            return Err(DynamicsError::InvalidTrajectory("waypoint times must strictly increase".into()));
        }
        Ok(LeaderTrajectory { waypoints })
    }

    /// A leader that never moves.
    pub fn stationary(t0: f64, position: Point) -> Self {
        LeaderTrajectory { waypoints: vec![Waypoint { t: t0, position }] }
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    pub fn start_time(&self) -> f64 {
        self.waypoints[0].t
    }

    pub fn end_time(&self) -> f64 {
        self.waypoints[self.waypoints.len() - 1].t
    }

    /// Position, velocity and acceleration at `t`.
    pub fn evaluate(&self, t: f64) -> Result<(Point, Point, Point), DynamicsError> {
        if !(t >= self.start_time()) {
            return Err(DynamicsError::OutsideSpan { t, start: self.start_time() });
        }
        let dim = self.waypoints[0].position.dim();
        let k = self.waypoints.partition_point(|w| w.t <= t);
        if k == self.waypoints.len() {
            let last = self.waypoints[k - 1].position.clone();
            return Ok((last, Point::zeros(dim), Point::zeros(dim)));
        }
        let (a, b) = (&self.waypoints[k - 1], &self.waypoints[k]);
        let span = b.t - a.t;
        let (s, ds, dds) = quintic((t - a.t) / span);
        let mut pos = vec![0.0; dim];
        let mut vel = vec![0.0; dim];
        let mut acc = vec![0.0; dim];
        for j in 0..dim {
            let delta = b.position[j] - a.position[j];
            pos[j] = a.position[j] + s * delta;
            vel[j] = ds * delta / span;
            acc[j] = dds * delta / (span * span);
        }
        Ok((pos.into(), vel.into(), acc.into()))
    }

    pub fn position(&self, t: f64) -> Result<Point, DynamicsError> {
        Ok(self.evaluate(t)?.0)
    }

    /// Feedforward acceleration of the leader.
    pub fn acceleration(&self, t: f64) -> Result<Point, DynamicsError> {
        Ok(self.evaluate(t)?.2)
    }
}
