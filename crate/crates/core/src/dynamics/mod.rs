//! Collective double-integrator dynamics.
//!
//! Leaders follow their reference path by pure feedforward (`u = r̈^HT`).
//! Followers run the weighted consensus law
//!
//! ```text
//! u_i = β_v Σ_j w_ij (ṙ_j − ṙ_i) + β_r Σ_j w_ij (r_j − r_i)
//! ```
//!
//! over their d+1 in-neighbors. The whole 2·N·d state is advanced with
//! classical fixed-step RK4.

mod trace;
mod trajectory;

pub use trace::{AgentState, RawSample, Sample, Trace};
pub use trajectory::{LeaderTrajectory, Waypoint};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::continuum::{LeaderConfiguration, TransformSolver, WeightTable};
use crate::geometry::Point;
use crate::par::{self, Exec};
use crate::scenario::Scenario;

/// Default integration step in seconds.
pub const DEFAULT_STEP: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid leader trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("t = {t} precedes trajectory start {start}")]
    OutsideSpan { t: f64, start: f64 },
    #[error("agent {0} is not a follower")]
    NotAFollower(usize),
    #[error("follower {follower} references missing neighbor {neighbor}")]
    MissingNeighbor { follower: usize, neighbor: usize },
    #[error("non-finite state for agent {agent} at t = {t}")]
    NonFinite { t: f64, agent: usize },
    #[error("leading polytope degenerates at t = {t}")]
    Degenerate { t: f64 },
    #[error("invalid time grid: {0}")]
    InvalidStep(String),
    #[error("initial state count {found} does not match {expected} agents")]
    InitialState { expected: usize, found: usize },
    #[error("trace is empty")]
    EmptyTrace,
    #[error("malformed trace: {0}")]
    Shape(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlGains {
    /// Position gain β_r (1/s²).
    pub beta_r: f64,
    /// Velocity gain β_v (1/s).
    pub beta_v: f64,
}

/// Consensus acceleration of follower `id` given every agent's state (index = id − 1).
pub fn follower_acceleration(
    id: usize,
    states: &[AgentState],
    weights: &WeightTable,
    gains: ControlGains,
) -> Result<Point, DynamicsError> {
    let row = weights.get(id).ok_or(DynamicsError::NotAFollower(id))?;
    let me = states.get(id - 1).ok_or(DynamicsError::NotAFollower(id))?;
    let dim = me.position.dim();
    let mut u = vec![0.0; dim];
    for (&j, &w) in row.neighbors.iter().zip(&row.weights) {
        let other = states
            .get(j.wrapping_sub(1))
            .ok_or(DynamicsError::MissingNeighbor { follower: id, neighbor: j })?;
        for (k, uk) in u.iter_mut().enumerate() {
            *uk += gains.beta_v * w * (other.velocity[k] - me.velocity[k])
                + gains.beta_r * w * (other.position[k] - me.position[k]);
        }
    }
    Ok(u.into())
}

/// Feedforward acceleration of a leader.
pub fn leader_acceleration(trajectory: &LeaderTrajectory, t: f64) -> Result<Point, DynamicsError> {
    trajectory.acceleration(t)
}

enum Role<'a> {
    Leader(&'a LeaderTrajectory),
    Follower(Vec<(usize, f64)>),
}

struct System<'a> {
    dim: usize,
    roles: Vec<Role<'a>>,
    gains: ControlGains,
}

impl System<'_> {
    /// dy = f(t, y) with y = [positions; velocities], both flattened agent-major.
    fn derivative(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), DynamicsError> {
        let nd = self.roles.len() * self.dim;
        let (pos, vel) = y.split_at(nd);
        let (dpos, dvel) = dy.split_at_mut(nd);
        dpos.copy_from_slice(vel);
        for (i, role) in self.roles.iter().enumerate() {
            let out = &mut dvel[i * self.dim..(i + 1) * self.dim];
            match role {
                Role::Leader(traj) => {
                    let a = traj.acceleration(t)?;
                    out.copy_from_slice(a.coords());
                }
                Role::Follower(nbrs) => {
                    out.fill(0.0);
                    for &(j, w) in nbrs {
                        for k in 0..self.dim {
                            out[k] += self.gains.beta_v * w * (vel[j * self.dim + k] - vel[i * self.dim + k])
                                + self.gains.beta_r * w * (pos[j * self.dim + k] - pos[i * self.dim + k]);
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

struct Rk4 {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        Rk4 { k: std::array::from_fn(|_| vec![0.0; n]), tmp: vec![0.0; n] }
    }

    fn step(&mut self, sys: &System<'_>, t: f64, h: f64, y: &mut [f64]) -> Result<(), DynamicsError> {
        let [k1, k2, k3, k4] = &mut self.k;
        sys.derivative(t, y, k1)?;
        for i in 0..y.len() {
            self.tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        sys.derivative(t + 0.5 * h, &self.tmp, k2)?;
        for i in 0..y.len() {
            self.tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        sys.derivative(t + 0.5 * h, &self.tmp, k3)?;
        for i in 0..y.len() {
            self.tmp[i] = y[i] + h * k3[i];
        }
        sys.derivative(t + h, &self.tmp, k4)?;
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        Ok(())
    }
}

fn step_count(t0: f64, h: f64, tf: f64) -> Result<usize, DynamicsError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(DynamicsError::InvalidStep(format!("step h = {h} must be positive")));
    }
    if !(tf > t0) {
        return Err(DynamicsError::InvalidStep(format!("tf = {tf} must exceed t0 = {t0}")));
    }
    let steps = ((tf - t0) / h).round();
    if (steps * h - (tf - t0)).abs() > 1e-9 * tf.abs().max(1.0) {
        return Err(DynamicsError::InvalidStep(format!("(tf - t0) = {} is not a multiple of h = {h}", tf - t0)));
    }
    Ok(steps as usize)
}

/// Simulates the scenario from its own initial states.
pub fn simulate(scenario: &Scenario, h: f64, tf: f64) -> Result<Trace, DynamicsError> {
    simulate_from(scenario, &scenario.initial_states(), h, tf)
}

/// Simulates from explicit initial states (index = id − 1). The reference
/// formation r^0 is still the scenario's.
pub fn simulate_from(scenario: &Scenario, initial: &[AgentState], h: f64, tf: f64) -> Result<Trace, DynamicsError> {
    let n = scenario.n_agents();
    let dim = scenario.dim();
    if initial.len() != n {
        return Err(DynamicsError::InitialState { expected: n, found: initial.len() });
    }
    let t0 = scenario.t0();
    let steps = step_count(t0, h, tf)?;

    let roles: Vec<Role<'_>> = (1..=n)
        .map(|id| {
            if let Some(traj) = scenario.trajectory(id) {
                Ok(Role::Leader(traj))
            } else {
                let row = scenario.weights().get(id).ok_or(DynamicsError::NotAFollower(id))?;
                Ok(Role::Follower(row.neighbors.iter().map(|&j| j - 1).zip(row.weights.iter().copied()).collect()))
            }
        })
        .collect::<Result<_, DynamicsError>>()?;
    let sys = System { dim, roles, gains: scenario.gains() };

    let leaders = scenario.leaders();
    let r0 = scenario.reference_positions();
    let leader_cfg = |t: f64| -> Result<LeaderConfiguration, DynamicsError> {
        let pts = leaders
            .iter()
            .map(|&l| scenario.trajectory(l).expect("leader has a trajectory").position(t))
            .collect::<Result<Vec<_>, _>>()?;
        LeaderConfiguration::new(pts).map_err(|_| DynamicsError::Degenerate { t })
    };
    let solver = TransformSolver::new(&leader_cfg(t0)?);

    let mut y = vec![0.0; 2 * n * dim];
    for (i, s) in initial.iter().enumerate() {
        y[i * dim..(i + 1) * dim].copy_from_slice(s.position.coords());
        y[(n + i) * dim..(n + i + 1) * dim].copy_from_slice(s.velocity.coords());
    }

    let record = |t: f64, y: &[f64]| -> Result<RawSample, DynamicsError> {
        let cfg = leader_cfg(t)?;
        let ht = solver.solve(&cfg, t).map_err(|_| DynamicsError::Degenerate { t })?;
        let states = (0..n)
            .map(|i| AgentState {
                position: y[i * dim..(i + 1) * dim].to_vec().into(),
                velocity: y[(n + i) * dim..(n + i + 1) * dim].to_vec().into(),
            })
            .collect();
        let desired = r0.iter().map(|p| ht.apply(p)).collect();
        Ok(RawSample { t, states, desired })
    };

    let mut raw = Vec::with_capacity(steps + 1);
    raw.push(record(t0, &y)?);
    let mut rk = Rk4::new(y.len());
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        rk.step(&sys, t, h, &mut y)?;
        let t_next = t0 + (k + 1) as f64 * h;
        if let Some(bad) = y.iter().position(|v| !v.is_finite()) {
            let agent = (bad % (n * dim)) / dim + 1;
            return Err(DynamicsError::NonFinite { t: t_next, agent });
        }
        raw.push(record(t_next, &y)?);
    }
    Trace::assemble(dim, leaders, raw, Exec::default())
}

/// Runs independent simulations, one per scenario, with that scenario's own step and horizon.
pub fn simulate_batch(scenarios: &[Scenario], exec: Exec) -> Vec<Result<Trace, DynamicsError>> {
    par::map_slice(scenarios, exec, |s| simulate(s, s.sim().h, s.sim().tf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuum::FollowerLink;

    fn gains() -> ControlGains {
        ControlGains { beta_r: 2.0, beta_v: 4.0 }
    }

    fn table(pos: &[Point]) -> WeightTable {
        WeightTable::compute(pos, &[FollowerLink { id: 4, neighbors: vec![1, 2, 3], weights: None }]).unwrap()
    }

    #[test]
    fn follower_law_examples() {
        let pos: Vec<Point> = vec![[0.0, 0.0].into(), [3.0, 0.0].into(), [0.0, 3.0].into(), [1.0, 1.0].into()];
        let w = table(&pos);
        // at the weighted average of its neighbors and at rest: equilibrium
        let states: Vec<AgentState> = pos.iter().cloned().map(AgentState::at_rest).collect();
        let u = follower_acceleration(4, &states, &w, gains()).unwrap();
        assert!(u.coords().iter().all(|x| x.abs() < 1e-14));

        // follower displaced to the origin: β_r · (mean(neighbors) − r) = 2·(1,1)
        let mut states = states;
        states[3] = AgentState::at_rest([0.0, 0.0].into());
        let u = follower_acceleration(4, &states, &w, gains()).unwrap();
        assert!((u[0] - 2.0).abs() < 1e-14 && (u[1] - 2.0).abs() < 1e-14);

        // everyone coincident and at rest
        let same: Vec<AgentState> = (0..4).map(|_| AgentState::at_rest([5.0, 5.0].into())).collect();
        assert_eq!(follower_acceleration(4, &same, &w, gains()).unwrap(), Point::zeros(2));
    }

    #[test]
    fn follower_law_velocity_term() {
        let pos: Vec<Point> = vec![[0.0, 0.0].into(), [3.0, 0.0].into(), [0.0, 3.0].into(), [1.0, 1.0].into()];
        let w = table(&pos);
        let mut states: Vec<AgentState> = pos.iter().cloned().map(AgentState::at_rest).collect();
        states[3].velocity = [0.5, -1.0].into();
        let u = follower_acceleration(4, &states, &w, gains()).unwrap();
        assert!((u[0] + 2.0).abs() < 1e-14 && (u[1] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn non_followers_are_rejected() {
        let pos: Vec<Point> = vec![[0.0, 0.0].into(), [3.0, 0.0].into(), [0.0, 3.0].into(), [1.0, 1.0].into()];
        let states: Vec<AgentState> = pos.iter().cloned().map(AgentState::at_rest).collect();
        assert_eq!(
            follower_acceleration(1, &states, &table(&pos), gains()),
            Err(DynamicsError::NotAFollower(1))
        );
        let short = &states[..3];
        assert!(matches!(
            follower_acceleration(4, short, &table(&pos), gains()),
            Err(DynamicsError::NotAFollower(4))
        ));
    }

    #[test]
    fn step_grid() {
        assert_eq!(step_count(0.0, 0.01, 227.5).unwrap(), 22750);
        assert!(step_count(0.0, 0.03, 1.0).is_err());
        assert!(step_count(0.0, -0.1, 1.0).is_err());
        assert!(step_count(1.0, 0.1, 1.0).is_err());
    }
}
