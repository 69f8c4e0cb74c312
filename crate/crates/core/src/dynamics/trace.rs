//! Sampled agent trajectories plus the derived channels the monitors read.

use crate::continuum::{LeaderConfiguration, TransformSolver};
use crate::geometry::Point;
use crate::par::{self, Exec};

use super::DynamicsError;

#[derive(Clone, Debug, PartialEq)]
pub struct AgentState {
    pub position: Point,
    pub velocity: Point,
}

impl AgentState {
    pub fn at_rest(position: Point) -> Self {
        let dim = position.dim();
        AgentState { position, velocity: Point::zeros(dim) }
    }
}

/// What a simulator or a trace file provides for one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct RawSample {
    pub t: f64,
    pub states: Vec<AgentState>,
    pub desired: Vec<Point>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    /// Indexed by agent id − 1.
    pub states: Vec<AgentState>,
    /// Desired positions r_i^HT.
    pub desired: Vec<Point>,
    pub transform: crate::continuum::HomogeneousTransform,
    /// Barycentric coordinates of each follower's actual position in the
    /// desired leading simplex; `None` for leaders.
    pub omega: Vec<Option<Vec<f64>>>,
}

impl Sample {
    pub fn deviation(&self, index: usize) -> f64 {
        self.states[index].position.distance(&self.desired[index])
    }
}

/// An immutable, time-ordered sequence of samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    dim: usize,
    leaders: Vec<usize>,
    samples: Vec<Sample>,
}

impl Trace {
    /// Builds a trace from raw samples, solving the transform from desired
    /// leader positions (relative to the first sample) and the follower
    /// barycentric channels at every sample.
    pub fn assemble(dim: usize, leaders: &[usize], raw: Vec<RawSample>, exec: Exec) -> Result<Trace, DynamicsError> {
        let Some(first) = raw.first() else {
            return Err(DynamicsError::EmptyTrace);
        };
        let n = first.states.len();
        for s in &raw {
            if s.states.len() != n || s.desired.len() != n {
                return Err(DynamicsError::Shape(format!("sample at t={} has inconsistent agent count", s.t)));
            }
            if s.states.iter().any(|a| a.position.dim() != dim || a.velocity.dim() != dim)
                || s.desired.iter().any(|p| p.dim() != dim)
            {
                return Err(DynamicsError::Shape(format!("sample at t={} has wrong dimension", s.t)));
            }
        }
        if leaders.len() != dim + 1 || leaders.iter().any(|&l| l == 0 || l > n) {
            return Err(DynamicsError::Shape("leader ids do not fit the trace".into()));
        }
        let leader_cfg = |s: &RawSample| {
            LeaderConfiguration::new(leaders.iter().map(|&l| s.desired[l - 1].clone()).collect())
                .map_err(|_| DynamicsError::Degenerate { t: s.t })
        };
        let solver = TransformSolver::new(&leader_cfg(first)?);
        let is_leader: Vec<bool> = (1..=n).map(|id| leaders.contains(&id)).collect();

        let built = par::map_slice(&raw, exec, |s| -> Result<Sample, DynamicsError> {
            let cfg = leader_cfg(s)?;
            let transform = solver.solve(&cfg, s.t).map_err(|_| DynamicsError::Degenerate { t: s.t })?;
            let simplex = cfg.simplex().map_err(|_| DynamicsError::Degenerate { t: s.t })?;
            let omega = (0..n)
                .map(|i| {
                    if is_leader[i] {
                        Ok(None)
                    } else {
                        simplex
                            .barycentric(&s.states[i].position)
                            .map(|b| Some(b.into_vec()))
                            .map_err(|_| DynamicsError::Degenerate { t: s.t })
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Sample { t: s.t, states: s.states.clone(), desired: s.desired.clone(), transform, omega })
        });
        let samples = built.into_iter().collect::<Result<Vec<_>, _>>()?;
        Ok(Trace { dim, leaders: leaders.to_vec(), samples })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_agents(&self) -> usize {
        self.samples[0].states.len()
    }

    pub fn leaders(&self) -> &[usize] {
        &self.leaders
    }

    pub fn followers(&self) -> Vec<usize> {
        (1..=self.n_agents()).filter(|id| !self.leaders.contains(id)).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn sample(&self, k: usize) -> &Sample {
        &self.samples[k]
    }

    pub fn last(&self) -> &Sample {
        &self.samples[self.samples.len() - 1]
    }

    /// Largest ‖r_i − r_i^HT‖ over all samples and the listed agent ids.
    pub fn max_deviation(&self, ids: &[usize]) -> f64 {
        self.samples
            .iter()
            .flat_map(|s| ids.iter().map(move |&i| s.deviation(i - 1)))
            .fold(0.0, f64::max)
    }
}
