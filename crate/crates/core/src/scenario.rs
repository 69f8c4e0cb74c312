//! Scenario files: the JSON document, its validation, and the checked
//! [`Scenario`] the rest of the crate consumes.
//!
//! Agent ids are 1-based and must be exactly `1..=N`. Leader paths are
//! optional; a leader without one stays where it starts.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::continuum::{self, FollowerLink, LeaderConfiguration, TransformSolver, Violation, WeightTable};
use crate::dynamics::{AgentState, ControlGains, LeaderTrajectory, Waypoint, DEFAULT_STEP};
use crate::geometry::{GeometryError, Point, Simplex};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_LIVENESS_TOL: f64 = 0.05;
const WAYPOINT_MATCH_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("scenario JSON parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("scenario schema violations:\n  {}", .0.join("\n  "))]
    Schema(Vec<String>),
    #[error("scenario structure violations:\n  {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("\n  "))]
    Structure(Vec<Violation>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub id: usize,
    /// Initial (reference) position r_i^0.
    pub position: Point,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<Point>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeaderPath {
    pub leader: usize,
    pub waypoints: Vec<Waypoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentPosition {
    pub id: usize,
    pub position: Point,
}

fn default_liveness_tol() -> f64 {
    DEFAULT_LIVENESS_TOL
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginSpec {
    /// δ: allowed distance between actual and desired position (m).
    pub deviation_bound: f64,
    /// ε: radius of the ball enclosing each agent (m).
    pub agent_radius: f64,
    /// Final-formation tolerance for the liveness condition (m).
    #[serde(default = "default_liveness_tol")]
    pub liveness_tol: f64,
}

fn default_step() -> f64 {
    DEFAULT_STEP
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    #[serde(default = "default_step")]
    pub h: f64,
    pub tf: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

/// The on-disk scenario document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub t0: f64,
    pub agents: Vec<AgentSpec>,
    pub leaders: Vec<usize>,
    pub followers: Vec<FollowerLink>,
    #[serde(default)]
    pub leader_waypoints: Vec<LeaderPath>,
    #[serde(default)]
    pub motion_space: Vec<Vec<Point>>,
    #[serde(default)]
    pub obstacles: Vec<Vec<Point>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_positions: Option<Vec<AgentPosition>>,
    pub gains: ControlGains,
    pub margins: MarginSpec,
    pub sim: SimSpec,
}

/// A validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    spec: ScenarioSpec,
    reference: Vec<Point>,
    velocities: Vec<Point>,
    weights: WeightTable,
    /// Indexed by id − 1; `Some` for leaders.
    trajectories: Vec<Option<LeaderTrajectory>>,
    motion_space: Vec<Simplex>,
    obstacles: Vec<Simplex>,
    final_positions: Vec<Point>,
}

impl PartialEq for Scenario {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
    Scenario::from_json(&text)
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
    let path = path.as_ref();
    fs::write(path, scenario.to_json()).map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })
}

fn check_point(errs: &mut Vec<String>, what: &str, p: &Point, dim: usize) -> bool {
    if p.dim() != dim {
        errs.push(format!("{what} has {} coordinates, expected {dim}", p.dim()));
        false
    } else if !p.is_finite() {
        errs.push(format!("{what} is not finite"));
        false
    } else {
        true
    }
}

fn cell_simplex(vertices: &[Point], dim: usize) -> Result<Simplex, GeometryError> {
    let s = Simplex::new(vertices.to_vec())?;
    if s.dim() != dim {
        return Err(GeometryError::DimensionMismatch { expected: dim, found: s.dim() });
    }
    Ok(s)
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        Scenario::from_spec(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.spec).expect("scenario serializes")
    }

    pub fn from_spec(spec: ScenarioSpec) -> Result<Self, ScenarioError> {
        let mut errs = Vec::new();
        if spec.schema != SCHEMA_VERSION {
            errs.push(format!("unsupported schema version {}, expected {SCHEMA_VERSION}", spec.schema));
        }
        let d = spec.dimension;
        if d != 2 && d != 3 {
            return Err(ScenarioError::Schema(vec![format!("dimension must be 2 or 3, got {d}")]));
        }
        let n = spec.agents.len();
        if n < d + 1 {
            errs.push(format!("need at least {} agents, got {n}", d + 1));
        }

        let mut reference: Vec<Option<Point>> = vec![None; n];
        let mut velocities = vec![Point::zeros(d); n];
        for a in &spec.agents {
            if a.id == 0 || a.id > n {
                errs.push(format!("agent id {} outside 1..={n}", a.id));
                continue;
            }
            if reference[a.id - 1].is_some() {
                errs.push(format!("duplicate agent id {}", a.id));
                continue;
            }
            check_point(&mut errs, &format!("agent {} position", a.id), &a.position, d);
            if let Some(v) = &a.velocity {
                if check_point(&mut errs, &format!("agent {} velocity", a.id), v, d) {
                    velocities[a.id - 1] = v.clone();
                }
            }
            reference[a.id - 1] = Some(a.position.clone());
        }

        if spec.leaders.len() != d + 1 {
            errs.push(format!("|leaders| must be d+1 = {}, got {}", d + 1, spec.leaders.len()));
        }
        let mut role = vec![0u8; n];
        for &l in &spec.leaders {
            if l == 0 || l > n {
                errs.push(format!("leader id {l} is not an agent"));
            } else if role[l - 1] != 0 {
                errs.push(format!("leader id {l} listed twice"));
            } else {
                role[l - 1] = 1;
            }
        }
        for f in &spec.followers {
            if f.id == 0 || f.id > n {
                errs.push(format!("follower id {} is not an agent", f.id));
            } else if role[f.id - 1] == 1 {
                errs.push(format!("agent {} is both leader and follower", f.id));
            } else if role[f.id - 1] == 2 {
                errs.push(format!("follower id {} listed twice", f.id));
            } else {
                role[f.id - 1] = 2;
            }
            if f.neighbors.contains(&f.id) {
                errs.push(format!("follower {} lists itself as a neighbor", f.id));
            }
        }
        for (i, r) in role.iter().enumerate() {
            if *r == 0 {
                errs.push(format!("agent {} is neither leader nor follower", i + 1));
            }
        }

        for (k, cell) in spec.motion_space.iter().enumerate() {
            if let Err(e) = cell_simplex(cell, d) {
                errs.push(format!("motion_space[{k}] is not a valid {d}-simplex: {e}"));
            }
        }
        for (k, cell) in spec.obstacles.iter().enumerate() {
            if let Err(e) = cell_simplex(cell, d) {
                errs.push(format!("obstacles[{k}] is not a valid {d}-simplex: {e}"));
            }
        }

        let g = spec.gains;
        if !(g.beta_r > 0.0 && g.beta_v > 0.0) {
            errs.push("gains beta_r and beta_v must be positive".into());
        }
        let m = spec.margins;
        if !(m.deviation_bound > 0.0) {
            errs.push("margins.deviation_bound must be positive".into());
        }
        if !(m.agent_radius >= 0.0) {
            errs.push("margins.agent_radius must be non-negative".into());
        }
        if !(m.liveness_tol > 0.0) {
            errs.push("margins.liveness_tol must be positive".into());
        }
        if !(spec.sim.h > 0.0) || !(spec.sim.tf > spec.t0) {
            errs.push("sim.h must be positive and sim.tf must exceed t0".into());
        }
        if !errs.is_empty() {
            return Err(ScenarioError::Schema(errs));
        }
        let reference: Vec<Point> = reference.into_iter().map(|p| p.expect("every id seen")).collect();

        let mut trajectories: Vec<Option<LeaderTrajectory>> = vec![None; n];
        for path in &spec.leader_waypoints {
            let l = path.leader;
            if !spec.leaders.contains(&l) {
                errs.push(format!("leader_waypoints lists non-leader {l}"));
                continue;
            }
            if trajectories[l - 1].is_some() {
                errs.push(format!("leader {l} has two waypoint lists"));
                continue;
            }
            let mut wps = path.waypoints.clone();
            if let Some(first) = wps.first() {
                if first.t < spec.t0 {
                    errs.push(format!("leader {l} waypoint at t = {} precedes t0", first.t));
                    continue;
                }
                if first.t == spec.t0 {
                    if first.position.dim() != d || first.position.distance(&reference[l - 1]) > WAYPOINT_MATCH_TOL {
                        errs.push(format!("leader {l} first waypoint at t0 must equal its initial position"));
                        continue;
                    }
                } else {
                    wps.insert(0, Waypoint { t: spec.t0, position: reference[l - 1].clone() });
                }
            }
            if wps.iter().any(|w| w.position.dim() != d) {
                errs.push(format!("leader {l} waypoint has wrong dimension"));
                continue;
            }
            match LeaderTrajectory::new(wps) {
                Ok(tr) => trajectories[l - 1] = Some(tr),
                Err(e) => errs.push(format!("leader {l}: {e}")),
            }
        }
        for &l in &spec.leaders {
            if trajectories[l - 1].is_none() {
                trajectories[l - 1] = Some(LeaderTrajectory::stationary(spec.t0, reference[l - 1].clone()));
            }
        }
        if !errs.is_empty() {
            return Err(ScenarioError::Schema(errs));
        }

        let violations = continuum::validate_structure(&reference, &spec.leaders, &spec.followers);
        if !violations.is_empty() {
            return Err(ScenarioError::Structure(violations));
        }
        let weights = WeightTable::compute(&reference, &spec.followers)
            .map_err(|e| ScenarioError::Schema(vec![format!("weights: {e}")]))?;

        let final_positions = match &spec.final_positions {
            Some(list) => {
                let mut out: Vec<Option<Point>> = vec![None; n];
                for ap in list {
                    if ap.id == 0 || ap.id > n || out[ap.id - 1].is_some() {
                        errs.push(format!("final_positions: bad or duplicate id {}", ap.id));
                    } else if check_point(&mut errs, &format!("final position of {}", ap.id), &ap.position, d) {
                        out[ap.id - 1] = Some(ap.position.clone());
                    }
                }
                if out.iter().any(Option::is_none) && errs.is_empty() {
                    errs.push("final_positions must list every agent".into());
                }
                if !errs.is_empty() {
                    return Err(ScenarioError::Schema(errs));
                }
                out.into_iter().map(Option::unwrap).collect()
            }
            None => {
                // Desired formation once every leader path has ended.
                let initial =
                    LeaderConfiguration::new(spec.leaders.iter().map(|&l| reference[l - 1].clone()).collect())
                        .expect("validated leaders");
                let last: Vec<Point> = spec
                    .leaders
                    .iter()
                    .map(|&l| {
                        let tr = trajectories[l - 1].as_ref().unwrap();
                        tr.waypoints()[tr.waypoints().len() - 1].position.clone()
                    })
                    .collect();
                let end = LeaderConfiguration::new(last)
                    .map_err(|e| ScenarioError::Schema(vec![format!("final leader waypoints: {e}")]))?;
                let ht = TransformSolver::new(&initial)
                    .solve(&end, spec.sim.tf)
                    .map_err(|e| ScenarioError::Schema(vec![format!("final leader waypoints: {e}")]))?;
                reference.iter().map(|p| ht.apply(p)).collect()
            }
        };

        let motion_space = spec.motion_space.iter().map(|c| Simplex::new(c.clone()).unwrap()).collect();
        let obstacles = spec.obstacles.iter().map(|c| Simplex::new(c.clone()).unwrap()).collect();
        Ok(Scenario { spec, reference, velocities, weights, trajectories, motion_space, obstacles, final_positions })
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dimension
    }

    pub fn n_agents(&self) -> usize {
        self.reference.len()
    }

    pub fn t0(&self) -> f64 {
        self.spec.t0
    }

    pub fn leaders(&self) -> &[usize] {
        &self.spec.leaders
    }

    pub fn followers(&self) -> Vec<usize> {
        self.spec.followers.iter().map(|f| f.id).collect()
    }

    pub fn is_leader(&self, id: usize) -> bool {
        self.spec.leaders.contains(&id)
    }

    /// Initial formation r^0, indexed by id − 1.
    pub fn reference_positions(&self) -> &[Point] {
        &self.reference
    }

    pub fn initial_states(&self) -> Vec<AgentState> {
        self.reference
            .iter()
            .zip(&self.velocities)
            .map(|(p, v)| AgentState { position: p.clone(), velocity: v.clone() })
            .collect()
    }

    pub fn weights(&self) -> &WeightTable {
        &self.weights
    }

    pub fn trajectory(&self, id: usize) -> Option<&LeaderTrajectory> {
        self.trajectories.get(id.wrapping_sub(1)).and_then(Option::as_ref)
    }

    pub fn gains(&self) -> ControlGains {
        self.spec.gains
    }

    pub fn margins(&self) -> MarginSpec {
        self.spec.margins
    }

    pub fn sim(&self) -> SimSpec {
        self.spec.sim
    }

    pub fn motion_space(&self) -> &[Simplex] {
        &self.motion_space
    }

    pub fn obstacles(&self) -> &[Simplex] {
        &self.obstacles
    }

    pub fn final_positions(&self) -> &[Point] {
        &self.final_positions
    }

    /// Leading simplex at t0.
    pub fn leading_simplex(&self) -> Simplex {
        Simplex::new(self.spec.leaders.iter().map(|&l| self.reference[l - 1].clone()).collect())
            .expect("validated leaders")
    }
}
