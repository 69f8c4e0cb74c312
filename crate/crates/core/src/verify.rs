//! End-to-end verification of a trace against a scenario's requirements.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::Trace;
use crate::geometry::{min_pairwise_distance, Closure, Point, CONTAIN_TOL};
use crate::ltl::{build_psi, Formula, Monitor, PsiError, PsiOptions, SatError, Verdict, Witness};
use crate::par::{self, Exec};
use crate::safety::{check_eigenvalue_certificate, check_leader_only, compute_margins, EigenvalueCertificate, LeaderCheck, SafetyError, SafetyMargins};
use crate::scenario::Scenario;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("trace does not match scenario: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Psi(#[from] PsiError),
    #[error("{name}: {source}")]
    Sat {
        name: String,
        #[source]
        source: SatError,
    },
    #[error(transparent)]
    Safety(#[from] SafetyError),
}

#[derive(Clone, Debug, Default)]
pub struct VerifyRequest {
    /// ψ indices in 1..=8.
    pub psi: Vec<usize>,
    pub custom: Vec<(String, Formula)>,
    pub options: PsiOptions,
    pub exec: Exec,
}

impl VerifyRequest {
    pub fn all_psi() -> Self {
        VerifyRequest { psi: (1..=8).collect(), ..Default::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub h: f64,
    pub t0: f64,
    pub tf: f64,
    pub samples: usize,
    pub agents: usize,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormulaReport {
    pub name: String,
    pub formula: String,
    pub satisfied: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub trace: TraceSummary,
    pub margins: SafetyMargins,
    pub theorem1: EigenvalueCertificate,
    pub psi7: Verdict,
    pub psi8: Verdict,
    pub liveness: Verdict,
    pub formulas: Vec<FormulaReport>,
    /// Requirements implied by the certificates above.
    pub certified: Vec<String>,
    /// Whether every requested formula holds.
    pub satisfied: bool,
}

impl VerificationReport {
    pub fn formula(&self, name: &str) -> Option<&FormulaReport> {
        self.formulas.iter().find(|f| f.name == name)
    }
}

pub fn check_compatible(scenario: &Scenario, trace: &Trace) -> Result<(), VerifyError> {
    if trace.dim() != scenario.dim() {
        return Err(VerifyError::Mismatch(format!("trace is {}-D, scenario is {}-D", trace.dim(), scenario.dim())));
    }
    if trace.n_agents() != scenario.n_agents() {
        return Err(VerifyError::Mismatch(format!("trace has {} agents, scenario has {}", trace.n_agents(), scenario.n_agents())));
    }
    if trace.leaders() != scenario.leaders() {
        return Err(VerifyError::Mismatch("leader ids differ".into()));
    }
    Ok(())
}

fn summary(trace: &Trace) -> TraceSummary {
    let s = trace.samples();
    let t0 = s.first().map_or(0.0, |x| x.t);
    let tf = s.last().map_or(0.0, |x| x.t);
    TraceSummary {
        h: if s.len() > 1 { (tf - t0) / (s.len() - 1) as f64 } else { 0.0 },
        t0,
        tf,
        samples: s.len(),
        agents: trace.n_agents(),
        dim: trace.dim(),
    }
}

fn check_named(name: &str, f: &Formula, trace: &Trace, exec: Exec) -> Result<Verdict, VerifyError> {
    Monitor::new(f)
        .check(trace, 0, exec)
        .map_err(|source| VerifyError::Sat { name: name.to_string(), source })
}

pub fn verify(scenario: &Scenario, trace: &Trace, req: &VerifyRequest) -> Result<VerificationReport, VerifyError> {
    check_compatible(scenario, trace)?;
    let exec = req.exec;
    let margins = compute_margins(scenario)?;
    let theorem1 = check_eigenvalue_certificate(trace, &margins, exec);
    let psi7 = check_leader_only(trace, scenario, LeaderCheck::MotionSpace, exec);
    let psi8 = check_leader_only(trace, scenario, LeaderCheck::Obstacles, exec);
    let liveness = check_named("psi6", &build_psi(scenario, 6, &req.options)?, trace, exec)?;

    let mut jobs: Vec<(String, Option<usize>, Formula)> = Vec::new();
    let mut seen = Vec::new();
    for &k in &req.psi {
        if !seen.contains(&k) {
            seen.push(k);
            jobs.push((format!("psi{k}"), Some(k), build_psi(scenario, k, &req.options)?));
        }
    }
    for (name, f) in &req.custom {
        jobs.push((name.clone(), None, f.clone()));
    }

    let results = par::map_slice(&jobs, exec, |(name, which, f)| {
        let verdict = check_named(name, f, trace, exec)?;
        let detail = match (*which, &verdict.witness) {
            (Some(k), Some(w)) => describe_violation(scenario, trace, k, w),
            _ => None,
        };
        Ok::<_, VerifyError>(FormulaReport {
            name: name.clone(),
            formula: f.to_string(),
            satisfied: verdict.satisfied,
            witness: verdict.witness,
            detail,
        })
    });
    let formulas = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let psi2_holds = theorem1.satisfied || formulas.iter().any(|f| f.name == "psi2" && f.satisfied);
    let mut certified = Vec::new();
    if theorem1.satisfied {
        certified.extend(["psi2".to_string(), "psi3".to_string()]);
    }
    if psi2_holds && psi7.satisfied && !scenario.motion_space().is_empty() {
        certified.push("psi4".into());
    }
    if psi2_holds && psi8.satisfied {
        certified.push("psi5".into());
    }

    let satisfied = formulas.iter().all(|f| f.satisfied);
    Ok(VerificationReport {
        trace: summary(trace),
        margins,
        theorem1,
        psi7,
        psi8,
        liveness,
        formulas,
        certified,
        satisfied,
    })
}

fn in_cell(cell: &crate::geometry::Simplex, p: &Point) -> bool {
    cell.contains(p, Closure::Closed).unwrap_or(false)
}

/// A human-readable account of which agents break requirement `which` at the
/// witness sample.
pub fn describe_violation(scenario: &Scenario, trace: &Trace, which: usize, w: &Witness) -> Option<String> {
    let s = trace.samples().get(w.sample)?;
    let pos = |i: usize| &s.states[i - 1].position;
    let all: Vec<usize> = (1..=scenario.n_agents()).collect();
    let group = if matches!(which, 7 | 8) { scenario.leaders().to_vec() } else { all };
    let m = scenario.margins();
    match which {
        1 => {
            let (i, dev) = (1..=s.states.len()).map(|i| (i, s.deviation(i - 1))).max_by(|a, b| a.1.total_cmp(&b.1))?;
            Some(format!("agent {i} is {dev:.6} m from its desired position (bound {})", m.deviation_bound))
        }
        2 => {
            let bad: Vec<String> = scenario
                .followers()
                .into_iter()
                .filter(|&i| s.omega[i - 1].as_ref().is_some_and(|o| o.iter().any(|&a| a < -CONTAIN_TOL)))
                .map(|i| i.to_string())
                .collect();
            (!bad.is_empty()).then(|| format!("follower(s) {} outside the leading simplex", bad.join(", ")))
        }
        3 => {
            let pts: Vec<Point> = s.states.iter().map(|a| a.position.clone()).collect();
            let (dist, (i, j)) = min_pairwise_distance(&pts).ok()?;
            Some(format!("agents {} and {} are {dist:.6} m apart (need {})", i + 1, j + 1, 2.0 * m.agent_radius))
        }
        4 | 7 => {
            let i = group.into_iter().find(|&i| !scenario.motion_space().iter().any(|c| in_cell(c, pos(i))))?;
            Some(format!("agent {i} is outside every motion-space cell"))
        }
        5 | 8 => group.into_iter().find_map(|i| {
            scenario
                .obstacles()
                .iter()
                .position(|c| in_cell(c, pos(i)))
                .map(|o| format!("agent {i} is inside obstacle {}", o + 1))
        }),
        6 => {
            let goals = scenario.final_positions();
            let (i, dist) = (1..=s.states.len()).map(|i| (i, pos(i).distance(&goals[i - 1]))).max_by(|a, b| a.1.total_cmp(&b.1))?;
            Some(format!("agent {i} is {dist:.6} m from its final position (tolerance {})", m.liveness_tol))
        }
        _ => None,
    }
}
