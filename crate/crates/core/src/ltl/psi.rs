//! The eight standard requirement formulas, instantiated for a scenario.
//!
//! | # | requirement |
//! |---|-------------|
//! | 1 | every agent stays within δ of its desired position |
//! | 2 | every follower stays in the desired leading simplex |
//! | 3 | no two agents come closer than 2ε |
//! | 4 | every agent stays in the motion space |
//! | 5 | no agent enters an obstacle |
//! | 6 | eventually every agent stays within the liveness tolerance of its final position |
//! | 7 | every leader stays in the motion space |
//! | 8 | no leader enters an obstacle |
//!
//! Containment in a simplex is expressed through affine barycentric
//! expressions α_m(r) = Σ_j W_mj r_j + W_m,d+1 with W the simplex's
//! barycentric matrix.

use nalgebra::DMatrix;
use thiserror::Error;

use super::{Expr, Formula};
use crate::geometry::{Simplex, CONTAIN_TOL};
use crate::scenario::Scenario;

pub const PSI_COUNT: usize = 8;

/// `strict` switches every containment atom from α ≥ −τ to α > 0.
/// `inflate` (ρ ≥ 0) tightens margins: δ becomes δ − ρ, ε becomes ε + ρ,
/// required containment becomes α ≥ ρ − τ and obstacles grow to α ≥ −τ − ρ.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PsiOptions {
    pub strict: bool,
    pub inflate: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PsiError {
    #[error("no requirement formula psi{0}; valid indices are 1..=8")]
    UnknownIndex(usize),
    #[error("the scenario has no {0}")]
    MissingField(&'static str),
    #[error("invalid margin inflation {0}: must be finite, non-negative and below the deviation bound")]
    InvalidInflation(f64),
    #[error("motion-space or obstacle cell {0} has no barycentric matrix")]
    DegenerateCell(usize),
}

fn coords(agent: usize, dim: usize, f: fn(usize, usize) -> Expr) -> Vec<Expr> {
    (1..=dim).map(|j| f(agent, j)).collect()
}

fn alphas(w: &DMatrix<f64>, agent: usize, dim: usize) -> Vec<Expr> {
    (0..=dim)
        .map(|m| {
            (0..dim).fold(Expr::Const(w[(m, dim)]), |acc, j| {
                Expr::add(acc, Expr::mul(Expr::Const(w[(m, j)]), Expr::actual(agent, j + 1)))
            })
        })
        .collect()
}

/// All α_m above `lower` (closed) or above `strict_bound` (strict).
fn bounded_below(alphas: Vec<Expr>, opts: &PsiOptions, lower: f64, strict_bound: f64) -> Formula {
    Formula::and_all(
        alphas
            .into_iter()
            .map(|a| {
                if opts.strict {
                    Formula::not(Formula::leq(a, Expr::Const(strict_bound)))
                } else {
                    Formula::leq(Expr::Const(lower), a)
                }
            })
            .collect(),
    )
}

fn matrices(cells: &[Simplex]) -> Result<Vec<DMatrix<f64>>, PsiError> {
    cells
        .iter()
        .enumerate()
        .map(|(i, c)| c.omega_matrix().map_err(|_| PsiError::DegenerateCell(i + 1)))
        .collect()
}

fn in_motion_space(agents: &[usize], s: &Scenario, opts: &PsiOptions) -> Result<Formula, PsiError> {
    if s.motion_space().is_empty() {
        return Err(PsiError::MissingField("motion_space"));
    }
    let ws = matrices(s.motion_space())?;
    let d = s.dim();
    Ok(Formula::and_all(
        agents
            .iter()
            .map(|&i| {
                Formula::always(Formula::or_all(
                    ws.iter()
                        .map(|w| bounded_below(alphas(w, i, d), opts, opts.inflate - CONTAIN_TOL, opts.inflate))
                        .collect(),
                ))
            })
            .collect(),
    ))
}

fn avoids_obstacles(agents: &[usize], s: &Scenario, opts: &PsiOptions) -> Result<Formula, PsiError> {
    let ws = matrices(s.obstacles())?;
    let d = s.dim();
    Ok(Formula::and_all(
        agents
            .iter()
            .map(|&i| {
                Formula::always(Formula::and_all(
                    ws.iter()
                        .map(|w| {
                            Formula::not(bounded_below(alphas(w, i, d), opts, -CONTAIN_TOL - opts.inflate, -opts.inflate))
                        })
                        .collect(),
                ))
            })
            .collect(),
    ))
}

/// Builds ψ_which (1..=8) for `scenario`.
pub fn build_psi(scenario: &Scenario, which: usize, opts: &PsiOptions) -> Result<Formula, PsiError> {
    if !(opts.inflate.is_finite() && opts.inflate >= 0.0) {
        return Err(PsiError::InvalidInflation(opts.inflate));
    }
    let d = scenario.dim();
    let n = scenario.n_agents();
    let all: Vec<usize> = (1..=n).collect();
    let margins = scenario.margins();
    match which {
        1 => {
            let bound = margins.deviation_bound - opts.inflate;
            if bound < 0.0 {
                return Err(PsiError::InvalidInflation(opts.inflate));
            }
            Ok(Formula::and_all(
                all.iter()
                    .map(|&i| {
                        let dev = Expr::squared_distance(coords(i, d, Expr::actual), coords(i, d, Expr::desired));
                        Formula::always(Formula::leq(dev, Expr::Const(bound * bound)))
                    })
                    .collect(),
            ))
        }
        2 => Ok(Formula::and_all(
            scenario
                .followers()
                .into_iter()
                .map(|i| {
                    let omegas = (1..=d + 1).map(|k| Expr::omega(i, k)).collect();
                    Formula::always(bounded_below(omegas, opts, opts.inflate - CONTAIN_TOL, opts.inflate))
                })
                .collect(),
        )),
        3 => {
            let sep = 2.0 * (margins.agent_radius + opts.inflate);
            let mut pairs = Vec::new();
            for i in 1..=n {
                for j in i + 1..=n {
                    let dist = Expr::squared_distance(coords(i, d, Expr::actual), coords(j, d, Expr::actual));
                    pairs.push(Formula::always(Formula::geq(dist, Expr::Const(sep * sep))));
                }
            }
            Ok(Formula::and_all(pairs))
        }
        4 => in_motion_space(&all, scenario, opts),
        5 => avoids_obstacles(&all, scenario, opts),
        6 => {
            let tol = margins.liveness_tol;
            let goals = scenario.final_positions();
            Ok(Formula::eventually(Formula::always(Formula::and_all(
                all.iter()
                    .map(|&i| {
                        let target = goals[i - 1].coords().iter().map(|&c| Expr::Const(c)).collect();
                        let dist = Expr::squared_distance(coords(i, d, Expr::actual), target);
                        Formula::leq(dist, Expr::Const(tol * tol))
                    })
                    .collect(),
            ))))
        }
        7 => in_motion_space(scenario.leaders(), scenario, opts),
        8 => avoids_obstacles(scenario.leaders(), scenario, opts),
        other => Err(PsiError::UnknownIndex(other)),
    }
}
