use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{BinOp, Expr, Formula, Var};
use crate::dynamics::Trace;
use crate::par::{self, Exec};

const DIV_EPS: f64 = 1e-300;

/// A finite sequence of states the monitor can read variables from.
pub trait Valuation {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn time(&self, k: usize) -> f64;

    /// `None` if the variable is not defined at sample k.
    fn value(&self, k: usize, var: Var) -> Option<f64>;
}

impl Valuation for Trace {
    fn len(&self) -> usize {
        Trace::len(self)
    }

    fn time(&self, k: usize) -> f64 {
        self.sample(k).t
    }

    fn value(&self, k: usize, var: Var) -> Option<f64> {
        let s = self.sample(k);
        match var {
            Var::Actual { agent, coord } => s.states.get(agent.checked_sub(1)?)?.position.coords().get(coord.checked_sub(1)?).copied(),
            Var::Desired { agent, coord } => s.desired.get(agent.checked_sub(1)?)?.coords().get(coord.checked_sub(1)?).copied(),
            Var::Omega { agent, component } => s
                .omega
                .get(agent.checked_sub(1)?)?
                .as_ref()?
                .get(component.checked_sub(1)?)
                .copied(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("variable {0} is not defined")]
    Undefined(Var),
    #[error("division by zero")]
    DivisionByZero,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SatError {
    #[error("the trace is empty")]
    EmptyTrace,
    #[error("position {k} is outside a trace of {len} samples")]
    OutOfRange { k: usize, len: usize },
    #[error("at t = {t} (sample {sample}): {source}")]
    Eval {
        sample: usize,
        t: f64,
        #[source]
        source: EvalError,
    },
}

pub fn eval_expr<V: Valuation + ?Sized>(e: &Expr, v: &V, k: usize) -> Result<f64, EvalError> {
    match e {
        Expr::Const(c) => Ok(*c),
        Expr::Var(var) => v.value(k, *var).ok_or(EvalError::Undefined(*var)),
        Expr::Bin(op, a, b) => {
            let x = eval_expr(a, v, k)?;
            let y = eval_expr(b, v, k)?;
            Ok(match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => {
                    if y.abs() < DIV_EPS {
                        return Err(EvalError::DivisionByZero);
                    }
                    x / y
                }
            })
        }
    }
}

/// The falsified atom at the earliest sample the monitor could attribute
/// the violation to. `atom` is prefixed with `!` when the atom held but its
/// negation was required.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub t: f64,
    pub sample: usize,
    pub atom: String,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub satisfied: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

#[derive(Clone, Copy, Debug)]
enum Node {
    True,
    Atom(usize),
    Not(usize),
    Or(usize, usize),
    Until(usize, usize),
}

/// A formula compiled to a post-ordered node arena. Each node is evaluated
/// once over the whole trace, so checking is linear in |φ| · |trace|.
pub struct Monitor<'f> {
    nodes: Vec<Node>,
    atoms: Vec<(&'f Expr, &'f Expr)>,
    root: usize,
}

struct Hit {
    atom: usize,
    sample: usize,
    negated: bool,
}

impl<'f> Monitor<'f> {
    pub fn new(formula: &'f Formula) -> Self {
        let mut m = Monitor {
            nodes: Vec::new(),
            atoms: Vec::new(),
            root: 0,
        };
        m.root = m.compile(formula);
        m
    }

    fn compile(&mut self, f: &'f Formula) -> usize {
        let node = match f {
            Formula::True => Node::True,
            Formula::Leq(a, b) => {
                self.atoms.push((a, b));
                Node::Atom(self.atoms.len() - 1)
            }
            Formula::Not(a) => Node::Not(self.compile(a)),
            Formula::Or(a, b) => {
                let a = self.compile(a);
                Node::Or(a, self.compile(b))
            }
            Formula::Until(a, b) => {
                let a = self.compile(a);
                Node::Until(a, self.compile(b))
            }
        };
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    /// Truth of every node at every sample.
    fn tables<V: Valuation + Sync + ?Sized>(&self, v: &V, exec: Exec) -> Result<Vec<Vec<bool>>, SatError> {
        let n = v.len();
        let atom_values = par::map_slice(&self.atoms, exec, |(a, b)| {
            (0..n)
                .map(|k| {
                    let lhs = eval_expr(a, v, k);
                    let rhs = eval_expr(b, v, k);
                    match (lhs, rhs) {
                        (Ok(x), Ok(y)) => Ok(x <= y),
                        (Err(e), _) | (_, Err(e)) => Err((k, e)),
                    }
                })
                .collect::<Result<Vec<bool>, _>>()
        });
        let mut atom_tables = Vec::with_capacity(atom_values.len());
        let mut first_err: Option<(usize, EvalError)> = None;
        for r in atom_values {
            match r {
                Ok(t) => atom_tables.push(t),
                Err((k, e)) => {
                    if first_err.as_ref().is_none_or(|(k0, _)| k < *k0) {
                        first_err = Some((k, e));
                    }
                }
            }
        }
        if let Some((sample, source)) = first_err {
            return Err(SatError::Eval {
                sample,
                t: v.time(sample),
                source,
            });
        }

        let mut tables: Vec<Vec<bool>> = Vec::with_capacity(self.nodes.len());
        let mut atom_tables = atom_tables.into_iter();
        for node in &self.nodes {
            let row = match *node {
                Node::True => vec![true; n],
                Node::Atom(_) => atom_tables.next().expect("atoms compiled in order"),
                Node::Not(a) => tables[a].iter().map(|x| !x).collect(),
                Node::Or(a, b) => tables[a].iter().zip(&tables[b]).map(|(x, y)| *x || *y).collect(),
                Node::Until(a, b) => {
                    let mut row = vec![false; n];
                    let mut next = false;
                    for k in (0..n).rev() {
                        next = tables[b][k] || (tables[a][k] && next);
                        row[k] = next;
                    }
                    row
                }
            };
            tables.push(row);
        }
        Ok(tables)
    }

    /// Evaluates the formula at sample `k`.
    pub fn check<V: Valuation + Sync + ?Sized>(&self, v: &V, k: usize, exec: Exec) -> Result<Verdict, SatError> {
        if v.is_empty() {
            return Err(SatError::EmptyTrace);
        }
        if k >= v.len() {
            return Err(SatError::OutOfRange { k, len: v.len() });
        }
        let tables = self.tables(v, exec)?;
        let satisfied = tables[self.root][k];
        let witness = if satisfied {
            None
        } else {
            self.explain(&tables, self.root, k, false, v.len()).map(|hit| {
                let (a, b) = self.atoms[hit.atom];
                let atom = format!("{a} <= {b}");
                Witness {
                    t: v.time(hit.sample),
                    sample: hit.sample,
                    atom: if hit.negated { format!("!({atom})") } else { atom },
                    lhs: eval_expr(a, v, hit.sample).unwrap_or(f64::NAN),
                    rhs: eval_expr(b, v, hit.sample).unwrap_or(f64::NAN),
                }
            })
        };
        Ok(Verdict { satisfied, witness })
    }

    /// Finds an atom responsible for `node` having value `want` at `k`.
    fn explain(&self, tables: &[Vec<bool>], node: usize, k: usize, want: bool, n: usize) -> Option<Hit> {
        debug_assert_eq!(tables[node][k], want);
        match self.nodes[node] {
            Node::True => None,
            Node::Atom(atom) => Some(Hit {
                atom,
                sample: k,
                negated: want,
            }),
            Node::Not(a) => self.explain(tables, a, k, !want, n),
            Node::Or(a, b) => {
                let candidates = [a, b].into_iter().filter(|&c| tables[c][k] == want);
                earliest(candidates.filter_map(|c| self.explain(tables, c, k, want, n)))
            }
            Node::Until(a, b) => {
                if want {
                    let j = (k..n).find(|&j| tables[b][j])?;
                    self.explain(tables, b, j, true, n)
                } else {
                    match (k..n).find(|&j| !tables[a][j]) {
                        Some(j) => earliest(
                            [self.explain(tables, a, j, false, n), self.explain(tables, b, j, false, n)]
                                .into_iter()
                                .flatten(),
                        ),
                        None => self.explain(tables, b, n - 1, false, n),
                    }
                }
            }
        }
    }
}

fn earliest(hits: impl Iterator<Item = Hit>) -> Option<Hit> {
    hits.fold(None, |best: Option<Hit>, h| match best {
        Some(b) if b.sample <= h.sample => Some(b),
        _ => Some(h),
    })
}

/// Decides whether `v, k ⊨ f`, reporting a witness on violation.
pub fn satisfies<V: Valuation + Sync + ?Sized>(f: &Formula, v: &V, k: usize) -> Result<Verdict, SatError> {
    Monitor::new(f).check(v, k, Exec::default())
}
