//! LTL without Next over sampled traces.
//!
//! Atoms are comparisons `e1 <= e2` between arithmetic expressions over
//! trace variables. The core connectives are ⊤, ≤, ¬, ∨ and U; the
//! constructors for ⊥, ∧, □ and ◇ expand into them, so every formula is
//! stored in core form:
//!
//! ```text
//! ⊥ = ¬⊤     φ ∧ ψ = ¬(¬φ ∨ ¬ψ)     ◇φ = ⊤ U φ     □φ = ¬◇¬φ
//! ```
//!
//! Satisfaction is evaluated over the samples of a finite trace: `φ U ψ`
//! holds at k iff ψ holds at some k' ≥ k in the trace and φ holds on
//! [k, k'). `□φ` therefore means "at every remaining sample".

mod monitor;
mod parse;
mod psi;

pub use monitor::{eval_expr, satisfies, EvalError, Monitor, SatError, Valuation, Verdict, Witness};
pub use parse::{parse_formula, parse_formula_checked, ParseError};
pub use psi::{build_psi, PsiError, PsiOptions, PSI_COUNT};

use std::fmt;

/// A trace variable. Agent, coordinate and component indices are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    /// r_{i,j}: actual position.
    Actual { agent: usize, coord: usize },
    /// r^HT_{i,j}: desired position.
    Desired { agent: usize, coord: usize },
    /// k-th barycentric coordinate of follower i in the desired leading simplex.
    Omega { agent: usize, component: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Mul,
    Add,
    Sub,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Mul => '*',
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Div => '/',
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn actual(agent: usize, coord: usize) -> Expr {
        Expr::Var(Var::Actual { agent, coord })
    }

    pub fn desired(agent: usize, coord: usize) -> Expr {
        Expr::Var(Var::Desired { agent, coord })
    }

    pub fn omega(agent: usize, component: usize) -> Expr {
        Expr::Var(Var::Omega { agent, component })
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::bin(BinOp::Add, a, b)
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::bin(BinOp::Sub, a, b)
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::bin(BinOp::Mul, a, b)
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::bin(BinOp::Div, a, b)
    }

    /// `e × e`.
    pub fn square(e: Expr) -> Expr {
        Expr::mul(e.clone(), e)
    }

    /// Σ_j (a_j − b_j)² over paired coordinate expressions.
    pub fn squared_distance(a: Vec<Expr>, b: Vec<Expr>) -> Expr {
        assert_eq!(a.len(), b.len());
        a.into_iter()
            .zip(b)
            .map(|(x, y)| Expr::square(Expr::sub(x, y)))
            .reduce(Expr::add)
            .expect("at least one coordinate")
    }

    pub fn visit_vars(&self, f: &mut impl FnMut(Var)) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => f(*v),
            Expr::Bin(_, a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Var::Actual { agent, coord } => write!(f, "r[{agent}][{coord}]"),
            Var::Desired { agent, coord } => write!(f, "rht[{agent}][{coord}]"),
            Var::Omega { agent, component } => write!(f, "omega[{agent}][{component}]"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

/// A formula in core form.
#[derive(Clone, Debug, PartialEq)]
pub enum Formula {
    True,
    Leq(Expr, Expr),
    Not(Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
}

#[allow(clippy::should_implement_trait)]
impl Formula {
    pub fn falsum() -> Formula {
        Formula::not(Formula::True)
    }

    pub fn leq(a: Expr, b: Expr) -> Formula {
        Formula::Leq(a, b)
    }

    /// `a ≥ b`, stored as `b ≤ a`.
    pub fn geq(a: Expr, b: Expr) -> Formula {
        Formula::Leq(b, a)
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::or(Formula::not(a), Formula::not(b)))
    }

    pub fn until(a: Formula, b: Formula) -> Formula {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn eventually(f: Formula) -> Formula {
        Formula::until(Formula::True, f)
    }

    pub fn always(f: Formula) -> Formula {
        Formula::not(Formula::eventually(Formula::not(f)))
    }

    /// Balanced conjunction; ⊤ when empty.
    pub fn and_all(items: Vec<Formula>) -> Formula {
        balanced(items, Formula::and).unwrap_or(Formula::True)
    }

    /// Balanced disjunction; ⊥ when empty.
    pub fn or_all(items: Vec<Formula>) -> Formula {
        balanced(items, Formula::or).unwrap_or_else(Formula::falsum)
    }

    /// Recognizes ⊥.
    pub fn as_falsum(&self) -> bool {
        matches!(self, Formula::Not(inner) if **inner == Formula::True)
    }

    /// Recognizes `¬(¬a ∨ ¬b)` and returns (a, b).
    pub fn as_and(&self) -> Option<(&Formula, &Formula)> {
        if let Formula::Not(inner) = self {
            if let Formula::Or(a, b) = &**inner {
                if let (Formula::Not(a), Formula::Not(b)) = (&**a, &**b) {
                    return Some((a, b));
                }
            }
        }
        None
    }

    /// Recognizes `⊤ U φ`.
    pub fn as_eventually(&self) -> Option<&Formula> {
        match self {
            Formula::Until(a, b) if **a == Formula::True => Some(b),
            _ => None,
        }
    }

    /// Recognizes `¬(⊤ U ¬φ)`.
    pub fn as_always(&self) -> Option<&Formula> {
        if let Formula::Not(inner) = self {
            if let Some(Formula::Not(f)) = inner.as_eventually() {
                return Some(f);
            }
        }
        None
    }

    pub fn visit_vars(&self, f: &mut impl FnMut(Var)) {
        match self {
            Formula::True => {}
            Formula::Leq(a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
            Formula::Not(a) => a.visit_vars(f),
            Formula::Or(a, b) | Formula::Until(a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::Leq(..) => 1,
            Formula::Not(a) => 1 + a.size(),
            Formula::Or(a, b) | Formula::Until(a, b) => 1 + a.size() + b.size(),
        }
    }
}

fn balanced(mut items: Vec<Formula>, join: fn(Formula, Formula) -> Formula) -> Option<Formula> {
    match items.len() {
        0 => None,
        1 => items.pop(),
        n => {
            let right = items.split_off(n / 2);
            Some(join(balanced(items, join)?, balanced(right, join)?))
        }
    }
}

struct Operand<'a>(&'a Formula);

impl fmt::Display for Operand<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Formula::Leq(..) => write!(f, "({})", self.0),
            other => write!(f, "{other}"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.as_falsum() {
            return write!(f, "false");
        }
        if let Some(inner) = self.as_always() {
            return write!(f, "G {}", Operand(inner));
        }
        if let Some((a, b)) = self.as_and() {
            return write!(f, "({a} & {b})");
        }
        if let Some(inner) = self.as_eventually() {
            return write!(f, "F {}", Operand(inner));
        }
        match self {
            Formula::True => write!(f, "true"),
            Formula::Leq(a, b) => write!(f, "{a} <= {b}"),
            Formula::Not(a) => write!(f, "!{}", Operand(a)),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Until(a, b) => write!(f, "({a} U {b})"),
        }
    }
}
