//! Independent reference implementations used to cross-check the library.

use cdspec::ltl::{BinOp, Expr, Formula, Valuation, Var};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Values of r[1..=agents][1..=2] per sample.
#[derive(Clone, Debug)]
pub struct Table {
    pub agents: usize,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn get(&self, k: usize, agent: usize, coord: usize) -> f64 {
        self.rows[k][(agent - 1) * 2 + (coord - 1)]
    }
}

impl Valuation for Table {
    fn len(&self) -> usize {
        self.rows.len()
    }

    fn time(&self, k: usize) -> f64 {
        k as f64
    }

    fn value(&self, k: usize, var: Var) -> Option<f64> {
        match var {
            Var::Actual { agent, coord } if agent >= 1 && agent <= self.agents && (1..=2).contains(&coord) => Some(self.get(k, agent, coord)),
            _ => None,
        }
    }
}

fn value(e: &Expr, tr: &Table, k: usize) -> f64 {
    match e {
        Expr::Const(c) => *c,
        Expr::Var(Var::Actual { agent, coord }) => tr.get(k, *agent, *coord),
        Expr::Var(other) => panic!("oracle does not model {other}"),
        Expr::Bin(op, a, b) => {
            let (x, y) = (value(a, tr, k), value(b, tr, k));
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => x / y,
            }
        }
    }
}

/// Literal recursive satisfaction over sample indices.
pub fn holds(f: &Formula, tr: &Table, k: usize) -> bool {
    match f {
        Formula::True => true,
        Formula::Leq(a, b) => value(a, tr, k) <= value(b, tr, k),
        Formula::Not(a) => !holds(a, tr, k),
        Formula::Or(a, b) => holds(a, tr, k) || holds(b, tr, k),
        Formula::Until(a, b) => (k..tr.rows.len()).any(|k2| holds(b, tr, k2) && (k..k2).all(|k3| holds(a, tr, k3))),
    }
}

pub fn random_table(rng: &mut ChaCha8Rng, agents: usize, max_len: usize) -> Table {
    let len = rng.random_range(1..=max_len);
    let rows = (0..len)
        .map(|_| (0..agents * 2).map(|_| rng.random_range(0..4) as f64).collect())
        .collect();
    Table { agents, rows }
}

pub fn random_expr(rng: &mut ChaCha8Rng, agents: usize, depth: usize) -> Expr {
    if depth == 0 || rng.random_bool(0.5) {
        return if rng.random_bool(0.6) {
            Expr::actual(rng.random_range(1..=agents), rng.random_range(1..=2))
        } else {
            Expr::Const(rng.random_range(-2..5) as f64)
        };
    }
    let op = [BinOp::Add, BinOp::Sub, BinOp::Mul][rng.random_range(0..3)];
    Expr::bin(op, random_expr(rng, agents, depth - 1), random_expr(rng, agents, depth - 1))
}

/// Random formula of depth ≤ `depth`, mixing core and derived constructors.
pub fn random_formula(rng: &mut ChaCha8Rng, agents: usize, depth: usize) -> Formula {
    if depth == 0 {
        return match rng.random_range(0..6) {
            0 => Formula::True,
            1 => Formula::falsum(),
            _ => Formula::leq(random_expr(rng, agents, 1), random_expr(rng, agents, 1)),
        };
    }
    let sub = |rng: &mut ChaCha8Rng| random_formula(rng, agents, depth - 1);
    match rng.random_range(0..9) {
        0 => sub(rng),
        1 => Formula::not(sub(rng)),
        2 => Formula::or(sub(rng), sub(rng)),
        3 => Formula::and(sub(rng), sub(rng)),
        4 | 5 => Formula::until(sub(rng), sub(rng)),
        6 => Formula::always(sub(rng)),
        7 => Formula::eventually(sub(rng)),
        _ => Formula::leq(random_expr(rng, agents, 2), random_expr(rng, agents, 2)),
    }
}

/// Random expression including division and non-integer constants, for
/// printer/parser round trips.
pub fn random_print_expr(rng: &mut ChaCha8Rng, depth: usize) -> Expr {
    if depth == 0 || rng.random_bool(0.3) {
        return match rng.random_range(0..5) {
            0 => Expr::actual(rng.random_range(1..=9), rng.random_range(1..=3)),
            1 => Expr::desired(rng.random_range(1..=9), rng.random_range(1..=3)),
            2 => Expr::omega(rng.random_range(1..=9), rng.random_range(1..=4)),
            3 => Expr::Const(rng.random_range(-1e3..1e3)),
            _ => Expr::Const(rng.random_range(-1e-8..1e-8)),
        };
    }
    let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][rng.random_range(0..4)];
    Expr::bin(op, random_print_expr(rng, depth - 1), random_print_expr(rng, depth - 1))
}

pub fn random_print_formula(rng: &mut ChaCha8Rng, depth: usize) -> Formula {
    if depth == 0 || rng.random_bool(0.15) {
        return match rng.random_range(0..4) {
            0 => Formula::True,
            1 => Formula::falsum(),
            _ => Formula::leq(random_print_expr(rng, 3), random_print_expr(rng, 3)),
        };
    }
    let sub = |rng: &mut ChaCha8Rng| random_print_formula(rng, depth - 1);
    match rng.random_range(0..8) {
        0 => Formula::not(sub(rng)),
        1 => Formula::or(sub(rng), sub(rng)),
        2 => Formula::and(sub(rng), sub(rng)),
        3 => Formula::until(sub(rng), sub(rng)),
        4 => Formula::always(sub(rng)),
        5 => Formula::eventually(sub(rng)),
        6 => Formula::geq(random_print_expr(rng, 2), random_print_expr(rng, 2)),
        _ => Formula::not(Formula::not(sub(rng))),
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[(i, j)].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let mut rot = DMatrix::identity(n, n);
                rot[(p, p)] = c;
                rot[(q, q)] = c;
                rot[(p, q)] = s;
                rot[(q, p)] = -s;
                a = rot.transpose() * &a * &rot;
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}
