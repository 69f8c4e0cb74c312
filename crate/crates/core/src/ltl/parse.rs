use std::fmt;

use super::{BinOp, Expr, Formula, Var};

/// A syntax or index error with the character offset where it was detected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub position: usize,
    pub at_end: bool,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.at_end {
            write!(f, "syntax error at end of input: {}", self.message)
        } else {
            write!(f, "syntax error at position {}: {}", self.position, self.message)
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Plus,
    Minus,
    Star,
    Slash,
    Le,
    Ge,
    Lt,
    Gt,
    Bang,
    Amp,
    Pipe,
    Always,
    Eventually,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(x) => write!(f, "number {x}"),
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::LParen => write!(f, "'('"),
            Tok::RParen => write!(f, "')'"),
            Tok::LBrack => write!(f, "'['"),
            Tok::RBrack => write!(f, "']'"),
            Tok::Plus => write!(f, "'+'"),
            Tok::Minus => write!(f, "'-'"),
            Tok::Star => write!(f, "'*'"),
            Tok::Slash => write!(f, "'/'"),
            Tok::Le => write!(f, "'<='"),
            Tok::Ge => write!(f, "'>='"),
            Tok::Lt => write!(f, "'<'"),
            Tok::Gt => write!(f, "'>'"),
            Tok::Bang => write!(f, "'!'"),
            Tok::Amp => write!(f, "'&'"),
            Tok::Pipe => write!(f, "'|'"),
            Tok::Always => write!(f, "'G'"),
            Tok::Eventually => write!(f, "'F'"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let two = |a: char, b: char| c == a && chars.get(i + 1) == Some(&b);
        let tok = if two('<', '=') {
            i += 2;
            Tok::Le
        } else if two('>', '=') {
            i += 2;
            Tok::Ge
        } else if two('&', '&') {
            i += 2;
            Tok::Amp
        } else if two('|', '|') {
            i += 2;
            Tok::Pipe
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text.parse::<f64>().map_err(|_| ParseError {
                position: start,
                at_end: false,
                message: format!("malformed number '{text}'"),
            })?;
            Tok::Num(value)
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else {
            i += 1;
            match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBrack,
                ']' => Tok::RBrack,
                '+' => Tok::Plus,
                '-' | '−' => Tok::Minus,
                '*' | '×' => Tok::Star,
                '/' => Tok::Slash,
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                '≤' => Tok::Le,
                '≥' => Tok::Ge,
                '!' | '¬' => Tok::Bang,
                '&' | '∧' => Tok::Amp,
                '|' | '∨' => Tok::Pipe,
                '□' => Tok::Always,
                '◇' => Tok::Eventually,
                '⊤' => Tok::Ident("true".into()),
                '⊥' => Tok::Ident("false".into()),
                other => {
                    return Err(ParseError {
                        position: start,
                        at_end: false,
                        message: format!("unexpected character '{other}'"),
                    })
                }
            }
        };
        out.push((tok, start));
    }
    out.push((Tok::Eof, chars.len()));
    Ok(out)
}

#[derive(Clone, Copy)]
struct Bounds {
    agents: usize,
    dim: usize,
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    bounds: Option<Bounds>,
    furthest: Option<ParseError>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if t != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error(&mut self, message: impl Into<String>) -> ParseError {
        let err = ParseError {
            position: self.offset(),
            at_end: *self.peek() == Tok::Eof,
            message: message.into(),
        };
        self.record(err)
    }

    fn record(&mut self, err: ParseError) -> ParseError {
        match &self.furthest {
            Some(f) if f.position > err.position => f.clone(),
            _ => {
                self.furthest = Some(err.clone());
                err
            }
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            let found = self.peek().clone();
            Err(self.error(format!("expected {tok}, found {found}")))
        }
    }

    fn is_keyword(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == word)
    }

    fn formula(&mut self) -> PResult<Formula> {
        let lhs = self.disjunction()?;
        if self.is_keyword("U") {
            self.bump();
            let rhs = self.formula()?;
            return Ok(Formula::until(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> PResult<Formula> {
        let mut acc = self.conjunction()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            acc = Formula::or(acc, self.conjunction()?);
        }
        Ok(acc)
    }

    fn conjunction(&mut self) -> PResult<Formula> {
        let mut acc = self.unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            acc = Formula::and(acc, self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> PResult<Formula> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Always => {
                self.bump();
                Ok(Formula::always(self.unary()?))
            }
            Tok::Eventually => {
                self.bump();
                Ok(Formula::eventually(self.unary()?))
            }
            Tok::Ident(s) if s == "G" => {
                self.bump();
                Ok(Formula::always(self.unary()?))
            }
            Tok::Ident(s) if s == "F" => {
                self.bump();
                Ok(Formula::eventually(self.unary()?))
            }
            Tok::Ident(s) if s == "X" => Err(self.error("the next-step operator X is not supported")),
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> PResult<Formula> {
        if self.is_keyword("true") {
            self.bump();
            return Ok(Formula::True);
        }
        if self.is_keyword("false") {
            self.bump();
            return Ok(Formula::falsum());
        }
        if *self.peek() == Tok::LParen {
            let start = self.pos;
            let as_comparison = self.comparison();
            if as_comparison.is_ok() {
                return as_comparison;
            }
            let err_cmp = as_comparison.unwrap_err();
            let after_cmp = self.pos;
            self.pos = start;
            self.bump();
            let grouped = self.formula().and_then(|f| self.expect(Tok::RParen).map(|_| f));
            return match grouped {
                Ok(f) => Ok(f),
                Err(err_grp) => {
                    if err_cmp.position > err_grp.position {
                        self.pos = after_cmp;
                        Err(err_cmp)
                    } else {
                        Err(err_grp)
                    }
                }
            };
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<Formula> {
        let lhs = self.expr()?;
        let op = self.peek().clone();
        let f = match op {
            Tok::Le => {
                self.bump();
                Formula::leq(lhs, self.expr()?)
            }
            Tok::Ge => {
                self.bump();
                Formula::geq(lhs, self.expr()?)
            }
            Tok::Lt => {
                self.bump();
                Formula::not(Formula::geq(lhs, self.expr()?))
            }
            Tok::Gt => {
                self.bump();
                Formula::not(Formula::leq(lhs, self.expr()?))
            }
            other => return Err(self.error(format!("expected a comparison operator, found {other}"))),
        };
        if matches!(self.peek(), Tok::Le | Tok::Ge | Tok::Lt | Tok::Gt) {
            return Err(self.error("comparisons cannot be chained"));
        }
        Ok(f)
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut acc = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(acc),
            };
            self.bump();
            acc = Expr::bin(op, acc, self.term()?);
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut acc = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(acc),
            };
            self.bump();
            acc = Expr::bin(op, acc, self.factor()?);
        }
    }

    fn factor(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Minus => {
                self.bump();
                if let Tok::Num(x) = *self.peek() {
                    self.bump();
                    return Ok(Expr::Const(-x));
                }
                Ok(Expr::sub(Expr::Const(0.0), self.factor()?))
            }
            Tok::Num(x) => {
                self.bump();
                Ok(Expr::Const(x))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) if name == "r" || name == "rht" || name == "omega" => self.variable(&name),
            other => Err(self.error(format!("expected an expression, found {other}"))),
        }
    }

    fn index(&mut self) -> PResult<(usize, usize)> {
        self.expect(Tok::LBrack)?;
        let at = self.offset();
        let value = match self.bump() {
            Tok::Num(x) if x >= 1.0 && x.fract() == 0.0 && x < 1e9 => x as usize,
            Tok::Num(x) => {
                self.pos -= 1;
                return Err(self.error(format!("index {x} is not a positive integer")));
            }
            other => {
                if other != Tok::Eof {
                    self.pos -= 1;
                }
                return Err(self.error(format!("expected an index, found {other}")));
            }
        };
        self.expect(Tok::RBrack)?;
        Ok((value, at))
    }

    fn variable(&mut self, name: &str) -> PResult<Expr> {
        self.bump();
        let (agent, agent_at) = self.index()?;
        let (second, second_at) = self.index()?;
        let var = match name {
            "r" => Var::Actual { agent, coord: second },
            "rht" => Var::Desired { agent, coord: second },
            _ => Var::Omega { agent, component: second },
        };
        if let Some(b) = self.bounds {
            if agent > b.agents {
                return Err(self.record(ParseError {
                    position: agent_at,
                    at_end: false,
                    message: format!("agent index {agent} out of range 1..={}", b.agents),
                }));
            }
            let limit = if matches!(var, Var::Omega { .. }) { b.dim + 1 } else { b.dim };
            if second > limit {
                return Err(self.record(ParseError {
                    position: second_at,
                    at_end: false,
                    message: format!("index {second} out of range 1..={limit}"),
                }));
            }
        }
        Ok(Expr::Var(var))
    }
}

fn run(src: &str, bounds: Option<Bounds>) -> Result<Formula, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        bounds,
        furthest: None,
    };
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        let found = p.peek().clone();
        return Err(p.error(format!("unexpected {found}")));
    }
    Ok(f)
}

/// Parses a formula. Indices must be positive; ranges are not checked.
pub fn parse_formula(src: &str) -> Result<Formula, ParseError> {
    run(src, None)
}

/// Parses a formula and checks every variable against `agents` agents in
/// dimension `dim` (`omega` components range over 1..=dim+1).
pub fn parse_formula_checked(src: &str, agents: usize, dim: usize) -> Result<Formula, ParseError> {
    run(src, Some(Bounds { agents, dim }))
}
