//! Whitelisted closed-form expressions in `(t, x, u)`.
//!
//! Scenario files describe warps, conformal factors, potentials, reaction
//! terms and initial data as short formulas. They are parsed into [`Expr`],
//! differentiated symbolically and evaluated in any [`Real`] type.
//!
//! Grammar (usual precedence, `^` binds tighter than unary minus and is right
//! associative):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Identifiers: `t`, `x` (alias `r`), `u`, `pi`, `e`, and the functions
//! `sin cos tan sinh cosh tanh exp log sqrt`.

use std::fmt;

use thiserror::Error;

use crate::scalar::{lit, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    T,
    X,
    U,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::X => "x",
            Var::U => "u",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    #[inline]
    fn apply<T: Real>(self, a: T) -> T {
        match self {
            Func::Sin => a.sin(),
            Func::Cos => a.cos(),
            Func::Tan => a.tan(),
            Func::Sinh => a.sinh(),
            Func::Cosh => a.cosh(),
            Func::Tanh => a.tanh(),
            Func::Exp => a.exp(),
            Func::Log => a.ln(),
            Func::Sqrt => a.sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("unexpected character '{ch}' at column {col}")]
    UnexpectedChar { ch: char, col: usize },
    #[error("unknown identifier '{name}' at column {col}")]
    UnknownIdent { name: String, col: usize },
    #[error("malformed number '{text}' at column {col}")]
    BadNumber { text: String, col: usize },
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("unexpected token at column {col}")]
    UnexpectedToken { col: usize },
    #[error("variable '{name}' is not allowed in this expression")]
    ForbiddenVar { name: &'static str },
}

/// Evaluation point.
#[derive(Clone, Copy, Debug, Default)]
pub struct Env<T> {
    pub t: T,
    pub x: T,
    pub u: T,
}

impl<T: Real> Env<T> {
    pub fn new(t: T, x: T, u: T) -> Self {
        Env { t, x, u }
    }

    #[inline]
    fn get(&self, v: Var) -> T {
        match v {
            Var::T => self.t,
            Var::X => self.x,
            Var::U => self.u,
        }
    }
}

impl Expr {
    pub fn zero() -> Expr {
        Expr::Const(0.0)
    }

    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    /// Parses `src`, accepting any of the variables `t`, `x`/`r`, `u`.
    pub fn parse(src: &str) -> Result<Expr, ParseError> {
        let toks = lex(src)?;
        let mut p = Parser { toks, pos: 0 };
        let e = p.expr()?;
        match p.toks.get(p.pos) {
            None => Ok(e),
            Some((_, col)) => Err(ParseError::UnexpectedToken { col: *col }),
        }
    }

    /// Parses `src` and rejects variables outside `allowed`.
    pub fn parse_with(src: &str, allowed: &[Var]) -> Result<Expr, ParseError> {
        let e = Expr::parse(src)?;
        for v in [Var::T, Var::X, Var::U] {
            if e.depends_on(v) && !allowed.contains(&v) {
                return Err(ParseError::ForbiddenVar { name: v.name() });
            }
        }
        Ok(e)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(w) => *w == v,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on(v),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.depends_on(v) || b.depends_on(v),
        }
    }

    #[inline]
    pub fn eval<T: Real>(&self, env: &Env<T>) -> T {
        match self {
            Expr::Const(c) => lit(*c),
            Expr::Var(v) => env.get(*v),
            Expr::Neg(a) => -a.eval(env),
            Expr::Add(a, b) => a.eval(env) + b.eval(env),
            Expr::Sub(a, b) => a.eval(env) - b.eval(env),
            Expr::Mul(a, b) => a.eval(env) * b.eval(env),
            Expr::Div(a, b) => a.eval(env) / b.eval(env),
            Expr::Pow(a, b) => {
                let base = a.eval(env);
                match **b {
                    Expr::Const(c) if c.fract() == 0.0 && c.abs() <= 64.0 => base.powi(c as i32),
                    Expr::Const(c) if c == 0.5 => base.sqrt(),
                    _ => base.powf(b.eval(env)),
                }
            }
            Expr::Call(f, a) => f.apply(a.eval(env)),
        }
    }

    /// Convenience evaluation at `(t, x, u)`.
    #[inline]
    pub fn at<T: Real>(&self, t: T, x: T, u: T) -> T {
        self.eval(&Env { t, x, u })
    }

    /// Symbolic partial derivative.
    pub fn diff(&self, v: Var) -> Expr {
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var(w) => Expr::Const(if *w == v { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.diff(v)),
            Expr::Add(a, b) => add(a.diff(v), b.diff(v)),
            Expr::Sub(a, b) => sub(a.diff(v), b.diff(v)),
            Expr::Mul(a, b) => add(
                mul(a.diff(v), (**b).clone()),
                mul((**a).clone(), b.diff(v)),
            ),
            Expr::Div(a, b) => {
                let da = a.diff(v);
                let db = b.diff(v);
                sub(
                    div(da, (**b).clone()),
                    div(mul((**a).clone(), db), mul((**b).clone(), (**b).clone())),
                )
            }
            Expr::Pow(a, b) => {
                let da = a.diff(v);
                if let Some(c) = b.as_const() {
                    mul(
                        mul(Expr::Const(c), pow((**a).clone(), Expr::Const(c - 1.0))),
                        da,
                    )
                } else {
                    let db = b.diff(v);
                    mul(
                        self.clone(),
                        add(
                            mul(db, call(Func::Log, (**a).clone())),
                            div(mul((**b).clone(), da), (**a).clone()),
                        ),
                    )
                }
            }
            Expr::Call(f, a) => {
                let da = a.diff(v);
                if da.is_zero() {
                    return Expr::zero();
                }
                let a = (**a).clone();
                let outer = match f {
                    Func::Sin => call(Func::Cos, a),
                    Func::Cos => neg(call(Func::Sin, a)),
                    Func::Tan => add(
                        Expr::Const(1.0),
                        pow(call(Func::Tan, a), Expr::Const(2.0)),
                    ),
                    Func::Sinh => call(Func::Cosh, a),
                    Func::Cosh => call(Func::Sinh, a),
                    Func::Tanh => sub(
                        Expr::Const(1.0),
                        pow(call(Func::Tanh, a), Expr::Const(2.0)),
                    ),
                    Func::Exp => call(Func::Exp, a),
                    Func::Log => div(Expr::Const(1.0), a),
                    Func::Sqrt => div(Expr::Const(0.5), call(Func::Sqrt, a)),
                };
                mul(outer, da)
            }
        }
    }

    /// Replaces every occurrence of `v` by `with`.
    pub fn substitute(&self, v: Var, with: &Expr) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(w) => {
                if *w == v {
                    with.clone()
                } else {
                    Expr::Var(*w)
                }
            }
            Expr::Neg(a) => neg(a.substitute(v, with)),
            Expr::Add(a, b) => add(a.substitute(v, with), b.substitute(v, with)),
            Expr::Sub(a, b) => sub(a.substitute(v, with), b.substitute(v, with)),
            Expr::Mul(a, b) => mul(a.substitute(v, with), b.substitute(v, with)),
            Expr::Div(a, b) => div(a.substitute(v, with), b.substitute(v, with)),
            Expr::Pow(a, b) => pow(a.substitute(v, with), b.substitute(v, with)),
            Expr::Call(f, a) => call(*f, a.substitute(v, with)),
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

// Folding constructors. They keep derivative trees small and make
// derivatives of constants exactly zero.

pub fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

pub fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
        _ if a.is_zero() => b,
        _ if b.is_zero() => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
        _ if b.is_zero() => a,
        _ if a.is_zero() => neg(b),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
        _ if a.is_zero() || b.is_zero() => Expr::zero(),
        (Expr::Const(c), _) if *c == 1.0 => b,
        (_, Expr::Const(c)) if *c == 1.0 => a,
        (Expr::Const(c), _) if *c == -1.0 => neg(b),
        (_, Expr::Const(c)) if *c == -1.0 => neg(a),
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

pub fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) if *y != 0.0 => Expr::Const(x / y),
        _ if a.is_zero() => Expr::zero(),
        (_, Expr::Const(c)) if *c == 1.0 => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

pub fn pow(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (_, Expr::Const(c)) if *c == 0.0 => Expr::Const(1.0),
        (_, Expr::Const(c)) if *c == 1.0 => a,
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x.powf(*y)),
        _ => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

pub fn call(f: Func, a: Expr) -> Expr {
    match (f, &a) {
        (_, Expr::Const(c)) => Expr::Const(f.apply(*c)),
        _ => Expr::Call(f, Box::new(a)),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if *c < 0.0 {
                    write!(f, "({c:?})")
                } else {
                    write!(f, "{c:?}")
                }
            }
            Expr::Var(v) => write!(f, "{}", v.name()),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| ParseError::BadNumber { text: text.clone(), col })?;
            out.push((Tok::Num(v), col));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else if "+-*/^()".contains(c) {
            out.push((Tok::Op(c), col));
            i += 1;
        } else {
            return Err(ParseError::UnexpectedChar { ch: c, col });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek_op(&self) -> Option<char> {
        match self.toks.get(self.pos) {
            Some((Tok::Op(c), _)) => Some(*c),
            _ => None,
        }
    }

    fn expect_op(&mut self, op: char) -> Result<(), ParseError> {
        match self.toks.get(self.pos) {
            Some((Tok::Op(c), _)) if *c == op => {
                self.pos += 1;
                Ok(())
            }
            Some((_, col)) => Err(ParseError::UnexpectedToken { col: *col }),
            None => Err(ParseError::UnexpectedEnd),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(op) = self.peek_op() {
            if op != '+' && op != '-' {
                break;
            }
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' { add(lhs, rhs) } else { sub(lhs, rhs) };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_op() {
            if op != '*' && op != '/' {
                break;
            }
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' { mul(lhs, rhs) } else { div(lhs, rhs) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            return Ok(neg(self.unary()?));
        }
        if self.peek_op() == Some('+') {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(pow(base, exp));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let (tok, col) = match self.toks.get(self.pos) {
            Some(t) => t.clone(),
            None => return Err(ParseError::UnexpectedEnd),
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect_op(')')?;
                Ok(e)
            }
            Tok::Op(_) => Err(ParseError::UnexpectedToken { col }),
            Tok::Ident(name) => {
                if let Some(f) = Func::from_name(&name) {
                    self.expect_op('(')?;
                    let arg = self.expr()?;
                    self.expect_op(')')?;
                    return Ok(call(f, arg));
                }
                match name.as_str() {
                    "t" => Ok(Expr::Var(Var::T)),
                    "x" | "r" => Ok(Expr::Var(Var::X)),
                    "u" => Ok(Expr::Var(Var::U)),
                    "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                    "e" => Ok(Expr::Const(std::f64::consts::E)),
                    _ => Err(ParseError::UnknownIdent { name, col }),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, t: f64, x: f64, u: f64) -> f64 {
        Expr::parse(src).unwrap().at(t, x, u)
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("1 + 2 * 3", 0.0, 0.0, 0.0), 7.0);
        assert_eq!(ev("-2^2", 0.0, 0.0, 0.0), -4.0);
        assert_eq!(ev("2^3^2", 0.0, 0.0, 0.0), 512.0);
        assert_eq!(ev("(1 + 2) * 3", 0.0, 0.0, 0.0), 9.0);
        assert_eq!(ev("8 / 4 / 2", 0.0, 0.0, 0.0), 1.0);
        assert_eq!(ev("1.5e-3 * 2e3", 0.0, 0.0, 0.0), 3.0);
    }

    #[test]
    fn variables_and_alias() {
        assert_eq!(ev("t + 10*x + 100*u", 1.0, 2.0, 3.0), 321.0);
        assert_eq!(ev("r", 0.0, 4.0, 0.0), 4.0);
    }

    #[test]
    fn rejects_unknown_names() {
        assert!(matches!(
            Expr::parse("y + 1"),
            Err(ParseError::UnknownIdent { .. })
        ));
        assert!(matches!(Expr::parse("abs(x)"), Err(ParseError::UnknownIdent { .. })));
        assert!(matches!(Expr::parse("x $ 2"), Err(ParseError::UnexpectedChar { .. })));
        assert!(Expr::parse("sin(x").is_err());
        assert!(Expr::parse("x +").is_err());
        assert!(Expr::parse("x x").is_err());
    }

    #[test]
    fn forbidden_variable() {
        assert!(Expr::parse_with("x + t", &[Var::X, Var::T]).is_ok());
        assert_eq!(
            Expr::parse_with("u", &[Var::X, Var::T]),
            Err(ParseError::ForbiddenVar { name: "u" })
        );
    }

    #[test]
    fn derivative_of_constant_is_exact_zero() {
        let e = Expr::parse("3 * 2 + pi").unwrap();
        assert!(e.diff(Var::X).is_zero());
        let s = Expr::parse("sin(t) * 4").unwrap();
        assert!(s.diff(Var::X).is_zero());
    }

    #[test]
    fn derivatives_match_hand_formulas() {
        let e = Expr::parse("u * log(u)").unwrap();
        let du = e.diff(Var::U);
        let duu = du.diff(Var::U);
        let u = 2.5_f64;
        assert!((du.at(0.0, 0.0, u) - (u.ln() + 1.0)).abs() < 1e-14);
        assert!((duu.at(0.0, 0.0, u) - 1.0 / u).abs() < 1e-14);

        let g = Expr::parse("x ^ x").unwrap();
        let x = 1.7_f64;
        let want = x.powf(x) * (x.ln() + 1.0);
        assert!((g.diff(Var::X).at(0.0, x, 0.0) - want).abs() < 1e-12);

        let h = Expr::parse("tanh(2*x) + tan(x) + sqrt(x) + cosh(x) + exp(-x)").unwrap();
        let want = 2.0 * (1.0 - (2.0 * x).tanh().powi(2))
            + 1.0 / x.cos().powi(2)
            + 0.5 / x.sqrt()
            + x.sinh()
            - (-x).exp();
        assert!((h.diff(Var::X).at(0.0, x, 0.0) - want).abs() < 1e-12);
    }

    #[test]
    fn substitution() {
        let e = Expr::parse("u^2 + x").unwrap();
        let s = e.substitute(Var::U, &Expr::parse("sin(x)").unwrap());
        let x = 0.3_f64;
        assert!((s.at(0.0, x, 0.0) - (x.sin().powi(2) + x)).abs() < 1e-15);
        assert!(!s.depends_on(Var::U));
    }

    #[test]
    fn display_round_trips() {
        let e = Expr::parse("-(x^2) / (1 + exp(-t)) - 2.5*u").unwrap();
        let back = Expr::parse(&e.to_string()).unwrap();
        for &(t, x, u) in &[(0.1, 0.2, 0.3), (1.0, -2.0, 4.0)] {
            assert_eq!(e.at(t, x, u), back.at(t, x, u));
        }
    }

    #[test]
    fn generic_f32() {
        let e = Expr::parse("x^2 + 1").unwrap();
        let v: f32 = e.at(0.0f32, 2.0f32, 0.0f32);
        assert_eq!(v, 5.0);
    }
}
