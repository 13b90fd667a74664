//! Arithmetic expressions over chart coordinates.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | 'pi' | 's' | ('x' | 'y') '[' index ']'
//!          | func '(' expr ')' | 'pow' '(' expr ',' expr ')' | '(' expr ')'
//! func    := 'sqrt' | 'sin' | 'cos' | 'exp' | 'log'
//! ```
//!
//! `x[i]` and `y[i]` are zero-based chart coordinates and tangent
//! components. `s` is a free scalar used by one-variable parameter functions
//! such as the Berwald–Rund generator `ψ(s)`.

use std::fmt;

use crate::error::{FinslerError, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Sin,
    Cos,
    Exp,
    Log,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    X(usize),
    Y(usize),
    S,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Power with a constant exponent.
    PowConst(Box<Expr>, f64),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Variable bindings for [`Expr::eval`].
pub struct Env<'a, S> {
    pub x: &'a [S],
    pub y: &'a [S],
    pub s: S,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn eval<S: Scalar>(&self, env: &Env<'_, S>) -> S {
        match self {
            Expr::Const(c) => S::from_f64(*c),
            Expr::X(i) => env.x[*i],
            Expr::Y(i) => env.y[*i],
            Expr::S => env.s,
            Expr::Neg(a) => -a.eval(env),
            Expr::Add(a, b) => a.eval(env) + b.eval(env),
            Expr::Sub(a, b) => a.eval(env) - b.eval(env),
            Expr::Mul(a, b) => a.eval(env) * b.eval(env),
            Expr::Div(a, b) => a.eval(env) / b.eval(env),
            Expr::PowConst(a, c) => a.eval(env).powf(*c),
            Expr::Pow(a, b) => a.eval(env).pow(b.eval(env)),
            Expr::Call(f, a) => {
                let v = a.eval(env);
                match f {
                    Func::Sqrt => v.sqrt(),
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Log => v.ln(),
                }
            }
        }
    }

    /// Evaluates an expression that depends on `x` only.
    pub fn eval_x<S: Scalar>(&self, x: &[S]) -> S {
        self.eval(&Env {
            x,
            y: &[],
            s: S::zero(),
        })
    }

    /// Largest `x` and `y` index referenced, and whether `s` appears.
    pub fn usage(&self) -> Usage {
        let mut u = Usage::default();
        self.visit(&mut |e| match e {
            Expr::X(i) => u.max_x = Some(u.max_x.map_or(*i, |m: usize| m.max(*i))),
            Expr::Y(i) => u.max_y = Some(u.max_y.map_or(*i, |m: usize| m.max(*i))),
            Expr::S => u.uses_s = true,
            _ => {}
        });
        u
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Neg(a) | Expr::PowConst(a, _) | Expr::Call(_, a) => a.visit(f),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }

    /// Checks that coordinate indices stay below `dim` and `s` is used only
    /// where allowed.
    pub fn validate(&self, dim: usize, allow_x: bool, allow_y: bool, allow_s: bool) -> Result<()> {
        let u = self.usage();
        let bad = |msg: String| Err(FinslerError::Expression { pos: 0, msg });
        match u.max_x {
            Some(_) if !allow_x => return bad(format!("`x[..]` not allowed in `{self}`")),
            Some(i) if i >= dim => return bad(format!("x[{i}] out of range for dimension {dim}")),
            _ => {}
        }
        match u.max_y {
            Some(_) if !allow_y => return bad(format!("`y[..]` not allowed in `{self}`")),
            Some(i) if i >= dim => return bad(format!("y[{i}] out of range for dimension {dim}")),
            _ => {}
        }
        if u.uses_s && !allow_s {
            return bad(format!("`s` not allowed in `{self}`"));
        }
        Ok(())
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    // Folding constructors used when models are assembled programmatically.

    pub fn c(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(p), Some(q)) => Expr::Const(p + q),
            (Some(p), _) if p == 0.0 => b,
            (_, Some(q)) if q == 0.0 => a,
            _ => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(p), Some(q)) => Expr::Const(p - q),
            (_, Some(q)) if q == 0.0 => a,
            _ => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(p), Some(q)) => Expr::Const(p * q),
            (Some(p), _) | (_, Some(p)) if p == 0.0 => Expr::Const(0.0),
            (Some(p), _) if p == 1.0 => b,
            (_, Some(q)) if q == 1.0 => a,
            _ => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(p), Some(q)) if q != 0.0 => Expr::Const(p / q),
            (Some(p), _) if p == 0.0 => Expr::Const(0.0),
            (_, Some(q)) if q == 1.0 => a,
            _ => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn sqrt(a: Expr) -> Expr {
        match a.as_const() {
            Some(p) if p >= 0.0 => Expr::Const(p.sqrt()),
            _ => Expr::Call(Func::Sqrt, Box::new(a)),
        }
    }

    /// `Σ_ij m[i][j]·y[i]·y[j]` with symmetric pairs merged.
    pub fn quadratic_form(m: &[Vec<Expr>]) -> Expr {
        let n = m.len();
        let mut acc = Expr::c(0.0);
        for i in 0..n {
            for j in i..n {
                let coeff = if i == j {
                    m[i][i].clone()
                } else {
                    Expr::add(m[i][j].clone(), m[j][i].clone())
                };
                let term = Expr::mul(coeff, Expr::mul(Expr::Y(i), Expr::Y(j)));
                acc = Expr::add(acc, term);
            }
        }
        acc
    }

    /// `Σ_i b[i]·y[i]`.
    pub fn linear_form(b: &[Expr]) -> Expr {
        b.iter().enumerate().fold(Expr::c(0.0), |acc, (i, bi)| {
            Expr::add(acc, Expr::mul(bi.clone(), Expr::Y(i)))
        })
    }
}

/// An expression in `x` and `y` viewed as a scalar field on the slit bundle.
pub struct ExprField<'a> {
    pub expr: &'a Expr,
    pub dim: usize,
}

impl crate::jet::ScalarField for ExprField<'_> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval<S: Scalar>(&self, x: &[S], y: &[S]) -> S {
        self.expr.eval(&Env { x, y, s: S::zero() })
    }
}

#[derive(Default, Debug, Clone, Copy, PartialEq, Eq)]
pub struct Usage {
    pub max_x: Option<usize>,
    pub max_y: Option<usize>,
    pub uses_s: bool,
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::X(i) => write!(f, "x[{i}]"),
            Expr::Y(i) => write!(f, "y[{i}]"),
            Expr::S => write!(f, "s"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::PowConst(a, c) => write!(f, "({a} ^ {c})"),
            Expr::Pow(a, b) => write!(f, "pow({a}, {b})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> FinslerError {
        FinslerError::Expression {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            let inner = self.unary()?;
            return Ok(match inner {
                Expr::Const(c) => Expr::Const(-c),
                other => Expr::Neg(Box::new(other)),
            });
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            return Ok(make_pow(base, exp));
        }
        Ok(base)
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && (s[i].is_ascii_digit() || s[i] == b'.') {
            i += 1;
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
                j += 1;
            }
            if j < s.len() && s[j].is_ascii_digit() {
                i = j;
                while i < s.len() && s[i].is_ascii_digit() {
                    i += 1;
                }
            }
        }
        let text = std::str::from_utf8(&s[start..i]).unwrap_or_default();
        match text.parse::<f64>() {
            Ok(v) => {
                self.pos = i;
                Ok(Expr::Const(v))
            }
            Err(_) => Err(self.error(&format!("malformed number `{text}`"))),
        }
    }

    fn index(&mut self) -> Result<usize> {
        self.expect(b'[')?;
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected integer index"));
        }
        let idx = std::str::from_utf8(&self.src[start..self.pos])
            .unwrap_or_default()
            .parse::<usize>()
            .map_err(|_| self.error("index too large"))?;
        self.expect(b']')?;
        Ok(idx)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                let name = self.ident();
                match name.as_str() {
                    "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                    "s" => Ok(Expr::S),
                    "x" => Ok(Expr::X(self.index()?)),
                    "y" => Ok(Expr::Y(self.index()?)),
                    "pow" => {
                        self.expect(b'(')?;
                        let a = self.expr()?;
                        self.expect(b',')?;
                        let b = self.expr()?;
                        self.expect(b')')?;
                        Ok(make_pow(a, b))
                    }
                    "sqrt" | "sin" | "cos" | "exp" | "log" => {
                        let func = match name.as_str() {
                            "sqrt" => Func::Sqrt,
                            "sin" => Func::Sin,
                            "cos" => Func::Cos,
                            "exp" => Func::Exp,
                            _ => Func::Log,
                        };
                        self.expect(b'(')?;
                        let a = self.expr()?;
                        self.expect(b')')?;
                        Ok(Expr::Call(func, Box::new(a)))
                    }
                    _ => {
                        self.pos = start;
                        Err(self.error(&format!("unknown identifier `{name}`")))
                    }
                }
            }
            Some(c) => Err(self.error(&format!("unexpected character `{}`", c as char))),
        }
    }
}

fn make_pow(base: Expr, exp: Expr) -> Expr {
    match exp {
        Expr::Const(c) => Expr::PowConst(Box::new(base), c),
        other => Expr::Pow(Box::new(base), Box::new(other)),
    }
}
