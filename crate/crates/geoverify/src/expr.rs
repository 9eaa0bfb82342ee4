//! Scalar expression language over chart coordinates and named parameters.
//!
//! Expressions are parsed once per chart and then evaluated many times, either
//! for plain values or as second-order jets (value, gradient, Hessian) with
//! exact chain-rule propagation. The jet path is what makes Christoffel
//! symbols and curvature exact up to rounding; no finite differencing happens
//! here.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Grammar, for reference:
/// ```text
/// expr   := term (('+'|'-') term)*
/// term   := factor (('*'|'/') factor)*
/// factor := '-' factor | power
/// power  := atom ('^' factor)?          exponent must fold to a constant
/// atom   := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'
/// ```
/// `^` binds tighter than unary minus, so `-x^2` is `-(x^2)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Index into the chart's coordinate list.
    Coord(usize),
    /// Index into the chart's parameter list.
    Param(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Base raised to a constant exponent. General `f^g` is rejected at parse
    /// time; write `exp(g*log(f))` if that is really wanted.
    Pow(Box<Expr>, f64),
    Un(UnaryFn, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryFn {
    Exp,
    Log,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Sqrt,
}

impl UnaryFn {
    fn name(self) -> &'static str {
        match self {
            UnaryFn::Exp => "exp",
            UnaryFn::Log => "log",
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Sinh => "sinh",
            UnaryFn::Cosh => "cosh",
            UnaryFn::Sqrt => "sqrt",
        }
    }

    fn from_name(s: &str) -> Option<UnaryFn> {
        Some(match s {
            "exp" => UnaryFn::Exp,
            "log" => UnaryFn::Log,
            "sin" => UnaryFn::Sin,
            "cos" => UnaryFn::Cos,
            "sinh" => UnaryFn::Sinh,
            "cosh" => UnaryFn::Cosh,
            "sqrt" => UnaryFn::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("unknown symbol '{0}'")]
    UnknownSymbol(String),
    #[error("unbalanced parentheses")]
    Unbalanced,
    #[error("unexpected input '{0}' at byte {1}")]
    Unexpected(String, usize),
    #[error("empty operand at byte {0}")]
    EmptyOperand(usize),
    #[error("exponent does not fold to a finite constant")]
    NonConstantExponent,
    #[error("division by a literal zero")]
    ZeroDenominator,
    #[error("bad number literal '{0}'")]
    BadNumber(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("domain violation: {0}")]
    Domain(&'static str),
    #[error("division by zero during evaluation")]
    DivisionByZero,
    #[error("parameter slot {0} has no bound value")]
    UnboundParam(usize),
    #[error("coordinate slot {0} outside point of dimension {1}")]
    BadCoordSlot(usize, usize),
}

/// Second-order jet at a point: value, gradient and (exactly symmetric)
/// Hessian with respect to the chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

impl Jet2 {
    pub fn constant(v: f64, dim: usize) -> Jet2 {
        Jet2 { value: v, grad: DVector::zeros(dim), hess: DMatrix::zeros(dim, dim) }
    }

    pub fn coordinate(v: f64, slot: usize, dim: usize) -> Jet2 {
        let mut grad = DVector::zeros(dim);
        grad[slot] = 1.0;
        Jet2 { value: v, grad, hess: DMatrix::zeros(dim, dim) }
    }
}

// ---------------------------------------------------------------------------
// Parsing

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    coords: Vec<&'a str>,
    params: Vec<&'a str>,
}

/// Parses `text` against the given coordinate and parameter names.
/// Symbols resolve to indices at parse time, so evaluation never sees names.
pub fn parse<S: AsRef<str>>(text: &str, coords: &[S], params: &[S]) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        coords: coords.iter().map(|s| s.as_ref()).collect(),
        params: params.iter().map(|s| s.as_ref()).collect(),
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        if p.peek() == Some(b')') {
            return Err(ParseError::Unbalanced);
        }
        return Err(ParseError::Unexpected(p.rest_snippet(), p.pos));
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn rest_snippet(&self) -> String {
        let rest = &self.src[self.pos..];
        let take = rest.len().min(8);
        String::from_utf8_lossy(&rest[..take]).into_owned()
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    if matches!(rhs, Expr::Const(c) if c == 0.0) {
                        return Err(ParseError::ZeroDenominator);
                    }
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.factor()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        self.skip_ws();
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp_tree = self.factor()?;
            let c = const_fold(&exp_tree).ok_or(ParseError::NonConstantExponent)?;
            if !c.is_finite() {
                return Err(ParseError::NonConstantExponent);
            }
            return Ok(Expr::Pow(Box::new(base), c));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        match self.peek() {
            None => Err(ParseError::EmptyOperand(self.pos)),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.skip_ws();
                if self.peek() != Some(b')') {
                    return Err(ParseError::Unbalanced);
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(_) => Err(ParseError::Unexpected(self.rest_snippet(), self.pos)),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == b'.') {
            self.pos += 1;
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            // exponent part only counts if followed by digits (optionally signed)
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                self.pos = mark;
            }
        }
        let lexeme = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        lexeme
            .parse::<f64>()
            .map(Expr::Const)
            .map_err(|_| ParseError::BadNumber(lexeme.to_owned()))
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if let Some(f) = UnaryFn::from_name(name) {
            self.skip_ws();
            if self.peek() != Some(b'(') {
                return Err(ParseError::Unexpected(self.rest_snippet(), self.pos));
            }
            self.pos += 1;
            let arg = self.expr()?;
            self.skip_ws();
            if self.peek() != Some(b')') {
                return Err(ParseError::Unbalanced);
            }
            self.pos += 1;
            return Ok(Expr::Un(f, Box::new(arg)));
        }
        if let Some(i) = self.coords.iter().position(|c| *c == name) {
            return Ok(Expr::Coord(i));
        }
        if let Some(i) = self.params.iter().position(|p| *p == name) {
            return Ok(Expr::Param(i));
        }
        Err(ParseError::UnknownSymbol(name.to_owned()))
    }
}

/// Folds an expression containing no coordinates or parameters to a value.
pub fn const_fold(e: &Expr) -> Option<f64> {
    Some(match e {
        Expr::Const(c) => *c,
        Expr::Coord(_) | Expr::Param(_) => return None,
        Expr::Neg(a) => -const_fold(a)?,
        Expr::Add(a, b) => const_fold(a)? + const_fold(b)?,
        Expr::Sub(a, b) => const_fold(a)? - const_fold(b)?,
        Expr::Mul(a, b) => const_fold(a)? * const_fold(b)?,
        Expr::Div(a, b) => const_fold(a)? / const_fold(b)?,
        Expr::Pow(a, c) => const_fold(a)?.powf(*c),
        Expr::Un(f, a) => {
            let v = const_fold(a)?;
            match f {
                UnaryFn::Exp => v.exp(),
                UnaryFn::Log => v.ln(),
                UnaryFn::Sin => v.sin(),
                UnaryFn::Cos => v.cos(),
                UnaryFn::Sinh => v.sinh(),
                UnaryFn::Cosh => v.cosh(),
                UnaryFn::Sqrt => v.sqrt(),
            }
        }
    })
}

// ---------------------------------------------------------------------------
// Evaluation

/// Plain value evaluation. Used by finite-difference oracles and scalar
/// tracking along geodesics; the jet path below is the primary one.
pub fn eval_value(e: &Expr, point: &[f64], params: &[f64]) -> Result<f64, EvalError> {
    Ok(match e {
        Expr::Const(c) => *c,
        Expr::Coord(i) => {
            *point.get(*i).ok_or(EvalError::BadCoordSlot(*i, point.len()))?
        }
        Expr::Param(i) => *params.get(*i).ok_or(EvalError::UnboundParam(*i))?,
        Expr::Neg(a) => -eval_value(a, point, params)?,
        Expr::Add(a, b) => eval_value(a, point, params)? + eval_value(b, point, params)?,
        Expr::Sub(a, b) => eval_value(a, point, params)? - eval_value(b, point, params)?,
        Expr::Mul(a, b) => eval_value(a, point, params)? * eval_value(b, point, params)?,
        Expr::Div(a, b) => {
            let den = eval_value(b, point, params)?;
            if den == 0.0 {
                return Err(EvalError::DivisionByZero);
            }
            eval_value(a, point, params)? / den
        }
        Expr::Pow(a, c) => {
            let v = eval_value(a, point, params)?;
            pow_value(v, *c)?
        }
        Expr::Un(f, a) => {
            let v = eval_value(a, point, params)?;
            match f {
                UnaryFn::Exp => v.exp(),
                UnaryFn::Log => {
                    if v <= 0.0 {
                        return Err(EvalError::Domain("log of non-positive value"));
                    }
                    v.ln()
                }
                UnaryFn::Sin => v.sin(),
                UnaryFn::Cos => v.cos(),
                UnaryFn::Sinh => v.sinh(),
                UnaryFn::Cosh => v.cosh(),
                UnaryFn::Sqrt => {
                    if v < 0.0 {
                        return Err(EvalError::Domain("sqrt of negative value"));
                    }
                    v.sqrt()
                }
            }
        }
    })
}

fn pow_value(v: f64, c: f64) -> Result<f64, EvalError> {
    if c == 0.0 {
        return Ok(1.0);
    }
    if c.fract() == 0.0 && c.abs() <= i32::MAX as f64 {
        if v == 0.0 && c < 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        return Ok(v.powi(c as i32));
    }
    if v < 0.0 {
        return Err(EvalError::Domain("negative base with non-integer exponent"));
    }
    Ok(v.powf(c))
}

/// Evaluates the second-order jet of `e` at `point`.
///
/// All rules are exact chain rules; the Hessian stays bitwise symmetric
/// because every rule builds it from symmetric pieces.
pub fn eval_jet2(e: &Expr, point: &[f64], params: &[f64]) -> Result<Jet2, EvalError> {
    let dim = point.len();
    Ok(match e {
        Expr::Const(c) => Jet2::constant(*c, dim),
        Expr::Coord(i) => {
            let v = *point.get(*i).ok_or(EvalError::BadCoordSlot(*i, dim))?;
            Jet2::coordinate(v, *i, dim)
        }
        Expr::Param(i) => {
            let v = *params.get(*i).ok_or(EvalError::UnboundParam(*i))?;
            Jet2::constant(v, dim)
        }
        Expr::Neg(a) => {
            let u = eval_jet2(a, point, params)?;
            Jet2 { value: -u.value, grad: -u.grad, hess: -u.hess }
        }
        Expr::Add(a, b) => {
            let (u, w) = (eval_jet2(a, point, params)?, eval_jet2(b, point, params)?);
            Jet2 { value: u.value + w.value, grad: u.grad + w.grad, hess: u.hess + w.hess }
        }
        Expr::Sub(a, b) => {
            let (u, w) = (eval_jet2(a, point, params)?, eval_jet2(b, point, params)?);
            Jet2 { value: u.value - w.value, grad: u.grad - w.grad, hess: u.hess - w.hess }
        }
        Expr::Mul(a, b) => {
            let (u, w) = (eval_jet2(a, point, params)?, eval_jet2(b, point, params)?);
            mul_jet(&u, &w)
        }
        Expr::Div(a, b) => {
            let (u, w) = (eval_jet2(a, point, params)?, eval_jet2(b, point, params)?);
            if w.value == 0.0 {
                return Err(EvalError::DivisionByZero);
            }
            let iv = 1.0 / w.value;
            let r = compose(&w, iv, -iv * iv, 2.0 * iv * iv * iv);
            mul_jet(&u, &r)
        }
        Expr::Pow(a, c) => {
            let u = eval_jet2(a, point, params)?;
            let c = *c;
            let f0 = pow_value(u.value, c)?;
            let f1 = if c == 0.0 { 0.0 } else { c * pow_value(u.value, c - 1.0)? };
            let f2 = if c == 0.0 || c == 1.0 {
                0.0
            } else {
                c * (c - 1.0) * pow_value(u.value, c - 2.0)?
            };
            compose(&u, f0, f1, f2)
        }
        Expr::Un(f, a) => {
            let u = eval_jet2(a, point, params)?;
            let v = u.value;
            let (f0, f1, f2) = match f {
                UnaryFn::Exp => {
                    let ev = v.exp();
                    (ev, ev, ev)
                }
                UnaryFn::Log => {
                    if v <= 0.0 {
                        return Err(EvalError::Domain("log of non-positive value"));
                    }
                    (v.ln(), 1.0 / v, -1.0 / (v * v))
                }
                UnaryFn::Sin => (v.sin(), v.cos(), -v.sin()),
                UnaryFn::Cos => (v.cos(), -v.sin(), -v.cos()),
                UnaryFn::Sinh => (v.sinh(), v.cosh(), v.sinh()),
                UnaryFn::Cosh => (v.cosh(), v.sinh(), v.cosh()),
                UnaryFn::Sqrt => {
                    if v < 0.0 {
                        return Err(EvalError::Domain("sqrt of negative value"));
                    }
                    if v == 0.0 {
                        return Err(EvalError::Domain("sqrt not differentiable at zero"));
                    }
                    let s = v.sqrt();
                    (s, 0.5 / s, -0.25 / (s * v))
                }
            };
            compose(&u, f0, f1, f2)
        }
    })
}

fn mul_jet(u: &Jet2, w: &Jet2) -> Jet2 {
    let outer = &u.grad * w.grad.transpose();
    Jet2 {
        value: u.value * w.value,
        grad: &u.grad * w.value + &w.grad * u.value,
        hess: &u.hess * w.value + &w.hess * u.value + &outer + outer.transpose(),
    }
}

/// Chain rule for f(u) given f, f', f'' at u.value.
fn compose(u: &Jet2, f0: f64, f1: f64, f2: f64) -> Jet2 {
    let outer = &u.grad * u.grad.transpose();
    Jet2 { value: f0, grad: &u.grad * f1, hess: &u.hess * f1 + outer * f2 }
}

// ---------------------------------------------------------------------------
// Programmatic construction (used by the catalog and by instance generators)

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn coord(i: usize) -> Expr {
        Expr::Coord(i)
    }

    pub fn param(i: usize) -> Expr {
        Expr::Param(i)
    }

    pub fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }

    pub fn pow(self, c: f64) -> Expr {
        Expr::Pow(Box::new(self), c)
    }

    pub fn exp(self) -> Expr {
        Expr::Un(UnaryFn::Exp, Box::new(self))
    }

    pub fn log(self) -> Expr {
        Expr::Un(UnaryFn::Log, Box::new(self))
    }

    pub fn sin(self) -> Expr {
        Expr::Un(UnaryFn::Sin, Box::new(self))
    }

    pub fn cos(self) -> Expr {
        Expr::Un(UnaryFn::Cos, Box::new(self))
    }

    /// Renders the expression with the given symbol names. Parentheses are
    /// inserted so that parsing the output reproduces the same tree shape up
    /// to sign-of-product placement, which evaluates bit-identically.
    pub fn render<S: AsRef<str>>(&self, coords: &[S], params: &[S]) -> String {
        let mut s = String::new();
        self.fmt_prec(&mut s, coords, params, 0);
        s
    }

    fn level(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            // a negative literal prints with a leading minus and binds like one
            Expr::Const(c) if c.is_sign_negative() => 3,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn fmt_prec<S: AsRef<str>>(&self, out: &mut String, coords: &[S], params: &[S], min: u8) {
        let lvl = self.level();
        let need = lvl < min;
        if need {
            out.push('(');
        }
        match self {
            Expr::Const(c) => out.push_str(&format!("{}", c)),
            Expr::Coord(i) => out.push_str(coords[*i].as_ref()),
            Expr::Param(i) => out.push_str(params[*i].as_ref()),
            Expr::Neg(a) => {
                out.push('-');
                a.fmt_prec(out, coords, params, 3);
            }
            Expr::Add(a, b) => {
                a.fmt_prec(out, coords, params, 1);
                out.push_str(" + ");
                b.fmt_prec(out, coords, params, 2);
            }
            Expr::Sub(a, b) => {
                a.fmt_prec(out, coords, params, 1);
                out.push_str(" - ");
                b.fmt_prec(out, coords, params, 2);
            }
            Expr::Mul(a, b) => {
                a.fmt_prec(out, coords, params, 2);
                out.push('*');
                b.fmt_prec(out, coords, params, 3);
            }
            Expr::Div(a, b) => {
                a.fmt_prec(out, coords, params, 2);
                out.push('/');
                b.fmt_prec(out, coords, params, 3);
            }
            Expr::Pow(a, c) => {
                a.fmt_prec(out, coords, params, 5);
                out.push('^');
                if *c < 0.0 {
                    out.push_str(&format!("({})", c));
                } else {
                    out.push_str(&format!("{}", c));
                }
            }
            Expr::Un(f, a) => {
                out.push_str(f.name());
                out.push('(');
                a.fmt_prec(out, coords, params, 0);
                out.push(')');
            }
        }
        if need {
            out.push(')');
        }
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Div(Box::new(self), Box::new(rhs))
    }
}
