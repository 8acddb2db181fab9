//! Expression language for metric components and defining functions.
//!
//! Grammar (standard precedence, `^` right-associative and binding tighter
//! than unary minus):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' exponent)?
//! atom    := number | 'pi' | 'x1'..'x9' | func '(' expr ')' | '(' expr ')'
//! func    := sqrt | exp | log | sin | cos | tanh
//! ```
//!
//! Exponents are constant rationals: `x^2`, `x^-1`, `x^(1/2)`, `x^0.5`.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use thiserror::Error;

use crate::{Jet, JetError};

const MAX_DEPTH: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { message: String, line: usize, column: usize },
    #[error("expression nesting exceeds depth {0}")]
    Depth(usize),
    #[error("variable x{index} out of range for dimension {dim}")]
    VariableOutOfRange { index: usize, dim: usize },
    #[error(transparent)]
    Jet(#[from] JetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Tanh,
}

impl UnaryOp {
    fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tanh => "tanh",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "sqrt" => UnaryOp::Sqrt,
            "exp" => UnaryOp::Exp,
            "log" => UnaryOp::Log,
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "tanh" => UnaryOp::Tanh,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Rational exponent in lowest terms with positive denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Exponent {
    pub num: i64,
    pub den: i64,
}

impl Exponent {
    pub fn new(num: i64, den: i64) -> Option<Self> {
        if den == 0 {
            return None;
        }
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()) as i64;
        let s = if den < 0 { -1 } else { 1 };
        Some(Self { num: s * num / g.max(1), den: s * den / g.max(1) })
    }

    pub fn integer(n: i64) -> Self {
        Self { num: n, den: 1 }
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprAst {
    Const(f64),
    Pi,
    /// Zero-based coordinate index (`x1` is `Var(0)`).
    Var(usize),
    Unary(UnaryOp, Box<ExprAst>),
    Binary(BinaryOp, Box<ExprAst>, Box<ExprAst>),
    Pow(Box<ExprAst>, Exponent),
}

impl ExprAst {
    pub fn constant(c: f64) -> Self {
        ExprAst::Const(c)
    }

    pub fn var(i: usize) -> Self {
        ExprAst::Var(i)
    }

    pub fn unary(op: UnaryOp, a: ExprAst) -> Self {
        ExprAst::Unary(op, Box::new(a))
    }

    pub fn sqrt(self) -> Self {
        Self::unary(UnaryOp::Sqrt, self)
    }

    pub fn exp(self) -> Self {
        Self::unary(UnaryOp::Exp, self)
    }

    pub fn log(self) -> Self {
        Self::unary(UnaryOp::Log, self)
    }

    pub fn sin(self) -> Self {
        Self::unary(UnaryOp::Sin, self)
    }

    pub fn cos(self) -> Self {
        Self::unary(UnaryOp::Cos, self)
    }

    pub fn pow(self, num: i64, den: i64) -> Self {
        ExprAst::Pow(Box::new(self), Exponent::new(num, den).expect("nonzero denominator"))
    }

    /// Largest variable index used, plus one.
    pub fn arity(&self) -> usize {
        match self {
            ExprAst::Const(_) | ExprAst::Pi => 0,
            ExprAst::Var(i) => i + 1,
            ExprAst::Unary(_, a) | ExprAst::Pow(a, _) => a.arity(),
            ExprAst::Binary(_, a, b) => a.arity().max(b.arity()),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            ExprAst::Const(_) | ExprAst::Pi | ExprAst::Var(_) => 1,
            ExprAst::Unary(_, a) | ExprAst::Pow(a, _) => 1 + a.depth(),
            ExprAst::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Replaces each variable `x_i` by `subs[i]`.
    pub fn substitute(&self, subs: &[ExprAst]) -> ExprAst {
        match self {
            ExprAst::Var(i) => subs[*i].clone(),
            ExprAst::Const(_) | ExprAst::Pi => self.clone(),
            ExprAst::Unary(op, a) => ExprAst::Unary(*op, Box::new(a.substitute(subs))),
            ExprAst::Pow(a, e) => ExprAst::Pow(Box::new(a.substitute(subs)), *e),
            ExprAst::Binary(op, a, b) => {
                ExprAst::Binary(*op, Box::new(a.substitute(subs)), Box::new(b.substitute(subs)))
            }
        }
    }

    /// Pointwise evaluation.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ExprAst::Const(c) => *c,
            ExprAst::Pi => std::f64::consts::PI,
            ExprAst::Var(i) => x[*i],
            ExprAst::Unary(op, a) => {
                let v = a.eval(x);
                match op {
                    UnaryOp::Neg => -v,
                    UnaryOp::Sqrt => v.sqrt(),
                    UnaryOp::Exp => v.exp(),
                    UnaryOp::Log => v.ln(),
                    UnaryOp::Sin => v.sin(),
                    UnaryOp::Cos => v.cos(),
                    UnaryOp::Tanh => v.tanh(),
                }
            }
            ExprAst::Pow(a, e) => {
                let v = a.eval(x);
                if e.den == 1 {
                    v.powi(e.num as i32)
                } else {
                    v.powf(e.as_f64())
                }
            }
            ExprAst::Binary(op, a, b) => {
                let (u, v) = (a.eval(x), b.eval(x));
                match op {
                    BinaryOp::Add => u + v,
                    BinaryOp::Sub => u - v,
                    BinaryOp::Mul => u * v,
                    BinaryOp::Div => u / v,
                }
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            ExprAst::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 1,
            ExprAst::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => 2,
            ExprAst::Unary(UnaryOp::Neg, _) => 3,
            ExprAst::Const(c) if *c < 0.0 => 3,
            ExprAst::Pow(..) => 4,
            _ => 5,
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &ExprAst, min_prec: u8) -> fmt::Result {
    if e.precedence() < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for ExprAst {
    /// Prints in the input grammar; reparsing yields an equal tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprAst::Const(c) => write!(f, "{c:?}"),
            ExprAst::Pi => write!(f, "pi"),
            ExprAst::Var(i) => write!(f, "x{}", i + 1),
            ExprAst::Unary(UnaryOp::Neg, a) => {
                write!(f, "-")?;
                write_child(f, a, 4)
            }
            ExprAst::Unary(op, a) => write!(f, "{}({a})", op.name()),
            ExprAst::Pow(a, e) => {
                write_child(f, a, 5)?;
                if e.den == 1 {
                    if e.num < 0 {
                        write!(f, "^({})", e.num)
                    } else {
                        write!(f, "^{}", e.num)
                    }
                } else {
                    write!(f, "^({}/{})", e.num, e.den)
                }
            }
            ExprAst::Binary(op, a, b) => {
                let (sym, lp, rp) = match op {
                    BinaryOp::Add => ("+", 1, 2),
                    BinaryOp::Sub => ("-", 1, 2),
                    BinaryOp::Mul => ("*", 2, 3),
                    BinaryOp::Div => ("/", 2, 3),
                };
                write_child(f, a, lp)?;
                write!(f, " {sym} ")?;
                write_child(f, b, rp)
            }
        }
    }
}

macro_rules! ast_binop {
    ($tr:ident, $m:ident, $op:expr) => {
        impl $tr for ExprAst {
            type Output = ExprAst;
            fn $m(self, rhs: ExprAst) -> ExprAst {
                ExprAst::Binary($op, Box::new(self), Box::new(rhs))
            }
        }
        impl $tr<f64> for ExprAst {
            type Output = ExprAst;
            fn $m(self, rhs: f64) -> ExprAst {
                ExprAst::Binary($op, Box::new(self), Box::new(ExprAst::Const(rhs)))
            }
        }
        impl $tr<ExprAst> for f64 {
            type Output = ExprAst;
            fn $m(self, rhs: ExprAst) -> ExprAst {
                ExprAst::Binary($op, Box::new(ExprAst::Const(self)), Box::new(rhs))
            }
        }
    };
}

ast_binop!(Add, add, BinaryOp::Add);
ast_binop!(Sub, sub, BinaryOp::Sub);
ast_binop!(Mul, mul, BinaryOp::Mul);
ast_binop!(Div, div, BinaryOp::Div);

impl Neg for ExprAst {
    type Output = ExprAst;
    fn neg(self) -> ExprAst {
        ExprAst::Unary(UnaryOp::Neg, Box::new(self))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, String),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
}

#[derive(Clone, Copy)]
struct Pos {
    line: usize,
    column: usize,
}

fn position(src: &str, byte: usize) -> Pos {
    let before = &src[..byte];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    Pos { line, column }
}

fn syntax(src: &str, byte: usize, message: impl Into<String>) -> ExprError {
    let p = position(src, byte);
    ExprError::Syntax { message: message.into(), line: p.line, column: p.column }
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>, ExprError> {
        let mut lx = Lexer { chars: src.char_indices().peekable(), src };
        let mut out = Vec::new();
        loop {
            let t = lx.next_tok()?;
            let done = t.0 == Tok::End;
            out.push(t);
            if done {
                return Ok(out);
            }
        }
    }

    fn next_tok(&mut self) -> Result<(Tok, usize), ExprError> {
        while let Some(&(_, c)) = self.chars.peek() {
            if c.is_whitespace() {
                self.chars.next();
            } else {
                break;
            }
        }
        let Some(&(start, c)) = self.chars.peek() else {
            return Ok((Tok::End, self.src.len()));
        };
        if c.is_ascii_digit() || c == '.' {
            let mut end = start;
            let mut seen_exp = false;
            while let Some(&(i, ch)) = self.chars.peek() {
                let sign_after_exp = (ch == '+' || ch == '-')
                    && seen_exp
                    && matches!(self.src[..i].chars().last(), Some('e' | 'E'));
                if ch.is_ascii_digit() || ch == '.' || sign_after_exp {
                    end = i + ch.len_utf8();
                    self.chars.next();
                } else if (ch == 'e' || ch == 'E') && !seen_exp {
                    seen_exp = true;
                    end = i + 1;
                    self.chars.next();
                } else {
                    break;
                }
            }
            let text = &self.src[start..end];
            let v: f64 =
                text.parse().map_err(|_| syntax(self.src, start, format!("malformed number '{text}'")))?;
            return Ok((Tok::Num(v, text.to_string()), start));
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut end = start;
            while let Some(&(i, ch)) = self.chars.peek() {
                if ch.is_ascii_alphanumeric() || ch == '_' {
                    end = i + 1;
                    self.chars.next();
                } else {
                    break;
                }
            }
            return Ok((Tok::Ident(self.src[start..end].to_string()), start));
        }
        self.chars.next();
        match c {
            '+' | '-' | '*' | '/' | '^' => Ok((Tok::Op(c), start)),
            '(' => Ok((Tok::LParen, start)),
            ')' => Ok((Tok::RParen, start)),
            _ => Err(syntax(self.src, start, format!("unexpected character '{c}'"))),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    depth: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn at(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn enter(&mut self) -> Result<(), ExprError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ExprError::Depth(MAX_DEPTH));
        }
        Ok(())
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        if *self.peek() == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(syntax(self.src, self.at(), "expected ')'"))
        }
    }

    fn expr(&mut self) -> Result<ExprAst, ExprError> {
        self.enter()?;
        let mut lhs = self.term()?;
        while let Tok::Op(c @ ('+' | '-')) = *self.peek() {
            self.bump();
            let rhs = self.term()?;
            let op = if c == '+' { BinaryOp::Add } else { BinaryOp::Sub };
            lhs = ExprAst::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<ExprAst, ExprError> {
        let mut lhs = self.unary()?;
        while let Tok::Op(c @ ('*' | '/')) = *self.peek() {
            self.bump();
            let rhs = self.unary()?;
            let op = if c == '*' { BinaryOp::Mul } else { BinaryOp::Div };
            lhs = ExprAst::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<ExprAst, ExprError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            self.enter()?;
            let inner = self.unary()?;
            self.depth -= 1;
            if let ExprAst::Const(c) = inner {
                return Ok(ExprAst::Const(-c));
            }
            return Ok(ExprAst::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<ExprAst, ExprError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let e = self.exponent()?;
            return Ok(ExprAst::Pow(Box::new(base), e));
        }
        Ok(base)
    }

    /// Parses a constant rational exponent.
    fn exponent(&mut self) -> Result<Exponent, ExprError> {
        let start = self.at();
        let e = match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let e = self.rational()?;
                self.expect_rparen()?;
                e
            }
            Tok::Op('-') => {
                self.bump();
                let e = self.exponent_literal()?;
                Exponent::new(-e.num, e.den).expect("nonzero denominator")
            }
            _ => self.exponent_literal()?,
        };
        if e.den > 1 << 20 {
            return Err(syntax(self.src, start, "exponent denominator too large"));
        }
        Ok(e)
    }

    fn rational(&mut self) -> Result<Exponent, ExprError> {
        let neg = if *self.peek() == Tok::Op('-') {
            self.bump();
            true
        } else {
            false
        };
        let a = self.exponent_literal()?;
        let mut r = if neg { Exponent::new(-a.num, a.den).expect("nonzero") } else { a };
        if *self.peek() == Tok::Op('/') {
            let at = self.at();
            self.bump();
            let b = self.exponent_literal()?;
            r = Exponent::new(r.num * b.den, r.den * b.num)
                .ok_or_else(|| syntax(self.src, at, "zero denominator in exponent"))?;
        }
        Ok(r)
    }

    fn exponent_literal(&mut self) -> Result<Exponent, ExprError> {
        let at = self.at();
        match self.bump() {
            Tok::Num(v, text) => decimal_to_rational(&text)
                .ok_or_else(|| syntax(self.src, at, format!("exponent {v} is not a simple rational"))),
            _ => Err(syntax(self.src, at, "expected a rational exponent")),
        }
    }

    fn atom(&mut self) -> Result<ExprAst, ExprError> {
        let at = self.at();
        match self.bump() {
            Tok::Num(v, _) => Ok(ExprAst::Const(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if name == "pi" {
                    return Ok(ExprAst::Pi);
                }
                if let Some(rest) = name.strip_prefix('x') {
                    if rest.len() == 1 {
                        if let Some(d @ 1..=9) = rest.chars().next().and_then(|c| c.to_digit(10)) {
                            return Ok(ExprAst::Var(d as usize - 1));
                        }
                    }
                }
                let Some(op) = UnaryOp::from_name(&name) else {
                    return Err(syntax(self.src, at, format!("unknown identifier '{name}'")));
                };
                if *self.peek() != Tok::LParen {
                    return Err(syntax(self.src, self.at(), format!("expected '(' after '{name}'")));
                }
                self.bump();
                self.enter()?;
                let arg = self.expr()?;
                self.depth -= 1;
                self.expect_rparen()?;
                Ok(ExprAst::Unary(op, Box::new(arg)))
            }
            Tok::End => Err(syntax(self.src, at, "unexpected end of input")),
            Tok::Op(c) => Err(syntax(self.src, at, format!("unexpected operator '{c}'"))),
            Tok::RParen => Err(syntax(self.src, at, "unexpected ')'")),
        }
    }
}

fn decimal_to_rational(text: &str) -> Option<Exponent> {
    if text.contains(['e', 'E']) {
        return None;
    }
    let (int, frac) = text.split_once('.').unwrap_or((text, ""));
    if frac.len() > 9 {
        return None;
    }
    let den = 10i64.pow(frac.len() as u32);
    let num: i64 = format!("{int}{frac}").trim_start_matches('0').parse().unwrap_or(0);
    Exponent::new(num, den)
}

/// Parses an expression; variables `x1..x9` map to indices `0..8`.
pub fn parse(src: &str) -> Result<ExprAst, ExprError> {
    let toks = Lexer::tokens(src)?;
    let mut p = Parser { src, toks, pos: 0, depth: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(syntax(src, p.at(), "unexpected trailing input"));
    }
    Ok(e)
}

/// Taylor expansion of `expr` about `point` through degree `order`.
pub fn lift(expr: &ExprAst, point: &[f64], order: usize) -> Result<Jet, ExprError> {
    if expr.depth() > 4 * MAX_DEPTH {
        return Err(ExprError::Depth(4 * MAX_DEPTH));
    }
    let dim = point.len();
    if expr.arity() > dim {
        return Err(ExprError::VariableOutOfRange { index: expr.arity(), dim });
    }
    lift_rec(expr, point, order)
}

fn lift_rec(expr: &ExprAst, point: &[f64], order: usize) -> Result<Jet, ExprError> {
    let dim = point.len();
    Ok(match expr {
        ExprAst::Const(c) => Jet::constant(dim, order, *c),
        ExprAst::Pi => Jet::constant(dim, order, std::f64::consts::PI),
        ExprAst::Var(i) => Jet::variable(dim, order, *i, point[*i]),
        ExprAst::Unary(op, a) => {
            let a = lift_rec(a, point, order)?;
            match op {
                UnaryOp::Neg => -a,
                UnaryOp::Sqrt => a.sqrt()?,
                UnaryOp::Exp => a.exp(),
                UnaryOp::Log => a.ln()?,
                UnaryOp::Sin => a.sin(),
                UnaryOp::Cos => a.cos(),
                UnaryOp::Tanh => a.tanh(),
            }
        }
        ExprAst::Pow(a, e) => {
            let a = lift_rec(a, point, order)?;
            if e.den == 1 {
                a.powi(e.num as i32)?
            } else {
                a.powf(e.as_f64())?
            }
        }
        ExprAst::Binary(op, a, b) => {
            let a = lift_rec(a, point, order)?;
            let b = lift_rec(b, point, order)?;
            match op {
                BinaryOp::Add => a + b,
                BinaryOp::Sub => a - b,
                BinaryOp::Mul => a * b,
                BinaryOp::Div => a.div_jet(&b)?,
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_lift() {
        let e = parse("x1^2 + x3").unwrap();
        let j = lift(&e, &[0.0, 0.0, 0.0], 4).unwrap();
        assert_eq!(j.value(), 0.0);
        assert_eq!(j.coeff(&[2, 0, 0]), Some(1.0));
        assert_eq!(j.coeff(&[0, 0, 1]), Some(1.0));
        let nonzero = j.coeffs().iter().filter(|c| **c != 0.0).count();
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn euclidean_norm_at_unit_point() {
        let e = parse("sqrt(x1^2+x2^2+x3^2)").unwrap();
        let j = lift(&e, &[1.0, 0.0, 0.0], 3).unwrap();
        assert_relative_eq!(j.value(), 1.0);
        assert_relative_eq!(j.derivative(&[1, 0, 0]).unwrap(), 1.0);
        assert_relative_eq!(j.derivative(&[0, 1, 0]).unwrap(), 0.0);
        assert_relative_eq!(j.derivative(&[2, 0, 0]).unwrap(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(j.derivative(&[0, 2, 0]).unwrap(), 1.0);
        assert_relative_eq!(j.derivative(&[0, 0, 2]).unwrap(), 1.0);
        assert_relative_eq!(j.derivative(&[1, 1, 0]).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn constant_one_is_exact() {
        let j = lift(&parse("1").unwrap(), &[0.3, -2.0], 5).unwrap();
        assert_eq!(j.valid_order(), 5);
        assert_eq!(j.value(), 1.0);
        assert_eq!(j.max_abs(), 1.0);
    }

    #[test]
    fn precedence_and_exponents() {
        let e = parse("-x1^2 + 2*x2/4 - x3^(1/2) + x1^-1").unwrap();
        let v = e.eval(&[2.0, 3.0, 4.0]);
        assert_relative_eq!(v, -4.0 + 1.5 - 2.0 + 0.5);
        assert_eq!(parse("x1^0.5").unwrap(), parse("x1^(1/2)").unwrap());
        assert!(parse("2^3^2").is_err());
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse("sqr(x1)") {
            Err(ExprError::Syntax { line, column, .. }) => assert_eq!((line, column), (1, 1)),
            other => panic!("unexpected {other:?}"),
        }
        match parse("x1 +\n  * 2") {
            Err(ExprError::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse("x0").is_err());
        assert!(parse("(x1").is_err());
        assert!(parse("x1^x2").is_err());
    }

    #[test]
    fn depth_limit() {
        let src = format!("{}x1{}", "(".repeat(500), ")".repeat(500));
        assert_eq!(parse(&src), Err(ExprError::Depth(MAX_DEPTH)));
    }

    #[test]
    fn display_round_trips() {
        for s in ["-x1^2 + x2*(x3 - 1.5)", "sqrt(x1^2 + x2^2) - 1", "exp(0.3*x1 - 0.2*x2^2)", "x1^(-1/3) / -x2", "(-x1)^2", "-(x1 + x2)"] {
            let e = parse(s).unwrap();
            assert_eq!(parse(&e.to_string()).unwrap(), e, "{s} -> {e}");
        }
    }

    #[test]
    fn log_domain_error() {
        let e = parse("log(x1)").unwrap();
        assert!(matches!(lift(&e, &[-1.0], 3), Err(ExprError::Jet(JetError::Domain(_)))));
        let d = parse("1/(x1-1)").unwrap();
        assert!(matches!(lift(&d, &[1.0], 3), Err(ExprError::Jet(JetError::DivisionByZero))));
    }
}
