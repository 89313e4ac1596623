//! Arithmetic expressions over state variables `x1..` and disturbance
//! variables `w1..`.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite result")]
    NonFinite,
    #[error("variable {0} is not bound")]
    Unbound(Var),
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("expression `{text}`: {msg} at column {pos}")]
pub struct ExprParseError {
    pub text: String,
    pub pos: usize,
    pub msg: String,
}

/// Variable reference; indices are zero-based, printed one-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    X(usize),
    W(usize),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(i) => write!(f, "x{}", i + 1),
            Var::W(i) => write!(f, "w{}", i + 1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Abs,
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
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn eval<T: Real>(&self, x: &[T], w: &[T]) -> Result<T, EvalError> {
        let v = self.eval_inner(x, w)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    fn eval_inner<T: Real>(&self, x: &[T], w: &[T]) -> Result<T, EvalError> {
        Ok(match self {
            Expr::Const(c) => T::lit(*c),
            Expr::Var(v) => {
                let slot = match *v {
                    Var::X(i) => x.get(i),
                    Var::W(i) => w.get(i),
                };
                *slot.ok_or(EvalError::Unbound(*v))?
            }
            Expr::Neg(a) => -a.eval_inner(x, w)?,
            Expr::Add(a, b) => a.eval_inner(x, w)? + b.eval_inner(x, w)?,
            Expr::Sub(a, b) => a.eval_inner(x, w)? - b.eval_inner(x, w)?,
            Expr::Mul(a, b) => a.eval_inner(x, w)? * b.eval_inner(x, w)?,
            Expr::Div(a, b) => {
                let d = b.eval_inner(x, w)?;
                if d == T::zero() {
                    return Err(EvalError::DivisionByZero);
                }
                a.eval_inner(x, w)? / d
            }
            Expr::Pow(a, n) => {
                let base = a.eval_inner(x, w)?;
                if *n < 0 && base == T::zero() {
                    return Err(EvalError::DivisionByZero);
                }
                base.powi(*n)
            }
            Expr::Call(func, a) => {
                let v = a.eval_inner(x, w)?;
                match func {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Abs => v.abs(),
                }
            }
            Expr::Min(a, b) => a.eval_inner(x, w)?.min(b.eval_inner(x, w)?),
            Expr::Max(a, b) => a.eval_inner(x, w)?.max(b.eval_inner(x, w)?),
        })
    }

    /// One past the largest state and disturbance indices referenced.
    pub fn arity(&self) -> (usize, usize) {
        match self {
            Expr::Const(_) => (0, 0),
            Expr::Var(Var::X(i)) => (i + 1, 0),
            Expr::Var(Var::W(i)) => (0, i + 1),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.arity(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Min(a, b) | Expr::Max(a, b) => {
                let (l, r) = (a.arity(), b.arity());
                (l.0.max(r.0), l.1.max(r.1))
            }
        }
    }

    pub fn parse(text: &str) -> Result<Expr, ExprParseError> {
        let mut p = ExprParser { chars: text.chars().collect(), at: 0, text };
        let e = p.sum()?;
        p.skip_ws();
        if p.at < p.chars.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(c) if *c < 0.0 => 3,
            _ => 5,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let wrap = self.precedence() < min;
        if wrap {
            f.write_str("(")?;
        }
        match self {
            Expr::Const(c) => write!(f, "{c:?}")?,
            Expr::Var(v) => write!(f, "{v}")?,
            Expr::Neg(a) => {
                f.write_str("-")?;
                a.fmt_at(f, 4)?;
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.fmt_at(f, 1)?;
                f.write_str(if matches!(self, Expr::Add(..)) { " + " } else { " - " })?;
                b.fmt_at(f, 2)?;
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.fmt_at(f, 2)?;
                f.write_str(if matches!(self, Expr::Mul(..)) { "*" } else { "/" })?;
                b.fmt_at(f, 3)?;
            }
            Expr::Pow(a, n) => {
                a.fmt_at(f, 5)?;
                write!(f, "^{n}")?;
            }
            Expr::Call(func, a) => {
                let name = match func {
                    Func::Sin => "sin",
                    Func::Cos => "cos",
                    Func::Exp => "exp",
                    Func::Abs => "abs",
                };
                write!(f, "{name}(")?;
                a.fmt_at(f, 0)?;
                f.write_str(")")?;
            }
            Expr::Min(a, b) | Expr::Max(a, b) => {
                f.write_str(if matches!(self, Expr::Min(..)) { "min(" } else { "max(" })?;
                a.fmt_at(f, 0)?;
                f.write_str(", ")?;
                b.fmt_at(f, 0)?;
                f.write_str(")")?;
            }
        }
        if wrap {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

impl std::str::FromStr for Expr {
    type Err = ExprParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Expr::parse(&text).map_err(serde::de::Error::custom)
    }
}

struct ExprParser<'a> {
    chars: Vec<char>,
    at: usize,
    text: &'a str,
}

impl ExprParser<'_> {
    fn error(&self, msg: &str) -> ExprParseError {
        ExprParseError { text: self.text.to_string(), pos: self.at + 1, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.at).is_some_and(|c| c.is_whitespace()) {
            self.at += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.chars.get(self.at) == Some(&c) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Expr, ExprParseError> {
        let mut lhs = self.product()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.product()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.product()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn product(&mut self) -> Result<Expr, ExprParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprParseError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprParseError> {
        let base = self.atom()?;
        if self.eat('^') {
            self.skip_ws();
            let start = self.at;
            if self.chars.get(self.at) == Some(&'-') {
                self.at += 1;
            }
            while self.chars.get(self.at).is_some_and(char::is_ascii_digit) {
                self.at += 1;
            }
            let digits: String = self.chars[start..self.at].iter().collect();
            let n: i32 = digits.parse().map_err(|_| {
                self.at = start;
                self.error("expected an integer exponent")
            })?;
            return Ok(Expr::Pow(Box::new(base), n));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprParseError> {
        self.skip_ws();
        let Some(&c) = self.chars.get(self.at) else {
            return Err(self.error("unexpected end of expression"));
        };
        if self.eat('(') {
            let inner = self.sum()?;
            if !self.eat(')') {
                return Err(self.error("expected `)`"));
            }
            return Ok(inner);
        }
        if c.is_ascii_digit() || c == '.' {
            let start = self.at;
            while let Some(&d) = self.chars.get(self.at) {
                let exp_sign = (d == '-' || d == '+') && matches!(self.chars[self.at - 1], 'e' | 'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                    self.at += 1;
                } else {
                    break;
                }
            }
            let s: String = self.chars[start..self.at].iter().collect();
            return s.parse().map(Expr::Const).map_err(|_| {
                self.at = start;
                self.error("invalid number")
            });
        }
        if c.is_ascii_alphabetic() {
            let start = self.at;
            while self.chars.get(self.at).is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_') {
                self.at += 1;
            }
            let name: String = self.chars[start..self.at].iter().collect();
            let func = match name.as_str() {
                "sin" => Some(Func::Sin),
                "cos" => Some(Func::Cos),
                "exp" => Some(Func::Exp),
                "abs" => Some(Func::Abs),
                _ => None,
            };
            if let Some(func) = func {
                let args = self.args(start, 1)?;
                let [a] = <[Expr; 1]>::try_from(args).expect("one argument");
                return Ok(Expr::Call(func, Box::new(a)));
            }
            if name == "min" || name == "max" {
                let args = self.args(start, 2)?;
                let [a, b] = <[Expr; 2]>::try_from(args).expect("two arguments");
                let (a, b) = (Box::new(a), Box::new(b));
                return Ok(if name == "min" { Expr::Min(a, b) } else { Expr::Max(a, b) });
            }
            return match variable(&name) {
                Some(v) => Ok(Expr::Var(v)),
                None => {
                    self.at = start;
                    Err(self.error(&format!("unknown identifier `{name}`")))
                }
            };
        }
        Err(self.error(&format!("unexpected `{c}`")))
    }

    fn args(&mut self, start: usize, n: usize) -> Result<Vec<Expr>, ExprParseError> {
        if !self.eat('(') {
            return Err(self.error("expected `(`"));
        }
        let mut out = vec![self.sum()?];
        while self.eat(',') {
            out.push(self.sum()?);
        }
        if !self.eat(')') {
            return Err(self.error("expected `)`"));
        }
        if out.len() != n {
            self.at = start;
            return Err(self.error(&format!("expected {n} argument(s), got {}", out.len())));
        }
        Ok(out)
    }
}

/// `x1`, `w2`, ...; bare `x` and `w` stand for the first component.
fn variable(name: &str) -> Option<Var> {
    let (head, tail) = name.split_at(1);
    let index = if tail.is_empty() {
        0
    } else {
        let i: usize = tail.parse().ok()?;
        i.checked_sub(1)?
    };
    match head {
        "x" => Some(Var::X(index)),
        "w" => Some(Var::W(index)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(text: &str, x: &[f64], w: &[f64]) -> Result<f64, EvalError> {
        Expr::parse(text).unwrap().eval(x, w)
    }

    #[test]
    fn affine_dynamics() {
        assert!((ev("0.9*x1 + w1", &[1.0], &[0.2]).unwrap() - 1.1).abs() < 1e-15);
        assert_eq!(ev("0.9*x + w", &[0.0], &[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn precedence_and_functions() {
        assert_eq!(ev("1 + 2*3^2", &[], &[]).unwrap(), 19.0);
        assert_eq!(ev("-x1^2", &[3.0], &[]).unwrap(), -9.0);
        assert_eq!(ev("2^-1", &[], &[]).unwrap(), 0.5);
        assert_eq!(ev("min(x1, x2) + max(x1, x2)", &[1.0, 4.0], &[]).unwrap(), 5.0);
        assert_eq!(ev("abs(-2) * cos(0) + sin(0) + exp(0)", &[], &[]).unwrap(), 3.0);
        assert_eq!(ev("8 / 4 / 2", &[], &[]).unwrap(), 1.0);
        assert_eq!(ev("8 - 4 - 2", &[], &[]).unwrap(), 2.0);
    }

    #[test]
    fn errors_are_reported() {
        assert_eq!(ev("1/(x1 - 1)", &[1.0], &[]), Err(EvalError::DivisionByZero));
        assert_eq!(ev("x1^-2", &[0.0], &[]), Err(EvalError::DivisionByZero));
        assert_eq!(ev("exp(x1)", &[1000.0], &[]), Err(EvalError::NonFinite));
        assert_eq!(ev("x3", &[1.0], &[]), Err(EvalError::Unbound(Var::X(2))));
        let e = Expr::parse("0.9*y + w").unwrap_err();
        assert_eq!(e.pos, 5);
        assert!(Expr::parse("min(1)").is_err());
        assert!(Expr::parse("(1 + 2").is_err());
        assert!(Expr::parse("x0").is_err());
    }

    #[test]
    fn display_round_trips() {
        for text in ["0.9*x1 + w1", "-(x1 - x2)^3 / (1 + abs(w1))", "x1 - (x2 - w1)", "min(x1, -2.5)*exp(-x2)"] {
            let e = Expr::parse(text).unwrap();
            assert_eq!(Expr::parse(&e.to_string()).unwrap(), e, "{text} -> {e}");
        }
        assert_eq!(Expr::parse("x2 * w1").unwrap().arity(), (2, 1));
    }

    #[test]
    fn evaluates_in_single_precision() {
        let e = Expr::parse("x1^2").unwrap();
        assert_eq!(e.eval::<f32>(&[1.5], &[]).unwrap(), 2.25f32);
    }
}
