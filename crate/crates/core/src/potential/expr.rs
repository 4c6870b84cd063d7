//! A small arithmetic grammar for custom amplitudes: `+ - * / ^`, `exp(·)`, the variables
//! `x`, `y`, `r2` (= x²+y²), numeric literals and parentheses.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Y,
    R2,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
}

/// Value together with its gradient in `(x, y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Dual {
    pub fn constant(v: f64) -> Self {
        Self { v, dx: 0.0, dy: 0.0 }
    }

    fn scale_grad(self, f: f64, v: f64) -> Self {
        Self { v, dx: self.dx * f, dy: self.dy * f }
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.scale_grad(e, e)
    }

    pub fn ln(self) -> Self {
        self.scale_grad(1.0 / self.v, self.v.ln())
    }

    pub fn powf(self, c: f64) -> Self {
        self.scale_grad(c * self.v.powf(c - 1.0), self.v.powf(c))
    }

    pub fn powi(self, n: i32) -> Self {
        self.scale_grad(n as f64 * self.v.powi(n - 1), self.v.powi(n))
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual { v: self.v + o.v, dx: self.dx + o.dx, dy: self.dy + o.dy }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual { v: self.v - o.v, dx: self.dx - o.dx, dy: self.dy - o.dy }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual { v: self.v * o.v, dx: self.dx * o.v + self.v * o.dx, dy: self.dy * o.v + self.v * o.dy }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let inv = 1.0 / o.v;
        Dual {
            v: self.v * inv,
            dx: (self.dx - self.v * inv * o.dx) * inv,
            dy: (self.dy - self.v * inv * o.dy) * inv,
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual { v: -self.v, dx: -self.dx, dy: -self.dy }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser { t: &tokens, pos: 0 };
        let e = p.sum()?;
        if p.pos != tokens.len() {
            return Err(Error::Parse(format!("unexpected trailing input in '{src}'")));
        }
        Ok(e)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::X => x,
            Expr::Y => y,
            Expr::R2 => x * x + y * y,
            Expr::Neg(a) => -a.eval(x, y),
            Expr::Add(a, b) => a.eval(x, y) + b.eval(x, y),
            Expr::Sub(a, b) => a.eval(x, y) - b.eval(x, y),
            Expr::Mul(a, b) => a.eval(x, y) * b.eval(x, y),
            Expr::Div(a, b) => a.eval(x, y) / b.eval(x, y),
            Expr::Pow(a, b) => pow(a.eval(x, y), b, x, y),
            Expr::Exp(a) => a.eval(x, y).exp(),
        }
    }

    pub fn eval_dual(&self, x: f64, y: f64) -> Dual {
        match self {
            Expr::Num(v) => Dual::constant(*v),
            Expr::X => Dual { v: x, dx: 1.0, dy: 0.0 },
            Expr::Y => Dual { v: y, dx: 0.0, dy: 1.0 },
            Expr::R2 => Dual { v: x * x + y * y, dx: 2.0 * x, dy: 2.0 * y },
            Expr::Neg(a) => -a.eval_dual(x, y),
            Expr::Add(a, b) => a.eval_dual(x, y) + b.eval_dual(x, y),
            Expr::Sub(a, b) => a.eval_dual(x, y) - b.eval_dual(x, y),
            Expr::Mul(a, b) => a.eval_dual(x, y) * b.eval_dual(x, y),
            Expr::Div(a, b) => a.eval_dual(x, y) / b.eval_dual(x, y),
            Expr::Pow(a, b) => {
                let base = a.eval_dual(x, y);
                if let Some(c) = b.constant_value() {
                    if c.fract() == 0.0 && c.abs() < 1e6 {
                        base.powi(c as i32)
                    } else {
                        base.powf(c)
                    }
                } else {
                    (b.eval_dual(x, y) * base.ln()).exp()
                }
            }
            Expr::Exp(a) => a.eval_dual(x, y).exp(),
        }
    }

    /// True when the expression depends on `(x, y)` only through `r2`.
    pub fn is_radial(&self) -> bool {
        match self {
            Expr::X | Expr::Y => false,
            Expr::Num(_) | Expr::R2 => true,
            Expr::Neg(a) | Expr::Exp(a) => a.is_radial(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.is_radial() && b.is_radial()
            }
        }
    }

    fn constant_value(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            Expr::Neg(a) => a.constant_value().map(|v| -v),
            _ => None,
        }
    }
}

fn pow(base: f64, e: &Expr, x: f64, y: f64) -> f64 {
    match e.constant_value() {
        Some(c) if c.fract() == 0.0 && c.abs() < 1e6 => base.powi(c as i32),
        _ => base.powf(e.eval(x, y)),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::X => write!(f, "x"),
            Expr::Y => write!(f, "y"),
            Expr::R2 => write!(f, "r2"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a}+{b})"),
            Expr::Sub(a, b) => write!(f, "({a}-{b})"),
            Expr::Mul(a, b) => write!(f, "({a}*{b})"),
            Expr::Div(a, b) => write!(f, "({a}/{b})"),
            Expr::Pow(a, b) => write!(f, "({a}^{b})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part, e.g. 1e-3
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut k = i + 1;
                if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    i = k;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{s}'")))?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else if c == '−' {
            out.push(Tok::Op('-'));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character '{c}'")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    t: &'a [Tok],
    pos: usize,
}

impl Parser<'_> {
    fn peek_op(&self) -> Option<char> {
        match self.t.get(self.pos) {
            Some(Tok::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek_op() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Parse(format!("expected '{c}'")))
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        while let Some(c @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.product()?;
            lhs = if c == '+' { Expr::Add(lhs.into(), rhs.into()) } else { Expr::Sub(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(c @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if c == '*' { Expr::Mul(lhs.into(), rhs.into()) } else { Expr::Div(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Expr::Neg(self.unary()?.into()))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    // right-associative; binds tighter than unary minus on its left operand
    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let e = self.unary()?;
            return Ok(Expr::Pow(base.into(), e.into()));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = self.t.get(self.pos).cloned().ok_or_else(|| Error::Parse("unexpected end of expression".into()))?;
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Op('(') => {
                let e = self.sum()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Expr::X),
                "y" => Ok(Expr::Y),
                "r2" => Ok(Expr::R2),
                "exp" => {
                    self.expect('(')?;
                    let e = self.sum()?;
                    self.expect(')')?;
                    Ok(Expr::Exp(e.into()))
                }
                other => Err(Error::Parse(format!("unknown identifier '{other}'"))),
            },
            Tok::Op(c) => Err(Error::Parse(format!("unexpected '{c}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_evaluates() {
        let e = Expr::parse("exp(-(x^2 + 5*y^2 + 3*x*y))").unwrap();
        assert!((e.eval(1.0, 1.0) - (-9.0f64).exp()).abs() < 1e-16);
        assert!(!e.is_radial());
        let r = Expr::parse("1/(1+r2)^2").unwrap();
        assert!(r.is_radial());
        assert!((r.eval(1.0, 0.0) - 0.25).abs() < 1e-16);
        assert_eq!(Expr::parse("-2^2").unwrap().eval(0.0, 0.0), -4.0);
        assert_eq!(Expr::parse("2^3^2").unwrap().eval(0.0, 0.0), 512.0);
        assert!((Expr::parse("1e-3*x").unwrap().eval(2.0, 0.0) - 2e-3).abs() < 1e-18);
        assert!(Expr::parse("x +").is_err());
        assert!(Expr::parse("sin(x)").is_err());
        assert!(Expr::parse("(x").is_err());
    }

    #[test]
    fn dual_gradient_matches_finite_difference() {
        let e = Expr::parse("exp(-(x^2+5*y^2+3*x*y)) * (1 + x/(2+y^2))").unwrap();
        let (x, y) = (0.3, -0.7);
        let d = e.eval_dual(x, y);
        let h = 1e-6;
        let fx = (e.eval(x + h, y) - e.eval(x - h, y)) / (2.0 * h);
        let fy = (e.eval(x, y + h) - e.eval(x, y - h)) / (2.0 * h);
        assert!((d.v - e.eval(x, y)).abs() < 1e-15);
        assert!((d.dx - fx).abs() < 1e-8 && (d.dy - fy).abs() < 1e-8);
    }
}
