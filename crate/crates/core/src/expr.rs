//! Complex-valued scalar expressions in the coordinates `x, y, z` and the radius `r`.
//!
//! Grammar (usual precedence, `^` right-associative):
//!
//! ```text
//! expr  := ['+'|'-'] term (('+'|'-') term)*
//! term  := unary (('*'|'/') unary)*
//! unary := '-' unary | power
//! power := atom ['^' unary]
//! atom  := NUMBER ['i'] | 'i' | x | y | z | r | '(' expr ')' | '|' expr '|'
//!        | sgn '(' expr ')' | abs '(' expr ')' | re '(' expr ')' | im '(' expr ')'
//! ```
//!
//! `3i` is an imaginary literal, `(1+3i)*r^2` a rotated harmonic profile and
//! `i*sgn(x)*|x|^3` the odd cubic.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Var {
    X,
    Y,
    Z,
    R,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Sgn,
    Abs,
    Re,
    Im,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(Complex64),
    Var(Var),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn eval(&self, p: &[f64]) -> Complex64 {
        match self {
            Node::Const(c) => *c,
            Node::Var(v) => {
                let coord = |k: usize| p.get(k).copied().unwrap_or(0.0);
                Complex64::new(
                    match v {
                        Var::X => coord(0),
                        Var::Y => coord(1),
                        Var::Z => coord(2),
                        Var::R => p.iter().map(|t| t * t).sum::<f64>().sqrt(),
                    },
                    0.0,
                )
            }
            Node::Neg(a) => -a.eval(p),
            Node::Add(a, b) => a.eval(p) + b.eval(p),
            Node::Sub(a, b) => a.eval(p) - b.eval(p),
            Node::Mul(a, b) => a.eval(p) * b.eval(p),
            Node::Div(a, b) => a.eval(p) / b.eval(p),
            Node::Pow(a, b) => {
                let base = a.eval(p);
                let e = b.eval(p);
                if e.im == 0.0 && e.re.fract() == 0.0 && e.re.abs() <= 64.0 {
                    base.powi(e.re as i32)
                } else if base.im == 0.0 && base.re >= 0.0 && e.im == 0.0 {
                    Complex64::new(base.re.powf(e.re), 0.0)
                } else {
                    base.powc(e)
                }
            }
            Node::Call(f, a) => {
                let v = a.eval(p);
                match f {
                    Func::Sgn => Complex64::new(
                        if v.re > 0.0 {
                            1.0
                        } else if v.re < 0.0 {
                            -1.0
                        } else {
                            0.0
                        },
                        0.0,
                    ),
                    Func::Abs => Complex64::new(v.norm(), 0.0),
                    Func::Re => Complex64::new(v.re, 0.0),
                    Func::Im => Complex64::new(v.im, 0.0),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Ident(String),
    Sym(char),
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
            // exponent part, only when followed by digits
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
            let v: f64 = text
                .parse()
                .map_err(|_| Error::Config(format!("bad number '{text}' in '{src}'")))?;
            let imaginary = i < chars.len()
                && chars[i] == 'i'
                && !(i + 1 < chars.len() && chars[i + 1].is_ascii_alphanumeric());
            if imaginary {
                i += 1;
                out.push(Tok::Imag(v));
            } else {
                out.push(Tok::Num(v));
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()|".contains(c) {
            out.push(Tok::Sym(c));
            i += 1;
        } else {
            return Err(Error::Config(format!("unexpected '{c}' in expression '{src}'")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: &'a [Tok],
    pos: usize,
    src: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn err(&self, what: &str) -> Error {
        Error::Config(format!("{what} at token {} in '{}'", self.pos, self.src))
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = if self.eat('-') {
            Node::Neg(Box::new(self.term()?))
        } else {
            self.eat('+');
            self.term()?
        };
        loop {
            if self.eat('+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let tok = self.peek().cloned().ok_or_else(|| self.err("unexpected end"))?;
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Node::Const(Complex64::new(v, 0.0))),
            Tok::Imag(v) => Ok(Node::Const(Complex64::new(0.0, v))),
            Tok::Sym('(') => {
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            Tok::Sym('|') => {
                let e = self.expr()?;
                if !self.eat('|') {
                    return Err(self.err("expected closing '|'"));
                }
                Ok(Node::Call(Func::Abs, Box::new(e)))
            }
            Tok::Ident(name) => {
                let func = match name.as_str() {
                    "x" => return Ok(Node::Var(Var::X)),
                    "y" => return Ok(Node::Var(Var::Y)),
                    "z" => return Ok(Node::Var(Var::Z)),
                    "r" => return Ok(Node::Var(Var::R)),
                    "i" => return Ok(Node::Const(Complex64::new(0.0, 1.0))),
                    "sgn" => Func::Sgn,
                    "abs" => Func::Abs,
                    "re" => Func::Re,
                    "im" => Func::Im,
                    other => return Err(self.err(&format!("unknown identifier '{other}'"))),
                };
                if !self.eat('(') {
                    return Err(self.err("expected '(' after function name"));
                }
                let arg = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(Node::Call(func, Box::new(arg)))
            }
            Tok::Sym(c) => Err(self.err(&format!("unexpected '{c}'"))),
        }
    }
}

/// A parsed expression together with its source text.
#[derive(Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let toks = tokenize(src)?;
        if toks.is_empty() {
            return Err(Error::Config("empty expression".into()));
        }
        let mut p = Parser { toks: &toks, pos: 0, src };
        let root = p.expr()?;
        if p.pos != toks.len() {
            return Err(p.err("trailing input"));
        }
        Ok(Expr { source: src.trim().to_string(), root })
    }

    pub fn zero() -> Self {
        Expr { source: "0".into(), root: Node::Const(Complex64::new(0.0, 0.0)) }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.root, Node::Const(c) if c == Complex64::new(0.0, 0.0))
    }

    pub fn eval(&self, point: &[f64]) -> Complex64 {
        self.root.eval(point)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl FromStr for Expr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Expr::parse(s)
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Expr::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, p: &[f64]) -> Complex64 {
        Expr::parse(src).unwrap().eval(p)
    }

    #[test]
    fn literals_and_precedence() {
        assert_eq!(ev("1+2*3", &[]), Complex64::new(7.0, 0.0));
        assert_eq!(ev("-2^2", &[]), Complex64::new(-4.0, 0.0));
        assert_eq!(ev("2^3^2", &[]), Complex64::new(512.0, 0.0));
        assert_eq!(ev("3i", &[]), Complex64::new(0.0, 3.0));
        assert_eq!(ev("(1+3i)*r^2", &[2.0]), Complex64::new(4.0, 12.0));
        assert_eq!(ev("1.5e1", &[]), Complex64::new(15.0, 0.0));
        assert_eq!(ev("2e-1i", &[]), Complex64::new(0.0, 0.2));
    }

    #[test]
    fn variables_and_functions() {
        assert_eq!(ev("i*x^3", &[2.0]), Complex64::new(0.0, 8.0));
        assert_eq!(ev("i*sgn(x)*|x|^3", &[-2.0]), Complex64::new(0.0, -8.0));
        assert_eq!(ev("0.5*|x|^3", &[-2.0]), Complex64::new(4.0, 0.0));
        assert_eq!(ev("x^2+y^2+z^2", &[1.0, 2.0, 3.0]), Complex64::new(14.0, 0.0));
        assert_eq!(ev("r", &[3.0, 4.0]), Complex64::new(5.0, 0.0));
        assert_eq!(ev("abs(x-3)", &[1.0]), Complex64::new(2.0, 0.0));
        assert_eq!(ev("y", &[1.0]), Complex64::new(0.0, 0.0));
        assert_eq!(ev("|x|^2.5", &[4.0]), Complex64::new(32.0, 0.0));
    }

    #[test]
    fn rejects_garbage() {
        assert!(Expr::parse("").is_err());
        assert!(Expr::parse("x +").is_err());
        assert!(Expr::parse("foo(x)").is_err());
        assert!(Expr::parse("(x").is_err());
        assert!(Expr::parse("|x").is_err());
        assert!(Expr::parse("x $ 2").is_err());
    }

    #[test]
    fn serde_uses_source_text() {
        let e = Expr::parse("i*x^3 - x^2").unwrap();
        let js = serde_json::to_string(&e).unwrap();
        assert_eq!(js, "\"i*x^3 - x^2\"");
        let back: Expr = serde_json::from_str(&js).unwrap();
        assert_eq!(back, e);
    }
}
