//! Arithmetic expressions in the coordinates with forward-mode gradients.
//!
//! Grammar: `+ - * / ^` (also `**`), unary minus binding looser than `^`
//! (so `-x^2 = -(x^2)` and `x^-2 = x^(-2)`), parentheses, numbers,
//! the constants `pi` and `e`, coordinates `x1 x2 x3` (aliases `x y z`,
//! and `x` alone in 1-D), and the functions
//! `sin cos tan exp ln log sqrt abs pow(a, b)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

fn lex(src: &str) -> Result<Vec<Tok>> {
    let b = src.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i] as char;
        match c {
            ' ' | '\t' | '\n' => i += 1,
            '0'..='9' | '.' => {
                let start = i;
                while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
                    i += 1;
                }
                if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                    let mut j = i + 1;
                    if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                        j += 1;
                    }
                    if j < b.len() && b[j].is_ascii_digit() {
                        i = j;
                        while i < b.len() && b[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| Error::Expression(format!("bad number `{text}`")))?;
                out.push(Tok::Num(v));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                    i += 1;
                }
                out.push(Tok::Ident(src[start..i].to_string()));
            }
            '*' if b.get(i + 1) == Some(&b'*') => {
                out.push(Tok::Op('^'));
                i += 2;
            }
            '+' | '-' | '*' | '/' | '^' => {
                out.push(Tok::Op(c));
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            ',' => {
                out.push(Tok::Comma);
                i += 1;
            }
            _ => return Err(Error::Expression(format!("unexpected character `{c}`"))),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        match self.next() {
            Some(ref got) if *got == t => Ok(()),
            got => Err(Error::Expression(format!("expected {t:?}, found {got:?}"))),
        }
    }

    fn sum(&mut self) -> Result<Node> {
        let mut lhs = self.product()?;
        while let Some(Tok::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.product()?;
            lhs = if op == '+' { Node::Add(lhs.into(), rhs.into()) } else { Node::Sub(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(op @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' { Node::Mul(lhs.into(), rhs.into()) } else { Node::Div(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(Node::Neg(self.unary()?.into()))
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Pow(base.into(), exp.into()));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(Node::Num(v)),
            Some(Tok::LParen) => {
                let e = self.sum()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                if let Some(Tok::LParen) = self.peek() {
                    self.pos += 1;
                    let arg = self.sum()?;
                    if name == "pow" {
                        self.expect(Tok::Comma)?;
                        let e = self.sum()?;
                        self.expect(Tok::RParen)?;
                        return Ok(Node::Pow(arg.into(), e.into()));
                    }
                    self.expect(Tok::RParen)?;
                    let f = match name.as_str() {
                        "sin" => Func::Sin,
                        "cos" => Func::Cos,
                        "tan" => Func::Tan,
                        "exp" => Func::Exp,
                        "ln" | "log" => Func::Ln,
                        "sqrt" => Func::Sqrt,
                        "abs" => Func::Abs,
                        _ => return Err(Error::Expression(format!("unknown function `{name}`"))),
                    };
                    return Ok(Node::Call(f, arg.into()));
                }
                match name.as_str() {
                    "pi" | "PI" => Ok(Node::Num(std::f64::consts::PI)),
                    "e" | "E" => Ok(Node::Num(std::f64::consts::E)),
                    "x" | "x1" => Ok(Node::Var(0)),
                    "y" | "x2" => Ok(Node::Var(1)),
                    "z" | "x3" => Ok(Node::Var(2)),
                    _ => Err(Error::Expression(format!("unknown symbol `{name}`"))),
                }
            }
            t => Err(Error::Expression(format!("unexpected token {t:?}"))),
        }
    }
}

/// Value with gradient in up to three coordinates.
#[derive(Debug, Clone, Copy)]
struct Dual {
    v: f64,
    g: [f64; 3],
}

impl Dual {
    fn konst(v: f64) -> Self {
        Self { v, g: [0.0; 3] }
    }

    fn scale(self, v: f64, k: f64) -> Self {
        Self { v, g: self.g.map(|g| k * g) }
    }

    fn is_const(&self) -> bool {
        self.g == [0.0; 3]
    }
}

/// Parsed expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    source: String,
    max_var: Option<usize>,
}

fn max_var(n: &Node) -> Option<usize> {
    match n {
        Node::Num(_) => None,
        Node::Var(i) => Some(*i),
        Node::Neg(a) | Node::Call(_, a) => max_var(a),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => max_var(a).max(max_var(b)),
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let mut p = Parser { toks: lex(src)?, pos: 0 };
        if p.toks.is_empty() {
            return Err(Error::Expression("empty expression".into()));
        }
        let root = p.sum()?;
        if p.pos != p.toks.len() {
            return Err(Error::Expression(format!("trailing input after token {}", p.pos)));
        }
        let max_var = max_var(&root);
        Ok(Self { root, source: src.to_string(), max_var })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Number of coordinates referenced (highest index + 1).
    pub fn arity(&self) -> usize {
        self.max_var.map_or(0, |i| i + 1)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        eval(&self.root, x)
    }

    /// Value and gradient (first `x.len()` components).
    pub fn eval_grad(&self, x: &[f64]) -> (f64, [f64; 3]) {
        let d = dual(&self.root, x);
        (d.v, d.g)
    }
}

fn call(f: Func, a: f64) -> f64 {
    match f {
        Func::Sin => a.sin(),
        Func::Cos => a.cos(),
        Func::Tan => a.tan(),
        Func::Exp => a.exp(),
        Func::Ln => a.ln(),
        Func::Sqrt => a.sqrt(),
        Func::Abs => a.abs(),
    }
}

fn eval(n: &Node, x: &[f64]) -> f64 {
    match n {
        Node::Num(v) => *v,
        Node::Var(i) => x.get(*i).copied().unwrap_or(f64::NAN),
        Node::Neg(a) => -eval(a, x),
        Node::Add(a, b) => eval(a, x) + eval(b, x),
        Node::Sub(a, b) => eval(a, x) - eval(b, x),
        Node::Mul(a, b) => eval(a, x) * eval(b, x),
        Node::Div(a, b) => eval(a, x) / eval(b, x),
        Node::Pow(a, b) => pow(eval(a, x), eval(b, x)),
        Node::Call(f, a) => call(*f, eval(a, x)),
    }
}

fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= 64.0 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

fn dual(n: &Node, x: &[f64]) -> Dual {
    match n {
        Node::Num(v) => Dual::konst(*v),
        Node::Var(i) => {
            let mut g = [0.0; 3];
            if *i < 3 {
                g[*i] = 1.0;
            }
            Dual { v: x.get(*i).copied().unwrap_or(f64::NAN), g }
        }
        Node::Neg(a) => {
            let a = dual(a, x);
            a.scale(-a.v, -1.0)
        }
        Node::Add(a, b) | Node::Sub(a, b) => {
            let (a, b) = (dual(a, x), dual(b, x));
            let s = if matches!(n, Node::Add(..)) { 1.0 } else { -1.0 };
            Dual { v: a.v + s * b.v, g: [0, 1, 2].map(|k| a.g[k] + s * b.g[k]) }
        }
        Node::Mul(a, b) => {
            let (a, b) = (dual(a, x), dual(b, x));
            Dual { v: a.v * b.v, g: [0, 1, 2].map(|k| a.g[k] * b.v + a.v * b.g[k]) }
        }
        Node::Div(a, b) => {
            let (a, b) = (dual(a, x), dual(b, x));
            let v = a.v / b.v;
            Dual { v, g: [0, 1, 2].map(|k| (a.g[k] - v * b.g[k]) / b.v) }
        }
        Node::Pow(a, b) => {
            let (a, b) = (dual(a, x), dual(b, x));
            let v = pow(a.v, b.v);
            if b.is_const() {
                if a.is_const() {
                    return Dual::konst(v);
                }
                let k = if b.v == 0.0 { 0.0 } else { b.v * pow(a.v, b.v - 1.0) };
                a.scale(v, k)
            } else {
                let la = a.v.ln();
                Dual { v, g: [0, 1, 2].map(|k| v * (b.g[k] * la + b.v * a.g[k] / a.v)) }
            }
        }
        Node::Call(f, a) => {
            let a = dual(a, x);
            let v = call(*f, a.v);
            let k = match f {
                Func::Sin => a.v.cos(),
                Func::Cos => -a.v.sin(),
                Func::Tan => 1.0 / (a.v.cos() * a.v.cos()),
                Func::Exp => v,
                Func::Ln => 1.0 / a.v,
                Func::Sqrt => 0.5 / v,
                Func::Abs => a.v.signum(),
            };
            if a.is_const() {
                Dual::konst(v)
            } else {
                a.scale(v, k)
            }
        }
    }
}
