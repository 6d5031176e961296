//! Small arithmetic expression language for user-supplied dynamics.
//!
//! Grammar (usual precedence, `^` right-associative):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | pow
//! pow   := atom ('^' unary)?
//! atom  := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Functions: `max`, `min` (any arity), `abs`, `exp`, `ln`, `sqrt`, `sin`,
//! `cos`, `tanh`, `pow`. The constant `pi` is predefined. Names are resolved
//! at compile time against a variable list and a constant table.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(Op, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Func {
    Max,
    Min,
    Abs,
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    Tanh,
    Pow,
}

impl Func {
    fn lookup(name: &str) -> Option<(Func, Option<usize>)> {
        Some(match name {
            "max" => (Func::Max, None),
            "min" => (Func::Min, None),
            "abs" => (Func::Abs, Some(1)),
            "exp" => (Func::Exp, Some(1)),
            "ln" | "log" => (Func::Ln, Some(1)),
            "sqrt" => (Func::Sqrt, Some(1)),
            "sin" => (Func::Sin, Some(1)),
            "cos" => (Func::Cos, Some(1)),
            "tanh" => (Func::Tanh, Some(1)),
            "pow" => (Func::Pow, Some(2)),
            _ => return None,
        })
    }
}

/// A compiled expression over a fixed list of variable slots.
#[derive(Clone, PartialEq)]
pub struct Expression {
    source: String,
    root: Node,
    arity: usize,
    consts: BTreeMap<String, f64>,
}

impl fmt::Debug for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expression({:?})", self.source)
    }
}

impl Expression {
    /// Compile `source`; `vars[k]` becomes slot `k`, names in `consts` are
    /// folded in as numbers.
    pub fn compile(source: &str, vars: &[&str], consts: &BTreeMap<String, f64>) -> Result<Self> {
        let tokens = lex(source)?;
        let mut p = Parser { tokens, pos: 0, vars, consts };
        let root = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Parse(format!("unexpected {:?} in '{source}'", p.tokens[p.pos])));
        }
        Ok(Expression { source: source.to_string(), root, arity: vars.len(), consts: consts.clone() })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn consts(&self) -> &BTreeMap<String, f64> {
        &self.consts
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval(&self, vars: &[f64]) -> f64 {
        debug_assert_eq!(vars.len(), self.arity);
        eval(&self.root, vars)
    }
}

fn eval(n: &Node, v: &[f64]) -> f64 {
    match n {
        Node::Num(x) => *x,
        Node::Var(k) => v[*k],
        Node::Neg(a) => -eval(a, v),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, v), eval(b, v));
            match op {
                Op::Add => a + b,
                Op::Sub => a - b,
                Op::Mul => a * b,
                Op::Div => a / b,
                Op::Pow => a.powf(b),
            }
        }
        Node::Call(f, args) => {
            let mut it = args.iter().map(|a| eval(a, v));
            match f {
                Func::Max => it.fold(f64::NEG_INFINITY, f64::max),
                Func::Min => it.fold(f64::INFINITY, f64::min),
                Func::Pow => {
                    let a = it.next().unwrap();
                    a.powf(it.next().unwrap())
                }
                f => {
                    let a = it.next().unwrap();
                    match f {
                        Func::Abs => a.abs(),
                        Func::Exp => a.exp(),
                        Func::Ln => a.ln(),
                        Func::Sqrt => a.sqrt(),
                        Func::Sin => a.sin(),
                        Func::Cos => a.cos(),
                        Func::Tanh => a.tanh(),
                        _ => unreachable!(),
                    }
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Sym(char),
}

fn lex(s: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        if c.is_whitespace() {
            k += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = k;
            while k < chars.len() && (chars[k].is_ascii_digit() || chars[k] == '.') {
                k += 1;
            }
            if k < chars.len() && (chars[k] == 'e' || chars[k] == 'E') {
                let mut j = k + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    k = j;
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                }
            }
            let text: String = chars[start..k].iter().collect();
            let v = text.parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{text}'")))?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = k;
            while k < chars.len() && (chars[k].is_ascii_alphanumeric() || chars[k] == '_') {
                k += 1;
            }
            out.push(Tok::Name(chars[start..k].iter().collect()));
        } else if "+-*/^(),".contains(c) {
            out.push(Tok::Sym(c));
            k += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character '{c}' in '{s}'")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Tok>,
    pos: usize,
    vars: &'a [&'a str],
    consts: &'a BTreeMap<String, f64>,
}

impl Parser<'_> {
    fn peek_sym(&self, c: char) -> bool {
        matches!(self.tokens.get(self.pos), Some(Tok::Sym(d)) if *d == c)
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek_sym(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Parse(format!("expected '{c}' at token {}", self.pos)))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.peek_sym('+') {
                Op::Add
            } else if self.peek_sym('-') {
                Op::Sub
            } else {
                return Ok(lhs);
            };
            self.pos += 1;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.peek_sym('*') {
                Op::Mul
            } else if self.peek_sym('/') {
                Op::Div
            } else {
                return Ok(lhs);
            };
            self.pos += 1;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.peek_sym('-') {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.peek_sym('^') {
            self.pos += 1;
            return Ok(Node::Bin(Op::Pow, Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.tokens.get(self.pos).cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Name(name)) => {
                self.pos += 1;
                if self.peek_sym('(') {
                    self.pos += 1;
                    let (f, arity) =
                        Func::lookup(&name).ok_or_else(|| Error::Parse(format!("unknown function '{name}'")))?;
                    let mut args = vec![self.expr()?];
                    while self.peek_sym(',') {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    if arity.is_some_and(|a| a != args.len()) {
                        return Err(Error::Parse(format!("{name} takes {} argument(s)", arity.unwrap())));
                    }
                    return Ok(Node::Call(f, args));
                }
                if let Some(k) = self.vars.iter().position(|v| *v == name) {
                    Ok(Node::Var(k))
                } else if let Some(c) = self.consts.get(&name) {
                    Ok(Node::Num(*c))
                } else if name == "pi" {
                    Ok(Node::Num(std::f64::consts::PI))
                } else {
                    Err(Error::Parse(format!("unknown name '{name}'")))
                }
            }
            other => Err(Error::Parse(format!("unexpected {other:?} at token {}", self.pos))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, vars: &[&str], vals: &[f64]) -> f64 {
        Expression::compile(src, vars, &BTreeMap::new()).unwrap().eval(vals)
    }

    #[test]
    fn precedence_and_functions() {
        assert_eq!(ev("1 + 2 * 3", &[], &[]), 7.0);
        assert_eq!(ev("(1 + 2) * 3", &[], &[]), 9.0);
        assert_eq!(ev("2 ^ 3 ^ 2", &[], &[]), 512.0);
        assert_eq!(ev("-2 ^ 2", &[], &[]), -4.0);
        assert_eq!(ev("max(0.5*x, 0.25*w0, u)", &["x", "w0", "u"], &[1.0, 4.0, 0.0]), 1.0);
        assert_eq!(ev("-x / i", &["x", "i"], &[3.0, 2.0]), -1.5);
        assert_eq!(ev("1e-3 * 2E2", &[], &[]), 0.2);
        assert_eq!(ev("pow(2, 10) - min(3, 1, 2)", &[], &[]), 1023.0);
        assert!((ev("exp(ln(5))", &[], &[]) - 5.0).abs() < 1e-14);
    }

    #[test]
    fn constants_fold() {
        let consts = BTreeMap::from([("eps".to_string(), 0.1)]);
        let e = Expression::compile("-x + eps*w0", &["x", "w0"], &consts).unwrap();
        assert_eq!(e.eval(&[1.0, 2.0]), -1.0 + 0.2);
    }

    #[test]
    fn errors() {
        let c = BTreeMap::new();
        assert!(Expression::compile("x +", &["x"], &c).is_err());
        assert!(Expression::compile("y", &["x"], &c).is_err());
        assert!(Expression::compile("foo(x)", &["x"], &c).is_err());
        assert!(Expression::compile("abs(x, x)", &["x"], &c).is_err());
        assert!(Expression::compile("x $ 2", &["x"], &c).is_err());
        assert!(Expression::compile("(x", &["x"], &c).is_err());
        assert!(Expression::compile("x x", &["x"], &c).is_err());
    }
}
