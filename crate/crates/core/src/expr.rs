//! A small arithmetic-expression interpreter for warp functions and initial
//! profiles.
//!
//! Supported syntax: numbers, one named variable, `pi`, the binary operators
//! `+ - * / ^` (with `^` right-associative and binding tighter than unary
//! minus), parentheses, and the functions `sin cos sinh cosh exp log sqrt`.
//! Expressions are parsed once into a tree and then evaluated many times.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{message} at column {column} in `{source_text}`")]
pub struct ExprError {
    pub message: String,
    /// 1-based column of the offending character.
    pub column: usize,
    pub source_text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Sinh,
    Cosh,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sqrt => x.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn eval(&self, x: f64) -> f64 {
        match self {
            Node::Const(c) => *c,
            Node::Var => x,
            Node::Neg(a) => -a.eval(x),
            Node::Add(a, b) => a.eval(x) + b.eval(x),
            Node::Sub(a, b) => a.eval(x) - b.eval(x),
            Node::Mul(a, b) => a.eval(x) * b.eval(x),
            Node::Div(a, b) => a.eval(x) / b.eval(x),
            Node::Pow(a, b) => {
                let base = a.eval(x);
                match **b {
                    Node::Const(e) if e.fract() == 0.0 && e.abs() < 64.0 => base.powi(e as i32),
                    _ => base.powf(b.eval(x)),
                }
            }
            Node::Call(f, a) => f.apply(a.eval(x)),
        }
    }
}

/// A parsed expression in a single variable.
#[derive(Clone, PartialEq)]
pub struct Expr {
    root: Node,
    source: String,
    var: String,
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?} in {})", self.source, self.var)
    }
}

impl Expr {
    /// Parse `source` with `var` as the only free variable.
    pub fn parse(source: &str, var: &str) -> Result<Self, ExprError> {
        let tokens = tokenize(source)?;
        let mut parser = Parser { tokens: &tokens, pos: 0, var, source };
        let root = parser.expr()?;
        if let Some(tok) = parser.peek() {
            return Err(parser.error(tok.col, format!("unexpected {}", tok.kind)));
        }
        Ok(Expr { root, source: source.to_string(), var: var.to_string() })
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.root.eval(x)
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl fmt::Display for TokKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokKind::Num(v) => write!(f, "number {v}"),
            TokKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokKind::Op(c) => write!(f, "operator `{c}`"),
            TokKind::LParen => write!(f, "`(`"),
            TokKind::RParen => write!(f, "`)`"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokKind,
    col: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>, ExprError> {
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
            // exponent part, e.g. 1e-3
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
            let value = text.parse::<f64>().map_err(|_| ExprError {
                message: format!("malformed number `{text}`"),
                column: col,
                source_text: src.to_string(),
            })?;
            out.push(Token { kind: TokKind::Num(value), col });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token { kind: TokKind::Ident(chars[start..i].iter().collect()), col });
        } else {
            let kind = match c {
                '+' | '-' | '*' | '/' | '^' => TokKind::Op(c),
                '(' => TokKind::LParen,
                ')' => TokKind::RParen,
                _ => {
                    return Err(ExprError {
                        message: format!("unexpected character `{c}`"),
                        column: col,
                        source_text: src.to_string(),
                    })
                }
            };
            out.push(Token { kind, col });
            i += 1;
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    var: &'a str,
    source: &'a str,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn error(&self, column: usize, message: String) -> ExprError {
        ExprError { message, column, source_text: self.source.to_string() }
    }

    fn end_column(&self) -> usize {
        self.source.chars().count() + 1
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some(Token { kind: TokKind::Op(c), .. }) if ops.contains(c) => {
                self.pos += 1;
                Some(*c)
            }
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        while let Some(op) = self.eat_op(&['+', '-']) {
            let rhs = self.term()?;
            lhs = if op == '+' {
                Node::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Node::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        match self.eat_op(&['-', '+']) {
            Some('-') => Ok(Node::Neg(Box::new(self.unary()?))),
            Some(_) => self.unary(),
            None => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.primary()?;
        if self.eat_op(&['^']).is_some() {
            let exponent = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ExprError> {
        let Some(tok) = self.peek() else {
            return Err(self.error(self.end_column(), "unexpected end of expression".into()));
        };
        self.pos += 1;
        match &tok.kind {
            TokKind::Num(v) => Ok(Node::Const(*v)),
            TokKind::LParen => {
                let inner = self.expr()?;
                self.expect_rparen(tok.col)?;
                Ok(inner)
            }
            TokKind::Ident(name) => {
                if matches!(self.peek(), Some(Token { kind: TokKind::LParen, .. })) {
                    let func = Func::from_name(name)
                        .ok_or_else(|| self.error(tok.col, format!("unknown function `{name}`")))?;
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect_rparen(tok.col)?;
                    Ok(Node::Call(func, Box::new(arg)))
                } else if name == self.var {
                    Ok(Node::Var)
                } else if name == "pi" {
                    Ok(Node::Const(std::f64::consts::PI))
                } else {
                    Err(self.error(tok.col, format!("unknown identifier `{name}`")))
                }
            }
            other => Err(self.error(tok.col, format!("unexpected {other}"))),
        }
    }

    fn expect_rparen(&mut self, open_col: usize) -> Result<(), ExprError> {
        match self.peek() {
            Some(Token { kind: TokKind::RParen, .. }) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error(open_col, "unclosed parenthesis".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, x: f64) -> f64 {
        Expr::parse(src, "r").unwrap().eval(x)
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("1 + 2 * 3", 0.0), 7.0);
        assert_eq!(ev("(1 + 2) * 3", 0.0), 9.0);
        assert_eq!(ev("2 ^ 3 ^ 2", 0.0), 512.0);
        assert_eq!(ev("-2 ^ 2", 0.0), -4.0);
        assert_eq!(ev("8 / 4 / 2", 0.0), 1.0);
        assert_eq!(ev("1 - 2 - 3", 0.0), -4.0);
    }

    #[test]
    fn functions_and_constants() {
        let x = 0.7;
        assert!((ev("cosh(r)^2 - sinh(r)^2", x) - 1.0).abs() < 1e-14);
        assert!((ev("sin(pi/2)", x) - 1.0).abs() < 1e-15);
        assert!((ev("log(exp(r))", x) - x).abs() < 1e-15);
        assert!((ev("sqrt(r*r)", x) - x).abs() < 1e-15);
        assert!((ev("1.5e-1 * r", 2.0) - 0.3).abs() < 1e-15);
        assert!((ev("cos(2*pi*r)", 0.5) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_column() {
        let e = Expr::parse("1 + foo(r)", "r").unwrap_err();
        assert_eq!(e.column, 5);
        let e = Expr::parse("r + z", "r").unwrap_err();
        assert_eq!(e.column, 5);
        assert!(Expr::parse("(r + 1", "r").is_err());
        assert!(Expr::parse("r +", "r").is_err());
        assert!(Expr::parse("r $ 2", "r").is_err());
        assert!(Expr::parse("r r", "r").is_err());
    }

    #[test]
    fn custom_variable_name() {
        let e = Expr::parse("1 + 0.1*cos(pi*z)", "z").unwrap();
        assert!((e.eval(1.0) - 0.9).abs() < 1e-15);
        assert!(Expr::parse("r", "z").is_err());
    }
}
