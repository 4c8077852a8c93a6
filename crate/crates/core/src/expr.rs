//! A tiny arithmetic expression grammar for spatial fields.
//!
//! Grammar (version 1): numbers, the variables `x` and `y`, the operators
//! `+ - * /` with the usual precedence, unary minus, parentheses, and the
//! two-argument functions `min(a, b)` and `max(a, b)`. Nothing else.
//!
//! Config files define material and load fields with this grammar, so its
//! scope is deliberately frozen; extending it is a schema version bump.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const GRAMMAR_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    X,
    Y,
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Min(Box<Node>, Box<Node>),
    Max(Box<Node>, Box<Node>),
}

/// A parsed expression in `x` and `y`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Expr {
    source: String,
    #[serde(skip)]
    root: Option<Box<Node>>,
}

impl TryFrom<String> for Expr {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Expr::parse(&s)
    }
}

impl From<Expr> for String {
    fn from(e: Expr) -> String {
        e.source
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

impl Expr {
    pub fn parse(source: &str) -> Result<Expr> {
        let tokens = tokenize(source)?;
        let mut p = Parser { tokens, pos: 0 };
        let root = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Config(vec![format!(
                "expression `{source}`: unexpected trailing input"
            )]));
        }
        Ok(Expr {
            source: source.to_string(),
            root: Some(Box::new(root)),
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        fn go(n: &Node, x: f64, y: f64) -> f64 {
            match n {
                Node::Num(v) => *v,
                Node::X => x,
                Node::Y => y,
                Node::Add(a, b) => go(a, x, y) + go(b, x, y),
                Node::Sub(a, b) => go(a, x, y) - go(b, x, y),
                Node::Mul(a, b) => go(a, x, y) * go(b, x, y),
                Node::Div(a, b) => go(a, x, y) / go(b, x, y),
                Node::Neg(a) => -go(a, x, y),
                Node::Min(a, b) => go(a, x, y).min(go(b, x, y)),
                Node::Max(a, b) => go(a, x, y).max(go(b, x, y)),
            }
        }
        go(self.root.as_ref().expect("parsed"), x, y)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Comma,
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let bytes: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '/' => {
                out.push(Tok::Slash);
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
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_digit()
                        || bytes[i] == '.'
                        || bytes[i] == 'e'
                        || bytes[i] == 'E'
                        || ((bytes[i] == '+' || bytes[i] == '-')
                            && i > start
                            && (bytes[i - 1] == 'e' || bytes[i - 1] == 'E')))
                {
                    i += 1;
                }
                let text: String = bytes[start..i].iter().collect();
                let v: f64 = text.parse().map_err(|_| {
                    Error::Config(vec![format!("expression `{s}`: bad number `{text}`")])
                })?;
                out.push(Tok::Num(v));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Ident(bytes[start..i].iter().collect()));
            }
            _ => {
                return Err(Error::Config(vec![format!(
                    "expression `{s}`: unexpected character `{c}`"
                )]))
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        match self.bump() {
            Some(got) if got == t => Ok(()),
            got => Err(Error::Config(vec![format!(
                "expected {t:?}, found {got:?}"
            )])),
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(Tok::Slash) => {
                    self.bump();
                    lhs = Node::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Node> {
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Node::Num(v)),
            Some(Tok::Minus) => Ok(Node::Neg(Box::new(self.factor()?))),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "x" => Ok(Node::X),
                "y" => Ok(Node::Y),
                "min" | "max" => {
                    self.expect(Tok::LParen)?;
                    let a = self.expr()?;
                    self.expect(Tok::Comma)?;
                    let b = self.expr()?;
                    self.expect(Tok::RParen)?;
                    Ok(if name == "min" {
                        Node::Min(Box::new(a), Box::new(b))
                    } else {
                        Node::Max(Box::new(a), Box::new(b))
                    })
                }
                other => Err(Error::Config(vec![format!(
                    "unknown identifier `{other}` (grammar v{GRAMMAR_VERSION} allows x, y, min, max)"
                )])),
            },
            got => Err(Error::Config(vec![format!(
                "unexpected token {got:?} in expression"
            )])),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn parses_and_evaluates() {
        let e = Expr::parse("1 + 2*x - y/4").unwrap();
        assert_relative_eq!(e.eval(2.0, 8.0), 1.0 + 4.0 - 2.0);
        let clamp = Expr::parse("min(1, max(0, (x - 0.35)/0.02))").unwrap();
        assert_relative_eq!(clamp.eval(0.3, 0.0), 0.0);
        assert_relative_eq!(clamp.eval(0.36, 0.0), 0.5, epsilon = 1e-12);
        assert_relative_eq!(clamp.eval(0.9, 0.0), 1.0);
    }

    #[test]
    fn precedence_and_unary_minus() {
        let e = Expr::parse("-x*2 + 3").unwrap();
        assert_relative_eq!(e.eval(1.0, 0.0), 1.0);
        let e = Expr::parse("2e-1 * (x + y)").unwrap();
        assert_relative_eq!(e.eval(1.0, 1.0), 0.4);
    }

    #[test]
    fn rejects_unknown_identifiers() {
        assert!(Expr::parse("sin(x)").is_err());
        assert!(Expr::parse("x + ").is_err());
        assert!(Expr::parse("x y").is_err());
    }

    #[test]
    fn roundtrips_through_serde() {
        let e: Expr = serde_json::from_str("\"min(x, 1 - y)\"").unwrap();
        assert_relative_eq!(e.eval(0.25, 0.5), 0.25);
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(s, "\"min(x, 1 - y)\"");
    }
}
