//! Recursive-descent parser for the expression and vector-field DSL.
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := ("-" | "+") unary | atom
//! atom    := number | "pi" | "sqrt" "(" integer ")" | var | basis
//!          | ("sin" | "cos") "(" expr ")" | "(" expr ")"
//! var     := ("x" | "y") digit          -- x1..x6 or y1..y6
//! basis   := "d/d" ("x" | "y") digit    -- only inside field definitions
//! ```
//!
//! Division is accepted only by constant subexpressions, so `2*pi/3` is fine and
//! `x1/x2` is rejected. Arguments of `sin`/`cos` must be affine.

use std::collections::BTreeMap;

use thiserror::Error;

use super::Expr;

/// Number of coordinates the DSL accepts.
const DIM: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at column {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown identifier `{name}` at column {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("non-affine argument of {func} at column {pos}")]
    NonAffineTrig { pos: usize, func: &'static str },
    #[error("division by a non-constant expression at column {pos}")]
    NonConstantDivisor { pos: usize },
    #[error("coordinate prefix `{found}` at column {pos} conflicts with earlier `{expected}`")]
    MixedPrefix { pos: usize, expected: char, found: char },
    #[error("basis direction at column {pos} is not allowed in a scalar expression")]
    UnexpectedBasis { pos: usize },
    #[error("invalid vector-field term at column {pos}: {message}")]
    FieldTerm { pos: usize, message: String },
}

impl ParseError {
    /// 1-based column of the offending input.
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::UnknownIdentifier { pos, .. }
            | ParseError::NonAffineTrig { pos, .. }
            | ParseError::NonConstantDivisor { pos }
            | ParseError::MixedPrefix { pos, .. }
            | ParseError::UnexpectedBasis { pos }
            | ParseError::FieldTerm { pos, .. } => *pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Token {
    Number(f64),
    Ident(String),
    Basis(char, usize),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = i + 1;
        match c {
            _ if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '+' => out.push((Token::Plus, pos)),
            '-' => out.push((Token::Minus, pos)),
            '*' => out.push((Token::Star, pos)),
            '/' => out.push((Token::Slash, pos)),
            '(' => out.push((Token::LParen, pos)),
            ')' => out.push((Token::RParen, pos)),
            _ if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let value = text.parse::<f64>().map_err(|_| ParseError::Syntax {
                    pos,
                    message: format!("malformed number `{text}`"),
                })?;
                out.push((Token::Number(value), pos));
                continue;
            }
            _ if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let name: String = chars[start..i].iter().collect();
                if name == "d" && chars.get(i) == Some(&'/') && chars.get(i + 1) == Some(&'d') {
                    i += 2;
                    let start = i;
                    while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                        i += 1;
                    }
                    let coord: String = chars[start..i].iter().collect();
                    let (prefix, idx) = coordinate(&coord).ok_or(ParseError::UnknownIdentifier {
                        pos,
                        name: format!("d/d{coord}"),
                    })?;
                    out.push((Token::Basis(prefix, idx), pos));
                } else {
                    out.push((Token::Ident(name), pos));
                }
                continue;
            }
            _ => {
                return Err(ParseError::Syntax {
                    pos,
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
        i += 1;
    }
    Ok(out)
}

/// `x4` → ('x', 3)
fn coordinate(name: &str) -> Option<(char, usize)> {
    let mut chars = name.chars();
    let prefix = chars.next()?;
    if prefix != 'x' && prefix != 'y' {
        return None;
    }
    let idx: usize = chars.as_str().parse().ok()?;
    (1..=DIM).contains(&idx).then_some((prefix, idx - 1))
}

/// A parsed value: a scalar part plus coefficients on basis directions.
#[derive(Debug, Clone)]
struct Value {
    scalar: Expr,
    dirs: BTreeMap<usize, Expr>,
}

impl Value {
    fn scalar(e: Expr) -> Self {
        Value {
            scalar: e,
            dirs: BTreeMap::new(),
        }
    }

    fn has_basis(&self) -> bool {
        !self.dirs.is_empty()
    }

    fn add(mut self, other: Value) -> Value {
        self.scalar = self.scalar.add(other.scalar);
        for (k, c) in other.dirs {
            let slot = self.dirs.remove(&k).unwrap_or_else(Expr::zero);
            self.dirs.insert(k, slot.add(c));
        }
        self
    }

    fn neg(self) -> Value {
        Value {
            scalar: Expr::neg(self.scalar),
            dirs: self.dirs.into_iter().map(|(k, c)| (k, Expr::neg(c))).collect(),
        }
    }

    fn map_scale(self, f: impl Fn(Expr) -> Expr) -> Value {
        Value {
            scalar: f(self.scalar),
            dirs: self.dirs.into_iter().map(|(k, c)| (k, f(c))).collect(),
        }
    }
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    cursor: usize,
    end: usize,
    prefix: Option<(char, usize)>,
}

impl Parser {
    fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser {
            tokens: tokenize(src)?,
            cursor: 0,
            end: src.chars().count() + 1,
            prefix: None,
        })
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.cursor).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.tokens.get(self.cursor).map_or(self.end, |(_, p)| *p)
    }

    fn bump(&mut self) -> Option<(Token, usize)> {
        let t = self.tokens.get(self.cursor).cloned();
        self.cursor += 1;
        t
    }

    fn expect(&mut self, want: Token, what: &str) -> Result<(), ParseError> {
        let pos = self.pos();
        match self.bump() {
            Some((t, _)) if t == want => Ok(()),
            _ => Err(ParseError::Syntax {
                pos,
                message: format!("expected {what}"),
            }),
        }
    }

    fn note_prefix(&mut self, prefix: char, pos: usize) -> Result<(), ParseError> {
        match self.prefix {
            Some((p, _)) if p != prefix => Err(ParseError::MixedPrefix {
                pos,
                expected: p,
                found: prefix,
            }),
            Some(_) => Ok(()),
            None => {
                self.prefix = Some((prefix, pos));
                Ok(())
            }
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.cursor < self.tokens.len() {
            return Err(ParseError::Syntax {
                pos: self.pos(),
                message: "unexpected trailing input".into(),
            });
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Value, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.bump();
                    let rhs = self.term()?;
                    acc = acc.add(rhs);
                }
                Some(Token::Minus) => {
                    self.bump();
                    let rhs = self.term()?;
                    acc = acc.add(rhs.neg());
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Value, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    let pos = self.pos();
                    self.bump();
                    let rhs = self.unary()?;
                    acc = match (acc.has_basis(), rhs.has_basis()) {
                        (true, true) => {
                            return Err(ParseError::FieldTerm {
                                pos,
                                message: "product of two basis directions".into(),
                            })
                        }
                        (false, false) => Value::scalar(acc.scalar.mul(rhs.scalar)),
                        (true, false) => {
                            if !acc.scalar.is_const_zero() {
                                return Err(ParseError::FieldTerm {
                                    pos,
                                    message: "mixed scalar and basis factor".into(),
                                });
                            }
                            let s = rhs.scalar;
                            acc.map_scale(|c| c.mul(s.clone()))
                        }
                        (false, true) => {
                            if !rhs.scalar.is_const_zero() {
                                return Err(ParseError::FieldTerm {
                                    pos,
                                    message: "mixed scalar and basis factor".into(),
                                });
                            }
                            let s = acc.scalar;
                            rhs.map_scale(|c| s.clone().mul(c))
                        }
                    };
                }
                Some(Token::Slash) => {
                    self.bump();
                    let pos = self.pos();
                    let rhs = self.unary()?;
                    let divisor = match (rhs.has_basis(), rhs.scalar.as_const()) {
                        (false, Some(c)) => c,
                        _ => return Err(ParseError::NonConstantDivisor { pos }),
                    };
                    acc = acc.map_scale(|e| match e {
                        Expr::Const(c) => Expr::Const(c / divisor),
                        other => other.mul(Expr::Const(1.0 / divisor)),
                    });
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Value, ParseError> {
        match self.peek() {
            Some(Token::Minus) => {
                self.bump();
                Ok(self.unary()?.neg())
            }
            Some(Token::Plus) => {
                self.bump();
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Value, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Some((Token::Number(v), _)) => Ok(Value::scalar(Expr::Const(v))),
            Some((Token::LParen, _)) => {
                let v = self.expr()?;
                self.expect(Token::RParen, "`)`")?;
                Ok(v)
            }
            Some((Token::Basis(prefix, idx), _)) => {
                self.note_prefix(prefix, pos)?;
                let mut dirs = BTreeMap::new();
                dirs.insert(idx, Expr::one());
                Ok(Value {
                    scalar: Expr::zero(),
                    dirs,
                })
            }
            Some((Token::Ident(name), _)) => self.ident(name, pos),
            Some((t, _)) => Err(ParseError::Syntax {
                pos,
                message: format!("unexpected token {t:?}"),
            }),
            None => Err(ParseError::Syntax {
                pos,
                message: "unexpected end of input".into(),
            }),
        }
    }

    fn ident(&mut self, name: String, pos: usize) -> Result<Value, ParseError> {
        match name.as_str() {
            "pi" => Ok(Value::scalar(Expr::Const(std::f64::consts::PI))),
            "sqrt" => {
                self.expect(Token::LParen, "`(` after sqrt")?;
                let arg_pos = self.pos();
                let k = match self.bump() {
                    Some((Token::Number(v), _)) if v >= 0.0 && v.fract() == 0.0 => v,
                    _ => {
                        return Err(ParseError::Syntax {
                            pos: arg_pos,
                            message: "sqrt takes a non-negative integer literal".into(),
                        })
                    }
                };
                self.expect(Token::RParen, "`)`")?;
                Ok(Value::scalar(Expr::Const(k.sqrt())))
            }
            "sin" | "cos" => {
                let func = if name == "sin" { "sin" } else { "cos" };
                self.expect(Token::LParen, "`(`")?;
                let arg_pos = self.pos();
                let arg = self.expr()?;
                self.expect(Token::RParen, "`)`")?;
                if arg.has_basis() {
                    return Err(ParseError::UnexpectedBasis { pos: arg_pos });
                }
                let affine = arg
                    .scalar
                    .to_affine()
                    .ok_or(ParseError::NonAffineTrig { pos: arg_pos, func })?;
                Ok(Value::scalar(if func == "sin" {
                    Expr::sin(affine)
                } else {
                    Expr::cos(affine)
                }))
            }
            _ => match coordinate(&name) {
                Some((prefix, idx)) => {
                    self.note_prefix(prefix, pos)?;
                    Ok(Value::scalar(Expr::Var(idx)))
                }
                None => Err(ParseError::UnknownIdentifier { pos, name }),
            },
        }
    }
}

/// Parse a scalar expression over `x1..x6` (or `y1..y6`).
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    parse_with_prefix(src).map(|(e, _)| e)
}

/// Like [`parse`], also returning the coordinate prefix that was used, if any.
pub fn parse_with_prefix(src: &str) -> Result<(Expr, Option<char>), ParseError> {
    let mut p = Parser::new(src)?;
    let v = p.expr()?;
    p.finish()?;
    if v.has_basis() {
        let pos = p
            .tokens
            .iter()
            .find(|(t, _)| matches!(t, Token::Basis(..)))
            .map_or(1, |(_, pos)| *pos);
        return Err(ParseError::UnexpectedBasis { pos });
    }
    Ok((v.scalar, p.prefix.map(|(c, _)| c)))
}

/// Components of a parsed vector field `Σ coeff_k * d/dx_k`.
pub(crate) struct FieldTerms {
    pub prefix: Option<char>,
    pub components: Vec<Expr>,
}

pub(crate) fn parse_field_terms(src: &str) -> Result<FieldTerms, ParseError> {
    let mut p = Parser::new(src)?;
    let v = p.expr()?;
    p.finish()?;
    if !v.scalar.is_const_zero() {
        return Err(ParseError::FieldTerm {
            pos: 1,
            message: "scalar term without a basis direction".into(),
        });
    }
    let mut components = vec![Expr::zero(); DIM];
    for (k, c) in v.dirs {
        components[k] = c;
    }
    Ok(FieldTerms {
        prefix: p.prefix.map(|(c, _)| c),
        components,
    })
}
