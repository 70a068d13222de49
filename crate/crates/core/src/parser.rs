//! Text form of phases and derived polynomials.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary ('*' unary)*
//! unary  := '-' unary | factor
//! factor := base ('^' integer)?
//! base   := number ('/' number)? | variable | '(' expr ')'
//! ```
//!
//! Variables are `x1..xd` and `y1..yd`; derived objects additionally use
//! `t1..td` for τ. Numbers are integers or decimals and are converted to exact
//! rationals. Multiplication must be explicit: `2x1` is rejected.

use std::fmt;

use num_traits::Zero;
use serde::Serialize;

use crate::poly::{rational_from_decimal, Polynomial, Rational, Role, VarId};

/// Largest total degree the parser will build.
pub const MAX_DEGREE: u32 = 64;

/// Half-open byte range into the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Number,
    Variable(Role, usize),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    Slash,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token<'a> {
    pub kind: TokenKind,
    pub span: Span,
    pub lexeme: &'a str,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseError {
    pub span: Span,
    pub message: String,
    pub expected: Vec<String>,
}

impl ParseError {
    fn new(span: Span, message: impl Into<String>) -> Self {
        ParseError {
            span,
            message: message.into(),
            expected: Vec::new(),
        }
    }

    fn expecting(mut self, expected: &[&str]) -> Self {
        self.expected = expected.iter().map(|s| s.to_string()).collect();
        self
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at bytes {}..{}", self.message, self.span.start, self.span.end)?;
        if !self.expected.is_empty() {
            write!(f, " (expected one of: {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

pub fn tokenize(src: &str) -> Result<Vec<Token<'_>>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b'+' => Some(TokenKind::Plus),
            b'-' => Some(TokenKind::Minus),
            b'*' => Some(TokenKind::Star),
            b'^' => Some(TokenKind::Caret),
            b'(' => Some(TokenKind::LParen),
            b')' => Some(TokenKind::RParen),
            b'/' => Some(TokenKind::Slash),
            _ => None,
        };
        if let Some(kind) = single {
            i += 1;
            out.push(Token {
                kind,
                span: Span::new(start, i),
                lexeme: &src[start..i],
            });
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if &src[start..i] == "." {
                return Err(ParseError::new(Span::new(start, i), "malformed number"));
            }
            out.push(Token {
                kind: TokenKind::Number,
                span: Span::new(start, i),
                lexeme: &src[start..i],
            });
            continue;
        }
        let role = match c {
            b'x' => Some(Role::X),
            b'y' => Some(Role::Y),
            b't' => Some(Role::Tau),
            _ => None,
        };
        if let Some(role) = role {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let digits = &src[start + 1..i];
            if digits.is_empty() {
                return Err(ParseError::new(
                    Span::new(start, i),
                    format!("variable '{}' needs an index", c as char),
                )
                .expecting(&["digit"]));
            }
            let index = digits.parse::<usize>().unwrap_or(usize::MAX);
            out.push(Token {
                kind: TokenKind::Variable(role, index),
                span: Span::new(start, i),
                lexeme: &src[start..i],
            });
            continue;
        }
        let ch = src[start..].chars().next().unwrap();
        return Err(ParseError::new(
            Span::new(start, start + ch.len_utf8()),
            format!("illegal character {ch:?}"),
        ));
    }
    Ok(out)
}

/// Parses a user phase: only `x` and `y` variables are accepted.
pub fn parse_phase(src: &str, dim: usize) -> Result<Polynomial, ParseError> {
    Parser::new(src, dim, false)?.parse()
}

/// Parses any polynomial of the crate's text form, including `t` variables.
pub fn parse_polynomial(src: &str, dim: usize) -> Result<Polynomial, ParseError> {
    Parser::new(src, dim, true)?.parse()
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<Token<'a>>,
    pos: usize,
    dim: usize,
    allow_tau: bool,
}

const AFTER_OPERAND: &[&str] = &["+", "-", "*", "^", ")", "end of input"];
const OPERAND: &[&str] = &["number", "variable", "(", "-"];

impl<'a> Parser<'a> {
    fn new(src: &'a str, dim: usize, allow_tau: bool) -> Result<Self, ParseError> {
        if dim == 0 {
            return Err(ParseError::new(Span::new(0, 0), "dimension must be at least 1"));
        }
        Ok(Parser {
            src,
            tokens: tokenize(src)?,
            pos: 0,
            dim,
            allow_tau,
        })
    }

    fn parse(mut self) -> Result<Polynomial, ParseError> {
        if self.tokens.is_empty() {
            return Err(self.eof_error("empty expression").expecting(OPERAND));
        }
        let p = self.expr()?;
        if let Some(tok) = self.peek() {
            let msg = match tok.kind {
                TokenKind::Number | TokenKind::Variable(..) | TokenKind::LParen => {
                    "implicit multiplication is not supported; insert '*'".to_string()
                }
                TokenKind::Slash => "'/' is only allowed between two numbers".to_string(),
                _ => format!("unexpected '{}'", tok.lexeme),
            };
            return Err(ParseError::new(tok.span, msg).expecting(AFTER_OPERAND));
        }
        Ok(p)
    }

    fn peek(&self) -> Option<&Token<'a>> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self) -> Option<TokenKind> {
        self.peek().map(|t| t.kind)
    }

    fn bump(&mut self) -> Option<Token<'a>> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn eof_error(&self, msg: &str) -> ParseError {
        let n = self.src.len();
        ParseError::new(Span::new(n, n), msg)
    }

    fn check_degree(&self, p: Polynomial, span: Span) -> Result<Polynomial, ParseError> {
        if p.degree().unwrap_or(0) > MAX_DEGREE {
            return Err(ParseError::new(
                span,
                format!("total degree exceeds the limit of {MAX_DEGREE}"),
            ));
        }
        Ok(p)
    }

    fn expr(&mut self) -> Result<Polynomial, ParseError> {
        let mut acc = self.term()?;
        while let Some(kind @ (TokenKind::Plus | TokenKind::Minus)) = self.peek_kind() {
            self.bump();
            let rhs = self.term()?;
            acc = if kind == TokenKind::Plus {
                &acc + &rhs
            } else {
                &acc - &rhs
            };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Polynomial, ParseError> {
        let start = self.peek().map_or(self.src.len(), |t| t.span.start);
        let mut acc = self.unary()?;
        while self.peek_kind() == Some(TokenKind::Star) {
            self.bump();
            let rhs = self.unary()?;
            let end = self.tokens[self.pos - 1].span.end;
            if acc.degree().unwrap_or(0) + rhs.degree().unwrap_or(0) > MAX_DEGREE {
                return Err(ParseError::new(
                    Span::new(start, end),
                    format!("total degree exceeds the limit of {MAX_DEGREE}"),
                ));
            }
            acc = &acc * &rhs;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Polynomial, ParseError> {
        if self.peek_kind() == Some(TokenKind::Minus) {
            self.bump();
            return Ok(-self.unary()?);
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<Polynomial, ParseError> {
        let start = self.peek().map_or(self.src.len(), |t| t.span.start);
        let base = self.base()?;
        if self.peek_kind() != Some(TokenKind::Caret) {
            return Ok(base);
        }
        let caret = self.bump().unwrap();
        let exp_tok = match self.bump() {
            Some(t) => t,
            None => {
                return Err(self
                    .eof_error("missing exponent after '^'")
                    .expecting(&["nonnegative integer"]))
            }
        };
        if exp_tok.kind != TokenKind::Number || exp_tok.lexeme.contains('.') {
            return Err(ParseError::new(
                Span::new(caret.span.start, exp_tok.span.end),
                "exponent must be a nonnegative integer",
            )
            .expecting(&["nonnegative integer"]));
        }
        let e: u32 = match exp_tok.lexeme.parse() {
            Ok(e) if e <= MAX_DEGREE => e,
            _ => {
                return Err(ParseError::new(
                    exp_tok.span,
                    format!("exponent exceeds the limit of {MAX_DEGREE}"),
                ))
            }
        };
        let span = Span::new(start, exp_tok.span.end);
        if base.degree().unwrap_or(0) as u64 * e as u64 > MAX_DEGREE as u64 {
            return Err(ParseError::new(
                span,
                format!("total degree exceeds the limit of {MAX_DEGREE}"),
            ));
        }
        self.check_degree(base.pow(e), span)
    }

    fn base(&mut self) -> Result<Polynomial, ParseError> {
        let tok = match self.bump() {
            Some(t) => t,
            None => return Err(self.eof_error("unexpected end of input").expecting(OPERAND)),
        };
        match tok.kind {
            TokenKind::Number => {
                let mut value = self.number(&tok)?;
                if self.peek_kind() == Some(TokenKind::Slash) {
                    let slash = self.bump().unwrap();
                    let den_tok = match self.bump() {
                        Some(t) if t.kind == TokenKind::Number => t,
                        Some(t) => {
                            return Err(ParseError::new(t.span, "expected a denominator")
                                .expecting(&["number"]))
                        }
                        None => {
                            return Err(self
                                .eof_error("expected a denominator")
                                .expecting(&["number"]))
                        }
                    };
                    let den = self.number(&den_tok)?;
                    if den.is_zero() {
                        return Err(ParseError::new(
                            Span::new(slash.span.start, den_tok.span.end),
                            "zero denominator",
                        ));
                    }
                    value /= den;
                }
                Ok(Polynomial::constant(self.dim, value))
            }
            TokenKind::Variable(role, index) => {
                if role == Role::Tau && !self.allow_tau {
                    return Err(ParseError::new(
                        tok.span,
                        "τ variables are not allowed in a phase",
                    )
                    .expecting(&["x<i>", "y<i>"]));
                }
                let var = VarId::new(role, index);
                if index == 0 {
                    return Err(ParseError::new(tok.span, "variable indices start at 1"));
                }
                if !var.is_valid(self.dim) {
                    return Err(ParseError::new(
                        tok.span,
                        format!(
                            "variable index exceeds dimension: {} with d = {}",
                            tok.lexeme, self.dim
                        ),
                    ));
                }
                Ok(Polynomial::var(self.dim, var).expect("validated variable"))
            }
            TokenKind::LParen => {
                let inner = self.expr()?;
                match self.bump() {
                    Some(t) if t.kind == TokenKind::RParen => Ok(inner),
                    Some(t) => Err(ParseError::new(t.span, format!("unexpected '{}'", t.lexeme))
                        .expecting(&[")", "+", "-", "*"])),
                    None => Err(self.eof_error("unclosed '('").expecting(&[")"])),
                }
            }
            _ => Err(
                ParseError::new(tok.span, format!("unexpected '{}'", tok.lexeme))
                    .expecting(OPERAND),
            ),
        }
    }

    fn number(&self, tok: &Token<'_>) -> Result<Rational, ParseError> {
        rational_from_decimal(tok.lexeme)
            .ok_or_else(|| ParseError::new(tok.span, "malformed number"))
    }
}
