use thiserror::Error;

use super::{BinaryOp, Expr, UnaryOp};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: found {found}, expected one of {expected:?}")]
    Syntax {
        offset: usize,
        found: String,
        expected: Vec<&'static str>,
    },
    #[error("exponent at byte {offset} must be a numeric literal")]
    ExponentNotLiteral { offset: usize },
    #[error("spow exponent {value} at byte {offset} must be >= 1")]
    SpowExponentTooSmall { offset: usize, value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Number(v) => format!("number {v}"),
            Token::Ident(s) => format!("identifier `{s}`"),
            Token::Plus => "`+`".into(),
            Token::Minus => "`-`".into(),
            Token::Star => "`*`".into(),
            Token::Slash => "`/`".into(),
            Token::Caret => "`^`".into(),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::Comma => "`,`".into(),
            Token::End => "end of input".into(),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'+' => Token::Plus,
            b'-' => Token::Minus,
            b'*' => Token::Star,
            b'/' => Token::Slash,
            b'^' => Token::Caret,
            b'(' => Token::LParen,
            b')' => Token::RParen,
            b',' => Token::Comma,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                    offset: start,
                    found: format!("malformed number `{text}`"),
                    expected: vec!["number"],
                })?;
                out.push((start, Token::Number(value)));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Token::Ident(src[start..i].to_string())));
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: start,
                    found: format!("character `{ch}`"),
                    expected: vec!["number", "x", "function", "(", "operator"],
                });
            }
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((src.len(), Token::End));
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
}

const OPERAND: &[&str] = &["number", "x", "-", "(", "sin", "cos", "exp", "log", "sqrt", "abs", "spow"];

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].1
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].0
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].1.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&'static str]) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            found: self.peek().describe(),
            expected: expected.to_vec(),
        }
    }

    fn expect(&mut self, tok: Token, name: &'static str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[name]))
        }
    }

    fn expression(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Token::Plus => BinaryOp::Add,
                Token::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.power()?;
        loop {
            let op = match self.peek() {
                Token::Star => BinaryOp::Mul,
                Token::Slash => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.power()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.unary()?;
        if *self.peek() != Token::Caret {
            return Ok(base);
        }
        self.bump();
        let at = self.offset();
        let exponent = self.power()?;
        let p = literal_value(&exponent).ok_or(ParseError::ExponentNotLiteral { offset: at })?;
        Ok(Expr::pow(base, p))
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Token::Minus {
            self.bump();
            if let Token::Number(v) = *self.peek() {
                self.bump();
                return Ok(Expr::Const(-v));
            }
            let inner = self.unary()?;
            return Ok(Expr::unary(UnaryOp::Neg, inner));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Token::Number(v) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Token::LParen => {
                self.bump();
                let e = self.expression()?;
                self.expect(Token::RParen, ")")?;
                Ok(e)
            }
            Token::Ident(name) => {
                if name == "x" {
                    self.bump();
                    return Ok(Expr::Var);
                }
                if name == "spow" {
                    self.bump();
                    self.expect(Token::LParen, "(")?;
                    let arg = self.expression()?;
                    self.expect(Token::Comma, ",")?;
                    let at = self.offset();
                    let exponent = self.expression()?;
                    let alpha = match exponent {
                        Expr::Const(v) => v,
                        _ => return Err(ParseError::ExponentNotLiteral { offset: at }),
                    };
                    if !(alpha >= 1.0) {
                        return Err(ParseError::SpowExponentTooSmall {
                            offset: at,
                            value: alpha,
                        });
                    }
                    self.expect(Token::RParen, ")")?;
                    return Ok(Expr::spow(arg, alpha));
                }
                match super::UnaryOp::from_name(&name) {
                    Some(op) => {
                        self.bump();
                        self.expect(Token::LParen, "(")?;
                        let arg = self.expression()?;
                        self.expect(Token::RParen, ")")?;
                        Ok(Expr::unary(op, arg))
                    }
                    None => Err(self.error(OPERAND)),
                }
            }
            _ => Err(self.error(OPERAND)),
        }
    }
}

/// Exponents may be written as any variable-free subexpression; it is folded here.
fn literal_value(e: &Expr) -> Option<f64> {
    if e.contains_var() {
        return None;
    }
    e.eval(0.0).ok()
}

/// Parses an expression over `x`.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(source)?;
    let mut p = Parser { tokens, pos: 0 };
    let e = p.expression()?;
    if *p.peek() != Token::End {
        return Err(p.error(&["operator", "end of input"]));
    }
    Ok(e)
}
