use thiserror::Error;

use super::{Expr, Func, Var};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected {}, found {found}", .expected.join(" | "))]
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
        found: String,
    },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Number { value: f64, text: &'a str },
    Ident(&'a str),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok<'_> {
    fn describe(&self) -> String {
        match self {
            Tok::Number { text, .. } => format!("number `{text}`"),
            Tok::Ident(name) => format!("identifier `{name}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

const BASE_START: &[&str] = &["number", "`s`", "`t`", "function", "`(`", "`-`"];

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn next(&mut self) -> Result<(usize, Tok<'a>), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let Some(&c) = bytes.get(start) else {
            return Ok((start, Tok::End));
        };
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            self.pos += 1;
            return Ok((start, tok));
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number(start);
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let len = bytes[start..]
                .iter()
                .take_while(|b| b.is_ascii_alphanumeric() || **b == b'_')
                .count();
            self.pos += len;
            return Ok((start, Tok::Ident(&self.src[start..start + len])));
        }
        let ch = self.src[start..].chars().next().unwrap_or('?');
        Err(ParseError::Syntax {
            offset: start,
            expected: vec!["number", "identifier", "operator", "`(`", "`)`"],
            found: format!("character `{ch}`"),
        })
    }

    fn number(&mut self, start: usize) -> Result<(usize, Tok<'a>), ParseError> {
        let bytes = self.src.as_bytes();
        let digits = |from: usize| bytes[from..].iter().take_while(|b| b.is_ascii_digit()).count();
        let mut end = start;
        let int_len = digits(end);
        end += int_len;
        let mut frac_len = 0;
        if bytes.get(end) == Some(&b'.') {
            end += 1;
            frac_len = digits(end);
            end += frac_len;
        }
        if int_len + frac_len == 0 {
            return Err(ParseError::Syntax {
                offset: end,
                expected: vec!["digit"],
                found: describe_byte(self.src, end),
            });
        }
        if matches!(bytes.get(end), Some(b'e' | b'E')) {
            let mut exp_end = end + 1;
            if matches!(bytes.get(exp_end), Some(b'+' | b'-')) {
                exp_end += 1;
            }
            let exp_len = digits(exp_end);
            if exp_len == 0 {
                return Err(ParseError::Syntax {
                    offset: exp_end,
                    expected: vec!["exponent digits"],
                    found: describe_byte(self.src, exp_end),
                });
            }
            end = exp_end + exp_len;
        }
        let text = &self.src[start..end];
        let value = text.parse::<f64>().map_err(|_| ParseError::Syntax {
            offset: start,
            expected: vec!["number"],
            found: format!("`{text}`"),
        })?;
        self.pos = end;
        Ok((start, Tok::Number { value, text }))
    }
}

fn describe_byte(src: &str, offset: usize) -> String {
    match src[offset..].chars().next() {
        Some(c) => format!("character `{c}`"),
        None => "end of input".into(),
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: (usize, Tok<'a>),
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, ParseError> {
        let mut lexer = Lexer { src, pos: 0 };
        let peeked = lexer.next()?;
        Ok(Parser { lexer, peeked })
    }

    fn bump(&mut self) -> Result<(usize, Tok<'a>), ParseError> {
        let next = self.lexer.next()?;
        Ok(std::mem::replace(&mut self.peeked, next))
    }

    fn error(&self, expected: &[&'static str]) -> ParseError {
        ParseError::Syntax {
            offset: self.peeked.0,
            expected: expected.to_vec(),
            found: self.peeked.1.describe(),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peeked.1 {
                Tok::Plus => {
                    self.bump()?;
                    lhs = lhs.add(&self.term()?);
                }
                Tok::Minus => {
                    self.bump()?;
                    lhs = lhs.sub(&self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peeked.1 {
                Tok::Star => {
                    self.bump()?;
                    lhs = lhs.mul(&self.factor()?);
                }
                Tok::Slash => {
                    self.bump()?;
                    lhs = lhs.div(&self.factor()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if self.peeked.1 != Tok::Caret {
            return Ok(base);
        }
        self.bump()?;
        let negative = match self.peeked.1 {
            Tok::Minus => {
                self.bump()?;
                true
            }
            Tok::Plus => {
                self.bump()?;
                false
            }
            _ => false,
        };
        let (offset, tok) = self.peeked.clone();
        let Tok::Number { text, .. } = tok else {
            return Err(self.error(&["integer exponent"]));
        };
        let magnitude: i32 = text
            .bytes()
            .all(|b| b.is_ascii_digit())
            .then(|| text.parse().ok())
            .flatten()
            .ok_or_else(|| ParseError::Syntax {
                offset,
                expected: vec!["integer exponent"],
                found: format!("number `{text}`"),
            })?;
        self.bump()?;
        Ok(base.powi(if negative { -magnitude } else { magnitude }))
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let (offset, tok) = self.peeked.clone();
        match tok {
            Tok::Number { value, .. } => {
                self.bump()?;
                Ok(Expr::constant(value))
            }
            Tok::Minus => {
                self.bump()?;
                Ok(self.base()?.neg())
            }
            Tok::LParen => {
                self.bump()?;
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump()?;
                match name {
                    "s" => Ok(Expr::var(Var::S)),
                    "t" => Ok(Expr::var(Var::T)),
                    _ => {
                        let func = Func::from_name(name).ok_or_else(|| ParseError::UnknownIdentifier {
                            offset,
                            name: name.to_string(),
                        })?;
                        if self.peeked.1 != Tok::LParen {
                            return Err(self.error(&["`(`"]));
                        }
                        self.bump()?;
                        let arg = self.expr()?;
                        self.expect_rparen()?;
                        Ok(Expr::call(func, &arg))
                    }
                }
            }
            _ => Err(self.error(BASE_START)),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if self.peeked.1 != Tok::RParen {
            return Err(self.error(&["`)`", "operator"]));
        }
        self.bump()?;
        Ok(())
    }
}

/// Parses an expression in `s` and `t`.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut parser = Parser::new(text)?;
    let e = parser.expr()?;
    if parser.peeked.1 != Tok::End {
        return Err(parser.error(&["operator", "end of input"]));
    }
    Ok(e)
}
