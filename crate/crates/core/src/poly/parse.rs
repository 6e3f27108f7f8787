//! Text format for polynomial systems.
//!
//! ```text
//! vars x,y,z;
//! x^3 - y*z; y^3 - x*z;
//! (1.5-0.25i)*z^3 - x*y
//! ```
//!
//! Numbers are decimal reals; a trailing `i` makes a literal imaginary. A bare
//! `i` is the imaginary unit unless `i` is declared as a variable. `#` starts a
//! comment that runs to the end of the line.

use num_complex::Complex64;
use thiserror::Error;

use super::{PolySystem, Polynomial};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("undeclared variable `{name}` at line {line}, column {col}")]
    UndeclaredVariable { name: String, line: usize, col: usize },
    #[error("exponent overflow at line {line}, column {col}")]
    ExponentOverflow { line: usize, col: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num { value: f64, imaginary: bool },
    Int(u64),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Semi,
    Comma,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        let (tl, tc) = (line, col);
        let simple = match ch {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ';' => Some(Tok::Semi),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push(Token { tok, line: tl, col: tc });
            i += 1;
            col += 1;
            continue;
        }
        if ch == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if ch.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if ch == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if ch.is_ascii_digit() || (ch == '.' && chars.get(i + 1).is_some_and(|c| c.is_ascii_digit())) {
            let start = i;
            let mut is_int = true;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                is_int = false;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    is_int = false;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let lexeme: String = chars[start..i].iter().collect();
            let imaginary = i < chars.len() && chars[i] == 'i' && !chars.get(i + 1).is_some_and(|c| c.is_alphanumeric() || *c == '_');
            let tok = if imaginary {
                i += 1;
                Tok::Num { value: parse_f64(&lexeme, tl, tc)?, imaginary: true }
            } else if is_int {
                match lexeme.parse::<u64>() {
                    Ok(v) => Tok::Int(v),
                    Err(_) => Tok::Num { value: parse_f64(&lexeme, tl, tc)?, imaginary: false },
                }
            } else {
                Tok::Num { value: parse_f64(&lexeme, tl, tc)?, imaginary: false }
            };
            col += i - start;
            out.push(Token { tok, line: tl, col: tc });
            continue;
        }
        if ch.is_alphabetic() || ch == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), line: tl, col: tc });
            continue;
        }
        return Err(ParseError::Syntax { line: tl, col: tc, msg: format!("unexpected character `{ch}`") });
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

fn parse_f64(s: &str, line: usize, col: usize) -> Result<f64, ParseError> {
    s.parse::<f64>().map_err(|_| ParseError::Syntax { line, col, msg: format!("malformed number `{s}`") })
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    vars: Vec<String>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, t: &Token, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax { line: t.line, col: t.col, msg: msg.into() })
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Token, ParseError> {
        let t = self.next();
        if t.tok == want {
            Ok(t)
        } else {
            self.err(&t, format!("expected {what}"))
        }
    }

    fn header(&mut self) -> Result<(), ParseError> {
        let t = self.next();
        if t.tok != Tok::Ident("vars".into()) {
            return self.err(&t, "expected `vars` header");
        }
        loop {
            let t = self.next();
            match t.tok {
                Tok::Ident(ref name) => {
                    if self.vars.contains(name) {
                        return self.err(&t, format!("variable `{name}` declared twice"));
                    }
                    self.vars.push(name.clone());
                }
                _ => return self.err(&t, "expected variable name"),
            }
            let sep = self.next();
            match sep.tok {
                Tok::Comma => continue,
                Tok::Semi => break,
                _ => return self.err(&sep, "expected `,` or `;` in header"),
            }
        }
        Ok(())
    }

    fn nvars(&self) -> usize {
        self.vars.len()
    }

    fn expr(&mut self) -> Result<Polynomial, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.next();
                    acc = &acc + &self.term()?;
                }
                Tok::Minus => {
                    self.next();
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.next();
                    acc = &acc * &self.unary()?;
                }
                Tok::Slash => {
                    let at = self.next();
                    let divisor = self.unary()?;
                    let c = match divisor.terms().next() {
                        None => return self.err(&at, "division by zero"),
                        Some((e, c)) if divisor.num_terms() == 1 && e.iter().all(|&k| k == 0) => *c,
                        Some(_) => return self.err(&at, "divisor must be a constant"),
                    };
                    acc = acc.scale(c.inv());
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Polynomial, ParseError> {
        match self.peek().tok {
            Tok::Minus => {
                self.next();
                Ok(-&self.unary()?)
            }
            Tok::Plus => {
                self.next();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Polynomial, ParseError> {
        let base = self.atom()?;
        if self.peek().tok != Tok::Caret {
            return Ok(base);
        }
        self.next();
        let t = self.next();
        let k = match t.tok {
            Tok::Int(k) => k,
            _ => return self.err(&t, "exponent must be a non-negative integer"),
        };
        let k = u32::try_from(k).map_err(|_| ParseError::ExponentOverflow { line: t.line, col: t.col })?;
        let max_exp = base.terms().flat_map(|(e, _)| e.iter().copied()).max().unwrap_or(0);
        if u64::from(max_exp) * u64::from(k) > u64::from(u32::MAX) {
            return Err(ParseError::ExponentOverflow { line: t.line, col: t.col });
        }
        Ok(base.pow(k))
    }

    fn atom(&mut self) -> Result<Polynomial, ParseError> {
        let t = self.next();
        let n = self.nvars();
        match t.tok {
            Tok::Int(v) => Ok(Polynomial::constant(n, Complex64::new(v as f64, 0.0))),
            Tok::Num { value, imaginary: false } => Ok(Polynomial::constant(n, Complex64::new(value, 0.0))),
            Tok::Num { value, imaginary: true } => Ok(Polynomial::constant(n, Complex64::new(0.0, value))),
            Tok::Ident(ref name) => {
                if let Some(j) = self.vars.iter().position(|v| v == name) {
                    Ok(Polynomial::variable(n, j))
                } else if name == "i" {
                    Ok(Polynomial::constant(n, Complex64::new(0.0, 1.0)))
                } else {
                    Err(ParseError::UndeclaredVariable { name: name.clone(), line: t.line, col: t.col })
                }
            }
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            _ => self.err(&t, "expected a number, variable or `(`"),
        }
    }
}

/// Parse a system from its text form into canonical sparse representation.
pub fn parse_system(text: &str) -> Result<PolySystem, ParseError> {
    let mut p = Parser { toks: lex(text)?, pos: 0, vars: Vec::new() };
    p.header()?;
    let mut polys = Vec::new();
    loop {
        match p.peek().tok {
            Tok::Eof => break,
            Tok::Semi => {
                let t = p.next();
                return p.err(&t, "empty polynomial");
            }
            _ => {}
        }
        polys.push(p.expr()?);
        let t = p.next();
        match t.tok {
            Tok::Semi => {}
            Tok::Eof => break,
            _ => return p.err(&t, "expected `;` or end of input"),
        }
    }
    let n = p.nvars();
    Ok(PolySystem::new(n, p.vars, polys).expect("parser builds polynomials in the declared ring"))
}
