//! Parser for the textual symbol notation used in configuration files.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/' | <juxtaposition>) unary)*
//! unary  := ('+' | '-') unary | power
//! power  := atom ('^' uint)?
//! atom   := number | number 'i' | 'i' | variable | 'sqrt' '(' expr ')' | '(' expr ')'
//! ```
//!
//! Variables are `q1 p1` (RealQP), `a1 a1bar` (ComplexAAbar, `abar1` is also
//! accepted) and `xq1 xp1 yq1 yp1` (DoubledXY). Division and `sqrt` only
//! accept constant operands.

use num_complex::Complex64;

use super::{Chart, PolySymbol};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i] as char;
        let start = i;
        match ch {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '+' => out.push((start, Tok::Plus)),
            '-' => out.push((start, Tok::Minus)),
            '*' => out.push((start, Tok::Star)),
            '/' => out.push((start, Tok::Slash)),
            '^' => out.push((start, Tok::Caret)),
            '(' => out.push((start, Tok::LParen)),
            ')' => out.push((start, Tok::RParen)),
            c if c.is_ascii_digit() || c == '.' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_digit() || bytes[j] == b'.') {
                    j += 1;
                }
                // exponent part, only when followed by digits
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        while k < bytes.len() && bytes[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let value: f64 = text[i..j].parse().map_err(|_| Error::Parse {
                    pos: start,
                    msg: format!("invalid number '{}'", &text[i..j]),
                })?;
                let imaginary = j < bytes.len()
                    && bytes[j] == b'i'
                    && !(j + 1 < bytes.len() && (bytes[j + 1] as char).is_ascii_alphanumeric());
                if imaginary {
                    out.push((start, Tok::Imag(value)));
                    i = j + 1;
                } else {
                    out.push((start, Tok::Num(value)));
                    i = j;
                }
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < bytes.len() && ((bytes[j] as char).is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                out.push((start, Tok::Ident(text[i..j].to_string())));
                i = j;
                continue;
            }
            other => {
                return Err(Error::Parse {
                    pos: start,
                    msg: format!("unexpected character '{other}'"),
                })
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    chart: Chart,
    n: usize,
    text: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.text.len(), |(p, _)| *p)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.offset(),
            msg: msg.into(),
        })
    }

    fn expr(&mut self) -> Result<PolySymbol> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<PolySymbol> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = &acc * &self.unary()?;
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let d = self.unary()?;
                    let c = self.constant_value(&d, "divisor")?;
                    if c.norm() == 0.0 {
                        return self.err("division by zero");
                    }
                    acc = acc.scale(c.inv());
                }
                Some(Tok::Num(_) | Tok::Imag(_) | Tok::Ident(_) | Tok::LParen) => {
                    acc = &acc * &self.unary()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<PolySymbol> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<PolySymbol> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            match self.peek() {
                Some(&Tok::Num(k)) if k >= 0.0 && k.fract() == 0.0 && k <= u16::MAX as f64 => {
                    self.pos += 1;
                    Ok(base.pow(k as u32))
                }
                _ => self.err("exponent must be a non-negative integer"),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<PolySymbol> {
        let (chart, n) = (self.chart, self.n);
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => return self.err("unexpected end of input"),
        };
        match tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(PolySymbol::constant(chart, n, v))
            }
            Tok::Imag(v) => {
                self.pos += 1;
                Ok(PolySymbol::constant(chart, n, Complex64::new(0.0, v)))
            }
            Tok::LParen => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.err("expected ')'");
                }
                self.pos += 1;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.pos += 1;
                if name == "i" {
                    return Ok(PolySymbol::constant(chart, n, Complex64::new(0.0, 1.0)));
                }
                if name == "sqrt" {
                    if self.peek() != Some(&Tok::LParen) {
                        return self.err("expected '(' after sqrt");
                    }
                    let arg = self.atom()?;
                    let c = self.constant_value(&arg, "sqrt argument")?;
                    return Ok(PolySymbol::constant(chart, n, c.sqrt()));
                }
                match variable_index(&name, chart, n) {
                    Some(v) => Ok(PolySymbol::variable(chart, n, v)),
                    None => {
                        self.pos -= 1;
                        self.err(format!("unknown variable '{name}' for chart {chart:?} with {n} mode(s)"))
                    }
                }
            }
            other => self.err(format!("unexpected token {other:?}")),
        }
    }

    fn constant_value(&self, s: &PolySymbol, what: &str) -> Result<Complex64> {
        if s.degree() > 0 {
            return self.err(format!("{what} must be a constant"));
        }
        Ok(s.coefficient(&vec![0; s.dim()]))
    }
}

fn variable_index(name: &str, chart: Chart, n: usize) -> Option<usize> {
    let split = |prefix: &str, suffix: &str| -> Option<usize> {
        let rest = name.strip_prefix(prefix)?.strip_suffix(suffix)?;
        if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let k: usize = rest.parse().ok()?;
        (1..=n).contains(&k).then_some(k - 1)
    };
    match chart {
        Chart::RealQP => split("q", "")
            .or_else(|| split("p", "").map(|k| k + n)),
        Chart::ComplexAAbar => split("a", "bar")
            .or_else(|| split("abar", ""))
            .map(|k| k + n)
            .or_else(|| split("a", "")),
        Chart::DoubledXY => split("xq", "")
            .or_else(|| split("xp", "").map(|k| k + n))
            .or_else(|| split("yq", "").map(|k| k + 2 * n))
            .or_else(|| split("yp", "").map(|k| k + 3 * n)),
    }
}

/// Parses a symbol written in the textual notation.
pub fn parse_symbol(text: &str, chart: Chart, num_modes: usize) -> Result<PolySymbol> {
    if num_modes == 0 {
        return Err(Error::Parse {
            pos: 0,
            msg: "number of modes must be positive".into(),
        });
    }
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(Error::Parse {
            pos: 0,
            msg: "empty expression".into(),
        });
    }
    let mut p = Parser {
        toks,
        pos: 0,
        chart,
        n: num_modes,
        text,
    };
    let s = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(s)
}
