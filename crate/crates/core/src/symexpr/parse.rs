//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' integer)*
//! primary := number | 'x' digits | func '(' expr ')' | '(' expr ')'
//! func    := 'sin' | 'cos' | 'exp'
//! number  := digits ('.' digits?)? (('e' | 'E') ('+' | '-')? digits)?
//! integer := digits            (value must fit in u32)
//! ```

use super::{Expr, ParseError, ParseErrorKind, ScalarField};

/// Parses `source` as a scalar field on R^`dimension`.
pub fn parse(source: &str, dimension: usize) -> Result<ScalarField, ParseError> {
    let expr = parse_expr(source, dimension)?;
    Ok(ScalarField::new_unchecked(dimension, expr))
}

/// Parses without wrapping; variables must still lie in `1..=dimension`.
pub fn parse_expr(source: &str, dimension: usize) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: source.as_bytes(),
        pos: 0,
        dim: dimension,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err(ParseErrorKind::Unexpected(p.src[p.pos] as char)));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
}

impl Parser<'_> {
    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            position: self.pos,
            kind,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        match self.peek() {
            Some(got) if got == c => {
                self.pos += 1;
                Ok(())
            }
            Some(got) => Err(self.err(ParseErrorKind::Expected(c as char, Some(got as char)))),
            None => Err(self.err(ParseErrorKind::Expected(c as char, None))),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = match lhs {
                        Expr::Add(mut xs) => {
                            xs.push(rhs);
                            Expr::Add(xs)
                        }
                        other => Expr::add(other, rhs),
                    };
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::sub(lhs, rhs);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    lhs = match lhs {
                        Expr::Mul(mut xs) => {
                            xs.push(rhs);
                            Expr::Mul(xs)
                        }
                        other => Expr::mul(other, rhs),
                    };
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    lhs = Expr::div(lhs, rhs);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::neg(self.unary()?))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let mut base = self.primary()?;
        while self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            let value = self.number_literal()?;
            if value.fract() != 0.0 || value < 0.0 || value > u32::MAX as f64 {
                return Err(ParseError {
                    position: start,
                    kind: ParseErrorKind::NonIntegerExponent(value),
                });
            }
            base = Expr::pow(base, value as u32);
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.err(ParseErrorKind::UnexpectedEnd)),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(Expr::Const(self.number_literal()?)),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let ident = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
                match ident {
                    "sin" | "cos" | "exp" => {
                        self.expect(b'(')?;
                        let arg = Box::new(self.expr()?);
                        self.expect(b')')?;
                        Ok(match ident {
                            "sin" => Expr::Sin(arg),
                            "cos" => Expr::Cos(arg),
                            _ => Expr::Exp(arg),
                        })
                    }
                    _ => {
                        let index = ident
                            .strip_prefix('x')
                            .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
                            .and_then(|d| d.parse::<usize>().ok());
                        match index {
                            Some(i) if (1..=self.dim).contains(&i) => Ok(Expr::Var(i)),
                            Some(i) => Err(ParseError {
                                position: start,
                                kind: ParseErrorKind::UnknownVariable(i),
                            }),
                            None => Err(ParseError {
                                position: start,
                                kind: ParseErrorKind::UnknownIdentifier(ident.to_string()),
                            }),
                        }
                    }
                }
            }
            Some(c) => Err(self.err(ParseErrorKind::Unexpected(c as char))),
        }
    }

    fn number_literal(&mut self) -> Result<f64, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            self.pos = start;
            return Err(self.err(ParseErrorKind::ExpectedNumber));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        text.parse::<f64>().map_err(|_| ParseError {
            position: start,
            kind: ParseErrorKind::ExpectedNumber,
        })
    }
}
