//! Exact parser for Laurent-polynomial potentials.
//!
//! Grammar: rationals (`3`, `1/2`, `0.25`), the imaginary unit `i` (also as
//! a suffix, `2i`), variables `t`, `x` (same as `x1`) and `x1..xm`, the
//! operators `+ - * / ^` and parentheses. Exponents are integers, written
//! either directly (`x^-2`) or as a parenthesized integer expression.
//! Division is only allowed by a single monomial term.

use thiserror::Error;

use crate::exact::{parse_rational, GaussianRational, LaurentPoly};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at position {pos}: {msg}")]
pub struct PotentialParseError {
    pub pos: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Op(char),
}

fn lex(s: &str) -> Result<Vec<(usize, Tok)>, PotentialParseError> {
    let b: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_digit() || b[i] == '.') {
                i += 1;
            }
            out.push((start, Tok::Num(b[start..i].iter().collect())));
            if i < b.len() && b[i] == 'i' && !b.get(i + 1).is_some_and(|c| c.is_alphanumeric()) {
                out.push((i, Tok::Op('*')));
                out.push((i, Tok::Ident("i".into())));
                i += 1;
            }
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < b.len() && b[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push((start, Tok::Ident(b[start..i].iter().collect())));
        } else if "+-*/^()".contains(c) {
            out.push((i, Tok::Op(c)));
            i += 1;
        } else {
            return Err(PotentialParseError {
                pos: i,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    dim: usize,
}

impl Parser {
    fn nvars(&self) -> usize {
        self.dim + 1
    }

    fn at(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn err<T>(&self, pos: usize, msg: impl Into<String>) -> Result<T, PotentialParseError> {
        Err(PotentialParseError { pos, msg: msg.into() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<LaurentPoly, PotentialParseError> {
        let mut acc = self.product()?;
        loop {
            if self.eat('+') {
                acc = &acc + &self.product()?;
            } else if self.eat('-') {
                acc = &acc - &self.product()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> Result<LaurentPoly, PotentialParseError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = &acc * &self.unary()?;
            } else if self.peek() == Some(&Tok::Op('/')) {
                let at = self.at();
                self.pos += 1;
                let den = self.unary()?;
                match den.monomial_inverse() {
                    Some(inv) => acc = &acc * &inv,
                    None => return self.err(at, "division by a non-monomial"),
                }
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<LaurentPoly, PotentialParseError> {
        if self.eat('-') {
            Ok(-self.unary()?)
        } else if self.eat('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn exponent(&mut self) -> Result<i32, PotentialParseError> {
        let at = self.at();
        let neg = self.eat('-');
        let value: Option<i64> = match self.peek().cloned() {
            Some(Tok::Num(s)) => {
                self.pos += 1;
                s.parse::<i64>().ok()
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.sum()?;
                if !self.eat(')') {
                    return self.err(self.at(), "expected `)`");
                }
                e.as_constant()
                    .filter(|c| c.is_real() && c.re.is_integer())
                    .and_then(|c| c.re.to_integer().try_into().ok())
            }
            _ => None,
        };
        match value {
            Some(v) if v.abs() <= i32::MAX as i64 => Ok(if neg { -v } else { v } as i32),
            _ => self.err(at, "exponent must be an integer"),
        }
    }

    fn power(&mut self) -> Result<LaurentPoly, PotentialParseError> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Op('^')) {
            return Ok(base);
        }
        self.pos += 1;
        let at = self.at();
        let k = self.exponent()?;
        if k >= 0 {
            Ok(base.pow(k as u32))
        } else {
            match base.monomial_inverse() {
                Some(inv) => Ok(inv.pow((-k) as u32)),
                None => self.err(at, "negative power of a non-monomial"),
            }
        }
    }

    fn atom(&mut self) -> Result<LaurentPoly, PotentialParseError> {
        let at = self.at();
        let nv = self.nvars();
        match self.peek().cloned() {
            Some(Tok::Num(s)) => {
                self.pos += 1;
                match parse_rational(&s) {
                    Some(r) => Ok(LaurentPoly::constant(nv, GaussianRational::real(r))),
                    None => self.err(at, format!("bad number `{s}`")),
                }
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.sum()?;
                if !self.eat(')') {
                    return self.err(self.at(), "expected `)`");
                }
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                let slot = match name.as_str() {
                    "i" => return Ok(LaurentPoly::constant(nv, GaussianRational::i())),
                    "t" => 0,
                    "x" => 1,
                    _ => match name.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
                        Some(a) if a >= 1 && a <= self.dim => a,
                        Some(_) => return self.err(at, format!("`{name}` exceeds dimension {}", self.dim)),
                        None => return self.err(at, format!("unknown identifier `{name}`")),
                    },
                };
                Ok(LaurentPoly::var(nv, slot))
            }
            Some(Tok::Op(c)) => self.err(at, format!("unexpected `{c}`")),
            None => self.err(at, "unexpected end of input"),
        }
    }
}

/// Parse a potential in `(t, x_1..x_m)`.
pub fn parse_potential(text: &str, dim: usize) -> Result<LaurentPoly, PotentialParseError> {
    if dim == 0 {
        return Err(PotentialParseError {
            pos: 0,
            msg: "dimension must be at least 1".into(),
        });
    }
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        end: text.chars().count(),
        dim,
    };
    if p.toks.is_empty() {
        return p.err(0, "empty expression");
    }
    let e = p.sum()?;
    if p.pos != p.toks.len() {
        return p.err(p.at(), "trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{rat, Monomial};

    fn x_term(m: usize, e: Vec<i32>, num: i64, den: i64) -> LaurentPoly {
        LaurentPoly::term(m + 1, Monomial(e), GaussianRational::real(rat(num, den)))
    }

    #[test]
    fn inverse_square() {
        assert_eq!(parse_potential("2/x^2", 1).unwrap(), x_term(1, vec![0, -2], 2, 1));
        assert_eq!(parse_potential("2*x^-2", 1).unwrap(), x_term(1, vec![0, -2], 2, 1));
    }

    #[test]
    fn two_dimensional_sum() {
        let p = parse_potential("x1^2 + x2^2", 2).unwrap();
        let want = &x_term(2, vec![0, 2, 0], 1, 1) + &x_term(2, vec![0, 0, 2], 1, 1);
        assert_eq!(p, want);
    }

    #[test]
    fn fractional_exponent_rejected_at_exponent() {
        let e = parse_potential("x^(1/2)", 1).unwrap_err();
        assert_eq!(e.pos, 2);
    }

    #[test]
    fn non_monomial_division_rejected() {
        let e = parse_potential("1/(x + 1)", 1).unwrap_err();
        assert_eq!(e.pos, 1);
        assert!(e.msg.contains("non-monomial"));
        assert!(parse_potential("(x+1)^-1", 1).is_err());
    }

    #[test]
    fn decimals_and_imaginary() {
        let p = parse_potential("0.25*t + 3i", 1).unwrap();
        assert_eq!(p.to_string(), "(1/4)*t + 3i");
    }

    #[test]
    fn whitespace_insensitive() {
        assert_eq!(parse_potential(" 3 * x1 ^ 2 ", 1).unwrap(), parse_potential("3*x1^2", 1).unwrap());
    }

    #[test]
    fn dimension_checked() {
        assert!(parse_potential("x2", 1).is_err());
    }
}
