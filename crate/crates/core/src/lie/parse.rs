//! Recursive-descent parser for catalog expressions.
//!
//! Grammar: `+ - * / ^`, parentheses, numbers, the constant `i`, `pi`,
//! coordinates `t`, `x1..xm` (`x` is `x1`), `r2 = Σ x_a²`, `m`, `psi`,
//! `psic`, `rho`, `phi`, the functions `exp log sin cos sqrt abs re im`,
//! parameters, `theta`, `eta0` and opaque function names.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::expr::{self as ex, FieldKind, Var, E};
use super::LieError;

/// Names and bindings visible to the parser.
#[derive(Debug, Clone, Default)]
pub struct Scope {
    pub dim: usize,
    pub params: BTreeMap<String, Complex64>,
    pub opaque: Vec<String>,
    pub theta: Option<E>,
}

impl Scope {
    pub fn new(dim: usize) -> Self {
        Scope {
            dim,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn lex(s: &str) -> Result<Vec<(usize, Tok)>, LieError> {
    let b: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let ch = b[i];
        if ch.is_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_digit() || b[i] == '.') {
                i += 1;
            }
            if i < b.len() && (b[i] == 'e' || b[i] == 'E') {
                let save = i;
                i += 1;
                if i < b.len() && (b[i] == '+' || b[i] == '-') {
                    i += 1;
                }
                if i < b.len() && b[i].is_ascii_digit() {
                    while i < b.len() && b[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let text: String = b[start..i].iter().collect();
            let v = text.parse::<f64>().map_err(|_| LieError::Parse {
                pos: start,
                msg: format!("bad number `{text}`"),
            })?;
            out.push((start, Tok::Num(v)));
        } else if ch.is_alphabetic() || ch == '_' {
            let start = i;
            while i < b.len() && (b[i].is_alphanumeric() || b[i] == '_') {
                i += 1;
            }
            out.push((start, Tok::Ident(b[start..i].iter().collect())));
        } else if "+-*/^(),".contains(ch) {
            out.push((i, Tok::Op(ch)));
            i += 1;
        } else {
            return Err(LieError::Parse {
                pos: i,
                msg: format!("unexpected character `{ch}`"),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    scope: &'a Scope,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn at(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, LieError> {
        Err(LieError::Parse {
            pos: self.at(),
            msg: msg.into(),
        })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), LieError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn sum(&mut self) -> Result<E, LieError> {
        let mut acc = self.product()?;
        loop {
            if self.eat('+') {
                acc = ex::add(acc, self.product()?);
            } else if self.eat('-') {
                acc = ex::sub(acc, self.product()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> Result<E, LieError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = ex::mul(acc, self.unary()?);
            } else if self.eat('/') {
                acc = ex::div(acc, self.unary()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<E, LieError> {
        if self.eat('-') {
            Ok(ex::neg(self.unary()?))
        } else if self.eat('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<E, LieError> {
        let base = self.atom()?;
        if self.eat('^') {
            let e = self.unary()?;
            match &*e {
                ex::Expr::Const(z) if z.im == 0.0 => Ok(ex::pow(base, z.re)),
                _ => Err(LieError::NonConstantExponent(e.to_string())),
            }
        } else {
            Ok(base)
        }
    }

    fn args(&mut self) -> Result<Vec<E>, LieError> {
        self.expect('(')?;
        let mut v = vec![self.sum()?];
        while self.eat(',') {
            v.push(self.sum()?);
        }
        self.expect(')')?;
        Ok(v)
    }

    fn one_arg(&mut self, name: &str) -> Result<E, LieError> {
        let a = self.args()?;
        if a.len() != 1 {
            return self.err(format!("`{name}` takes one argument"));
        }
        Ok(a.into_iter().next().unwrap())
    }

    fn atom(&mut self) -> Result<E, LieError> {
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => return self.err("unexpected end of input"),
        };
        match tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(ex::real(v))
            }
            Tok::Op('(') => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Op(c) => self.err(format!("unexpected `{c}`")),
            Tok::Ident(name) => {
                self.pos += 1;
                self.ident(&name)
            }
        }
    }

    fn ident(&mut self, name: &str) -> Result<E, LieError> {
        let followed_by_paren = self.peek() == Some(&Tok::Op('('));
        if followed_by_paren {
            let unary: Option<fn(E) -> E> = match name {
                "exp" => Some(ex::exp),
                "log" | "ln" => Some(ex::log),
                "sin" => Some(ex::sin),
                "cos" => Some(ex::cos),
                "abs" => Some(ex::abs),
                "re" => Some(ex::re),
                "im" => Some(ex::im),
                "sqrt" => Some(|e| ex::pow(e, 0.5)),
                _ => None,
            };
            if let Some(f) = unary {
                let a = self.one_arg(name)?;
                return Ok(f(a));
            }
            if self.scope.opaque.iter().any(|o| o == name) {
                let a = self.args()?;
                return Ok(ex::func(name, a));
            }
        }
        let dim = self.scope.dim;
        let e = match name {
            "i" => ex::konst(Complex64::new(0.0, 1.0)),
            "pi" => ex::real(std::f64::consts::PI),
            "t" => ex::var(Var::T),
            "x" => ex::var(Var::X(1)),
            "m" | "n" => ex::real(dim as f64),
            "psi" => ex::var(Var::Psi),
            "psic" => ex::var(Var::PsiC),
            "rho" => ex::rho(),
            "phi" => ex::phase(),
            "r2" => (1..=dim).fold(ex::real(0.0), |acc, a| {
                ex::add(acc, ex::pow(ex::var(Var::X(a)), 2.0))
            }),
            "eta0" => ex::field(FieldKind::Eta0, dim + 1),
            "theta" => match &self.scope.theta {
                Some(t) => t.clone(),
                None => return Err(LieError::UnknownIdentifier(name.into())),
            },
            _ => {
                if let Some(z) = self.scope.params.get(name) {
                    ex::konst(*z)
                } else if let Some(a) = name.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
                    if a == 0 || a > dim {
                        return Err(LieError::Dimension(a));
                    }
                    ex::var(Var::X(a))
                } else {
                    return Err(LieError::UnknownIdentifier(name.into()));
                }
            }
        };
        Ok(e)
    }
}

/// Parse `s` in the given scope. Parameters are folded to constants.
pub fn parse_expr(s: &str, scope: &Scope) -> Result<E, LieError> {
    let toks = lex(s)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: s.chars().count(),
        scope,
    };
    let e = p.sum()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(e)
}

/// Parse an expression that must reduce to a constant.
pub fn parse_constant(s: &str, scope: &Scope) -> Result<Complex64, LieError> {
    let e = parse_expr(s, scope)?;
    match &*e {
        ex::Expr::Const(z) => Ok(*z),
        _ => Err(LieError::Catalog(format!("`{s}` is not constant"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scope() -> Scope {
        let mut s = Scope::new(2);
        s.params.insert("gamma".into(), Complex64::new(1.5, 0.0));
        s.opaque.push("f".into());
        s
    }

    #[test]
    fn constants_fold() {
        let z = parse_constant("2*gamma^2 - 1/2 + i", &scope()).unwrap();
        assert_eq!(z, Complex64::new(4.0, 1.0));
        assert_eq!(parse_constant("-2^2", &scope()).unwrap(), Complex64::new(-4.0, 0.0));
        assert_eq!(parse_constant("4/m", &scope()).unwrap(), Complex64::new(2.0, 0.0));
    }

    #[test]
    fn exponent_must_be_constant() {
        assert!(matches!(
            parse_expr("rho^psi", &scope()),
            Err(LieError::NonConstantExponent(_))
        ));
    }

    #[test]
    fn errors_carry_position() {
        match parse_expr("psi + * 2", &scope()) {
            Err(LieError::Parse { pos, .. }) => assert_eq!(pos, 6),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_expr("x3", &scope()), Err(LieError::Dimension(3))));
        assert!(matches!(parse_expr("g(psi)", &scope()), Err(LieError::UnknownIdentifier(_))));
    }

    #[test]
    fn opaque_call() {
        let e = parse_expr("f(rho)*psi", &scope()).unwrap();
        assert!(e.to_string().starts_with("f("));
    }
}
