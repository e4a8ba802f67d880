//! A small expression language for test fields.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary ('*' unary)*
//! unary   := '-' unary | factor
//! factor  := atom ('^' uint)?
//! atom    := number | number 'i' | '(' number ('+'|'-') number 'i' ')' | var | '(' expr ')'
//! var     := 'z' digit? | 'zbar' digit? | 'z' digit 'bar'
//! ```
//!
//! Variables without a digit refer to the first factor.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::geometry::{DiskDomain, PolydiscDomain};
use crate::operators::{OperatorError, PolydiscField, ScalarField, DEFAULT_ALPHA};
use crate::oracle::PolynomialField;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("unknown variable {name:?} at offset {offset} (domain has {factors} factor(s))")]
    UnknownVariable {
        name: String,
        offset: usize,
        factors: usize,
    },
    #[error("expression {0:?} is not constant")]
    NotConstant(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

fn parse_err(offset: usize, message: impl Into<String>) -> ExprError {
    ExprError::Parse {
        offset,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Complex64),
    /// `factor` is zero-based; `conj` selects `z̄`.
    Var {
        factor: usize,
        conj: bool,
    },
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Var { factor: usize, conj: bool },
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn lex(text: &str, factors: usize) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i];
        let start = i;
        match ch {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => out.push((Tok::Plus, i)),
            b'-' => out.push((Tok::Minus, i)),
            b'*' => out.push((Tok::Star, i)),
            b'^' => out.push((Tok::Caret, i)),
            b'(' => out.push((Tok::LParen, i)),
            b')' => out.push((Tok::RParen, i)),
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
                let v: f64 = text[start..i].parse().map_err(|_| {
                    parse_err(start, format!("malformed number {:?}", &text[start..i]))
                })?;
                if !v.is_finite() {
                    return Err(parse_err(start, "number out of range"));
                }
                if i < bytes.len() && bytes[i] == b'i' {
                    out.push((Tok::Imag(v), start));
                    i += 1;
                } else {
                    out.push((Tok::Num(v), start));
                }
                continue;
            }
            b'a'..=b'z' | b'A'..=b'Z' => {
                while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                let word = &text[start..i];
                let var = parse_var(word)
                    .ok_or_else(|| parse_err(start, format!("unexpected identifier {word:?}")))?;
                let (index, conj) = var;
                if index == 0 || index > factors {
                    return Err(ExprError::UnknownVariable {
                        name: word.to_string(),
                        offset: start,
                        factors,
                    });
                }
                out.push((
                    Tok::Var {
                        factor: index - 1,
                        conj,
                    },
                    start,
                ));
                continue;
            }
            _ => {
                return Err(parse_err(
                    i,
                    format!(
                        "unexpected character {:?}",
                        text[i..].chars().next().unwrap()
                    ),
                ))
            }
        }
        i += 1;
    }
    Ok(out)
}

/// `(1-based index, conj)`; an absent digit means index 1.
fn parse_var(word: &str) -> Option<(usize, bool)> {
    let rest = word.strip_prefix('z')?;
    let digit = |s: &str| -> Option<usize> {
        match s.as_bytes() {
            [] => Some(1),
            [d] if d.is_ascii_digit() => Some((d - b'0') as usize),
            _ => None,
        }
    };
    if let Some(tail) = rest.strip_prefix("bar") {
        return digit(tail).map(|k| (k, true));
    }
    if let Some(head) = rest.strip_suffix("bar") {
        if !head.is_empty() {
            return digit(head).map(|k| (k, true));
        }
    }
    digit(rest).map(|k| (k, false))
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.1)
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::Star) {
            self.pos += 1;
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let at = self.offset();
            match self.peek() {
                Some(&Tok::Num(v)) if v.fract() == 0.0 && v >= 0.0 && v <= u32::MAX as f64 => {
                    self.pos += 1;
                    return Ok(Expr::Pow(Box::new(base), v as u32));
                }
                _ => return Err(parse_err(at, "expected a non-negative integer exponent")),
            }
        }
        Ok(base)
    }

    /// Folds `( number ± number i )` into one literal.
    fn complex_literal(&mut self) -> Option<Expr> {
        let t = &self.toks[self.pos..];
        if let [(Tok::LParen, _), (Tok::Num(re), _), (sign, _), (Tok::Imag(im), _), (Tok::RParen, _), ..] =
            t
        {
            let im = match sign {
                Tok::Plus => *im,
                Tok::Minus => -*im,
                _ => return None,
            };
            let e = Expr::Const(Complex64::new(*re, im));
            self.pos += 5;
            return Some(e);
        }
        None
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let at = self.offset();
        if let Some(e) = self.complex_literal() {
            return Ok(e);
        }
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Const(Complex64::new(v, 0.0)))
            }
            Some(Tok::Imag(v)) => {
                self.pos += 1;
                Ok(Expr::Const(Complex64::new(0.0, v)))
            }
            Some(Tok::Var { factor, conj }) => {
                self.pos += 1;
                Ok(Expr::Var { factor, conj })
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(parse_err(self.offset(), "expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(_) => Err(parse_err(at, "expected a number, variable or '('")),
            None => Err(parse_err(at, "unexpected end of input")),
        }
    }
}

/// Parses `text` for a domain with `factors` complex variables.
pub fn parse_expression(text: &str, factors: usize) -> Result<Expr, ExprError> {
    let toks = lex(text, factors)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(parse_err(p.offset(), "unexpected trailing input"));
    }
    Ok(e)
}

/// Parses a constant such as `0.5`, `-1+2i` or `(0.3-0.1i)`.
pub fn parse_complex_literal(text: &str) -> Result<Complex64, ExprError> {
    let e = parse_expression(text, 0)?;
    Ok(e.eval(&[]))
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ConstForm {
    /// Printed as `x`.
    Real,
    /// Printed as `yi`.
    Imag,
    /// Printed as `(x±yi)`.
    Folded,
}

fn const_form(c: Complex64) -> ConstForm {
    let nonneg = |v: f64| v >= 0.0 && !v.is_sign_negative();
    if c.im == 0.0 && nonneg(c.re) {
        ConstForm::Real
    } else if c.re == 0.0 && !c.re.is_sign_negative() && nonneg(c.im) {
        ConstForm::Imag
    } else {
        ConstForm::Folded
    }
}

impl Expr {
    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var { factor, conj } => {
                let v = z[*factor];
                if *conj {
                    v.conj()
                } else {
                    v
                }
            }
            Expr::Neg(a) => -a.eval(z),
            Expr::Add(a, b) => a.eval(z) + b.eval(z),
            Expr::Sub(a, b) => a.eval(z) - b.eval(z),
            Expr::Mul(a, b) => a.eval(z) * b.eval(z),
            Expr::Pow(a, k) => a.eval(z).powu(*k),
        }
    }

    /// Largest factor index used, plus one.
    pub fn factors_used(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var { factor, .. } => factor + 1,
            Expr::Neg(a) | Expr::Pow(a, _) => a.factors_used(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.factors_used().max(b.factors_used())
            }
        }
    }

    /// Exact polynomial form for single-variable expressions within the
    /// degree cap.
    pub fn to_polynomial(&self) -> Option<PolynomialField> {
        if self.factors_used() > 1 {
            return None;
        }
        Some(match self {
            Expr::Const(c) => PolynomialField::constant(*c),
            Expr::Var { conj, .. } => {
                let (p, q) = if *conj { (0, 1) } else { (1, 0) };
                PolynomialField::monomial(p, q, Complex64::new(1.0, 0.0)).ok()?
            }
            Expr::Neg(a) => -a.to_polynomial()?,
            Expr::Add(a, b) => a.to_polynomial()? + b.to_polynomial()?,
            Expr::Sub(a, b) => a.to_polynomial()? - b.to_polynomial()?,
            Expr::Mul(a, b) => a.to_polynomial()?.try_mul(&b.to_polynomial()?).ok()?,
            Expr::Pow(a, k) => a.to_polynomial()?.try_pow(*k).ok()?,
        })
    }

    /// Field on a disk; polynomial expressions keep their exact form.
    pub fn to_scalar_field(
        &self,
        domain: DiskDomain,
        description: &str,
    ) -> Result<ScalarField, ExprError> {
        if self.factors_used() > 1 {
            return Err(ExprError::UnknownVariable {
                name: format!("z{}", self.factors_used()),
                offset: 0,
                factors: 1,
            });
        }
        if let Some(p) = self.to_polynomial() {
            return Ok(ScalarField::from_polynomial(domain, p).with_description(description));
        }
        let e = self.clone();
        Ok(ScalarField::new(
            domain,
            DEFAULT_ALPHA,
            description,
            move |z| e.eval(&[z]),
        )?)
    }

    pub fn to_polydisc_field(
        &self,
        domain: PolydiscDomain,
        description: &str,
    ) -> Result<PolydiscField, ExprError> {
        if self.factors_used() > domain.factors() {
            return Err(ExprError::UnknownVariable {
                name: format!("z{}", self.factors_used()),
                offset: 0,
                factors: domain.factors(),
            });
        }
        let e = self.clone();
        Ok(PolydiscField::new(
            domain,
            DEFAULT_ALPHA,
            description,
            move |z| e.eval(z),
        )?)
    }

    fn prec(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 0,
            Expr::Mul(..) => 1,
            Expr::Neg(_) => 2,
            Expr::Pow(..) => 3,
            Expr::Const(_) | Expr::Var { .. } => 4,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.prec() < min {
            write!(f, "(")?;
            self.write_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Const(c) => match const_form(*c) {
                ConstForm::Real => write!(f, "{}", fmt_f64(c.re)),
                ConstForm::Imag => write!(f, "{}i", fmt_f64(c.im)),
                ConstForm::Folded => {
                    let sign = if c.im.is_sign_negative() { '-' } else { '+' };
                    write!(f, "({}{}{}i)", fmt_f64(c.re), sign, fmt_f64(c.im.abs()))
                }
            },
            Expr::Var { factor, conj } => {
                let bar = if *conj { "bar" } else { "" };
                if *factor == 0 {
                    write!(f, "z{bar}")
                } else {
                    write!(f, "z{}{bar}", factor + 1)
                }
            }
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.write_at(f, 2)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                // `x ± yi` inside parentheses would read back as one folded literal
                let literal_like = matches!(**a, Expr::Const(x) if const_form(x) == ConstForm::Real)
                    && matches!(**b, Expr::Const(y) if const_form(y) == ConstForm::Imag);
                if literal_like {
                    write!(f, "(")?;
                    a.write_at(f, 0)?;
                    write!(f, ")")?;
                } else {
                    a.write_at(f, 0)?;
                }
                write!(
                    f,
                    "{}",
                    if matches!(self, Expr::Add(..)) {
                        "+"
                    } else {
                        "-"
                    }
                )?;
                b.write_at(f, 1)
            }
            Expr::Mul(a, b) => {
                a.write_at(f, 1)?;
                write!(f, "*")?;
                b.write_at(f, 2)
            }
            Expr::Pow(a, k) => {
                a.write_at(f, 4)?;
                write!(f, "^{k}")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn polynomial_routing() {
        let e = parse_expression("1+2i*z*zbar^2", 1).unwrap();
        let p = e.to_polynomial().unwrap();
        assert_eq!(p.coeff(1, 2), c(0.0, 2.0));
        assert_eq!(p.coeff(0, 0), c(1.0, 0.0));
        assert_eq!(p.terms().count(), 2);
        assert!(parse_expression("z^9", 1)
            .unwrap()
            .to_polynomial()
            .is_none());
        let f = parse_expression("z^9", 1)
            .unwrap()
            .to_scalar_field(DiskDomain::unit(), "z^9")
            .unwrap();
        assert!(f.polynomial().is_none());
        assert!((f.eval(c(0.5, 0.0)) - c(0.5f64.powi(9), 0.0)).norm() < 1e-16);
    }

    #[test]
    fn bivariate_and_variable_spellings() {
        let e = parse_expression("z1*z2bar", 2).unwrap();
        let z = [c(0.3, 0.1), c(-0.2, 0.5)];
        assert_eq!(e.eval(&z), z[0] * z[1].conj());
        for s in ["zbar2", "z2bar"] {
            assert_eq!(
                parse_expression(s, 2).unwrap(),
                Expr::Var {
                    factor: 1,
                    conj: true
                }
            );
        }
        assert_eq!(
            parse_expression("z1", 1).unwrap(),
            parse_expression("z", 1).unwrap()
        );
        assert!(matches!(
            parse_expression("z2", 1),
            Err(ExprError::UnknownVariable { offset: 0, .. })
        ));
        assert!(matches!(
            parse_expression("z0", 3),
            Err(ExprError::UnknownVariable { .. })
        ));
        let dom = PolydiscDomain::new(2, 1.0).unwrap();
        let f = e.to_polydisc_field(dom, "z1*z2bar").unwrap();
        assert_eq!(f.eval(&z), z[0] * z[1].conj());
    }

    #[test]
    fn parse_errors() {
        assert_eq!(
            parse_expression("z^^2", 1).unwrap_err(),
            ExprError::Parse {
                offset: 2,
                message: "expected a non-negative integer exponent".into()
            }
        );
        assert!(matches!(
            parse_expression("(z+1", 1),
            Err(ExprError::Parse { offset: 4, .. })
        ));
        assert!(matches!(
            parse_expression("z+", 1),
            Err(ExprError::Parse { offset: 2, .. })
        ));
        assert!(matches!(
            parse_expression("2j", 1),
            Err(ExprError::Parse { offset: 1, .. })
        ));
        assert!(matches!(
            parse_expression("z^1.5", 1),
            Err(ExprError::Parse { offset: 2, .. })
        ));
        assert!(matches!(
            parse_expression("1e999", 1),
            Err(ExprError::Parse { .. })
        ));
        assert!(matches!(
            parse_expression("z z", 1),
            Err(ExprError::Parse { offset: 2, .. })
        ));
        assert!(matches!(
            parse_expression("sin", 1),
            Err(ExprError::Parse { offset: 0, .. })
        ));
    }

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex_literal("0.5").unwrap(), c(0.5, 0.0));
        assert_eq!(parse_complex_literal("-0.5").unwrap(), c(-0.5, 0.0));
        assert_eq!(parse_complex_literal("1-2i").unwrap(), c(1.0, -2.0));
        assert_eq!(parse_complex_literal("(0.3-0.1i)").unwrap(), c(0.3, -0.1));
        assert_eq!(parse_complex_literal("1e-3i").unwrap(), c(0.0, 1e-3));
        assert!(parse_complex_literal("z").is_err());
        assert_eq!(
            parse_expression("(1+2i)", 1).unwrap(),
            Expr::Const(c(1.0, 2.0))
        );
        assert_eq!(
            parse_expression("(1+2i)*z", 1).unwrap(),
            Expr::Mul(
                Box::new(Expr::Const(c(1.0, 2.0))),
                Box::new(Expr::Var {
                    factor: 0,
                    conj: false
                })
            )
        );
    }

    #[test]
    fn printing_round_trips() {
        for s in [
            "1+2i*z*zbar^2",
            "-z^2",
            "(z+1)*(zbar-0.5)",
            "z-(zbar-z)",
            "(0-2i)*z2bar^3",
            "(-z)^2",
            "--z",
            "z*-zbar",
            "(z^2)^3",
            "0.001+1e-7i",
            "(0-1.5i)*z",
            "(0+(0-1.5i)*0)",
            "(1+2i)+z",
        ] {
            let e = parse_expression(s, 2).unwrap();
            let printed = e.to_string();
            assert_eq!(
                parse_expression(&printed, 2).unwrap(),
                e,
                "{s} -> {printed}"
            );
        }
        let sub = Expr::Sub(
            Box::new(Expr::Const(c(0.0, 0.0))),
            Box::new(Expr::Const(c(0.0, 1.5))),
        );
        let prod = Expr::Mul(
            Box::new(sub),
            Box::new(Expr::Var {
                factor: 0,
                conj: false,
            }),
        );
        assert_eq!(prod.to_string(), "((0)-1.5i)*z");
        assert_eq!(parse_expression(&prod.to_string(), 1).unwrap(), prod);
    }
}
