//! Form expressions: a small recursive-descent parser whose accepted language
//! includes everything `Form`'s `Display` prints.
//!
//! Precedence, loosest first: `+ -`, `* /`, unary `-`, `^`. Division needs a
//! single-term scalar divisor. Powers take an integer exponent and a negative
//! exponent needs an invertible base.

use num_bigint::BigInt;
use num_rational::BigRational;
use std::collections::BTreeSet;
use std::sync::Arc;
use supercocycle_core::eisenstein::EisKind;
use supercocycle_core::forms::{Form, ManifoldModel};
use supercocycle_core::grassmann::GrassmannRing;
use supercocycle_core::scalars::{Atom, Gauss, Scalar, ScalarRing};
use supercocycle_core::{Error, Result};

/// What identifiers resolve to besides the fixed symbol table.
#[derive(Clone, Debug)]
pub struct ExprContext {
    pub model: Arc<ManifoldModel>,
    pub gr: Arc<GrassmannRing>,
    /// Extra even formal symbols, parsed as `Scalar::sym`.
    pub symbols: BTreeSet<String>,
}

impl ExprContext {
    pub fn new(model: &Arc<ManifoldModel>) -> Self {
        ExprContext { model: model.clone(), gr: GrassmannRing::new(ScalarRing::Base, &[]), symbols: BTreeSet::new() }
    }
    pub fn with_ring(mut self, gr: &Arc<GrassmannRing>) -> Self {
        self.gr = gr.clone();
        self
    }
    pub fn with_symbols(mut self, names: &[&str]) -> Self {
        self.symbols.extend(names.iter().map(|s| s.to_string()));
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Sym(char),
}

fn tokenize(s: &str) -> Result<Vec<(usize, Tok)>> {
    let b = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            let mut digits = s[start..i].to_string();
            let mut scale = 0u32;
            if i + 1 < b.len() && b[i] == b'.' && b[i + 1].is_ascii_digit() {
                i += 1;
                let fs = i;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                digits.push_str(&s[fs..i]);
                scale = (i - fs) as u32;
            }
            let n: BigInt = digits.parse().expect("ascii digits");
            out.push((start, Tok::Num(BigRational::new(n, BigInt::from(10u32).pow(scale)))));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(s[start..i].to_string())));
        } else if "+-*/^(),".contains(c) {
            out.push((i, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(Error::ParseError { pos: i, expected: vec!["number".into(), "identifier".into(), "operator".into()] });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    ctx: &'a ExprContext,
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

fn expected(pos: usize, what: &[&str]) -> Error {
    Error::ParseError { pos, expected: what.iter().map(|s| s.to_string()).collect() }
}

fn eis(name: &str) -> Option<EisKind> {
    match name {
        "E2hol" => Some(EisKind::E2hol),
        "E4" => Some(EisKind::E4),
        "E6" => Some(EisKind::E6),
        _ => None,
    }
}

fn radicand(name: &str) -> Option<Atom> {
    match name {
        "ell" => Some(Atom::Ell),
        "vol" => Some(Atom::Vol),
        "v" => Some(Atom::V),
        "beta" => Some(Atom::Beta),
        _ => None,
    }
}

impl<'a> Parser<'a> {
    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|t| t.0).unwrap_or(self.end)
    }
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.1)
    }
    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.at += 1;
            true
        } else {
            false
        }
    }
    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(expected(self.pos(), &[&c.to_string()]))
        }
    }

    fn scalar(&self, c: Scalar) -> Form {
        Form::scalar(&self.ctx.model, &self.ctx.gr, c)
    }

    fn sum(&mut self) -> Result<Form> {
        let mut acc = self.product()?;
        loop {
            if self.eat('+') {
                acc = acc.checked_add(&self.product()?)?;
            } else if self.eat('-') {
                acc = acc.checked_add(&self.product()?.neg())?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> Result<Form> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = acc.checked_mul(&self.unary()?)?;
            } else if self.eat('/') {
                let d = self.unary()?;
                acc = acc.scale(&as_scalar(&d)?.inv()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Form> {
        if self.eat('-') {
            return Ok(self.unary()?.neg());
        }
        self.power()
    }

    fn power(&mut self) -> Result<Form> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let neg = self.eat('-');
        let pos = self.pos();
        let n = match self.peek() {
            Some(Tok::Num(r)) if r.is_integer() => {
                let n: i64 = r.to_integer().try_into().map_err(|_| expected(pos, &["small integer exponent"]))?;
                self.at += 1;
                n
            }
            _ => return Err(expected(pos, &["integer exponent"])),
        };
        let n = if neg { -n } else { n };
        if n < 0 {
            return Ok(self.scalar(as_scalar(&base)?.pow(n)?));
        }
        let mut acc = self.scalar(Scalar::one()).with_ring(base.ring)?;
        for _ in 0..n {
            acc = acc.checked_mul(&base)?;
        }
        Ok(acc)
    }

    fn call_arg(&mut self) -> Result<Form> {
        self.expect('(')?;
        let f = self.sum()?;
        self.expect(')')?;
        Ok(f)
    }

    fn atom(&mut self) -> Result<Form> {
        let pos = self.pos();
        let tok = self.peek().cloned();
        match tok {
            Some(Tok::Num(r)) => {
                self.at += 1;
                Ok(self.scalar(Scalar::constant(Gauss::from_rat(r))))
            }
            Some(Tok::Sym('(')) => self.call_arg(),
            Some(Tok::Ident(name)) => {
                self.at += 1;
                self.ident(&name, pos)
            }
            _ => Err(expected(pos, &["number", "identifier", "("])),
        }
    }

    fn ident(&mut self, name: &str, pos: usize) -> Result<Form> {
        let ctx = self.ctx;
        match name {
            "d" => return Ok(self.call_arg()?.d()),
            "exp" => {
                let arg = self.call_arg()?;
                return Ok(self.scalar(Scalar::exp_of(&as_scalar(&arg)?)));
            }
            "sqrt" => {
                let p = self.pos();
                self.expect('(')?;
                let inner = match self.peek() {
                    Some(Tok::Ident(n)) => radicand(n),
                    _ => None,
                };
                let a = inner.ok_or_else(|| expected(p + 1, &["ell", "vol", "v", "beta"]))?;
                self.at += 1;
                self.expect(')')?;
                return Ok(self.scalar(Scalar::atom_pow(a, 1)?));
            }
            _ => {}
        }
        let alias = match name {
            "lam" => "lambda",
            "lam1" => "lambda1",
            "lam2" => "lambda2",
            n => n,
        };
        if ctx.gr.index(alias).is_some() {
            return Form::grass(&ctx.model, &ctx.gr, alias);
        }
        if let Some(i) = ctx.model.index(name) {
            return Ok(Form::gen_in(&ctx.model, &ctx.gr, i));
        }
        if ctx.symbols.contains(name) {
            return Ok(self.scalar(Scalar::sym(name)));
        }
        let s = match name {
            "i" => Scalar::i(),
            "pi" => Scalar::pi(),
            "ell" => Scalar::ell(),
            "beta" => Scalar::beta(),
            "l1" => Scalar::l1(),
            "l2" => Scalar::l2(),
            "l1bar" => Scalar::l1bar(),
            "l2bar" => Scalar::l2bar(),
            "vol" => Scalar::vol(),
            "tau" => Scalar::tau(),
            "taubar" => Scalar::taubar(),
            "v" => Scalar::v(),
            "E2" => Scalar::e2(),
            n => {
                if let Some(k) = eis(n) {
                    Scalar::eis(k)
                } else if let Some(k) = n.strip_suffix("phi").and_then(eis) {
                    Scalar::atom(Atom::EisPhi(k))
                } else {
                    return Err(expected(pos, &["coordinate", "odd generator", "symbol"]));
                }
            }
        };
        Ok(self.scalar(s))
    }
}

/// The coefficient of a form that is a pure scalar (degree 0, no odd generators).
fn as_scalar(f: &Form) -> Result<Scalar> {
    if f.is_zero() {
        return Ok(Scalar::zero());
    }
    let one = f.model.one();
    match f.terms.iter().next() {
        Some(((0, m), c)) if f.terms.len() == 1 && *m == one => Ok(c.clone()),
        _ => Err(Error::NonMonomialDivision(f.to_string())),
    }
}

/// Parse `text` into a normalized form over the context's model and ring.
pub fn parse_form(text: &str, ctx: &ExprContext) -> Result<Form> {
    let toks = tokenize(text)?;
    let mut p = Parser { ctx, toks, at: 0, end: text.len() };
    if p.peek().is_none() {
        return Err(expected(0, &["expression"]));
    }
    let f = p.sum()?;
    if p.at != p.toks.len() {
        return Err(expected(p.pos(), &["+", "-", "*", "/", "^", "end of input"]));
    }
    Ok(f)
}

/// Parse an expression that must reduce to a scalar.
pub fn parse_scalar(text: &str, ctx: &ExprContext) -> Result<Scalar> {
    let f = parse_form(text, ctx)?;
    as_scalar(&f).map_err(|_| Error::ValidationError(format!("'{text}' is not a scalar")))
}

/// Printed normal form; the inverse of [`parse_form`] on normal forms.
pub fn print_form(f: &Form) -> String {
    f.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_carry_positions() {
        let t = tokenize("x1 + 2.5").unwrap();
        assert_eq!(t[1], (3, Tok::Sym('+')));
        assert_eq!(t[2].1, Tok::Num(BigRational::new(5.into(), 2.into())));
        assert!(matches!(tokenize("x1 # 2"), Err(Error::ParseError { pos: 3, .. })));
    }
}
