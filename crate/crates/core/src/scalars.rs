//! Coefficient rings: Laurent polynomials over the Gaussian rationals in a
//! fixed alphabet of atoms, with half-integer powers for the three radicands
//! (and β), formal Eisenstein symbols and an optional formal exponential.
//!
//! Lattice coordinates are stored as (ℓ₁, ℓ₂, ℓ̄₂, vol); ℓ̄₁ is the derived
//! expression `ℓ₁ℓ̄₂/ℓ₂ − 2i·vol/ℓ₂`, which makes the vol relation hold by
//! construction. Moduli coordinates are (τ, σ = τ − τ̄, v).

use crate::eisenstein::{self, EisKind};
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};

// ---------------------------------------------------------------- Gauss

/// Element of ℚ(i).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Gauss {
    pub re: BigRational,
    pub im: BigRational,
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl Gauss {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Gauss { re, im }
    }
    pub fn zero() -> Self {
        Gauss::new(BigRational::zero(), BigRational::zero())
    }
    pub fn one() -> Self {
        Gauss::int(1)
    }
    pub fn i() -> Self {
        Gauss::new(BigRational::zero(), BigRational::one())
    }
    pub fn int(n: i64) -> Self {
        Gauss::new(rat(n), BigRational::zero())
    }
    pub fn frac(n: i64, d: i64) -> Self {
        Gauss::new(BigRational::new(BigInt::from(n), BigInt::from(d)), BigRational::zero())
    }
    pub fn from_rat(r: BigRational) -> Self {
        Gauss::new(r, BigRational::zero())
    }
    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }
    pub fn add(&self, o: &Gauss) -> Gauss {
        Gauss::new(&self.re + &o.re, &self.im + &o.im)
    }
    pub fn sub(&self, o: &Gauss) -> Gauss {
        Gauss::new(&self.re - &o.re, &self.im - &o.im)
    }
    pub fn mul(&self, o: &Gauss) -> Gauss {
        Gauss::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }
    pub fn neg(&self) -> Gauss {
        Gauss::new(-&self.re, -&self.im)
    }
    pub fn conj(&self) -> Gauss {
        Gauss::new(self.re.clone(), -&self.im)
    }
    pub fn inv(&self) -> Option<Gauss> {
        let n = &self.re * &self.re + &self.im * &self.im;
        if n.is_zero() {
            return None;
        }
        Some(Gauss::new(&self.re / &n, -&self.im / &n))
    }
    pub fn div(&self, o: &Gauss) -> Option<Gauss> {
        o.inv().map(|v| self.mul(&v))
    }
    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
}

fn fmt_rat(r: &BigRational) -> String {
    if r.is_integer() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Gauss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", fmt_rat(&self.re)),
            (true, false) => {
                if self.im.is_one() {
                    write!(f, "i")
                } else if (-&self.im).is_one() {
                    write!(f, "-i")
                } else {
                    write!(f, "{}*i", fmt_rat(&self.im))
                }
            }
            (false, false) => {
                let im = if self.im.is_negative() {
                    format!("-{}*i", fmt_rat(&-&self.im))
                } else {
                    format!("+{}*i", fmt_rat(&self.im))
                };
                write!(f, "({}{})", fmt_rat(&self.re), im)
            }
        }
    }
}

// ---------------------------------------------------------------- rings

/// Which coefficient ring a scalar lives in. `Base` promotes into any other.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum ScalarRing {
    Base,
    Circle,
    Lattice,
    Moduli,
}

impl ScalarRing {
    pub fn join(self, other: ScalarRing) -> Result<ScalarRing> {
        match (self, other) {
            (a, b) if a == b => Ok(a),
            (ScalarRing::Base, b) => Ok(b),
            (a, ScalarRing::Base) => Ok(a),
            (a, b) => Err(Error::RingMismatch(format!("{a:?} vs {b:?}"))),
        }
    }

    /// Derivations that are admissible on elements of this ring.
    pub fn admissible(self) -> &'static [&'static str] {
        match self {
            ScalarRing::Base => &[],
            ScalarRing::Circle => &["ell"],
            ScalarRing::Lattice => &["l1bar", "l2bar"],
            ScalarRing::Moduli => &["tau", "taubar", "v"],
        }
    }
}

// ---------------------------------------------------------------- atoms

/// Generators of the Laurent alphabet.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Atom {
    Pi,
    Beta,
    Ell,
    L1,
    L2,
    L2b,
    Vol,
    Tau,
    /// τ − τ̄
    Sigma,
    V,
    Eis(EisKind),
    /// Eisenstein symbol pulled back to the lattice, evaluated at ℓ₁/ℓ₂.
    EisPhi(EisKind),
    Sym(String),
}

impl Atom {
    pub fn ring(&self) -> ScalarRing {
        match self {
            Atom::Pi | Atom::Beta | Atom::Sym(_) => ScalarRing::Base,
            Atom::Ell => ScalarRing::Circle,
            Atom::L1 | Atom::L2 | Atom::L2b | Atom::Vol | Atom::EisPhi(_) => ScalarRing::Lattice,
            Atom::Tau | Atom::Sigma | Atom::V | Atom::Eis(_) => ScalarRing::Moduli,
        }
    }

    /// Whether half-integer exponents are legal.
    pub fn is_radicand(&self) -> bool {
        matches!(self, Atom::Ell | Atom::Vol | Atom::V | Atom::Beta)
    }

    pub fn name(&self) -> String {
        match self {
            Atom::Pi => "pi".into(),
            Atom::Beta => "beta".into(),
            Atom::Ell => "ell".into(),
            Atom::L1 => "l1".into(),
            Atom::L2 => "l2".into(),
            Atom::L2b => "l2bar".into(),
            Atom::Vol => "vol".into(),
            Atom::Tau => "tau".into(),
            Atom::Sigma => "(tau-taubar)".into(),
            Atom::V => "v".into(),
            Atom::Eis(k) => k.name().into(),
            Atom::EisPhi(k) => format!("{}phi", k.name()),
            Atom::Sym(s) => s.clone(),
        }
    }
}

// ---------------------------------------------------------------- monomials

/// Product of atom powers (exponents in halves) times an optional e^c.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Mono {
    pub pows: Vec<(Atom, i32)>,
    pub exp: Option<Box<Poly>>,
}

pub type Poly = BTreeMap<Mono, Gauss>;

impl Mono {
    pub fn one() -> Self {
        Mono::default()
    }
    pub fn atom(a: Atom, halves: i32) -> Self {
        if halves == 0 {
            Mono::one()
        } else {
            Mono { pows: vec![(a, halves)], exp: None }
        }
    }
    pub fn is_one(&self) -> bool {
        self.pows.is_empty() && self.exp.is_none()
    }
    pub fn halves_of(&self, a: &Atom) -> i32 {
        self.pows.iter().find(|(b, _)| b == a).map(|(_, e)| *e).unwrap_or(0)
    }
    pub fn mul(&self, o: &Mono) -> Mono {
        let mut out: Vec<(Atom, i32)> = Vec::with_capacity(self.pows.len() + o.pows.len());
        let (mut i, mut j) = (0, 0);
        while i < self.pows.len() || j < o.pows.len() {
            let ord = if i == self.pows.len() {
                Ordering::Greater
            } else if j == o.pows.len() {
                Ordering::Less
            } else {
                self.pows[i].0.cmp(&o.pows[j].0)
            };
            match ord {
                Ordering::Less => {
                    out.push(self.pows[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(o.pows[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let e = self.pows[i].1 + o.pows[j].1;
                    if e != 0 {
                        out.push((self.pows[i].0.clone(), e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        let exp = match (&self.exp, &o.exp) {
            (None, None) => None,
            (Some(a), None) | (None, Some(a)) => Some(a.clone()),
            (Some(a), Some(b)) => {
                let s = poly_add(a, b);
                if s.is_empty() {
                    None
                } else {
                    Some(Box::new(s))
                }
            }
        };
        Mono { pows: out, exp }
    }
    pub fn inv(&self) -> Mono {
        Mono {
            pows: self.pows.iter().map(|(a, e)| (a.clone(), -e)).collect(),
            exp: self.exp.as_ref().map(|c| Box::new(poly_neg(c))),
        }
    }
    /// Drop the atom `a`, returning its exponent.
    fn without(&self, a: &Atom) -> (i32, Mono) {
        let mut m = self.clone();
        let mut e = 0;
        m.pows.retain(|(b, k)| {
            if b == a {
                e = *k;
                false
            } else {
                true
            }
        });
        (e, m)
    }
}

fn poly_add(a: &Poly, b: &Poly) -> Poly {
    let mut out = a.clone();
    for (m, c) in b {
        add_term(&mut out, m.clone(), c.clone());
    }
    out
}

fn poly_neg(a: &Poly) -> Poly {
    a.iter().map(|(m, c)| (m.clone(), c.neg())).collect()
}

fn add_term(p: &mut Poly, m: Mono, c: Gauss) {
    if c.is_zero() {
        return;
    }
    match p.entry(m) {
        std::collections::btree_map::Entry::Vacant(v) => {
            v.insert(c);
        }
        std::collections::btree_map::Entry::Occupied(mut o) => {
            let s = o.get().add(&c);
            if s.is_zero() {
                o.remove();
            } else {
                *o.get_mut() = s;
            }
        }
    }
}

// ---------------------------------------------------------------- Scalar

/// Ring element in normal form. Equality ignores the ring tag, so a `Base`
/// constant equals the same constant viewed in any other ring.
#[derive(Clone, Debug)]
pub struct Scalar {
    ring: ScalarRing,
    terms: Poly,
}

impl PartialEq for Scalar {
    fn eq(&self, o: &Self) -> bool {
        self.terms == o.terms
    }
}
impl Eq for Scalar {}
impl PartialOrd for Scalar {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Scalar {
    fn cmp(&self, o: &Self) -> Ordering {
        self.terms.cmp(&o.terms)
    }
}
impl Hash for Scalar {
    fn hash<H: Hasher>(&self, h: &mut H) {
        self.terms.hash(h)
    }
}

/// Named derivations. `Sym` differentiates in a formal parameter atom.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub enum Deriv {
    Ell,
    L1bar,
    L2bar,
    Tau,
    TauBar,
    V,
    Sym(String),
}

impl Deriv {
    pub fn name(&self) -> String {
        match self {
            Deriv::Ell => "ell".into(),
            Deriv::L1bar => "l1bar".into(),
            Deriv::L2bar => "l2bar".into(),
            Deriv::Tau => "tau".into(),
            Deriv::TauBar => "taubar".into(),
            Deriv::V => "v".into(),
            Deriv::Sym(s) => s.clone(),
        }
    }
    fn ring(&self) -> Option<ScalarRing> {
        match self {
            Deriv::Ell => Some(ScalarRing::Circle),
            Deriv::L1bar | Deriv::L2bar => Some(ScalarRing::Lattice),
            Deriv::Tau | Deriv::TauBar | Deriv::V => Some(ScalarRing::Moduli),
            Deriv::Sym(_) => None,
        }
    }
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar { ring: ScalarRing::Base, terms: Poly::new() }
    }
    pub fn one() -> Self {
        Scalar::constant(Gauss::one())
    }
    pub fn int(n: i64) -> Self {
        Scalar::constant(Gauss::int(n))
    }
    pub fn frac(n: i64, d: i64) -> Self {
        Scalar::constant(Gauss::frac(n, d))
    }
    pub fn i() -> Self {
        Scalar::constant(Gauss::i())
    }
    pub fn constant(c: Gauss) -> Self {
        Scalar::from_term(ScalarRing::Base, Mono::one(), c)
    }
    pub fn pi() -> Self {
        Scalar::atom(Atom::Pi)
    }
    pub fn sym(name: &str) -> Self {
        Scalar::atom(Atom::Sym(name.to_string()))
    }
    pub fn atom(a: Atom) -> Self {
        Scalar::atom_pow(a, 2).expect("integer power")
    }
    /// `a^(halves/2)`; odd `halves` need a radicand.
    pub fn atom_pow(a: Atom, halves: i32) -> Result<Self> {
        if halves % 2 != 0 && !a.is_radicand() {
            return Err(Error::IllegalRadicand(a.name()));
        }
        Ok(Scalar::from_term(a.ring(), Mono::atom(a, halves), Gauss::one()))
    }
    pub fn from_term(ring: ScalarRing, m: Mono, c: Gauss) -> Self {
        let mut terms = Poly::new();
        add_term(&mut terms, m, c);
        Scalar { ring, terms }
    }
    pub fn from_poly(ring: ScalarRing, terms: Poly) -> Self {
        Scalar { ring, terms }
    }
    /// e^c for a scalar c.
    pub fn exp_of(c: &Scalar) -> Self {
        if c.is_zero() {
            return Scalar::one();
        }
        let m = Mono { pows: vec![], exp: Some(Box::new(c.terms.clone())) };
        Scalar::from_term(c.ring, m, Gauss::one())
    }

    // Lattice and moduli coordinates.
    pub fn ell() -> Self {
        Scalar::atom(Atom::Ell)
    }
    pub fn beta() -> Self {
        Scalar::atom(Atom::Beta)
    }
    pub fn l1() -> Self {
        Scalar::atom(Atom::L1)
    }
    pub fn l2() -> Self {
        Scalar::atom(Atom::L2)
    }
    pub fn l2bar() -> Self {
        Scalar::atom(Atom::L2b)
    }
    pub fn vol() -> Self {
        Scalar::atom(Atom::Vol)
    }
    /// ℓ̄₁ = (ℓ₁ℓ̄₂ − 2i·vol)/ℓ₂.
    pub fn l1bar() -> Self {
        let inv_l2 = Scalar::atom_pow(Atom::L2, -2).unwrap();
        (&(&Scalar::l1() * &Scalar::l2bar()) - &(&Scalar::constant(Gauss::int(2).mul(&Gauss::i())) * &Scalar::vol()))
            * inv_l2
    }
    pub fn tau() -> Self {
        Scalar::atom(Atom::Tau)
    }
    pub fn sigma() -> Self {
        Scalar::atom(Atom::Sigma)
    }
    pub fn taubar() -> Self {
        &Scalar::tau() - &Scalar::sigma()
    }
    pub fn v() -> Self {
        Scalar::atom(Atom::V)
    }
    pub fn eis(k: EisKind) -> Self {
        Scalar::atom(Atom::Eis(k))
    }
    /// 2πi as an exact scalar.
    pub fn two_pi_i() -> Self {
        &Scalar::constant(Gauss::int(2).mul(&Gauss::i())) * &Scalar::pi()
    }
    /// The completed E2 = E2hol − 2πi/(τ − τ̄).
    pub fn e2() -> Self {
        &Scalar::eis(EisKind::E2hol) - &(&Scalar::two_pi_i() * &Scalar::atom_pow(Atom::Sigma, -2).unwrap())
    }

    pub fn ring(&self) -> ScalarRing {
        self.ring
    }
    pub fn terms(&self) -> &Poly {
        &self.terms
    }
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn len(&self) -> usize {
        self.terms.len()
    }
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
    /// Re-tag into a ring; fails unless the current tag promotes.
    pub fn in_ring(mut self, r: ScalarRing) -> Result<Self> {
        self.ring = self.ring.join(r)?;
        Ok(self)
    }
    /// The constant term, i.e. coefficient of the unit monomial.
    pub fn constant_term(&self) -> Gauss {
        self.terms.get(&Mono::one()).cloned().unwrap_or_else(Gauss::zero)
    }
    pub fn as_constant(&self) -> Option<Gauss> {
        match self.terms.len() {
            0 => Some(Gauss::zero()),
            1 => self.terms.get(&Mono::one()).cloned(),
            _ => None,
        }
    }
    /// Single-term scalars are invertible.
    pub fn as_monomial(&self) -> Option<(&Mono, &Gauss)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }
    pub fn contains_atom(&self, pred: &dyn Fn(&Atom) -> bool) -> bool {
        self.terms.keys().any(|m| {
            m.pows.iter().any(|(a, _)| pred(a))
                || m.exp.as_ref().map(|c| c.keys().any(|mm| mm.pows.iter().any(|(a, _)| pred(a)))).unwrap_or(false)
        })
    }

    pub fn checked_add(&self, o: &Scalar) -> Result<Scalar> {
        let ring = self.ring.join(o.ring)?;
        Ok(Scalar { ring, terms: poly_add(&self.terms, &o.terms) })
    }
    pub fn checked_sub(&self, o: &Scalar) -> Result<Scalar> {
        self.checked_add(&o.neg())
    }
    pub fn checked_mul(&self, o: &Scalar) -> Result<Scalar> {
        let ring = self.ring.join(o.ring)?;
        let mut terms = Poly::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                add_term(&mut terms, ma.mul(mb), ca.mul(cb));
            }
        }
        Ok(Scalar { ring, terms })
    }
    pub fn neg(&self) -> Scalar {
        Scalar { ring: self.ring, terms: poly_neg(&self.terms) }
    }
    pub fn scale(&self, c: &Gauss) -> Scalar {
        if c.is_zero() {
            return Scalar { ring: self.ring, terms: Poly::new() };
        }
        Scalar { ring: self.ring, terms: self.terms.iter().map(|(m, x)| (m.clone(), x.mul(c))).collect() }
    }
    /// Multiply by a monomial (coefficient one).
    pub fn mul_mono(&self, m: &Mono) -> Scalar {
        let mut terms = Poly::new();
        for (mm, c) in &self.terms {
            add_term(&mut terms, mm.mul(m), c.clone());
        }
        Scalar { ring: self.ring, terms }
    }
    pub fn conj_coeffs(&self) -> Scalar {
        Scalar { ring: self.ring, terms: self.terms.iter().map(|(m, c)| (m.clone(), c.conj())).collect() }
    }
    /// Inverse of a single-term scalar.
    pub fn inv(&self) -> Result<Scalar> {
        match self.as_monomial() {
            Some((m, c)) => {
                let ci = c.inv().ok_or_else(|| Error::PoleEvaluation("division by zero".into()))?;
                Ok(Scalar::from_term(self.ring, m.inv(), ci))
            }
            None if self.is_zero() => Err(Error::PoleEvaluation("division by zero".into())),
            None => Err(Error::NonMonomialDivision(self.to_string())),
        }
    }
    pub fn checked_div(&self, o: &Scalar) -> Result<Scalar> {
        self.checked_mul(&o.inv()?)
    }
    pub fn pow(&self, n: i64) -> Result<Scalar> {
        if n < 0 {
            return self.inv()?.pow(-n);
        }
        let mut acc = Scalar::one().in_ring(self.ring)?;
        for _ in 0..n {
            acc = acc.checked_mul(self)?;
        }
        Ok(acc)
    }
    /// Rational power of a single-term scalar (half-integer exponents only on radicands).
    pub fn pow_halves(&self, halves: i32) -> Result<Scalar> {
        if halves % 2 == 0 {
            return self.pow((halves / 2) as i64);
        }
        let (m, c) = self.as_monomial().ok_or_else(|| Error::IllegalRadicand(self.to_string()))?;
        if !c.is_one() || m.exp.is_some() {
            return Err(Error::IllegalRadicand(self.to_string()));
        }
        let mut out = Mono::one();
        for (a, e) in &m.pows {
            let ee = e * halves;
            if ee % 2 != 0 {
                return Err(Error::IllegalRadicand(self.to_string()));
            }
            let h = ee / 2;
            if h % 2 != 0 && !a.is_radicand() {
                return Err(Error::IllegalRadicand(a.name()));
            }
            out = out.mul(&Mono::atom(a.clone(), h));
        }
        Ok(Scalar::from_term(self.ring, out, Gauss::one()))
    }

    /// Raw partial derivative in one atom, all other atoms held fixed.
    pub fn partial_atom(&self, a: &Atom) -> Result<Scalar> {
        let mut terms = Poly::new();
        for (m, c) in &self.terms {
            for (b, _) in &m.pows {
                let bad = match (a, b) {
                    (Atom::Tau, Atom::Eis(_)) => true,
                    (Atom::L1 | Atom::L2, Atom::EisPhi(_)) => true,
                    _ => false,
                };
                if bad {
                    return Err(Error::UnsupportedDerivative(format!("d/d{} of {}", a.name(), b.name())));
                }
            }
            let (e, rest) = m.without(a);
            if e != 0 {
                let mut dm = rest.mul(&Mono::atom(a.clone(), e - 2));
                if dm.exp.is_none() {
                    dm.exp = m.exp.clone();
                }
                add_term(&mut terms, dm, c.mul(&Gauss::frac(e as i64, 2)));
            }
            if let Some(arg) = &m.exp {
                let dc = Scalar::from_poly(self.ring, (**arg).clone()).partial_atom(a)?;
                for (dm, dcoef) in &dc.terms {
                    add_term(&mut terms, m.mul(dm), c.mul(dcoef));
                }
            }
        }
        Ok(Scalar { ring: self.ring, terms })
    }

    /// Named derivation, with admissibility check against the ring.
    pub fn derive(&self, d: &Deriv) -> Result<Scalar> {
        if let Some(r) = d.ring() {
            if self.ring != ScalarRing::Base && self.ring != r {
                return Err(Error::UnknownDerivation(format!("{} in {:?}", d.name(), self.ring)));
            }
        }
        let i2 = Gauss::int(2).mul(&Gauss::i());
        match d {
            Deriv::Ell => self.partial_atom(&Atom::Ell),
            Deriv::Sym(s) => self.partial_atom(&Atom::Sym(s.clone())),
            Deriv::V => self.partial_atom(&Atom::V),
            // τ̄ = τ − σ with τ fixed: ∂τ̄ = −∂σ.
            Deriv::TauBar => Ok(self.partial_atom(&Atom::Sigma)?.neg()),
            Deriv::Tau => Ok(&self.partial_atom(&Atom::Tau)? + &self.partial_atom(&Atom::Sigma)?),
            // ∂vol/∂ℓ̄₁ = −ℓ₂/(2i)
            Deriv::L1bar => {
                let k = Scalar::from_term(ScalarRing::Lattice, Mono::atom(Atom::L2, 2), i2.inv().unwrap().neg());
                Ok(&self.partial_atom(&Atom::Vol)? * &k)
            }
            // ∂vol/∂ℓ̄₂ = ℓ₁/(2i)
            Deriv::L2bar => {
                let k = Scalar::from_term(ScalarRing::Lattice, Mono::atom(Atom::L1, 2), i2.inv().unwrap());
                Ok(&self.partial_atom(&Atom::L2b)? + &(&self.partial_atom(&Atom::Vol)? * &k))
            }
        }
    }

    /// Substitute atoms by scalars. Atoms absent from `map` are kept. Half
    /// powers of a substituted atom require a monomial image.
    pub fn substitute(&self, map: &dyn Fn(&Atom) -> Option<Scalar>, ring: ScalarRing) -> Result<Scalar> {
        let mut acc = Scalar::zero().in_ring(ring)?;
        for (m, c) in &self.terms {
            let mut t = Scalar::constant(c.clone()).in_ring(ring)?;
            for (a, e) in &m.pows {
                let f = match map(a) {
                    Some(img) => img.pow_halves(*e)?,
                    None => Scalar::atom_pow(a.clone(), *e)?,
                };
                t = t.checked_mul(&f.in_ring_lossy(ring))?;
            }
            if let Some(arg) = &m.exp {
                let a2 = Scalar::from_poly(self.ring, (**arg).clone()).substitute(map, ring)?;
                t = t.checked_mul(&Scalar::exp_of(&a2))?;
            }
            acc = acc.checked_add(&t)?;
        }
        Ok(acc)
    }

    fn in_ring_lossy(mut self, r: ScalarRing) -> Scalar {
        if self.ring == ScalarRing::Base {
            self.ring = r;
        }
        self
    }

    /// Map terms by a closure on (monomial, coefficient).
    pub fn map_terms(&self, f: impl Fn(&Mono, &Gauss) -> Option<(Mono, Gauss)>) -> Scalar {
        let mut terms = Poly::new();
        for (m, c) in &self.terms {
            if let Some((m2, c2)) = f(m, c) {
                add_term(&mut terms, m2, c2);
            }
        }
        Scalar { ring: self.ring, terms }
    }

    /// Numeric value at a point.
    pub fn eval(&self, at: &Assignment) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let mut t = c.to_complex();
            for (a, e) in &m.pows {
                let x = at.value(a)?;
                if x.norm() == 0.0 && *e < 0 {
                    return Err(Error::PoleEvaluation(a.name()));
                }
                t *= if e % 2 == 0 { x.powi(e / 2) } else { x.sqrt().powi(*e) };
            }
            if let Some(arg) = &m.exp {
                t *= Scalar::from_poly(self.ring, (**arg).clone()).eval(at)?.exp();
            }
            acc += t;
        }
        Ok(acc)
    }
}

// ---------------------------------------------------------------- operators

macro_rules! bin_op {
    ($tr:ident, $f:ident, $m:ident) => {
        impl std::ops::$tr<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $f(self, o: &Scalar) -> Scalar {
                self.$m(o).unwrap_or_else(|e| panic!("{e}"))
            }
        }
        impl std::ops::$tr<Scalar> for Scalar {
            type Output = Scalar;
            fn $f(self, o: Scalar) -> Scalar {
                (&self).$m(&o).unwrap_or_else(|e| panic!("{e}"))
            }
        }
        impl std::ops::$tr<&Scalar> for Scalar {
            type Output = Scalar;
            fn $f(self, o: &Scalar) -> Scalar {
                (&self).$m(o).unwrap_or_else(|e| panic!("{e}"))
            }
        }
    };
}
bin_op!(Add, add, checked_add);
bin_op!(Sub, sub, checked_sub);
bin_op!(Mul, mul, checked_mul);

impl std::ops::Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar::neg(self)
    }
}
impl std::ops::Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar::neg(&self)
    }
}

// ---------------------------------------------------------------- printing

fn fmt_mono(m: &Mono) -> String {
    let mut parts = Vec::new();
    for (a, e) in &m.pows {
        let name = a.name();
        let s = if e % 2 == 0 {
            let k = e / 2;
            if k == 1 {
                name
            } else {
                format!("{name}^{k}")
            }
        } else if *e == 1 {
            format!("sqrt({name})")
        } else {
            format!("sqrt({name})^{e}")
        };
        parts.push(s);
    }
    if let Some(arg) = &m.exp {
        parts.push(format!("exp({})", fmt_poly(arg)));
    }
    parts.join("*")
}

fn fmt_poly(p: &Poly) -> String {
    if p.is_empty() {
        return "0".into();
    }
    let mut out = String::new();
    for (idx, (m, c)) in p.iter().enumerate() {
        let (neg, cabs) = if c.im.is_zero() && c.re.is_negative() { (true, c.neg()) } else { (false, c.clone()) };
        if idx > 0 {
            out.push_str(if neg { " - " } else { " + " });
        } else if neg {
            out.push('-');
        }
        let ms = fmt_mono(m);
        if ms.is_empty() {
            out.push_str(&cabs.to_string());
        } else if cabs.is_one() {
            out.push_str(&ms);
        } else {
            out.push_str(&format!("{cabs}*{ms}"));
        }
    }
    out
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", fmt_poly(&self.terms))
    }
}

// ---------------------------------------------------------------- pullbacks

/// φ*: moduli functions to lattice functions, τ ↦ ℓ₁/ℓ₂, τ̄ ↦ ℓ̄₁/ℓ̄₂, v ↦ vol.
pub fn pullback_phi(x: &Scalar) -> Result<Scalar> {
    if !matches!(x.ring(), ScalarRing::Moduli | ScalarRing::Base) {
        return Err(Error::RingMismatch(format!("pullback_phi expects a moduli scalar, got {:?}", x.ring())));
    }
    let two_i = Gauss::int(2).mul(&Gauss::i());
    x.substitute(
        &|a| match a {
            Atom::Tau => Some(Scalar::from_term(
                ScalarRing::Lattice,
                Mono::atom(Atom::L1, 2).mul(&Mono::atom(Atom::L2, -2)),
                Gauss::one(),
            )),
            // τ − τ̄ = 2i·vol/(ℓ₂ℓ̄₂)
            Atom::Sigma => Some(Scalar::from_term(
                ScalarRing::Lattice,
                Mono::atom(Atom::Vol, 2).mul(&Mono::atom(Atom::L2, -2)).mul(&Mono::atom(Atom::L2b, -2)),
                two_i.clone(),
            )),
            Atom::V => Some(Scalar::atom(Atom::Vol)),
            Atom::Eis(k) => Some(Scalar::atom(Atom::EisPhi(*k))),
            _ => None,
        },
        ScalarRing::Lattice,
    )
}

/// The coefficient inclusion f·β^k ↦ φ*(f)·ℓ₂^{−k}.
pub fn include_beta(x: &Scalar) -> Result<Scalar> {
    let y = pullback_phi(x)?;
    y.substitute(
        &|a| match a {
            Atom::Beta => Some(Scalar::atom_pow(Atom::L2, -2).unwrap()),
            _ => None,
        },
        ScalarRing::Lattice,
    )
}

/// Checks both chain-rule identities relating lattice ℓ̄-derivatives of φ*Z
/// to the moduli derivatives of Z.
pub fn chain_rule_check(z: &Scalar) -> Result<bool> {
    let (lhs1, rhs1, lhs2, rhs2) = chain_rule_sides(z)?;
    Ok(lhs1 == rhs1 && lhs2 == rhs2)
}

/// (∂ℓ̄₁φ*Z, RHS₁, ∂ℓ̄₂φ*Z, RHS₂).
pub fn chain_rule_sides(z: &Scalar) -> Result<(Scalar, Scalar, Scalar, Scalar)> {
    let z = z.clone().in_ring(ScalarRing::Moduli)?;
    let pz = pullback_phi(&z)?;
    let lhs1 = pz.derive(&Deriv::L1bar)?;
    let lhs2 = pz.derive(&Deriv::L2bar)?;
    let zt = pullback_phi(&z.derive(&Deriv::TauBar)?)?;
    let zv = pullback_phi(&z.derive(&Deriv::V)?)?;
    let inv2i = Gauss::int(2).mul(&Gauss::i()).inv().unwrap();
    let l2bar_inv = Scalar::atom_pow(Atom::L2b, -2)?;
    let rhs1 = &(&l2bar_inv * &zt) - &(&Scalar::l2().scale(&inv2i) * &zv);
    let rhs2 = &(&(&Scalar::l1bar() * &Scalar::atom_pow(Atom::L2b, -4)?) * &zt).neg()
        + &(&Scalar::l1().scale(&inv2i) * &zv);
    Ok((lhs1, rhs1, lhs2, rhs2))
}

// ---------------------------------------------------------------- numerics

/// A point at which to evaluate scalars numerically.
#[derive(Clone, Debug)]
pub struct Assignment {
    pub values: HashMap<String, Complex64>,
    pub q_terms: usize,
}

impl Default for Assignment {
    fn default() -> Self {
        Assignment { values: HashMap::new(), q_terms: 50 }
    }
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }
    pub fn with(mut self, name: &str, v: Complex64) -> Self {
        self.values.insert(name.to_string(), v);
        self
    }
    pub fn q_terms(mut self, n: usize) -> Self {
        self.q_terms = n;
        self
    }
    fn get(&self, name: &str) -> Result<Complex64> {
        self.values.get(name).copied().ok_or_else(|| Error::MissingAssignment(name.to_string()))
    }
    fn tau(&self) -> Result<Complex64> {
        self.get("tau")
    }
    fn taubar(&self) -> Result<Complex64> {
        self.get("taubar").or_else(|_| self.tau().map(|t| t.conj()))
    }
    fn l1bar(&self) -> Result<Complex64> {
        self.get("l1bar").or_else(|_| self.get("l1").map(|x| x.conj()))
    }
    fn l2bar(&self) -> Result<Complex64> {
        self.get("l2bar").or_else(|_| self.get("l2").map(|x| x.conj()))
    }
    pub fn value(&self, a: &Atom) -> Result<Complex64> {
        Ok(match a {
            Atom::Pi => Complex64::new(std::f64::consts::PI, 0.0),
            Atom::Beta => self.get("beta")?,
            Atom::Ell => self.get("ell")?,
            Atom::L1 => self.get("l1")?,
            Atom::L2 => self.get("l2")?,
            Atom::L2b => self.l2bar()?,
            Atom::Vol => match self.get("vol") {
                Ok(v) => v,
                Err(_) => {
                    let (l1, l2) = (self.get("l1")?, self.get("l2")?);
                    (l1 * self.l2bar()? - self.l1bar()? * l2) / Complex64::new(0.0, 2.0)
                }
            },
            Atom::Tau => self.tau()?,
            Atom::Sigma => self.tau()? - self.taubar()?,
            Atom::V => self.get("v")?,
            Atom::Eis(k) => eisenstein::g_series(*k, self.tau()?, self.q_terms)?,
            Atom::EisPhi(k) => {
                let l2 = self.get("l2")?;
                if l2.norm() == 0.0 {
                    return Err(Error::PoleEvaluation("l2".into()));
                }
                eisenstein::g_series(*k, self.get("l1")? / l2, self.q_terms)?
            }
            Atom::Sym(s) => self.get(s)?,
        })
    }
}

/// Numeric evaluation with the given number of q-expansion terms.
pub fn eval_numeric(x: &Scalar, at: &Assignment) -> Result<Complex64> {
    x.eval(at)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_power_rule() {
        let x = Scalar::atom_pow(Atom::Ell, 1).unwrap();
        let d = x.derive(&Deriv::Ell).unwrap();
        assert_eq!(d, Scalar::atom_pow(Atom::Ell, -1).unwrap().scale(&Gauss::frac(1, 2)));
    }

    #[test]
    fn e2_taubar_derivative() {
        let d = Scalar::e2().in_ring(ScalarRing::Moduli).unwrap().derive(&Deriv::TauBar).unwrap();
        let expect = (&Scalar::two_pi_i() * &Scalar::atom_pow(Atom::Sigma, -4).unwrap()).neg();
        assert_eq!(d, expect);
    }

    #[test]
    fn vol_l1bar_derivative() {
        let d = Scalar::vol().derive(&Deriv::L1bar).unwrap();
        let expect = Scalar::l2().scale(&Gauss::int(2).mul(&Gauss::i()).inv().unwrap().neg());
        assert_eq!(d, expect);
    }

    #[test]
    fn l1bar_consistent_with_vol() {
        // vol = (ℓ₁ℓ̄₂ − ℓ̄₁ℓ₂)/(2i)
        let lhs = (&(&Scalar::l1() * &Scalar::l2bar()) - &(&Scalar::l1bar() * &Scalar::l2()))
            .scale(&Gauss::int(2).mul(&Gauss::i()).inv().unwrap());
        assert_eq!(lhs, Scalar::vol());
        assert_eq!(Scalar::l1bar().derive(&Deriv::L1bar).unwrap(), Scalar::one());
        assert!(Scalar::l1bar().derive(&Deriv::L2bar).unwrap().is_zero());
        assert!(Scalar::l2bar().derive(&Deriv::L1bar).unwrap().is_zero());
    }

    #[test]
    fn admissibility() {
        assert!(matches!(Scalar::ell().derive(&Deriv::TauBar), Err(Error::UnknownDerivation(_))));
        let e4 = Scalar::eis(EisKind::E4);
        assert!(matches!(e4.derive(&Deriv::Tau), Err(Error::UnsupportedDerivative(_))));
        assert!(e4.derive(&Deriv::TauBar).unwrap().is_zero());
        assert!(e4.derive(&Deriv::V).unwrap().is_zero());
        assert!(matches!(Scalar::ell().checked_add(&Scalar::tau()), Err(Error::RingMismatch(_))));
        assert!(matches!(Scalar::atom_pow(Atom::Tau, 1), Err(Error::IllegalRadicand(_))));
    }

    #[test]
    fn phi_examples() {
        assert_eq!(pullback_phi(&Scalar::v()).unwrap(), Scalar::vol());
        assert_eq!(pullback_phi(&Scalar::tau()).unwrap(), &Scalar::l1() * &Scalar::atom_pow(Atom::L2, -2).unwrap());
        assert_eq!(pullback_phi(&Scalar::one()).unwrap(), Scalar::one());
        let tb = pullback_phi(&Scalar::taubar()).unwrap();
        assert_eq!(tb, &Scalar::l1bar() * &Scalar::atom_pow(Atom::L2b, -2).unwrap());
    }

    #[test]
    fn chain_rule_examples() {
        for z in [Scalar::v(), Scalar::taubar(), Scalar::one(), Scalar::e2()] {
            assert!(chain_rule_check(&z).unwrap(), "{z}");
        }
        let (l, _, _, _) = chain_rule_sides(&Scalar::v()).unwrap();
        assert_eq!(l, Scalar::l2().scale(&Gauss::int(2).mul(&Gauss::i()).inv().unwrap().neg()));
        let (l, _, _, _) = chain_rule_sides(&Scalar::taubar()).unwrap();
        assert_eq!(l, Scalar::atom_pow(Atom::L2b, -2).unwrap());
    }

    #[test]
    fn exp_derivative() {
        let e = Scalar::exp_of(&Scalar::ell());
        assert_eq!(e.derive(&Deriv::Ell).unwrap(), e);
        let prod = &e * &Scalar::exp_of(&Scalar::ell().neg());
        assert_eq!(prod, Scalar::one());
    }

    #[test]
    fn numeric_points() {
        let at = Assignment::new().with("tau", Complex64::new(0.0, 1.0));
        let s = Scalar::sigma().eval(&at).unwrap();
        assert!((s - Complex64::new(0.0, 2.0)).norm() < 1e-15);
        let e6 = Scalar::eis(EisKind::E6).eval(&at).unwrap();
        assert!(e6.norm() < 1e-10);
        let at2 = Assignment::new().with("tau", Complex64::new(0.0, 2.0));
        let a = Scalar::eis(EisKind::E4).eval(&at2).unwrap();
        let b = Scalar::eis(EisKind::E4).eval(&at2.clone().q_terms(80)).unwrap();
        assert!((a - b).norm() < 1e-12);
        let pole = Assignment::new().with("ell", Complex64::new(0.0, 0.0));
        assert!(matches!(Scalar::atom_pow(Atom::Ell, -2).unwrap().eval(&pole), Err(Error::PoleEvaluation(_))));
    }
}
