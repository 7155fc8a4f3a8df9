//! Exterior algebras over a scalar ring on named odd generators, with
//! optional monomial relations such as λ₁λ₂ = 0.

use crate::error::{Error, Result};
use crate::scalars::{Deriv, Scalar, ScalarRing};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

/// Odd generators in declaration order, plus monomials forced to zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GrassmannRing {
    pub base: ScalarRing,
    pub gens: Vec<String>,
    pub relations: Vec<u64>,
}

impl GrassmannRing {
    pub fn new(base: ScalarRing, gens: &[&str]) -> Arc<Self> {
        Self::with_relations(base, gens, &[]).expect("generators without relations are valid")
    }

    /// `relations` lists generator-name pairs whose product vanishes.
    pub fn with_relations(base: ScalarRing, gens: &[&str], relations: &[(&str, &str)]) -> Result<Arc<Self>> {
        assert!(gens.len() <= 64, "at most 64 odd generators");
        let gens: Vec<String> = gens.iter().map(|s| s.to_string()).collect();
        let mut r = GrassmannRing { base, gens, relations: vec![] };
        for (a, b) in relations {
            let m = r.mask_of(&[a, b])?;
            r.relations.push(m);
        }
        Ok(Arc::new(r))
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.gens.iter().position(|g| g == name)
    }

    pub fn mask_of(&self, names: &[&str]) -> Result<u64> {
        let mut m = 0u64;
        for n in names {
            let i = self.index(n).ok_or_else(|| Error::UnknownMonomial(n.to_string()))?;
            if m & (1 << i) != 0 {
                return Err(Error::UnknownMonomial(format!("{n} repeated")));
            }
            m |= 1 << i;
        }
        Ok(m)
    }

    pub fn killed(&self, mask: u64) -> bool {
        self.relations.iter().any(|r| mask & r == *r)
    }

    pub fn mask_name(&self, mask: u64) -> String {
        (0..self.gens.len()).filter(|i| mask & (1 << i) != 0).map(|i| self.gens[i].clone()).collect::<Vec<_>>().join("*")
    }
}

/// Sign of γ^a·γ^b relative to γ^{a∪b}, or 0 when they overlap.
pub fn mask_sign(a: u64, b: u64) -> i32 {
    if a & b != 0 {
        return 0;
    }
    let mut swaps = 0u32;
    let mut bb = b;
    while bb != 0 {
        let j = bb.trailing_zeros();
        swaps += (a >> (j + 1)).count_ones();
        bb &= bb - 1;
    }
    if swaps.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

pub fn parity(mask: u64) -> u32 {
    mask.count_ones() % 2
}

#[derive(Clone, Debug)]
pub struct GrassmannElement {
    pub ring: Arc<GrassmannRing>,
    pub terms: BTreeMap<u64, Scalar>,
}

impl PartialEq for GrassmannElement {
    fn eq(&self, o: &Self) -> bool {
        self.terms == o.terms
    }
}
impl Eq for GrassmannElement {}

fn add_into(t: &mut BTreeMap<u64, Scalar>, m: u64, c: Scalar) {
    if c.is_zero() {
        return;
    }
    match t.get_mut(&m) {
        Some(x) => {
            *x = &*x + &c;
            if x.is_zero() {
                t.remove(&m);
            }
        }
        None => {
            t.insert(m, c);
        }
    }
}

impl GrassmannElement {
    pub fn zero(ring: &Arc<GrassmannRing>) -> Self {
        GrassmannElement { ring: ring.clone(), terms: BTreeMap::new() }
    }
    pub fn scalar(ring: &Arc<GrassmannRing>, c: Scalar) -> Self {
        let mut e = Self::zero(ring);
        add_into(&mut e.terms, 0, c);
        e
    }
    pub fn one(ring: &Arc<GrassmannRing>) -> Self {
        Self::scalar(ring, Scalar::one())
    }
    pub fn gen(ring: &Arc<GrassmannRing>, name: &str) -> Result<Self> {
        let m = ring.mask_of(&[name])?;
        Ok(Self::monomial(ring, m, Scalar::one()))
    }
    pub fn monomial(ring: &Arc<GrassmannRing>, mask: u64, c: Scalar) -> Self {
        let mut e = Self::zero(ring);
        if !ring.killed(mask) {
            add_into(&mut e.terms, mask, c);
        }
        e
    }
    fn same_ring(&self, o: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.ring, &o.ring) || self.ring == o.ring {
            Ok(())
        } else {
            Err(Error::RingMismatch("different Grassmann rings".into()))
        }
    }
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn body(&self) -> Scalar {
        self.terms.get(&0).cloned().unwrap_or_else(Scalar::zero)
    }
    /// 0 for even, 1 for odd, None for inhomogeneous; zero counts as both.
    pub fn parity(&self) -> Option<u32> {
        let mut p = None;
        for m in self.terms.keys() {
            let q = parity(*m);
            match p {
                None => p = Some(q),
                Some(x) if x != q => return None,
                _ => {}
            }
        }
        p
    }
    pub fn has_parity(&self, p: u32) -> bool {
        self.terms.keys().all(|m| parity(*m) == p)
    }
    pub fn checked_add(&self, o: &Self) -> Result<Self> {
        self.same_ring(o)?;
        let mut t = self.terms.clone();
        for (m, c) in &o.terms {
            add_into(&mut t, *m, c.clone());
        }
        Ok(GrassmannElement { ring: self.ring.clone(), terms: t })
    }
    pub fn checked_mul(&self, o: &Self) -> Result<Self> {
        self.same_ring(o)?;
        let mut t = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                let s = mask_sign(*ma, *mb);
                if s == 0 || self.ring.killed(ma | mb) {
                    continue;
                }
                let c = ca.checked_mul(cb)?;
                add_into(&mut t, ma | mb, if s < 0 { c.neg() } else { c });
            }
        }
        Ok(GrassmannElement { ring: self.ring.clone(), terms: t })
    }
    pub fn neg(&self) -> Self {
        self.scale(&Scalar::int(-1))
    }
    pub fn scale(&self, c: &Scalar) -> Self {
        let mut t = BTreeMap::new();
        for (m, x) in &self.terms {
            add_into(&mut t, *m, x * c);
        }
        GrassmannElement { ring: self.ring.clone(), terms: t }
    }
    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one(&self.ring);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }
    /// Inverse when the body is a single-term scalar: b(1+n)⁻¹ = b⁻¹Σ(−n)^k.
    pub fn inverse(&self) -> Result<Self> {
        let b = self.body();
        let binv = b.inv().map_err(|_| Error::NonInvertible(b.to_string()))?;
        let mut n = self.scale(&binv);
        n.terms.remove(&0);
        let mneg = n.neg();
        let mut acc = Self::one(&self.ring);
        let mut p = Self::one(&self.ring);
        for _ in 0..self.ring.gens.len() {
            p = &p * &mneg;
            if p.is_zero() {
                break;
            }
            acc = &acc + &p;
        }
        Ok(acc.scale(&binv))
    }
    /// Coefficient of the monomial given by generator names (any order; the
    /// coefficient refers to the sorted monomial).
    pub fn coefficient(&self, names: &[&str]) -> Result<Scalar> {
        let m = self.ring.mask_of(names)?;
        Ok(self.coeff_mask(m))
    }
    pub fn coeff_mask(&self, m: u64) -> Scalar {
        self.terms.get(&m).cloned().unwrap_or_else(Scalar::zero)
    }
    /// Ring map determined on generators. Odd generators must map to odd elements.
    pub fn substitute(&self, map: &HashMap<String, GrassmannElement>) -> Result<Self> {
        let mut images = Vec::with_capacity(self.ring.gens.len());
        let mut target: Option<Arc<GrassmannRing>> = None;
        for g in &self.ring.gens {
            let img = match map.get(g) {
                Some(e) => {
                    if !e.has_parity(1) {
                        return Err(Error::ParityViolation(format!("{g} must map to an odd element")));
                    }
                    e.clone()
                }
                None => {
                    let r = target.clone().or_else(|| map.values().next().map(|e| e.ring.clone()));
                    match r {
                        Some(r) => GrassmannElement::gen(&r, g)?,
                        None => GrassmannElement::gen(&self.ring, g)?,
                    }
                }
            };
            if target.is_none() {
                target = Some(img.ring.clone());
            }
            images.push(img);
        }
        let ring = target.unwrap_or_else(|| self.ring.clone());
        let mut acc = Self::zero(&ring);
        for (m, c) in &self.terms {
            let mut t = Self::scalar(&ring, c.clone());
            for (i, img) in images.iter().enumerate() {
                if m & (1 << i) != 0 {
                    t = t.checked_mul(img)?;
                }
            }
            acc = acc.checked_add(&t)?;
        }
        Ok(acc)
    }
    /// Apply a scalar derivation to every coefficient.
    pub fn derive(&self, d: &Deriv) -> Result<Self> {
        let mut t = BTreeMap::new();
        for (m, c) in &self.terms {
            add_into(&mut t, *m, c.derive(d)?);
        }
        Ok(GrassmannElement { ring: self.ring.clone(), terms: t })
    }
    /// Left derivative ∂/∂γ_i.
    pub fn left_partial(&self, name: &str) -> Result<Self> {
        let i = self.ring.index(name).ok_or_else(|| Error::UnknownMonomial(name.to_string()))?;
        let bit = 1u64 << i;
        let mut t = BTreeMap::new();
        for (m, c) in &self.terms {
            if m & bit != 0 {
                let rest = m & !bit;
                let s = mask_sign(bit, rest);
                add_into(&mut t, rest, if s < 0 { c.neg() } else { c.clone() });
            }
        }
        Ok(GrassmannElement { ring: self.ring.clone(), terms: t })
    }
    pub fn map_coeffs(&self, f: impl Fn(&Scalar) -> Result<Scalar>) -> Result<Self> {
        let mut t = BTreeMap::new();
        for (m, c) in &self.terms {
            add_into(&mut t, *m, f(c)?);
        }
        Ok(GrassmannElement { ring: self.ring.clone(), terms: t })
    }
}

macro_rules! gbin {
    ($tr:ident, $f:ident, $body:expr) => {
        impl std::ops::$tr<&GrassmannElement> for &GrassmannElement {
            type Output = GrassmannElement;
            fn $f(self, o: &GrassmannElement) -> GrassmannElement {
                let g: fn(&GrassmannElement, &GrassmannElement) -> Result<GrassmannElement> = $body;
                g(self, o).unwrap_or_else(|e| panic!("{e}"))
            }
        }
    };
}
gbin!(Add, add, |a, b| a.checked_add(b));
gbin!(Sub, sub, |a, b| a.checked_add(&b.neg()));
gbin!(Mul, mul, |a, b| a.checked_mul(b));

impl fmt::Display for GrassmannElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| if *m == 0 { format!("({c})") } else { format!("({c})*{}", self.ring.mask_name(*m)) })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// gr_mul with a ring check.
pub fn gr_mul(a: &GrassmannElement, b: &GrassmannElement) -> Result<GrassmannElement> {
    a.checked_mul(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring() -> Arc<GrassmannRing> {
        GrassmannRing::with_relations(ScalarRing::Base, &["theta", "eta", "lam1", "lam2"], &[("lam1", "lam2")]).unwrap()
    }

    #[test]
    fn basics() {
        let r = ring();
        let th = GrassmannElement::gen(&r, "theta").unwrap();
        let et = GrassmannElement::gen(&r, "eta").unwrap();
        assert!((&th * &th).is_zero());
        assert_eq!(&th * &et, (&et * &th).neg());
        let l1 = GrassmannElement::gen(&r, "lam1").unwrap();
        let l2 = GrassmannElement::gen(&r, "lam2").unwrap();
        assert!((&l1 * &l2).is_zero());
    }

    #[test]
    fn substitution_examples() {
        let r = ring();
        let th = GrassmannElement::gen(&r, "theta").unwrap();
        let et = GrassmannElement::gen(&r, "eta").unwrap();
        let l1 = GrassmannElement::gen(&r, "lam1").unwrap();
        // θη with θ ↦ λ₁ + η gives λ₁η.
        let mut map = HashMap::new();
        map.insert("theta".to_string(), &l1 + &et);
        let x = (&th * &et).substitute(&map).unwrap();
        assert_eq!(x, &l1 * &et);
        let mut flip = HashMap::new();
        flip.insert("lam1".to_string(), l1.neg());
        assert_eq!(l1.substitute(&flip).unwrap(), l1.neg());
        let mut kill = HashMap::new();
        kill.insert("theta".to_string(), GrassmannElement::zero(&r));
        assert!(th.scale(&Scalar::sym("a")).substitute(&kill).unwrap().is_zero());
        let mut bad = HashMap::new();
        bad.insert("theta".to_string(), GrassmannElement::one(&r));
        assert!(matches!(th.substitute(&bad), Err(Error::ParityViolation(_))));
    }

    #[test]
    fn coefficients() {
        let r = ring();
        let a = Scalar::sym("a");
        let b = Scalar::sym("b");
        let x = &GrassmannElement::scalar(&r, a.clone()) + &GrassmannElement::gen(&r, "lam1").unwrap().scale(&b);
        assert_eq!(x.coefficient(&["lam1"]).unwrap(), b);
        assert_eq!(x.coefficient(&[]).unwrap(), a);
        assert!(matches!(x.coefficient(&["zeta"]), Err(Error::UnknownMonomial(_))));
    }

    #[test]
    fn inverse_with_nilpotent_part() {
        let r = ring();
        let x = &GrassmannElement::scalar(&r, Scalar::ell())
            + &(&GrassmannElement::gen(&r, "theta").unwrap() * &GrassmannElement::gen(&r, "eta").unwrap());
        let y = x.inverse().unwrap();
        assert_eq!(&x * &y, GrassmannElement::one(&r));
        let z = GrassmannElement::scalar(&r, &Scalar::ell() + &Scalar::one());
        assert!(matches!(z.inverse(), Err(Error::NonInvertible(_))));
    }
}
