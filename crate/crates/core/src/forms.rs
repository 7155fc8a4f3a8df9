//! Differential forms on a finite model of a manifold, with coefficients in
//! a scalar ring extended by a Grassmann algebra, and matrices of such forms.
//!
//! A term is stored as `c·γ^S·μ`: a scalar, a Grassmann monomial (bit mask)
//! and a model monomial (exponent vector over the model generators), with the
//! Grassmann part written to the left. Everything is super-commutative and
//! `d` is an odd derivation that passes γ^S with the Koszul sign.

use crate::error::{Error, Result};
use crate::grassmann::{mask_sign, parity, GrassmannElement, GrassmannRing};
use crate::scalars::{Deriv, Gauss, Scalar, ScalarRing};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub type MMono = Vec<u16>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModelGen {
    pub name: String,
    pub degree: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Chart(usize),
    Cdga,
}

/// Chart(n): coordinates x1..xn of degree 0 and their differentials.
/// Cdga: generators with degrees and a differential given on generators.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ManifoldModel {
    pub kind: ModelKind,
    pub gens: Vec<ModelGen>,
    pub diff: Vec<Vec<(Gauss, MMono)>>,
    pub max_degree: u32,
}

impl ManifoldModel {
    pub fn chart(n: usize) -> Arc<Self> {
        let mut gens = Vec::new();
        let mut diff = Vec::new();
        for i in 1..=n {
            gens.push(ModelGen { name: format!("x{i}"), degree: 0 });
        }
        for i in 1..=n {
            gens.push(ModelGen { name: format!("dx{i}"), degree: 1 });
        }
        for i in 0..n {
            let mut m = vec![0u16; 2 * n];
            m[n + i] = 1;
            diff.push(vec![(Gauss::one(), m)]);
        }
        for _ in 0..n {
            diff.push(vec![]);
        }
        Arc::new(ManifoldModel { kind: ModelKind::Chart(n), gens, diff, max_degree: n as u32 })
    }

    /// Presented CDGA; `diff[i]` is d of generator i as a list of terms.
    pub fn cdga(gens: Vec<ModelGen>, diff: Vec<Vec<(Gauss, MMono)>>, max_degree: u32) -> Result<Arc<Self>> {
        if diff.len() != gens.len() {
            return Err(Error::ValidationError("one differential per generator".into()));
        }
        let m = ManifoldModel { kind: ModelKind::Cdga, gens, diff, max_degree };
        for (i, d) in m.diff.iter().enumerate() {
            for (_, mono) in d {
                if mono.len() != m.gens.len() {
                    return Err(Error::ValidationError("monomial length mismatch".into()));
                }
                if m.mono_degree(mono) != m.gens[i].degree + 1 {
                    return Err(Error::ValidationError(format!("d({}) has wrong degree", m.gens[i].name)));
                }
            }
        }
        let m = Arc::new(m);
        for i in 0..m.gens.len() {
            let g = Form::gen_in(&m, &GrassmannRing::new(ScalarRing::Base, &[]), i);
            if !g.d().d().is_zero() {
                return Err(Error::ValidationError(format!("d∘d ≠ 0 on {}", m.gens[i].name)));
            }
        }
        Ok(m)
    }

    /// Four odd generators with zero differential: the torus T⁴ model.
    pub fn torus(n: usize) -> Arc<Self> {
        let gens = (1..=n).map(|i| ModelGen { name: format!("e{i}"), degree: 1 }).collect();
        ManifoldModel::cdga(gens, vec![vec![]; n], n as u32).expect("torus model is valid")
    }

    pub fn is_chart(&self) -> Option<usize> {
        match self.kind {
            ModelKind::Chart(n) => Some(n),
            ModelKind::Cdga => None,
        }
    }
    pub fn index(&self, name: &str) -> Option<usize> {
        self.gens.iter().position(|g| g.name == name)
    }
    pub fn one(&self) -> MMono {
        vec![0; self.gens.len()]
    }
    pub fn mono_degree(&self, m: &MMono) -> u32 {
        m.iter().zip(&self.gens).map(|(e, g)| *e as u32 * g.degree).sum()
    }
    pub fn mono_parity(&self, m: &MMono) -> u32 {
        m.iter().zip(&self.gens).filter(|(_, g)| g.degree % 2 == 1).map(|(e, _)| *e as u32).sum::<u32>() % 2
    }
    fn odd(&self, i: usize) -> bool {
        self.gens[i].degree % 2 == 1
    }
    /// Product of canonical monomials with its sign, or None if it vanishes.
    pub fn mono_mul(&self, a: &MMono, b: &MMono) -> Option<(i32, MMono)> {
        let mut out = a.clone();
        let mut swaps = 0u32;
        // Count odd generators of `a` strictly after each odd generator of `b`.
        let n = a.len();
        let mut suffix = vec![0u32; n + 1];
        for i in (0..n).rev() {
            suffix[i] = suffix[i + 1] + if self.odd(i) { a[i] as u32 } else { 0 };
        }
        for j in 0..n {
            if b[j] == 0 {
                continue;
            }
            if self.odd(j) {
                if a[j] > 0 {
                    return None;
                }
                swaps += suffix[j + 1] * b[j] as u32;
            }
            out[j] += b[j];
        }
        if self.mono_degree(&out) > self.max_degree {
            return None;
        }
        Some((if swaps.is_multiple_of(2) { 1 } else { -1 }, out))
    }
    /// d of a canonical monomial.
    pub fn d_mono(&self, m: &MMono) -> Vec<(Gauss, MMono)> {
        let mut out = Vec::new();
        let n = m.len();
        for i in 0..n {
            let e = m[i];
            if e == 0 || self.diff[i].is_empty() {
                continue;
            }
            let mut prefix = self.one();
            prefix[..i].copy_from_slice(&m[..i]);
            let mut suffix = self.one();
            suffix[i + 1..].copy_from_slice(&m[i + 1..]);
            let sign_p: i64 = if self.mono_parity(&prefix) == 1 { -1 } else { 1 };
            // prefix · g^{e−1} is canonical with sign +1.
            let mut head = prefix.clone();
            head[i] = e - 1;
            let factor = if self.odd(i) { 1 } else { e as i64 };
            for (c, dg) in &self.diff[i] {
                let Some((s1, hm)) = self.mono_mul(&head, dg) else { continue };
                let Some((s2, full)) = self.mono_mul(&hm, &suffix) else { continue };
                let coef = c.mul(&Gauss::int(sign_p * factor * (s1 * s2) as i64));
                out.push((coef, full));
            }
        }
        out
    }
    pub fn mono_name(&self, m: &MMono) -> String {
        let mut parts = Vec::new();
        for (i, e) in m.iter().enumerate() {
            if *e == 0 {
                continue;
            }
            let name = match self.kind {
                ModelKind::Chart(n) if i >= n => format!("d(x{})", i - n + 1),
                _ => self.gens[i].name.clone(),
            };
            parts.push(if *e == 1 { name } else { format!("{name}^{e}") });
        }
        parts.join("*")
    }
}

// ---------------------------------------------------------------- Form

pub type TermKey = (u64, MMono);

#[derive(Clone, Debug)]
pub struct Form {
    pub model: Arc<ManifoldModel>,
    pub gr: Arc<GrassmannRing>,
    pub ring: ScalarRing,
    pub terms: BTreeMap<TermKey, Scalar>,
}

impl PartialEq for Form {
    fn eq(&self, o: &Self) -> bool {
        self.terms == o.terms
    }
}
impl Eq for Form {}

fn add_into(t: &mut BTreeMap<TermKey, Scalar>, k: TermKey, c: Scalar) {
    if c.is_zero() {
        return;
    }
    match t.get_mut(&k) {
        Some(x) => {
            *x = &*x + &c;
            if x.is_zero() {
                t.remove(&k);
            }
        }
        None => {
            t.insert(k, c);
        }
    }
}

impl Form {
    pub fn zero(model: &Arc<ManifoldModel>, gr: &Arc<GrassmannRing>) -> Form {
        Form { model: model.clone(), gr: gr.clone(), ring: gr.base, terms: BTreeMap::new() }
    }
    pub fn zero_like(&self) -> Form {
        Form { model: self.model.clone(), gr: self.gr.clone(), ring: self.ring, terms: BTreeMap::new() }
    }
    pub fn scalar(model: &Arc<ManifoldModel>, gr: &Arc<GrassmannRing>, c: Scalar) -> Form {
        let mut f = Form::zero(model, gr);
        f.ring = gr.base.join(c.ring()).unwrap_or(c.ring());
        add_into(&mut f.terms, (0, model.one()), c);
        f
    }
    pub fn one(model: &Arc<ManifoldModel>, gr: &Arc<GrassmannRing>) -> Form {
        Form::scalar(model, gr, Scalar::one())
    }
    pub fn scalar_like(&self, c: Scalar) -> Form {
        let mut f = Form::scalar(&self.model, &self.gr, c);
        f.ring = self.ring.join(f.ring).unwrap_or(f.ring);
        f
    }
    pub fn term(model: &Arc<ManifoldModel>, gr: &Arc<GrassmannRing>, mask: u64, mono: MMono, c: Scalar) -> Form {
        let mut f = Form::scalar(model, gr, Scalar::zero());
        f.ring = gr.base.join(c.ring()).unwrap_or(c.ring());
        if !gr.killed(mask) {
            add_into(&mut f.terms, (mask, mono), c);
        }
        f
    }
    pub fn gen_in(model: &Arc<ManifoldModel>, gr: &Arc<GrassmannRing>, i: usize) -> Form {
        let mut m = model.one();
        m[i] = 1;
        Form::term(model, gr, 0, m, Scalar::one())
    }
    /// A model generator by name; on charts also accepts "dx3".
    pub fn gen(model: &Arc<ManifoldModel>, gr: &Arc<GrassmannRing>, name: &str) -> Result<Form> {
        let i = model.index(name).ok_or_else(|| Error::UnknownMonomial(name.to_string()))?;
        Ok(Form::gen_in(model, gr, i))
    }
    /// Chart coordinate x_i (1-based).
    pub fn x(model: &Arc<ManifoldModel>, gr: &Arc<GrassmannRing>, i: usize) -> Form {
        Form::gen_in(model, gr, i - 1)
    }
    /// Chart differential dx_i (1-based).
    pub fn dx(model: &Arc<ManifoldModel>, gr: &Arc<GrassmannRing>, i: usize) -> Form {
        let n = model.is_chart().expect("dx on a chart");
        Form::gen_in(model, gr, n + i - 1)
    }
    /// Odd Grassmann generator as a form.
    pub fn grass(model: &Arc<ManifoldModel>, gr: &Arc<GrassmannRing>, name: &str) -> Result<Form> {
        let m = gr.mask_of(&[name])?;
        Ok(Form::term(model, gr, m, model.one(), Scalar::one()))
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
    fn compatible(&self, o: &Form) -> Result<ScalarRing> {
        if !(Arc::ptr_eq(&self.model, &o.model) || self.model == o.model) {
            return Err(Error::RingMismatch("forms on different models".into()));
        }
        if !(Arc::ptr_eq(&self.gr, &o.gr) || self.gr == o.gr) {
            return Err(Error::RingMismatch("forms over different Grassmann rings".into()));
        }
        self.ring.join(o.ring)
    }
    pub fn checked_add(&self, o: &Form) -> Result<Form> {
        let ring = self.compatible(o)?;
        let mut t = self.terms.clone();
        for (k, c) in &o.terms {
            add_into(&mut t, k.clone(), c.clone());
        }
        Ok(Form { model: self.model.clone(), gr: self.gr.clone(), ring, terms: t })
    }
    pub fn checked_mul(&self, o: &Form) -> Result<Form> {
        let ring = self.compatible(o)?;
        let mut t = BTreeMap::new();
        for ((sa, ma), ca) in &self.terms {
            let pa = self.model.mono_parity(ma);
            for ((sb, mb), cb) in &o.terms {
                let gs = mask_sign(*sa, *sb);
                if gs == 0 || self.gr.killed(sa | sb) {
                    continue;
                }
                let Some((ms, m)) = self.model.mono_mul(ma, mb) else { continue };
                let cross = if pa == 1 && parity(*sb) == 1 { -1 } else { 1 };
                let c = ca.checked_mul(cb)?;
                add_into(&mut t, (sa | sb, m), if gs * ms * cross < 0 { c.neg() } else { c });
            }
        }
        Ok(Form { model: self.model.clone(), gr: self.gr.clone(), ring, terms: t })
    }
    pub fn neg(&self) -> Form {
        self.map_coeffs(|c| Some(c.neg()))
    }
    pub fn scale(&self, s: &Scalar) -> Form {
        let ring = self.ring.join(s.ring()).unwrap_or_else(|e| panic!("{e}"));
        let mut f = self.map_coeffs(|c| Some(c * s));
        f.ring = ring;
        f
    }
    pub fn map_coeffs(&self, f: impl Fn(&Scalar) -> Option<Scalar>) -> Form {
        let mut t = BTreeMap::new();
        for (k, c) in &self.terms {
            if let Some(x) = f(c) {
                add_into(&mut t, k.clone(), x);
            }
        }
        Form { model: self.model.clone(), gr: self.gr.clone(), ring: self.ring, terms: t }
    }
    pub fn try_map_coeffs(&self, f: impl Fn(&Scalar) -> Result<Scalar>) -> Result<Form> {
        let mut t = BTreeMap::new();
        let mut ring = self.ring;
        for (k, c) in &self.terms {
            let x = f(c)?;
            ring = ring.join(x.ring()).unwrap_or(x.ring());
            add_into(&mut t, k.clone(), x);
        }
        Ok(Form { model: self.model.clone(), gr: self.gr.clone(), ring, terms: t })
    }
    /// Keep terms satisfying a predicate on (mask, monomial).
    pub fn filter(&self, p: impl Fn(u64, &MMono) -> bool) -> Form {
        let mut f = self.zero_like();
        for ((s, m), c) in &self.terms {
            if p(*s, m) {
                f.terms.insert((*s, m.clone()), c.clone());
            }
        }
        f
    }
    pub fn with_ring(mut self, r: ScalarRing) -> Result<Form> {
        self.ring = self.ring.join(r)?;
        Ok(self)
    }

    pub fn term_degree(&self, k: &TermKey) -> u32 {
        self.model.mono_degree(&k.1)
    }
    pub fn term_parity(&self, k: &TermKey) -> u32 {
        (parity(k.0) + self.model.mono_parity(&k.1)) % 2
    }
    /// Component of model degree k.
    pub fn degree_part(&self, k: u32) -> Form {
        let model = self.model.clone();
        self.filter(|_, m| model.mono_degree(m) == k)
    }
    pub fn degrees(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.terms.keys().map(|k| self.term_degree(k)).collect();
        v.sort();
        v.dedup();
        v
    }
    pub fn max_degree(&self) -> Option<u32> {
        self.terms.keys().map(|k| self.term_degree(k)).max()
    }
    /// True when every term has total parity `p`.
    pub fn has_parity(&self, p: u32) -> bool {
        self.terms.keys().all(|k| self.term_parity(k) == p)
    }
    /// Negate odd terms: the sign (−1)^{|ω|} applied termwise.
    pub fn parity_twist(&self) -> Form {
        let mut f = self.zero_like();
        for (k, c) in &self.terms {
            f.terms.insert(k.clone(), if self.term_parity(k) == 1 { c.neg() } else { c.clone() });
        }
        f
    }
    /// The degree derivation: multiplies a k-form by k.
    pub fn deg_op(&self) -> Form {
        let mut f = self.zero_like();
        for (k, c) in &self.terms {
            let d = self.term_degree(k);
            if d != 0 {
                f.terms.insert(k.clone(), c.scale(&Gauss::int(d as i64)));
            }
        }
        f
    }

    /// de Rham differential.
    pub fn d(&self) -> Form {
        let mut t = BTreeMap::new();
        for ((s, m), c) in &self.terms {
            let sign = if parity(*s) == 1 { -1 } else { 1 };
            for (g, dm) in self.model.d_mono(m) {
                let coef = c.scale(&g.mul(&Gauss::int(sign)));
                add_into(&mut t, (*s, dm), coef);
            }
        }
        Form { model: self.model.clone(), gr: self.gr.clone(), ring: self.ring, terms: t }
    }
    /// Apply a scalar derivation to the coefficients.
    pub fn derive(&self, d: &Deriv) -> Result<Form> {
        self.try_map_coeffs(|c| c.derive(d))
    }
    /// Part with the given Grassmann monomial, as a form with no Grassmann factor.
    pub fn grass_coeff(&self, mask: u64) -> Form {
        let mut f = self.zero_like();
        for ((s, m), c) in &self.terms {
            if *s == mask {
                f.terms.insert((0, m.clone()), c.clone());
            }
        }
        f
    }
    pub fn grass_coeff_named(&self, names: &[&str]) -> Result<Form> {
        Ok(self.grass_coeff(self.gr.mask_of(names)?))
    }
    /// Left derivative in an odd Grassmann generator.
    pub fn grass_left_partial(&self, name: &str) -> Result<Form> {
        let i = self.gr.index(name).ok_or_else(|| Error::UnknownMonomial(name.to_string()))?;
        let bit = 1u64 << i;
        let mut f = self.zero_like();
        for ((s, m), c) in &self.terms {
            if s & bit != 0 {
                let rest = s & !bit;
                let c = if mask_sign(bit, rest) < 0 { c.neg() } else { c.clone() };
                add_into(&mut f.terms, (rest, m.clone()), c);
            }
        }
        Ok(f)
    }
    /// Drop every term containing the named generator (set it to zero).
    pub fn kill_generator(&self, name: &str) -> Result<Form> {
        let i = self.gr.index(name).ok_or_else(|| Error::UnknownMonomial(name.to_string()))?;
        Ok(self.filter(|s, _| s & (1 << i) == 0))
    }
    /// A Grassmann element viewed as a 0-form.
    pub fn from_grassmann(model: &Arc<ManifoldModel>, x: &GrassmannElement) -> Form {
        let mut f = Form::zero(model, &x.ring);
        for (m, c) in &x.terms {
            f.ring = f.ring.join(c.ring()).unwrap_or(f.ring);
            add_into(&mut f.terms, (*m, model.one()), c.clone());
        }
        f
    }
    /// Re-home a form into a larger Grassmann ring by generator name.
    pub fn into_grassmann(&self, gr: &Arc<GrassmannRing>) -> Result<Form> {
        let mut f = Form { model: self.model.clone(), gr: gr.clone(), ring: self.ring, terms: BTreeMap::new() };
        for ((s, m), c) in &self.terms {
            let mut names = Vec::new();
            for i in 0..self.gr.gens.len() {
                if s & (1 << i) != 0 {
                    names.push(self.gr.gens[i].as_str());
                }
            }
            // Names appear in source order; re-sort in the target order.
            let mut idx: Vec<usize> =
                names.iter().map(|n| gr.index(n).ok_or_else(|| Error::UnknownMonomial(n.to_string()))).collect::<Result<_>>()?;
            let mut sign = 1;
            for a in 0..idx.len() {
                for b in a + 1..idx.len() {
                    if idx[a] > idx[b] {
                        sign = -sign;
                    }
                }
            }
            idx.sort();
            let mask = idx.iter().fold(0u64, |acc, i| acc | (1 << i));
            if !gr.killed(mask) {
                add_into(&mut f.terms, (mask, m.clone()), if sign < 0 { c.neg() } else { c.clone() });
            }
        }
        Ok(f)
    }

    /// Multiplies the k-form component by base^{(k+shift)/2}.
    pub fn scale_by_power(&self, base: &Scalar, shift: u32) -> Result<Form> {
        let mut out = self.zero_like();
        for k in self.degrees() {
            let p = base.pow_halves((k + shift) as i32)?;
            out = out.checked_add(&self.degree_part(k).scale(&p))?;
        }
        Ok(out)
    }

    /// Radial homotopy on a chart, without a closedness check: dP + Pd = id
    /// on positive degrees.
    pub fn homotopy_raw(&self) -> Result<Form> {
        let n = self.model.is_chart().ok_or(Error::NotChart)?;
        let mut t = BTreeMap::new();
        for ((s, m), c) in &self.terms {
            let k: u32 = m[n..].iter().map(|&e| e as u32).sum();
            if k == 0 {
                continue;
            }
            let a: u32 = m[..n].iter().map(|&e| e as u32).sum();
            let w = Gauss::frac(1, (a + k) as i64);
            let gsign = if parity(*s) == 1 { -1 } else { 1 };
            let mut r = 0i64;
            for i in 0..n {
                if m[n + i] == 0 {
                    continue;
                }
                let sign = if r % 2 == 0 { 1 } else { -1 };
                r += 1;
                let mut mm = m.clone();
                mm[n + i] = 0;
                mm[i] += 1;
                add_into(&mut t, (*s, mm), c.scale(&w.mul(&Gauss::int(sign * gsign))));
            }
        }
        Ok(Form { model: self.model.clone(), gr: self.gr.clone(), ring: self.ring, terms: t })
    }

    /// Returns η with dη = ω for a closed ω on a chart.
    pub fn poincare_homotopy(&self) -> Result<Form> {
        self.model.is_chart().ok_or(Error::NotChart)?;
        if !self.d().is_zero() {
            return Err(Error::NotClosed);
        }
        self.homotopy_raw()
    }
}

macro_rules! fbin {
    ($tr:ident, $f:ident, $body:expr) => {
        impl std::ops::$tr<&Form> for &Form {
            type Output = Form;
            fn $f(self, o: &Form) -> Form {
                let g: fn(&Form, &Form) -> Result<Form> = $body;
                g(self, o).unwrap_or_else(|e| panic!("{e}"))
            }
        }
        impl std::ops::$tr<Form> for Form {
            type Output = Form;
            fn $f(self, o: Form) -> Form {
                let g: fn(&Form, &Form) -> Result<Form> = $body;
                g(&self, &o).unwrap_or_else(|e| panic!("{e}"))
            }
        }
    };
}
fbin!(Add, add, |a, b| a.checked_add(b));
fbin!(Sub, sub, |a, b| a.checked_add(&b.neg()));
fbin!(Mul, mul, |a, b| a.checked_mul(b));

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        for ((s, m), c) in &self.terms {
            let mut factors = Vec::new();
            if !c.is_one_scalar() {
                factors.push(format!("({c})"));
            }
            if *s != 0 {
                factors.push(self.gr.mask_name(*s));
            }
            let mn = self.model.mono_name(m);
            if !mn.is_empty() {
                factors.push(mn);
            }
            if factors.is_empty() {
                factors.push("1".into());
            }
            parts.push(factors.join("*"));
        }
        write!(f, "{}", parts.join(" + "))
    }
}

impl Scalar {
    fn is_one_scalar(&self) -> bool {
        *self == Scalar::one()
    }
}

/// Free-function forms of the operations, for the public API.
pub fn d(w: &Form) -> Form {
    w.d()
}
pub fn scale_by_power(base: &Scalar, w: &Form, shift: u32) -> Result<Form> {
    w.scale_by_power(base, shift)
}
pub fn poincare_homotopy(w: &Form) -> Result<Form> {
    w.poincare_homotopy()
}

// ---------------------------------------------------------------- FormMatrix

/// Square matrix of forms on C^{p|q}; index i has parity 0 for i < p.
#[derive(Clone, Debug, PartialEq)]
pub struct FormMatrix {
    pub p: usize,
    pub q: usize,
    pub rows: Vec<Vec<Form>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpMode {
    ExactNilpotent,
    ScalarSplit,
}

impl FormMatrix {
    pub fn new(p: usize, q: usize, rows: Vec<Vec<Form>>) -> Result<Self> {
        let n = p + q;
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::NotSquare);
        }
        Ok(FormMatrix { p, q, rows })
    }
    pub fn from_rows(rows: Vec<Vec<Form>>) -> Result<Self> {
        let n = rows.len();
        FormMatrix::new(n, 0, rows)
    }
    pub fn zero(p: usize, q: usize, model: &Arc<ManifoldModel>, gr: &Arc<GrassmannRing>) -> Self {
        let n = p + q;
        FormMatrix { p, q, rows: vec![vec![Form::zero(model, gr); n]; n] }
    }
    pub fn identity(p: usize, q: usize, model: &Arc<ManifoldModel>, gr: &Arc<GrassmannRing>) -> Self {
        let mut m = FormMatrix::zero(p, q, model, gr);
        for i in 0..p + q {
            m.rows[i][i] = Form::one(model, gr);
        }
        m
    }
    pub fn n(&self) -> usize {
        self.rows.len()
    }
    pub fn par(&self, i: usize) -> u32 {
        if i < self.p {
            0
        } else {
            1
        }
    }
    fn template(&self) -> &Form {
        &self.rows[0][0]
    }
    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|r| r.iter().all(|f| f.is_zero()))
    }
    pub fn map(&self, f: impl Fn(&Form) -> Form) -> FormMatrix {
        FormMatrix { p: self.p, q: self.q, rows: self.rows.iter().map(|r| r.iter().map(&f).collect()).collect() }
    }
    pub fn try_map(&self, f: impl Fn(&Form) -> Result<Form>) -> Result<FormMatrix> {
        let rows = self.rows.iter().map(|r| r.iter().map(&f).collect::<Result<Vec<_>>>()).collect::<Result<Vec<_>>>()?;
        Ok(FormMatrix { p: self.p, q: self.q, rows })
    }
    pub fn add(&self, o: &FormMatrix) -> Result<FormMatrix> {
        if self.n() != o.n() {
            return Err(Error::NotSquare);
        }
        let mut rows = self.rows.clone();
        for i in 0..self.n() {
            for j in 0..self.n() {
                rows[i][j] = rows[i][j].checked_add(&o.rows[i][j])?;
            }
        }
        Ok(FormMatrix { p: self.p, q: self.q, rows })
    }
    pub fn sub(&self, o: &FormMatrix) -> Result<FormMatrix> {
        self.add(&o.map(|f| f.neg()))
    }
    pub fn scale(&self, s: &Scalar) -> FormMatrix {
        self.map(|f| f.scale(s))
    }
    /// Product with the sign (−1)^{(p_i+p_j)|B_jk|} from moving the
    /// elementary matrix E_ij past the form in B_jk.
    pub fn mul(&self, o: &FormMatrix) -> Result<FormMatrix> {
        let n = self.n();
        if o.n() != n || o.p != self.p {
            return Err(Error::NotSquare);
        }
        let mut rows = vec![vec![self.template().zero_like(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let a = &self.rows[i][j];
                if a.is_zero() {
                    continue;
                }
                let twist = (self.par(i) + self.par(j)) % 2 == 1;
                for k in 0..n {
                    let b = &o.rows[j][k];
                    if b.is_zero() {
                        continue;
                    }
                    let prod = if twist { a.checked_mul(&b.parity_twist())? } else { a.checked_mul(b)? };
                    rows[i][k] = rows[i][k].checked_add(&prod)?;
                }
            }
        }
        Ok(FormMatrix { p: self.p, q: self.q, rows })
    }
    /// Entrywise d.
    pub fn d(&self) -> FormMatrix {
        self.map(|f| f.d())
    }
    pub fn supertrace(&self) -> Result<Form> {
        if self.rows.iter().any(|r| r.len() != self.n()) {
            return Err(Error::NotSquare);
        }
        let mut acc = self.template().zero_like();
        for i in 0..self.n() {
            let e = &self.rows[i][i];
            acc = if self.par(i) == 0 { acc.checked_add(e)? } else { acc.checked_add(&e.neg())? };
        }
        Ok(acc)
    }
    fn check_antisymmetric(&self) -> Result<()> {
        let n = self.n();
        for i in 0..n {
            for j in 0..n {
                if self.rows[i][j] != self.rows[j][i].neg() {
                    return Err(Error::NotAntisymmetric);
                }
            }
        }
        for r in &self.rows {
            for f in r {
                if !f.has_parity(0) {
                    return Err(Error::ParityViolation("Pfaffian entries must be even".into()));
                }
            }
        }
        Ok(())
    }
    fn minor(&self, skip: &[usize]) -> FormMatrix {
        let keep: Vec<usize> = (0..self.n()).filter(|i| !skip.contains(i)).collect();
        let rows = keep.iter().map(|&i| keep.iter().map(|&j| self.rows[i][j].clone()).collect()).collect();
        FormMatrix { p: keep.len(), q: 0, rows }
    }
    /// Pfaffian by expansion along the first row.
    pub fn pfaffian(&self) -> Result<Form> {
        if self.n() % 2 == 1 {
            return Err(Error::OddDimension);
        }
        self.check_antisymmetric()?;
        Ok(self.pf_rec())
    }
    fn pf_rec(&self) -> Form {
        let n = self.n();
        if n == 0 {
            return Form::one(&self.template_or_panic().model, &self.template_or_panic().gr);
        }
        if n == 2 {
            return self.rows[0][1].clone();
        }
        let mut acc = self.rows[0][0].zero_like();
        for j in 1..n {
            let a = &self.rows[0][j];
            if a.is_zero() {
                continue;
            }
            let sub = self.minor(&[0, j]).pf_rec();
            let t = a * &sub;
            acc = if j % 2 == 1 { &acc + &t } else { &acc - &t };
        }
        acc
    }
    fn template_or_panic(&self) -> &Form {
        &self.rows[0][0]
    }
    /// Determinant by cofactor expansion; entries must be even.
    pub fn det(&self) -> Result<Form> {
        for r in &self.rows {
            for f in r {
                if !f.has_parity(0) {
                    return Err(Error::ParityViolation("determinant entries must be even".into()));
                }
            }
        }
        Ok(self.det_rec())
    }
    fn det_rec(&self) -> Form {
        let n = self.n();
        if n == 1 {
            return self.rows[0][0].clone();
        }
        let mut acc = self.rows[0][0].zero_like();
        for j in 0..n {
            let a = &self.rows[0][j];
            if a.is_zero() {
                continue;
            }
            let keep: Vec<usize> = (0..n).filter(|&c| c != j).collect();
            let rows: Vec<Vec<Form>> = (1..n).map(|i| keep.iter().map(|&c| self.rows[i][c].clone()).collect()).collect();
            let sub = FormMatrix { p: n - 1, q: 0, rows }.det_rec();
            let t = a * &sub;
            acc = if j % 2 == 0 { &acc + &t } else { &acc - &t };
        }
        acc
    }

    /// Upper bound on the nilpotency index used by the exact series.
    fn nil_bound(&self) -> usize {
        let t = self.template();
        (self.n() + 1) * (t.model.max_degree as usize + t.gr.gens.len() + 2)
    }

    /// Σ M^k/k! until the powers vanish.
    fn exp_nilpotent(&self) -> Result<FormMatrix> {
        let t = self.template();
        let mut acc = FormMatrix::identity(self.p, self.q, &t.model, &t.gr);
        let mut pw = acc.clone();
        for k in 1..=self.nil_bound() {
            pw = pw.mul(self)?.scale(&Scalar::frac(1, k as i64));
            if pw.is_zero() {
                return Ok(acc);
            }
            acc = acc.add(&pw)?;
        }
        Err(Error::NonTerminating)
    }

    /// Matrix exponential in an exact mode.
    pub fn exp_series(&self, mode: ExpMode) -> Result<FormMatrix> {
        match mode {
            ExpMode::ExactNilpotent => self.exp_nilpotent(),
            ExpMode::ScalarSplit => {
                let n = self.n();
                let one = self.template().model.one();
                let c = self.rows[0][0].terms.get(&(0, one.clone())).cloned().unwrap_or_else(Scalar::zero);
                let mut shifted = self.clone();
                for i in 0..n {
                    let ci = self.rows[i][i].terms.get(&(0, one.clone())).cloned().unwrap_or_else(Scalar::zero);
                    if ci != c {
                        return Err(Error::NonTerminating);
                    }
                    let mut e = self.rows[i][i].clone();
                    e.terms.remove(&(0, one.clone()));
                    shifted.rows[i][i] = e;
                }
                let e = shifted.exp_nilpotent()?;
                Ok(e.scale(&Scalar::exp_of(&c)))
            }
        }
    }
}

pub fn supertrace(m: &FormMatrix) -> Result<Form> {
    m.supertrace()
}
pub fn pfaffian(m: &FormMatrix) -> Result<Form> {
    m.pfaffian()
}
pub fn exp_series(m: &FormMatrix, mode: ExpMode) -> Result<FormMatrix> {
    m.exp_series(mode)
}

// ---------------------------------------------------------------- numerics

/// Complex-valued element of Λ(dx¹..dxⁿ) at a fixed point, indexed by dx mask.
#[derive(Clone, Debug, PartialEq)]
pub struct NumForm {
    pub n: usize,
    pub c: Vec<Complex64>,
}

impl NumForm {
    pub fn zero(n: usize) -> Self {
        NumForm { n, c: vec![Complex64::new(0.0, 0.0); 1 << n] }
    }
    pub fn scalar(n: usize, z: Complex64) -> Self {
        let mut f = NumForm::zero(n);
        f.c[0] = z;
        f
    }
    pub fn add(&self, o: &NumForm) -> NumForm {
        NumForm { n: self.n, c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect() }
    }
    pub fn sub(&self, o: &NumForm) -> NumForm {
        NumForm { n: self.n, c: self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect() }
    }
    pub fn scale(&self, z: Complex64) -> NumForm {
        NumForm { n: self.n, c: self.c.iter().map(|a| a * z).collect() }
    }
    pub fn mul(&self, o: &NumForm) -> NumForm {
        let mut out = NumForm::zero(self.n);
        for (a, x) in self.c.iter().enumerate() {
            if x.norm() == 0.0 {
                continue;
            }
            for (b, y) in o.c.iter().enumerate() {
                let s = mask_sign(a as u64, b as u64);
                if s != 0 && y.norm() != 0.0 {
                    out.c[a | b] += x * y * s as f64;
                }
            }
        }
        out
    }
    pub fn parity_twist(&self) -> NumForm {
        NumForm {
            n: self.n,
            c: self.c.iter().enumerate().map(|(m, z)| if (m as u32).count_ones() % 2 == 1 { -z } else { *z }).collect(),
        }
    }
    pub fn norm(&self) -> f64 {
        self.c.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
    /// Evaluate an exact chart form (no Grassmann part) at a point.
    pub fn from_form(f: &Form, x: &[f64], at: &crate::scalars::Assignment) -> Result<NumForm> {
        let n = f.model.is_chart().ok_or(Error::NotChart)?;
        let mut out = NumForm::zero(n);
        for ((s, m), c) in &f.terms {
            if *s != 0 {
                return Err(Error::WrongRing("numeric forms have no odd parameters".into()));
            }
            let mut v = c.eval(at)?;
            let mut mask = 0usize;
            for i in 0..n {
                v *= x[i].powi(m[i] as i32);
                if m[n + i] > 0 {
                    mask |= 1 << i;
                }
            }
            out.c[mask] += v;
        }
        Ok(out)
    }
}

/// Matrix of numeric forms with the same grading conventions as FormMatrix.
#[derive(Clone, Debug)]
pub struct NumMatrix {
    pub p: usize,
    pub q: usize,
    pub rows: Vec<Vec<NumForm>>,
}

impl NumMatrix {
    pub fn n(&self) -> usize {
        self.rows.len()
    }
    fn dim(&self) -> usize {
        self.rows[0][0].n
    }
    pub fn identity(p: usize, q: usize, dim: usize) -> Self {
        let n = p + q;
        let mut rows = vec![vec![NumForm::zero(dim); n]; n];
        for (i, r) in rows.iter_mut().enumerate() {
            r[i] = NumForm::scalar(dim, Complex64::new(1.0, 0.0));
        }
        NumMatrix { p, q, rows }
    }
    pub fn from_matrix(m: &FormMatrix, x: &[f64], at: &crate::scalars::Assignment) -> Result<Self> {
        let rows = m
            .rows
            .iter()
            .map(|r| r.iter().map(|f| NumForm::from_form(f, x, at)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(NumMatrix { p: m.p, q: m.q, rows })
    }
    fn par(&self, i: usize) -> u32 {
        if i < self.p {
            0
        } else {
            1
        }
    }
    pub fn add(&self, o: &NumMatrix) -> NumMatrix {
        let rows = self.rows.iter().zip(&o.rows).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.add(y)).collect()).collect();
        NumMatrix { p: self.p, q: self.q, rows }
    }
    pub fn scale(&self, z: Complex64) -> NumMatrix {
        let rows = self.rows.iter().map(|r| r.iter().map(|x| x.scale(z)).collect()).collect();
        NumMatrix { p: self.p, q: self.q, rows }
    }
    pub fn mul(&self, o: &NumMatrix) -> NumMatrix {
        let n = self.n();
        let mut rows = vec![vec![NumForm::zero(self.dim()); n]; n];
        for i in 0..n {
            for j in 0..n {
                let twist = (self.par(i) + self.par(j)) % 2 == 1;
                for k in 0..n {
                    let b = if twist { o.rows[j][k].parity_twist() } else { o.rows[j][k].clone() };
                    rows[i][k] = rows[i][k].add(&self.rows[i][j].mul(&b));
                }
            }
        }
        NumMatrix { p: self.p, q: self.q, rows }
    }
    pub fn norm(&self) -> f64 {
        self.rows.iter().flat_map(|r| r.iter().map(|f| f.norm())).fold(0.0, f64::max) * self.n() as f64
    }
    /// Scaling and squaring with a Taylor core.
    pub fn exp(&self) -> NumMatrix {
        let nrm = self.norm();
        let s = if nrm > 0.5 { (nrm / 0.5).log2().ceil() as i32 } else { 0 };
        let a = self.scale(Complex64::new(0.5f64.powi(s), 0.0));
        let mut acc = NumMatrix::identity(self.p, self.q, self.dim());
        let mut term = acc.clone();
        for k in 1..=30 {
            term = term.mul(&a).scale(Complex64::new(1.0 / k as f64, 0.0));
            acc = acc.add(&term);
        }
        for _ in 0..s {
            acc = acc.mul(&acc);
        }
        acc
    }
    pub fn supertrace(&self) -> NumForm {
        let mut acc = NumForm::zero(self.dim());
        for i in 0..self.n() {
            acc = if self.par(i) == 0 { acc.add(&self.rows[i][i]) } else { acc.sub(&self.rows[i][i]) };
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(n: usize) -> (Arc<ManifoldModel>, Arc<GrassmannRing>) {
        (ManifoldModel::chart(n), GrassmannRing::new(ScalarRing::Base, &["eta", "lam"]))
    }

    #[test]
    fn d_examples() {
        let (m, g) = setup(4);
        let w = &Form::x(&m, &g, 1) * &Form::dx(&m, &g, 2);
        assert_eq!(w.d(), &Form::dx(&m, &g, 1) * &Form::dx(&m, &g, 2));
        assert!(Form::scalar(&m, &g, Scalar::int(3)).d().is_zero());
        let top = &(&Form::dx(&m, &g, 1) * &Form::dx(&m, &g, 2)) * &(&Form::dx(&m, &g, 3) * &Form::dx(&m, &g, 4));
        let c = Scalar::pi().pow(-2).unwrap().scale(&Gauss::frac(1, 2));
        let h = (&(&Form::x(&m, &g, 1) * &Form::dx(&m, &g, 2)) * &(&Form::dx(&m, &g, 3) * &Form::dx(&m, &g, 4))).scale(&c);
        assert_eq!(h.d(), top.scale(&c));
    }

    #[test]
    fn grassmann_koszul() {
        let (m, g) = setup(2);
        let eta = Form::grass(&m, &g, "eta").unwrap();
        let dx1 = Form::dx(&m, &g, 1);
        assert_eq!(&eta * &dx1, (&dx1 * &eta).neg());
        let w = &eta * &Form::x(&m, &g, 1);
        assert_eq!(w.d(), (&eta * &dx1).neg());
    }

    #[test]
    fn homotopy_examples() {
        let (m, g) = setup(4);
        assert_eq!(Form::dx(&m, &g, 1).poincare_homotopy().unwrap(), Form::x(&m, &g, 1));
        let top = &(&Form::dx(&m, &g, 1) * &Form::dx(&m, &g, 2)) * &(&Form::dx(&m, &g, 3) * &Form::dx(&m, &g, 4));
        let eta = top.poincare_homotopy().unwrap();
        assert_eq!(eta.d(), top);
        let bad = &Form::x(&m, &g, 1) * &Form::dx(&m, &g, 2);
        assert_eq!(bad.poincare_homotopy(), Err(Error::NotClosed));
        let t = ManifoldModel::torus(4);
        let e1 = Form::gen(&t, &g, "e1").unwrap();
        assert_eq!(e1.poincare_homotopy(), Err(Error::NotChart));
    }

    #[test]
    fn scale_by_power_examples() {
        let (m, g) = setup(2);
        let w = &Form::dx(&m, &g, 1) * &Form::dx(&m, &g, 2);
        assert_eq!(w.scale_by_power(&Scalar::ell(), 0).unwrap(), w.scale(&Scalar::ell()));
        let f = Form::x(&m, &g, 1);
        assert_eq!(f.scale_by_power(&Scalar::beta(), 0).unwrap(), f);
        assert!(matches!(f.d().scale_by_power(&Scalar::tau(), 0), Err(Error::IllegalRadicand(_))));
    }

    #[test]
    fn supertrace_examples() {
        let (m, g) = setup(2);
        assert!(FormMatrix::identity(1, 1, &m, &g).supertrace().unwrap().is_zero());
        assert_eq!(FormMatrix::identity(2, 0, &m, &g).supertrace().unwrap(), Form::scalar(&m, &g, Scalar::int(2)));
        let e = FormMatrix::identity(1, 1, &m, &g).scale(&Scalar::ell()).exp_series(ExpMode::ScalarSplit).unwrap();
        assert!(e.supertrace().unwrap().is_zero());
        assert_eq!(e.rows[0][0], Form::scalar(&m, &g, Scalar::exp_of(&Scalar::ell())));
    }

    #[test]
    fn pfaffian_examples() {
        let (m, g) = setup(4);
        let a = Form::scalar(&m, &g, Scalar::sym("a"));
        let mat = FormMatrix::from_rows(vec![vec![a.zero_like(), a.clone()], vec![a.neg(), a.zero_like()]]).unwrap();
        assert_eq!(mat.pfaffian().unwrap(), a);
        let odd = FormMatrix::from_rows(vec![vec![a.zero_like()]]).unwrap();
        assert_eq!(odd.pfaffian(), Err(Error::OddDimension));
        let nas = FormMatrix::from_rows(vec![vec![a.zero_like(), a.clone()], vec![a.clone(), a.zero_like()]]).unwrap();
        assert_eq!(nas.pfaffian(), Err(Error::NotAntisymmetric));
    }

    #[test]
    fn exp_examples() {
        let (m, g) = setup(2);
        let f = &Form::dx(&m, &g, 1) * &Form::dx(&m, &g, 2);
        let e = FormMatrix::from_rows(vec![vec![f.clone()]]).unwrap().exp_series(ExpMode::ExactNilpotent).unwrap();
        assert_eq!(e.rows[0][0], &Form::one(&m, &g) + &f);
        let z = FormMatrix::zero(2, 1, &m, &g).exp_series(ExpMode::ExactNilpotent).unwrap();
        assert_eq!(z, FormMatrix::identity(2, 1, &m, &g));
        let ell = FormMatrix::identity(1, 0, &m, &g).scale(&Scalar::ell());
        assert_eq!(ell.exp_series(ExpMode::ExactNilpotent), Err(Error::NonTerminating));
    }

    #[test]
    fn cdga_rejects_bad_differential() {
        // d(a) = b with b odd of degree 2: degrees must match (a: 1, b: 2).
        let gens = vec![ModelGen { name: "a".into(), degree: 1 }, ModelGen { name: "b".into(), degree: 2 }];
        let ok = ManifoldModel::cdga(gens.clone(), vec![vec![(Gauss::one(), vec![0, 1])], vec![]], 4);
        assert!(ok.is_ok());
        let bad = ManifoldModel::cdga(gens, vec![vec![(Gauss::one(), vec![1, 0])], vec![]], 4);
        assert!(bad.is_err());
    }
}
