//! The double complexes K (circles) and E (tori) and their total
//! differentials, cocycle tests, class reduction on charts and witness search
//! on presented CDGAs.
//!
//! A total element is a + Σ b_dir·d(dir) with dir ∈ {ℓ} for K and {v, τ̄}
//! for E; the 1-forms d(dir) sit to the right and never multiply each other.
//! The de Rham differential acts with a sign on the δ-column:
//!   d_tot(a + Σ b·d(dir)) = da + Σ (∂_dir a − db)·d(dir),
//! so that d_tot = 0 reads dZ = 0, dL = ∂ℓZ (resp. dZ_v = ∂_vZ,
//! dZ_τ̄ = ∂_τ̄Z).

use crate::error::{Error, Result};
use crate::forms::{Form, MMono, ManifoldModel};
use crate::grassmann::{parity, GrassmannRing};
use crate::scalars::{Atom, Deriv, Gauss, Mono, Scalar, ScalarRing};
use rand::Rng;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dir {
    Ell,
    V,
    TauBar,
}

impl Dir {
    pub fn name(self) -> &'static str {
        match self {
            Dir::Ell => "dl",
            Dir::V => "dv",
            Dir::TauBar => "dtaubar",
        }
    }
    fn deriv(self) -> Deriv {
        match self {
            Dir::Ell => Deriv::Ell,
            Dir::V => Deriv::V,
            Dir::TauBar => Deriv::TauBar,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Complex {
    K,
    E,
}

impl Complex {
    pub fn dirs(self) -> &'static [Dir] {
        match self {
            Complex::K => &[Dir::Ell],
            Complex::E => &[Dir::V, Dir::TauBar],
        }
    }
}

/// a + Σ b_dir·d(dir) in Tot(K) or Tot(E).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TotalElement {
    pub complex: Complex,
    pub base: Form,
    pub parts: BTreeMap<Dir, Form>,
}

impl TotalElement {
    pub fn new(complex: Complex, base: Form, parts: Vec<(Dir, Form)>) -> Result<Self> {
        let mut m = BTreeMap::new();
        for (d, f) in parts {
            if !complex.dirs().contains(&d) {
                return Err(Error::ValidationError(format!("{} is not a direction of {complex:?}", d.name())));
            }
            if !f.is_zero() {
                m.insert(d, f);
            }
        }
        Ok(TotalElement { complex, base, parts: m })
    }
    pub fn part(&self, d: Dir) -> Form {
        self.parts.get(&d).cloned().unwrap_or_else(|| self.base.zero_like())
    }
    pub fn is_zero(&self) -> bool {
        self.base.is_zero() && self.parts.values().all(Form::is_zero)
    }
    pub fn add(&self, o: &TotalElement) -> Result<TotalElement> {
        let mut parts = Vec::new();
        for d in self.complex.dirs() {
            parts.push((*d, self.part(*d).checked_add(&o.part(*d))?));
        }
        TotalElement::new(self.complex, self.base.checked_add(&o.base)?, parts)
    }
    pub fn neg(&self) -> TotalElement {
        TotalElement {
            complex: self.complex,
            base: self.base.neg(),
            parts: self.parts.iter().map(|(d, f)| (*d, f.neg())).collect(),
        }
    }
}

impl fmt::Display for TotalElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.base)?;
        for (d, p) in &self.parts {
            write!(f, " + ({p})*{}", d.name())?;
        }
        Ok(())
    }
}

pub fn total_diff(e: &TotalElement) -> Result<TotalElement> {
    let mut parts = Vec::new();
    for d in e.complex.dirs() {
        let delta = e.base.derive(&d.deriv())?;
        parts.push((*d, delta.checked_add(&e.part(*d).d().neg())?));
    }
    TotalElement::new(e.complex, e.base.d(), parts)
}

fn require_parity(f: &Form, p: u32, what: &str) -> Result<()> {
    if f.has_parity(p) {
        Ok(())
    } else {
        Err(Error::ParityViolation(format!("{what} must be {}", if p == 0 { "even" } else { "odd" })))
    }
}

fn beta_pack(f: &Form, shift: u32) -> Result<Form> {
    f.scale_by_power(&Scalar::beta(), shift)
}

fn beta_unpack(f: &Form, shift: u32) -> Result<Form> {
    f.scale_by_power(&Scalar::beta().inv()?, shift)
}

/// Degree-0 element of Tot(K): (Z, L) with β^{deg/2}Z + β^{(deg+1)/2}L dℓ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KElement {
    pub z: Form,
    pub l: Form,
}

pub fn make_k_element(z: &Form, l: &Form) -> Result<KElement> {
    require_parity(z, 0, "Z")?;
    require_parity(l, 1, "L")?;
    if !matches!(z.ring, ScalarRing::Base | ScalarRing::Circle) || !matches!(l.ring, ScalarRing::Base | ScalarRing::Circle) {
        return Err(Error::WrongRing("K-elements have circle coefficients".into()));
    }
    Ok(KElement { z: z.clone(), l: l.clone() })
}

impl KElement {
    pub fn packaged(&self) -> Result<TotalElement> {
        TotalElement::new(Complex::K, beta_pack(&self.z, 0)?, vec![(Dir::Ell, beta_pack(&self.l, 1)?)])
    }
    /// Inverse of [`KElement::packaged`].
    pub fn from_packaged(e: &TotalElement) -> Result<KElement> {
        if e.complex != Complex::K {
            return Err(Error::WrongRing("expected an element of Tot(K)".into()));
        }
        make_k_element(&beta_unpack(&e.base, 0)?, &beta_unpack(&e.part(Dir::Ell), 1)?)
    }
}

/// SL₂(ℤ) weight (k, k̄) of a coefficient function.
pub type Weight = (i32, i32);

/// Degree-0 element of Tot(E): (Z, Z_v, Z_τ̄). A nonzero `weight_shift` s
/// lowers every expected holomorphic weight by s (classes of degree −2s).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EElement {
    pub z: Form,
    pub zv: Form,
    pub ztb: Form,
    pub weight_shift: i32,
}

pub fn make_e_element(z: &Form, zv: &Form, ztb: &Form) -> Result<EElement> {
    require_parity(z, 0, "Z")?;
    require_parity(zv, 1, "Z_v")?;
    require_parity(ztb, 1, "Z_taubar")?;
    for f in [z, zv, ztb] {
        if !matches!(f.ring, ScalarRing::Base | ScalarRing::Moduli) {
            return Err(Error::WrongRing("E-elements have moduli coefficients".into()));
        }
    }
    Ok(EElement { z: z.clone(), zv: zv.clone(), ztb: ztb.clone(), weight_shift: 0 })
}

impl EElement {
    pub fn with_weight_shift(mut self, s: i32) -> Self {
        self.weight_shift = s;
        self
    }
    pub fn packaged(&self) -> Result<TotalElement> {
        TotalElement::new(
            Complex::E,
            beta_pack(&self.z, 0)?,
            vec![(Dir::V, beta_pack(&self.zv, 1)?), (Dir::TauBar, beta_pack(&self.ztb, 1)?)],
        )
    }
    pub fn from_packaged(e: &TotalElement) -> Result<EElement> {
        if e.complex != Complex::E {
            return Err(Error::WrongRing("expected an element of Tot(E)".into()));
        }
        make_e_element(&beta_unpack(&e.base, 0)?, &beta_unpack(&e.part(Dir::V), 1)?, &beta_unpack(&e.part(Dir::TauBar), 1)?)
    }
    /// Expected weights: Z in degree 2k has (k,0); Z_v and Z_τ̄ in degree
    /// 2k−1 have (k,0) and (k,2).
    pub fn expected_weight(component: Dir, degree: u32) -> Option<Weight> {
        match component {
            Dir::Ell => degree.is_multiple_of(2).then_some(((degree / 2) as i32, 0)),
            Dir::V => (degree % 2 == 1).then(|| (degree.div_ceil(2) as i32, 0)),
            Dir::TauBar => (degree % 2 == 1).then(|| (degree.div_ceil(2) as i32, 2)),
        }
    }
    /// Components violating the weight pattern, as (component, degree, found).
    pub fn weight_violations(&self) -> Result<Vec<(String, u32, Option<Weight>)>> {
        let mut bad = Vec::new();
        for (tag, which, f) in [("Z", Dir::Ell, &self.z), ("Z_v", Dir::V, &self.zv), ("Z_taubar", Dir::TauBar, &self.ztb)] {
            for deg in f.degrees() {
                let want = EElement::expected_weight(which, deg).map(|(k, kb)| (k - self.weight_shift, kb));
                for c in f.degree_part(deg).terms.values() {
                    let found = homogeneous_weight(c)?;
                    if found.is_none() || found != want {
                        bad.push((tag.to_string(), deg, found));
                        break;
                    }
                }
            }
        }
        Ok(bad)
    }
}

fn atom_weight(a: &Atom) -> Option<Weight> {
    use crate::eisenstein::EisKind;
    match a {
        Atom::Pi | Atom::V | Atom::Sym(_) => Some((0, 0)),
        Atom::Sigma => Some((-1, -1)),
        Atom::Eis(EisKind::E4) => Some((4, 0)),
        Atom::Eis(EisKind::E6) => Some((6, 0)),
        _ => None,
    }
}

const E2_COMPLETED: &str = "E2*";

fn mono_weight(m: &Mono) -> Option<Weight> {
    let (mut k, mut kb) = (0i32, 0i32);
    for (a, h) in &m.pows {
        let (wa, wb) = if let Atom::Sym(s) = a {
            if s == E2_COMPLETED {
                (2, 0)
            } else {
                (0, 0)
            }
        } else {
            atom_weight(a)?
        };
        if (wa * h) % 2 != 0 || (wb * h) % 2 != 0 {
            return None;
        }
        k += wa * h / 2;
        kb += wb * h / 2;
    }
    if let Some(arg) = &m.exp {
        for am in arg.keys() {
            if mono_weight(am)? != (0, 0) {
                return None;
            }
        }
    }
    Some((k, kb))
}

/// Weight of a moduli scalar when it is homogeneous. The quasimodular E2 is
/// rewritten as (E2 − 2πi/(τ−τ̄)) + 2πi/(τ−τ̄) first.
pub fn homogeneous_weight(c: &Scalar) -> Result<Option<Weight>> {
    use crate::eisenstein::EisKind;
    let star = Scalar::sym(E2_COMPLETED);
    let shift = &Scalar::two_pi_i() * &Scalar::sigma().inv()?;
    let c = c.substitute(
        &|a| if *a == Atom::Eis(EisKind::E2hol) { Some(&star + &shift) } else { None },
        c.ring(),
    )?;
    let mut w = None;
    for m in c.terms().keys() {
        let mw = match mono_weight(m) {
            Some(x) => x,
            None => return Ok(None),
        };
        match w {
            None => w = Some(mw),
            Some(x) if x != mw => return Ok(None),
            _ => {}
        }
    }
    Ok(Some(w.unwrap_or((0, 0))))
}

pub enum AnyElement<'a> {
    K(&'a KElement),
    E(&'a EElement),
}

pub fn is_cocycle_k(e: &KElement) -> Result<bool> {
    Ok(total_diff(&e.packaged()?)?.is_zero())
}

/// d_tot = 0 and the weight pattern holds.
pub fn is_cocycle_e(e: &EElement) -> Result<bool> {
    Ok(total_diff(&e.packaged()?)?.is_zero() && e.weight_violations()?.is_empty())
}

pub fn is_cocycle(e: AnyElement<'_>) -> Result<bool> {
    match e {
        AnyElement::K(k) => is_cocycle_k(k),
        AnyElement::E(x) => is_cocycle_e(x),
    }
}

/// Outcome of [`reduce_class`]: the constant class and the primitive used.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub class: Scalar,
    pub representative: KElement,
    pub primitive: TotalElement,
}

/// Reduce a K-cocycle on a chart to a constant: with h = P(Z_{>0}) and
/// g = P(∂ℓh − L), e − d_tot(h + g dℓ) is the 0-form part of Z, a constant.
pub fn reduce_class(e: &KElement) -> Result<Reduction> {
    e.z.model.is_chart().ok_or(Error::NotChart)?;
    if !is_cocycle_k(e)? {
        return Err(Error::NotCocycle);
    }
    let z = &e.z;
    let zpos = z.filter(|_, m| z.model.mono_degree(m) > 0);
    let h = zpos.poincare_homotopy()?;
    let rest = h.derive(&Deriv::Ell)?.checked_add(&e.l.neg())?;
    let g = rest.poincare_homotopy()?;
    let x = make_k_primitive(&h, &g)?;
    let reduced = e.packaged()?.add(&total_diff(&x)?.neg())?;
    let rep = KElement::from_packaged(&reduced)?;
    if !rep.l.is_zero() || rep.z.degrees().iter().any(|d| *d > 0) {
        return Err(Error::ValidationError("reduction left a non-constant remainder".into()));
    }
    let one = (0u64, rep.z.model.one());
    let class = rep.z.terms.get(&one).cloned().unwrap_or_else(Scalar::zero);
    if class.contains_atom(&|a| matches!(a, Atom::Ell)) {
        return Err(Error::ValidationError("reduced class depends on ℓ".into()));
    }
    Ok(Reduction { class, representative: rep, primitive: x })
}

/// β-packaged total element of degree −1 with parts (h, g).
fn make_k_primitive(h: &Form, g: &Form) -> Result<TotalElement> {
    // h odd of degree 2k−1 carries β^k; g even of degree 2k carries β^{k+1}.
    TotalElement::new(Complex::K, beta_pack(h, 1)?, vec![(Dir::Ell, beta_pack(g, 2)?)])
}

// ---------------------------------------------------------------- witness search

/// Model monomials of a given degree whose degree-0 generators have total
/// exponent at most `bound`.
fn monomial_basis(model: &ManifoldModel, degree: u32, bound: u32) -> Vec<MMono> {
    fn rec(model: &ManifoldModel, i: usize, cur: &mut MMono, deg: u32, zero_deg: u32, target: u32, bound: u32, out: &mut Vec<MMono>) {
        if i == model.gens.len() {
            if deg == target {
                out.push(cur.clone());
            }
            return;
        }
        let g = &model.gens[i];
        let max_e: u32 = if g.degree % 2 == 1 {
            1
        } else if g.degree == 0 {
            bound - zero_deg
        } else {
            (target - deg) / g.degree
        };
        for e in 0..=max_e {
            let nd = deg + e * g.degree;
            if nd > target {
                break;
            }
            cur[i] = e as u16;
            let nz = if g.degree == 0 { zero_deg + e } else { zero_deg };
            rec(model, i + 1, cur, nd, nz, target, bound, out);
        }
        cur[i] = 0;
    }
    let mut out = Vec::new();
    let mut cur = model.one();
    rec(model, 0, &mut cur, 0, 0, degree, bound, &mut out);
    out
}

/// Solve A·x = y over ℚ(i) by Gauss–Jordan elimination. None if inconsistent.
fn solve(mut a: Vec<Vec<Gauss>>, mut y: Vec<Gauss>, ncols: usize) -> Option<Vec<Gauss>> {
    let nrows = a.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..nrows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        y.swap(r, p);
        let inv = a[r][c].inv().expect("non-zero pivot");
        for j in 0..ncols {
            a[r][j] = a[r][j].mul(&inv);
        }
        y[r] = y[r].mul(&inv);
        for i in 0..nrows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..ncols {
                    let t = a[r][j].mul(&f);
                    a[i][j] = a[i][j].sub(&t);
                }
                let t = y[r].mul(&f);
                y[i] = y[i].sub(&t);
            }
        }
        pivots.push(c);
        r += 1;
        if r == nrows {
            break;
        }
    }
    if (r..nrows).any(|i| !y[i].is_zero()) {
        return None;
    }
    let mut x = vec![Gauss::zero(); ncols];
    for (i, c) in pivots.iter().enumerate() {
        x[*c] = y[i].clone();
    }
    Some(x)
}

/// Find X with dX = Y among forms whose degree-0 generators appear with total
/// exponent at most `bound`. The scalar coefficients of Y are split into
/// monomials and each piece is solved over ℚ(i).
pub fn witness_search(y: &Form, bound: u32) -> Result<Form> {
    if !y.d().is_zero() {
        return Err(Error::NotClosed);
    }
    if y.is_zero() {
        return Ok(y.zero_like());
    }
    let model = y.model.clone();
    // Group by (Grassmann mask, scalar monomial, form degree).
    let mut groups: BTreeMap<(u64, Mono, u32), Vec<(MMono, Gauss)>> = BTreeMap::new();
    for ((s, m), c) in &y.terms {
        for (sm, g) in c.terms() {
            groups.entry((*s, sm.clone(), model.mono_degree(m))).or_default().push((m.clone(), g.clone()));
        }
    }
    let mut x = y.zero_like();
    for ((mask, sm, deg), rhs) in groups {
        if deg == 0 {
            return Err(Error::NoWitness);
        }
        let basis = monomial_basis(&model, deg - 1, bound);
        let mut rows: BTreeMap<MMono, usize> = BTreeMap::new();
        let mut images = Vec::new();
        for b in &basis {
            let img = model.d_mono(b);
            for (_, m) in &img {
                let n = rows.len();
                rows.entry(m.clone()).or_insert(n);
            }
            images.push(img);
        }
        for (m, _) in &rhs {
            let n = rows.len();
            rows.entry(m.clone()).or_insert(n);
        }
        let mut a = vec![vec![Gauss::zero(); basis.len()]; rows.len()];
        for (j, img) in images.iter().enumerate() {
            for (g, m) in img {
                let i = rows[m];
                a[i][j] = a[i][j].add(g);
            }
        }
        // d(γ^S μ) = (−1)^{|S|}γ^S dμ
        let sign = if parity(mask) == 1 { Gauss::int(-1) } else { Gauss::one() };
        let mut b = vec![Gauss::zero(); rows.len()];
        for (m, g) in &rhs {
            b[rows[m]] = b[rows[m]].add(&g.mul(&sign));
        }
        let sol = solve(a, b, basis.len()).ok_or(Error::NoWitness)?;
        for (j, c) in sol.into_iter().enumerate() {
            if !c.is_zero() {
                let coef = Scalar::from_term(y.ring, sm.clone(), c);
                x = x.checked_add(&Form::term(&model, &y.gr, mask, basis[j].clone(), coef))?;
            }
        }
    }
    if x.d() != *y {
        return Err(Error::ValidationError("witness does not satisfy dX = Y".into()));
    }
    Ok(x)
}

// ---------------------------------------------------------------- random instances

fn random_gauss(rng: &mut impl Rng) -> Gauss {
    let mut v = 0;
    while v == 0 {
        v = rng.gen_range(-4..=4);
    }
    if rng.gen_bool(0.25) {
        Gauss::new(num_rational::BigRational::from_integer(v.into()), num_rational::BigRational::from_integer(rng.gen_range(-3..=3).into()))
    } else {
        Gauss::int(v)
    }
}

/// Random polynomial form of the given degree on a chart.
pub fn random_chart_form(rng: &mut impl Rng, model: &Arc<ManifoldModel>, gr: &Arc<GrassmannRing>, degree: u32, ring: ScalarRing) -> Form {
    let basis = monomial_basis(model, degree, 2);
    let mut f = Form::zero(model, gr);
    f.ring = ring;
    if basis.is_empty() {
        return f;
    }
    for _ in 0..rng.gen_range(1..=3) {
        let m = basis[rng.gen_range(0..basis.len())].clone();
        f = f.checked_add(&Form::term(model, gr, 0, m, Scalar::constant(random_gauss(rng)))).expect("same model");
    }
    f
}

/// A random circle coefficient ℓ^{h/2} with h even or odd.
fn random_ell_power(rng: &mut impl Rng) -> Scalar {
    Scalar::ell().pow_halves(rng.gen_range(-3..=4)).expect("ℓ is a radicand")
}

/// (Z, L, is_solution): Z = c + f(ℓ)dα, L = f'(ℓ)α, optionally perturbed.
pub fn random_k_data(rng: &mut impl Rng, model: &Arc<ManifoldModel>, perturb: bool) -> Result<(Form, Form, bool)> {
    let gr = GrassmannRing::new(ScalarRing::Circle, &[]);
    let n = model.max_degree;
    let deg = 2 * rng.gen_range(0..=(n.saturating_sub(1)) / 2) + 1;
    let alpha = random_chart_form(rng, model, &gr, deg, ScalarRing::Circle);
    let f = &random_ell_power(rng) + &Scalar::constant(random_gauss(rng)).scale(&Gauss::one());
    let c = Form::scalar(model, &gr, Scalar::constant(random_gauss(rng))).with_ring(ScalarRing::Circle)?;
    let z = c.checked_add(&alpha.d().scale(&f))?;
    let l = alpha.scale(&f.derive(&Deriv::Ell)?);
    if !perturb {
        return Ok((z, l, true));
    }
    let kind = rng.gen_range(0..3);
    let bump_deg = if kind == 0 { 1 } else { 2 };
    let bump = random_chart_form(rng, model, &gr, bump_deg.min(n), ScalarRing::Circle).scale(&random_ell_power(rng));
    Ok(match kind {
        0 => (z, l.checked_add(&bump)?, false),
        _ => (z.checked_add(&bump)?, l, false),
    })
}

/// (Z, Z_v, Z_τ̄, is_solution) with weights respected:
/// Z = c + v^a E2* dα, Z_v = a v^{a−1}E2* α, Z_τ̄ = v^a ∂_τ̄E2* α for a 3-form α.
pub fn random_e_data(rng: &mut impl Rng, model: &Arc<ManifoldModel>, perturb: bool) -> Result<(Form, Form, Form, bool)> {
    let gr = GrassmannRing::new(ScalarRing::Moduli, &[]);
    let alpha = random_chart_form(rng, model, &gr, 3, ScalarRing::Moduli);
    let e2star = &Scalar::e2() * &Scalar::constant(random_gauss(rng));
    let va = Scalar::v().pow(rng.gen_range(-2..=2))?;
    let f = &va * &e2star;
    let c = Form::scalar(model, &gr, Scalar::constant(random_gauss(rng))).with_ring(ScalarRing::Moduli)?;
    let z = c.checked_add(&alpha.d().scale(&f))?;
    let zv = alpha.scale(&f.derive(&Deriv::V)?);
    let ztb = alpha.scale(&f.derive(&Deriv::TauBar)?);
    if !perturb {
        return Ok((z, zv, ztb, true));
    }
    let bump = random_chart_form(rng, model, &gr, 3, ScalarRing::Moduli);
    if bump.d().is_zero() {
        return Ok((z, zv, ztb, true));
    }
    Ok(if rng.gen_bool(0.5) {
        (z, zv.checked_add(&bump.scale(&e2star))?, ztb, false)
    } else {
        (z, zv, ztb.checked_add(&bump.scale(&(&e2star * &Scalar::sigma().pow(-2)?)))?, false)
    })
}
