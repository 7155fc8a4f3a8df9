//! Super Euclidean groups in dimensions 1|1 and 2|1, super circles and tori
//! given by lattice data, and the operators their actions induce on
//! functions of the moduli of constant super loops/tori.
//!
//! Conventions. Group laws
//!   (t,θ)(t',θ') = (t+t'+iθθ', θ+θ'),   (z,z̄,θ)(z',z̄',θ') = (z+z', z̄+z̄'+θθ', θ+θ').
//! The flip acts by θ ↦ ±θ and Spin(2) by r_u(z,z̄,θ) = (u²z, ū²z̄, ūθ). A
//! group element g sends the lattice Λ to the conjugate Λ' with g∘Λ = Λ'∘g.
//!
//! Functions on the moduli are [`Form`]s whose scalar coefficients use the
//! atoms ℓ (1|1) or ℓ₁, ℓ₂, ℓ̄₂, vol (2|1) and whose Grassmann part contains
//! `lambda` (1|1) or `lambda1`, `lambda2` with λ₁λ₂ = 0 (2|1). Group
//! parameters live in the same Grassmann ring; the odd one is `eta`.
//!
//! Sign calibration: Q̂ equals +∂_η of the pulled-back function at the
//! identity; ∂̂_w equals −∂_w of the pulled-back function.

use crate::eisenstein::{EisKind, Sl2};
use crate::error::{Error, Result};
use crate::forms::Form;
use crate::grassmann::{GrassmannElement as GE, GrassmannRing};
use crate::scalars::{Atom, Deriv, Gauss, Scalar, ScalarRing};
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

pub const LAMBDA: &str = "lambda";
pub const LAMBDA1: &str = "lambda1";
pub const LAMBDA2: &str = "lambda2";
pub const ETA: &str = "eta";
pub const THETA: &str = "theta";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dim {
    D11,
    D21,
}

impl Dim {
    pub fn name(self) -> &'static str {
        match self {
            Dim::D11 => "1|1",
            Dim::D21 => "2|1",
        }
    }
}

/// Grassmann ring over the circle coefficients with λ, η and any extras.
pub fn ring11(extra: &[&str]) -> Arc<GrassmannRing> {
    let mut g = vec![LAMBDA, ETA];
    g.extend_from_slice(extra);
    GrassmannRing::new(ScalarRing::Circle, &g)
}

/// Grassmann ring over the lattice coefficients with λ₁λ₂ = 0.
pub fn ring21(extra: &[&str]) -> Arc<GrassmannRing> {
    let mut g = vec![LAMBDA1, LAMBDA2, ETA];
    g.extend_from_slice(extra);
    GrassmannRing::with_relations(ScalarRing::Lattice, &g, &[(LAMBDA1, LAMBDA2)]).expect("valid generators")
}

/// Append generators not yet present. Masks of existing generators are kept.
pub fn extend_ring(gr: &Arc<GrassmannRing>, names: &[&str]) -> Arc<GrassmannRing> {
    let mut r = (**gr).clone();
    for n in names {
        if r.index(n).is_none() {
            r.gens.push(n.to_string());
        }
    }
    Arc::new(r)
}

/// Re-home an element into an extension built by [`extend_ring`].
pub fn rehome(x: &GE, gr: &Arc<GrassmannRing>) -> GE {
    GE { ring: gr.clone(), terms: x.terms.clone() }
}

fn sc(gr: &Arc<GrassmannRing>, s: Scalar) -> GE {
    GE::scalar(gr, s)
}

fn two_i() -> Gauss {
    Gauss::int(2).mul(&Gauss::i())
}

fn check_same(xs: &[&GE]) -> Result<()> {
    for w in xs.windows(2) {
        if !(Arc::ptr_eq(&w[0].ring, &w[1].ring) || w[0].ring == w[1].ring) {
            return Err(Error::RingMismatch("group data over different Grassmann rings".into()));
        }
    }
    Ok(())
}

fn require_parity(x: &GE, p: u32, what: &str) -> Result<()> {
    if x.has_parity(p) {
        Ok(())
    } else {
        Err(Error::ParityViolation(format!("{what} must be {}", if p == 0 { "even" } else { "odd" })))
    }
}

// ------------------------------------------------------------------ 1|1

/// S-point of ℝ^{1|1}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Point11 {
    pub t: GE,
    pub theta: GE,
}

impl Point11 {
    pub fn new(t: GE, theta: GE) -> Result<Self> {
        check_same(&[&t, &theta])?;
        require_parity(&t, 0, "t")?;
        require_parity(&theta, 1, "θ")?;
        Ok(Point11 { t, theta })
    }
    pub fn zero(gr: &Arc<GrassmannRing>) -> Self {
        Point11 { t: GE::zero(gr), theta: GE::zero(gr) }
    }
    /// (t, θ) with t a formal even symbol and θ a named generator.
    pub fn symbolic(gr: &Arc<GrassmannRing>, t: &str, theta: &str) -> Result<Self> {
        Ok(Point11 { t: sc(gr, Scalar::sym(t)), theta: GE::gen(gr, theta)? })
    }
}

pub fn mul_11(a: &Point11, b: &Point11) -> Result<Point11> {
    check_same(&[&a.t, &b.t])?;
    let cross = a.theta.checked_mul(&b.theta)?.scale(&Scalar::i());
    Ok(Point11 { t: a.t.checked_add(&b.t)?.checked_add(&cross)?, theta: a.theta.checked_add(&b.theta)? })
}

pub fn inv_11(a: &Point11) -> Point11 {
    Point11 { t: a.t.neg(), theta: a.theta.neg() }
}

/// S-point of E^{1|1} ⋊ ℤ/2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupPoint11 {
    pub s: GE,
    pub eta: GE,
    pub flip: i8,
}

impl GroupPoint11 {
    pub fn new(s: GE, eta: GE, flip: i8) -> Result<Self> {
        check_same(&[&s, &eta])?;
        require_parity(&s, 0, "s")?;
        require_parity(&eta, 1, "η")?;
        if flip != 1 && flip != -1 {
            return Err(Error::ValidationError("flip must be ±1".into()));
        }
        Ok(GroupPoint11 { s, eta, flip })
    }
    pub fn identity(gr: &Arc<GrassmannRing>) -> Self {
        GroupPoint11 { s: GE::zero(gr), eta: GE::zero(gr), flip: 1 }
    }
    fn sigma(&self) -> Scalar {
        Scalar::int(self.flip as i64)
    }
    /// (s,η,σ)(s',η',σ') = (s+s'+iη·ση', η+ση', σσ').
    pub fn mul(&self, o: &GroupPoint11) -> Result<GroupPoint11> {
        let e2 = o.eta.scale(&self.sigma());
        let p = mul_11(&Point11 { t: self.s.clone(), theta: self.eta.clone() }, &Point11 { t: o.s.clone(), theta: e2 })?;
        Ok(GroupPoint11 { s: p.t, eta: p.theta, flip: self.flip * o.flip })
    }
    pub fn inverse(&self) -> GroupPoint11 {
        GroupPoint11 { s: self.s.neg(), eta: self.eta.scale(&self.sigma()).neg(), flip: self.flip }
    }
    /// Left action on ℝ^{1|1}: (s,η)·(t, σθ).
    pub fn act(&self, p: &Point11) -> Result<Point11> {
        mul_11(
            &Point11 { t: self.s.clone(), theta: self.eta.clone() },
            &Point11 { t: p.t.clone(), theta: p.theta.scale(&self.sigma()) },
        )
    }
}

/// Lattice datum (ℓ, λ) of a super circle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CirclePoint {
    pub ell: GE,
    pub lambda: GE,
}

impl CirclePoint {
    pub fn new(ell: GE, lambda: GE) -> Result<Self> {
        check_same(&[&ell, &lambda])?;
        require_parity(&ell, 0, "ℓ")?;
        require_parity(&lambda, 1, "λ")?;
        ell.inverse()?;
        Ok(CirclePoint { ell, lambda })
    }
    /// The coordinate point (ℓ, λ) on the moduli.
    pub fn generic(gr: &Arc<GrassmannRing>) -> Result<Self> {
        Ok(CirclePoint { ell: sc(gr, Scalar::ell()), lambda: GE::gen(gr, LAMBDA)? })
    }
    fn as_point(&self) -> Point11 {
        Point11 { t: self.ell.clone(), theta: self.lambda.clone() }
    }
    /// n-fold lattice translate of a point, computed with the group law.
    pub fn shift(&self, n: i64, p: &Point11) -> Result<Point11> {
        let step = if n >= 0 { self.as_point() } else { inv_11(&self.as_point()) };
        let mut q = p.clone();
        for _ in 0..n.unsigned_abs() {
            q = mul_11(&step, &q)?;
        }
        Ok(q)
    }
}

/// (ℓ', λ') = (ℓ ± 2iηλ, ±λ), checked against g·(ℓ,λ)·g⁻¹.
pub fn conj_lattice_11(g: &GroupPoint11, c: &CirclePoint) -> Result<CirclePoint> {
    check_same(&[&g.s, &c.ell])?;
    let sigma = g.sigma();
    let shift = g.eta.checked_mul(&c.lambda)?.scale(&Scalar::constant(two_i())).scale(&sigma);
    let out = CirclePoint { ell: c.ell.checked_add(&shift)?, lambda: c.lambda.scale(&sigma) };
    let as_group = GroupPoint11 { s: c.ell.clone(), eta: c.lambda.clone(), flip: 1 };
    let conj = g.mul(&as_group)?.mul(&g.inverse())?;
    if conj.s != out.ell || conj.eta != out.lambda || conj.flip != 1 {
        return Err(Error::ConjugationMismatch(format!("1|1: formula ({}, {}) vs group ({}, {})", out.ell, out.lambda, conj.s, conj.eta)));
    }
    Ok(out)
}

/// p̃(t, θ) = θ − λt/ℓ.
pub fn projection_tilde_11(c: &CirclePoint, p: &Point11) -> Result<GE> {
    let inv = c.ell.inverse()?;
    p.theta.checked_add(&c.lambda.checked_mul(&p.t)?.checked_mul(&inv)?.neg())
}

// ------------------------------------------------------------------ 2|1

/// S-point of ℝ^{2|1}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Point21 {
    pub z: GE,
    pub zbar: GE,
    pub theta: GE,
}

impl Point21 {
    pub fn new(z: GE, zbar: GE, theta: GE) -> Result<Self> {
        check_same(&[&z, &zbar, &theta])?;
        require_parity(&z, 0, "z")?;
        require_parity(&zbar, 0, "z̄")?;
        require_parity(&theta, 1, "θ")?;
        Ok(Point21 { z, zbar, theta })
    }
    pub fn zero(gr: &Arc<GrassmannRing>) -> Self {
        Point21 { z: GE::zero(gr), zbar: GE::zero(gr), theta: GE::zero(gr) }
    }
    pub fn symbolic(gr: &Arc<GrassmannRing>, z: &str, zbar: &str, theta: &str) -> Result<Self> {
        Ok(Point21 { z: sc(gr, Scalar::sym(z)), zbar: sc(gr, Scalar::sym(zbar)), theta: GE::gen(gr, theta)? })
    }
    fn rehome(&self, gr: &Arc<GrassmannRing>) -> Point21 {
        Point21 { z: rehome(&self.z, gr), zbar: rehome(&self.zbar, gr), theta: rehome(&self.theta, gr) }
    }
}

pub fn mul_21(a: &Point21, b: &Point21) -> Result<Point21> {
    check_same(&[&a.z, &b.z])?;
    let cross = a.theta.checked_mul(&b.theta)?;
    Ok(Point21 {
        z: a.z.checked_add(&b.z)?,
        zbar: a.zbar.checked_add(&b.zbar)?.checked_add(&cross)?,
        theta: a.theta.checked_add(&b.theta)?,
    })
}

pub fn inv_21(a: &Point21) -> Point21 {
    Point21 { z: a.z.neg(), zbar: a.zbar.neg(), theta: a.theta.neg() }
}

fn pow_21(p: &Point21, n: i64) -> Result<Point21> {
    let step = if n >= 0 { p.clone() } else { inv_21(p) };
    let mut q = Point21::zero(&p.z.ring);
    for _ in 0..n.unsigned_abs() {
        q = mul_21(&q, &step)?;
    }
    Ok(q)
}

/// S-point of E^{2|1} ⋊ Spin(2) together with an SL₂(ℤ) element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupPoint21 {
    pub w: GE,
    pub wbar: GE,
    pub eta: GE,
    pub u: GE,
    pub ubar: GE,
    pub gamma: Sl2,
}

impl GroupPoint21 {
    pub fn new(w: GE, wbar: GE, eta: GE, u: GE, ubar: GE, gamma: Sl2) -> Result<Self> {
        check_same(&[&w, &wbar, &eta, &u, &ubar])?;
        require_parity(&w, 0, "w")?;
        require_parity(&wbar, 0, "w̄")?;
        require_parity(&eta, 1, "η")?;
        require_parity(&u, 0, "u")?;
        if u.checked_mul(&ubar)? != GE::one(&u.ring) {
            return Err(Error::ValidationError("u·ū must equal 1".into()));
        }
        Sl2::new(gamma.a, gamma.b, gamma.c, gamma.d)?;
        Ok(GroupPoint21 { w, wbar, eta, u, ubar, gamma })
    }
    pub fn identity(gr: &Arc<GrassmannRing>) -> Self {
        GroupPoint21 {
            w: GE::zero(gr),
            wbar: GE::zero(gr),
            eta: GE::zero(gr),
            u: GE::one(gr),
            ubar: GE::one(gr),
            gamma: Sl2::IDENTITY,
        }
    }
    /// Pure rotation by a formal unit u (ū = u⁻¹).
    pub fn rotation(gr: &Arc<GrassmannRing>, u: &str) -> Self {
        let mut g = GroupPoint21::identity(gr);
        g.u = sc(gr, Scalar::sym(u));
        g.ubar = sc(gr, Scalar::sym(u).inv().expect("monomial"));
        g
    }
    fn translation(&self) -> Point21 {
        Point21 { z: self.w.clone(), zbar: self.wbar.clone(), theta: self.eta.clone() }
    }
    /// r_u(z, z̄, θ) = (u²z, ū²z̄, ūθ).
    pub fn rotate(&self, p: &Point21) -> Result<Point21> {
        let u2 = self.u.checked_mul(&self.u)?;
        let ub2 = self.ubar.checked_mul(&self.ubar)?;
        Ok(Point21 { z: u2.checked_mul(&p.z)?, zbar: ub2.checked_mul(&p.zbar)?, theta: self.ubar.checked_mul(&p.theta)? })
    }
    /// Left action on ℝ^{2|1}: P ↦ r_u(t·P). γ does not act on points.
    pub fn act(&self, p: &Point21) -> Result<Point21> {
        self.rotate(&mul_21(&self.translation(), p)?)
    }
    fn rehome(&self, gr: &Arc<GrassmannRing>) -> GroupPoint21 {
        GroupPoint21 {
            w: rehome(&self.w, gr),
            wbar: rehome(&self.wbar, gr),
            eta: rehome(&self.eta, gr),
            u: rehome(&self.u, gr),
            ubar: rehome(&self.ubar, gr),
            gamma: self.gamma,
        }
    }
}

/// Based super lattice: two commuting ℝ^{2|1}-points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuperLattice {
    pub g1: Point21,
    pub g2: Point21,
}

impl SuperLattice {
    pub fn new(g1: Point21, g2: Point21) -> Result<Self> {
        check_same(&[&g1.z, &g2.z])?;
        if mul_21(&g1, &g2)? != mul_21(&g2, &g1)? {
            return Err(Error::ValidationError("lattice generators do not commute".into()));
        }
        Ok(SuperLattice { g1, g2 })
    }
    /// The coordinate lattice ((ℓ₁, ℓ̄₁, λ₁), (ℓ₂, ℓ̄₂, λ₂)) on the moduli.
    pub fn generic(gr: &Arc<GrassmannRing>) -> Result<Self> {
        SuperLattice::new(
            Point21 { z: sc(gr, Scalar::l1()), zbar: sc(gr, Scalar::l1bar()), theta: GE::gen(gr, LAMBDA1)? },
            Point21 { z: sc(gr, Scalar::l2()), zbar: sc(gr, Scalar::l2bar()), theta: GE::gen(gr, LAMBDA2)? },
        )
    }
    /// vol = (ℓ₁ℓ̄₂ − ℓ̄₁ℓ₂)/(2i).
    pub fn vol(&self) -> Result<GE> {
        let a = self.g1.z.checked_mul(&self.g2.zbar)?;
        let b = self.g1.zbar.checked_mul(&self.g2.z)?;
        Ok(a.checked_add(&b.neg())?.scale(&Scalar::constant(two_i().inv().unwrap())))
    }
    /// Λ₁^a Λ₂^b via the group law.
    pub fn combo(&self, a: i64, b: i64) -> Result<Point21> {
        mul_21(&pow_21(&self.g1, a)?, &pow_21(&self.g2, b)?)
    }
    /// (n, m)·P = Λ₁^n Λ₂^m P.
    pub fn shift(&self, n: i64, m: i64, p: &Point21) -> Result<Point21> {
        mul_21(&self.combo(n, m)?, p)
    }
    fn rehome(&self, gr: &Arc<GrassmannRing>) -> SuperLattice {
        SuperLattice { g1: self.g1.rehome(gr), g2: self.g2.rehome(gr) }
    }
}

/// Λ' from the explicit formula, checked by the commuting square
/// g(Λ^γ_i·P) = Λ'_i·g(P) on a symbolic point P.
pub fn conj_lattice_21(g: &GroupPoint21, lat: &SuperLattice) -> Result<SuperLattice> {
    check_same(&[&g.u, &lat.g1.z])?;
    let u2 = g.u.checked_mul(&g.u)?;
    let ub2 = g.ubar.checked_mul(&g.ubar)?;
    let two_eta = g.eta.scale(&Scalar::int(2));
    let image = |a: i64, b: i64| -> Result<Point21> {
        let (ia, ib) = (Scalar::int(a), Scalar::int(b));
        let l = lat.g1.z.scale(&ia).checked_add(&lat.g2.z.scale(&ib))?;
        let lam = lat.g1.theta.scale(&ia).checked_add(&lat.g2.theta.scale(&ib))?;
        let lb = lat.g1.zbar.scale(&ia).checked_add(&lat.g2.zbar.scale(&ib))?.checked_add(&two_eta.checked_mul(&lam)?)?;
        Ok(Point21 { z: u2.checked_mul(&l)?, zbar: ub2.checked_mul(&lb)?, theta: g.ubar.checked_mul(&lam)? })
    };
    let gm = g.gamma;
    let out = SuperLattice { g1: image(gm.a, gm.b)?, g2: image(gm.c, gm.d)? };

    let gr = extend_ring(&g.u.ring, &["theta_probe"]);
    let (g2, lat2, out2) = (g.rehome(&gr), lat.rehome(&gr), out.rehome(&gr));
    let p = Point21::symbolic(&gr, "z_probe", "zbar_probe", "theta_probe")?;
    for (i, (a, b), lp) in [(1, (gm.a, gm.b), &out2.g1), (2, (gm.c, gm.d), &out2.g2)] {
        let lhs = g2.act(&mul_21(&lat2.combo(a, b)?, &p)?)?;
        let rhs = mul_21(lp, &g2.act(&p)?)?;
        if lhs != rhs {
            return Err(Error::ConjugationMismatch(format!("2|1 generator {i}: square does not commute")));
        }
    }
    SuperLattice::new(out.g1, out.g2)
}

/// p̃(z, z̄, θ) = θ − λ₁(zℓ̄₂ − z̄ℓ₂)/(2i vol) − λ₂(z̄ℓ₁ − zℓ̄₁)/(2i vol).
///
/// Signs are chosen so that p̃ is invariant under both lattice translations.
pub fn projection_tilde_21(lat: &SuperLattice, p: &Point21) -> Result<GE> {
    let k = lat.vol()?.scale(&Scalar::constant(two_i())).inverse()?;
    let (l1, l1b, lam1) = (&lat.g1.z, &lat.g1.zbar, &lat.g1.theta);
    let (l2, l2b, lam2) = (&lat.g2.z, &lat.g2.zbar, &lat.g2.theta);
    let a = p.z.checked_mul(l2b)?.checked_add(&p.zbar.checked_mul(l2)?.neg())?;
    let b = p.zbar.checked_mul(l1)?.checked_add(&p.z.checked_mul(l1b)?.neg())?;
    let corr = lam1.checked_mul(&a)?.checked_add(&lam2.checked_mul(&b)?)?.checked_mul(&k)?;
    p.theta.checked_add(&corr.neg())
}

// ------------------------------------------------------------------ pullbacks

/// Group datum for either dimension.
#[derive(Clone, Debug)]
pub enum GroupAction {
    D11(GroupPoint11),
    D21(GroupPoint21),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LatticeData {
    Circle(CirclePoint),
    Lattice(SuperLattice),
}

/// A ring endomorphism of moduli functions, given on atoms, Grassmann
/// generators and model generators (x ↦ x + εψ, ψ ↦ aψ).
struct Endo {
    atoms: Vec<(Atom, Form)>,
    grass: HashMap<String, Form>,
    eps: Form,
    a: Form,
}

fn split_body(f: &Form) -> Result<(Scalar, Form)> {
    let one = f.model.one();
    let mut body = Scalar::zero();
    let mut rest = f.zero_like();
    for ((s, m), c) in &f.terms {
        if *m != one {
            return Err(Error::ValidationError("atom image must be a 0-form".into()));
        }
        if *s == 0 {
            body = c.clone();
        } else {
            rest.terms.insert((*s, m.clone()), c.clone());
        }
    }
    Ok((body, rest))
}

impl Endo {
    /// c(S + N) = Σₙ (1/n!) Σ ∂^α c(S)·N^α, finite since every N is nilpotent.
    fn scalar_image(&self, c: &Scalar, proto: &Form, ring: ScalarRing) -> Result<Form> {
        let mut bodies = HashMap::new();
        let mut nils = Vec::new();
        for (a, f) in &self.atoms {
            let (s, n) = split_body(f)?;
            bodies.insert(a.clone(), s);
            if !n.is_zero() {
                nils.push((a.clone(), n));
            }
        }
        let subst = |h: &Scalar| h.substitute(&|a| bodies.get(a).cloned(), ring);
        let mut out = proto.zero_like();
        let mut level = vec![(c.clone(), proto.scalar_like(Scalar::one()))];
        let mut n = 0i64;
        while !level.is_empty() {
            let mut next = Vec::new();
            for (h, p) in &level {
                if h.is_zero() || p.is_zero() {
                    continue;
                }
                out = out.checked_add(&p.scale(&subst(h)?))?;
                for (a, na) in &nils {
                    let dh = h.partial_atom(a)?;
                    if !dh.is_zero() {
                        next.push((dh, p.checked_mul(na)?));
                    }
                }
            }
            n += 1;
            level = next.into_iter().map(|(h, p)| (h.scale(&Gauss::frac(1, n)), p)).collect();
        }
        Ok(out)
    }

    fn apply(&self, w: &Form) -> Result<Form> {
        let mut out = w.zero_like();
        for ((mask, mono), c) in &w.terms {
            let mut t = self.scalar_image(c, w, w.ring)?;
            for i in 0..w.gr.gens.len() {
                if mask & (1 << i) != 0 {
                    let name = &w.gr.gens[i];
                    let img = match self.grass.get(name) {
                        Some(f) => f.clone(),
                        None => Form::grass(&w.model, &w.gr, name)?,
                    };
                    t = t.checked_mul(&img)?;
                }
            }
            let mu = Form::term(&w.model, &w.gr, 0, mono.clone(), Scalar::one());
            let k = w.model.mono_degree(mono);
            let mut ak = w.scalar_like(Scalar::one());
            for _ in 0..k {
                ak = ak.checked_mul(&self.a)?;
            }
            let moved = mu.checked_add(&self.eps.checked_mul(&mu.d())?)?;
            out = out.checked_add(&t.checked_mul(&ak.checked_mul(&moved)?)?)?;
        }
        Ok(out)
    }
}

fn form_of(w: &Form, x: &GE) -> Form {
    Form::from_grassmann(&w.model, x)
}

/// Pullback of a 1|1 moduli function along g. Returns (ℓ', λ') and g*ω.
pub fn pullback_action_11(g: &GroupPoint11, w: &Form) -> Result<(CirclePoint, Form)> {
    let gr = g.s.ring.clone();
    let w = w.into_grassmann(&gr)?;
    let c = CirclePoint::generic(&gr)?;
    let c2 = conj_lattice_11(g, &c)?;
    let sigma = g.sigma();
    let ell_inv = sc(&gr, Scalar::ell().inv()?);
    let lam = &c.lambda;
    // ε = σ(λs/ℓ − η), a = σ(1 − iηλ/ℓ)
    let eps = lam.checked_mul(&g.s)?.checked_mul(&ell_inv)?.checked_add(&g.eta.neg())?.scale(&sigma);
    let a = GE::one(&gr)
        .checked_add(&g.eta.checked_mul(lam)?.checked_mul(&ell_inv)?.scale(&Scalar::i()).neg())?
        .scale(&sigma);
    let mut grass = HashMap::new();
    grass.insert(LAMBDA.to_string(), form_of(&w, &c2.lambda));
    let endo = Endo { atoms: vec![(Atom::Ell, form_of(&w, &c2.ell))], grass, eps: form_of(&w, &eps), a: form_of(&w, &a) };
    Ok((c2, endo.apply(&w)?))
}

/// The Eisenstein symbols on the lattice transform through τ' = γτ.
fn eisphi_image(k: EisKind, gm: Sl2) -> Result<Scalar> {
    let l2inv = Scalar::l2().inv()?;
    let j = &(&Scalar::l1().scale(&Gauss::int(gm.c)) + &Scalar::l2().scale(&Gauss::int(gm.d))) * &l2inv;
    let mut img = &j.pow(k.weight() as i64)? * &Scalar::atom(Atom::EisPhi(k));
    if k == EisKind::E2hol {
        img = &img - &(&j * &Scalar::two_pi_i()).scale(&Gauss::int(gm.c));
    }
    Ok(img)
}

/// Pullback of a 2|1 moduli function along g. Returns Λ' and g*ω.
pub fn pullback_action_21(g: &GroupPoint21, w: &Form) -> Result<(SuperLattice, Form)> {
    let gr = g.u.ring.clone();
    let w = w.into_grassmann(&gr)?;
    let lat = SuperLattice::generic(&gr)?;
    let lat2 = conj_lattice_21(g, &lat)?;
    let inv2ivol = sc(&gr, Scalar::vol().scale(&two_i()).inv()?);
    let (l1, l2) = (&lat.g1.z, &lat.g2.z);
    let (l1b, l2b) = (&lat.g1.zbar, &lat.g2.zbar);
    let (lam1, lam2) = (&lat.g1.theta, &lat.g2.theta);
    // c'' = (λ₁ℓ₂ − λ₂ℓ₁)/(2i vol), μ' = (λ₁ℓ̄₂ − λ₂ℓ̄₁)/(2i vol)
    let cc = lam1.checked_mul(l2)?.checked_add(&lam2.checked_mul(l1)?.neg())?.checked_mul(&inv2ivol)?;
    let mu = lam1.checked_mul(l2b)?.checked_add(&lam2.checked_mul(l1b)?.neg())?.checked_mul(&inv2ivol)?;
    let ubinv = g.ubar.inverse()?;
    let eps = g
        .eta
        .checked_add(&cc.checked_mul(&g.wbar)?)?
        .checked_add(&mu.checked_mul(&g.w)?)?
        .checked_mul(&ubinv)?
        .neg();
    let a = ubinv.checked_mul(&GE::one(&gr).checked_add(&g.eta.checked_mul(&cc)?)?)?;
    let vol2 = lat2.vol()?;
    let mut atoms = vec![
        (Atom::L1, form_of(&w, &lat2.g1.z)),
        (Atom::L2, form_of(&w, &lat2.g2.z)),
        (Atom::L2b, form_of(&w, &lat2.g2.zbar)),
        (Atom::Vol, form_of(&w, &vol2)),
    ];
    if g.gamma != Sl2::IDENTITY {
        for k in [EisKind::E2hol, EisKind::E4, EisKind::E6] {
            atoms.push((Atom::EisPhi(k), w.scalar_like(eisphi_image(k, g.gamma)?)));
        }
    }
    let mut grass = HashMap::new();
    grass.insert(LAMBDA1.to_string(), form_of(&w, &lat2.g1.theta));
    grass.insert(LAMBDA2.to_string(), form_of(&w, &lat2.g2.theta));
    let endo = Endo { atoms, grass, eps: form_of(&w, &eps), a: form_of(&w, &a) };
    Ok((lat2, endo.apply(&w)?))
}

pub fn pullback_action(g: &GroupAction, w: &Form) -> Result<(LatticeData, Form)> {
    match g {
        GroupAction::D11(g) => pullback_action_11(g, w).map(|(c, f)| (LatticeData::Circle(c), f)),
        GroupAction::D21(g) => pullback_action_21(g, w).map(|(l, f)| (LatticeData::Lattice(l), f)),
    }
}

// ------------------------------------------------------------------ Q̂

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QOp {
    Q,
    Dw,
}

fn check_11(f: &Form) -> Result<()> {
    if !matches!(f.ring, ScalarRing::Base | ScalarRing::Circle) || f.gr.index(LAMBDA).is_none() {
        return Err(Error::WrongRing(format!("1|1 operator needs circle coefficients with {LAMBDA}")));
    }
    Ok(())
}

fn check_21(f: &Form) -> Result<()> {
    let ok_ring = matches!(f.ring, ScalarRing::Base | ScalarRing::Lattice);
    let rel = f.gr.mask_of(&[LAMBDA1, LAMBDA2]).map(|m| f.gr.killed(m)).unwrap_or(false);
    if !ok_ring || !rel {
        return Err(Error::WrongRing("2|1 operator needs lattice coefficients with λ₁λ₂ = 0".into()));
    }
    Ok(())
}

/// Q̂ = 2iλ∂ℓ − d − i(λ/ℓ)deg.
pub fn qhat_11(f: &Form) -> Result<Form> {
    check_11(f)?;
    let lam = Form::grass(&f.model, &f.gr, LAMBDA)?;
    let t1 = lam.checked_mul(&f.derive(&Deriv::Ell)?)?.scale(&Scalar::constant(two_i()));
    let t3 = lam.checked_mul(&f.deg_op())?.scale(&(&Scalar::i() * &Scalar::ell().inv()?));
    t1.checked_add(&f.d().neg())?.checked_add(&t3.neg())
}

fn lattice_coeffs(f: &Form) -> Result<(Form, Form)> {
    let lam1 = Form::grass(&f.model, &f.gr, LAMBDA1)?;
    let lam2 = Form::grass(&f.model, &f.gr, LAMBDA2)?;
    Ok((lam1, lam2))
}

/// (λ₂ℓ₁ − λ₁ℓ₂)/(2i vol), the coefficient of deg in Q̂.
fn kappa(f: &Form) -> Result<Form> {
    let (lam1, lam2) = lattice_coeffs(f)?;
    let k = Scalar::vol().scale(&two_i()).inv()?;
    let a = lam2.scale(&(&Scalar::l1() * &k));
    let b = lam1.scale(&(&Scalar::l2() * &k));
    a.checked_add(&b.neg())
}

/// (λ₁ℓ̄₂ − λ₂ℓ̄₁)/(2i vol), the coefficient of d in ∂̂_w.
fn mu_coeff(f: &Form) -> Result<Form> {
    let (lam1, lam2) = lattice_coeffs(f)?;
    let k = Scalar::vol().scale(&two_i()).inv()?;
    let a = lam1.scale(&(&Scalar::l2bar() * &k));
    let b = lam2.scale(&(&Scalar::l1bar() * &k));
    a.checked_add(&b.neg())
}

/// Q̂ = 2λ₁∂ℓ̄₁ + 2λ₂∂ℓ̄₂ − d − ((λ₂ℓ₁ − λ₁ℓ₂)/(2i vol))deg.
pub fn qhat_21(f: &Form) -> Result<Form> {
    check_21(f)?;
    let (lam1, lam2) = lattice_coeffs(f)?;
    let two = Scalar::int(2);
    let t1 = lam1.checked_mul(&f.derive(&Deriv::L1bar)?)?.scale(&two);
    let t2 = lam2.checked_mul(&f.derive(&Deriv::L2bar)?)?.scale(&two);
    let t4 = kappa(f)?.checked_mul(&f.deg_op())?;
    t1.checked_add(&t2)?.checked_add(&f.d().neg())?.checked_add(&t4.neg())
}

/// ∂̂_w = ((λ₁ℓ̄₂ − λ₂ℓ̄₁)/(2i vol))d.
pub fn dhat_w(f: &Form) -> Result<Form> {
    check_21(f)?;
    mu_coeff(f)?.checked_mul(&f.d())
}

pub fn qhat(dim: Dim, f: &Form, which: QOp) -> Result<Form> {
    match (dim, which) {
        (Dim::D11, QOp::Q) => qhat_11(f),
        (Dim::D21, QOp::Q) => qhat_21(f),
        (Dim::D21, QOp::Dw) => dhat_w(f),
        (Dim::D11, QOp::Dw) => Err(Error::WrongRing("∂̂_w exists only in dimension 2|1".into())),
    }
}

// ------------------------------------------------------------------ generator checks

fn set_sym_zero(f: &Form, name: &str) -> Result<Form> {
    let target = Atom::Sym(name.to_string());
    f.try_map_coeffs(|c| c.substitute(&|a| if *a == target { Some(Scalar::zero()) } else { None }, c.ring()))
}

fn with_eta(f: &Form, dim: Dim) -> Result<Form> {
    let gr = match dim {
        Dim::D11 => extend_ring(&f.gr, &[LAMBDA, ETA]),
        Dim::D21 => {
            let r = extend_ring(&f.gr, &[LAMBDA1, LAMBDA2, ETA]);
            let mut r2 = (*r).clone();
            let m = r2.mask_of(&[LAMBDA1, LAMBDA2])?;
            if !r2.relations.contains(&m) {
                r2.relations.push(m);
            }
            Arc::new(r2)
        }
    };
    f.into_grassmann(&gr)
}

/// ∂_η of g*f at g = (0, η, +1) (resp. (0, 0, η, 1, 1, id)).
pub fn eta_generator(dim: Dim, f: &Form) -> Result<Form> {
    let f = with_eta(f, dim)?;
    let gr = f.gr.clone();
    let eta = GE::gen(&gr, ETA)?;
    let pulled = match dim {
        Dim::D11 => pullback_action_11(&GroupPoint11 { s: GE::zero(&gr), eta, flip: 1 }, &f)?.1,
        Dim::D21 => {
            let mut g = GroupPoint21::identity(&gr);
            g.eta = eta;
            pullback_action_21(&g, &f)?.1
        }
    };
    pulled.grass_left_partial(ETA)
}

/// The even translation generator: ∂_s (1|1), ∂_w̄ or ∂_w (2|1) of g*f at 0.
pub fn translation_generator(dim: Dim, f: &Form, holomorphic: bool) -> Result<Form> {
    let f = with_eta(f, dim)?;
    let gr = f.gr.clone();
    let (name, pulled) = match dim {
        Dim::D11 => {
            let g = GroupPoint11 { s: sc(&gr, Scalar::sym("s")), eta: GE::zero(&gr), flip: 1 };
            ("s", pullback_action_11(&g, &f)?.1)
        }
        Dim::D21 => {
            let mut g = GroupPoint21::identity(&gr);
            let name = if holomorphic { "w" } else { "wbar" };
            if holomorphic {
                g.w = sc(&gr, Scalar::sym(name));
            } else {
                g.wbar = sc(&gr, Scalar::sym(name));
            }
            (name, pullback_action_21(&g, &f)?.1)
        }
    };
    set_sym_zero(&pulled.derive(&Deriv::Sym(name.into()))?, name)
}

/// Q̂f − ∂_η(g*f): zero under the +1 calibration.
pub fn eta_generator_residual(dim: Dim, f: &Form) -> Result<Form> {
    let f = with_eta(f, dim)?;
    let q = qhat(dim, &f, QOp::Q)?;
    q.checked_add(&eta_generator(dim, &f)?.neg())
}

/// Q̂∘Q̂ f − i∂_s(g*f) (1|1) or Q̂∘Q̂ f − ∂_w̄(g*f) (2|1).
pub fn qhat_square_residual(dim: Dim, f: &Form) -> Result<Form> {
    let f = with_eta(f, dim)?;
    let qq = qhat(dim, &qhat(dim, &f, QOp::Q)?, QOp::Q)?;
    let t = translation_generator(dim, &f, false)?;
    let t = if dim == Dim::D11 { t.scale(&Scalar::i()) } else { t };
    qq.checked_add(&t.neg())
}

/// ∂̂_w f + ∂_w(g*f): zero under the −1 calibration.
pub fn dhat_w_residual(f: &Form) -> Result<Form> {
    let f = with_eta(f, Dim::D21)?;
    dhat_w(&f)?.checked_add(&translation_generator(Dim::D21, &f, true)?)
}

// ------------------------------------------------------------------ invariance conditions

#[derive(Clone, Debug)]
pub enum InvarianceData {
    /// (Z, L) on the circle moduli.
    Circle { z: Form, l: Form },
    /// (ω₀, ω₁, ω₂) on the lattice moduli.
    Lattice { w0: Form, w1: Form, w2: Form },
    /// (Z, Z_v, Z_τ̄) on moduli coordinates (τ, τ̄, v).
    Moduli { z: Form, zv: Form, ztb: Form },
}

#[derive(Clone, Debug)]
pub struct InvarianceReport {
    pub holds: bool,
    pub q_closed: bool,
    pub residuals: Vec<(String, Form)>,
    pub packaged: Form,
}

fn require_form_parity(f: &Form, p: u32, what: &str) -> Result<()> {
    if f.has_parity(p) {
        Ok(())
    } else {
        Err(Error::ParityViolation(format!("{what} must be {}", if p == 0 { "even" } else { "odd" })))
    }
}

/// ℓ^{deg/2}Z + 2iℓ^{(deg+1)/2}L·λ.
pub fn package_11(z: &Form, l: &Form) -> Result<Form> {
    let z = with_eta(z, Dim::D11)?;
    let l = with_eta(l, Dim::D11)?.into_grassmann(&z.gr)?;
    let lam = Form::grass(&z.model, &z.gr, LAMBDA)?;
    let a = z.scale_by_power(&Scalar::ell(), 0)?;
    let b = l.scale_by_power(&Scalar::ell(), 1)?.checked_mul(&lam)?.scale(&Scalar::constant(two_i()));
    a.checked_add(&b)
}

/// vol^{deg/2}ω₀ + 2vol^{(deg+1)/2}(ω₁λ₁ + ω₂λ₂).
pub fn package_21(w0: &Form, w1: &Form, w2: &Form) -> Result<Form> {
    let w0 = with_eta(w0, Dim::D21)?;
    let w1 = w1.into_grassmann(&w0.gr)?;
    let w2 = w2.into_grassmann(&w0.gr)?;
    let (lam1, lam2) = lattice_coeffs(&w0)?;
    let a = w0.scale_by_power(&Scalar::vol(), 0)?;
    let b = w1.scale_by_power(&Scalar::vol(), 1)?.checked_mul(&lam1)?;
    let c = w2.scale_by_power(&Scalar::vol(), 1)?.checked_mul(&lam2)?;
    a.checked_add(&b.checked_add(&c)?.scale(&Scalar::int(2)))
}

/// (ω₀, ω₁, ω₂) from (Z, Z_v, Z_τ̄) via φ* and β ↦ ℓ₂⁻¹:
/// ω₀ = ι(Z), ω₁ = ι(Z_τ̄)/ℓ̄₂ − (ℓ₂/2i)ι(Z_v), ω₂ = −(ℓ̄₁/ℓ̄₂²)ι(Z_τ̄) + (ℓ₁/2i)ι(Z_v).
pub fn moduli_to_lattice(z: &Form, zv: &Form, ztb: &Form) -> Result<(Form, Form, Form)> {
    let inc = |f: &Form| -> Result<Form> {
        let mut g = f.try_map_coeffs(crate::scalars::include_beta)?;
        g.ring = ScalarRing::Lattice;
        if g.gr.base == ScalarRing::Moduli {
            let mut r = (*g.gr).clone();
            r.base = ScalarRing::Lattice;
            g.gr = Arc::new(r);
        }
        Ok(g)
    };
    let (iz, iv, it) = (inc(z)?, inc(zv)?, inc(ztb)?);
    let inv2i = Scalar::constant(two_i().inv().unwrap());
    let l2b_inv = Scalar::l2bar().inv()?;
    let w1 = it.scale(&l2b_inv).checked_add(&iv.scale(&(&Scalar::l2() * &inv2i)).neg())?;
    let w2 = it
        .scale(&(&Scalar::l1bar() * &l2b_inv.pow(2)?))
        .neg()
        .checked_add(&iv.scale(&(&Scalar::l1() * &inv2i)))?;
    Ok((iz, w1, w2))
}

pub fn invariance_conditions(data: &InvarianceData) -> Result<InvarianceReport> {
    let (residuals, packaged, dim) = match data {
        InvarianceData::Circle { z, l } => {
            require_form_parity(z, 0, "Z")?;
            require_form_parity(l, 1, "L")?;
            let r1 = z.d();
            let r2 = z.derive(&Deriv::Ell)?.checked_add(&l.d().neg())?;
            (vec![("dZ".to_string(), r1), ("d_ell Z - dL".to_string(), r2)], package_11(z, l)?, Dim::D11)
        }
        InvarianceData::Lattice { w0, w1, w2 } => {
            require_form_parity(w0, 0, "ω₀")?;
            require_form_parity(w1, 1, "ω₁")?;
            require_form_parity(w2, 1, "ω₂")?;
            let r = vec![
                ("d w0".to_string(), w0.d()),
                ("d_l1bar w0 - d w1".to_string(), w0.derive(&Deriv::L1bar)?.checked_add(&w1.d().neg())?),
                ("d_l2bar w0 - d w2".to_string(), w0.derive(&Deriv::L2bar)?.checked_add(&w2.d().neg())?),
            ];
            (r, package_21(w0, w1, w2)?, Dim::D21)
        }
        InvarianceData::Moduli { z, zv, ztb } => {
            require_form_parity(z, 0, "Z")?;
            require_form_parity(zv, 1, "Z_v")?;
            require_form_parity(ztb, 1, "Z_taubar")?;
            let r = vec![
                ("dZ".to_string(), z.d()),
                ("d_v Z - dZ_v".to_string(), z.derive(&Deriv::V)?.checked_add(&zv.d().neg())?),
                ("d_taubar Z - dZ_taubar".to_string(), z.derive(&Deriv::TauBar)?.checked_add(&ztb.d().neg())?),
            ];
            let (w0, w1, w2) = moduli_to_lattice(z, zv, ztb)?;
            (r, package_21(&w0, &w1, &w2)?, Dim::D21)
        }
    };
    let holds = residuals.iter().all(|(_, r)| r.is_zero());
    let q_closed = qhat(dim, &packaged, QOp::Q)?.is_zero();
    if holds != q_closed {
        return Err(Error::ValidationError(format!(
            "invariance conditions ({holds}) disagree with Q̂-closedness ({q_closed})"
        )));
    }
    Ok(InvarianceReport { holds, q_closed, residuals, packaged })
}

// ------------------------------------------------------------------ vector fields

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Coord {
    T,
    Z,
    Zbar,
    Theta,
}

impl Coord {
    fn sym(self) -> Option<&'static str> {
        match self {
            Coord::T => Some("t"),
            Coord::Z => Some("z"),
            Coord::Zbar => Some("zbar"),
            Coord::Theta => None,
        }
    }
    fn coords(dim: Dim) -> &'static [Coord] {
        match dim {
            Dim::D11 => &[Coord::T, Coord::Theta],
            Dim::D21 => &[Coord::Z, Coord::Zbar, Coord::Theta],
        }
    }
}

/// First-order operator Σ f_c ∂_c with Grassmann-polynomial coefficients.
/// The odd coordinate is the generator `theta` of the coefficient ring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorField {
    pub dim: Dim,
    pub comps: BTreeMap<Coord, GE>,
}

impl VectorField {
    pub fn new(dim: Dim, comps: Vec<(Coord, GE)>) -> Result<Self> {
        let mut m = BTreeMap::new();
        for (c, f) in comps {
            if !Coord::coords(dim).contains(&c) {
                return Err(Error::ValidationError(format!("{c:?} is not a coordinate in dimension {}", dim.name())));
            }
            if let Some(old) = m.get(&c) {
                let s: GE = f.checked_add(old)?;
                m.insert(c, s);
            } else {
                m.insert(c, f);
            }
        }
        m.retain(|_, f: &mut GE| !f.is_zero());
        Ok(VectorField { dim, comps: m })
    }
    pub fn partial(dim: Dim, gr: &Arc<GrassmannRing>, c: Coord) -> Result<Self> {
        VectorField::new(dim, vec![(c, GE::one(gr))])
    }
    /// D = ∂θ − iθ∂t (1|1) or ∂θ − θ∂z̄ (2|1).
    pub fn d_left(dim: Dim, gr: &Arc<GrassmannRing>) -> Result<Self> {
        Self::odd_generator(dim, gr, -1)
    }
    /// Q = ∂θ + iθ∂t (1|1) or ∂θ + θ∂z̄ (2|1).
    pub fn q_right(dim: Dim, gr: &Arc<GrassmannRing>) -> Result<Self> {
        Self::odd_generator(dim, gr, 1)
    }
    fn odd_generator(dim: Dim, gr: &Arc<GrassmannRing>, sign: i64) -> Result<Self> {
        let th = GE::gen(gr, THETA)?;
        let (c, k) = match dim {
            Dim::D11 => (Coord::T, Scalar::i().scale(&Gauss::int(sign))),
            Dim::D21 => (Coord::Zbar, Scalar::int(sign)),
        };
        VectorField::new(dim, vec![(Coord::Theta, GE::one(gr)), (c, th.scale(&k))])
    }
    pub fn scale(&self, k: &Scalar) -> VectorField {
        let comps = self.comps.iter().map(|(c, f)| (*c, f.scale(k))).filter(|(_, f)| !f.is_zero()).collect();
        VectorField { dim: self.dim, comps }
    }
    pub fn parity(&self) -> Option<u32> {
        let mut p = None;
        for (c, f) in &self.comps {
            let q = (f.parity()? + if *c == Coord::Theta { 1 } else { 0 }) % 2;
            match p {
                None => p = Some(q),
                Some(x) if x != q => return None,
                _ => {}
            }
        }
        Some(p.unwrap_or(0))
    }
    pub fn apply(&self, f: &GE) -> Result<GE> {
        let mut out = GE::zero(&f.ring);
        for (c, coef) in &self.comps {
            let df = match c.sym() {
                Some(s) => f.derive(&Deriv::Sym(s.into()))?,
                None => f.left_partial(THETA)?,
            };
            out = out.checked_add(&coef.checked_mul(&df)?)?;
        }
        Ok(out)
    }
}

/// Generic test function a(x) + θ·b(x) with quadratic polynomials a, b.
fn test_function(dim: Dim, gr: &Arc<GrassmannRing>) -> Result<GE> {
    let evens: Vec<Scalar> = Coord::coords(dim).iter().filter_map(|c| c.sym()).map(Scalar::sym).collect();
    let mut monos = vec![Scalar::one()];
    for (i, x) in evens.iter().enumerate() {
        monos.push(x.clone());
        for y in &evens[i..] {
            monos.push(x * y);
        }
    }
    let poly = |tag: &str| -> Scalar {
        monos.iter().enumerate().fold(Scalar::zero(), |acc, (j, m)| &acc + &(m * &Scalar::sym(&format!("{tag}{j}"))))
    };
    let th = GE::gen(gr, THETA)?;
    sc(gr, poly("a_")).checked_add(&th.scale(&poly("b_")))
}

/// Graded commutator [V₁, V₂] = V₁V₂ − (−1)^{|V₁||V₂|}V₂V₁.
pub fn vector_field_bracket(v1: &VectorField, v2: &VectorField) -> Result<VectorField> {
    if v1.dim != v2.dim {
        return Err(Error::ValidationError("vector fields in different dimensions".into()));
    }
    let dim = v1.dim;
    let gr = v1.comps.values().chain(v2.comps.values()).next().map(|f| f.ring.clone());
    let Some(gr) = gr else { return VectorField::new(dim, vec![]) };
    let p1 = v1.parity().ok_or_else(|| Error::ParityViolation("V₁ is not homogeneous".into()))?;
    let p2 = v2.parity().ok_or_else(|| Error::ParityViolation("V₂ is not homogeneous".into()))?;
    let sign = if p1 * p2 == 1 { Scalar::int(-1) } else { Scalar::one() };
    let br = |f: &GE| -> Result<GE> {
        let a = v1.apply(&v2.apply(f)?)?;
        let b = v2.apply(&v1.apply(f)?)?.scale(&sign);
        a.checked_add(&b.neg())
    };
    let mut comps = Vec::new();
    for c in Coord::coords(dim) {
        let coordinate = match c.sym() {
            Some(s) => sc(&gr, Scalar::sym(s)),
            None => GE::gen(&gr, THETA)?,
        };
        comps.push((*c, br(&coordinate)?));
    }
    let w = VectorField::new(dim, comps)?;
    let f = test_function(dim, &gr)?;
    if w.apply(&f)? != br(&f)? {
        return Err(Error::ValidationError("commutator is not a first-order operator".into()));
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_and_example_11() {
        let gr = GrassmannRing::new(ScalarRing::Base, &["theta", "theta2"]);
        let p = Point11::symbolic(&gr, "t", "theta").unwrap();
        assert_eq!(mul_11(&p, &Point11::zero(&gr)).unwrap(), p);
        let a = Point11 { t: GE::zero(&gr), theta: GE::gen(&gr, "theta").unwrap() };
        let b = Point11 { t: GE::zero(&gr), theta: GE::gen(&gr, "theta2").unwrap() };
        let ab = mul_11(&a, &b).unwrap();
        assert_eq!(ab.t, (&a.theta * &b.theta).scale(&Scalar::i()));
    }

    #[test]
    fn wick_brackets() {
        let gr = GrassmannRing::new(ScalarRing::Base, &[THETA]);
        let d = VectorField::d_left(Dim::D11, &gr).unwrap();
        let q = VectorField::q_right(Dim::D11, &gr).unwrap();
        let dt = VectorField::partial(Dim::D11, &gr, Coord::T).unwrap();
        assert_eq!(vector_field_bracket(&d, &d).unwrap().scale(&Scalar::frac(1, 2)), dt.scale(&Scalar::i().neg()));
        assert_eq!(vector_field_bracket(&q, &q).unwrap().scale(&Scalar::frac(1, 2)), dt.scale(&Scalar::i()));
        assert!(vector_field_bracket(&d, &q).unwrap().comps.is_empty());
    }

    #[test]
    fn circle_conjugation() {
        let gr = ring11(&[]);
        let g = GroupPoint11::new(sc(&gr, Scalar::sym("s")), GE::gen(&gr, ETA).unwrap(), 1).unwrap();
        let c = CirclePoint::generic(&gr).unwrap();
        let c2 = conj_lattice_11(&g, &c).unwrap();
        let expect = &c.ell + &(&g.eta * &c.lambda).scale(&Scalar::constant(two_i()));
        assert_eq!(c2.ell, expect);
        assert_eq!(c2.lambda, c.lambda);
    }

    #[test]
    fn lattice_conjugation_s() {
        let gr = ring21(&[]);
        let lat = SuperLattice::generic(&gr).unwrap();
        let mut g = GroupPoint21::identity(&gr);
        g.gamma = Sl2::S;
        let out = conj_lattice_21(&g, &lat).unwrap();
        assert_eq!(out.g1, inv_21(&lat.g2));
        assert_eq!(out.g2, lat.g1);
    }

    #[test]
    fn q11_on_function() {
        let m = crate::forms::ManifoldModel::chart(1);
        let gr = ring11(&[]);
        let x = Form::x(&m, &gr, 1);
        let f = x.checked_mul(&x).unwrap();
        assert_eq!(qhat_11(&f).unwrap(), f.d().neg());
    }
}
