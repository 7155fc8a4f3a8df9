//! The elliptic Euler form of a real oriented bundle with curvature F, its
//! failure to be holomorphic in τ, and its promotion to an E-cocycle from a
//! rational string structure dH = p₁.

use crate::cocycles::{is_cocycle_e, make_e_element, witness_search, EElement};
use crate::eisenstein::EisKind;
use crate::error::{Error, Result};
use crate::forms::{Form, FormMatrix, ManifoldModel};
use crate::scalars::{Deriv, Gauss, Scalar, ScalarRing};
use std::sync::Arc;

pub use crate::eisenstein::{modular_defect, ModularTarget, Sl2};

/// Antisymmetric r×r matrix of even 2-forms.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureSpec {
    pub model: Arc<ManifoldModel>,
    pub rank: usize,
    pub f: FormMatrix,
}

impl CurvatureSpec {
    pub fn new(f: FormMatrix) -> Result<Self> {
        let r = f.n();
        if f.rows.iter().any(|row| row.len() != r) || f.q != 0 {
            return Err(Error::NotSquare);
        }
        if r % 2 == 1 {
            return Err(Error::OddDimension);
        }
        if r == 0 {
            return Err(Error::ValidationError("curvature needs positive rank".into()));
        }
        for i in 0..r {
            for j in 0..r {
                if f.rows[i][j] != f.rows[j][i].neg() {
                    return Err(Error::NotAntisymmetric);
                }
                let e = &f.rows[i][j];
                if !e.is_zero() && e.degrees() != [2] {
                    return Err(Error::ValidationError(format!("F[{i}][{j}] is not a 2-form")));
                }
            }
        }
        let f = f.try_map(|e| e.clone().with_ring(ScalarRing::Moduli))?;
        Ok(CurvatureSpec { model: f.rows[0][0].model.clone(), rank: r, f })
    }

    /// Block-diagonal sum.
    pub fn direct_sum(&self, o: &CurvatureSpec) -> Result<CurvatureSpec> {
        let r = self.rank + o.rank;
        let z = self.f.rows[0][0].zero_like();
        let mut rows = vec![vec![z; r]; r];
        for i in 0..self.rank {
            for j in 0..self.rank {
                rows[i][j] = self.f.rows[i][j].clone();
            }
        }
        for i in 0..o.rank {
            for j in 0..o.rank {
                rows[self.rank + i][self.rank + j] = o.f.rows[i][j].clone();
            }
        }
        CurvatureSpec::new(FormMatrix::from_rows(rows)?)
    }

    fn zero_form(&self) -> Form {
        self.f.rows[0][0].zero_like()
    }

    /// F^n as an ordinary matrix product of even forms.
    fn power(&self, n: u32) -> Result<FormMatrix> {
        let mut acc = FormMatrix::identity(self.rank, 0, &self.model, &self.f.rows[0][0].gr).try_map(|e| e.clone().with_ring(ScalarRing::Moduli))?;
        for _ in 0..n {
            acc = acc.mul(&self.f)?;
        }
        Ok(acc)
    }

    pub fn trace_power(&self, n: u32) -> Result<Form> {
        let m = self.power(n)?;
        let mut t = self.zero_form();
        for i in 0..self.rank {
            t = t.checked_add(&m.rows[i][i])?;
        }
        Ok(t)
    }
}

fn two_pi_i_pow(n: i64) -> Result<Scalar> {
    Scalar::two_pi_i().pow(n)
}

/// G_{2k} with G₂ taken in its completed, non-holomorphic form.
pub fn eisenstein_g(k: u32) -> Result<Scalar> {
    match k {
        1 => Ok(Scalar::e2()),
        2 => Ok(Scalar::eis(EisKind::E4)),
        3 => Ok(Scalar::eis(EisKind::E6)),
        _ => Err(Error::ValidationError(format!("G_{} is not in the symbol table", 2 * k))),
    }
}

/// p₁ = Tr(F²)/(2(2πi)²).
pub fn pontryagin_p1(c: &CurvatureSpec) -> Result<Form> {
    let k = two_pi_i_pow(-2)?.scale(&Gauss::frac(1, 2));
    Ok(c.trace_power(2)?.scale(&k))
}

fn form_exp(x: &Form) -> Result<Form> {
    if x.degrees().contains(&0) {
        return Err(Error::NonTerminating);
    }
    let mut acc = x.zero_like().checked_add(&Form::one(&x.model, &x.gr).with_ring(x.ring)?)?;
    let mut pw = acc.clone();
    for n in 1..=(x.model.max_degree as i64 + 1) {
        pw = pw.checked_mul(x)?.scale(&Scalar::frac(1, n));
        if pw.is_zero() {
            break;
        }
        acc = acc.checked_add(&pw)?;
    }
    Ok(acc)
}

/// Σ_{k≥1, 4k ≤ dim} β^{2k}G_{2k}Tr(F^{2k})/(2k(2πi)^{2k}).
pub fn euler_exponent(c: &CurvatureSpec) -> Result<Form> {
    let mut s = c.zero_form();
    let mut k = 1u32;
    while 4 * k <= c.model.max_degree {
        let tr = c.trace_power(2 * k)?;
        if !tr.is_zero() {
            let coeff = &(&eisenstein_g(k)? * &Scalar::beta().pow(2 * k as i64)?) * &two_pi_i_pow(-2 * k as i64)?;
            s = s.checked_add(&tr.scale(&coeff.scale(&Gauss::frac(1, 2 * k as i64))))?;
        }
        k += 1;
    }
    Ok(s)
}

/// Pf(−βF).
pub fn pfaffian_factor(c: &CurvatureSpec) -> Result<Form> {
    c.f.scale(&Scalar::beta().neg()).pfaffian()
}

/// Eu = Pf(−βF)·exp(euler_exponent).
pub fn euler_form(c: &CurvatureSpec) -> Result<Form> {
    pfaffian_factor(c)?.checked_mul(&form_exp(&euler_exponent(c)?)?)
}

/// The factor κ in ∂_τ̄Eu = κ·Eu, namely −β²Tr(F²)/(4πi(τ−τ̄)²).
pub fn holomorphy_coefficient(c: &CurvatureSpec) -> Result<Form> {
    let k = &(&Scalar::beta().pow(2)? * &Scalar::sigma().pow(-2)?) * &(&Scalar::pi() * &Scalar::i()).scale(&Gauss::int(4)).inv()?;
    Ok(c.trace_power(2)?.scale(&k.neg()))
}

/// ∂_τ̄Eu − κ·Eu.
pub fn holomorphy_defect(c: &CurvatureSpec) -> Result<Form> {
    let eu = euler_form(c)?;
    eu.derive(&Deriv::TauBar)?.checked_add(&holomorphy_coefficient(c)?.checked_mul(&eu)?.neg())
}

/// The same residual with the opposite sign on κ; nonzero whenever Tr(F²)∧Eu ≠ 0.
pub fn holomorphy_defect_opposite_sign(c: &CurvatureSpec) -> Result<Form> {
    let eu = euler_form(c)?;
    eu.derive(&Deriv::TauBar)?.checked_add(&holomorphy_coefficient(c)?.checked_mul(&eu)?)
}

/// Find a primitive of p₁: radial homotopy on charts, bounded linear
/// algebra on presented models.
pub fn string_structure(c: &CurvatureSpec) -> Result<Form> {
    let p1 = pontryagin_p1(c)?;
    if c.model.is_chart().is_some() {
        p1.poincare_homotopy()
    } else {
        witness_search(&p1, 4)
    }
}

/// Euler cocycle together with the constant c in Z_τ̄ = c(τ−τ̄)⁻²H∧Z.
#[derive(Clone, Debug)]
pub struct EulerCocycle {
    pub element: EElement,
    pub h: Form,
    pub constant: Scalar,
}

/// Promote Eu to an E-cocycle given H with dH = p₁ (found automatically when
/// `h` is None). The constant c is solved for, not assumed.
pub fn euler_cocycle(c: &CurvatureSpec, h: Option<&Form>) -> Result<EulerCocycle> {
    let p1 = pontryagin_p1(c)?;
    let h = match h {
        Some(h) => h.clone().with_ring(ScalarRing::Moduli)?,
        None => string_structure(c)?,
    };
    if h.d() != p1 {
        return Err(Error::NotStringStructure);
    }
    let beta_one = |f: &Form| f.try_map_coeffs(|s| s.substitute(&|a| (*a == crate::scalars::Atom::Beta).then(Scalar::one), s.ring()));
    let z = beta_one(&euler_form(c)?)?;
    let target = z.derive(&Deriv::TauBar)?;
    let basis = h.checked_mul(&z)?.scale(&Scalar::sigma().pow(-2)?);
    let dbasis = basis.d();
    let constant = solve_multiple(&target, &dbasis)?;
    let ztb = basis.scale(&constant);
    let zero = z.zero_like();
    let e = make_e_element(&z, &zero, &ztb)?.with_weight_shift(c.rank as i32 / 2);
    if !is_cocycle_e(&e)? {
        return Err(Error::NotCocycle);
    }
    Ok(EulerCocycle { element: e, h, constant })
}

/// The scalar c with a = c·b, checked on every term.
fn solve_multiple(a: &Form, b: &Form) -> Result<Scalar> {
    if b.is_zero() {
        return if a.is_zero() { Ok(Scalar::zero()) } else { Err(Error::NoWitness) };
    }
    for (k, bk) in &b.terms {
        let ak = a.terms.get(k).cloned().unwrap_or_else(Scalar::zero);
        if let Ok(cand) = ak.checked_div(bk) {
            if b.scale(&cand) == *a {
                return Ok(cand);
            }
        }
    }
    Err(Error::ValidationError("∂_τ̄Z is not a multiple of d((τ−τ̄)⁻²H∧Z)".into()))
}
