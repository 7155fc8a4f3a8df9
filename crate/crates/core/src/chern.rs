//! Superconnections in a global trivialization, the ℓ-rescaled family and the
//! Chern character as a degree-zero cocycle of Tot(K).

use crate::cocycles::{is_cocycle_k, make_k_element, random_chart_form, KElement};
use crate::error::{Error, Result};
use crate::forms::{ExpMode, Form, FormMatrix, ManifoldModel, NumForm, NumMatrix};
use crate::grassmann::GrassmannRing;
use crate::scalars::{Assignment, Deriv, Scalar, ScalarRing};
use num_complex::Complex64;
use rand::Rng;
use std::collections::BTreeMap;
use std::sync::Arc;

/// 𝔸 = d + Σ_j A_j on C^{p|q}; A_j has form degree j and odd total parity.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperConnection {
    pub model: Arc<ManifoldModel>,
    pub gr: Arc<GrassmannRing>,
    pub p: usize,
    pub q: usize,
    pub components: BTreeMap<u32, FormMatrix>,
}

impl SuperConnection {
    pub fn new(model: &Arc<ManifoldModel>, p: usize, q: usize, components: Vec<(u32, FormMatrix)>) -> Result<Self> {
        let gr = GrassmannRing::new(ScalarRing::Base, &[]);
        let mut map: BTreeMap<u32, FormMatrix> = BTreeMap::new();
        for (j, m) in components {
            if m.p != p || m.q != q || m.n() != p + q {
                return Err(Error::NotSquare);
            }
            for (r, row) in m.rows.iter().enumerate() {
                for (c, f) in row.iter().enumerate() {
                    if f.is_zero() {
                        continue;
                    }
                    if f.degrees() != [j] {
                        return Err(Error::ValidationError(format!("A_{j} entry ({r},{c}) is not a {j}-form")));
                    }
                    if (j as usize + usize::from(r >= p) + usize::from(c >= p)) % 2 != 1 {
                        return Err(Error::ParityViolation(format!("A_{j} entry ({r},{c}) has even total parity")));
                    }
                }
            }
            let slot = match map.remove(&j) {
                Some(prev) => prev.add(&m)?,
                None => m,
            };
            map.insert(j, slot);
        }
        Ok(SuperConnection { model: model.clone(), gr, p, q, components: map })
    }

    /// The trivial connection d on C^{p|q}.
    pub fn trivial(model: &Arc<ManifoldModel>, p: usize, q: usize) -> Self {
        SuperConnection::new(model, p, q, vec![]).expect("no components")
    }

    pub fn rank(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    /// Σ_j A_j as a single matrix.
    pub fn total(&self) -> Result<FormMatrix> {
        let mut acc = FormMatrix::zero(self.p, self.q, &self.model, &self.gr);
        for m in self.components.values() {
            acc = acc.add(m)?;
        }
        Ok(acc)
    }

    pub fn is_ordinary(&self) -> bool {
        self.components.iter().all(|(j, m)| *j == 1 || m.is_zero())
    }

    /// Block sum; the even indices of both summands come first.
    pub fn direct_sum(&self, o: &SuperConnection) -> Result<SuperConnection> {
        let (p, q) = (self.p + o.p, self.q + o.q);
        let place = |which: usize, i: usize| -> usize {
            let (sp, op) = (self.p, o.p);
            match (which, i < [sp, op][which]) {
                (0, true) => i,
                (1, true) => sp + i,
                (0, false) => p + (i - sp),
                _ => p + self.q + (i - op),
            }
        };
        let mut js: Vec<u32> = self.components.keys().chain(o.components.keys()).copied().collect();
        js.sort();
        js.dedup();
        let mut comps = Vec::new();
        for j in js {
            let mut m = FormMatrix::zero(p, q, &self.model, &self.gr);
            for (w, src) in [(0usize, self), (1usize, o)] {
                if let Some(a) = src.components.get(&j) {
                    for r in 0..a.n() {
                        for c in 0..a.n() {
                            m.rows[place(w, r)][place(w, c)] = a.rows[r][c].clone();
                        }
                    }
                }
            }
            comps.push((j, m));
        }
        SuperConnection::new(&self.model, p, q, comps)
    }
}

/// A_ℓ = Σ ℓ^{(1−j)/2}A_j, with coefficients in the circle ring.
pub fn rescale_family(a: &SuperConnection) -> Result<SuperConnection> {
    let mut out = a.clone();
    for (j, m) in out.components.iter_mut() {
        let c = Scalar::ell().pow_halves(1 - *j as i32)?;
        *m = m.try_map(|f| f.scale(&c).with_ring(ScalarRing::Circle))?;
    }
    Ok(out)
}

/// 𝔸² = dα + α·α for 𝔸 = d + α.
pub fn curvature_square(a: &SuperConnection) -> Result<FormMatrix> {
    let alpha = a.total()?;
    alpha.d().add(&alpha.mul(&alpha)?)
}

fn exp_auto(m: &FormMatrix, mode: Option<ExpMode>) -> Result<FormMatrix> {
    match mode {
        Some(md) => m.exp_series(md),
        None => match m.exp_series(ExpMode::ExactNilpotent) {
            Err(Error::NonTerminating) => m.exp_series(ExpMode::ScalarSplit),
            r => r,
        },
    }
}

/// (Z, L) = (sTr e^{𝔸_ℓ²}, sTr(∂_ℓ𝔸_ℓ · e^{𝔸_ℓ²})), unchecked.
pub fn chern_components(a: &SuperConnection, mode: Option<ExpMode>) -> Result<(Form, Form)> {
    let fam = rescale_family(a)?;
    let e = exp_auto(&curvature_square(&fam)?, mode)?;
    let z = e.supertrace()?.with_ring(ScalarRing::Circle)?;
    let dot = fam.total()?.try_map(|f| f.derive(&Deriv::Ell))?;
    let l = dot.mul(&e)?.supertrace()?.with_ring(ScalarRing::Circle)?;
    Ok((z, l))
}

/// The Chern character cocycle. `mode = None` tries the nilpotent series
/// first and falls back to splitting off a scalar.
pub fn chern_cocycle(a: &SuperConnection, mode: Option<ExpMode>) -> Result<KElement> {
    let (z, l) = chern_components(a, mode)?;
    let k = make_k_element(&z, &l)?;
    if !is_cocycle_k(&k)? {
        return Err(Error::NotCocycle);
    }
    Ok(k)
}

/// ∂_ℓZ − dL, exactly.
pub fn transgression_check(a: &SuperConnection, mode: Option<ExpMode>) -> Result<Form> {
    let (z, l) = chern_components(a, mode)?;
    z.derive(&Deriv::Ell)?.checked_add(&l.d().neg())
}

/// Classical Chern form sTr exp(∇²) of the connection part.
pub fn classical_chern_form(a: &SuperConnection) -> Result<Form> {
    let mut ord = a.clone();
    ord.components.retain(|j, _| *j == 1);
    curvature_square(&ord)?.exp_series(ExpMode::ExactNilpotent)?.supertrace()
}

/// Sample point for the finite-difference transgression check.
#[derive(Clone, Debug)]
pub struct NumericSample {
    pub ell: f64,
    pub point: Vec<f64>,
    pub step: f64,
    pub assignment: Assignment,
}

impl NumericSample {
    pub fn new(ell: f64, point: Vec<f64>) -> Self {
        NumericSample { ell, point, step: 1e-4, assignment: Assignment::new() }
    }
}

/// Numeric transgression residual: max-norm of ∂_ℓZ − dL, divided by
/// max(1, |∂_ℓZ|, |dL|). Derivatives are central differences.
pub fn transgression_numeric(a: &SuperConnection, s: &NumericSample) -> Result<f64> {
    let n = a.model.is_chart().ok_or(Error::NotChart)?;
    if s.point.len() != n {
        return Err(Error::ValidationError(format!("sample point needs {n} coordinates")));
    }
    let fam = rescale_family(a)?;
    let curv = curvature_square(&fam)?;
    let alpha = fam.total()?;
    let dot = alpha.try_map(|f| f.derive(&Deriv::Ell))?;
    let at = |ell: f64| s.assignment.clone().with("ell", Complex64::new(ell, 0.0));
    let z_at = |ell: f64, x: &[f64]| -> Result<NumForm> { Ok(NumMatrix::from_matrix(&curv, x, &at(ell))?.exp().supertrace()) };
    let l_at = |x: &[f64]| -> Result<NumForm> {
        let asg = at(s.ell);
        let e = NumMatrix::from_matrix(&curv, x, &asg)?.exp();
        Ok(NumMatrix::from_matrix(&dot, x, &asg)?.mul(&e).supertrace())
    };
    let h = s.step;
    let inv2h = Complex64::new(1.0 / (2.0 * h), 0.0);
    let dz = z_at(s.ell + h, &s.point)?.sub(&z_at(s.ell - h, &s.point)?).scale(inv2h);
    let mut dl = NumForm::zero(n);
    for i in 0..n {
        let mut xp = s.point.clone();
        let mut xm = s.point.clone();
        xp[i] += h;
        xm[i] -= h;
        let di = l_at(&xp)?.sub(&l_at(&xm)?).scale(inv2h);
        let mut dxi = NumForm::zero(n);
        dxi.c[1 << i] = Complex64::new(1.0, 0.0);
        dl = dl.add(&dxi.mul(&di));
    }
    let scale = 1f64.max(dz.norm()).max(dl.norm());
    Ok(dz.sub(&dl).norm() / scale)
}

/// Random superconnection on a chart. With `nilpotent`, A₀ only maps odd to
/// even so that A₀² = 0; otherwise A₀ is generic and x-dependent.
pub fn random_superconnection(rng: &mut impl Rng, model: &Arc<ManifoldModel>, p: usize, q: usize, nilpotent: bool) -> Result<SuperConnection> {
    let gr = GrassmannRing::new(ScalarRing::Base, &[]);
    let n = p + q;
    let top = model.max_degree.min(3);
    let mut comps = Vec::new();
    for j in 0..=top {
        let mut m = FormMatrix::zero(p, q, model, &gr);
        for r in 0..n {
            for c in 0..n {
                let odd_block = (r >= p) != (c >= p);
                if (j % 2 == 1) == odd_block {
                    continue;
                }
                if j == 0 && nilpotent && !(r < p && c >= p) {
                    continue;
                }
                if rng.gen_bool(0.4) {
                    continue;
                }
                m.rows[r][c] = if j == 0 && !nilpotent {
                    // Order-one entries keep e^{ℓA₀²} tame for finite differences.
                    let c0 = Scalar::frac(rng.gen_range(1..=4) * if rng.gen_bool(0.5) { 1 } else { -1 }, 4);
                    let x = Form::x(model, &gr, rng.gen_range(1..=model.is_chart().unwrap_or(1)));
                    Form::scalar(model, &gr, c0).checked_add(&x.scale(&Scalar::frac(rng.gen_range(-2..=2), 8)))?
                } else {
                    random_chart_form(rng, model, &gr, j, ScalarRing::Base)
                };
            }
        }
        comps.push((j, m));
    }
    SuperConnection::new(model, p, q, comps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_normalization() {
        let m = ManifoldModel::chart(2);
        let k = chern_cocycle(&SuperConnection::trivial(&m, 3, 1), None).unwrap();
        assert_eq!(k.z, Form::scalar(&m, &k.z.gr, Scalar::int(2)).with_ring(ScalarRing::Circle).unwrap());
        assert!(k.l.is_zero());
    }
}
