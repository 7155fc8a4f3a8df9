//! Numeric Eisenstein series.
//!
//! The symbols E2hol, E4, E6 denote the lattice sums
//! G_{2k}(τ) = Σ'_{(m,n)} (m + nτ)^{-2k} (Eisenstein summation for k = 1),
//! i.e. 2ζ(2k) times the unit-constant q-series. With this normalization the
//! completion G₂ − 2πi/(τ − τ̄) is modular of weight 2.
//!
//! Two evaluators are provided: the q-expansion with divisor sums, and a
//! lattice sum whose inner m-sum is done in closed form via derivatives of
//! π·cot(πz).

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum EisKind {
    E2hol,
    E4,
    E6,
}

impl EisKind {
    pub fn name(self) -> &'static str {
        match self {
            EisKind::E2hol => "E2hol",
            EisKind::E4 => "E4",
            EisKind::E6 => "E6",
        }
    }
    pub fn weight(self) -> u32 {
        match self {
            EisKind::E2hol => 2,
            EisKind::E4 => 4,
            EisKind::E6 => 6,
        }
    }
    /// 2ζ(k) as a multiple of π^k.
    fn zeta_factor(self) -> f64 {
        match self {
            EisKind::E2hol => 1.0 / 3.0,
            EisKind::E4 => 1.0 / 45.0,
            EisKind::E6 => 2.0 / 945.0,
        }
    }
    /// The constant in 1 + c·Σσ_{k−1}(n)qⁿ.
    fn q_constant(self) -> i128 {
        match self {
            EisKind::E2hol => -24,
            EisKind::E4 => 240,
            EisKind::E6 => -504,
        }
    }
}

/// σ_k(n) = Σ_{d | n} d^k.
pub fn divisor_sigma(n: u64, k: u32) -> i128 {
    let mut s: i128 = 0;
    let mut d = 1u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            s += (d as i128).pow(k);
            let e = n / d;
            if e != d {
                s += (e as i128).pow(k);
            }
        }
        d += 1;
    }
    s
}

/// Cached integer q-expansion coefficients of the normalized series.
#[derive(Clone, Debug)]
pub struct EisensteinSymbolTable {
    pub order: usize,
    pub e2: Vec<i128>,
    pub e4: Vec<i128>,
    pub e6: Vec<i128>,
}

impl EisensteinSymbolTable {
    pub fn new(order: usize) -> Self {
        let build = |k: EisKind| {
            (0..=order)
                .map(|n| if n == 0 { 1 } else { k.q_constant() * divisor_sigma(n as u64, k.weight() - 1) })
                .collect::<Vec<_>>()
        };
        EisensteinSymbolTable { order, e2: build(EisKind::E2hol), e4: build(EisKind::E4), e6: build(EisKind::E6) }
    }
    pub fn coeffs(&self, k: EisKind) -> &[i128] {
        match k {
            EisKind::E2hol => &self.e2,
            EisKind::E4 => &self.e4,
            EisKind::E6 => &self.e6,
        }
    }
    /// Checks the stored coefficients against the divisor-sum definition.
    pub fn verify(&self) -> bool {
        let fresh = EisensteinSymbolTable::new(self.order);
        fresh.e2 == self.e2 && fresh.e4 == self.e4 && fresh.e6 == self.e6
    }
}

fn check_tau(tau: Complex64) -> Result<()> {
    if !(tau.im > 0.0) || !tau.re.is_finite() {
        return Err(Error::PoleEvaluation(format!("tau = {tau} is not in the upper half plane")));
    }
    Ok(())
}

/// G_{2k}(τ) from the q-expansion truncated after `n_terms` terms.
pub fn g_series(k: EisKind, tau: Complex64, n_terms: usize) -> Result<Complex64> {
    check_tau(tau)?;
    let q = (Complex64::new(0.0, 2.0 * PI) * tau).exp();
    let c = k.q_constant() as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut qn = Complex64::new(1.0, 0.0);
    for n in 1..=n_terms {
        qn *= q;
        sum += qn * divisor_sigma(n as u64, k.weight() - 1) as f64;
    }
    Ok((Complex64::new(1.0, 0.0) + sum * c) * (k.zeta_factor() * PI.powi(k.weight() as i32)))
}

/// Σ_{m∈ℤ} (z + m)^{-k} for k = 2, 4, 6 via derivatives of π·cot(πz).
///
/// With c = cot πz and s = 1 + c², one has dc/dz = −πs and ds/dz = −2πcs.
/// Every derivative of order ≥ 1 is s times a polynomial in (c, s), so no
/// cancellation occurs when Im z is large and s is tiny.
fn cot_sum(k: u32, z: Complex64) -> Complex64 {
    // Polynomial in (c, s) as a map of exponent pairs to coefficients.
    let mut poly: Vec<((u32, u32), f64)> = vec![((1, 0), PI)];
    for _ in 0..(k - 1) {
        let mut next: Vec<((u32, u32), f64)> = Vec::new();
        for &((a, b), coef) in &poly {
            if a > 0 {
                // d(c^a) = a c^{a-1} (−π s)
                next.push(((a - 1, b + 1), coef * a as f64 * -PI));
            }
            if b > 0 {
                // d(s^b) = b s^{b-1} (−2π c s)
                next.push(((a + 1, b), coef * b as f64 * -2.0 * PI));
            }
        }
        next.sort_by_key(|x| x.0);
        let mut merged: Vec<((u32, u32), f64)> = Vec::new();
        for t in next {
            match merged.last_mut() {
                Some(last) if last.0 == t.0 => last.1 += t.1,
                _ => merged.push(t),
            }
        }
        poly = merged;
    }
    let w = z * PI;
    let sn = w.sin();
    let c = w.cos() / sn;
    let s = Complex64::new(1.0, 0.0) / (sn * sn);
    let mut val = Complex64::new(0.0, 0.0);
    for ((a, b), coef) in poly {
        val += c.powu(a) * s.powu(b) * coef;
    }
    let fact: f64 = (1..k).map(|x| x as f64).product();
    let sign = if (k - 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    val * (sign / fact)
}

/// G_{2k}(τ) as the lattice sum 2ζ(2k) + 2Σ_{n=1}^{rows} Σ_m (nτ + m)^{-2k},
/// with the m-sum in closed form. Independent of the q-expansion.
pub fn g_lattice(k: EisKind, tau: Complex64, rows: usize) -> Result<Complex64> {
    check_tau(tau)?;
    let w = k.weight();
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 1..=rows {
        sum += cot_sum(w, tau * n as f64);
    }
    Ok(Complex64::new(2.0 * k.zeta_factor() * PI.powi(w as i32) / 2.0, 0.0) + sum * 2.0)
}

/// The completed weight-2 function G₂(τ) − 2πi/(τ − τ̄).
pub fn g2_completed(tau: Complex64, n_terms: usize) -> Result<Complex64> {
    let g = g_series(EisKind::E2hol, tau, n_terms)?;
    Ok(g - Complex64::new(0.0, 2.0 * PI) / (tau - tau.conj()))
}

/// Integer matrix with determinant one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sl2 {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl Sl2 {
    pub const IDENTITY: Sl2 = Sl2 { a: 1, b: 0, c: 0, d: 1 };
    pub const S: Sl2 = Sl2 { a: 0, b: -1, c: 1, d: 0 };
    pub const T: Sl2 = Sl2 { a: 1, b: 1, c: 0, d: 1 };
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Sl2> {
        if a * d - b * c != 1 {
            return Err(Error::ValidationError(format!("det [[{a},{b}],[{c},{d}]] != 1")));
        }
        Ok(Sl2 { a, b, c, d })
    }
    pub fn act(&self, tau: Complex64) -> Result<Complex64> {
        let den = tau * self.c as f64 + self.d as f64;
        if den.norm() == 0.0 {
            return Err(Error::PoleEvaluation("c*tau + d = 0".into()));
        }
        Ok((tau * self.a as f64 + self.b as f64) / den)
    }
    pub fn factor(&self, tau: Complex64) -> Complex64 {
        tau * self.c as f64 + self.d as f64
    }
}

/// Which function a modular-defect computation targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModularTarget {
    /// Completed E2 (weight 2), E4, E6.
    Weight(u32),
    /// Holomorphic E2 without completion.
    E2Hol,
}

/// |f(γτ) − (cτ + d)^k f(τ)|.
pub fn modular_defect(target: ModularTarget, tau: Complex64, g: Sl2, n_terms: usize) -> Result<f64> {
    check_tau(tau)?;
    let f = |t: Complex64| -> Result<Complex64> {
        match target {
            ModularTarget::Weight(2) => g2_completed(t, n_terms),
            ModularTarget::Weight(4) => g_series(EisKind::E4, t, n_terms),
            ModularTarget::Weight(6) => g_series(EisKind::E6, t, n_terms),
            ModularTarget::Weight(k) => Err(Error::ValidationError(format!("weight {k} not in {{2,4,6}}"))),
            ModularTarget::E2Hol => g_series(EisKind::E2hol, t, n_terms),
        }
    };
    let k = match target {
        ModularTarget::Weight(k) => k,
        ModularTarget::E2Hol => 2,
    };
    let lhs = f(g.act(tau)?)?;
    let rhs = g.factor(tau).powu(k) * f(tau)?;
    Ok((lhs - rhs).norm())
}
