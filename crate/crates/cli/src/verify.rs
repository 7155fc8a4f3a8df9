//! Verification suites. Each suite is a list of named checks. Checks run on a
//! rayon pool capped by `SUPERCOCYCLE_THREADS` and are reported in their
//! declaration order. Every random draw comes from a ChaCha8 stream keyed by
//! the seed and the check id, so a report depends only on (suite, seed, count).

use crate::report::{Check, Report, Residual, Status};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;
use supercocycle_core::chern::{
    chern_cocycle, classical_chern_form, random_superconnection, transgression_check, transgression_numeric, NumericSample,
};
use supercocycle_core::cocycles::{
    is_cocycle_e, is_cocycle_k, make_k_element, random_chart_form, random_e_data, random_k_data, reduce_class, total_diff, Complex,
    Dir, KElement, TotalElement,
};
use supercocycle_core::eisenstein::{g_lattice, g_series, EisKind};
use supercocycle_core::euler::{
    euler_cocycle, euler_form, holomorphy_defect, holomorphy_defect_opposite_sign, modular_defect, pontryagin_p1, CurvatureSpec,
    ModularTarget, Sl2,
};
use supercocycle_core::forms::{Form, FormMatrix, ManifoldModel};
use supercocycle_core::grassmann::{GrassmannElement as GE, GrassmannRing};
use supercocycle_core::scalars::{chain_rule_check, Deriv, Gauss, Scalar, ScalarRing};
use supercocycle_core::supergeom::*;
use supercocycle_core::{Error, Result};

pub const SUITES: [&str; 8] = ["all", "group-laws", "invariance-11", "invariance-21", "cocycles", "chern", "euler", "modular"];

/// Run parameters shared by every check.
#[derive(Clone, Copy, Debug)]
pub struct Params {
    pub seed: u64,
    /// Instance count for the randomized proposition and cohomology checks;
    /// descent samples ten times as many points.
    pub count: u64,
}

struct Outcome {
    ok: bool,
    residual: Residual,
}

fn exact(residual: Option<String>) -> Outcome {
    match residual {
        None => Outcome { ok: true, residual: Residual::zero() },
        Some(r) => Outcome { ok: false, residual: Residual::Exact(r) },
    }
}

fn exact_form(f: &Form) -> Outcome {
    exact((!f.is_zero()).then(|| f.to_string()))
}

fn below(x: f64, tol: f64) -> Outcome {
    Outcome { ok: x < tol, residual: Residual::numeric(x) }
}

type CheckFn = Box<dyn Fn(&mut Ctx) -> Result<Outcome> + Send + Sync>;

struct Spec {
    id: &'static str,
    anchor: &'static str,
    run: CheckFn,
}

/// Per-check state: parameters plus the check's own random stream.
pub struct Ctx {
    pub params: Params,
    pub rng: ChaCha8Rng,
}

fn fnv(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn spec(id: &'static str, anchor: &'static str, run: impl Fn(&mut Ctx) -> Result<Outcome> + Send + Sync + 'static) -> Spec {
    Spec { id, anchor, run: Box::new(run) }
}

/// Which criterion group a check id belongs to: the text before the first dot.
pub fn group_of(id: &str) -> &str {
    id.split('.').next().unwrap_or(id)
}

pub fn thread_cap() -> usize {
    std::env::var("SUPERCOCYCLE_THREADS").ok().and_then(|s| s.parse().ok()).filter(|n| *n > 0).unwrap_or_else(|| {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    })
}

/// Run a suite. Unknown suite names are the caller's usage error.
pub fn run_verify(suite: &str, params: Params) -> Result<Report> {
    let specs = suite_specs(suite).ok_or_else(|| Error::ValidationError(format!("unknown suite {suite}")))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_cap())
        .build()
        .map_err(|e| Error::ValidationError(e.to_string()))?;
    let checks: Vec<Check> = pool.install(|| specs.par_iter().map(|s| run_one(s, params)).collect());
    let mut r = Report::new(suite, params.seed, params.count);
    r.checks = checks;
    Ok(r)
}

fn run_one(s: &Spec, params: Params) -> Check {
    let mut ctx = Ctx { params, rng: ChaCha8Rng::seed_from_u64(params.seed ^ fnv(s.id)) };
    let t0 = Instant::now();
    let out = match catch_unwind(AssertUnwindSafe(|| (s.run)(&mut ctx))) {
        Ok(Ok(o)) => o,
        Ok(Err(e)) => Outcome { ok: false, residual: Residual::Exact(format!("error: {e}")) },
        Err(_) => Outcome { ok: false, residual: Residual::Exact("error: panic".into()) },
    };
    Check {
        id: s.id.into(),
        anchor: s.anchor.into(),
        status: if out.ok { Status::Pass } else { Status::Fail },
        residual: out.residual,
        elapsed_ms: Some(t0.elapsed().as_secs_f64() * 1e3),
    }
}

fn suite_specs(suite: &str) -> Option<Vec<Spec>> {
    Some(match suite {
        "all" => [group_laws(), invariance_11(), invariance_21(), cocycles(), chern(), euler(), modular()].into_iter().flatten().collect(),
        "group-laws" => group_laws(),
        "invariance-11" => invariance_11(),
        "invariance-21" => invariance_21(),
        "cocycles" => cocycles(),
        "chern" => chern(),
        "euler" => euler(),
        "modular" => modular(),
        _ => return None,
    })
}

// ------------------------------------------------------------------ random Grassmann data

/// Random element of the given parity built from monomials in `gens`, plus
/// an optional body.
fn random_ge(rng: &mut ChaCha8Rng, gr: &Arc<GrassmannRing>, parity: u32, gens: &[&str], body: Option<Scalar>) -> Result<GE> {
    let mut x = GE::scalar(gr, body.unwrap_or_else(Scalar::zero));
    for _ in 0..rng.gen_range(1..=3) {
        let mut names: Vec<&str> = gens.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        if names.len() % 2 != parity as usize {
            if names.is_empty() || rng.gen_bool(0.5) {
                let extra = gens[rng.gen_range(0..gens.len())];
                if names.contains(&extra) {
                    names.retain(|n| *n != extra);
                } else {
                    names.push(extra);
                }
            } else {
                names.pop();
            }
        }
        // Soul terms only: the body is fixed by the caller.
        if names.is_empty() || names.len() % 2 != parity as usize {
            continue;
        }
        let c = Scalar::int(rng.gen_range(1..=3) * if rng.gen_bool(0.5) { 1 } else { -1 });
        x = x.checked_add(&GE::monomial(gr, gr.mask_of(&names)?, c))?;
    }
    Ok(x)
}

fn random_sl2(rng: &mut ChaCha8Rng) -> Sl2 {
    let mut g = Sl2::IDENTITY;
    for _ in 0..rng.gen_range(0..=3) {
        let h = if rng.gen_bool(0.5) { Sl2::S } else { Sl2::T };
        g = Sl2::new(g.a * h.a + g.b * h.c, g.a * h.b + g.b * h.d, g.c * h.a + g.d * h.c, g.c * h.b + g.d * h.d).expect("det 1");
    }
    g
}

// ------------------------------------------------------------------ group laws

fn group_laws() -> Vec<Spec> {
    vec![
        spec("group-laws.11.associativity", "1|1 law (t,θ)(t',θ') = (t+t'+iθθ', θ+θ')", |_| {
            let gr = GrassmannRing::new(ScalarRing::Base, &["a", "b", "c"]);
            let (p, q, r) = (Point11::symbolic(&gr, "t1", "a")?, Point11::symbolic(&gr, "t2", "b")?, Point11::symbolic(&gr, "t3", "c")?);
            let lhs = mul_11(&mul_11(&p, &q)?, &r)?;
            let rhs = mul_11(&p, &mul_11(&q, &r)?)?;
            Ok(exact(diff_11(&lhs, &rhs)))
        }),
        spec("group-laws.11.unit-inverse", "1|1 law: unit (0,0) and inverse (−t,−θ)", |_| {
            let gr = GrassmannRing::new(ScalarRing::Base, &["a"]);
            let p = Point11::symbolic(&gr, "t", "a")?;
            let z = Point11::zero(&gr);
            for (x, y) in [(mul_11(&p, &z)?, p.clone()), (mul_11(&z, &p)?, p.clone()), (mul_11(&p, &inv_11(&p))?, z.clone()), (mul_11(&inv_11(&p), &p)?, z)] {
                if let Some(d) = diff_11(&x, &y) {
                    return Ok(exact(Some(d)));
                }
            }
            Ok(exact(None))
        }),
        spec("group-laws.11.semidirect", "E^{1|1} ⋊ ℤ/2: associativity, unit and inverse with the flip acting on η", |_| {
            let gr = GrassmannRing::new(ScalarRing::Base, &["a", "b", "c"]);
            let mk = |s: &str, e: &str, f: i8| GroupPoint11::new(GE::scalar(&gr, Scalar::sym(s)), GE::gen(&gr, e).unwrap(), f);
            for f1 in [1, -1] {
                for f2 in [1, -1] {
                    for f3 in [1, -1] {
                        let (x, y, z) = (mk("s1", "a", f1)?, mk("s2", "b", f2)?, mk("s3", "c", f3)?);
                        if x.mul(&y)?.mul(&z)? != x.mul(&y.mul(&z)?)? {
                            return Ok(exact(Some(format!("flips ({f1},{f2},{f3}) not associative"))));
                        }
                        if x.mul(&x.inverse())? != GroupPoint11::identity(&gr) || x.inverse().mul(&x)? != GroupPoint11::identity(&gr) {
                            return Ok(exact(Some(format!("flip {f1}: inverse fails"))));
                        }
                    }
                }
            }
            Ok(exact(None))
        }),
        spec("group-laws.21.associativity", "2|1 law (z,z̄,θ)(z',z̄',θ') = (z+z', z̄+z̄'+θθ', θ+θ')", |_| {
            let gr = GrassmannRing::new(ScalarRing::Base, &["a", "b", "c"]);
            let p = Point21::symbolic(&gr, "z1", "zb1", "a")?;
            let q = Point21::symbolic(&gr, "z2", "zb2", "b")?;
            let r = Point21::symbolic(&gr, "z3", "zb3", "c")?;
            let lhs = mul_21(&mul_21(&p, &q)?, &r)?;
            let rhs = mul_21(&p, &mul_21(&q, &r)?)?;
            Ok(exact((lhs != rhs).then(|| format!("{} vs {}", lhs.zbar, rhs.zbar))))
        }),
        spec("group-laws.21.unit-inverse", "2|1 law: unit (0,0,0) and inverse (−z,−z̄,−θ)", |_| {
            let gr = GrassmannRing::new(ScalarRing::Base, &["a"]);
            let p = Point21::symbolic(&gr, "z", "zb", "a")?;
            let z = Point21::zero(&gr);
            let ok = mul_21(&p, &z)? == p && mul_21(&z, &p)? == p && mul_21(&p, &inv_21(&p))? == z && mul_21(&inv_21(&p), &p)? == z;
            Ok(exact((!ok).then(|| "unit or inverse law fails".to_string())))
        }),
    ]
}

fn diff_11(a: &Point11, b: &Point11) -> Option<String> {
    (a != b).then(|| format!("t: {} vs {}; θ: {} vs {}", a.t, b.t, a.theta, b.theta))
}

// ------------------------------------------------------------------ 1|1

fn bracket_residual(lhs: &VectorField, rhs: &VectorField) -> Result<Outcome> {
    if lhs == rhs {
        return Ok(exact(None));
    }
    Ok(exact(Some(format!("{:?} vs {:?}", lhs.comps, rhs.comps))))
}

fn chart2_forms_11(rng: &mut ChaCha8Rng) -> Result<Vec<Form>> {
    let m = ManifoldModel::chart(2);
    let gr = ring11(&[]);
    let lam = Form::grass(&m, &gr, LAMBDA)?;
    let mut out = Vec::new();
    for deg in 0..=2 {
        let a = random_chart_form(rng, &m, &gr, deg, ScalarRing::Circle).scale(&Scalar::ell().pow_halves(rng.gen_range(-3..=4))?);
        let b = random_chart_form(rng, &m, &gr, (deg + 1) % 3, ScalarRing::Circle).scale(&Scalar::ell().pow_halves(rng.gen_range(-3..=4))?);
        out.push(a.checked_add(&lam.checked_mul(&b)?)?);
    }
    Ok(out)
}

fn lattice_coefficient(rng: &mut ChaCha8Rng) -> Result<Scalar> {
    let pick = [Scalar::l1(), Scalar::l2(), Scalar::l2bar(), Scalar::vol(), Scalar::l1bar()];
    let mut c = Scalar::int(rng.gen_range(1..=3));
    for _ in 0..rng.gen_range(0..=2) {
        let a = &pick[rng.gen_range(0..pick.len())];
        let a = if rng.gen_bool(0.3) && a.as_monomial().is_some() { a.inv()? } else { a.clone() };
        c = &c * &a;
    }
    Ok(c)
}

fn chart2_forms_21(rng: &mut ChaCha8Rng) -> Result<Vec<Form>> {
    let m = ManifoldModel::chart(2);
    let gr = ring21(&[]);
    let l1 = Form::grass(&m, &gr, LAMBDA1)?;
    let l2 = Form::grass(&m, &gr, LAMBDA2)?;
    let mut out = Vec::new();
    for deg in 0..=2 {
        let a = random_chart_form(rng, &m, &gr, deg, ScalarRing::Lattice).scale(&lattice_coefficient(rng)?);
        let b = random_chart_form(rng, &m, &gr, (deg + 1) % 3, ScalarRing::Lattice).scale(&lattice_coefficient(rng)?);
        let c = random_chart_form(rng, &m, &gr, (deg + 2) % 3, ScalarRing::Lattice).scale(&lattice_coefficient(rng)?);
        out.push(a.checked_add(&l1.checked_mul(&b)?)?.checked_add(&l2.checked_mul(&c)?)?);
    }
    Ok(out)
}

fn all_zero(residuals: impl IntoIterator<Item = Result<Form>>) -> Result<Outcome> {
    for r in residuals {
        let r = r?;
        if !r.is_zero() {
            return Ok(exact_form(&r));
        }
    }
    Ok(exact(None))
}

fn invariance_11() -> Vec<Spec> {
    vec![
        spec("brackets.11.DD", "1|1 Wick rotation: D² = −i∂_t, so [D,D] = −2i∂_t", |_| {
            let gr = GrassmannRing::new(ScalarRing::Base, &[THETA]);
            let d = VectorField::d_left(Dim::D11, &gr)?;
            let dt = VectorField::partial(Dim::D11, &gr, Coord::T)?;
            bracket_residual(&vector_field_bracket(&d, &d)?, &dt.scale(&(&Scalar::i() * &Scalar::int(-2))))
        }),
        spec("brackets.11.QQ", "1|1: [Q,Q] = 2i∂_t for the right-invariant Q", |_| {
            let gr = GrassmannRing::new(ScalarRing::Base, &[THETA]);
            let q = VectorField::q_right(Dim::D11, &gr)?;
            let dt = VectorField::partial(Dim::D11, &gr, Coord::T)?;
            bracket_residual(&vector_field_bracket(&q, &q)?, &dt.scale(&(&Scalar::i() * &Scalar::int(2))))
        }),
        spec("brackets.11.DQ", "1|1: left- and right-invariant fields supercommute, [D,Q] = 0", |_| {
            let gr = GrassmannRing::new(ScalarRing::Base, &[THETA]);
            let (d, q) = (VectorField::d_left(Dim::D11, &gr)?, VectorField::q_right(Dim::D11, &gr)?);
            let b = vector_field_bracket(&d, &q)?;
            Ok(exact((!b.comps.is_empty()).then(|| format!("{:?}", b.comps))))
        }),
        spec("descent.11.conjugation", "super circle: g(ℓ,λ)g⁻¹ = (ℓ ± 2iηλ, ±λ) on random Grassmann points", |c| {
            let gr = ring11(&["a", "b", "c"]);
            let gens = [LAMBDA, ETA, "a", "b", "c"];
            for _ in 0..10 * c.params.count {
                let rng = &mut c.rng;
                let k = rng.gen_range(-3..=3);
                let s = random_ge(rng, &gr, 0, &gens, Some(Scalar::int(k)))?;
                let eta = random_ge(rng, &gr, 1, &gens, None)?;
                let flip = if rng.gen_bool(0.5) { 1 } else { -1 };
                let g = GroupPoint11::new(s, eta, flip)?;
                let ell = random_ge(rng, &gr, 0, &gens, Some(Scalar::ell()))?;
                let lam = random_ge(rng, &gr, 1, &gens, None)?;
                let cp = CirclePoint::new(ell, lam)?;
                let out = conj_lattice_11(&g, &cp)?;
                let by_law = g.mul(&GroupPoint11::new(cp.ell.clone(), cp.lambda.clone(), 1)?)?.mul(&g.inverse())?;
                if by_law.s != out.ell || by_law.eta != out.lambda || by_law.flip != 1 {
                    return Ok(exact(Some(format!("ℓ' = {} but g(ℓ,λ)g⁻¹ has s = {}", out.ell, by_law.s))));
                }
            }
            Ok(exact(None))
        }),
        spec("descent.11.projection", "super circle: p̃(t,θ) = θ − λt/ℓ is invariant under the lattice", |_| {
            let gr = ring11(&[THETA]);
            let c = CirclePoint::generic(&gr)?;
            let p = Point11::symbolic(&gr, "t", THETA)?;
            let base = projection_tilde_11(&c, &p)?;
            for n in [1, 2, 3, -1, -2] {
                let moved = projection_tilde_11(&c, &c.shift(n, &p)?)?;
                if moved != base {
                    return Ok(exact(Some(format!("shift {n}: {}", moved.checked_add(&base.neg())?))));
                }
            }
            Ok(exact(None))
        }),
        spec("generator.11.eta", "1|1: ∂_η of the pulled-back action at the identity equals Q̂ (calibration +1)", |c| {
            let forms = chart2_forms_11(&mut c.rng)?;
            all_zero(forms.iter().map(|f| eta_generator_residual(Dim::D11, f)))
        }),
        spec("generator.11.square", "1|1: Q̂∘Q̂ = i∂_s, the translation generator times the calibrated unit", |c| {
            let forms = chart2_forms_11(&mut c.rng)?;
            all_zero(forms.iter().map(|f| qhat_square_residual(Dim::D11, f)))
        }),
        spec("proposition.11", "1|1: dZ = 0 and ∂_ℓZ = dL ⟺ Q̂-closed ⟺ cocycle of Tot(K)", |c| {
            let m = ManifoldModel::chart(3);
            let (mut bad, mut yes, mut no) = (0, 0, 0);
            for i in 0..c.params.count {
                let (z, l, _) = random_k_data(&mut c.rng, &m, i % 2 == 1)?;
                let rep = invariance_conditions(&InvarianceData::Circle { z: z.clone(), l: l.clone() })?;
                let coc = is_cocycle_k(&make_k_element(&z, &l)?)?;
                if rep.holds != coc || rep.holds != rep.q_closed {
                    bad += 1;
                }
                if coc { yes += 1 } else { no += 1 }
            }
            Ok(proposition_outcome(bad, yes, no, c.params.count))
        }),
    ]
}

/// Disagreements must be zero and, once there are enough instances, both
/// outcomes must occur so that the equivalence is not vacuous.
fn proposition_outcome(bad: u64, yes: u64, no: u64, count: u64) -> Outcome {
    if bad > 0 {
        return exact(Some(format!("{bad} of {count} instances disagree")));
    }
    if count >= 10 && (yes == 0 || no == 0) {
        return exact(Some(format!("degenerate sample: {yes} cocycles, {no} non-cocycles")));
    }
    exact(None)
}

// ------------------------------------------------------------------ 2|1

fn invariance_21() -> Vec<Spec> {
    vec![
        spec("brackets.21.QQ", "2|1: [Q,Q] = ∂_z̄, hence Q² = ½∂_z̄", |_| {
            let gr = GrassmannRing::new(ScalarRing::Base, &[THETA]);
            let q = VectorField::q_right(Dim::D21, &gr)?;
            bracket_residual(&vector_field_bracket(&q, &q)?.scale(&Scalar::frac(1, 2)), &VectorField::partial(Dim::D21, &gr, Coord::Zbar)?)
        }),
        spec("brackets.21.DD", "2|1: [D,D] = −∂_z̄ for the left-invariant D", |_| {
            let gr = GrassmannRing::new(ScalarRing::Base, &[THETA]);
            let d = VectorField::d_left(Dim::D21, &gr)?;
            let dzb = VectorField::partial(Dim::D21, &gr, Coord::Zbar)?;
            bracket_residual(&vector_field_bracket(&d, &d)?.scale(&Scalar::frac(1, 2)), &dzb.scale(&Scalar::int(-1)))
        }),
        spec("brackets.21.dzQ", "2|1: [∂_z, Q] = 0", |_| {
            let gr = GrassmannRing::new(ScalarRing::Base, &[THETA]);
            let b = vector_field_bracket(&VectorField::partial(Dim::D21, &gr, Coord::Z)?, &VectorField::q_right(Dim::D21, &gr)?)?;
            Ok(exact((!b.comps.is_empty()).then(|| format!("{:?}", b.comps))))
        }),
        spec("brackets.21.DQ", "2|1: [D,Q] = 0", |_| {
            let gr = GrassmannRing::new(ScalarRing::Base, &[THETA]);
            let b = vector_field_bracket(&VectorField::d_left(Dim::D21, &gr)?, &VectorField::q_right(Dim::D21, &gr)?)?;
            Ok(exact((!b.comps.is_empty()).then(|| format!("{:?}", b.comps))))
        }),
        spec("descent.21.conjugation", "super torus: explicit Λ' agrees with g(Λ^γ P) = Λ' g(P) on random Grassmann points", |c| {
            let gr = ring21(&["a", "b", "c"]);
            let gens = [ETA, "a", "b", "c"];
            let units = [Gauss::one(), Gauss::int(-1), Gauss::i(), Gauss::i().neg()];
            for _ in 0..10 * c.params.count {
                let rng = &mut c.rng;
                let w = random_ge(rng, &gr, 0, &gens, Some(Scalar::sym("w")))?;
                let wbar = random_ge(rng, &gr, 0, &gens, Some(Scalar::sym("wbar")))?;
                let eta = random_ge(rng, &gr, 1, &gens, None)?;
                let (u, ub) = if rng.gen_bool(0.5) {
                    let k = units[rng.gen_range(0..4)].clone();
                    (Scalar::constant(k.clone()), Scalar::constant(k.inv().expect("unit")))
                } else {
                    (Scalar::sym("u"), Scalar::sym("u").inv()?)
                };
                let g = GroupPoint21::new(w, wbar, eta, GE::scalar(&gr, u), GE::scalar(&gr, ub), random_sl2(rng))?;
                let base = SuperLattice::generic(&gr)?;
                let bump = |rng: &mut ChaCha8Rng, x: &GE| -> Result<GE> { x.checked_add(&random_ge(rng, &gr, 0, &gens, None)?) };
                let lat = SuperLattice::new(
                    Point21 { z: bump(rng, &base.g1.z)?, zbar: bump(rng, &base.g1.zbar)?, theta: base.g1.theta.clone() },
                    Point21 { z: bump(rng, &base.g2.z)?, zbar: bump(rng, &base.g2.zbar)?, theta: base.g2.theta.clone() },
                )?;
                // conj_lattice_21 checks the commuting square itself and errors on mismatch.
                match conj_lattice_21(&g, &lat) {
                    Ok(_) => {}
                    Err(Error::ConjugationMismatch(m)) => return Ok(exact(Some(m))),
                    Err(e) => return Err(e),
                }
            }
            Ok(exact(None))
        }),
        spec("descent.21.projection", "super torus: p̃ is invariant under both lattice translations", |_| {
            let gr = ring21(&[THETA]);
            let lat = SuperLattice::generic(&gr)?;
            let p = Point21::symbolic(&gr, "z", "zbar", THETA)?;
            let base = projection_tilde_21(&lat, &p)?;
            for (n, m) in [(1, 0), (0, 1), (2, -1), (-1, 3)] {
                let moved = projection_tilde_21(&lat, &lat.shift(n, m, &p)?)?;
                if moved != base {
                    return Ok(exact(Some(format!("shift ({n},{m}): {}", moved.checked_add(&base.neg())?))));
                }
            }
            Ok(exact(None))
        }),
        spec("generator.21.eta", "2|1: ∂_η of the pulled-back action at the identity equals Q̂ (calibration +1)", |c| {
            let forms = chart2_forms_21(&mut c.rng)?;
            all_zero(forms.iter().map(|f| eta_generator_residual(Dim::D21, f)))
        }),
        spec("generator.21.square", "2|1: Q̂∘Q̂ = ∂_w̄, the antiholomorphic translation generator", |c| {
            let forms = chart2_forms_21(&mut c.rng)?;
            all_zero(forms.iter().map(|f| qhat_square_residual(Dim::D21, f)))
        }),
        spec("generator.21.dhat-w", "2|1: ∂̂_w = −∂_w of the pulled-back action (calibration −1)", |c| {
            let forms = chart2_forms_21(&mut c.rng)?;
            all_zero(forms.iter().map(dhat_w_residual))
        }),
        spec("proposition.21.chain-rule", "2|1: ℓ̄-derivatives of φ*Z agree with the τ̄- and v-derivatives of Z", |c| {
            for _ in 0..c.params.count.min(50) {
                let rng = &mut c.rng;
                let mut z = Scalar::int(rng.gen_range(1..=3));
                let pick = [Scalar::e2(), Scalar::eis(EisKind::E4), Scalar::v(), Scalar::sigma(), Scalar::tau(), Scalar::beta()];
                for _ in 0..rng.gen_range(1..=3) {
                    let a = pick[rng.gen_range(0..pick.len())].clone();
                    let a = if rng.gen_bool(0.3) { a.inv().unwrap_or(a) } else { a };
                    z = &z * &a;
                }
                if !chain_rule_check(&z)? {
                    return Ok(exact(Some(format!("fails on {z}"))));
                }
            }
            Ok(exact(None))
        }),
        spec("proposition.21", "2|1 via moduli → lattice: invariance conditions ⟺ Q̂-closed ⟺ cocycle of Tot(E)", |c| {
            let m = ManifoldModel::chart(4);
            let (mut bad, mut yes, mut no) = (0, 0, 0);
            for i in 0..c.params.count {
                let (z, zv, ztb, _) = random_e_data(&mut c.rng, &m, i % 2 == 1)?;
                let rep = invariance_conditions(&InvarianceData::Moduli { z: z.clone(), zv: zv.clone(), ztb: ztb.clone() })?;
                let coc = is_cocycle_e(&supercocycle_core::cocycles::make_e_element(&z, &zv, &ztb)?)?;
                if rep.holds != coc || rep.holds != rep.q_closed {
                    bad += 1;
                }
                if coc { yes += 1 } else { no += 1 }
            }
            Ok(proposition_outcome(bad, yes, no, c.params.count))
        }),
    ]
}

// ------------------------------------------------------------------ cohomology

fn cocycles() -> Vec<Spec> {
    vec![
        spec("cohomology.d-squared", "total differential squares to zero on Tot(K)", |c| {
            let m = ManifoldModel::chart(3);
            for _ in 0..c.params.count.min(50) {
                let (z, l, _) = random_k_data(&mut c.rng, &m, true)?;
                let e = make_k_element(&z, &l)?.packaged()?;
                let dd = total_diff(&total_diff(&e)?)?;
                if !dd.is_zero() {
                    return Ok(exact_form(&dd.base));
                }
            }
            Ok(exact(None))
        }),
        spec("cohomology.reduce-to-constant", "on a chart every K-cocycle is cohomologous to the constant part of Z", |c| {
            let m = ManifoldModel::chart(3);
            for _ in 0..c.params.count {
                let (z, l, _) = random_k_data(&mut c.rng, &m, false)?;
                let red = reduce_class(&make_k_element(&z, &l)?)?;
                let constant = z.terms.get(&(0, m.one())).cloned().unwrap_or_else(Scalar::zero);
                if red.class.as_constant().is_none() || red.class != constant {
                    return Ok(exact(Some(format!("class {} but constant term {}", red.class, constant))));
                }
            }
            Ok(exact(None))
        }),
        spec("cohomology.exact-is-zero", "coboundaries d_tot(h + g dℓ) reduce to the zero class", |c| {
            let m = ManifoldModel::chart(3);
            let gr = GrassmannRing::new(ScalarRing::Circle, &[]);
            for _ in 0..c.params.count {
                let rng = &mut c.rng;
                let h = random_chart_form(rng, &m, &gr, 1, ScalarRing::Circle).scale(&Scalar::ell().pow_halves(rng.gen_range(-2..=3))?);
                let g = random_chart_form(rng, &m, &gr, 2, ScalarRing::Circle).scale(&Scalar::ell().pow_halves(rng.gen_range(-2..=3))?);
                let x = TotalElement::new(
                    Complex::K,
                    h.scale_by_power(&Scalar::beta(), 1)?,
                    vec![(Dir::Ell, g.scale_by_power(&Scalar::beta(), 2)?)],
                )?;
                let e = KElement::from_packaged(&total_diff(&x)?)?;
                let red = reduce_class(&e)?;
                if !red.class.is_zero() {
                    return Ok(exact(Some(format!("exact input reduced to {}", red.class))));
                }
            }
            Ok(exact(None))
        }),
    ]
}

// ------------------------------------------------------------------ chern

const RANKS: [(usize, usize); 8] = [(1, 0), (0, 1), (1, 1), (2, 1), (1, 2), (2, 2), (3, 1), (1, 3)];

fn chern() -> Vec<Spec> {
    vec![
        spec("chern.transgression-exact", "∂_ℓZ = dL exactly for nilpotent A₀, charts up to dimension 4, rank up to 4", |c| {
            for n in 1..=4 {
                let m = ManifoldModel::chart(n);
                for (p, q) in RANKS {
                    let a = random_superconnection(&mut c.rng, &m, p, q, true)?;
                    let r = transgression_check(&a, None)?;
                    if !r.is_zero() {
                        return Ok(exact_form(&r));
                    }
                }
            }
            Ok(exact(None))
        }),
        spec("chern.cocycle", "the Chern character (Z, L) is a degree-zero cocycle of Tot(K)", |c| {
            for n in 1..=4 {
                let m = ManifoldModel::chart(n);
                for (p, q) in RANKS {
                    let a = random_superconnection(&mut c.rng, &m, p, q, true)?;
                    if !is_cocycle_k(&chern_cocycle(&a, None)?)? {
                        return Ok(exact(Some(format!("Chart({n}) rank ({p}|{q}) is not a cocycle"))));
                    }
                }
            }
            Ok(exact(None))
        }),
        spec("chern.transgression-numeric", "∂_ℓZ = dL by central differences for generic A₀ (relative residual)", |c| {
            let m = ManifoldModel::chart(2);
            let mut worst = 0f64;
            for _ in 0..10 {
                let a = random_superconnection(&mut c.rng, &m, 1, 1, false)?;
                let x = vec![c.rng.gen_range(-0.5..0.5), c.rng.gen_range(-0.5..0.5)];
                let ell = c.rng.gen_range(0.5..2.0);
                worst = worst.max(transgression_numeric(&a, &NumericSample::new(ell, x))?);
            }
            Ok(below(worst, 1e-6))
        }),
        spec("chern.ordinary", "for an ordinary connection Z is independent of ℓ and equals sTr exp(∇²)", |c| {
            for n in 1..=4 {
                let m = ManifoldModel::chart(n);
                for (p, q) in RANKS {
                    let mut a = random_superconnection(&mut c.rng, &m, p, q, true)?;
                    a.components.retain(|j, _| *j == 1);
                    let k = chern_cocycle(&a, None)?;
                    let classical = classical_chern_form(&a)?.with_ring(ScalarRing::Circle)?;
                    let r = k.z.checked_add(&classical.neg())?;
                    if !r.is_zero() || !k.z.derive(&Deriv::Ell)?.is_zero() {
                        return Ok(exact_form(&r));
                    }
                }
            }
            Ok(exact(None))
        }),
    ]
}

// ------------------------------------------------------------------ euler

fn pair(m: &Arc<ManifoldModel>, i: usize, j: usize) -> Form {
    let g = GrassmannRing::new(ScalarRing::Base, &[]);
    Form::dx(m, &g, i).checked_mul(&Form::dx(m, &g, j)).expect("same model")
}

/// Antisymmetric r×r curvature whose entries are integer combinations of
/// disjoint coordinate pairs plus an occasional extra pair.
fn random_curvature(rng: &mut ChaCha8Rng, n: usize, r: usize) -> Result<CurvatureSpec> {
    let m = ManifoldModel::chart(n);
    let z = Form::zero(&m, &GrassmannRing::new(ScalarRing::Base, &[]));
    let mut rows = vec![vec![z.clone(); r]; r];
    for i in 0..r {
        for j in i + 1..r {
            let mut f = z.clone();
            for k in 0..n / 2 {
                f = f.checked_add(&pair(&m, 2 * k + 1, 2 * k + 2).scale(&Scalar::int(rng.gen_range(-2..=2))))?;
            }
            let (a, b) = (rng.gen_range(1..=n), rng.gen_range(1..=n));
            if a != b && rng.gen_bool(0.5) {
                f = f.checked_add(&pair(&m, a, b))?;
            }
            rows[i][j] = f.clone();
            rows[j][i] = f.neg();
        }
    }
    CurvatureSpec::new(FormMatrix::from_rows(rows)?)
}

fn euler() -> Vec<Spec> {
    vec![
        spec("euler.holomorphy", "∂_τ̄Eu = −β²Tr(F²)/(4πi(τ−τ̄)²)·Eu exactly on Chart(4) and Chart(6)", |c| {
            for n in [4, 6] {
                for r in [2, 4] {
                    for _ in 0..3 {
                        let f = random_curvature(&mut c.rng, n, r)?;
                        let d = holomorphy_defect(&f)?;
                        if !d.is_zero() {
                            return Ok(exact_form(&d));
                        }
                    }
                }
            }
            Ok(exact(None))
        }),
        spec("euler.anomaly-present", "the τ̄-dependence is real: the opposite-sign defect is nonzero somewhere", |c| {
            for _ in 0..20 {
                let f = random_curvature(&mut c.rng, 8, 4)?;
                if !euler_form(&f)?.derive(&Deriv::TauBar)?.is_zero() && !holomorphy_defect_opposite_sign(&f)?.is_zero() {
                    return Ok(exact(None));
                }
            }
            Ok(exact(Some("no instance with τ̄-dependent Eu found".into())))
        }),
        spec("euler.cocycle", "given dH = p₁, (Eu, 0, c(τ−τ̄)⁻²H∧Eu) is a cocycle of Tot(E)", |c| {
            for n in [4, 6] {
                for _ in 0..3 {
                    let f = random_curvature(&mut c.rng, n, 2)?;
                    let h = pontryagin_p1(&f)?.poincare_homotopy()?;
                    let k = euler_cocycle(&f, Some(&h))?;
                    if !is_cocycle_e(&k.element)? {
                        return Ok(exact(Some(format!("Chart({n}): not a cocycle"))));
                    }
                }
            }
            Ok(exact(None))
        }),
        spec("euler.torus-no-witness", "torus model: p₁ ≠ 0 is not exact, so no string structure exists", |_| {
            let t = ManifoldModel::torus(4);
            let g = GrassmannRing::new(ScalarRing::Base, &[]);
            let e = |i: usize| Form::gen(&t, &g, &format!("e{i}"));
            let f = e(1)?.checked_mul(&e(2)?)?.checked_add(&e(3)?.checked_mul(&e(4)?)?)?;
            let z = f.zero_like();
            let c = CurvatureSpec::new(FormMatrix::from_rows(vec![vec![z.clone(), f.clone()], vec![f.neg(), z]])?)?;
            match euler_cocycle(&c, None) {
                Err(Error::NoWitness) => Ok(exact(None)),
                Err(e) => Ok(exact(Some(format!("expected NoWitness, got {e}")))),
                Ok(_) => Ok(exact(Some("expected NoWitness, got a cocycle".into()))),
            }
        }),
    ]
}

// ------------------------------------------------------------------ modular

fn random_taus(c: &mut Ctx) -> Vec<Complex64> {
    (0..10).map(|_| Complex64::new(c.rng.gen_range(-0.5..0.5), c.rng.gen_range(0.8..2.0))).collect()
}

fn modular() -> Vec<Spec> {
    let weight = |k: u32| {
        move |c: &mut Ctx| -> Result<Outcome> {
            let mut worst = 0f64;
            for tau in random_taus(c) {
                for g in [Sl2::S, Sl2::T] {
                    worst = worst.max(modular_defect(ModularTarget::Weight(k), tau, g, 50)?);
                }
            }
            Ok(below(worst, 1e-8))
        }
    };
    vec![
        spec("modular.E2", "completed E2 = E2hol − 2πi/(τ−τ̄) has weight (2,0) under S and T", weight(2)),
        spec("modular.E4", "E4 has weight 4 under S and T", weight(4)),
        spec("modular.E6", "E6 has weight 6 under S and T", weight(6)),
        spec("modular.evaluators-agree", "q-expansion and lattice-sum evaluators agree within 1e-10", |c| {
            let mut worst = 0f64;
            for tau in random_taus(c) {
                for k in [EisKind::E2hol, EisKind::E4, EisKind::E6] {
                    worst = worst.max((g_series(k, tau, 50)? - g_lattice(k, tau, 40)?).norm());
                }
            }
            Ok(below(worst, 1e-10))
        }),
        spec("modular.E2hol-anomaly", "holomorphic E2 alone is not modular: defect above 0.1 at some sample", |c| {
            let mut best = 0f64;
            for tau in random_taus(c) {
                best = best.max(modular_defect(ModularTarget::E2Hol, tau, Sl2::S, 50)?);
            }
            Ok(Outcome { ok: best > 0.1, residual: Residual::numeric(best) })
        }),
    ]
}
