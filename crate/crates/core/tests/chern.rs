use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use supercocycle_core::chern::*;
use supercocycle_core::cocycles::{is_cocycle_k, make_k_element, reduce_class};
use supercocycle_core::forms::{ExpMode, Form, FormMatrix, ManifoldModel};
use supercocycle_core::grassmann::GrassmannRing;
use supercocycle_core::scalars::{Deriv, Scalar, ScalarRing};
use supercocycle_core::Error;

fn base(n: usize) -> (Arc<ManifoldModel>, Arc<GrassmannRing>) {
    (ManifoldModel::chart(n), GrassmannRing::new(ScalarRing::Base, &[]))
}

fn circ(f: &Form) -> Form {
    f.clone().with_ring(ScalarRing::Circle).unwrap()
}

fn rank_one(m: &Arc<ManifoldModel>, gr: &Arc<GrassmannRing>) -> SuperConnection {
    let a1 = FormMatrix::from_rows(vec![vec![&Form::x(m, gr, 1) * &Form::dx(m, gr, 2)]]).unwrap();
    SuperConnection::new(m, 1, 0, vec![(1, a1)]).unwrap()
}

fn odd_unit(m: &Arc<ManifoldModel>, gr: &Arc<GrassmannRing>) -> FormMatrix {
    let one = Form::one(m, gr);
    let z = Form::zero(m, gr);
    FormMatrix::new(1, 1, vec![vec![z.clone(), one.clone()], vec![one, z]]).unwrap()
}

#[test]
fn rescale_examples() {
    let (m, gr) = base(2);
    let a = rank_one(&m, &gr);
    let r = rescale_family(&a).unwrap();
    assert_eq!(r.components[&1].rows[0][0], circ(&a.components[&1].rows[0][0]));

    let a0 = SuperConnection::new(&m, 1, 1, vec![(0, odd_unit(&m, &gr))]).unwrap();
    let r = rescale_family(&a0).unwrap();
    assert_eq!(r.components[&0].rows[0][1], Form::scalar(&m, &gr, Scalar::ell().pow_halves(1).unwrap()));

    let dx12 = &Form::dx(&m, &gr, 1) * &Form::dx(&m, &gr, 2);
    let z = Form::zero(&m, &gr);
    let a2 = FormMatrix::new(1, 1, vec![vec![z.clone(), dx12.clone()], vec![z.clone(), z]]).unwrap();
    let r = rescale_family(&SuperConnection::new(&m, 1, 1, vec![(2, a2)]).unwrap()).unwrap();
    assert_eq!(r.components[&2].rows[0][1], dx12.scale(&Scalar::ell().pow_halves(-1).unwrap()));
}

#[test]
fn parity_and_degree_are_validated() {
    let (m, gr) = base(2);
    let dx1 = Form::dx(&m, &gr, 1);
    let bad = FormMatrix::new(1, 1, vec![vec![Form::zero(&m, &gr), dx1.clone()], vec![Form::zero(&m, &gr), Form::zero(&m, &gr)]]).unwrap();
    assert!(matches!(SuperConnection::new(&m, 1, 1, vec![(1, bad)]), Err(Error::ParityViolation(_))));
    let wrong_deg = FormMatrix::from_rows(vec![vec![Form::x(&m, &gr, 1)]]).unwrap();
    assert!(matches!(SuperConnection::new(&m, 1, 0, vec![(1, wrong_deg)]), Err(Error::ValidationError(_))));
}

#[test]
fn curvature_examples() {
    let (m, gr) = base(2);
    let f = curvature_square(&rank_one(&m, &gr)).unwrap();
    assert_eq!(f.rows[0][0], &Form::dx(&m, &gr, 1) * &Form::dx(&m, &gr, 2));

    let f = curvature_square(&SuperConnection::new(&m, 1, 1, vec![(0, odd_unit(&m, &gr))]).unwrap()).unwrap();
    assert_eq!(f, FormMatrix::identity(1, 1, &m, &gr));

    assert!(curvature_square(&SuperConnection::trivial(&m, 2, 1)).unwrap().is_zero());
}

#[test]
fn chern_cocycle_examples() {
    let (m, gr) = base(2);
    let k = chern_cocycle(&rank_one(&m, &gr), None).unwrap();
    let dx12 = &Form::dx(&m, &gr, 1) * &Form::dx(&m, &gr, 2);
    assert_eq!(k.z, circ(&Form::one(&m, &gr).checked_add(&dx12).unwrap()));
    assert!(k.l.is_zero());

    let k = chern_cocycle(&SuperConnection::new(&m, 1, 1, vec![(0, odd_unit(&m, &gr))]).unwrap(), None).unwrap();
    assert!(k.z.is_zero());
    assert!(k.l.is_zero());
    assert!(matches!(
        chern_cocycle(&SuperConnection::new(&m, 1, 1, vec![(0, odd_unit(&m, &gr))]).unwrap(), Some(ExpMode::ExactNilpotent)),
        Err(Error::NonTerminating)
    ));

    let k = chern_cocycle(&SuperConnection::trivial(&m, 2, 3), None).unwrap();
    assert_eq!(k.z, circ(&Form::scalar(&m, &gr, Scalar::int(-1))));
    assert!(k.l.is_zero());
}

#[test]
fn transgression_examples() {
    let (m, gr) = base(2);
    assert!(transgression_check(&rank_one(&m, &gr), None).unwrap().is_zero());

    // A₁ diagonal, A₂ off-diagonal on Chart(3).
    let (m, gr) = base(3);
    let z = Form::zero(&m, &gr);
    let a1 = FormMatrix::new(
        1,
        1,
        vec![vec![&Form::x(&m, &gr, 1) * &Form::dx(&m, &gr, 2), z.clone()], vec![z.clone(), &Form::x(&m, &gr, 3) * &Form::dx(&m, &gr, 1)]],
    )
    .unwrap();
    let a2 = FormMatrix::new(
        1,
        1,
        vec![vec![z.clone(), &(&Form::x(&m, &gr, 2) * &Form::dx(&m, &gr, 1)) * &Form::dx(&m, &gr, 3)], vec![&Form::dx(&m, &gr, 2) * &Form::dx(&m, &gr, 3), z]],
    )
    .unwrap();
    let a = SuperConnection::new(&m, 1, 1, vec![(1, a1), (2, a2)]).unwrap();
    assert!(transgression_check(&a, None).unwrap().is_zero());

    // Numeric mode: A₀ neither nilpotent nor scalar.
    let (m, gr) = base(2);
    let z = Form::zero(&m, &gr);
    let one = Form::one(&m, &gr);
    let a0 = FormMatrix::new(1, 1, vec![vec![z.clone(), one.checked_add(&Form::x(&m, &gr, 1)).unwrap()], vec![one.scale(&Scalar::int(2)), z.clone()]]).unwrap();
    let a1 = FormMatrix::new(1, 1, vec![vec![&Form::x(&m, &gr, 2) * &Form::dx(&m, &gr, 1), z.clone()], vec![z, Form::dx(&m, &gr, 2)]]).unwrap();
    let a = SuperConnection::new(&m, 1, 1, vec![(0, a0), (1, a1)]).unwrap();
    assert!(matches!(chern_cocycle(&a, None), Err(Error::NonTerminating)));
    let r = transgression_numeric(&a, &NumericSample::new(1.0, vec![0.3, -0.2])).unwrap();
    assert!(r < 1e-6, "{r}");
}

#[test]
fn transgression_is_not_vacuous() {
    // Over a few seeds some instances must have ℓ-dependent Z, and dropping L
    // must then break the cocycle condition.
    let m = ManifoldModel::chart(4);
    let mut hits = 0;
    for seed in 0..40u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_superconnection(&mut rng, &m, 2, 1, true).unwrap();
        let (zf, lf) = chern_components(&a, None).unwrap();
        let dz = zf.derive(&Deriv::Ell).unwrap();
        assert_eq!(dz, lf.d());
        if !dz.is_zero() {
            hits += 1;
            let broken = make_k_element(&zf, &lf.zero_like()).unwrap();
            assert!(!is_cocycle_k(&broken).unwrap());
        }
    }
    assert!(hits >= 5, "{hits}");
}

#[test]
fn ordinary_connection_reduces_to_rank() {
    let (m, gr) = base(2);
    let a = rank_one(&m, &gr);
    let k = chern_cocycle(&a, None).unwrap();
    assert_eq!(k.z, circ(&classical_chern_form(&a).unwrap()));
    assert_eq!(reduce_class(&k).unwrap().class, Scalar::one());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn transgression_is_exact(seed in any::<u64>(), n in 1usize..=4, p in 0usize..=2, q in 0usize..=2) {
        prop_assume!(p + q > 0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = ManifoldModel::chart(n);
        let a = random_superconnection(&mut rng, &m, p, q, true).unwrap();
        prop_assert!(transgression_check(&a, None).unwrap().is_zero());
        let k = chern_cocycle(&a, None).unwrap();
        prop_assert!(is_cocycle_k(&k).unwrap());
        let zero_part = k.z.degree_part(0);
        let rank = Form::scalar(&m, &k.z.gr, Scalar::int(p as i64 - q as i64)).with_ring(ScalarRing::Circle).unwrap();
        if a.components.iter().all(|(j, c)| *j != 0 || c.is_zero()) {
            prop_assert_eq!(zero_part.filter(|_, mono| mono.iter().all(|e| *e == 0)), rank.filter(|_, _| true));
        }
    }

    #[test]
    fn chern_is_additive(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = ManifoldModel::chart(3);
        let a = random_superconnection(&mut rng, &m, 1, 1, true).unwrap();
        let b = random_superconnection(&mut rng, &m, 1, 0, true).unwrap();
        let s = a.direct_sum(&b).unwrap();
        let (ka, kb, ks) = (chern_cocycle(&a, None).unwrap(), chern_cocycle(&b, None).unwrap(), chern_cocycle(&s, None).unwrap());
        prop_assert_eq!(ks.z, ka.z.checked_add(&kb.z).unwrap());
        prop_assert_eq!(ks.l, ka.l.checked_add(&kb.l).unwrap());
    }

    #[test]
    fn numeric_transgression(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = ManifoldModel::chart(2);
        let a = random_superconnection(&mut rng, &m, 1, 1, false).unwrap();
        let x = vec![rand::Rng::gen_range(&mut rng, -0.5..0.5), rand::Rng::gen_range(&mut rng, -0.5..0.5)];
        let r = transgression_numeric(&a, &NumericSample::new(1.0, x)).unwrap();
        prop_assert!(r < 1e-6, "{}", r);
    }
}
