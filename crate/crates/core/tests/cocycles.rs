use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use supercocycle_core::cocycles::*;
use supercocycle_core::forms::{Form, ManifoldModel};
use supercocycle_core::grassmann::GrassmannRing;
use supercocycle_core::scalars::{Gauss, Scalar, ScalarRing};
use supercocycle_core::supergeom::{invariance_conditions, InvarianceData};
use supercocycle_core::Error;

fn circle(n: usize) -> (Arc<ManifoldModel>, Arc<GrassmannRing>) {
    (ManifoldModel::chart(n), GrassmannRing::new(ScalarRing::Circle, &[]))
}

fn k(z: &Form, l: &Form) -> KElement {
    make_k_element(z, l).unwrap()
}

#[test]
fn make_k_element_examples() {
    let (m, gr) = circle(2);
    let one = Form::one(&m, &gr);
    let zero = Form::zero(&m, &gr);
    let x1 = Form::x(&m, &gr, 1);
    let dx12 = &Form::dx(&m, &gr, 1) * &Form::dx(&m, &gr, 2);
    let x1dx2 = &x1 * &Form::dx(&m, &gr, 2);

    let e = k(&one, &zero).packaged().unwrap();
    assert_eq!(e.base, one);
    assert!(e.parts.is_empty());

    let e = k(&dx12, &zero).packaged().unwrap();
    assert_eq!(e.base, dx12.scale(&Scalar::beta()));

    let e = k(&zero, &x1dx2).packaged().unwrap();
    assert!(e.base.is_zero());
    assert_eq!(e.part(Dir::Ell), x1dx2.scale(&Scalar::beta()));

    assert!(matches!(make_k_element(&x1dx2, &zero), Err(Error::ParityViolation(_))));
    assert!(matches!(make_k_element(&zero, &dx12), Err(Error::ParityViolation(_))));
}

#[test]
fn total_diff_examples() {
    let (m, gr) = circle(2);
    let zero = Form::zero(&m, &gr);
    let dx12 = &Form::dx(&m, &gr, 1) * &Form::dx(&m, &gr, 2);
    let x1dx2 = &Form::x(&m, &gr, 1) * &Form::dx(&m, &gr, 2);
    let ell_dx12 = dx12.scale(&Scalar::ell());

    let unit = k(&Form::one(&m, &gr), &zero);
    assert!(total_diff(&unit.packaged().unwrap()).unwrap().is_zero());
    assert!(is_cocycle(AnyElement::K(&unit)).unwrap());

    let e = k(&ell_dx12, &x1dx2);
    assert!(total_diff(&e.packaged().unwrap()).unwrap().is_zero());
    assert!(is_cocycle_k(&e).unwrap());

    let e = k(&ell_dx12, &zero);
    let t = total_diff(&e.packaged().unwrap()).unwrap();
    assert!(t.base.is_zero());
    assert_eq!(t.part(Dir::Ell), dx12.scale(&Scalar::beta()));
    assert!(!is_cocycle_k(&e).unwrap());
}

#[test]
fn reduce_class_examples() {
    let (m, gr) = circle(2);
    let zero = Form::zero(&m, &gr);
    let one = Form::one(&m, &gr);
    let r = reduce_class(&k(&one, &zero)).unwrap();
    assert_eq!(r.class, Scalar::one());

    // Rank-one Chern-type cocycle 1 + dx¹dx².
    let dx12 = &Form::dx(&m, &gr, 1) * &Form::dx(&m, &gr, 2);
    let r = reduce_class(&k(&one.checked_add(&dx12).unwrap(), &zero)).unwrap();
    assert_eq!(r.class, Scalar::one());

    // An ℓ-dependent closed top form paired with its ℓ-derivative primitive.
    let x1dx2 = &Form::x(&m, &gr, 1) * &Form::dx(&m, &gr, 2);
    let z = one.scale(&Scalar::int(3)).checked_add(&dx12.scale(&Scalar::ell())).unwrap();
    let r = reduce_class(&k(&z, &x1dx2)).unwrap();
    assert_eq!(r.class, Scalar::int(3));

    // Exact elements reduce to zero.
    let h = x1dx2.scale(&Scalar::ell().pow(2).unwrap());
    let x = TotalElement::new(Complex::K, h.scale_by_power(&Scalar::beta(), 1).unwrap(), vec![]).unwrap();
    let exact = KElement::from_packaged(&total_diff(&x).unwrap()).unwrap();
    assert!(!exact.z.is_zero());
    assert!(reduce_class(&exact).unwrap().class.is_zero());

    assert!(matches!(reduce_class(&k(&dx12.scale(&Scalar::ell()), &zero)), Err(Error::NotCocycle)));
}

#[test]
fn witness_search_examples() {
    let (m, gr) = circle(4);
    assert!(witness_search(&Form::zero(&m, &gr), 2).unwrap().is_zero());

    let mut top = Form::one(&m, &gr);
    for i in 1..=4 {
        top = &top * &Form::dx(&m, &gr, i);
    }
    let y = top.scale(&(&Scalar::pi().pow(-2).unwrap() * &Scalar::frac(1, 2)));
    let x = witness_search(&y, 2).unwrap();
    assert_eq!(x.d(), y);

    let t = ManifoldModel::torus(4);
    let gb = GrassmannRing::new(ScalarRing::Base, &[]);
    let mut vol = Form::one(&t, &gb);
    for i in 1..=4 {
        vol = &vol * &Form::gen(&t, &gb, &format!("e{i}")).unwrap();
    }
    assert!(matches!(witness_search(&vol, 4), Err(Error::NoWitness)));

    let x1 = Form::x(&m, &gr, 1);
    assert!(matches!(witness_search(&(&x1 * &Form::dx(&m, &gr, 2)), 2), Err(Error::NotClosed)));
}

#[test]
fn witness_search_on_presented_cdga() {
    use supercocycle_core::forms::ModelGen;
    // Generators a (deg 2) and b (deg 3) with db = a²: a² is exact, a is not.
    let gens = vec![ModelGen { name: "a".into(), degree: 2 }, ModelGen { name: "b".into(), degree: 3 }];
    let diff = vec![vec![], vec![(Gauss::one(), vec![2u16, 0])]];
    let m = ManifoldModel::cdga(gens, diff, 8).unwrap();
    let gb = GrassmannRing::new(ScalarRing::Base, &[]);
    let a = Form::gen(&m, &gb, "a").unwrap();
    let y = (&a * &a).scale(&Scalar::pi());
    let x = witness_search(&y, 0).unwrap();
    assert_eq!(x.d(), y);
    assert!(matches!(witness_search(&a, 0), Err(Error::NoWitness)));
}

#[test]
fn e_elements_and_weights() {
    let m = ManifoldModel::chart(4);
    let gr = GrassmannRing::new(ScalarRing::Moduli, &[]);
    let zero = Form::zero(&m, &gr);
    let dx12 = &Form::dx(&m, &gr, 1) * &Form::dx(&m, &gr, 2);
    let e4 = Scalar::eis(supercocycle_core::eisenstein::EisKind::E4);
    let x1dx2 = &Form::x(&m, &gr, 1) * &Form::dx(&m, &gr, 2);

    let e = make_e_element(&Form::one(&m, &gr), &zero, &zero).unwrap();
    assert!(is_cocycle_e(&e).unwrap());

    // E4 on a 2-form has the wrong weight even though d_tot vanishes.
    let e = make_e_element(&dx12.scale(&e4), &zero, &zero).unwrap();
    assert!(total_diff(&e.packaged().unwrap()).unwrap().is_zero());
    assert!(!is_cocycle_e(&e).unwrap());

    // E2 has weight 2 after completion, still wrong on a 2-form.
    let e2 = Scalar::e2();
    let e = make_e_element(&dx12.scale(&e2), &zero, &zero).unwrap();
    assert!(!is_cocycle_e(&e).unwrap());
    let w = homogeneous_weight(&e2).unwrap();
    assert_eq!(w, Some((2, 0)));

    // Weight (k,2) for Z_τ̄ and (k,0) for Z_v.
    let s2 = Scalar::sigma().pow(-2).unwrap();
    let e = make_e_element(&zero, &x1dx2.scale(&s2), &zero).unwrap();
    assert!(!e.weight_violations().unwrap().is_empty());
    assert_eq!(EElement::expected_weight(Dir::TauBar, 3), Some((2, 2)));
    assert_eq!(homogeneous_weight(&(&s2 * &e4)).unwrap(), Some((6, 2)));

    assert!(matches!(make_e_element(&x1dx2, &zero, &zero), Err(Error::ParityViolation(_))));
}

fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn k_equivalence(seed in any::<u64>(), perturb in any::<bool>()) {
        let mut rng = seeded(seed);
        let m = ManifoldModel::chart(3);
        let (z, l, _) = random_k_data(&mut rng, &m, perturb).unwrap();
        let report = invariance_conditions(&InvarianceData::Circle { z: z.clone(), l: l.clone() }).unwrap();
        prop_assert_eq!(report.holds, is_cocycle_k(&make_k_element(&z, &l).unwrap()).unwrap());
    }

    #[test]
    fn e_equivalence(seed in any::<u64>(), perturb in any::<bool>()) {
        let mut rng = seeded(seed);
        let m = ManifoldModel::chart(4);
        let (z, zv, ztb, _) = random_e_data(&mut rng, &m, perturb).unwrap();
        let report = invariance_conditions(&InvarianceData::Moduli { z: z.clone(), zv: zv.clone(), ztb: ztb.clone() }).unwrap();
        prop_assert_eq!(report.holds, is_cocycle_e(&make_e_element(&z, &zv, &ztb).unwrap()).unwrap());
    }

    #[test]
    fn total_diff_squares_to_zero(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let m = ManifoldModel::chart(3);
        let (z, l, _) = random_k_data(&mut rng, &m, true).unwrap();
        let e = make_k_element(&z, &l).unwrap().packaged().unwrap();
        prop_assert!(total_diff(&total_diff(&e).unwrap()).unwrap().is_zero());
        let m4 = ManifoldModel::chart(4);
        let (z, zv, ztb, _) = random_e_data(&mut rng, &m4, true).unwrap();
        let e = make_e_element(&z, &zv, &ztb).unwrap().packaged().unwrap();
        prop_assert!(total_diff(&total_diff(&e).unwrap()).unwrap().is_zero());
    }

    #[test]
    fn reduce_class_is_stable(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let m = ManifoldModel::chart(3);
        let gr = GrassmannRing::new(ScalarRing::Circle, &[]);
        let (z, l, _) = random_k_data(&mut rng, &m, false).unwrap();
        let e = make_k_element(&z, &l).unwrap();
        let h = random_chart_form(&mut rng, &m, &gr, 1, ScalarRing::Circle).scale(&Scalar::ell());
        let g = random_chart_form(&mut rng, &m, &gr, 2, ScalarRing::Circle);
        let x = TotalElement::new(
            Complex::K,
            h.scale_by_power(&Scalar::beta(), 1).unwrap(),
            vec![(Dir::Ell, g.scale_by_power(&Scalar::beta(), 2).unwrap())],
        ).unwrap();
        let shifted = KElement::from_packaged(&e.packaged().unwrap().add(&total_diff(&x).unwrap()).unwrap()).unwrap();
        prop_assert_eq!(reduce_class(&e).unwrap().class, reduce_class(&shifted).unwrap().class);
    }

    #[test]
    fn holomorphic_conformal_case(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let m = ManifoldModel::chart(4);
        let gr = GrassmannRing::new(ScalarRing::Moduli, &[]);
        // Weight-(0,0) function coefficients: closed exactly when constant.
        let z = random_chart_form(&mut rng, &m, &gr, 0, ScalarRing::Moduli);
        let zero = Form::zero(&m, &gr);
        let e = make_e_element(&z, &zero, &zero).unwrap();
        prop_assert_eq!(is_cocycle_e(&e).unwrap(), z.d().is_zero());
    }
}

#[test]
fn random_instances_cover_both_outcomes() {
    let m3 = ManifoldModel::chart(3);
    let m4 = ManifoldModel::chart(4);
    let (mut k_yes, mut k_no, mut e_yes, mut e_no) = (0, 0, 0, 0);
    for seed in 0..100u64 {
        let mut rng = seeded(seed);
        let (z, l, expect) = random_k_data(&mut rng, &m3, seed % 2 == 1).unwrap();
        let got = is_cocycle_k(&make_k_element(&z, &l).unwrap()).unwrap();
        if expect {
            assert!(got, "seed {seed}");
        }
        if got { k_yes += 1 } else { k_no += 1 }
        let (z, zv, ztb, expect) = random_e_data(&mut rng, &m4, seed % 2 == 1).unwrap();
        let got = is_cocycle_e(&make_e_element(&z, &zv, &ztb).unwrap()).unwrap();
        if expect {
            assert!(got, "seed {seed}");
        }
        if got { e_yes += 1 } else { e_no += 1 }
    }
    assert!(k_yes >= 50 && k_no > 20, "{k_yes} {k_no}");
    assert!(e_yes >= 50 && e_no > 20, "{e_yes} {e_no}");
}
