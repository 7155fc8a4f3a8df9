use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use supercocycle_core::cocycles::random_chart_form;
use supercocycle_core::forms::{Form, FormMatrix, ManifoldModel};
use supercocycle_core::grassmann::GrassmannRing;
use supercocycle_core::scalars::{Scalar, ScalarRing};

fn gr() -> Arc<GrassmannRing> {
    GrassmannRing::new(ScalarRing::Base, &["g"])
}

/// A homogeneous form of the given degree, optionally times the odd generator.
fn form(seed: u64, n: usize, degree: u32, odd_coeff: bool) -> Form {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = ManifoldModel::chart(n);
    let g = gr();
    let f = random_chart_form(&mut rng, &m, &g, degree, ScalarRing::Base);
    if odd_coeff {
        &Form::grass(&m, &g, "g").unwrap() * &f
    } else {
        f
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn d_squares_to_zero(seed in any::<u64>(), n in 1usize..=4, k in 0u32..=3, odd in any::<bool>()) {
        prop_assert!(form(seed, n, k.min(n as u32), odd).d().d().is_zero());
    }

    #[test]
    fn leibniz(seed in any::<u64>(), n in 1usize..=4, j in 0u32..=2, k in 0u32..=2, o1 in any::<bool>(), o2 in any::<bool>()) {
        let a = form(seed, n, j.min(n as u32), o1);
        let b = form(seed.wrapping_add(1), n, k.min(n as u32), o2);
        let parity = (j.min(n as u32) + o1 as u32) % 2;
        let second = (&a * &b.d()).scale(&Scalar::int(if parity == 1 { -1 } else { 1 }));
        prop_assert_eq!((&a * &b).d(), (&a.d() * &b).checked_add(&second).unwrap());
    }

    #[test]
    fn ell_rescaling_commutes_with_d(seed in any::<u64>(), n in 1usize..=4) {
        let mut w = form(seed, n, 0, false);
        for k in 1..=n as u32 {
            w = w.checked_add(&form(seed ^ k as u64, n, k, false)).unwrap();
        }
        let w = w.with_ring(ScalarRing::Circle).unwrap();
        let ell = Scalar::ell();
        let lhs = w.scale_by_power(&ell, 0).unwrap().d();
        let rhs = w.d().scale_by_power(&ell, 0).unwrap().scale(&ell.pow_halves(-1).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn homotopy_inverts_d_on_exact_forms(seed in any::<u64>(), n in 1usize..=4, k in 0u32..=3, odd in any::<bool>()) {
        let w = form(seed, n, k.min(n as u32 - 1), odd).d();
        let eta = w.poincare_homotopy().unwrap();
        prop_assert_eq!(eta.d(), w);
    }
}

fn antisymmetric(seed: u64, size: usize) -> FormMatrix {
    let z = form(seed, 3, 0, false).zero_like();
    let mut rows = vec![vec![z.clone(); size]; size];
    for i in 0..size {
        for j in i + 1..size {
            let s = seed.wrapping_mul(31).wrapping_add((i * size + j) as u64);
            let e = form(s, 3, 0, false).checked_add(&form(s ^ 7, 3, 2, false)).unwrap();
            rows[i][j] = e.clone();
            rows[j][i] = e.neg();
        }
    }
    FormMatrix::from_rows(rows).unwrap()
}

/// A (p|q) matrix whose entry (i, j) has parity `par + par(i) + par(j)`.
fn homogeneous(seed: u64, p: usize, q: usize, par: u32) -> FormMatrix {
    let mut m = FormMatrix::zero(p, q, &ManifoldModel::chart(3), &gr());
    for i in 0..p + q {
        for j in 0..p + q {
            let want = (par + m.par(i) + m.par(j)) % 2;
            let s = seed.wrapping_mul(17).wrapping_add((i * 8 + j) as u64);
            m.rows[i][j] = form(s, 3, want, false).checked_add(&form(s ^ 5, 3, want + 2, false)).unwrap();
        }
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pfaffian_squares_to_determinant(seed in any::<u64>(), half in 1usize..=3) {
        let m = antisymmetric(seed, 2 * half);
        let pf = m.pfaffian().unwrap();
        prop_assert_eq!(&pf * &pf, m.det().unwrap());
    }

    #[test]
    fn supertrace_is_graded_cyclic(seed in any::<u64>(), p in 0usize..=2, q in 0usize..=2, pa in 0u32..2, pb in 0u32..2) {
        prop_assume!(p + q > 0);
        let a = homogeneous(seed, p, q, pa);
        let b = homogeneous(seed ^ 0xabc, p, q, pb);
        let ab = a.mul(&b).unwrap().supertrace().unwrap();
        let ba = b.mul(&a).unwrap().supertrace().unwrap();
        prop_assert_eq!(ab, if pa * pb == 1 { ba.neg() } else { ba });
    }
}
