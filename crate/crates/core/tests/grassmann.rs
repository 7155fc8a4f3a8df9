use proptest::prelude::*;
use std::collections::HashMap;
use std::sync::Arc;
use supercocycle_core::grassmann::{GrassmannElement as GE, GrassmannRing};
use supercocycle_core::scalars::{Scalar, ScalarRing};

const GENS: [&str; 4] = ["a", "b", "c", "e"];

fn ring() -> Arc<GrassmannRing> {
    GrassmannRing::new(ScalarRing::Circle, &GENS)
}

/// Homogeneous element of the given parity: small integer multiples of
/// monomials with at least `min_len` generators.
fn element(gr: &Arc<GrassmannRing>, parity: u32, min_len: u32, terms: &[(u64, i64)]) -> GE {
    let mut x = GE::zero(gr);
    for &(mask, c) in terms {
        let mask = mask & 0b1111;
        if mask.count_ones() % 2 == parity && mask.count_ones() >= min_len && c != 0 {
            let coeff = &Scalar::int(c) * &Scalar::ell().pow(mask.count_ones() as i64 - 1).unwrap();
            x = x.checked_add(&GE::monomial(gr, mask, coeff)).unwrap();
        }
    }
    x
}

fn terms() -> impl Strategy<Value = Vec<(u64, i64)>> {
    prop::collection::vec((0u64..16, -3i64..=3), 1..8)
}

proptest! {
    #[test]
    fn graded_commutativity(p in 0u32..2, q in 0u32..2, s in terms(), t in terms()) {
        let gr = ring();
        let (a, b) = (element(&gr, p, 0, &s), element(&gr, q, 0, &t));
        let ab = a.checked_mul(&b).unwrap();
        let ba = b.checked_mul(&a).unwrap();
        prop_assert_eq!(ab, if p * q == 1 { ba.neg() } else { ba });
    }

    #[test]
    fn substitution_is_multiplicative(s in terms(), t in terms(), images in prop::collection::vec(terms(), 4)) {
        let gr = ring();
        let (a, b) = (element(&gr, 0, 0, &s), element(&gr, 1, 0, &t));
        // Odd generators go to odd elements with zero body.
        let map: HashMap<String, GE> = GENS.iter().zip(&images).map(|(g, im)| (g.to_string(), element(&gr, 1, 1, im))).collect();
        let sub = |x: &GE| x.substitute(&map).unwrap();
        prop_assert_eq!(sub(&a.checked_mul(&b).unwrap()), sub(&a).checked_mul(&sub(&b)).unwrap());
        prop_assert_eq!(sub(&a.checked_add(&a).unwrap()), sub(&a).checked_add(&sub(&a)).unwrap());
    }

    #[test]
    fn bodiless_elements_are_nilpotent(s in terms(), u in terms()) {
        let gr = ring();
        let x = element(&gr, 0, 1, &s).checked_add(&element(&gr, 1, 1, &u)).unwrap();
        prop_assert!(x.body().is_zero());
        prop_assert!(x.pow(GENS.len() as u32 + 1).is_zero());
    }
}

#[test]
fn relations_kill_monomials() {
    let gr = GrassmannRing::with_relations(ScalarRing::Lattice, &["l1", "l2", "eta"], &[("l1", "l2")]).unwrap();
    let x = GE::gen(&gr, "l1").unwrap().checked_mul(&GE::gen(&gr, "l2").unwrap()).unwrap();
    assert!(x.is_zero());
    let y = GE::gen(&gr, "l1").unwrap().checked_mul(&GE::gen(&gr, "eta").unwrap()).unwrap();
    assert!(!y.is_zero());
}
