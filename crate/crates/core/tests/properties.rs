use cubic_disc::hk_curvature::{kappa, kappa_inv, t_k, SymQuartic};
use cubic_disc::irrep_so4::s_hat;
use cubic_disc::linalg::Mat;
use cubic_disc::model_spaces::h_family;
use cubic_disc::orbit::{cayley_sp2, is_cd_theorem, transport, transport_hk};
use cubic_disc::sp2_lie::{dagger, Sp2Element};
use cubic_disc::tensor_core::{einsum, Array};
use cubic_disc::{Exact, Float, Scalar};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn exact_strategy() -> impl Strategy<Value = Exact> {
    let part = (-20i64..=20, 1i64..=12);
    (part.clone(), part.clone(), part.clone(), part).prop_map(|(a, b, c, d)| Exact::from_parts(a, b, c, d))
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_axioms(x in exact_strategy(), y in exact_strategy(), z in exact_strategy()) {
        prop_assert_eq!(&x + &y, &y + &x);
        prop_assert_eq!(&x * &y, &y * &x);
        prop_assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
        prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
        prop_assert_eq!(&(&x - &y) + &y, x.clone());
        prop_assert!((&x - &x).is_zero());
        if let Some(r) = x.inv() {
            prop_assert_eq!(&x * &r, Exact::one());
        } else {
            prop_assert!(x.is_zero());
        }
    }

    #[test]
    fn conjugation_and_norm_are_multiplicative(x in exact_strategy(), y in exact_strategy()) {
        prop_assert_eq!((&x * &y).conj(), &x.conj() * &y.conj());
        prop_assert_eq!((&x * &y).norm(), x.norm() * y.norm());
        prop_assert_eq!(x.conj().conj(), x);
    }

    #[test]
    fn representation_is_canonical(p in -50i64..=50, q in 1i64..=50, k in 1i64..=9) {
        prop_assert_eq!(Exact::ratio(p * k, q * k), Exact::ratio(p, q));
        prop_assert_eq!(Exact::ratio(p, q).coefficients()[0].clone(), num_rational::BigRational::new(p.into(), q.into()));
    }

    #[test]
    fn float_shadows_exact(x in exact_strategy(), y in exact_strategy()) {
        let fx = Float(x.to_c64());
        let fy = Float(y.to_c64());
        let prod = (&x * &y).to_c64();
        prop_assert!((fx.times(&fy).0 - prod).norm() <= 1e-12 * (1.0 + prod.norm()));
        let sum = (&x + &y).to_c64();
        prop_assert!((fx.plus(&fy).0 - sum).norm() <= 1e-12 * (1.0 + sum.norm()));
    }

    #[test]
    fn scalar_json_round_trip(x in exact_strategy()) {
        prop_assert_eq!(Exact::from_json(&x.to_json()).unwrap(), x);
    }

    #[test]
    fn einsum_matches_matrix_product(a in proptest::collection::vec(-9i64..=9, 12), b in proptest::collection::vec(-9i64..=9, 12)) {
        let ma = Mat::from_fn(3, 4, |i, j| Exact::from_i64(a[4 * i + j]));
        let mb = Mat::from_fn(4, 3, |i, j| Exact::from_i64(b[3 * i + j]));
        let prod = einsum("ik,kj->ij", &[&Array::from_mat(&ma), &Array::from_mat(&mb)]).unwrap();
        prop_assert_eq!(prod.to_mat(), ma.mul(&mb));
        let tr = einsum("ik,ki->", &[&Array::from_mat(&ma), &Array::from_mat(&mb)]).unwrap();
        prop_assert_eq!(tr.data()[0].clone(), ma.mul(&mb).trace());
    }

    #[test]
    fn closure_for_rational_h(p in -30i64..=30, q in 1i64..=30) {
        prop_assert!(h_family(&Exact::ratio(p, q)).closes(0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn kappa_round_trip(seed in any::<u64>()) {
        let s = SymQuartic::<Exact>::random(&mut rng(seed), 3);
        let k = kappa(&s);
        prop_assert!(k.satisfies_invariants(0.0));
        prop_assert_eq!(kappa_inv(&k).unwrap(), s);
    }

    #[test]
    fn t_k_is_symmetric_traceless_dagger_eigenvector(seed in any::<u64>()) {
        let k = kappa(&SymQuartic::<Exact>::random(&mut rng(seed), 3));
        let t = t_k(&k);
        prop_assert!(t.is_symmetric());
        prop_assert!(t.trace().is_zero());
        prop_assert_eq!(dagger(&t), t.scale(&Exact::from_i64(2)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn transport_preserves_orbit_membership(seed in any::<u64>()) {
        let x = Sp2Element::<Exact>::random_real(&mut rng(seed), 2);
        let g = cayley_sp2(&x);
        prop_assume!(g.is_ok());
        let t = transport(&s_hat(), &g.unwrap());
        prop_assert!(is_cd_theorem(&kappa(&t), 0.0).verdict);
    }

    #[test]
    fn kappa_is_equivariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = SymQuartic::<Exact>::random(&mut r, 2);
        let g = cayley_sp2(&Sp2Element::<Exact>::random_real(&mut r, 2));
        prop_assume!(g.is_ok());
        let g = g.unwrap();
        prop_assert_eq!(kappa(&transport(&s, &g)), transport_hk(&kappa(&s), &g));
    }
}
