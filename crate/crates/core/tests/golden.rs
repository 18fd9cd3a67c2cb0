//! Frozen values, each first computed by an independent floating-point oracle.

use cubic_disc::hk_curvature::{kappa, t_k};
use cubic_disc::irrep_so4::{carrier_sp2, carrier_torsion, carrier_v, casimir_decompose, classical_discriminant, s_hat};
use cubic_disc::model_spaces::{bianchi_family_solve, compact, curvature_data, r0, scalar_curvature, split};
use cubic_disc::orbit::{orbit_dimension, orbit_dimension_extended, stabilizer_algebra};
use cubic_disc::{Exact, Scalar};

fn q(p: i64, d: i64) -> Exact {
    Exact::ratio(p, d)
}

#[test]
fn model_space_curvature_values() {
    let c = curvature_data(&compact::<Exact>(), 0.0).unwrap();
    assert_eq!(c.scal_ricci, q(48, 1));
    assert_eq!(c.r0_coefficient, q(3, 2));
    assert_eq!(c.scal_from_r0, q(96, 1));
    assert_eq!(c.c, q(3, 4));
    assert_eq!(c.scal_from_c, q(32, 1));
    let s = curvature_data(&split::<Exact>(), 0.0).unwrap();
    assert_eq!(s.scal_ricci, q(-48, 1));
    assert_eq!(s.r0_coefficient, q(-3, 2));
    assert_eq!(s.scal_from_r0, q(-96, 1));
    assert_eq!(s.c, q(-3, 4));
    assert_eq!(s.scal_from_c, q(-32, 1));
    assert_eq!(scalar_curvature(&r0::<Exact>()), q(32, 1));
}

#[test]
fn bianchi_system_size() {
    let b = bianchi_family_solve::<Exact>().unwrap();
    assert_eq!((b.unknowns, b.equations, b.nullity), (168, 448, 1));
}

#[test]
fn casimir_summands() {
    let dims = |m| casimir_decompose::<Exact>(&m).unwrap().iter().map(|s| (s.k, s.l, s.multiplicity)).collect::<Vec<_>>();
    assert_eq!(dims(carrier_v(0.0).unwrap()), vec![(3, 1, 1)]);
    let mut sp2 = dims(carrier_sp2(0.0).unwrap());
    sp2.sort();
    // S²(S³E) = S⁶E ⊕ S²E.
    assert_eq!(sp2, vec![(2, 0, 1), (6, 0, 1)]);
    let mut tor = dims(carrier_torsion(0.0).unwrap());
    tor.sort();
    assert_eq!(tor, vec![(3, 1, 1), (5, 1, 1), (7, 1, 1), (9, 1, 1)]);
}

#[test]
fn orbit_invariants() {
    let s = s_hat::<Exact>();
    assert_eq!(stabilizer_algebra(&s).len(), 3);
    assert_eq!(orbit_dimension(&s), 7);
    assert_eq!(orbit_dimension_extended(&s), 7);
    let t = t_k(&kappa(&s));
    assert_eq!(t.eigen_multiplicity(&q(7, 2)), 3);
    assert_eq!(t.eigen_multiplicity(&q(-3, 2)), 7);
}

#[test]
fn discriminant_values() {
    let z = |n: i64| Exact::from_i64(n);
    assert!(classical_discriminant(&z(1), &z(0), &z(-3), &z(2)).is_zero());
    // x³ − x has roots −1, 0, 1: discriminant 4.
    assert_eq!(classical_discriminant(&z(1), &z(0), &z(-1), &z(0)), z(4));
}
