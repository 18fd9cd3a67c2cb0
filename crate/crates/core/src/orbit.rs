//! Membership in the cubic-discriminant orbit 𝒞, stabilizers and orbit
//! dimensions, exact Sp(2) transport by Cayley transforms, and the
//! reconstruction of K from ℰ-frames.

use serde::Serialize;

use crate::hk_curvature::{kappa, lie_derivative, quartic_lie_derivative, symmetrize4, t_k, HKTensor, SymQuartic};
use crate::irrep_so4::{wedge, IrrepFrame};
use crate::linalg::{span_rank, Mat};
use crate::sp2_lie::{dollar_basis, real_basis, EndoOnSp2, Sp2Element};
use crate::tensor_core::{complex_structures, einsum, endo_of_form, form_of, g8, pi_matrix, Array};
use crate::{Error, Residual, Result, Scalar};

fn arr<S: Scalar>(m: &Mat<S>) -> Array<S> {
    Array::from_mat(m)
}

fn ein<S: Scalar>(spec: &str, ops: &[&Array<S>]) -> Array<S> {
    einsum(spec, ops).expect("well-formed contraction")
}

/// Residual of a quantity that should vanish, relative to `scale`.
fn zero_rel<'a, S: Scalar>(entries: impl IntoIterator<Item = &'a S>, scale: f64) -> Residual {
    let mut r = Residual::of_zero(entries);
    r.relative /= scale.max(1.0);
    r
}

fn frobenius<S: Scalar>(entries: &[S]) -> f64 {
    entries.iter().map(|x| x.magnitude().powi(2)).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------------
// Membership predicates
// ---------------------------------------------------------------------------

/// Residuals of the characterizations of 𝒞 that were evaluated, with the verdict.
#[derive(Clone, Debug, Serialize)]
pub struct MembershipReport {
    pub condition_i: Option<Residual>,
    pub condition_ii: Option<Residual>,
    pub coord_i: Option<Residual>,
    pub coord_ii: Option<Residual>,
    pub middle_form: Option<Residual>,
    /// Whether the coordinate form of (II) and the middle-index form agree.
    pub middle_form_agrees: Option<bool>,
    pub verdict: bool,
}

impl MembershipReport {
    fn empty() -> Self {
        MembershipReport {
            condition_i: None,
            condition_ii: None,
            coord_i: None,
            coord_ii: None,
            middle_form: None,
            middle_form_agrees: None,
            verdict: false,
        }
    }
}

/// (2T − 7)(2T + 3) = 0 and
/// [TA,TB] − T[TA,B] − (3/2)(T[A,B] − [A,TB]) = 0 on all ordered basis pairs.
pub fn theorem_residuals<S: Scalar>(t: &EndoOnSp2<S>) -> (Residual, Residual) {
    let id = EndoOnSp2::<S>::identity();
    let two_t = t.scale(&S::from_i64(2));
    let q = two_t.sub(&id.scale(&S::from_i64(7))).compose(&two_t.add(&id.scale(&S::from_i64(3))));
    let tn = frobenius(t.matrix().entries());
    let cond_i = zero_rel(q.matrix().entries(), tn * tn);
    let basis = dollar_basis::<S>();
    let images: Vec<Sp2Element<S>> = basis.iter().map(|b| t.apply(b)).collect();
    let c = S::ratio(3, 2);
    let mut all = Vec::with_capacity(1600);
    for (a, ta) in basis.iter().zip(&images) {
        for (b, tb) in basis.iter().zip(&images) {
            let v = ta
                .bracket(tb)
                .sub(&t.apply(&ta.bracket(b)))
                .sub(&t.apply(&a.bracket(b)).sub(&a.bracket(tb)).scale(&c));
            all.extend(v.matrix().entries().iter().cloned());
        }
    }
    (cond_i, zero_rel(&all, tn * tn))
}

/// Membership of K through conditions (I) and (II) on T_K.
pub fn is_cd_theorem<S: Scalar>(k: &HKTensor<S>, tol: f64) -> MembershipReport {
    let (i, ii) = theorem_residuals(&t_k(k));
    let verdict = i.passes(tol) && ii.passes(tol);
    MembershipReport { condition_i: Some(i), condition_ii: Some(ii), verdict, ..MembershipReport::empty() }
}

/// Σ π^{στ}π^{μν} S_{σμαβ} S_{τνγδ} − 2S − (21/8)(π_{αγ}π_{βδ} + π_{αδ}π_{βγ}).
pub fn coord_i_residual<S: Scalar>(s: &SymQuartic<S>) -> Residual {
    let pa = arr(&pi_matrix::<S>());
    let sa = s.array();
    let lhs = ein("st,mn,smab,tngd->abgd", &[&pa, &pa, sa, sa]);
    let pp = ein("ag,bd->abgd", &[&pa, &pa]).add(&ein("ad,bg->abgd", &[&pa, &pa]));
    let rhs = sa.scale(&S::from_i64(2)).add(&pp.scale(&S::ratio(21, 8)));
    let sn = frobenius(sa.data());
    zero_rel(lhs.sub(&rhs).data(), sn * sn)
}

/// Symmetrization over αβγδ of π^{στ}S_{σαβγ}S_{τδμν} + (3/4)S_{αβγμ}π_{νδ} + (3/4)S_{αβγν}π_{μδ}.
pub fn coord_ii_residual<S: Scalar>(s: &SymQuartic<S>) -> Residual {
    let pa = arr(&pi_matrix::<S>());
    let sa = s.array();
    let c = S::ratio(3, 4);
    let t = ein("st,sabg,tdmn->abgdmn", &[&pa, sa, sa])
        .add(&ein("abgm,nd->abgdmn", &[sa, &pa]).scale(&c))
        .add(&ein("abgn,md->abgdmn", &[sa, &pa]).scale(&c));
    let sn = frobenius(sa.data());
    zero_rel(symmetrize4(&t).data(), sn * sn)
}

/// Symmetrization over αβγδ of
/// π^{στ}S_{σμαβ}S_{τνγδ} − ¼S_{αβγδ}π_{μν} + ½π_{αμ}S_{νβγδ} − ½π_{αν}S_{μβγδ}.
pub fn middle_form_residual<S: Scalar>(s: &SymQuartic<S>) -> Residual {
    let pa = arr(&pi_matrix::<S>());
    let sa = s.array();
    let h = S::ratio(1, 2);
    let t = ein("st,smab,tngd->abgdmn", &[&pa, sa, sa])
        .sub(&ein("abgd,mn->abgdmn", &[sa, &pa]).scale(&S::ratio(1, 4)))
        .add(&ein("am,nbgd->abgdmn", &[&pa, sa]).scale(&h))
        .sub(&ein("an,mbgd->abgdmn", &[&pa, sa]).scale(&h));
    let sn = frobenius(sa.data());
    zero_rel(symmetrize4(&t).data(), sn * sn)
}

/// Membership of 𝒦(S) through the coordinate conditions, with the middle-index form alongside.
pub fn is_cd_coordinates<S: Scalar>(s: &SymQuartic<S>, tol: f64) -> MembershipReport {
    let i = coord_i_residual(s);
    let ii = coord_ii_residual(s);
    let m = middle_form_residual(s);
    let verdict = i.passes(tol) && ii.passes(tol);
    let agrees = ii.passes(tol) == m.passes(tol);
    MembershipReport {
        coord_i: Some(i),
        coord_ii: Some(ii),
        middle_form: Some(m),
        middle_form_agrees: Some(agrees),
        verdict,
        ..MembershipReport::empty()
    }
}

/// Membership through condition (I) in coordinates and the middle-index form of (II).
pub fn is_cd_middle<S: Scalar>(s: &SymQuartic<S>, tol: f64) -> MembershipReport {
    let i = coord_i_residual(s);
    let m = middle_form_residual(s);
    let verdict = i.passes(tol) && m.passes(tol);
    MembershipReport { coord_i: Some(i), middle_form: Some(m), verdict, ..MembershipReport::empty() }
}

/// For K ∈ 𝒞: the 7/2-eigenspace Q of T_K (as $-coordinates).
pub fn seven_halves_eigenspace<S: Scalar>(k: &HKTensor<S>) -> Vec<Sp2Element<S>> {
    let t = t_k(k);
    let shifted = t.sub(&EndoOnSp2::identity().scale(&S::ratio(7, 2)));
    shifted.matrix().nullspace().iter().map(|v| Sp2Element::from_coords(v)).collect()
}

/// Residuals of 𝒫² = 𝒫 and [𝒫A,𝒫B] = 𝒫[𝒫A,B] for 𝒫 = T_K/5 + (3/10)Id,
/// and of the closure of the 7/2-eigenspace under the bracket.
pub fn projection_form_residuals<S: Scalar>(k: &HKTensor<S>) -> Vec<(&'static str, Residual)> {
    let t = t_k(k);
    let p = t.scale(&S::ratio(1, 5)).add(&EndoOnSp2::identity().scale(&S::ratio(3, 10)));
    let idem = Residual::between(p.compose(&p).matrix().entries(), p.matrix().entries());
    let basis = dollar_basis::<S>();
    let pb: Vec<Sp2Element<S>> = basis.iter().map(|b| p.apply(b)).collect();
    let mut all = Vec::new();
    for pa in &pb {
        for (b, pbb) in basis.iter().zip(&pb) {
            let v = pa.bracket(pbb).sub(&p.apply(&pa.bracket(b)));
            all.extend(v.matrix().entries().iter().cloned());
        }
    }
    let q = seven_halves_eigenspace(k);
    let mut closure = Vec::new();
    for x in &q {
        for y in &q {
            let z = x.bracket(y);
            closure.push(p.apply(&z).sub(&z).matrix().entries().to_vec());
        }
    }
    let closure: Vec<S> = closure.into_iter().flatten().collect();
    vec![
        ("projection_idempotent", idem),
        ("projection_bracket", Residual::of_zero(&all)),
        ("eigenspace_subalgebra", Residual::of_zero(&closure)),
    ]
}

// ---------------------------------------------------------------------------
// Stabilizers and orbit dimensions
// ---------------------------------------------------------------------------

/// The matrix of X ↦ D_X S over the $-basis (256 × 10).
fn quartic_action_matrix<S: Scalar>(s: &SymQuartic<S>) -> Mat<S> {
    let cols: Vec<Vec<S>> = dollar_basis::<S>().iter().map(|b| quartic_lie_derivative(b, s.array()).into_data()).collect();
    Mat::from_cols(&cols)
}

/// Basis of {X ∈ sp(2) : D_X S = 0}.
pub fn stabilizer_algebra<S: Scalar>(s: &SymQuartic<S>) -> Vec<Sp2Element<S>> {
    quartic_action_matrix(s).nullspace().iter().map(|v| Sp2Element::from_coords(v)).collect()
}

/// Dimension of the Sp(2)-orbit through S.
pub fn orbit_dimension<S: Scalar>(s: &SymQuartic<S>) -> usize {
    quartic_action_matrix(s).rank()
}

/// Dimension of the Sp(2)Sp(1)-orbit through 𝒦(S), acting on the full tensor on V.
pub fn orbit_dimension_extended<S: Scalar>(s: &SymQuartic<S>) -> usize {
    let full = kappa(s).full();
    let mut cols: Vec<Vec<S>> = real_basis::<S>().iter().map(|b| lie_derivative(&b.to_endo8(), &full).into_data()).collect();
    for j in complex_structures::<S>() {
        cols.push(lie_derivative(&j, &full).into_data());
    }
    Mat::from_cols(&cols).rank()
}

/// Whether the stabilizer of S is spanned by Υ₁, Υ₂, Υ₃.
pub fn stabilizer_is_upsilon_span<S: Scalar>(stab: &[Sp2Element<S>]) -> bool {
    let u = IrrepFrame::<S>::standard().upsilon;
    let mut all: Vec<Vec<S>> = stab.iter().map(Sp2Element::coords).collect();
    let r = span_rank(&all);
    all.extend(u.iter().map(Sp2Element::coords));
    stab.len() == 3 && r == 3 && span_rank(&all) == 3
}

// ---------------------------------------------------------------------------
// Group elements and transport
// ---------------------------------------------------------------------------

/// An element of Sp(2) acting on W: it preserves π and commutes with 𝔧.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactGroupElement<S> {
    g: Mat<S>,
}

impl<S: Scalar> ExactGroupElement<S> {
    pub fn new(g: Mat<S>, tol: f64) -> Result<Self> {
        if g.rows() != 4 || g.cols() != 4 {
            return Err(Error::Shape("group element must be 4×4".into()));
        }
        let e = ExactGroupElement { g };
        let (p, j) = e.residuals();
        if !p.passes(tol) {
            return Err(Error::Invariant(format!("gᵀπg = π fails ({p})")));
        }
        if !j.passes(tol) {
            return Err(Error::Invariant(format!("g does not commute with 𝔧 ({j})")));
        }
        Ok(e)
    }

    pub fn identity() -> Self {
        ExactGroupElement { g: Mat::identity(4) }
    }

    pub fn matrix(&self) -> &Mat<S> {
        &self.g
    }

    /// Residuals of gᵀπg = π and gπᵀ = πᵀḡ.
    pub fn residuals(&self) -> (Residual, Residual) {
        let pi = pi_matrix::<S>();
        let p = Residual::between(self.g.transpose().mul(&pi).mul(&self.g).entries(), pi.entries());
        let j = Residual::between(self.g.mul(&pi.transpose()).entries(), pi.transpose().mul(&self.g.conj()).entries());
        (p, j)
    }

    /// diag(g, ḡ) on V^ℂ.
    pub fn on_v(&self) -> Mat<S> {
        Mat::block_diag(&self.g, &self.g.conj())
    }

    pub fn compose(&self, o: &Self) -> Self {
        ExactGroupElement { g: self.g.mul(&o.g) }
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(ExactGroupElement { g: self.g.inverse()? })
    }
}

/// g = (Id − A)(Id + A)⁻¹ for A = πX.
pub fn cayley_sp2<S: Scalar>(x: &Sp2Element<S>) -> Result<ExactGroupElement<S>> {
    let a = x.to_endo();
    let id = Mat::<S>::identity(4);
    let inv = id.add(&a).inverse()?;
    Ok(ExactGroupElement { g: id.sub(&a).mul(&inv) })
}

/// The pull-back S'(x,y,z,w) = S(gx, gy, gz, gw); a right action.
pub fn transport<S: Scalar>(s: &SymQuartic<S>, g: &ExactGroupElement<S>) -> SymQuartic<S> {
    let ga = arr(&g.g);
    SymQuartic::unchecked(ein("pqrs,pa,qb,rc,sd->abcd", &[s.array(), &ga, &ga, &ga, &ga]))
}

/// The pull-back of a tensor on V by diag(g, ḡ).
pub fn transport_full<S: Scalar>(k: &Array<S>, g: &ExactGroupElement<S>) -> Array<S> {
    let ga = arr(&g.on_v());
    ein("pqrs,pa,qb,rc,sd->abcd", &[k, &ga, &ga, &ga, &ga])
}

pub fn transport_hk<S: Scalar>(k: &HKTensor<S>, g: &ExactGroupElement<S>) -> HKTensor<S> {
    HKTensor::from_full(&transport_full(&k.full(), g)).expect("Sp(2) preserves curvature type")
}

// ---------------------------------------------------------------------------
// K from frames
// ---------------------------------------------------------------------------

/// Result of [`k_from_frames`].
#[derive(Clone, Debug)]
pub struct FrameReport<S> {
    /// The tensor given by the frame formula.
    pub full: Array<S>,
    /// The same tensor as a curvature-type tensor, when it is one.
    pub k: Option<HKTensor<S>>,
    /// [ℰ_i, ℰ_j] − ℰ_k.
    pub bracket: Residual,
    /// Σ ε_s∧ε_s + (3/4)Ω.
    pub four_form: Residual,
    pub membership: Option<MembershipReport>,
    pub verdict: bool,
}

/// K(x,y,z,w) = Σ ε_s(x,y)ε_s(z,w) + (3/8)(g(x,w)g(y,z) − g(x,z)g(y,w))
///            + (3/8) Σ (ω_s(x,z)ω_s(w,y) + ω_s(x,w)ω_s(y,z)).
///
/// The ℰ_s must be g-skew and commute with the J_s of the ω_s; the bracket
/// relation and the 4-form condition enter the verdict.
pub fn k_from_frames<S: Scalar>(e: &[Mat<S>; 3], w: &[Mat<S>; 3], tol: f64) -> Result<FrameReport<S>> {
    let js: Vec<Mat<S>> = w.iter().map(endo_of_form).collect();
    for (s, x) in e.iter().enumerate() {
        if x.rows() != 8 || x.cols() != 8 {
            return Err(Error::Shape(format!("ℰ_{} must be 8×8", s + 1)));
        }
        let f = form_of(x);
        if !Residual::of_zero(f.add(&f.transpose()).entries()).passes(tol) {
            return Err(Error::Precondition(format!("ℰ_{} is not g-skew", s + 1)));
        }
        for (t, j) in js.iter().enumerate() {
            if !Residual::of_zero(x.commutator(j).entries()).passes(tol) {
                return Err(Error::Precondition(format!("ℰ_{} does not commute with J_{}", s + 1, t + 1)));
            }
        }
    }
    let bracket = Residual::merge((0..3).map(|s| Residual::between(e[s].commutator(&e[(s + 1) % 3]).entries(), e[(s + 2) % 3].entries())));
    let eps: Vec<Array<S>> = e.iter().map(|x| arr(&form_of(x))).collect();
    let mut ee = Array::zeros(&[8, 8, 8, 8]);
    let mut omega = Array::zeros(&[8, 8, 8, 8]);
    for s in 0..3 {
        let f = form_of(&e[s]);
        ee = ee.add(&wedge(&f, &f));
        omega = omega.add(&wedge(&w[s], &w[s]));
    }
    let four_form = ee.residual_to(&omega.scale(&S::ratio(-3, 4)));

    let g = arr(&g8::<S>());
    let c = S::ratio(3, 8);
    let mut full = Array::zeros(&[8, 8, 8, 8]);
    for x in &eps {
        full = full.add(&ein("xy,zw->xyzw", &[x, x]));
    }
    full = full.add(&ein("xw,yz->xyzw", &[&g, &g]).sub(&ein("xz,yw->xyzw", &[&g, &g])).scale(&c));
    for ws in w {
        let o = arr(ws);
        full = full.add(&ein("xz,wy->xyzw", &[&o, &o]).add(&ein("xw,yz->xyzw", &[&o, &o])).scale(&c));
    }
    let k = HKTensor::from_full(&full).ok().filter(|k| k.satisfies_invariants(tol));
    let membership = k.as_ref().map(|k| is_cd_theorem(k, tol));
    let verdict = bracket.passes(tol) && four_form.passes(tol) && membership.as_ref().is_some_and(|m| m.verdict);
    Ok(FrameReport { full, k, bracket, four_form, membership, verdict })
}

/// g⁻¹ ℰ g on V^ℂ, the frames seen through the pull-back by g.
pub fn conjugate_frames<S: Scalar>(e: &[Mat<S>; 3], g: &ExactGroupElement<S>) -> Result<[Mat<S>; 3]> {
    let gv = g.on_v();
    let gi = gv.inverse()?;
    Ok([gi.mul(&e[0]).mul(&gv), gi.mul(&e[1]).mul(&gv), gi.mul(&e[2]).mul(&gv)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irrep_so4::{kahler_forms, s_hat, script_e_frames};
    use crate::Exact;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type X = Exact;

    #[test]
    fn s_hat_is_in_the_orbit() {
        let s = s_hat::<X>();
        let r = is_cd_theorem(&kappa(&s), 0.0);
        assert!(r.verdict);
        let c = is_cd_coordinates(&s, 0.0);
        assert!(c.verdict);
        assert_eq!(c.coord_i.unwrap().exact_zero, Some(true));
        assert_eq!(c.coord_ii.unwrap().exact_zero, Some(true));
        assert_eq!(c.middle_form.unwrap().exact_zero, Some(true));
        assert!(is_cd_middle(&s, 0.0).verdict);
    }

    #[test]
    fn zero_and_perturbed_are_not() {
        assert!(!is_cd_coordinates(&SymQuartic::<X>::zero(), 0.0).verdict);
        assert!(!is_cd_theorem(&HKTensor::<X>::zero(), 0.0).verdict);
        let mut a = s_hat::<X>().array().clone();
        a.add_at(&[0, 0, 0, 0], &X::one());
        a.add_at(&[2, 2, 2, 2], &X::one());
        let s = SymQuartic::new(a).unwrap();
        assert!(!is_cd_theorem(&kappa(&s), 0.0).verdict);
        assert!(!is_cd_coordinates(&s, 0.0).verdict);
    }

    #[test]
    fn stabilizer_of_s_hat() {
        let s = s_hat::<X>();
        let stab = stabilizer_algebra(&s);
        assert!(stabilizer_is_upsilon_span(&stab));
        assert_eq!(orbit_dimension(&s), 7);
    }

    #[test]
    fn cayley_preserves_structure_and_transport_is_a_right_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        assert_eq!(cayley_sp2(&Sp2Element::<X>::zero()).unwrap(), ExactGroupElement::identity());
        let g = cayley_sp2(&Sp2Element::<X>::random_real(&mut rng, 2)).unwrap();
        let h = cayley_sp2(&Sp2Element::<X>::random_real(&mut rng, 2)).unwrap();
        let (p, j) = g.residuals();
        assert_eq!((p.exact_zero, j.exact_zero), (Some(true), Some(true)));
        let s = s_hat::<X>();
        assert_eq!(transport(&transport(&s, &g), &h), transport(&s, &g.compose(&h)));
        let t = transport(&s, &g);
        assert!(t.is_symmetric() && t.is_j_real());
        assert_eq!(kappa(&t), transport_hk(&kappa(&s), &g));
    }

    #[test]
    fn frames_rebuild_kappa_s_hat() {
        let e = script_e_frames::<X>();
        let w = kahler_forms::<X>();
        let r = k_from_frames(&e, &w, 0.0).unwrap();
        assert!(r.verdict);
        assert_eq!(r.k.unwrap(), kappa(&s_hat::<X>()));
        let doubled = e.clone().map(|m| m.scale(&X::from_i64(2)));
        let r2 = k_from_frames(&doubled, &w, 0.0).unwrap();
        assert!(!r2.verdict);
        assert_eq!(r2.four_form.exact_zero, Some(false));
    }

    #[test]
    fn non_skew_frames_are_rejected() {
        let mut e = script_e_frames::<X>();
        e[0] = Mat::identity(8);
        let err = k_from_frames(&e, &kahler_forms::<X>(), 0.0).unwrap_err();
        assert!(err.to_string().contains("g-skew"));
    }
}
