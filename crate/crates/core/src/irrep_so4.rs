//! The irreducible sp(1) on W = S³Δ, the Υ-matrices, the quartic Ŝ, the
//! projection P̂, the frames ℰ_s on V, and Casimir decompositions of
//! so(4) = sp(1) ⊕ sp(1) modules.

use std::collections::BTreeMap;

use crate::hk_curvature::{quartic_lie_derivative, sorted_multi_indices, SymQuartic};
use crate::linalg::Mat;
use crate::sp2_lie::{dagger, dollar_basis, EndoOnSp2, Sp2Element};
use crate::tensor_core::{complex_structures, einsum, form_of, g8, permutations, pi_matrix, Array};
use crate::{Error, Residual, Result, Scalar};

fn arr<S: Scalar>(m: &Mat<S>) -> Array<S> {
    Array::from_mat(m)
}

fn ein<S: Scalar>(spec: &str, ops: &[&Array<S>]) -> Array<S> {
    einsum(spec, ops).expect("well-formed contraction")
}

fn res<S: Scalar>(a: &Mat<S>, b: &Mat<S>) -> Residual {
    Residual::between(a.entries(), b.entries())
}

fn m4<S: Scalar>(rows: [[S; 4]; 4]) -> Mat<S> {
    Mat::from_rows(rows.into_iter().map(Vec::from).collect())
}

// ---------------------------------------------------------------------------
// sp(1) on Δ and on S³Δ
// ---------------------------------------------------------------------------

/// The generators Ê₁, Ê₂, Ê₃ of sp(1) acting on Δ = ℂ².
#[derive(Clone, Debug, PartialEq)]
pub struct Sp1Generators<S> {
    pub e: [Mat<S>; 3],
}

impl<S: Scalar> Sp1Generators<S> {
    pub fn standard() -> Self {
        let h = S::ratio(1, 2);
        let hi = S::i().times(&h);
        let z = S::zero;
        let e1 = Mat::from_rows(vec![vec![hi.negated(), z()], vec![z(), hi.clone()]]);
        let e2 = Mat::from_rows(vec![vec![z(), h.negated()], vec![h.clone(), z()]]);
        let e3 = Mat::from_rows(vec![vec![z(), hi.clone()], vec![hi, z()]]);
        Sp1Generators { e: [e1, e2, e3] }
    }

    /// [Ê₁,Ê₂] = Ê₃ and cyclic.
    pub fn bracket_residual(&self) -> Residual {
        cyclic_bracket_residual(&self.e)
    }
}

fn cyclic_bracket_residual<S: Scalar>(e: &[Mat<S>; 3]) -> Residual {
    Residual::merge((0..3).map(|s| res(&e[s].commutator(&e[(s + 1) % 3]), &e[(s + 2) % 3])))
}

/// Columns ê₁..ê₄ inside Δ⊗Δ⊗Δ (index 4a + 2b + c).
pub fn hat_basis<S: Scalar>() -> Mat<S> {
    let r = S::one().div(&S::sqrt3()).expect("√3 ≠ 0");
    let mut b = Mat::zeros(8, 4);
    b[(0, 0)] = S::one();
    for k in [1, 2, 4] {
        b[(k, 1)] = r.clone();
    }
    b[(7, 2)] = S::one();
    for k in [3, 5, 6] {
        b[(k, 3)] = r.negated();
    }
    b
}

/// The action of M ∈ gl(Δ) on S³Δ in the basis ê, via M⊗1⊗1 + 1⊗M⊗1 + 1⊗1⊗M.
pub fn sym_cube_rep<S: Scalar>(m: &Mat<S>) -> Mat<S> {
    let id = Mat::<S>::identity(2);
    let big = m.kron(&id).kron(&id).add(&id.kron(m).kron(&id)).add(&id.kron(&id).kron(m));
    // ê is orthonormal and real, so Bᵀ is a left inverse.
    let b = hat_basis::<S>();
    b.transpose().mul(&big).mul(&b)
}

/// Reference values of E₁, E₂, E₃.
pub fn reference_e_matrices<S: Scalar>() -> [Mat<S>; 3] {
    let z = S::zero;
    let q = |p, d| S::ratio(p, d);
    let i = S::i();
    let r3h = S::sqrt3().times(&q(1, 2));
    let ir3h = i.times(&r3h);
    let e1 = Mat::diag(&[i.times(&q(-3, 2)), i.times(&q(-1, 2)), i.times(&q(3, 2)), i.times(&q(1, 2))]);
    let e2 = m4([
        [z(), r3h.negated(), z(), z()],
        [r3h.clone(), z(), z(), S::one()],
        [z(), z(), z(), r3h.negated()],
        [z(), S::from_i64(-1), r3h.clone(), z()],
    ]);
    let e3 = m4([
        [z(), ir3h.clone(), z(), z()],
        [ir3h.clone(), z(), z(), i.negated()],
        [z(), z(), z(), ir3h.negated()],
        [z(), i.negated(), ir3h.negated(), z()],
    ]);
    [e1, e2, e3]
}

/// Υ_s = −π E_s, so that E_s = π^{ασ}(Υ_s)_{σβ}.
pub fn upsilon_matrices<S: Scalar>(e: &[Mat<S>; 3]) -> Result<[Sp2Element<S>; 3]> {
    let f = |m: &Mat<S>| Sp2Element::from_endo(m);
    Ok([f(&e[0])?, f(&e[1])?, f(&e[2])?])
}

/// E_s, Υ_s and Ŝ of the irreducible representation.
#[derive(Clone, Debug)]
pub struct IrrepFrame<S> {
    pub e: [Mat<S>; 3],
    pub upsilon: [Sp2Element<S>; 3],
    pub s_hat: SymQuartic<S>,
}

impl<S: Scalar> IrrepFrame<S> {
    /// E_s computed from Ê_s by the symmetric cube.
    pub fn standard() -> Self {
        let g = Sp1Generators::<S>::standard();
        let e = [sym_cube_rep(&g.e[0]), sym_cube_rep(&g.e[1]), sym_cube_rep(&g.e[2])];
        let upsilon = upsilon_matrices(&e).expect("the symmetric cube lands in sp(2)");
        IrrepFrame { e, upsilon, s_hat: s_hat() }
    }

    /// Residuals of the seven identities for Υ and Ŝ, plus the match with the reference E_s.
    pub fn identity_residuals(&self) -> Vec<(&'static str, Residual)> {
        let u = &self.upsilon;
        let pi = pi_matrix::<S>();
        let pa = arr(&pi);
        let sh = self.s_hat.array();
        let mut out = Vec::new();
        let reference = reference_e_matrices::<S>();
        out.push(("e_matches_reference", Residual::merge((0..3).map(|s| res(&self.e[s], &reference[s])))));
        // (1)
        let sym = Residual::merge(u.iter().map(|x| res(x.matrix(), &x.matrix().transpose())));
        let real = Residual::merge(u.iter().map(|x| res(x.jmap().matrix(), x.matrix())));
        out.push(("upsilon_identity_1", Residual::merge([sym, real])));
        // (2)
        let gram = Mat::from_fn(3, 3, |s, t| u[s].inner(&u[t]));
        out.push(("upsilon_identity_2", res(&gram, &Mat::identity(3).scale(&S::from_i64(5)))));
        // (3)
        let br = Residual::merge((0..3).map(|s| res(u[s].bracket(&u[(s + 1) % 3]).matrix(), u[(s + 2) % 3].matrix())));
        out.push(("upsilon_identity_3", br));
        // (4)
        out.push(("upsilon_identity_4", Residual::merge(u.iter().map(|x| quartic_lie_derivative(x, sh).residual()))));
        // (5)
        out.push(("upsilon_identity_5", s_hat_from_upsilon(u).array().residual_to(sh)));
        // (6)
        let six = Residual::merge(u.iter().map(|x| {
            let lhs = ein("st,sg,td,abgd->ab", &[&arr(x.matrix()), &pa, &pa, sh]);
            lhs.residual_to(&arr(&x.matrix().scale(&S::ratio(7, 2))))
        }));
        out.push(("upsilon_identity_6", six));
        // (7)
        let mut acc = Array::zeros(&[4, 4]);
        for x in u {
            let xa = arr(x.matrix());
            acc = acc.add(&ein("st,as,bt->ab", &[&pa, &xa, &xa]));
        }
        out.push(("upsilon_identity_7", acc.residual_to(&arr(&pi.scale(&S::ratio(15, 4))))));
        out
    }
}

// ---------------------------------------------------------------------------
// The quartic Ŝ and the discriminant
// ---------------------------------------------------------------------------

/// Monomial coefficients of the reference quartic, keyed by sorted variable indices.
pub fn s_hat_monomials<S: Scalar>() -> Vec<([usize; 4], S)> {
    let r3 = S::sqrt3();
    vec![
        ([0, 1, 2, 3], S::from_i64(-18)),
        ([0, 3, 3, 3], r3.scale_i64(4)),
        ([1, 1, 1, 2], r3.scale_i64(-4)),
        ([1, 1, 3, 3], S::from_i64(3)),
        ([0, 0, 2, 2], S::from_i64(-9)),
    ]
}

/// Number of distinct orderings of a sorted multi-index.
fn multinomial(idx: &[usize; 4]) -> i64 {
    let mut counts = [0i64; 4];
    for &i in idx {
        counts[i] += 1;
    }
    let fact = |n: i64| (1..=n).product::<i64>();
    24 / counts.iter().map(|&c| fact(c)).product::<i64>()
}

/// The polarization of a quartic given by monomial coefficients.
pub fn polarize<S: Scalar>(monomials: &[([usize; 4], S)]) -> Result<SymQuartic<S>> {
    let mut s = Array::zeros(&[4, 4, 4, 4]);
    for (idx, c) in monomials {
        let mut sorted = *idx;
        sorted.sort_unstable();
        let v = c.times(&S::ratio(1, multinomial(&sorted)));
        for (p, _) in permutations(4) {
            s.set(&[sorted[p[0]], sorted[p[1]], sorted[p[2]], sorted[p[3]]], v.clone());
        }
    }
    SymQuartic::new(s)
}

/// Ŝ polarized from the reference quartic polynomial.
pub fn s_hat<S: Scalar>() -> SymQuartic<S> {
    polarize(&s_hat_monomials()).expect("the reference quartic is 𝔧-real")
}

/// Σ_s Υ_s ⊗ Υ_s − (3/4)(π_{αγ}π_{βδ} + π_{αδ}π_{βγ}).
pub fn s_hat_from_upsilon<S: Scalar>(u: &[Sp2Element<S>; 3]) -> SymQuartic<S> {
    let pa = arr(&pi_matrix::<S>());
    let mut acc = Array::zeros(&[4, 4, 4, 4]);
    for x in u {
        let xa = arr(x.matrix());
        acc = acc.add(&ein("ab,cd->abcd", &[&xa, &xa]));
    }
    let pp = ein("ac,bd->abcd", &[&pa, &pa]).add(&ein("ad,bc->abcd", &[&pa, &pa]));
    SymQuartic::unchecked(acc.sub(&pp.scale(&S::ratio(3, 4))))
}

/// Homogeneous polynomial in four variables, keyed by exponent vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<S> {
    terms: BTreeMap<[u32; 4], S>,
}

impl<S: Scalar> Poly<S> {
    pub fn zero() -> Self {
        Poly { terms: BTreeMap::new() }
    }

    pub fn constant(c: S) -> Self {
        let mut p = Poly::zero();
        p.add_term([0; 4], c);
        p
    }

    /// Σ c_k v_k for variable index k.
    pub fn linear(coeffs: [S; 4]) -> Self {
        let mut p = Poly::zero();
        for (k, c) in coeffs.into_iter().enumerate() {
            let mut e = [0; 4];
            e[k] = 1;
            p.add_term(e, c);
        }
        p
    }

    pub fn add_term(&mut self, exps: [u32; 4], c: S) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(exps).or_insert_with(S::zero);
        *entry += &c;
        if entry.is_zero() {
            self.terms.remove(&exps);
        }
    }

    pub fn coefficient(&self, exps: [u32; 4]) -> S {
        self.terms.get(&exps).cloned().unwrap_or_else(S::zero)
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut p = self.clone();
        for (e, c) in &o.terms {
            p.add_term(*e, c.clone());
        }
        p
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut p = Poly::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let e = [e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2], e1[3] + e2[3]];
                p.add_term(e, c1.times(c2));
            }
        }
        p
    }

    pub fn scale(&self, k: &S) -> Self {
        let mut p = Poly::zero();
        for (e, c) in &self.terms {
            p.add_term(*e, c.times(k));
        }
        p
    }

    pub fn eval(&self, x: &[S; 4]) -> S {
        let mut acc = S::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for k in 0..4 {
                for _ in 0..e[k] {
                    t = t.times(&x[k]);
                }
            }
            acc += &t;
        }
        acc
    }
}

/// All exponent vectors of degree 4 in four variables (35 of them).
pub fn quartic_monomials() -> Vec<[u32; 4]> {
    sorted_multi_indices()
        .into_iter()
        .map(|idx| {
            let mut e = [0u32; 4];
            for i in idx {
                e[i] += 1;
            }
            e
        })
        .collect()
}

/// S(x, x, x, x) with each x^α replaced by a linear polynomial.
pub fn quartic_form_poly<S: Scalar>(s: &SymQuartic<S>, x: &[Poly<S>; 4]) -> Poly<S> {
    let mut acc = Poly::zero();
    for (idx, v) in s.array().nonzeros() {
        let mut t = Poly::constant(v.clone());
        for &i in &idx {
            t = t.mul(&x[i]);
        }
        acc = acc.add(&t);
    }
    acc
}

/// 18abcd − 27a²d² − 4ac³ − 4b³d + b²c².
pub fn classical_discriminant<S: Scalar>(a: &S, b: &S, c: &S, d: &S) -> S {
    discriminant_poly::<S>().eval(&[a.clone(), b.clone(), c.clone(), d.clone()])
}

/// The discriminant of az³ + bz² + cz + d as a polynomial in (a, b, c, d).
pub fn discriminant_poly<S: Scalar>() -> Poly<S> {
    let mut p = Poly::zero();
    p.add_term([1, 1, 1, 1], S::from_i64(18));
    p.add_term([2, 0, 0, 2], S::from_i64(-27));
    p.add_term([1, 0, 3, 0], S::from_i64(-4));
    p.add_term([0, 3, 0, 1], S::from_i64(-4));
    p.add_term([0, 2, 2, 0], S::one());
    p
}

/// 3Ŝ(x) − Dis(a, b, c, d) under x = (a, b/√3, d, −c/√3), coefficient by coefficient.
pub fn substitution_residual<S: Scalar>() -> Residual {
    let r = S::one().div(&S::sqrt3()).expect("√3 ≠ 0");
    let z = S::zero;
    let x = [
        Poly::linear([S::one(), z(), z(), z()]),
        Poly::linear([z(), r.clone(), z(), z()]),
        Poly::linear([z(), z(), z(), S::one()]),
        Poly::linear([z(), z(), r.negated(), z()]),
    ];
    let lhs = quartic_form_poly(&s_hat::<S>(), &x).scale(&S::from_i64(3));
    let rhs = discriminant_poly::<S>();
    let mons = quartic_monomials();
    let l: Vec<S> = mons.iter().map(|&e| lhs.coefficient(e)).collect();
    let r: Vec<S> = mons.iter().map(|&e| rhs.coefficient(e)).collect();
    Residual::between(&l, &r)
}

pub fn substitution_check<S: Scalar>(tol: f64) -> bool {
    substitution_residual::<S>().passes(tol)
}

// ---------------------------------------------------------------------------
// Projections and the reducible embeddings
// ---------------------------------------------------------------------------

/// Orthogonal projection of sp(2) onto the span of the given elements.
pub fn orthogonal_projection<S: Scalar>(span: &[Sp2Element<S>]) -> Result<EndoOnSp2<S>> {
    let n = span.len();
    let gram = Mat::from_fn(n, n, |s, t| span[s].inner(&span[t]));
    let inv = gram.inverse()?;
    Ok(EndoOnSp2::from_map(|x| {
        let mut out = Sp2Element::zero();
        for s in 0..n {
            let mut c = S::zero();
            for t in 0..n {
                c.add_product(&inv[(s, t)], &span[t].inner(x));
            }
            if !c.is_zero() {
                out = out.add(&span[s].scale(&c));
            }
        }
        out
    }))
}

/// P̂: the orthogonal projection onto sp(1)_ir = span(Υ₁, Υ₂, Υ₃).
pub fn proj_sp1ir<S: Scalar>() -> EndoOnSp2<S> {
    orthogonal_projection(&IrrepFrame::<S>::standard().upsilon).expect("Gram matrix 5·Id is invertible")
}

/// Residuals of the properties of P̂.
pub fn projection_residuals<S: Scalar>() -> Vec<(&'static str, Residual)> {
    let p = proj_sp1ir::<S>();
    let id = EndoOnSp2::<S>::identity();
    let dp = dagger(&p);
    let pr = |a: &EndoOnSp2<S>, b: &EndoOnSp2<S>| res(a.matrix(), b.matrix());
    let tk = crate::hk_curvature::t_k(&crate::hk_curvature::kappa(&s_hat::<S>()));
    let c = |n, d| S::ratio(n, d);
    vec![
        ("p_idempotent", pr(&p.compose(&p), &p)),
        ("dagger_p", pr(&dp, &p.scale(&S::from_i64(2)).sub(&id.scale(&c(12, 5))))),
        ("dagger_identity", pr(&dagger(&id), &id.scale(&S::from_i64(-6)))),
        ("t_k_of_s_hat", pr(&p.sub(&id.scale(&c(3, 10))).scale(&S::from_i64(5)), &tk)),
        ("quadratic_relation", pr(&quadratic_relation(&dp), &EndoOnSp2::zero())),
    ]
}

/// 25(†P)² + 70†P + 24·Id.
fn quadratic_relation<S: Scalar>(dp: &EndoOnSp2<S>) -> EndoOnSp2<S> {
    dp.compose(dp)
        .scale(&S::from_i64(25))
        .add(&dp.scale(&S::from_i64(70)))
        .add(&EndoOnSp2::identity().scale(&S::from_i64(24)))
}

/// sp(1) acting on W = W₁ ⊕ W₂ with both factors non-trivial.
pub fn reducible_generators<S: Scalar>() -> [Mat<S>; 3] {
    let h = S::ratio(1, 2);
    let hi = S::i().times(&h);
    let z = S::zero;
    let e1 = m4([
        [z(), z(), h.clone(), z()],
        [z(), z(), z(), h.clone()],
        [h.negated(), z(), z(), z()],
        [z(), h.negated(), z(), z()],
    ]);
    let e2 = m4([
        [z(), z(), hi.clone(), z()],
        [z(), z(), z(), hi.clone()],
        [hi.clone(), z(), z(), z()],
        [z(), hi.clone(), z(), z()],
    ]);
    let e3 = Mat::diag(&[hi.clone(), hi.clone(), hi.negated(), hi.negated()]);
    [e1, e2, e3]
}

/// The same action restricted to span(e₁, e₃), trivial on span(e₂, e₄).
pub fn trivial_factor_generators<S: Scalar>() -> [Mat<S>; 3] {
    let mask = Mat::diag(&[S::one(), S::zero(), S::one(), S::zero()]);
    reducible_generators::<S>().map(|e| mask.mul(&e).mul(&mask))
}

/// Residuals for the two reducible embeddings of sp(1) into sp(2).
#[derive(Clone, Debug)]
pub struct ReducibleReport {
    pub generators_close: Residual,
    /// (†P)² + 2†P for the non-degenerate case.
    pub nondegenerate: Residual,
    /// (†P)² + (3/2)†P − 10P for the trivial-factor case.
    pub trivial_factor: Residual,
    /// 25(†P)² + 70†P + 24 for each case; nonzero means the case is excluded.
    pub nondegenerate_relation: Residual,
    pub trivial_factor_relation: Residual,
}

pub fn reducible_case_checks<S: Scalar>() -> Result<ReducibleReport> {
    let a = reducible_generators::<S>();
    let b = trivial_factor_generators::<S>();
    let generators_close = Residual::merge([cyclic_bracket_residual(&a), cyclic_bracket_residual(&b)]);
    let pa = orthogonal_projection(&upsilon_matrices(&a)?)?;
    let pb = orthogonal_projection(&upsilon_matrices(&b)?)?;
    let (da, db) = (dagger(&pa), dagger(&pb));
    let nondegenerate = res(da.compose(&da).add(&da.scale(&S::from_i64(2))).matrix(), &Mat::zeros(10, 10));
    let tf = db.compose(&db).add(&db.scale(&S::ratio(3, 2))).sub(&pb.scale(&S::from_i64(10)));
    let trivial_factor = Residual::of_zero(tf.matrix().entries());
    Ok(ReducibleReport {
        generators_close,
        nondegenerate,
        trivial_factor,
        nondegenerate_relation: Residual::of_zero(quadratic_relation(&da).matrix().entries()),
        trivial_factor_relation: Residual::of_zero(quadratic_relation(&db).matrix().entries()),
    })
}

/// The form on S³Δ induced by ε⊗ε⊗ε (ε(d₁,d₂) = 1) in the basis ê, the constant c
/// with form = c·π, and the residual of j(ê₁) = ê₃, j(ê₂) = ê₄.
pub fn adapted_basis_form<S: Scalar>() -> (Mat<S>, S, Residual) {
    let eps = Mat::from_rows(vec![vec![S::zero(), S::one()], vec![S::from_i64(-1), S::zero()]]);
    let e3 = eps.kron(&eps).kron(&eps);
    let b = hat_basis::<S>();
    let form = b.transpose().mul(&e3).mul(&b);
    let c = form[(0, 2)].clone();
    // j(d₁) = d₂, j(d₂) = −d₁; B is real, so j acts on coordinates by J₃ = j⊗j⊗j.
    let j = Mat::from_rows(vec![vec![S::zero(), S::from_i64(-1)], vec![S::one(), S::zero()]]);
    let j3 = j.kron(&j).kron(&j);
    let jb = j3.mul(&b.conj());
    let target = Mat::from_cols(&[b.col(2), b.col(3), b.col(0).iter().map(S::negated).collect(), b.col(1).iter().map(S::negated).collect()]);
    (form, c, res(&jb, &target))
}

// ---------------------------------------------------------------------------
// Frames on V
// ---------------------------------------------------------------------------

/// ℰ_s = diag(E_s, Ē_s) on V^ℂ.
pub fn script_e_frames<S: Scalar>() -> [Mat<S>; 3] {
    IrrepFrame::<S>::standard().upsilon.map(|u| u.to_endo8())
}

/// g(A, B) = ½ Σ g(A h_a, B h_a) on endomorphisms of V.
pub fn endo_inner<S: Scalar>(a: &Mat<S>, b: &Mat<S>) -> S {
    let gi = arr(&g8::<S>());
    let v = ein("ab,cd,ac,bd->", &[&arr(&form_of(a)), &arr(&form_of(b)), &gi, &gi]);
    v.get(&[]).times(&S::ratio(1, 2))
}

/// (a ∧ b)(x,y,z,w) for 2-forms, normalized as (1/4) Σ_p sgn(p) (a⊗b)∘p.
pub fn wedge<S: Scalar>(a: &Mat<S>, b: &Mat<S>) -> Array<S> {
    let t = ein("xy,zw->xyzw", &[&arr(a), &arr(b)]);
    let mut acc = Array::zeros(t.dims());
    for (p, sgn) in permutations(4) {
        let q = t.permute(&p).expect("permutation");
        acc = if sgn > 0 { acc.add(&q) } else { acc.sub(&q) };
    }
    acc.scale(&S::ratio(1, 4))
}

/// The Kähler forms ω_s(x, y) = g(J_s x, y).
pub fn kahler_forms<S: Scalar>() -> [Mat<S>; 3] {
    complex_structures::<S>().map(|j| form_of(&j))
}

/// Ω = Σ ω_s ∧ ω_s.
pub fn fundamental_four_form<S: Scalar>() -> Array<S> {
    let w = kahler_forms::<S>();
    wedge(&w[0], &w[0]).add(&wedge(&w[1], &w[1])).add(&wedge(&w[2], &w[2]))
}

/// Residuals of g(ℰ_s,ℰ_t) = 5δ, [ℰ_i,ℰ_j] = ℰ_k, Σℰ_s² = −(15/4)Id and Σε_s∧ε_s = −(3/4)Ω.
pub fn frame_residuals<S: Scalar>(e: &[Mat<S>; 3]) -> Vec<(&'static str, Residual)> {
    let gram = Mat::from_fn(3, 3, |s, t| endo_inner(&e[s], &e[t]));
    let mut sq = Mat::zeros(8, 8);
    for x in e {
        sq = sq.add(&x.mul(x));
    }
    let eps: Vec<Mat<S>> = e.iter().map(form_of).collect();
    let ee = wedge(&eps[0], &eps[0]).add(&wedge(&eps[1], &eps[1])).add(&wedge(&eps[2], &eps[2]));
    vec![
        ("frame_gram", res(&gram, &Mat::identity(3).scale(&S::from_i64(5)))),
        ("frame_bracket", cyclic_bracket_residual(e)),
        ("frame_square_sum", res(&sq, &Mat::identity(8).scale(&S::ratio(-15, 4)))),
        ("frame_four_form", ee.residual_to(&fundamental_four_form::<S>().scale(&S::ratio(-3, 4)))),
    ]
}

// ---------------------------------------------------------------------------
// so(4) modules and Casimir decomposition
// ---------------------------------------------------------------------------

/// A representation of so(4) = sp(1)_E ⊕ sp(1)_H on a carrier space.
#[derive(Clone, Debug)]
pub struct So4Module<S> {
    e_gens: [Mat<S>; 3],
    h_gens: [Mat<S>; 3],
}

/// One isotypic summand S^kE ⊗ S^lH.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, serde::Serialize)]
pub struct Summand {
    pub k: usize,
    pub l: usize,
    pub multiplicity: usize,
}

impl Summand {
    pub fn dim(&self) -> usize {
        (self.k + 1) * (self.l + 1) * self.multiplicity
    }
}

impl<S: Scalar> So4Module<S> {
    /// Checks [X₁,X₂] = X₃ (cyclic) in each factor and that the factors commute.
    pub fn new(e_gens: [Mat<S>; 3], h_gens: [Mat<S>; 3], tol: f64) -> Result<Self> {
        let n = e_gens[0].rows();
        if e_gens.iter().chain(&h_gens).any(|m| m.rows() != n || m.cols() != n) {
            return Err(Error::Shape("generators must be square of one size".into()));
        }
        if !cyclic_bracket_residual(&e_gens).passes(tol) {
            return Err(Error::Invariant("E-factor generators do not close as sp(1)".into()));
        }
        if !cyclic_bracket_residual(&h_gens).passes(tol) {
            return Err(Error::Invariant("H-factor generators do not close as sp(1)".into()));
        }
        for x in &e_gens {
            for y in &h_gens {
                if !Residual::of_zero(x.commutator(y).entries()).passes(tol) {
                    return Err(Error::Invariant("the two sp(1) factors do not commute".into()));
                }
            }
        }
        Ok(So4Module { e_gens, h_gens })
    }

    pub fn dim(&self) -> usize {
        self.e_gens[0].rows()
    }

    /// −Σ X_s² for each factor.
    pub fn casimirs(&self) -> (Mat<S>, Mat<S>) {
        let c = |g: &[Mat<S>; 3]| {
            let mut acc = Mat::zeros(self.dim(), self.dim());
            for x in g {
                acc = acc.sub(&x.mul(x));
            }
            acc
        };
        (c(&self.e_gens), c(&self.h_gens))
    }
}

fn casimir_value<S: Scalar>(k: usize) -> S {
    S::ratio((k * (k + 2)) as i64, 4)
}

/// Multiplicities of S^kE ⊗ S^lH from the joint Casimir spectra, where the
/// Casimir on S^k is k(k+2)/4.
pub fn casimir_decompose<S: Scalar>(m: &So4Module<S>) -> Result<Vec<Summand>> {
    let n = m.dim();
    let (ce, ch) = m.casimirs();
    let id = Mat::<S>::identity(n);
    let mut out = Vec::new();
    let mut found = 0;
    for k in 0..n {
        if found == n {
            break;
        }
        let shifted_e = ce.sub(&id.scale(&casimir_value(k)));
        let ek = n - shifted_e.rank();
        if ek == 0 {
            continue;
        }
        let mut in_k = 0;
        for l in 0..n {
            if in_k == ek {
                break;
            }
            if (k + 1) * (l + 1) > ek {
                break;
            }
            let shifted_h = ch.sub(&id.scale(&casimir_value(l)));
            let joint = n - Mat::vstack(&[&shifted_e, &shifted_h]).rank();
            if joint == 0 {
                continue;
            }
            let block = (k + 1) * (l + 1);
            if !joint.is_multiple_of(block) {
                return Err(Error::Inconsistent(format!(
                    "joint eigenspace for (k, l) = ({k}, {l}) has dimension {joint}, not a multiple of {block}"
                )));
            }
            out.push(Summand { k, l, multiplicity: joint / block });
            in_k += joint;
        }
        if in_k != ek {
            return Err(Error::Inconsistent(format!("Casimir eigenspace for k = {k} is not exhausted by H-labels")));
        }
        found += ek;
    }
    if found != n {
        return Err(Error::Inconsistent(format!("Casimir eigenspaces cover {found} of {n} dimensions")));
    }
    Ok(out)
}

/// V = S³E ⊗ H with generators ℰ_s and ½J_s.
pub fn carrier_v<S: Scalar>(tol: f64) -> Result<So4Module<S>> {
    let half = S::ratio(1, 2);
    So4Module::new(script_e_frames::<S>(), complex_structures::<S>().map(|j| j.scale(&half)), tol)
}

/// sp(2) with sp(1)_ir acting by ad(Υ_s) and the H-factor acting trivially.
pub fn carrier_sp2<S: Scalar>(tol: f64) -> Result<So4Module<S>> {
    let u = IrrepFrame::<S>::standard().upsilon;
    let ad = |x: &Sp2Element<S>| crate::sp2_lie::ad(x).matrix().clone();
    let z = Mat::zeros(10, 10);
    So4Module::new([ad(&u[0]), ad(&u[1]), ad(&u[2])], [z.clone(), z.clone(), z], tol)
}

/// Coordinates ($-basis) of a basis of the ⟨,⟩-orthogonal complement of span Υ.
pub fn sp1ir_complement<S: Scalar>() -> Vec<Vec<S>> {
    let u = IrrepFrame::<S>::standard().upsilon;
    let basis = dollar_basis::<S>();
    let m = Mat::from_fn(3, 10, |s, k| u[s].inner(&basis[k]));
    m.nullspace()
}

/// V ⊗ Q⊥ (dimension 56), Q⊥ the 7-dimensional complement of sp(1)_ir in sp(2).
pub fn carrier_torsion<S: Scalar>(tol: f64) -> Result<So4Module<S>> {
    let u = IrrepFrame::<S>::standard().upsilon;
    let q = Mat::from_cols(&sp1ir_complement::<S>());
    let d = q.cols();
    let restrict = |x: &Sp2Element<S>| -> Result<Mat<S>> {
        let ad = crate::sp2_lie::ad(x).matrix().mul(&q);
        let cols = (0..d).map(|c| q.solve(&ad.col(c))).collect::<Result<Vec<_>>>()?;
        Ok(Mat::from_cols(&cols))
    };
    let frames = script_e_frames::<S>();
    let id8 = Mat::<S>::identity(8);
    let idq = Mat::<S>::identity(d);
    let mut e_gens = Vec::with_capacity(3);
    for s in 0..3 {
        e_gens.push(frames[s].kron(&idq).add(&id8.kron(&restrict(&u[s])?)));
    }
    let half = S::ratio(1, 2);
    let h_gens = complex_structures::<S>().map(|j| j.scale(&half).kron(&idq));
    let e_gens: [Mat<S>; 3] = e_gens.try_into().expect("three generators");
    So4Module::new(e_gens, h_gens, tol)
}

/// Checks that a quartic is annihilated by sp(1)_ir and is 𝔧-real.
pub fn is_sp1ir_invariant<S: Scalar>(s: &SymQuartic<S>, tol: f64) -> bool {
    let u = IrrepFrame::<S>::standard().upsilon;
    u.iter().all(|x| quartic_lie_derivative(x, s.array()).residual().passes(tol)) && s.is_j_real()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Exact;

    type X = Exact;

    #[test]
    fn delta_generators_close() {
        assert_eq!(Sp1Generators::<X>::standard().bracket_residual().exact_zero, Some(true));
    }

    #[test]
    fn cube_reproduces_reference_matrices() {
        let f = IrrepFrame::<X>::standard();
        assert_eq!(f.e, reference_e_matrices::<X>());
        assert!(sym_cube_rep(&Mat::<X>::zeros(2, 2)).is_zero());
    }

    #[test]
    fn cube_is_a_lie_homomorphism() {
        let g = Sp1Generators::<X>::standard();
        let m = g.e[0].add(&g.e[1].scale(&X::from_i64(2)));
        let n = g.e[2].sub(&g.e[0]);
        assert_eq!(sym_cube_rep(&m.commutator(&n)), sym_cube_rep(&m).commutator(&sym_cube_rep(&n)));
    }

    #[test]
    fn reference_upsilon_entries() {
        let u = IrrepFrame::<X>::standard().upsilon;
        let m = X::i().times(&X::ratio(-3, 2));
        assert_eq!(u[0].matrix()[(0, 2)], m);
        assert_eq!(u[0].matrix()[(2, 0)], m);
        assert_eq!(u[1].matrix()[(1, 1)], X::one());
        assert_eq!(*u[2].matrix(), u[2].matrix().transpose());
    }

    #[test]
    fn all_upsilon_identities_vanish() {
        for (name, r) in IrrepFrame::<X>::standard().identity_residuals() {
            assert_eq!(r.exact_zero, Some(true), "{name}");
        }
    }

    #[test]
    fn s_hat_components() {
        let s = s_hat::<X>();
        assert_eq!(*s.get(0, 1, 2, 3), X::ratio(-3, 4));
        assert_eq!(*s.get(0, 3, 3, 3), X::sqrt3());
        assert_eq!(*s.get(0, 2, 0, 2), X::ratio(-3, 2));
        let u = IrrepFrame::<X>::standard().upsilon;
        let mut sum = X::zero();
        for x in &u {
            sum.add_product(&x.matrix()[(0, 2)], &x.matrix()[(0, 2)]);
        }
        assert_eq!(sum, X::ratio(-9, 4));
        let z = X::zero;
        assert!(s.form(&[X::one(), z(), z(), z()]).is_zero());
        assert_eq!(s.form(&[X::one(), z(), X::one(), z()]), X::from_i64(-9));
    }

    #[test]
    fn discriminant_values() {
        let q = |n| X::from_i64(n);
        assert_eq!(classical_discriminant(&q(1), &q(0), &q(-1), &q(0)), q(4));
        assert_eq!(classical_discriminant(&q(1), &q(0), &q(-3), &q(2)), q(0));
        assert_eq!(quartic_monomials().len(), 35);
        assert!(substitution_check::<X>(0.0));
    }

    #[test]
    fn projection_properties() {
        for (name, r) in projection_residuals::<X>() {
            assert_eq!(r.exact_zero, Some(true), "{name}");
        }
        let p = proj_sp1ir::<X>();
        assert_eq!(p.matrix().rank(), 3);
        let u = IrrepFrame::<X>::standard().upsilon;
        assert_eq!(p.apply(&u[0]), u[0]);
        for v in sp1ir_complement::<X>() {
            assert!(p.apply(&Sp2Element::from_coords(&v)).is_zero());
        }
    }

    #[test]
    fn reducible_cases_contradict_the_quadratic_relation() {
        let r = reducible_case_checks::<X>().unwrap();
        assert_eq!(r.generators_close.exact_zero, Some(true));
        assert_eq!(r.nondegenerate.exact_zero, Some(true));
        assert_eq!(r.trivial_factor.exact_zero, Some(true));
        assert_eq!(r.nondegenerate_relation.exact_zero, Some(false));
        assert_eq!(r.trivial_factor_relation.exact_zero, Some(false));
    }

    #[test]
    fn adapted_basis_constant_is_one() {
        let (form, c, jr) = adapted_basis_form::<X>();
        assert_eq!(c, X::one());
        assert_eq!(form, pi_matrix::<X>());
        assert_eq!(jr.exact_zero, Some(true));
    }

    #[test]
    fn frame_identities() {
        for (name, r) in frame_residuals(&script_e_frames::<X>()) {
            assert_eq!(r.exact_zero, Some(true), "{name}");
        }
        assert_eq!(endo_inner(&script_e_frames::<X>()[0], &script_e_frames::<X>()[0]), X::from_i64(5));
    }

    #[test]
    fn casimir_on_v_and_sp2() {
        let v = casimir_decompose(&carrier_v::<X>(0.0).unwrap()).unwrap();
        assert_eq!(v, vec![Summand { k: 3, l: 1, multiplicity: 1 }]);
        let a = casimir_decompose(&carrier_sp2::<X>(0.0).unwrap()).unwrap();
        assert_eq!(a, vec![Summand { k: 2, l: 0, multiplicity: 1 }, Summand { k: 6, l: 0, multiplicity: 1 }]);
    }

    #[test]
    fn bracket_failure_is_an_error() {
        let f = script_e_frames::<X>();
        let doubled = f.clone().map(|m| m.scale(&X::from_i64(2)));
        assert!(So4Module::new(doubled, f, 0.0).is_err());
    }
}
