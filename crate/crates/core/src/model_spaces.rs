//! Constant-coefficient coframes on so(4) ⊕ V: the flat model, G₂/SO(4),
//! G₂₍₂₎/SO(4) and the one-parameter h-family; Maurer–Cartan closure, Lie
//! tables, curvature at the origin and the first-Bianchi linear system.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::hk_curvature::{kappa, kappa_inv, ricci_of, HKTensor, SymQuartic};
use crate::irrep_so4::{kahler_forms, s_hat, script_e_frames, IrrepFrame};
use crate::linalg::Mat;
use crate::orbit::{k_from_frames, FrameReport};
use crate::tensor_core::{complex_structures, einsum, g8, pi_matrix, Array};
use crate::{Error, Residual, Result, Scalar};

/// Number of coframe labels.
pub const N: usize = 14;

/// ψ¹..ψ³, φ¹..φ³, θ¹..θ⁴, θ^{1̄}..θ^{4̄}.
pub const LABELS: [&str; N] = [
    "psi1", "psi2", "psi3", "phi1", "phi2", "phi3", "theta1", "theta2", "theta3", "theta4", "thetabar1", "thetabar2",
    "thetabar3", "thetabar4",
];

pub const PSI: [usize; 3] = [0, 1, 2];
pub const PHI: [usize; 3] = [3, 4, 5];
pub const THETA: [usize; 4] = [6, 7, 8, 9];
pub const THETA_BAR: [usize; 4] = [10, 11, 12, 13];

/// Connection labels ψ, φ.
pub fn connection_labels() -> Vec<usize> {
    (0..6).collect()
}

/// Horizontal labels θ, θ̄ in the order of V^ℂ = W ⊕ W̄.
pub fn horizontal_labels() -> Vec<usize> {
    (6..14).collect()
}

/// Conjugation on labels: fixes ψ, φ and swaps θ^α ↔ θ^{ᾱ}.
pub fn conjugate_label(i: usize) -> usize {
    match i {
        6..=9 => i + 4,
        10..=13 => i - 4,
        _ => i,
    }
}

fn ein<S: Scalar>(spec: &str, ops: &[&Array<S>]) -> Array<S> {
    einsum(spec, ops).expect("well-formed contraction")
}

fn label_index(name: &str) -> Result<usize> {
    LABELS.iter().position(|l| *l == name).ok_or_else(|| Error::Parse(format!("unknown coframe label {name:?}")))
}

// ---------------------------------------------------------------------------
// Coframe systems
// ---------------------------------------------------------------------------

/// dω^k = Σ_{i<j} A^k_{ij} ω^i∧ω^j with constant A, antisymmetric in (i, j).
#[derive(Clone, Debug, PartialEq)]
pub struct CoframeSystem<S> {
    a: Array<S>,
    h: Option<S>,
}

impl<S: Scalar> CoframeSystem<S> {
    /// Wraps a coefficient array indexed [k, i, j]; rejects non-antisymmetric input.
    pub fn new(a: Array<S>, h: Option<S>) -> Result<Self> {
        if a.dims() != [N, N, N] {
            return Err(Error::Shape(format!("coframe coefficients must be {N}×{N}×{N}")));
        }
        for k in 0..N {
            for i in 0..N {
                for j in i..N {
                    let s = a.get(&[k, i, j]).plus(a.get(&[k, j, i]));
                    if !s.negligible(1.0) {
                        return Err(Error::Invariant(format!(
                            "coefficient of {}∧{} in d{} is not antisymmetric",
                            LABELS[i], LABELS[j], LABELS[k]
                        )));
                    }
                }
            }
        }
        Ok(CoframeSystem { a, h })
    }

    fn empty(h: Option<S>) -> Self {
        CoframeSystem { a: Array::zeros(&[N, N, N]), h }
    }

    /// Adds c·ω^i∧ω^j to dω^k.
    pub fn add_term(&mut self, k: usize, i: usize, j: usize, c: &S) {
        self.a.add_at(&[k, i, j], c);
        self.a.add_at(&[k, j, i], &c.negated());
    }

    /// Coefficient A^k_{ij} of ω^i∧ω^j in dω^k.
    pub fn coefficient(&self, k: usize, i: usize, j: usize) -> &S {
        self.a.get(&[k, i, j])
    }

    pub fn coefficients(&self) -> &Array<S> {
        &self.a
    }

    pub fn h(&self) -> Option<&S> {
        self.h.as_ref()
    }

    pub fn labels(&self) -> [&'static str; N] {
        LABELS
    }

    /// Changes coframe ω^k ↦ λ_k ω^k: A'^k_{ij} = λ_k A^k_{ij} / (λ_i λ_j).
    pub fn rescale(&self, lambda: &[S; N]) -> Result<Self> {
        let inv: Vec<S> = lambda.iter().map(|l| l.inv().ok_or(Error::DivisionByZero)).collect::<Result<_>>()?;
        let a = Array::from_fn(&[N, N, N], |ix| {
            lambda[ix[0]].times(self.a.get(ix)).times(&inv[ix[1]]).times(&inv[ix[2]])
        });
        Ok(CoframeSystem { a, h: None })
    }

    /// Residual of A^{σk}_{σi σj} = conj(A^k_{ij}), σ swapping θ and θ̄.
    pub fn reality_residual(&self) -> Residual {
        let b = Array::from_fn(&[N, N, N], |ix| {
            self.a.get(&[conjugate_label(ix[0]), conjugate_label(ix[1]), conjugate_label(ix[2])]).conj()
        });
        b.residual_to(&self.a)
    }

    /// The 3-form coefficients of d(dω^t), antisymmetrized (up to a factor 3).
    pub fn d_squared(&self, t: usize) -> Array<S> {
        let mut out = Array::zeros(&[N, N, N]);
        for i in 0..N {
            for j in 0..N {
                let ati = self.a.get(&[t, i, j]);
                if ati.is_zero() {
                    continue;
                }
                for p in 0..N {
                    for q in 0..N {
                        let aipq = self.a.get(&[i, p, q]);
                        if aipq.is_zero() {
                            continue;
                        }
                        let v = ati.times(aipq);
                        out.add_at(&[p, q, j], &v);
                        out.add_at(&[q, j, p], &v);
                        out.add_at(&[j, p, q], &v);
                    }
                }
            }
        }
        out
    }

    /// Residual of d² = 0 for each label.
    pub fn d_squared_check(&self) -> Vec<(&'static str, Residual)> {
        (0..N).map(|t| (LABELS[t], self.d_squared(t).residual())).collect()
    }

    pub fn closes(&self, tol: f64) -> bool {
        self.d_squared_check().iter().all(|(_, r)| r.passes(tol))
    }

    /// {"labels": [...], "d": {"psi1": [["psi2", "psi3", c], ...], ...}, "h": c?}
    pub fn to_json(&self) -> Value {
        let mut d = serde_json::Map::new();
        for k in 0..N {
            let mut terms = Vec::new();
            for i in 0..N {
                for j in i + 1..N {
                    let c = self.a.get(&[k, i, j]);
                    if !c.is_zero() {
                        terms.push(json!([LABELS[i], LABELS[j], c.to_json()]));
                    }
                }
            }
            d.insert(LABELS[k].to_string(), Value::Array(terms));
        }
        let mut v = json!({ "labels": LABELS, "d": d });
        if let Some(h) = &self.h {
            v["h"] = h.to_json();
        }
        v
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let labels = v.get("labels").and_then(Value::as_array).ok_or_else(|| Error::Parse("missing \"labels\"".into()))?;
        let names: Vec<&str> = labels.iter().filter_map(Value::as_str).collect();
        if names != LABELS {
            return Err(Error::Parse(format!("labels must be {LABELS:?}")));
        }
        let d = v.get("d").and_then(Value::as_object).ok_or_else(|| Error::Parse("missing \"d\"".into()))?;
        let mut a = Array::zeros(&[N, N, N]);
        for (name, terms) in d {
            let k = label_index(name)?;
            let terms = terms.as_array().ok_or_else(|| Error::Parse(format!("d.{name} must be a list")))?;
            for (n, t) in terms.iter().enumerate() {
                let t = t.as_array().filter(|t| t.len() == 3).ok_or_else(|| Error::Parse(format!("d.{name}[{n}] must be [label, label, coefficient]")))?;
                let i = label_index(t[0].as_str().ok_or_else(|| Error::Parse(format!("d.{name}[{n}][0] must be a label")))?)?;
                let j = label_index(t[1].as_str().ok_or_else(|| Error::Parse(format!("d.{name}[{n}][1] must be a label")))?)?;
                if i == j {
                    return Err(Error::Parse(format!("d.{name}[{n}] wedges a label with itself")));
                }
                let c = S::from_json(&t[2])?;
                a.add_at(&[k, i, j], &c);
                a.add_at(&[k, j, i], &c.negated());
            }
        }
        let h = v.get("h").filter(|h| !h.is_null()).map(S::from_json).transpose()?;
        CoframeSystem::new(a, h)
    }
}

/// E_s = πΥ_s, the action of ψ_s on W.
fn e_matrices<S: Scalar>() -> [Mat<S>; 3] {
    IrrepFrame::<S>::standard().upsilon.map(|u| u.to_endo())
}

/// (Υ_s)_{ασ} π^σ_{.β̄}.
fn upsilon_pi<S: Scalar>() -> [Mat<S>; 3] {
    let pi = pi_matrix::<S>();
    IrrepFrame::<S>::standard().upsilon.map(|u| u.matrix().mul(&pi))
}

/// −ψ^j∧ψ^k in dψ^i and −φ^j∧φ^k in dφ^i, (ijk) cyclic.
fn add_so4_part<S: Scalar>(cs: &mut CoframeSystem<S>) {
    let m1 = S::from_i64(-1);
    for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        cs.add_term(PSI[i], PSI[j], PSI[k], &m1);
        cs.add_term(PHI[i], PHI[j], PHI[k], &m1);
    }
}

/// The torsion-free equations for dθ^α and dθ^ᾱ.
fn add_torsion_free_part<S: Scalar>(cs: &mut CoframeSystem<S>) {
    let e = e_matrices::<S>();
    let pi = pi_matrix::<S>();
    let half = S::ratio(1, 2);
    let half_i = S::i().times(&half);
    for a in 0..4 {
        for (s, es) in e.iter().enumerate() {
            for b in 0..4 {
                cs.add_term(THETA[a], PSI[s], THETA[b], &es[(a, b)].negated());
                cs.add_term(THETA_BAR[a], PSI[s], THETA_BAR[b], &es[(a, b)].conj().negated());
            }
        }
        cs.add_term(THETA[a], PHI[0], THETA[a], &half_i.negated());
        cs.add_term(THETA_BAR[a], PHI[0], THETA_BAR[a], &half_i);
        for b in 0..4 {
            let p = &pi[(a, b)];
            cs.add_term(THETA[a], PHI[1], THETA_BAR[b], &half.times(p));
            cs.add_term(THETA[a], PHI[2], THETA_BAR[b], &half_i.times(p));
            cs.add_term(THETA_BAR[a], PHI[1], THETA[b], &half.times(p));
            cs.add_term(THETA_BAR[a], PHI[2], THETA[b], &half_i.times(p).negated());
        }
    }
}

/// Adds the curvature terms for dψ^s (coefficient `psi` on (Υ_sπ) θ∧θ̄),
/// dφ¹ (`phi1` on Σ θ^α∧θ^ᾱ), dφ² (`phi2` on θ¹θ³ + θ²θ⁴ + conjugates),
/// dφ³ (`phi3` on θ¹θ³ + θ²θ⁴, `phi3_bar` on their conjugates).
fn add_curvature_part<S: Scalar>(cs: &mut CoframeSystem<S>, psi: &S, phi1: &S, phi2: &S, phi3: &S, phi3_bar: &S) {
    for (s, up) in upsilon_pi::<S>().iter().enumerate() {
        for a in 0..4 {
            for b in 0..4 {
                cs.add_term(PSI[s], THETA[a], THETA_BAR[b], &psi.times(&up[(a, b)]));
            }
        }
    }
    for a in 0..4 {
        cs.add_term(PHI[0], THETA[a], THETA_BAR[a], phi1);
    }
    for (a, b) in [(0, 2), (1, 3)] {
        cs.add_term(PHI[1], THETA[a], THETA[b], phi2);
        cs.add_term(PHI[1], THETA_BAR[a], THETA_BAR[b], phi2);
        cs.add_term(PHI[2], THETA[a], THETA[b], phi3);
        cs.add_term(PHI[2], THETA_BAR[a], THETA_BAR[b], phi3_bar);
    }
}

/// The h-family: torsion-free dθ with
/// dψ^s + ψ^j∧ψ^k = −(2h/3)(Υ_s)_{ασ}π^σ_{.β̄} θ^α∧θ^β̄,
/// dφ¹ + φ²∧φ³ = ih g_{αβ̄} θ^α∧θ^β̄,
/// dφ² + φ³∧φ¹ = (h/2)(π_{αβ}θ^α∧θ^β + π_{ᾱβ̄}θ^ᾱ∧θ^β̄),
/// dφ³ + φ¹∧φ² = −(ih/2)(π_{αβ}θ^α∧θ^β − π_{ᾱβ̄}θ^ᾱ∧θ^β̄).
pub fn h_family<S: Scalar>(h: &S) -> CoframeSystem<S> {
    h_family_with_phi1_sign(h, 1)
}

/// The h-family with dφ¹ + φ²∧φ³ = −ih g θ∧θ̄; this sign does not close for h ≠ 0.
pub fn h_family_flipped_sign<S: Scalar>(h: &S) -> CoframeSystem<S> {
    h_family_with_phi1_sign(h, -1)
}

fn h_family_with_phi1_sign<S: Scalar>(h: &S, sign: i64) -> CoframeSystem<S> {
    let mut cs = CoframeSystem::empty(Some(h.clone()));
    add_so4_part(&mut cs);
    add_torsion_free_part(&mut cs);
    let ih = S::i().times(h);
    add_curvature_part(
        &mut cs,
        &h.times(&S::ratio(-2, 3)),
        &ih.scale_i64(sign),
        h,
        &ih.negated(),
        &ih,
    );
    cs
}

/// The structure equations of G₂ in the basis ψ, φ, e, ē.
pub fn compact<S: Scalar>() -> CoframeSystem<S> {
    let mut cs = CoframeSystem::empty(None);
    add_so4_part(&mut cs);
    add_torsion_free_part(&mut cs);
    let i32_ = S::i().times(&S::ratio(3, 2));
    add_curvature_part(&mut cs, &S::one(), &i32_.negated(), &S::ratio(-3, 2), &i32_, &i32_.negated());
    cs
}

/// The structure equations of G₂₍₂₎ in the basis ψ, φ, f = ie, f̄ = iē.
pub fn split<S: Scalar>() -> CoframeSystem<S> {
    let mut cs = CoframeSystem::empty(None);
    add_so4_part(&mut cs);
    add_torsion_free_part(&mut cs);
    let i32_ = S::i().times(&S::ratio(3, 2));
    add_curvature_part(&mut cs, &S::from_i64(-1), &i32_, &S::ratio(3, 2), &i32_.negated(), &i32_);
    cs
}

/// The flat model, h = 0.
pub fn flat<S: Scalar>() -> CoframeSystem<S> {
    h_family(&S::zero())
}

/// Coframe change from e^α to f^α = −i e^α (dual to f_α = i e_α).
pub fn compact_to_split_scaling<S: Scalar>() -> [S; N] {
    std::array::from_fn(|k| if k >= 6 { S::i().negated() } else { S::one() })
}

/// Which model a table is compared against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum ModelSpace {
    Compact,
    Split,
    Flat,
}

impl ModelSpace {
    pub fn coframe<S: Scalar>(self) -> CoframeSystem<S> {
        match self {
            ModelSpace::Compact => compact(),
            ModelSpace::Split => split(),
            ModelSpace::Flat => flat(),
        }
    }

    /// The value of h the model corresponds to.
    pub fn h<S: Scalar>(self) -> S {
        match self {
            ModelSpace::Compact => S::ratio(-3, 2),
            ModelSpace::Split => S::ratio(3, 2),
            ModelSpace::Flat => S::zero(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelSpace::Compact => "compact",
            ModelSpace::Split => "split",
            ModelSpace::Flat => "flat",
        }
    }
}

/// Residual of a reference table against the h-family at the model's h.
pub fn identification_residual<S: Scalar>(space: ModelSpace) -> Residual {
    space.coframe::<S>().a.residual_to(&h_family(&space.h::<S>()).a)
}

/// Residual of the dθ rows of the flat model having only connection terms.
pub fn flat_translation_residual<S: Scalar>() -> Residual {
    let cs = flat::<S>();
    let mut horizontal = Vec::new();
    for k in 0..N {
        for i in 6..N {
            for j in 6..N {
                horizontal.push(cs.a.get(&[k, i, j]).clone());
            }
        }
    }
    Residual::of_zero(&horizontal)
}

// ---------------------------------------------------------------------------
// Lie tables
// ---------------------------------------------------------------------------

/// Structure constants [e_i, e_j] = Σ_k c^k_{ij} e_k of the dual Lie algebra,
/// with dω(X, Y) = −ω([X, Y]).
#[derive(Clone, Debug, PartialEq)]
pub struct LieTable<S> {
    c: Array<S>,
}

impl<S: Scalar> LieTable<S> {
    pub fn from_coframe(cs: &CoframeSystem<S>) -> Self {
        let c = Array::from_fn(&[N, N, N], |ix| cs.a.get(&[ix[2], ix[0], ix[1]]).negated());
        LieTable { c }
    }

    /// c^k_{ij}.
    pub fn constant(&self, i: usize, j: usize, k: usize) -> &S {
        self.c.get(&[i, j, k])
    }

    /// Coordinates of [e_i, e_j].
    pub fn bracket(&self, i: usize, j: usize) -> Vec<S> {
        (0..N).map(|k| self.c.get(&[i, j, k]).clone()).collect()
    }

    /// Coordinates of the cyclic sum [[e_i,e_j],e_k] + [[e_j,e_k],e_i] + [[e_k,e_i],e_j].
    pub fn jacobiator(&self, i: usize, j: usize, k: usize) -> Vec<S> {
        let mut out = vec![S::zero(); N];
        for (x, y, z) in [(i, j, k), (j, k, i), (k, i, j)] {
            for l in 0..N {
                let cxy = self.c.get(&[x, y, l]);
                if cxy.is_zero() {
                    continue;
                }
                for (m, o) in out.iter_mut().enumerate() {
                    o.add_product(cxy, self.c.get(&[l, z, m]));
                }
            }
        }
        out
    }

    /// Jacobi on all 364 triples i < j < k; the first failing triple is reported.
    pub fn jacobi_check(&self, tol: f64) -> Result<Residual> {
        let mut parts = Vec::with_capacity(364);
        for i in 0..N {
            for j in i + 1..N {
                for k in j + 1..N {
                    let r = Residual::of_zero(&self.jacobiator(i, j, k));
                    if !r.passes(tol) {
                        return Err(Error::Invariant(format!(
                            "Jacobi fails on ({}, {}, {}): {r}",
                            LABELS[i], LABELS[j], LABELS[k]
                        )));
                    }
                    parts.push(r);
                }
            }
        }
        Ok(Residual::merge(parts))
    }

    /// ad(e_i) restricted to V as an 8×8 matrix on V^ℂ = W ⊕ W̄.
    pub fn ad_on_v(&self, i: usize) -> Mat<S> {
        let v = horizontal_labels();
        Mat::from_fn(8, 8, |a, b| self.c.get(&[i, v[b], v[a]]).clone())
    }
}

/// Named entries of the ψ-triple and ψ₁/φ₁ brackets: [ψ₁,ψ₂] − ψ₃ and [ψ₁,φ₁].
pub fn sp1_table_residuals<S: Scalar>(t: &LieTable<S>) -> Vec<(&'static str, Residual)> {
    let mut e3 = vec![S::zero(); N];
    e3[PSI[2]] = S::one();
    vec![
        ("psi1_psi2_is_psi3", Residual::between(&t.bracket(PSI[0], PSI[1]), &e3)),
        ("psi1_phi1_commute", Residual::of_zero(&t.bracket(PSI[0], PHI[0]))),
    ]
}

/// Residual of [φ₁, θ_α] = (i/2)θ_α and [φ₁, θ_ᾱ] = −(i/2)θ_ᾱ.
pub fn phi1_action_residual<S: Scalar>(t: &LieTable<S>) -> Residual {
    let half_i = S::i().times(&S::ratio(1, 2));
    let target = Mat::block_diag(&Mat::identity(4).scale(&half_i), &Mat::identity(4).scale(&half_i.negated()));
    Residual::between(t.ad_on_v(PHI[0]).entries(), target.entries())
}

// ---------------------------------------------------------------------------
// Curvature at the origin
// ---------------------------------------------------------------------------

/// R[x,y,z,w] = g(R(x,y)z, w) with R(x,y) = −ad(so(4)-part of [x,y]) on V.
pub fn curvature<S: Scalar>(t: &LieTable<S>) -> Array<S> {
    let v = horizontal_labels();
    let conn = connection_labels();
    let ad: Vec<Mat<S>> = conn.iter().map(|&k| t.ad_on_v(k)).collect();
    let g = g8::<S>();
    let mut r = Array::zeros(&[8, 8, 8, 8]);
    for x in 0..8 {
        for y in 0..8 {
            let mut op = Mat::zeros(8, 8);
            for (k, adk) in conn.iter().zip(&ad) {
                let c = t.constant(v[x], v[y], *k);
                if !c.is_zero() {
                    op = op.sub(&adk.scale(c));
                }
            }
            let lowered = g.mul(&op);
            for z in 0..8 {
                for w in 0..8 {
                    r.set(&[x, y, z, w], lowered[(w, z)].clone());
                }
            }
        }
    }
    r
}

/// 4g(R₀(x,y)z,w) = g(x,w)g(y,z) − g(x,z)g(y,w)
///                 + Σ (−2ω_s(x,y)ω_s(z,w) + ω_s(x,z)ω_s(w,y) + ω_s(x,w)ω_s(y,z)).
pub fn r0<S: Scalar>() -> Array<S> {
    let g = Array::from_mat(&g8::<S>());
    let mut r = ein("xw,yz->xyzw", &[&g, &g]).sub(&ein("xz,yw->xyzw", &[&g, &g]));
    for w in kahler_forms::<S>() {
        let o = Array::from_mat(&w);
        r = r
            .sub(&ein("xy,zw->xyzw", &[&o, &o]).scale(&S::from_i64(2)))
            .add(&ein("xz,wy->xyzw", &[&o, &o]))
            .add(&ein("xw,yz->xyzw", &[&o, &o]));
    }
    r.scale(&S::ratio(1, 4))
}

/// Σ_{y,z} g^{yz} Ric(y,z).
pub fn scalar_curvature<S: Scalar>(r: &Array<S>) -> S {
    let ric = ricci_of(r);
    ein("yz,yz->", &[&ric, &Array::from_mat(&g8::<S>())]).data()[0].clone()
}

/// Curvature of a model space and its split R = R′ + (Scal/64)R₀.
#[derive(Clone, Debug)]
pub struct CurvatureData<S> {
    pub r: Array<S>,
    /// Coefficient of R₀, Scal(R)/Scal(R₀).
    pub r0_coefficient: S,
    pub r_prime: HKTensor<S>,
    /// 𝒦⁻¹(R′).
    pub r_prime_quartic: SymQuartic<S>,
    /// C read from the dφ¹ row as −2iC g θ∧θ̄.
    pub c: S,
    /// How far dφ¹, dφ², dφ³ deviate from the pattern with this C.
    pub c_pattern: Residual,
    /// 64 times the R₀ coefficient.
    pub scal_from_r0: S,
    /// 128C/3.
    pub scal_from_c: S,
    /// The Ricci trace of R.
    pub scal_ricci: S,
    /// Ric − (Scal/8)g.
    pub einstein: Residual,
    /// Ricci contraction of R′.
    pub r_prime_ricci: Residual,
    /// R − R′ − coefficient·R₀.
    pub reconstruction: Residual,
}

fn extract_c<S: Scalar>(cs: &CoframeSystem<S>) -> (S, Residual) {
    // dφ¹ ∋ −2iC θ¹∧θ^{1̄}
    let c = cs.coefficient(PHI[0], THETA[0], THETA_BAR[0]).times(&S::i()).times(&S::ratio(1, 2));
    let mut pattern = CoframeSystem::empty(None);
    let two_c = c.scale_i64(2);
    let i2c = S::i().times(&two_c);
    add_curvature_part(&mut pattern, &S::zero(), &i2c.negated(), &two_c.negated(), &i2c, &i2c.negated());
    let mut diff = Vec::new();
    for k in PHI {
        for i in 6..N {
            for j in 6..N {
                diff.push(cs.a.get(&[k, i, j]).minus(pattern.a.get(&[k, i, j])));
            }
        }
    }
    (c, Residual::of_zero(&diff))
}

/// Curvature data of a closed coframe system.
pub fn curvature_data<S: Scalar>(cs: &CoframeSystem<S>, tol: f64) -> Result<CurvatureData<S>> {
    let table = LieTable::from_coframe(cs);
    let r = curvature(&table);
    let r0 = r0::<S>();
    let scal_ricci = scalar_curvature(&r);
    let coef = scal_ricci.div(&scalar_curvature(&r0))?;
    let prime_full = r.sub(&r0.scale(&coef));
    let r_prime = HKTensor::from_full(&prime_full)?;
    let reconstruction = r.residual_to(&r_prime.full().add(&r0.scale(&coef)));
    if !reconstruction.passes(tol) {
        return Err(Error::Invariant(format!("R − R′ − (Scal/64)R₀ does not vanish ({reconstruction})")));
    }
    let r_prime_quartic = kappa_inv(&r_prime)?;
    let (c, c_pattern) = extract_c(cs);
    let g = g8::<S>();
    let einstein = Residual::between(ricci_of(&r).data(), g.scale(&scal_ricci.times(&S::ratio(1, 8))).entries());
    let r_prime_ricci = Residual::of_zero(r_prime.ricci().data());
    Ok(CurvatureData {
        scal_from_r0: coef.scale_i64(64),
        scal_from_c: c.times(&S::ratio(128, 3)),
        r,
        r0_coefficient: coef,
        r_prime,
        r_prime_quartic,
        c,
        c_pattern,
        scal_ricci,
        einstein,
        r_prime_ricci,
        reconstruction,
    })
}

/// Residual of R = ∓𝒦(Ŝ) + (3/2)R₀ (`sign` = −1 compact, +1 split).
pub fn curvature_identity_residual<S: Scalar>(d: &CurvatureData<S>, sign: i64) -> Residual {
    let expected = kappa(&s_hat::<S>()).full().scale(&S::from_i64(sign)).add(&r0::<S>().scale(&S::ratio(3, 2).scale_i64(-sign)));
    d.r.residual_to(&expected)
}

/// ad ψ_s|V and ad(2φ_s)|V.
pub fn model_frames<S: Scalar>(t: &LieTable<S>) -> ([Mat<S>; 3], [Mat<S>; 3]) {
    let two = S::from_i64(2);
    (
        PSI.map(|k| t.ad_on_v(k)),
        PHI.map(|k| t.ad_on_v(k).scale(&two)),
    )
}

/// Residuals of ad ψ_s|V = ℰ_s and ad(2φ_s)|V = J_s, and the frame report built from
/// the model's ℰ_s and ω_s = g(J_s ·, ·).
pub fn model_frame_checks<S: Scalar>(t: &LieTable<S>, tol: f64) -> Result<(Residual, Residual, FrameReport<S>)> {
    let (e, j) = model_frames(t);
    let std_e = script_e_frames::<S>();
    let std_j = complex_structures::<S>();
    let re = Residual::merge(e.iter().zip(&std_e).map(|(a, b)| Residual::between(a.entries(), b.entries())));
    let rj = Residual::merge(j.iter().zip(&std_j).map(|(a, b)| Residual::between(a.entries(), b.entries())));
    let w = j.clone().map(|m| crate::tensor_core::form_of(&m));
    let report = k_from_frames(&e, &w, tol)?;
    Ok((re, rj, report))
}

// ---------------------------------------------------------------------------
// First-Bianchi system
// ---------------------------------------------------------------------------

/// The unknown horizontal 2-form coefficients, labelled by family.
pub fn unknown_name(k: usize, i: usize, j: usize) -> String {
    let fam = match (k, i < 10, j < 10) {
        (0..=2, true, true) | (0..=2, false, false) => "C",
        (0..=2, _, _) => "D",
        (_, true, true) | (_, false, false) => "F",
        _ => "G",
    };
    let idx = |l: usize| if l < 10 { format!("{}", l - 5) } else { format!("{}̄", l - 9) };
    let sup = if k < 3 { k + 1 } else { k - 2 };
    format!("({fam}{sup})_{{{},{}}}", idx(i), idx(j))
}

/// Solution family of the first Bianchi identity.
#[derive(Clone, Debug)]
pub struct BianchiSolution<S> {
    pub unknowns: usize,
    pub equations: usize,
    pub nullity: usize,
    /// Null vector normalized by (F²)_{13} = 1, indexed like [`BianchiSolution::labels`].
    pub basis: Vec<S>,
    pub labels: Vec<(usize, usize, usize)>,
    /// The table for h = 1.
    pub table: CoframeSystem<S>,
    pub checks: Vec<(&'static str, Residual)>,
}

/// d(dθ) = 0 on horizontal triples, with dθ torsion-free and a general horizontal
/// part in dψ^s, dφ^s. Errors unless the solution space is 1-dimensional.
pub fn bianchi_family_solve<S: Scalar>() -> Result<BianchiSolution<S>> {
    let base = h_family(&S::zero());
    let v = horizontal_labels();
    let conn = connection_labels();
    let pairs: Vec<(usize, usize)> = (0..8).flat_map(|a| (a + 1..8).map(move |b| (a, b))).collect();
    let labels: Vec<(usize, usize, usize)> =
        conn.iter().flat_map(|&k| pairs.iter().map(move |&(a, b)| (k, 6 + a, 6 + b))).collect();
    let col_of = |k: usize, a: usize, b: usize| -> (usize, i64) {
        let (lo, hi, s) = if a < b { (a, b, 1) } else { (b, a, -1) };
        let p = pairs.iter().position(|&q| q == (lo, hi)).expect("pair");
        (k * pairs.len() + p, s)
    };
    for &t in &v {
        for &i in &v {
            for &j in &v {
                if !base.a.get(&[t, i, j]).is_zero() {
                    return Err(Error::Precondition("base coframe has torsion".into()));
                }
            }
        }
    }
    let triples: Vec<(usize, usize, usize)> =
        (0..8).flat_map(|a| (a + 1..8).flat_map(move |b| (b + 1..8).map(move |c| (a, b, c)))).collect();
    let mut rows = Vec::with_capacity(8 * triples.len());
    for &t in &v {
        for &(a, b, c) in &triples {
            let mut row = vec![S::zero(); labels.len()];
            // Σ_k A^t_{k c} x^k_{ab} + A^t_{k a} x^k_{bc} + A^t_{k b} x^k_{ca}
            for &k in &conn {
                for (p, q, r) in [(a, b, c), (b, c, a), (c, a, b)] {
                    let coef = base.a.get(&[t, k, v[r]]);
                    if coef.is_zero() {
                        continue;
                    }
                    let (col, s) = col_of(k, p, q);
                    row[col] = row[col].plus(&coef.scale_i64(s));
                }
            }
            rows.push(row);
        }
    }
    let m = Mat::from_rows(rows);
    let null = m.nullspace();
    if null.len() != 1 {
        let basis: Vec<String> = null
            .iter()
            .map(|n| {
                let terms: Vec<String> = n
                    .iter()
                    .zip(&labels)
                    .filter(|(x, _)| !x.is_zero())
                    .map(|(x, &(k, i, j))| format!("{}={x}", unknown_name(k, i, j)))
                    .collect();
                terms.join(", ")
            })
            .collect();
        return Err(Error::Invariant(format!("solution space has dimension {}: [{}]", null.len(), basis.join("; "))));
    }
    let pivot = labels.iter().position(|&l| l == (PHI[1], THETA[0], THETA[2])).expect("label");
    let scale = null[0][pivot].inv().ok_or_else(|| Error::Invariant("(F²)_{13} vanishes on the solution".into()))?;
    let basis: Vec<S> = null[0].iter().map(|x| x.times(&scale)).collect();
    let mut table = base.clone();
    table.h = Some(S::one());
    for (x, &(k, i, j)) in basis.iter().zip(&labels) {
        table.add_term(k, i, j, x);
    }
    let checks = bianchi_checks(&table);
    Ok(BianchiSolution { unknowns: labels.len(), equations: m.rows(), nullity: 1, basis, labels, table, checks })
}

fn block<S: Scalar>(cs: &CoframeSystem<S>, k: usize, rows: [usize; 4], cols: [usize; 4]) -> Mat<S> {
    Mat::from_fn(4, 4, |a, b| cs.a.get(&[k, rows[a], cols[b]]).clone())
}

/// F² = hπ, D^s = −(2h/3)Υ_sπ, F² = iF³, G¹ = ih g, the G¹ relation,
/// C^s = F¹ = G² = G³ = 0, reality, agreement with the h-family and d² = 0,
/// for a table normalized to h = 1.
pub fn bianchi_checks<S: Scalar>(cs: &CoframeSystem<S>) -> Vec<(&'static str, Residual)> {
    let pi = pi_matrix::<S>();
    let id = Mat::<S>::identity(4);
    let i = S::i();
    let f2 = block(cs, PHI[1], THETA, THETA);
    let f3 = block(cs, PHI[2], THETA, THETA);
    let g1 = block(cs, PHI[0], THETA, THETA_BAR);
    let d: Vec<Residual> = upsilon_pi::<S>()
        .iter()
        .enumerate()
        .map(|(s, up)| Residual::between(block(cs, PSI[s], THETA, THETA_BAR).entries(), up.scale(&S::ratio(-2, 3)).entries()))
        .collect();
    let c = Residual::merge(PSI.iter().map(|&k| Residual::of_zero(block(cs, k, THETA, THETA).entries())));
    let g23 = Residual::merge([PHI[1], PHI[2]].iter().map(|&k| Residual::of_zero(block(cs, k, THETA, THETA_BAR).entries())));
    // G¹_{αβ̄} = −i π^σ_{.β̄} F²_{σα} + (i/2) π^{στ}F²_{στ} g_{αβ̄}
    let tr = (0..4).flat_map(|s| (0..4).map(move |t| (s, t))).fold(S::zero(), |acc, (s, t)| acc.plus(&pi[(s, t)].times(&f2[(s, t)])));
    let g1_rel = f2.transpose().mul(&pi).scale(&i.negated()).add(&id.scale(&i.times(&S::ratio(1, 2)).times(&tr)));
    vec![
        ("f2_is_h_pi", Residual::between(f2.entries(), pi.entries())),
        ("d_is_upsilon_pi", Residual::merge(d)),
        ("f2_is_i_f3", Residual::between(f2.entries(), f3.scale(&i).entries())),
        ("g1_is_i_h_g", Residual::between(g1.entries(), id.scale(&i).entries())),
        ("g1_relation", Residual::between(g1.entries(), g1_rel.entries())),
        ("c_vanishes", c),
        ("f1_vanishes", Residual::of_zero(block(cs, PHI[0], THETA, THETA).entries())),
        ("g2_g3_vanish", g23),
        ("reality", cs.reality_residual()),
        ("matches_h_family", cs.a.residual_to(&h_family(&S::one()).a)),
        ("closes", Residual::merge(cs.d_squared_check().into_iter().map(|(_, r)| r))),
    ]
}

/// Named entries of a coframe, keyed "d<label>:<label>^<label>", for reports.
pub fn nonzero_terms<S: Scalar>(cs: &CoframeSystem<S>) -> BTreeMap<String, S> {
    let mut out = BTreeMap::new();
    for k in 0..N {
        for i in 0..N {
            for j in i + 1..N {
                let c = cs.a.get(&[k, i, j]);
                if !c.is_zero() {
                    out.insert(format!("d{}:{}^{}", LABELS[k], LABELS[i], LABELS[j]), c.clone());
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Exact;

    type X = Exact;

    #[test]
    fn reference_coefficients() {
        let c = compact::<X>();
        let s = split::<X>();
        let i32_ = X::i().times(&X::ratio(3, 2));
        assert_eq!(c.coefficient(PHI[0], THETA[0], THETA_BAR[0]), &i32_.negated());
        assert_eq!(s.coefficient(PHI[0], THETA[0], THETA_BAR[0]), &i32_);
        assert_eq!(c.coefficient(PSI[0], PSI[1], PSI[2]), &X::from_i64(-1));
        assert_eq!(flat_translation_residual::<X>().exact_zero, Some(true));
    }

    #[test]
    fn models_are_members_of_the_h_family() {
        for m in [ModelSpace::Compact, ModelSpace::Split, ModelSpace::Flat] {
            assert_eq!(identification_residual::<X>(m).exact_zero, Some(true), "{}", m.name());
        }
        let rescaled = compact::<X>().rescale(&compact_to_split_scaling()).unwrap();
        assert_eq!(rescaled.coefficients(), split::<X>().coefficients());
    }

    #[test]
    fn closure() {
        for h in [X::ratio(-3, 2), X::zero(), X::ratio(3, 2), X::one()] {
            let cs = h_family(&h);
            assert!(cs.closes(0.0));
            assert_eq!(cs.reality_residual().exact_zero, Some(true));
        }
        assert!(!h_family_flipped_sign(&X::ratio(3, 2)).closes(0.0));
        let mut bad = compact::<X>();
        bad.add_term(PSI[0], PSI[1], PSI[2], &X::one());
        assert!(!bad.closes(0.0));
    }

    #[test]
    fn lie_table_of_the_compact_model() {
        let t = LieTable::from_coframe(&compact::<X>());
        assert!(t.jacobi_check(0.0).is_ok());
        assert!(sp1_table_residuals(&t).iter().all(|(_, r)| r.exact_zero == Some(true)));
        assert_eq!(phi1_action_residual(&t).exact_zero, Some(true));
        let mut bad = compact::<X>();
        bad.add_term(PSI[0], PSI[1], PSI[2], &X::one());
        let err = LieTable::from_coframe(&bad).jacobi_check(0.0).unwrap_err();
        assert!(err.to_string().contains("Jacobi fails"));
    }

    #[test]
    fn r0_normalization() {
        assert_eq!(scalar_curvature(&r0::<X>()), X::from_i64(32));
    }

    #[test]
    fn compact_curvature() {
        let d = curvature_data(&compact::<X>(), 0.0).unwrap();
        assert_eq!(curvature_identity_residual(&d, -1).exact_zero, Some(true));
        assert_eq!(d.r_prime_quartic, s_hat::<X>().neg());
        assert_eq!(d.scal_ricci, X::from_i64(48));
        assert_eq!(d.scal_from_r0, X::from_i64(96));
        assert_eq!(d.c, X::ratio(3, 4));
        assert_eq!(d.scal_from_c, X::from_i64(32));
        assert_eq!(d.c_pattern.exact_zero, Some(true));
        assert_eq!(d.einstein.exact_zero, Some(true));
        assert_eq!(d.r_prime_ricci.exact_zero, Some(true));
    }

    #[test]
    fn split_curvature() {
        let d = curvature_data(&split::<X>(), 0.0).unwrap();
        assert_eq!(curvature_identity_residual(&d, 1).exact_zero, Some(true));
        assert_eq!(d.r_prime_quartic, s_hat::<X>());
        assert_eq!(d.scal_ricci, X::from_i64(-48));
        assert_eq!(d.c, X::ratio(-3, 4));
    }

    #[test]
    fn frames_of_the_model() {
        let t = LieTable::from_coframe(&compact::<X>());
        let (re, rj, rep) = model_frame_checks(&t, 0.0).unwrap();
        assert_eq!((re.exact_zero, rj.exact_zero), (Some(true), Some(true)));
        assert!(rep.verdict);
        assert_eq!(rep.four_form.exact_zero, Some(true));
    }

    #[test]
    fn bianchi_system() {
        let sol = bianchi_family_solve::<X>().unwrap();
        assert_eq!((sol.unknowns, sol.equations, sol.nullity), (168, 448, 1));
        for (name, r) in &sol.checks {
            assert_eq!(r.exact_zero, Some(true), "{name}");
        }
        assert_eq!(sol.table.coefficient(PHI[1], THETA[0], THETA[2]), &X::one());
    }

    #[test]
    fn json_round_trip() {
        let cs = h_family(&X::ratio(3, 2));
        let back = CoframeSystem::<X>::from_json(&cs.to_json()).unwrap();
        assert_eq!(back, cs);
        assert!(CoframeSystem::<X>::from_json(&json!({"labels": LABELS, "d": {"psi9": []}})).is_err());
    }
}
