//! Totally symmetric 𝔧-real quartics, hyper-Kähler curvature-type tensors,
//! the isomorphism 𝒦 between them, the operator T_K on sp(2), and the
//! tangent-space operator H at a point of the orbit.
//!
//! Sums over a g-orthonormal basis of V are implemented as contractions with
//! the inverse Gram matrix, never as loops over a chosen real basis.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde_json::{Map, Value};

use crate::linalg::Mat;
use crate::scalars::DEFAULT_FLOAT_TOL;
use crate::sp2_lie::{dagger, dollar_basis, real_basis, EndoOnSp2, Sp2Element, PAIRS};
use crate::tensor_core::{complex_structures, einsum, endo_of_form, form_of, g8, jmap_array, permutations, pi_matrix, Array};
use crate::{Error, Residual, Result, Scalar};

fn arr<S: Scalar>(m: &Mat<S>) -> Array<S> {
    Array::from_mat(m)
}

fn ein<S: Scalar>(spec: &str, ops: &[&Array<S>]) -> Array<S> {
    einsum(spec, ops).expect("well-formed contraction")
}

// ---------------------------------------------------------------------------
// Quartics
// ---------------------------------------------------------------------------

/// A totally symmetric, 𝔧-real 4-tensor S_{αβγδ} on W.
#[derive(Clone, Debug, PartialEq)]
pub struct SymQuartic<S> {
    s: Array<S>,
}

/// The 35 sorted multi-indices α ≤ β ≤ γ ≤ δ.
pub fn sorted_multi_indices() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(35);
    for a in 0..4 {
        for b in a..4 {
            for c in b..4 {
                for d in c..4 {
                    out.push([a, b, c, d]);
                }
            }
        }
    }
    out
}

fn key_of(idx: &[usize; 4]) -> String {
    idx.iter().map(|i| char::from(b'1' + *i as u8)).collect()
}

/// Total symmetrization of a rank-4 array.
pub fn symmetrize4<S: Scalar>(a: &Array<S>) -> Array<S> {
    let dims = a.dims().to_vec();
    let perms: Vec<[usize; 4]> = permutations(4).into_iter().map(|(p, _)| [p[0], p[1], p[2], p[3]]).collect();
    let inv24 = S::ratio(1, 24);
    let mut cache: HashMap<Vec<usize>, S> = HashMap::new();
    let mut src = vec![0; dims.len()];
    Array::from_fn(&dims, |idx| {
        let mut key = idx.to_vec();
        key[..4].sort_unstable();
        if let Some(v) = cache.get(&key) {
            return v.clone();
        }
        let mut total = S::zero();
        src[4..].copy_from_slice(&idx[4..]);
        for p in &perms {
            for k in 0..4 {
                src[k] = key[p[k]];
            }
            let v = a.get(&src);
            if !v.is_zero() {
                total = total.plus(v);
            }
        }
        let v = total.times(&inv24);
        cache.insert(key, v.clone());
        v
    })
}

impl<S: Scalar> SymQuartic<S> {
    /// Checks total symmetry and 𝔧-reality.
    pub fn new(s: Array<S>) -> Result<Self> {
        if s.dims() != [4, 4, 4, 4] {
            return Err(Error::Shape(format!("quartic needs shape [4,4,4,4], got {:?}", s.dims())));
        }
        let q = SymQuartic { s };
        if !q.is_symmetric() {
            return Err(Error::Invariant("S is not totally symmetric".into()));
        }
        if !q.is_j_real() {
            return Err(Error::Invariant("S ≠ 𝔧S".into()));
        }
        Ok(q)
    }

    /// Wraps an array without checks; used where symmetry is known by construction.
    pub(crate) fn unchecked(s: Array<S>) -> Self {
        SymQuartic { s }
    }

    pub fn zero() -> Self {
        SymQuartic { s: Array::zeros(&[4, 4, 4, 4]) }
    }

    pub fn array(&self) -> &Array<S> {
        &self.s
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> &S {
        self.s.get(&[a, b, c, d])
    }

    pub fn is_symmetric(&self) -> bool {
        [[1, 0, 2, 3], [0, 2, 1, 3], [0, 1, 3, 2]]
            .iter()
            .all(|p| self.s.permute(p).expect("permutation").residual_to(&self.s).passes(DEFAULT_FLOAT_TOL))
    }

    pub fn is_j_real(&self) -> bool {
        jmap_array(&self.s).residual_to(&self.s).passes(DEFAULT_FLOAT_TOL)
    }

    pub fn add(&self, o: &Self) -> Self {
        SymQuartic { s: self.s.add(&o.s) }
    }

    pub fn sub(&self, o: &Self) -> Self {
        SymQuartic { s: self.s.sub(&o.s) }
    }

    /// Scaling by a real number keeps 𝔧-reality.
    pub fn scale_real(&self, k: &S) -> Self {
        SymQuartic { s: self.s.scale(k) }
    }

    pub fn neg(&self) -> Self {
        SymQuartic { s: self.s.neg() }
    }

    /// S(x, x, x, x).
    pub fn form(&self, x: &[S; 4]) -> S {
        let mut acc = S::zero();
        for (idx, v) in self.s.nonzeros() {
            let mut t = v.clone();
            for &i in &idx {
                t = t.times(&x[i]);
            }
            acc += &t;
        }
        acc
    }

    /// The 35 independent components keyed by 1-based sorted multi-index ("1134").
    pub fn components(&self) -> BTreeMap<String, S> {
        sorted_multi_indices().iter().map(|k| (key_of(k), self.s.get(k).clone())).collect()
    }

    pub fn from_components(map: &BTreeMap<String, S>) -> Result<Self> {
        let mut s = Array::zeros(&[4, 4, 4, 4]);
        let mut seen = 0;
        for idx in sorted_multi_indices() {
            let key = key_of(&idx);
            let v = map.get(&key).cloned().unwrap_or_else(S::zero);
            if map.contains_key(&key) {
                seen += 1;
            }
            for (p, _) in permutations(4) {
                s.set(&[idx[p[0]], idx[p[1]], idx[p[2]], idx[p[3]]], v.clone());
            }
        }
        if seen != map.len() {
            let bad: Vec<&String> = map.keys().filter(|k| !is_sorted_key(k)).collect();
            return Err(Error::Parse(format!("keys are not sorted multi-indices over 1..4: {bad:?}")));
        }
        SymQuartic::new(s)
    }

    /// Random element: Gaussian-integer components in [−bound, bound], averaged with their 𝔧-image.
    pub fn random<R: Rng>(rng: &mut R, bound: i64) -> Self {
        let mut s = Array::zeros(&[4, 4, 4, 4]);
        for idx in sorted_multi_indices() {
            let v = S::from_i64(rng.gen_range(-bound..=bound)).plus(&S::i().scale_i64(rng.gen_range(-bound..=bound)));
            for (p, _) in permutations(4) {
                s.set(&[idx[p[0]], idx[p[1]], idx[p[2]], idx[p[3]]], v.clone());
            }
        }
        let j = jmap_array(&s);
        SymQuartic { s: s.add(&j).scale(&S::ratio(1, 2)) }
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        for (k, v) in self.components() {
            m.insert(k, v.to_json());
        }
        Value::Object(m)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| Error::Parse("quartic must be a JSON object".into()))?;
        let mut map = BTreeMap::new();
        for (k, x) in obj {
            if !is_sorted_key(k) {
                return Err(Error::Parse(format!("bad quartic key {k:?}")));
            }
            map.insert(k.clone(), S::from_json(x)?);
        }
        SymQuartic::from_components(&map)
    }
}

fn is_sorted_key(k: &str) -> bool {
    let b = k.as_bytes();
    b.len() == 4 && b.iter().all(|c| (b'1'..=b'4').contains(c)) && b.windows(2).all(|w| w[0] <= w[1])
}

// ---------------------------------------------------------------------------
// Curvature-type tensors
// ---------------------------------------------------------------------------

/// A hyper-Kähler curvature-type tensor, stored by its mixed block K_{αβ̄γδ̄}.
#[derive(Clone, Debug, PartialEq)]
pub struct HKTensor<S> {
    mixed: Array<S>,
}

impl<S: Scalar> HKTensor<S> {
    /// Wraps a mixed block without checks.
    pub fn from_mixed(mixed: Array<S>) -> Result<Self> {
        if mixed.dims() != [4, 4, 4, 4] {
            return Err(Error::Shape(format!("mixed block needs shape [4,4,4,4], got {:?}", mixed.dims())));
        }
        Ok(HKTensor { mixed })
    }

    pub fn zero() -> Self {
        HKTensor { mixed: Array::zeros(&[4, 4, 4, 4]) }
    }

    pub fn mixed(&self) -> &Array<S> {
        &self.mixed
    }

    pub fn add(&self, o: &Self) -> Self {
        HKTensor { mixed: self.mixed.add(&o.mixed) }
    }

    pub fn sub(&self, o: &Self) -> Self {
        HKTensor { mixed: self.mixed.sub(&o.mixed) }
    }

    pub fn scale(&self, k: &S) -> Self {
        HKTensor { mixed: self.mixed.scale(k) }
    }

    pub fn neg(&self) -> Self {
        HKTensor { mixed: self.mixed.neg() }
    }

    /// The full 4-tensor on V^ℂ (8⁴ components).
    pub fn full(&self) -> Array<S> {
        let mut k = Array::zeros(&[8, 8, 8, 8]);
        for (idx, v) in self.mixed.nonzeros() {
            let [a, b, c, d] = [idx[0], idx[1], idx[2], idx[3]];
            let n = v.negated();
            k.set(&[a, 4 + b, c, 4 + d], v.clone());
            k.set(&[4 + b, a, c, 4 + d], n.clone());
            k.set(&[a, 4 + b, 4 + d, c], n);
            k.set(&[4 + b, a, 4 + d, c], v.clone());
        }
        k
    }

    /// Reads the mixed block of a full tensor, checking that the tensor is
    /// determined by it.
    pub fn from_full(k: &Array<S>) -> Result<Self> {
        let h = Self::from_full_unchecked(k)?;
        if !h.full().residual_to(k).passes(DEFAULT_FLOAT_TOL) {
            return Err(Error::Invariant("tensor is not determined by its mixed block".into()));
        }
        Ok(h)
    }

    pub(crate) fn from_full_unchecked(k: &Array<S>) -> Result<Self> {
        if k.dims() != [8, 8, 8, 8] {
            return Err(Error::Shape(format!("full tensor needs shape [8,8,8,8], got {:?}", k.dims())));
        }
        Ok(HKTensor { mixed: Array::from_fn(&[4, 4, 4, 4], |i| k.get(&[i[0], 4 + i[1], i[2], 4 + i[3]]).clone()) })
    }

    /// {"mixed": [256 scalars]}: the block K_{αβ̄γδ̄} in row-major order.
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("mixed".into(), Value::Array(self.mixed.data().iter().map(S::to_json).collect()));
        Value::Object(m)
    }

    /// Parses [`HKTensor::to_json`] output and checks the curvature-type identities.
    pub fn from_json(v: &Value) -> Result<Self> {
        let comps = v
            .get("mixed")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("curvature tensor needs a \"mixed\" list".into()))?;
        if comps.len() != 256 {
            return Err(Error::Parse(format!("\"mixed\" needs 256 entries, got {}", comps.len())));
        }
        let data = comps.iter().map(S::from_json).collect::<Result<Vec<_>>>()?;
        let k = HKTensor::from_mixed(Array::from_vec(&[4, 4, 4, 4], data)?)?;
        if let Some((name, _)) = k.invariant_residuals().into_iter().find(|(_, r)| !r.passes(DEFAULT_FLOAT_TOL)) {
            return Err(Error::Invariant(format!("K fails {name}")));
        }
        Ok(k)
    }

    /// Residuals of the defining and derived identities on the full tensor.
    pub fn invariant_residuals(&self) -> Vec<(&'static str, Residual)> {
        full_invariant_residuals(&self.full())
    }

    pub fn satisfies_invariants(&self, tol: f64) -> bool {
        self.invariant_residuals().iter().all(|(_, r)| r.passes(tol))
    }

    /// Ricci-type contraction Σ_a K(h_a, y, z, h_a).
    pub fn ricci(&self) -> Array<S> {
        ricci_of(&self.full())
    }
}

/// Residuals of: antisymmetry in each pair, first Bianchi, J_s-invariance in
/// the last pair, pair symmetry, and reality.
pub fn full_invariant_residuals<S: Scalar>(k: &Array<S>) -> Vec<(&'static str, Residual)> {
    let p = |perm: &[usize]| k.permute(perm).expect("permutation");
    let mut out = vec![
        ("antisymmetric_first_pair", k.add(&p(&[1, 0, 2, 3])).residual()),
        ("antisymmetric_last_pair", k.add(&p(&[0, 1, 3, 2])).residual()),
        ("first_bianchi", k.add(&p(&[1, 2, 0, 3])).add(&p(&[2, 0, 1, 3])).residual()),
        ("pair_symmetry", k.sub(&p(&[2, 3, 0, 1])).residual()),
    ];
    let names = ["j1_invariant", "j2_invariant", "j3_invariant"];
    for (name, j) in names.iter().zip(complex_structures::<S>()) {
        let jj = arr(&j);
        let moved = ein("xyzw,zc,wd->xycd", &[k, &jj, &jj]);
        out.push((*name, moved.residual_to(k)));
    }
    let swap = arr(&g8::<S>());
    let conj = ein("abcd,ai,bj,ck,dl->ijkl", &[&k.conj(), &swap, &swap, &swap, &swap]);
    out.push(("real", conj.residual_to(k)));
    out
}

/// Σ_a K(h_a, y, z, h_a) over a g-orthonormal basis.
pub fn ricci_of<S: Scalar>(k: &Array<S>) -> Array<S> {
    ein("ayzb,ab->yz", &[k, &arr(&g8::<S>())])
}

/// 𝒦: K_{αβ̄γδ̄} = S_{ασγτ} π^σ_{.β̄} π^τ_{.δ̄}.
pub fn kappa<S: Scalar>(s: &SymQuartic<S>) -> HKTensor<S> {
    let pi = arr(&pi_matrix::<S>());
    HKTensor { mixed: ein("asgt,sb,td->abgd", &[&s.s, &pi, &pi]) }
}

/// 𝒦⁻¹: S(x,y,z,w) = ½(K(x,J₂y,z,J₂w) − K(x,J₃y,z,J₃w)) on W.
pub fn kappa_inv<S: Scalar>(k: &HKTensor<S>) -> Result<SymQuartic<S>> {
    if let Some((name, _)) = k.invariant_residuals().into_iter().find(|(_, r)| !r.passes(DEFAULT_FLOAT_TOL)) {
        return Err(Error::Invariant(format!("K fails {name}")));
    }
    let full = k.full();
    let [_, j2, j3] = complex_structures::<S>();
    let a = ein("xbzd,by,dw->xyzw", &[&full, &arr(&j2), &arr(&j2)]);
    let b = ein("xbzd,by,dw->xyzw", &[&full, &arr(&j3), &arr(&j3)]);
    let both = a.sub(&b).scale(&S::ratio(1, 2));
    let s = Array::from_fn(&[4, 4, 4, 4], |i| both.get(i).clone());
    let q = SymQuartic { s };
    if !q.is_symmetric() || !q.is_j_real() {
        return Err(Error::Invariant("𝒦⁻¹(K) is not a symmetric 𝔧-real quartic".into()));
    }
    Ok(q)
}

// ---------------------------------------------------------------------------
// T_K
// ---------------------------------------------------------------------------

/// T_K in coordinates: X_{αβ} = K_{ασ̄βτ̄} Y^{σ̄τ̄}.
pub fn t_k<S: Scalar>(k: &HKTensor<S>) -> EndoOnSp2<S> {
    EndoOnSp2::from_map(|y| {
        let x = ein("asbt,st->ab", &[&k.mixed, &arr(y.matrix())]);
        Sp2Element::new(x.to_mat()).expect("T_K(Y) is symmetric for curvature-type K")
    })
}

/// T_K from the orthonormal-frame formula g(T_K(A)x, y) = ½ Σ_a K(x, y, h_a, A h_a).
pub fn t_k_frame<S: Scalar>(k: &HKTensor<S>) -> Result<EndoOnSp2<S>> {
    let full = k.full();
    let gi = arr(&g8::<S>());
    let half = S::ratio(1, 2);
    let mut cols = Vec::with_capacity(10);
    for b in dollar_basis::<S>() {
        // The frame formula is ℂ-linear in A, so use the ℂ-linear extension of X ↦ A on V^ℂ.
        let a8 = complex_linear_endo8(&b);
        let f = ein("xyac,cb,ab->xy", &[&full, &arr(&a8), &gi]).scale(&half);
        let a = endo_of_form(&f.to_mat());
        cols.push(endo8_to_sp2(&a)?.coords());
    }
    EndoOnSp2::new(Mat::from_cols(&cols))
}

/// T_K from the mixed-index form A_{αβ̄} = K_{αβ̄γδ̄} B^{γδ̄}.
pub fn t_k_mixed<S: Scalar>(k: &HKTensor<S>) -> Result<EndoOnSp2<S>> {
    let mut cols = Vec::with_capacity(10);
    for b in dollar_basis::<S>() {
        let fb = form_of(&complex_linear_endo8(&b));
        // B^{γδ̄} = B_{γ̄δ} after raising both slots with g.
        let braised = Array::from_fn(&[4, 4], |i| fb[(4 + i[0], i[1])].clone());
        let amixed = ein("abgd,gd->ab", &[&k.mixed, &braised]);
        // A_{αβ̄} = g(A e_α, e_β̄) = A^β_{.α}.
        let aw = amixed.to_mat().transpose();
        cols.push(Sp2Element::from_endo(&aw)?.coords());
    }
    EndoOnSp2::new(Mat::from_cols(&cols))
}

/// ℂ-linear extension to V^ℂ of the W-endomorphism πX: πX on W and
/// the same operator transported to W̄ by 𝔧 (which is ℂ-linear in X).
fn complex_linear_endo8<S: Scalar>(x: &Sp2Element<S>) -> Mat<S> {
    let a = x.to_endo();
    let ab = x.jmap().to_endo().conj();
    Mat::block_diag(&a, &ab)
}

fn endo8_to_sp2<S: Scalar>(a8: &Mat<S>) -> Result<Sp2Element<S>> {
    let aw = Mat::from_fn(4, 4, |r, c| a8[(r, c)].clone());
    Sp2Element::from_endo(&aw)
}

/// Reconstructs K with T_K = L from an endomorphism satisfying †L = 2L.
pub fn hk_from_endo<S: Scalar>(l: &EndoOnSp2<S>, tol: f64) -> Result<HKTensor<S>> {
    let diff = dagger(l).sub(&l.scale(&S::from_i64(2)));
    let r = Residual::of_zero(diff.matrix().entries());
    if !r.passes(tol) {
        return Err(Error::Precondition(format!("†L ≠ 2L (residual norm {:.3e})", r.relative)));
    }
    // S_{μναβ} = (L($_{αβ}))_{μν}, extended from α ≤ β by symmetry of $.
    let images: Vec<Sp2Element<S>> = dollar_basis::<S>().iter().map(|b| l.apply(b)).collect();
    let mut pos = [[0usize; 4]; 4];
    for (k, &(a, b)) in PAIRS.iter().enumerate() {
        pos[a][b] = k;
        pos[b][a] = k;
    }
    let s = Array::from_fn(&[4, 4, 4, 4], |i| images[pos[i[2]][i[3]]].matrix()[(i[0], i[1])].clone());
    let q = SymQuartic { s };
    if !q.is_symmetric() {
        return Err(Error::Invariant("the quartic read off from L is not totally symmetric".into()));
    }
    Ok(kappa(&q))
}

// ---------------------------------------------------------------------------
// Lie derivatives, contractions and the tangent operator
// ---------------------------------------------------------------------------

/// (D_U K)(x,y,z,w) = K(Ux,y,z,w) + K(x,Uy,z,w) + K(x,y,Uz,w) + K(x,y,z,Uw).
pub fn lie_derivative<S: Scalar>(u: &Mat<S>, k: &Array<S>) -> Array<S> {
    let u = arr(u);
    ein("ax,ayzw->xyzw", &[&u, k])
        .add(&ein("ay,xazw->xyzw", &[&u, k]))
        .add(&ein("az,xyaw->xyzw", &[&u, k]))
        .add(&ein("aw,xyza->xyzw", &[&u, k]))
}

/// Infinitesimal action of X ∈ sp(2) on a covariant 4-tensor on W:
/// Σ over slots of π^{στ} X_{ασ} S_{τβγδ}.
pub fn quartic_lie_derivative<S: Scalar>(x: &Sp2Element<S>, s: &Array<S>) -> Array<S> {
    let xp = arr(&x.matrix().mul(&pi_matrix()));
    ein("at,tbcd->abcd", &[&xp, s])
        .add(&ein("bt,atcd->abcd", &[&xp, s]))
        .add(&ein("ct,abtd->abcd", &[&xp, s]))
        .add(&ein("dt,abct->abcd", &[&xp, s]))
}

fn gg<S: Scalar>(f: &Mat<S>, h: &Mat<S>, spec: &str) -> Array<S> {
    ein(spec, &[&arr(f), &arr(h)])
}

/// Σ_{a,b} K(x,y,h_a,h_b) K(z,w,h_a,h_b) against 4K + 21/8(gg − gg) + 21/8 Σ(ωω − ωω).
pub fn contraction_identity_1<S: Scalar>(k: &HKTensor<S>) -> Residual {
    let full = k.full();
    let gi = arr(&g8::<S>());
    let lhs = ein("xyab,zwcd,ac,bd->xyzw", &[&full, &full, &gi, &gi]);
    let g = g8::<S>();
    let c = S::ratio(21, 8);
    let mut rhs = full.scale(&S::from_i64(4));
    rhs = rhs.add(&gg(&g, &g, "xz,yw->xyzw").sub(&gg(&g, &g, "xw,yz->xyzw")).scale(&c));
    for j in complex_structures::<S>() {
        let w = form_of(&j);
        rhs = rhs.add(&gg(&w, &w, "xz,yw->xyzw").sub(&gg(&w, &w, "xw,yz->xyzw")).scale(&c));
    }
    lhs.residual_to(&rhs)
}

/// Σ_{a,b} K(x,h_a,h_b,y) K(z,h_a,h_b,w) against
/// 2K(x,z,y,w) + 21/8 g(x,z)g(y,w) + 21/16 g(x,w)g(y,z) − 21/16 Σ ω(x,w)ω(y,z).
pub fn contraction_identity_2<S: Scalar>(k: &HKTensor<S>) -> Residual {
    let full = k.full();
    let gi = arr(&g8::<S>());
    let lhs = ein("xaby,zcdw,ac,bd->xyzw", &[&full, &full, &gi, &gi]);
    let g = g8::<S>();
    let mut rhs = full.permute(&[0, 2, 1, 3]).expect("permutation").scale(&S::from_i64(2));
    rhs = rhs.add(&gg(&g, &g, "xz,yw->xyzw").scale(&S::ratio(21, 8)));
    rhs = rhs.add(&gg(&g, &g, "xw,yz->xyzw").scale(&S::ratio(21, 16)));
    for j in complex_structures::<S>() {
        let w = form_of(&j);
        rhs = rhs.sub(&gg(&w, &w, "xw,yz->xyzw").scale(&S::ratio(21, 16)));
    }
    lhs.residual_to(&rhs)
}

/// Output of [`tangent_h`].
#[derive(Clone, Debug)]
pub struct TangentH<S> {
    /// H in the symmetric model.
    pub h: Sp2Element<S>,
    /// H as an endomorphism of V^ℂ.
    pub h8: Mat<S>,
    /// The generator U (supplied or solved for).
    pub u: Sp2Element<S>,
    /// (ii) T_K(H) = −(3/2)H.
    pub eigen_residual: Residual,
    /// (iii) D_H K = L.
    pub lie_residual: Residual,
    /// H = (1/5)((7/2)U − T_K U).
    pub formula_residual: Residual,
}

/// The tangent operator g(Hx, y) = (1/120) Σ (L(x,h_a,h_b,h_c)K(y,h_a,h_b,h_c) − (x↔y)).
///
/// `K` must lie in the orbit; `L` must be D_U K for some real U ∈ sp(2).
/// When `u` is `None` the 10-dimensional system D_U K = L is solved exactly.
pub fn tangent_h<S: Scalar>(k: &HKTensor<S>, l: &Array<S>, u: Option<&Sp2Element<S>>, tol: f64) -> Result<TangentH<S>> {
    let member = crate::orbit::is_cd_theorem(k, tol);
    if !member.verdict {
        return Err(Error::Precondition("K is not in the cubic-discriminant orbit".into()));
    }
    let full = k.full();
    let u = match u {
        Some(u) => {
            if !u.is_real() {
                return Err(Error::Precondition("U must be 𝔧-real".into()));
            }
            let r = lie_derivative(&u.to_endo8(), &full).residual_to(l);
            if !r.passes(tol) {
                return Err(Error::Precondition(format!("L ≠ D_U K for the supplied U ({r})")));
            }
            u.clone()
        }
        None => solve_generator(&full, l)?,
    };
    let gi = arr(&g8::<S>());
    let t = ein("xabc,ydef,ad,be,cf->xy", &[l, &full, &gi, &gi, &gi]);
    let hf = t.sub(&t.permute(&[1, 0]).expect("transpose")).scale(&S::ratio(1, 120));
    let h8 = endo_of_form(&hf.to_mat());
    let h = Sp2Element::from_endo8(&h8)?;
    let tk = t_k(k);
    let eigen_residual = Residual::between(tk.apply(&h).matrix().entries(), h.scale(&S::ratio(-3, 2)).matrix().entries());
    let lie_residual = lie_derivative(&h8, &full).residual_to(l);
    let predicted = u.scale(&S::ratio(7, 2)).sub(&tk.apply(&u)).scale(&S::ratio(1, 5));
    let formula_residual = Residual::between(h.matrix().entries(), predicted.matrix().entries());
    Ok(TangentH { h, h8, u, eigen_residual, lie_residual, formula_residual })
}

/// Particular real solution U of D_U K = L (free variables set to zero).
fn solve_generator<S: Scalar>(full: &Array<S>, l: &Array<S>) -> Result<Sp2Element<S>> {
    let basis = real_basis::<S>();
    let cols: Vec<Vec<S>> = basis.iter().map(|b| lie_derivative(&b.to_endo8(), full).into_data()).collect();
    let m = Mat::from_cols(&cols);
    let c = m.solve(l.data()).map_err(|_| Error::Precondition("L is not tangent to the orbit at K".into()))?;
    // The columns are real tensors, so the real parts of the coefficients also solve the system.
    let half = S::ratio(1, 2);
    let mut u = Sp2Element::zero();
    for (ck, b) in c.iter().zip(&basis) {
        let re = ck.plus(&ck.conj()).times(&half);
        if !re.is_zero() {
            u = u.add(&b.scale(&re));
        }
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Exact;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kappa_round_trip_on_random_quartics() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let s = SymQuartic::<Exact>::random(&mut rng, 3);
            assert!(s.is_symmetric() && s.is_j_real());
            let k = kappa(&s);
            for (name, r) in k.invariant_residuals() {
                assert_eq!(r.exact_zero, Some(true), "{name}");
            }
            assert_eq!(kappa_inv(&k).unwrap(), s);
        }
        assert_eq!(kappa(&SymQuartic::<Exact>::zero()), HKTensor::zero());
    }

    #[test]
    fn three_forms_of_t_k_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..3 {
            let k = kappa(&SymQuartic::<Exact>::random(&mut rng, 3));
            let t = t_k(&k);
            assert_eq!(t_k_frame(&k).unwrap(), t);
            assert_eq!(t_k_mixed(&k).unwrap(), t);
            assert!(t.trace().is_zero());
            assert!(t.is_symmetric());
        }
    }

    #[test]
    fn t_k_lies_in_the_two_eigenspace_of_dagger() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..3 {
            let k = kappa(&SymQuartic::<Exact>::random(&mut rng, 3));
            let l = t_k(&k);
            assert_eq!(dagger(&l), l.scale(&Exact::from_i64(2)));
            assert_eq!(hk_from_endo(&l, 0.0).unwrap(), k);
        }
    }

    #[test]
    fn identity_is_rejected_by_hk_from_endo() {
        let err = hk_from_endo(&EndoOnSp2::<Exact>::identity(), 0.0).unwrap_err();
        assert!(err.to_string().contains("†L ≠ 2L"));
    }

    #[test]
    fn quartic_json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = SymQuartic::<Exact>::random(&mut rng, 2);
        assert_eq!(SymQuartic::from_json(&s.to_json()).unwrap(), s);
        assert_eq!(s.components().len(), 35);
        assert!(SymQuartic::<Exact>::from_json(&serde_json::json!({"2111": {"a": "1"}})).is_err());
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let mut a = Array::<Exact>::zeros(&[4, 4, 4, 4]);
        a.set(&[0, 1, 2, 3], Exact::from_i64(1));
        assert!(SymQuartic::new(a).is_err());
    }
}
