//! sp(2) as symmetric 4×4 matrices X_{αβ} (the S²W* model), complexified.
//!
//! The endomorphism model is A = πX on W, extended to V^ℂ as diag(A, Ā) for
//! 𝔧-real X. Coordinates are taken in the basis $_{αβ} (α ≤ β), whose dual
//! under ⟨·,·⟩ is ♯^{αβ} paired with $*_{αβ} = $_{αβ} or 2$_{αβ}.

use rand::Rng;

use crate::linalg::{span_rank, Mat};
use crate::tensor_core::{complex_structures, form_of, g8, pi_matrix};
use crate::scalars::DEFAULT_FLOAT_TOL;
use crate::{Error, Residual, Result, Scalar};

/// Index pairs (α, β) with α ≤ β in basis order.
pub const PAIRS: [(usize, usize); 10] =
    [(0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)];

#[derive(Clone, Debug, PartialEq)]
pub struct Sp2Element<S> {
    x: Mat<S>,
}

impl<S: Scalar> Sp2Element<S> {
    pub fn new(x: Mat<S>) -> Result<Self> {
        if x.rows() != 4 || x.cols() != 4 {
            return Err(Error::Shape(format!("sp(2) element needs a 4×4 matrix, got {}×{}", x.rows(), x.cols())));
        }
        Ok(Sp2Element { x: symmetric_part(x, "X_{αβ} = X_{βα} fails")? })
    }

    pub fn zero() -> Self {
        Sp2Element { x: Mat::zeros(4, 4) }
    }

    pub fn matrix(&self) -> &Mat<S> {
        &self.x
    }

    /// ♯^{αβ}: ½ at (α,β) and (β,α), so 1 on the diagonal.
    pub fn sharp(a: usize, b: usize) -> Self {
        let mut x = Mat::zeros(4, 4);
        let h = S::ratio(1, 2);
        x[(a, b)] += &h;
        x[(b, a)] += &h;
        Sp2Element { x }
    }

    /// $_{αβ} = π_{ασ} π_{βτ} ♯^{στ}.
    pub fn dollar(a: usize, b: usize) -> Self {
        let pi = pi_matrix::<S>();
        let sh = Sp2Element::<S>::sharp(a, b);
        Sp2Element { x: pi.mul(&sh.x).mul(&pi.transpose()) }
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        Sp2Element { x: self.x.add(&o.x) }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Sp2Element { x: self.x.sub(&o.x) }
    }

    pub fn scale(&self, k: &S) -> Self {
        Sp2Element { x: self.x.scale(k) }
    }

    /// (𝔧X)_{αβ} = π^{σ̄}_{.α} π^{τ̄}_{.β} conj(X_{στ}).
    pub fn jmap(&self) -> Self {
        let pi = pi_matrix::<S>();
        Sp2Element { x: pi.transpose().mul(&self.x.conj()).mul(&pi) }
    }

    pub fn is_real(&self) -> bool {
        Residual::between(self.jmap().x.entries(), self.x.entries()).passes(DEFAULT_FLOAT_TOL)
    }

    /// [X, Y]_{αβ} = π^{στ}(X_{ασ}Y_{τβ} + X_{βσ}Y_{τα}).
    pub fn bracket(&self, o: &Self) -> Self {
        let p = self.x.mul(&pi_matrix()).mul(&o.x);
        Sp2Element { x: p.add(&p.transpose()) }
    }

    /// ⟨X, Y⟩ = π^{αγ} π^{βδ} X_{αβ} Y_{γδ}.
    pub fn inner(&self, o: &Self) -> S {
        let pi = pi_matrix::<S>();
        // Σ π_{αγ} X_{αβ} π_{βδ} Y_{γδ} = tr(Πᵀ X Π Yᵀ)
        pi.transpose().mul(&self.x).mul(&pi).mul(&o.x.transpose()).trace()
    }

    /// Coordinates in the $-basis.
    pub fn coords(&self) -> Vec<S> {
        PAIRS
            .iter()
            .map(|&(a, b)| {
                let c = Sp2Element::sharp(a, b).inner(self);
                if a == b { c } else { c.scale_i64(2) }
            })
            .collect()
    }

    pub fn from_coords(c: &[S]) -> Self {
        assert_eq!(c.len(), 10, "sp(2) has dimension 10");
        let mut x = Mat::zeros(4, 4);
        for (k, &(a, b)) in PAIRS.iter().enumerate() {
            if !c[k].is_zero() {
                x = x.add(&Sp2Element::dollar(a, b).x.scale(&c[k]));
            }
        }
        Sp2Element { x }
    }

    /// Endomorphism A^α_{.β} = π^{ασ} X_{σβ} of W.
    pub fn to_endo(&self) -> Mat<S> {
        pi_matrix::<S>().mul(&self.x)
    }

    /// The endomorphism diag(A, Ā) of V^ℂ; meaningful for 𝔧-real X.
    pub fn to_endo8(&self) -> Mat<S> {
        let a = self.to_endo();
        Mat::block_diag(&a, &a.conj())
    }

    /// X_{αβ} = −π_{ασ} A^σ_{.β}.
    pub fn from_endo(a: &Mat<S>) -> Result<Self> {
        if a.rows() != 4 || a.cols() != 4 {
            return Err(Error::Shape("endomorphism of W must be 4×4".into()));
        }
        let x = pi_matrix::<S>().mul(a).neg();
        Ok(Sp2Element { x: symmetric_part(x, "π A is not symmetric, so A is not in sp(2)")? })
    }

    /// Inverse of [`Sp2Element::to_endo8`], checking that A is a real,
    /// g-skew endomorphism of V commuting with J₁, J₂, J₃.
    pub fn from_endo8(a8: &Mat<S>) -> Result<Self> {
        if a8.rows() != 8 || a8.cols() != 8 {
            return Err(Error::Shape("endomorphism of V^ℂ must be 8×8".into()));
        }
        for r in 0..8 {
            for c in 0..8 {
                if (r < 4) != (c < 4) && !negligible(&a8[(r, c)]) {
                    return Err(Error::Invariant("A does not preserve W".into()));
                }
            }
        }
        let f = form_of(a8);
        if !Residual::of_zero(f.add(&f.transpose()).entries()).passes(DEFAULT_FLOAT_TOL) {
            return Err(Error::Invariant("A_{αβ̄} = −A_{β̄α} fails".into()));
        }
        for (k, j) in complex_structures::<S>().iter().enumerate() {
            if !Residual::of_zero(a8.commutator(j).entries()).passes(DEFAULT_FLOAT_TOL) {
                return Err(Error::Invariant(format!("A does not commute with J{}", k + 1)));
            }
        }
        let aw = Mat::from_fn(4, 4, |r, c| a8[(r, c)].clone());
        let ab = Mat::from_fn(4, 4, |r, c| a8[(r + 4, c + 4)].clone());
        if !Residual::between(ab.entries(), aw.conj().entries()).passes(DEFAULT_FLOAT_TOL) {
            return Err(Error::Invariant("𝔧A = A fails".into()));
        }
        Sp2Element::from_endo(&aw)
    }

    /// Random 𝔧-real element with Gaussian-integer entries in [−bound, bound] before averaging.
    pub fn random_real<R: Rng>(rng: &mut R, bound: i64) -> Self {
        let mut x = Mat::zeros(4, 4);
        for a in 0..4 {
            for b in a..4 {
                let v = S::from_i64(rng.gen_range(-bound..=bound))
                    .plus(&S::i().scale_i64(rng.gen_range(-bound..=bound)));
                x[(a, b)] = v.clone();
                x[(b, a)] = v;
            }
        }
        let e = Sp2Element { x };
        e.add(&e.jmap()).scale(&S::ratio(1, 2))
    }
}

fn negligible<S: Scalar>(x: &S) -> bool {
    if S::EXACT { x.is_zero() } else { x.magnitude() < DEFAULT_FLOAT_TOL }
}

/// Exact mode: `x` itself, which must be symmetric. Float mode: ½(x + xᵀ),
/// provided the antisymmetric part is below the default tolerance.
fn symmetric_part<S: Scalar>(x: Mat<S>, msg: &str) -> Result<Mat<S>> {
    let t = x.transpose();
    if S::EXACT {
        return if x == t { Ok(x) } else { Err(Error::Invariant(msg.into())) };
    }
    if !Residual::between(x.entries(), t.entries()).passes(DEFAULT_FLOAT_TOL) {
        return Err(Error::Invariant(msg.into()));
    }
    Ok(x.add(&t).scale(&S::ratio(1, 2)))
}

/// The $-basis of sp(2)⊗ℂ.
pub fn dollar_basis<S: Scalar>() -> Vec<Sp2Element<S>> {
    PAIRS.iter().map(|&(a, b)| Sp2Element::dollar(a, b)).collect()
}

/// The ♯-basis together with its dual $*-list: ⟨♯_s, $*_t⟩ = δ_st.
pub fn dual_basis<S: Scalar>() -> (Vec<Sp2Element<S>>, Vec<Sp2Element<S>>) {
    let sharps = PAIRS.iter().map(|&(a, b)| Sp2Element::sharp(a, b)).collect();
    let duals = PAIRS
        .iter()
        .map(|&(a, b)| {
            let d = Sp2Element::dollar(a, b);
            if a == b { d } else { d.scale(&S::from_i64(2)) }
        })
        .collect();
    (sharps, duals)
}

/// Ten 𝔧-real elements spanning the real form of sp(2).
pub fn real_basis<S: Scalar>() -> Vec<Sp2Element<S>> {
    let mut out: Vec<Sp2Element<S>> = Vec::new();
    let half = S::ratio(1, 2);
    for &(a, b) in &PAIRS {
        let s = Sp2Element::<S>::sharp(a, b);
        let j = s.jmap();
        for cand in [s.add(&j).scale(&half), s.sub(&j).scale(&S::i().times(&half))] {
            let mut trial: Vec<Vec<S>> = out.iter().map(Sp2Element::coords).collect();
            trial.push(cand.coords());
            if span_rank(&trial) > out.len() {
                out.push(cand);
            }
        }
    }
    out
}

/// Real dimension of the ℝ-span of the given elements, using real and
/// imaginary parts of their entries as coordinates.
pub fn real_span_dimension<S: Scalar>(elems: &[Sp2Element<S>]) -> usize {
    let half = S::ratio(1, 2);
    let half_i_inv = S::i().negated().times(&half);
    let rows: Vec<Vec<S>> = elems
        .iter()
        .map(|e| {
            let mut v = Vec::with_capacity(32);
            for x in e.matrix().entries() {
                v.push(x.plus(&x.conj()).times(&half));
                v.push(x.minus(&x.conj()).times(&half_i_inv));
            }
            v
        })
        .collect();
    span_rank(&rows)
}

/// A linear endomorphism of sp(2)⊗ℂ, as a 10×10 matrix in the $-basis.
#[derive(Clone, Debug, PartialEq)]
pub struct EndoOnSp2<S> {
    m: Mat<S>,
}

impl<S: Scalar> EndoOnSp2<S> {
    pub fn new(m: Mat<S>) -> Result<Self> {
        if m.rows() != 10 || m.cols() != 10 {
            return Err(Error::Shape(format!("endomorphism of sp(2) needs 10×10, got {}×{}", m.rows(), m.cols())));
        }
        Ok(EndoOnSp2 { m })
    }

    pub fn identity() -> Self {
        EndoOnSp2 { m: Mat::identity(10) }
    }

    pub fn zero() -> Self {
        EndoOnSp2 { m: Mat::zeros(10, 10) }
    }

    /// The endomorphism whose value on $_k is `f($_k)`.
    pub fn from_map(f: impl Fn(&Sp2Element<S>) -> Sp2Element<S>) -> Self {
        let cols: Vec<Vec<S>> = dollar_basis::<S>().iter().map(|b| f(b).coords()).collect();
        EndoOnSp2 { m: Mat::from_cols(&cols) }
    }

    pub fn matrix(&self) -> &Mat<S> {
        &self.m
    }

    pub fn apply(&self, x: &Sp2Element<S>) -> Sp2Element<S> {
        Sp2Element::from_coords(&self.m.mul_vec(&x.coords()))
    }

    pub fn compose(&self, o: &Self) -> Self {
        EndoOnSp2 { m: self.m.mul(&o.m) }
    }

    pub fn add(&self, o: &Self) -> Self {
        EndoOnSp2 { m: self.m.add(&o.m) }
    }

    pub fn sub(&self, o: &Self) -> Self {
        EndoOnSp2 { m: self.m.sub(&o.m) }
    }

    pub fn scale(&self, k: &S) -> Self {
        EndoOnSp2 { m: self.m.scale(k) }
    }

    pub fn trace(&self) -> S {
        self.m.trace()
    }

    /// Dimension of the λ-eigenspace.
    pub fn eigen_multiplicity(&self, lambda: &S) -> usize {
        10 - self.sub(&Self::identity().scale(lambda)).m.rank()
    }

    /// Whether 𝔧-real elements are mapped to 𝔧-real elements.
    pub fn preserves_reality(&self) -> bool {
        real_basis::<S>().iter().all(|b| self.apply(b).is_real())
    }

    /// ⟨L X, Y⟩ = ⟨X, L Y⟩ on the $-basis.
    pub fn is_symmetric(&self) -> bool {
        let basis = dollar_basis::<S>();
        let images: Vec<Sp2Element<S>> = basis.iter().map(|b| self.apply(b)).collect();
        (0..10).all(|i| (0..10).all(|j| negligible(&images[i].inner(&basis[j]).minus(&basis[i].inner(&images[j])))))
    }
}

/// ad(X) = [X, ·].
pub fn ad<S: Scalar>(x: &Sp2Element<S>) -> EndoOnSp2<S> {
    EndoOnSp2::from_map(|b| x.bracket(b))
}

/// trace(ad X ∘ ad Y).
pub fn killing<S: Scalar>(x: &Sp2Element<S>, y: &Sp2Element<S>) -> S {
    ad(x).compose(&ad(y)).trace()
}

/// (†L)X = Σ_s [E*_s, L[E_s, X]] over the ♯-basis and its duals.
pub fn dagger<S: Scalar>(l: &EndoOnSp2<S>) -> EndoOnSp2<S> {
    let (basis, duals) = dual_basis::<S>();
    dagger_pairs(l, &basis, &duals)
}

fn dagger_pairs<S: Scalar>(l: &EndoOnSp2<S>, basis: &[Sp2Element<S>], duals: &[Sp2Element<S>]) -> EndoOnSp2<S> {
    let mut acc = EndoOnSp2::zero();
    for (e, es) in basis.iter().zip(duals) {
        acc = acc.add(&ad(es).compose(l).compose(&ad(e)));
    }
    acc
}

/// † computed with an arbitrary basis; the duals come from the inverse Gram matrix.
pub fn dagger_in_basis<S: Scalar>(l: &EndoOnSp2<S>, basis: &[Sp2Element<S>]) -> Result<EndoOnSp2<S>> {
    if basis.len() != 10 {
        return Err(Error::Shape(format!("a basis of sp(2) has 10 elements, got {}", basis.len())));
    }
    let gram = Mat::from_fn(10, 10, |s, t| basis[s].inner(&basis[t]));
    let inv = gram.inverse()?;
    let duals: Vec<Sp2Element<S>> = (0..10)
        .map(|s| {
            let mut d = Sp2Element::zero();
            for (t, b) in basis.iter().enumerate() {
                if !inv[(t, s)].is_zero() {
                    d = d.add(&b.scale(&inv[(t, s)]));
                }
            }
            d
        })
        .collect();
    Ok(dagger_pairs(l, basis, &duals))
}

/// Sanity check of the endomorphism model against the J-structure of V^ℂ.
pub fn endo_is_skew<S: Scalar>(a8: &Mat<S>) -> bool {
    let f = a8.transpose().mul(&g8());
    f.add(&f.transpose()).is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Exact;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type E = Sp2Element<Exact>;

    fn q(n: i64) -> Exact {
        Exact::from_i64(n)
    }

    #[test]
    fn duals_pair_to_delta() {
        let (b, d) = dual_basis::<Exact>();
        for s in 0..10 {
            for t in 0..10 {
                assert_eq!(b[s].inner(&d[t]), if s == t { q(1) } else { q(0) });
            }
        }
    }

    #[test]
    fn coords_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = E::random_real(&mut rng, 3);
        assert_eq!(E::from_coords(&x.coords()), x);
    }

    #[test]
    fn reference_sharp_bracket() {
        // [♯^{αβ}, ♯^{γδ}] = ½(π^{αγ}♯^{βδ} + π^{βδ}♯^{αγ} + π^{αδ}♯^{βγ} + π^{βγ}♯^{αδ})
        let pi = pi_matrix::<Exact>();
        let half = Exact::ratio(1, 2);
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let lhs = E::sharp(a, b).bracket(&E::sharp(c, d));
                        let rhs = E::sharp(b, d)
                            .scale(&pi[(a, c)])
                            .add(&E::sharp(a, c).scale(&pi[(b, d)]))
                            .add(&E::sharp(b, c).scale(&pi[(a, d)]))
                            .add(&E::sharp(a, d).scale(&pi[(b, c)]))
                            .scale(&half);
                        assert_eq!(lhs, rhs, "({a}{b}),({c}{d})");
                    }
                }
            }
        }
    }

    #[test]
    fn jacobi_on_all_basis_triples() {
        let b = dollar_basis::<Exact>();
        for i in 0..10 {
            for j in i + 1..10 {
                for k in j + 1..10 {
                    let s = b[i]
                        .bracket(&b[j].bracket(&b[k]))
                        .add(&b[j].bracket(&b[k].bracket(&b[i])))
                        .add(&b[k].bracket(&b[i].bracket(&b[j])));
                    assert!(s.is_zero());
                }
            }
        }
    }

    #[test]
    fn bracket_matches_commutator_of_endomorphisms() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let x = E::random_real(&mut rng, 3);
            let y = E::random_real(&mut rng, 3);
            assert_eq!(x.bracket(&y).to_endo8(), x.to_endo8().commutator(&y.to_endo8()));
            assert!(endo_is_skew(&x.to_endo8()));
        }
    }

    #[test]
    fn killing_is_minus_six_times_inner() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x = E::random_real(&mut rng, 3);
            let y = E::random_real(&mut rng, 3);
            assert_eq!(killing(&x, &y), x.inner(&y).scale_i64(-6));
        }
    }

    #[test]
    fn dagger_of_identity() {
        let id = EndoOnSp2::<Exact>::identity();
        assert_eq!(dagger(&id), id.scale(&q(-6)));
        assert_eq!(dagger(&EndoOnSp2::<Exact>::zero()), EndoOnSp2::zero());
    }

    #[test]
    fn dagger_is_basis_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let l = EndoOnSp2::new(Mat::from_fn(10, 10, |_, _| q(rng.gen_range(-2..=2)))).unwrap();
        let basis: Vec<E> = (0..10).map(|_| E::random_real(&mut rng, 3)).collect();
        assert_eq!(dagger_in_basis(&l, &basis).unwrap(), dagger(&l));
    }

    #[test]
    fn real_form_has_dimension_ten() {
        let rb = real_basis::<Exact>();
        assert_eq!(rb.len(), 10);
        assert!(rb.iter().all(E::is_real));
        assert_eq!(real_span_dimension(&rb), 10);
    }

    #[test]
    fn model_conversion_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = E::random_real(&mut rng, 3);
        assert_eq!(E::from_endo8(&x.to_endo8()).unwrap(), x);
        assert_eq!(E::from_endo(&x.to_endo()).unwrap(), x);
        assert!(E::from_endo8(&Mat::identity(8)).is_err());
        assert_eq!(E::from_endo(&Mat::zeros(4, 4)).unwrap(), E::zero());
    }

    #[test]
    fn dollar_11_endomorphism() {
        // A = π^{1σ}($_{11})_{σβ}: $_{11} has a single 1 at (3,3).
        let a = E::dollar(0, 0).to_endo();
        let mut expected = Mat::zeros(4, 4);
        expected[(0, 2)] = q(1);
        assert_eq!(a, expected);
    }
}
