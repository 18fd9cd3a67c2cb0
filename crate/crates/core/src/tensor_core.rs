//! Index tensors on V^ℂ = W ⊕ W̄ with dim W = 4.
//!
//! Two layers live here. [`Array`] is an untyped dense array with a sparse-aware
//! [`einsum`]; every contraction in the crate eventually goes through it.
//! [`IndexedTensor`] adds a signature of [`IndexSlot`]s over W-indices 1..4,
//! with bar-ness carried in the slot rather than in the index value, and
//! refuses contractions that pair the wrong slot kinds.
//!
//! The adapted basis has e₃ = j(e₁), e₄ = j(e₂), so
//! π = e¹∧e³ + e²∧e⁴ and g_{αβ̄} = δ. Upper-index π is obtained by raising
//! both slots with g and is therefore numerically equal to π_{αβ}.
//! On the 8-dimensional side the basis is (e₁..e₄, e_{1̄}..e_{4̄}).

use std::collections::HashMap;
use std::fmt;

use serde_json::{json, Value};

use crate::linalg::Mat;
use crate::{Error, Residual, Result, Scalar};

// ---------------------------------------------------------------------------
// Untyped arrays and einsum
// ---------------------------------------------------------------------------

/// Dense row-major array of arbitrary shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Array<S> {
    dims: Vec<usize>,
    data: Vec<S>,
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

fn unflatten(mut flat: usize, dims: &[usize], out: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        out[k] = flat % dims[k];
        flat /= dims[k];
    }
}

impl<S: Scalar> Array<S> {
    pub fn zeros(dims: &[usize]) -> Self {
        Array { dims: dims.to_vec(), data: vec![S::zero(); dims.iter().product()] }
    }

    pub fn scalar(x: S) -> Self {
        Array { dims: vec![], data: vec![x] }
    }

    pub fn from_vec(dims: &[usize], data: Vec<S>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if data.len() != n {
            return Err(Error::Shape(format!(
                "{} components supplied for shape {:?} ({} expected)",
                data.len(),
                dims,
                n
            )));
        }
        Ok(Array { dims: dims.to_vec(), data })
    }

    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> S) -> Self {
        let n: usize = dims.iter().product();
        let mut idx = vec![0; dims.len()];
        let data = (0..n)
            .map(|flat| {
                unflatten(flat, dims, &mut idx);
                f(&idx)
            })
            .collect();
        Array { dims: dims.to_vec(), data }
    }

    pub fn from_mat(m: &Mat<S>) -> Self {
        Array { dims: vec![m.rows(), m.cols()], data: m.entries().to_vec() }
    }

    pub fn to_mat(&self) -> Mat<S> {
        assert_eq!(self.rank(), 2, "to_mat needs a rank-2 array");
        Mat::from_fn(self.dims[0], self.dims[1], |r, c| self.data[r * self.dims[1] + c].clone())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn into_data(self) -> Vec<S> {
        self.data
    }

    fn flat(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        idx.iter().zip(&self.dims).fold(0, |acc, (&i, &d)| {
            debug_assert!(i < d);
            acc * d + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> &S {
        &self.data[self.flat(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: S) {
        let f = self.flat(idx);
        self.data[f] = v;
    }

    pub fn add_at(&mut self, idx: &[usize], v: &S) {
        let f = self.flat(idx);
        self.data[f] += v;
    }

    /// Nonzero entries with their multi-indices.
    pub fn nonzeros(&self) -> Vec<(Vec<usize>, &S)> {
        let mut out = Vec::new();
        for (flat, x) in self.data.iter().enumerate() {
            if !x.is_zero() {
                let mut idx = vec![0; self.dims.len()];
                unflatten(flat, &self.dims, &mut idx);
                out.push((idx, x));
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(&S) -> S) -> Self {
        Array { dims: self.dims.clone(), data: self.data.iter().map(f).collect() }
    }

    fn zip(&self, o: &Array<S>, f: impl Fn(&S, &S) -> S) -> Self {
        assert_eq!(self.dims, o.dims, "shape mismatch");
        Array { dims: self.dims.clone(), data: self.data.iter().zip(&o.data).map(|(a, b)| f(a, b)).collect() }
    }

    pub fn add(&self, o: &Array<S>) -> Self {
        self.zip(o, S::plus)
    }

    pub fn sub(&self, o: &Array<S>) -> Self {
        self.zip(o, S::minus)
    }

    pub fn scale(&self, k: &S) -> Self {
        self.map(|x| x.times(k))
    }

    pub fn neg(&self) -> Self {
        self.map(S::negated)
    }

    pub fn conj(&self) -> Self {
        self.map(S::conj)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(S::is_zero)
    }

    /// Axis permutation: output axis k is input axis `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let r = self.rank();
        let mut seen = vec![false; r];
        if perm.len() != r || perm.iter().any(|&p| p >= r || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::Index(format!("{perm:?} is not a permutation of {r} axes")));
        }
        let dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let mut src = vec![0; r];
        Ok(Array::from_fn(&dims, |idx| {
            for (k, &p) in perm.iter().enumerate() {
                src[p] = idx[k];
            }
            self.get(&src).clone()
        }))
    }

    pub fn residual_to(&self, o: &Array<S>) -> Residual {
        assert_eq!(self.dims, o.dims, "shape mismatch");
        Residual::between(&self.data, &o.data)
    }

    pub fn residual(&self) -> Residual {
        Residual::of_zero(&self.data)
    }
}

/// Parses `"ab,bc->ac"` into operand label lists and the output labels.
fn parse_spec(spec: &str, n_ops: usize) -> Result<(Vec<Vec<char>>, Vec<char>)> {
    let (lhs, rhs) = spec
        .split_once("->")
        .ok_or_else(|| Error::Index(format!("einsum spec {spec:?} lacks '->'")))?;
    let ins: Vec<Vec<char>> = lhs.split(',').map(|s| s.trim().chars().collect()).collect();
    let out: Vec<char> = rhs.trim().chars().collect();
    if ins.len() != n_ops {
        return Err(Error::Index(format!("einsum spec {spec:?} names {} operands, {} given", ins.len(), n_ops)));
    }
    for (k, c) in out.iter().enumerate() {
        if out[..k].contains(c) {
            return Err(Error::Index(format!("output label {c:?} repeated in {spec:?}")));
        }
        if !ins.iter().any(|l| l.contains(c)) {
            return Err(Error::Index(format!("output label {c:?} not bound in {spec:?}")));
        }
    }
    Ok((ins, out))
}

/// Takes diagonals for labels repeated within one operand.
fn dedup_labels<S: Scalar>(labels: &[char], a: &Array<S>) -> Result<(Vec<char>, Array<S>)> {
    let mut uniq: Vec<char> = Vec::new();
    for &c in labels {
        if !uniq.contains(&c) {
            uniq.push(c);
        }
    }
    if uniq.len() == labels.len() {
        return Ok((uniq, a.clone()));
    }
    let mut dims = Vec::new();
    for &c in &uniq {
        let ds: Vec<usize> = labels.iter().zip(a.dims()).filter(|(l, _)| **l == c).map(|(_, d)| *d).collect();
        if ds.iter().any(|&d| d != ds[0]) {
            return Err(Error::Shape(format!("label {c:?} bound to axes of different lengths")));
        }
        dims.push(ds[0]);
    }
    let pos: Vec<usize> = labels.iter().map(|c| uniq.iter().position(|u| u == c).unwrap()).collect();
    let mut src = vec![0; labels.len()];
    let out = Array::from_fn(&dims, |idx| {
        for (k, &p) in pos.iter().enumerate() {
            src[k] = idx[p];
        }
        a.get(&src).clone()
    });
    Ok((uniq, out))
}

/// Binary contraction: sums over labels absent from `lout`.
fn ein2<S: Scalar>(la: &[char], a: &Array<S>, lb: &[char], b: &Array<S>, lout: &[char]) -> Result<Array<S>> {
    let shared: Vec<char> = la.iter().copied().filter(|c| lb.contains(c)).collect();
    let sa: Vec<usize> = shared.iter().map(|c| la.iter().position(|x| x == c).unwrap()).collect();
    let sb: Vec<usize> = shared.iter().map(|c| lb.iter().position(|x| x == c).unwrap()).collect();
    for (&i, &j) in sa.iter().zip(&sb) {
        if a.dims()[i] != b.dims()[j] {
            return Err(Error::Shape(format!("label {:?} has lengths {} and {}", la[i], a.dims()[i], b.dims()[j])));
        }
    }
    // Where each output label is read from: (from_a, axis).
    let src: Vec<(bool, usize)> = lout
        .iter()
        .map(|c| match la.iter().position(|x| x == c) {
            Some(p) => (true, p),
            None => (false, lb.iter().position(|x| x == c).expect("output label bound")),
        })
        .collect();
    let dims: Vec<usize> = src.iter().map(|&(fa, p)| if fa { a.dims()[p] } else { b.dims()[p] }).collect();
    let st = strides(&dims);
    let mut out = Array::zeros(&dims);

    let mut groups: HashMap<Vec<usize>, Vec<(Vec<usize>, &S)>> = HashMap::new();
    for (idx, v) in b.nonzeros() {
        let key: Vec<usize> = sb.iter().map(|&j| idx[j]).collect();
        groups.entry(key).or_default().push((idx, v));
    }
    for (ia, va) in a.nonzeros() {
        let key: Vec<usize> = sa.iter().map(|&i| ia[i]).collect();
        let Some(bs) = groups.get(&key) else { continue };
        let base: usize = src
            .iter()
            .zip(&st)
            .filter(|((fa, _), _)| *fa)
            .map(|((_, p), s)| ia[*p] * s)
            .sum();
        for (ib, vb) in bs {
            let flat = base
                + src
                    .iter()
                    .zip(&st)
                    .filter(|((fa, _), _)| !*fa)
                    .map(|((_, p), s)| ib[*p] * s)
                    .sum::<usize>();
            out.data[flat] += &va.times(vb);
        }
    }
    Ok(out)
}

/// Einstein summation over dense arrays, e.g. `einsum("xyac,cb,ab->xy", &[&k, &a, &gi])`.
///
/// Operands are contracted pairwise, each step picking the operand that keeps
/// the intermediate smallest; zero entries are skipped, so sparse structure
/// tensors cost almost nothing.
pub fn einsum<S: Scalar>(spec: &str, ops: &[&Array<S>]) -> Result<Array<S>> {
    let (ins, out) = parse_spec(spec, ops.len())?;
    for (l, a) in ins.iter().zip(ops) {
        if l.len() != a.rank() {
            return Err(Error::Shape(format!("labels {:?} do not match rank {}", l.iter().collect::<String>(), a.rank())));
        }
    }
    let mut dim_of: HashMap<char, usize> = HashMap::new();
    for (l, a) in ins.iter().zip(ops) {
        for (c, &d) in l.iter().zip(a.dims()) {
            if *dim_of.entry(*c).or_insert(d) != d {
                return Err(Error::Shape(format!("label {c:?} has lengths {} and {d}", dim_of[c])));
            }
        }
    }
    let (mut labels, mut acc) = dedup_labels(&ins[0], ops[0])?;
    if ops.len() == 1 {
        let one = Array::scalar(S::one());
        acc = ein2(&labels, &acc, &[], &one, &out)?;
        return Ok(acc);
    }
    let mut rest: Vec<usize> = (1..ops.len()).collect();
    while !rest.is_empty() {
        let keep_for = |k: usize| -> Vec<char> {
            let mut keep = Vec::new();
            for &c in labels.iter().chain(&ins[k]) {
                let needed = out.contains(&c) || rest.iter().any(|&j| j != k && ins[j].contains(&c));
                if needed && !keep.contains(&c) {
                    keep.push(c);
                }
            }
            keep
        };
        // Cost: size of the result, with operands sharing no label pushed last.
        let pick = (0..rest.len())
            .min_by_key(|&r| {
                let k = rest[r];
                let disjoint = !ins[k].iter().any(|c| labels.contains(c));
                let size: usize = keep_for(k).iter().map(|c| dim_of[c]).product();
                (disjoint, size, r)
            })
            .expect("operands remain");
        let k = rest[pick];
        let keep = if rest.len() == 1 { out.clone() } else { keep_for(k) };
        let (lb, b) = dedup_labels(&ins[k], ops[k])?;
        acc = ein2(&labels, &acc, &lb, &b, &keep)?;
        labels = keep;
        rest.remove(pick);
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Typed index tensors
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variance {
    Upper,
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Bar {
    Plain,
    Barred,
}

/// One index position of a tensor on V^ℂ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IndexSlot {
    pub variance: Variance,
    pub bar: Bar,
}

impl IndexSlot {
    pub const UP: IndexSlot = IndexSlot { variance: Variance::Upper, bar: Bar::Plain };
    pub const UP_BAR: IndexSlot = IndexSlot { variance: Variance::Upper, bar: Bar::Barred };
    pub const LOW: IndexSlot = IndexSlot { variance: Variance::Lower, bar: Bar::Plain };
    pub const LOW_BAR: IndexSlot = IndexSlot { variance: Variance::Lower, bar: Bar::Barred };

    pub fn tag(&self) -> &'static str {
        match (self.variance, self.bar) {
            (Variance::Upper, Bar::Plain) => "up",
            (Variance::Upper, Bar::Barred) => "up_bar",
            (Variance::Lower, Bar::Plain) => "low",
            (Variance::Lower, Bar::Barred) => "low_bar",
        }
    }

    pub fn parse(tag: &str) -> Result<Self> {
        match tag {
            "up" => Ok(Self::UP),
            "up_bar" => Ok(Self::UP_BAR),
            "low" => Ok(Self::LOW),
            "low_bar" => Ok(Self::LOW_BAR),
            other => Err(Error::Parse(format!("unknown index slot {other:?}"))),
        }
    }

    /// Summation is legal between an upper and a lower slot of the same bar class.
    pub fn contracts_with(&self, o: &IndexSlot) -> bool {
        self.variance != o.variance && self.bar == o.bar
    }

    /// Slot after complex conjugation.
    pub fn conjugate(&self) -> IndexSlot {
        let bar = match self.bar {
            Bar::Plain => Bar::Barred,
            Bar::Barred => Bar::Plain,
        };
        IndexSlot { variance: self.variance, bar }
    }

    /// Slot after raising or lowering with g_{αβ̄}, which flips both variance and bar.
    pub fn moved(&self) -> IndexSlot {
        let variance = match self.variance {
            Variance::Upper => Variance::Lower,
            Variance::Lower => Variance::Upper,
        };
        IndexSlot { variance, bar: self.conjugate().bar }
    }
}

impl fmt::Display for IndexSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Dense tensor over W-indices 1..4 with a typed signature.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexedTensor<S> {
    signature: Vec<IndexSlot>,
    array: Array<S>,
}

impl<S: Scalar> IndexedTensor<S> {
    pub fn new(signature: Vec<IndexSlot>, array: Array<S>) -> Result<Self> {
        if array.dims().len() != signature.len() || array.dims().iter().any(|&d| d != 4) {
            return Err(Error::Shape(format!(
                "signature of rank {} against array of shape {:?}",
                signature.len(),
                array.dims()
            )));
        }
        Ok(IndexedTensor { signature, array })
    }

    /// Row-major components; the length must be 4^rank.
    pub fn from_components(signature: Vec<IndexSlot>, components: Vec<S>) -> Result<Self> {
        let dims = vec![4; signature.len()];
        let array = Array::from_vec(&dims, components)?;
        Ok(IndexedTensor { signature, array })
    }

    pub fn from_fn(signature: Vec<IndexSlot>, f: impl FnMut(&[usize]) -> S) -> Self {
        let dims = vec![4; signature.len()];
        IndexedTensor { array: Array::from_fn(&dims, f), signature }
    }

    pub fn from_mat(signature: [IndexSlot; 2], m: &Mat<S>) -> Result<Self> {
        IndexedTensor::new(signature.to_vec(), Array::from_mat(m))
    }

    /// Coordinate vector of one slot kind, e.g. the basis vector e₁ with slot `UP`.
    pub fn vector(slot: IndexSlot, coords: [S; 4]) -> Self {
        IndexedTensor { signature: vec![slot], array: Array { dims: vec![4], data: coords.to_vec() } }
    }

    /// The basis vector e_k (0-based k) in the given slot kind.
    pub fn basis_vector(slot: IndexSlot, k: usize) -> Self {
        IndexedTensor::from_fn(vec![slot], |i| if i[0] == k { S::one() } else { S::zero() })
    }

    pub fn rank(&self) -> usize {
        self.signature.len()
    }

    pub fn signature(&self) -> &[IndexSlot] {
        &self.signature
    }

    pub fn array(&self) -> &Array<S> {
        &self.array
    }

    pub fn components(&self) -> &[S] {
        self.array.data()
    }

    pub fn get(&self, idx: &[usize]) -> &S {
        self.array.get(idx)
    }

    /// Rank-0 value; panics for higher rank.
    pub fn value(&self) -> S {
        assert_eq!(self.rank(), 0, "value() on a tensor of rank {}", self.rank());
        self.array.data()[0].clone()
    }

    pub fn to_mat(&self) -> Mat<S> {
        self.array.to_mat()
    }

    pub fn outer(&self, o: &IndexedTensor<S>) -> IndexedTensor<S> {
        let r = self.rank();
        let mut signature = self.signature.clone();
        signature.extend_from_slice(&o.signature);
        let dims = vec![4; signature.len()];
        let array = Array::from_fn(&dims, |idx| self.array.get(&idx[..r]).times(o.array.get(&idx[r..])));
        IndexedTensor { signature, array }
    }

    fn check_slot(&self, s: usize) -> Result<()> {
        if s >= self.rank() {
            return Err(Error::Index(format!("slot {s} out of range for rank {}", self.rank())));
        }
        Ok(())
    }

    /// Sums over a pair of slots; the rank drops by two.
    pub fn contract(&self, a: usize, b: usize) -> Result<IndexedTensor<S>> {
        self.check_slot(a)?;
        self.check_slot(b)?;
        if a == b || !self.signature[a].contracts_with(&self.signature[b]) {
            return Err(Error::IllegalContraction(
                a,
                self.signature[a].tag().into(),
                b,
                self.signature[b].tag().into(),
            ));
        }
        let keep: Vec<usize> = (0..self.rank()).filter(|&k| k != a && k != b).collect();
        let labels: Vec<char> = (0..self.rank())
            .map(|k| if k == b { letter(a) } else { letter(k) })
            .collect();
        let out: String = keep.iter().map(|&k| letter(k)).collect();
        let spec = format!("{}->{}", labels.iter().collect::<String>(), out);
        let array = einsum(&spec, &[&self.array])?;
        Ok(IndexedTensor { signature: keep.iter().map(|&k| self.signature[k]).collect(), array })
    }

    /// Contracts slot `a` of `self` against slot `b` of `o`; remaining slots of `self` come first.
    pub fn contract_with(&self, a: usize, o: &IndexedTensor<S>, b: usize) -> Result<IndexedTensor<S>> {
        self.check_slot(a)?;
        o.check_slot(b)?;
        self.outer(o).contract(a, self.rank() + b)
    }

    /// Slot permutation: new slot k is old slot `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Result<IndexedTensor<S>> {
        let array = self.array.permute(perm)?;
        Ok(IndexedTensor { signature: perm.iter().map(|&p| self.signature[p]).collect(), array })
    }

    fn check_group(&self, slots: &[usize]) -> Result<()> {
        if slots.is_empty() {
            return Err(Error::Index("empty slot list".into()));
        }
        for (k, &s) in slots.iter().enumerate() {
            self.check_slot(s)?;
            if slots[..k].contains(&s) {
                return Err(Error::Index(format!("slot {s} listed twice")));
            }
            if self.signature[s] != self.signature[slots[0]] {
                return Err(Error::Index(format!(
                    "slots {} ({}) and {s} ({}) are of different kinds",
                    slots[0], self.signature[slots[0]], self.signature[s]
                )));
            }
        }
        Ok(())
    }

    fn average_over(&self, slots: &[usize], signed: bool) -> Result<IndexedTensor<S>> {
        self.check_group(slots)?;
        let perms = permutations(slots.len());
        let norm = S::ratio(1, perms.len() as i64);
        let mut acc = Array::zeros(self.array.dims());
        for (p, sign) in &perms {
            let mut full: Vec<usize> = (0..self.rank()).collect();
            for (k, &s) in slots.iter().enumerate() {
                full[s] = slots[p[k]];
            }
            let t = self.array.permute(&full)?;
            acc = if signed && *sign < 0 { acc.sub(&t) } else { acc.add(&t) };
        }
        Ok(IndexedTensor { signature: self.signature.clone(), array: acc.scale(&norm) })
    }

    /// Average over all orderings of the given slots.
    pub fn symmetrize(&self, slots: &[usize]) -> Result<IndexedTensor<S>> {
        self.average_over(slots, false)
    }

    /// Signed average over all orderings of the given slots.
    pub fn antisymmetrize(&self, slots: &[usize]) -> Result<IndexedTensor<S>> {
        self.average_over(slots, true)
    }

    /// Moves slot `s` with g, keeping its position.
    fn move_slot(&self, s: usize, metric: &IndexedTensor<S>) -> Result<IndexedTensor<S>> {
        let t = self.contract_with(s, metric, 1)?;
        let r = self.rank();
        let mut perm: Vec<usize> = (0..r - 1).collect();
        perm.insert(s, r - 1);
        t.permute(&perm)
    }

    /// x_α = g_{αβ̄} x^β̄ on slot `s`.
    pub fn lower(&self, s: usize) -> Result<IndexedTensor<S>> {
        self.check_slot(s)?;
        let slot = self.signature[s];
        if slot.variance != Variance::Lower {
            let target = slot.moved();
            let g = metric_tensor(target, IndexSlot { variance: Variance::Lower, bar: slot.bar });
            return self.move_slot(s, &g);
        }
        Err(Error::Index(format!("slot {s} is already lower ({slot})")))
    }

    /// x^α = g^{αβ̄} x_β̄ on slot `s`.
    pub fn raise(&self, s: usize) -> Result<IndexedTensor<S>> {
        self.check_slot(s)?;
        let slot = self.signature[s];
        if slot.variance != Variance::Upper {
            let target = slot.moved();
            let g = metric_tensor(target, IndexSlot { variance: Variance::Upper, bar: slot.bar });
            return self.move_slot(s, &g);
        }
        Err(Error::Index(format!("slot {s} is already upper ({slot})")))
    }

    /// Complex conjugate tensor: components conjugated, every slot's bar flipped.
    pub fn bar_conjugate(&self) -> IndexedTensor<S> {
        IndexedTensor {
            signature: self.signature.iter().map(IndexSlot::conjugate).collect(),
            array: self.array.conj(),
        }
    }

    /// The antilinear map 𝔧: every slot is contracted with π against the conjugated components.
    pub fn jmap(&self) -> IndexedTensor<S> {
        IndexedTensor { signature: self.signature.clone(), array: jmap_array(&self.array) }
    }

    pub fn is_j_real(&self) -> bool {
        self.jmap().array == self.array
    }

    pub fn residual_to(&self, o: &IndexedTensor<S>) -> Residual {
        self.array.residual_to(&o.array)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "signature": self.signature.iter().map(IndexSlot::tag).collect::<Vec<_>>(),
            "components": self.components().iter().map(S::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let sig = v
            .get("signature")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("tensor needs a \"signature\" list".into()))?;
        let signature = sig
            .iter()
            .map(|t| t.as_str().ok_or_else(|| Error::Parse("slot tags are strings".into())).and_then(IndexSlot::parse))
            .collect::<Result<Vec<_>>>()?;
        let comps = v
            .get("components")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("tensor needs a \"components\" list".into()))?;
        let components = comps.iter().map(S::from_json).collect::<Result<Vec<_>>>()?;
        IndexedTensor::from_components(signature, components)
    }
}

fn letter(k: usize) -> char {
    (b'a' + k as u8) as char
}

/// All permutations of 0..n with their signs.
pub fn permutations(n: usize) -> Vec<(Vec<usize>, i64)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<(Vec<usize>, i64)>) {
        let n = used.len();
        if prefix.len() == n {
            let mut inv = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if prefix[i] > prefix[j] {
                        inv += 1;
                    }
                }
            }
            out.push((prefix.clone(), if inv % 2 == 0 { 1 } else { -1 }));
            return;
        }
        for k in 0..n {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                rec(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// 𝔧 on an array whose every axis has length 4.
pub fn jmap_array<S: Scalar>(a: &Array<S>) -> Array<S> {
    let pi = Array::from_mat(&pi_matrix::<S>());
    let mut t = a.conj();
    // Contract axis k with the first index of π, then move the result back to position k.
    let r = a.rank();
    for k in 0..r {
        let labels: String = (0..r).map(letter).collect();
        let out: String = (0..r).map(|j| if j == k { 'z' } else { letter(j) }).collect();
        let spec = format!("{labels},{}z->{out}", letter(k));
        t = einsum(&spec, &[&t, &pi]).expect("well-formed jmap spec");
    }
    t
}

/// g with the given two slot kinds (the identity matrix in the adapted basis).
fn metric_tensor<S: Scalar>(a: IndexSlot, b: IndexSlot) -> IndexedTensor<S> {
    IndexedTensor::from_fn(vec![a, b], |i| if i[0] == i[1] { S::one() } else { S::zero() })
}

// ---------------------------------------------------------------------------
// Structure tensors
// ---------------------------------------------------------------------------

/// π_{αβ} in the adapted basis: π₁₃ = π₂₄ = 1.
pub fn pi_matrix<S: Scalar>() -> Mat<S> {
    Mat::from_fn(4, 4, |r, c| match (r, c) {
        (0, 2) | (1, 3) => S::one(),
        (2, 0) | (3, 1) => S::from_i64(-1),
        _ => S::zero(),
    })
}

/// The Gram matrix G of g on V^ℂ: g(e_α, e_β̄) = δ, all other pairings zero.
pub fn g8<S: Scalar>() -> Mat<S> {
    Mat::from_fn(8, 8, |r, c| if (r + 4 == c) || (c + 4 == r) { S::one() } else { S::zero() })
}

/// J₁ = diag(i, −i), J₂ = −π on both off-diagonal blocks, J₃ = J₁J₂.
pub fn complex_structures<S: Scalar>() -> [Mat<S>; 3] {
    let id = Mat::<S>::identity(4);
    let j1 = Mat::block_diag(&id.scale(&S::i()), &id.scale(&S::i().negated()));
    let mpi = pi_matrix::<S>().neg();
    let j2 = Mat::from_fn(8, 8, |r, c| match (r < 4, c < 4) {
        (true, false) => mpi[(r, c - 4)].clone(),
        (false, true) => mpi[(r - 4, c)].clone(),
        _ => S::zero(),
    });
    let j3 = j1.mul(&j2);
    [j1, j2, j3]
}

/// The 2-form F(x, y) = g(Ax, y) of an endomorphism A of V^ℂ.
pub fn form_of<S: Scalar>(a: &Mat<S>) -> Mat<S> {
    a.transpose().mul(&g8())
}

/// Inverse of [`form_of`] (G is its own inverse).
pub fn endo_of_form<S: Scalar>(f: &Mat<S>) -> Mat<S> {
    f.mul(&g8()).transpose()
}

/// The fixed tensors π, g and J_s of the adapted basis.
#[derive(Clone, Debug)]
pub struct StructureTensors<S> {
    /// π_{αβ}
    pub pi_lower: IndexedTensor<S>,
    /// π^{αβ}
    pub pi_upper: IndexedTensor<S>,
    /// π^α_{.β̄}
    pub pi_up_lowbar: IndexedTensor<S>,
    /// π^{β̄}_{.α}
    pub pi_upbar_low: IndexedTensor<S>,
    /// g_{αβ̄}
    pub g_lower: IndexedTensor<S>,
    /// g^{αβ̄}
    pub g_upper: IndexedTensor<S>,
    /// J₁, J₂, J₃ on V^ℂ.
    pub j: [Mat<S>; 3],
    /// Gram matrix of g on V^ℂ.
    pub g8: Mat<S>,
    /// π on V^ℂ: π on W, its conjugate (numerically equal) on W̄.
    pub pi8: Mat<S>,
}

impl<S: Scalar> StructureTensors<S> {
    pub fn standard() -> Self {
        use IndexSlot as I;
        let pi = pi_matrix::<S>();
        let t = |a, b| IndexedTensor::from_mat([a, b], &pi).expect("4×4");
        let pi_lower = t(I::LOW, I::LOW);
        // Raising a plain lower slot yields a barred upper slot; conjugating
        // (π is real) returns the plain forms.
        let pi_upbar_low = pi_lower.raise(0).expect("raise π");
        let pi_up_lowbar = pi_upbar_low.bar_conjugate();
        let pi_upper = pi_upbar_low.raise(1).expect("raise π").bar_conjugate();
        StructureTensors {
            pi_lower,
            pi_upper,
            pi_up_lowbar,
            pi_upbar_low,
            g_lower: metric_tensor(I::LOW, I::LOW_BAR),
            g_upper: metric_tensor(I::UP, I::UP_BAR),
            j: complex_structures(),
            g8: g8(),
            pi8: Mat::block_diag(&pi, &pi),
        }
    }

    /// Residuals of the defining identities of the structure.
    pub fn identity_residuals(&self) -> Vec<(&'static str, Residual)> {
        let id8 = Mat::<S>::identity(8);
        let [j1, j2, j3] = &self.j;
        let minus_id = id8.neg();
        let mut out = vec![
            ("j1_j2_eq_j3", Residual::between(j1.mul(j2).entries(), j3.entries())),
            ("j2_j1_eq_minus_j3", Residual::between(j2.mul(j1).entries(), j3.neg().entries())),
        ];
        for (k, j) in self.j.iter().enumerate() {
            out.push((["j1_squared", "j2_squared", "j3_squared"][k], Residual::between(j.mul(j).entries(), minus_id.entries())));
            let pulled = j.transpose().mul(&self.g8).mul(j);
            out.push((["g_j1_invariant", "g_j2_invariant", "g_j3_invariant"][k], Residual::between(pulled.entries(), self.g8.entries())));
        }
        // π^α_{.σ̄} π^{σ̄}_{.β} = −δ
        let mixed = self.pi_up_lowbar.contract_with(1, &self.pi_upbar_low, 0).expect("legal contraction");
        out.push(("pi_mixed_square", Residual::between(mixed.components(), Mat::<S>::identity(4).neg().entries())));
        // g(x, y) = π(x, J₂ y)
        out.push(("g_eq_pi_j2", Residual::between(self.pi8.mul(j2).entries(), self.g8.entries())));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Exact;

    type T = IndexedTensor<Exact>;

    fn q(n: i64) -> Exact {
        Exact::from_i64(n)
    }

    #[test]
    fn structure_identities_hold() {
        let st = StructureTensors::<Exact>::standard();
        for (name, r) in st.identity_residuals() {
            assert_eq!(r.exact_zero, Some(true), "{name}");
        }
        assert_eq!(st.pi_lower.get(&[0, 2]), &q(1));
        assert_eq!(st.g_lower.get(&[1, 1]), &q(1));
    }

    #[test]
    fn j2_sends_ebar1_to_e3() {
        let [_, j2, _] = complex_structures::<Exact>();
        let col: Vec<Exact> = j2.col(4);
        let mut e3 = vec![q(0); 8];
        e3[2] = q(1);
        assert_eq!(col, e3);
    }

    #[test]
    fn trace_of_g_is_four() {
        let st = StructureTensors::<Exact>::standard();
        let t = st.g_lower.outer(&st.g_upper).contract(0, 2).unwrap().contract(0, 1).unwrap();
        assert_eq!(t.value(), q(4));
    }

    #[test]
    fn pi_upper_against_pi_lower() {
        // Golden value of the raise-both-slots convention.
        let st = StructureTensors::<Exact>::standard();
        let t = st.pi_upper.outer(&st.pi_lower).contract(0, 2).unwrap().contract(0, 1).unwrap();
        assert_eq!(t.value(), q(4));
        let m = st.pi_upper.contract_with(1, &st.pi_lower, 0).unwrap();
        assert_eq!(m.to_mat(), Mat::identity(4).neg());
    }

    #[test]
    fn illegal_contraction_names_slots() {
        let st = StructureTensors::<Exact>::standard();
        let err = st.pi_lower.contract(0, 1).unwrap_err();
        assert_eq!(err.to_string(), "illegal contraction between slot 0 (low) and slot 1 (low)");
        let err = st.g_lower.outer(&st.pi_upper).contract(1, 2).unwrap_err();
        assert!(matches!(err, Error::IllegalContraction(1, _, 2, _)));
    }

    #[test]
    fn delta_contraction_is_identity() {
        let delta = IndexedTensor::<Exact>::from_fn(vec![IndexSlot::UP, IndexSlot::LOW], |i| {
            if i[0] == i[1] { q(1) } else { q(0) }
        });
        let t = T::from_fn(vec![IndexSlot::UP, IndexSlot::LOW_BAR], |i| Exact::ratio(i[0] as i64 + 1, i[1] as i64 + 2));
        let out = delta.contract_with(1, &t, 0).unwrap();
        assert_eq!(out, t);
    }

    #[test]
    fn jmap_on_vectors() {
        let e1 = T::basis_vector(IndexSlot::UP, 0);
        let e3 = T::basis_vector(IndexSlot::UP, 2);
        assert_eq!(e1.jmap(), e3);
        let neg: Vec<Exact> = e1.components().iter().map(|x| x.negated()).collect();
        assert_eq!(e1.jmap().jmap().components(), &neg[..]);
    }

    #[test]
    fn jmap_fixes_pi() {
        let st = StructureTensors::<Exact>::standard();
        assert!(st.pi_lower.is_j_real());
        assert!(st.g_lower.is_j_real());
    }

    #[test]
    fn lowering_a_barred_vector() {
        let x = T::basis_vector(IndexSlot::UP_BAR, 0);
        let low = x.lower(0).unwrap();
        assert_eq!(low.signature(), &[IndexSlot::LOW]);
        assert_eq!(low.get(&[0]), &q(1));
        assert_eq!(low.raise(0).unwrap(), x);
        assert!(x.raise(0).is_err());
    }

    #[test]
    fn symmetrization_laws() {
        let t = T::from_fn(vec![IndexSlot::LOW; 3], |i| q((i[0] * 7 + i[1] * 3 + i[2]) as i64));
        let s = t.symmetrize(&[0, 1, 2]).unwrap();
        assert_eq!(s.symmetrize(&[0, 1, 2]).unwrap(), s);
        assert!(s.antisymmetrize(&[0, 2]).unwrap().components().iter().all(Scalar::is_zero));
        let mixed = T::from_fn(vec![IndexSlot::LOW, IndexSlot::UP], |_| q(1));
        assert!(mixed.symmetrize(&[0, 1]).is_err());
        assert!(t.symmetrize(&[0, 0]).is_err());
    }

    #[test]
    fn einsum_matches_matrix_product() {
        let a = Mat::from_fn(3, 4, |r, c| Exact::from_i64((r * 4 + c) as i64 - 5));
        let b = Mat::from_fn(4, 2, |r, c| Exact::from_i64((r + 2 * c) as i64));
        let e = einsum("ij,jk->ik", &[&Array::from_mat(&a), &Array::from_mat(&b)]).unwrap();
        assert_eq!(e.to_mat(), a.mul(&b));
        let tr = einsum("ii->", &[&Array::from_mat(&a.mul(&a.transpose()))]).unwrap();
        assert_eq!(tr.data()[0], a.mul(&a.transpose()).trace());
    }

    #[test]
    fn json_round_trip() {
        let st = StructureTensors::<Exact>::standard();
        let v = st.pi_up_lowbar.to_json();
        assert_eq!(T::from_json(&v).unwrap(), st.pi_up_lowbar);
        let bad = json!({"signature": ["up", "low"], "components": [{"a": "1"}]});
        assert!(T::from_json(&bad).is_err());
    }
}
