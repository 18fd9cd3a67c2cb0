//! Scalar backends.
//!
//! Every algebraic routine in the crate is generic over [`Scalar`]. Two
//! backends exist: [`Exact`], the field ℚ(i, √3) with arbitrary-precision
//! rational coefficients, and [`Float`], a double-precision complex shadow.
//! A verification run picks one backend for everything it computes.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::Error;

/// Relative tolerance used by the float backend when none is given.
pub const DEFAULT_FLOAT_TOL: f64 = 1e-9;

/// A field element usable by every algorithm in the crate.
pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
{
    /// `true` for the exact backend.
    const EXACT: bool;
    /// Backend name as it appears in reports.
    const NAME: &'static str;

    fn zero() -> Self;
    fn one() -> Self;

    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn times(&self, o: &Self) -> Self;
    fn negated(&self) -> Self;

    /// `self += a·b`.
    fn add_product(&mut self, a: &Self, b: &Self) {
        if !a.is_zero() && !b.is_zero() {
            *self += &a.times(b);
        }
    }

    fn from_i64(n: i64) -> Self;
    /// The rational p/q. Panics if q = 0.
    fn ratio(p: i64, q: i64) -> Self;
    /// The imaginary unit.
    fn i() -> Self;
    /// The positive square root of 3.
    fn sqrt3() -> Self;

    /// Exact zero test (bitwise zero for floats).
    fn is_zero(&self) -> bool;
    fn conj(&self) -> Self;
    /// Multiplicative inverse, `None` for zero.
    fn inv(&self) -> Option<Self>;
    fn to_c64(&self) -> Complex64;

    fn magnitude(&self) -> f64 {
        self.to_c64().norm()
    }

    /// Whether a pivot candidate should be treated as zero during
    /// elimination. `scale` is the largest magnitude in the matrix.
    fn negligible(&self, scale: f64) -> bool;

    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self, Error>;

    fn div(&self, other: &Self) -> Result<Self, Error> {
        other.inv().map(|r| self.times(&r)).ok_or(Error::DivisionByZero)
    }

    fn scale_i64(&self, n: i64) -> Self {
        self.times(&Self::from_i64(n))
    }
}

// ---------------------------------------------------------------------------
// Exact backend
// ---------------------------------------------------------------------------

/// The element (n₀ + n₁·i + n₂·√3 + n₃·i√3)/den of ℚ(i, √3).
///
/// Kept normalized: den > 0, gcd(n₀, n₁, n₂, n₃, den) = 1 and zero is 0/1,
/// so equality is coefficient-wise equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Exact {
    n: [BigInt; 4],
    den: BigInt,
}

impl Default for Exact {
    fn default() -> Self {
        Exact { n: Default::default(), den: BigInt::one() }
    }
}

fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

impl Exact {
    pub fn new(a: BigRational, b: BigRational, c: BigRational, d: BigRational) -> Self {
        let cs = [a, b, c, d];
        let den = cs.iter().fold(BigInt::one(), |l, r| l.lcm(r.denom()));
        let n = cs.map(|r| r.numer() * (&den / r.denom()));
        Exact::normalized(n, den)
    }

    fn normalized(mut n: [BigInt; 4], mut den: BigInt) -> Self {
        if n.iter().all(Zero::is_zero) {
            return Exact::default();
        }
        if den.is_negative() {
            den = -den;
            for x in &mut n {
                *x = -std::mem::take(x);
            }
        }
        if !den.is_one() {
            let mut g = den.clone();
            for x in &n {
                if g.is_one() {
                    break;
                }
                if !x.is_zero() {
                    g = g.gcd(x);
                }
            }
            if !g.is_one() {
                for x in &mut n {
                    if !x.is_zero() {
                        *x /= &g;
                    }
                }
                den /= &g;
            }
        }
        Exact { n, den }
    }

    /// Builds an element from four small rationals given as (numerator, denominator).
    pub fn from_parts(a: (i64, i64), b: (i64, i64), c: (i64, i64), d: (i64, i64)) -> Self {
        Exact::new(rat(a.0, a.1), rat(b.0, b.1), rat(c.0, c.1), rat(d.0, d.1))
    }

    /// The coefficients of 1, i, √3, i√3.
    pub fn coefficients(&self) -> [BigRational; 4] {
        self.n.clone().map(|x| BigRational::new(x, self.den.clone()))
    }

    fn with_n(&self, signs: [bool; 4]) -> Self {
        let mut n = self.n.clone();
        for (x, neg) in n.iter_mut().zip(signs) {
            if neg {
                *x = -std::mem::take(x);
            }
        }
        Exact { n, den: self.den.clone() }
    }

    /// Image under the Galois automorphism √3 ↦ −√3.
    fn flip_sqrt3(&self) -> Self {
        self.with_n([false, false, true, true])
    }

    /// The rational norm N(x) = x·conj(x)·σ(x)·σ(conj(x)), σ: √3 ↦ −√3.
    pub fn norm(&self) -> BigRational {
        let m = self * &self.conj();
        // m = p + q√3 with vanishing imaginary parts
        let [p, _, q, _] = m.coefficients();
        &p * &p - &q * &q * BigInt::from(3)
    }
}

impl Scalar for Exact {
    const EXACT: bool = true;
    const NAME: &'static str = "exact";

    fn zero() -> Self {
        Exact::default()
    }
    fn one() -> Self {
        Exact::from_i64(1)
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn negated(&self) -> Self {
        -self
    }
    fn from_i64(n: i64) -> Self {
        Exact { n: [BigInt::from(n), BigInt::zero(), BigInt::zero(), BigInt::zero()], den: BigInt::one() }
    }
    fn ratio(p: i64, q: i64) -> Self {
        Exact::from_parts((p, q), (0, 1), (0, 1), (0, 1))
    }
    fn i() -> Self {
        Exact::from_parts((0, 1), (1, 1), (0, 1), (0, 1))
    }
    fn sqrt3() -> Self {
        Exact::from_parts((0, 1), (0, 1), (1, 1), (0, 1))
    }

    fn is_zero(&self) -> bool {
        self.n.iter().all(Zero::is_zero)
    }

    fn conj(&self) -> Self {
        self.with_n([false, true, false, true])
    }

    fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let m = self * &self.conj();
        let [p, _, q, _] = m.coefficients();
        let nrm = &p * &p - &q * &q * BigInt::from(3);
        let num = &self.conj() * &m.flip_sqrt3();
        let [a, b, c, d] = num.coefficients();
        Some(Exact::new(a / &nrm, b / &nrm, c / &nrm, d / &nrm))
    }

    fn to_c64(&self) -> Complex64 {
        let f = |x: &BigInt| BigRational::new(x.clone(), self.den.clone()).to_f64().unwrap_or(f64::NAN);
        let s3 = 3f64.sqrt();
        Complex64::new(f(&self.n[0]) + s3 * f(&self.n[2]), f(&self.n[1]) + s3 * f(&self.n[3]))
    }

    fn negligible(&self, _scale: f64) -> bool {
        self.is_zero()
    }

    fn to_json(&self) -> Value {
        let [a, b, c, d] = self.coefficients();
        json!({
            "a": a.to_string(),
            "b": b.to_string(),
            "c": c.to_string(),
            "d": d.to_string(),
        })
    }

    fn from_json(v: &Value) -> Result<Self, Error> {
        let field = |k: &str| -> Result<BigRational, Error> {
            let s = v
                .get(k)
                .and_then(Value::as_str)
                .ok_or_else(|| Error::Parse(format!("exact scalar: missing string field {k:?}")))?;
            let r = BigRational::from_str(s)
                .map_err(|e| Error::Parse(format!("exact scalar field {k:?} = {s:?}: {e}")))?;
            Ok(r)
        };
        Ok(Exact::new(field("a")?, field("b")?, field("c")?, field("d")?))
    }
}

/// Σ± n·m over the products of a multiplication table row, skipping zeros.
fn dot(terms: &[(&BigInt, &BigInt, i64)]) -> BigInt {
    let mut total = BigInt::zero();
    for &(x, y, f) in terms {
        if x.is_zero() || y.is_zero() {
            continue;
        }
        let p = x * y;
        match f {
            1 => total += p,
            -1 => total -= p,
            f => total += p * f,
        }
    }
    total
}

fn add_sub(x: &Exact, y: &Exact, sign: bool) -> Exact {
    if y.is_zero() {
        return x.clone();
    }
    if x.is_zero() {
        return if sign { y.clone() } else { -y };
    }
    let comb = |a: &BigInt, b: &BigInt| if sign { a + b } else { a - b };
    if x.den == y.den {
        let n = [0, 1, 2, 3].map(|k| comb(&x.n[k], &y.n[k]));
        return Exact::normalized(n, x.den.clone());
    }
    let n = [0, 1, 2, 3].map(|k| comb(&(&x.n[k] * &y.den), &(&y.n[k] * &x.den)));
    Exact::normalized(n, &x.den * &y.den)
}

impl<'a> Add<&'a Exact> for &'a Exact {
    type Output = Exact;
    fn add(self, o: &'a Exact) -> Exact {
        add_sub(self, o, true)
    }
}

impl<'a> Sub<&'a Exact> for &'a Exact {
    type Output = Exact;
    fn sub(self, o: &'a Exact) -> Exact {
        add_sub(self, o, false)
    }
}

impl<'a> Mul<&'a Exact> for &'a Exact {
    type Output = Exact;
    fn mul(self, o: &'a Exact) -> Exact {
        if self.is_zero() || o.is_zero() {
            return Exact::zero();
        }
        // i² = −1, (√3)² = 3, (i√3)² = −3
        let [a, b, c, d] = &self.n;
        let [e, f, g, h] = &o.n;
        let n = [
            dot(&[(a, e, 1), (b, f, -1), (c, g, 3), (d, h, -3)]),
            dot(&[(a, f, 1), (b, e, 1), (c, h, 3), (d, g, 3)]),
            dot(&[(a, g, 1), (c, e, 1), (b, h, -1), (d, f, -1)]),
            dot(&[(a, h, 1), (d, e, 1), (b, g, 1), (c, f, 1)]),
        ];
        Exact::normalized(n, &self.den * &o.den)
    }
}

impl Neg for &Exact {
    type Output = Exact;
    fn neg(self) -> Exact {
        self.with_n([true; 4])
    }
}

impl Neg for Exact {
    type Output = Exact;
    fn neg(mut self) -> Exact {
        for x in &mut self.n {
            *x = -std::mem::take(x);
        }
        self
    }
}

impl Add for Exact {
    type Output = Exact;
    fn add(self, o: Exact) -> Exact {
        &self + &o
    }
}

impl Sub for Exact {
    type Output = Exact;
    fn sub(self, o: Exact) -> Exact {
        &self - &o
    }
}

impl Mul for Exact {
    type Output = Exact;
    fn mul(self, o: Exact) -> Exact {
        &self * &o
    }
}

impl<'a> AddAssign<&'a Exact> for Exact {
    fn add_assign(&mut self, o: &'a Exact) {
        *self = add_sub(self, o, true);
    }
}

impl<'a> SubAssign<&'a Exact> for Exact {
    fn sub_assign(&mut self, o: &'a Exact) {
        *self = add_sub(self, o, false);
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (coef, unit) in self.coefficients().iter().zip(["", "i", "√3", "i√3"]) {
            if coef.is_zero() {
                continue;
            }
            let neg = coef.is_negative();
            let mag = coef.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            if unit.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{unit}")?;
            } else {
                write!(f, "{mag}{unit}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Exact({self})")
    }
}

// ---------------------------------------------------------------------------
// Float backend
// ---------------------------------------------------------------------------

/// Double-precision complex number, the cross-check backend.
#[derive(Clone, Copy, PartialEq, Default)]
pub struct Float(pub Complex64);

impl Float {
    pub fn new(re: f64, im: f64) -> Self {
        Float(Complex64::new(re, im))
    }
    pub fn re(&self) -> f64 {
        self.0.re
    }
    pub fn im(&self) -> f64 {
        self.0.im
    }
}

impl Scalar for Float {
    const EXACT: bool = false;
    const NAME: &'static str = "float";

    fn zero() -> Self {
        Float::new(0.0, 0.0)
    }
    fn one() -> Self {
        Float::new(1.0, 0.0)
    }
    fn plus(&self, o: &Self) -> Self {
        Float(self.0 + o.0)
    }
    fn minus(&self, o: &Self) -> Self {
        Float(self.0 - o.0)
    }
    fn times(&self, o: &Self) -> Self {
        Float(self.0 * o.0)
    }
    fn negated(&self) -> Self {
        Float(-self.0)
    }
    fn from_i64(n: i64) -> Self {
        Float::new(n as f64, 0.0)
    }
    fn ratio(p: i64, q: i64) -> Self {
        assert!(q != 0, "zero denominator");
        Float::new(p as f64 / q as f64, 0.0)
    }
    fn i() -> Self {
        Float::new(0.0, 1.0)
    }
    fn sqrt3() -> Self {
        Float::new(3f64.sqrt(), 0.0)
    }
    fn is_zero(&self) -> bool {
        self.0.re == 0.0 && self.0.im == 0.0
    }
    fn conj(&self) -> Self {
        Float(self.0.conj())
    }
    fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(Float(self.0.inv()))
        }
    }
    fn to_c64(&self) -> Complex64 {
        self.0
    }
    fn negligible(&self, scale: f64) -> bool {
        self.0.norm() <= DEFAULT_FLOAT_TOL * scale.max(1.0)
    }
    fn to_json(&self) -> Value {
        json!({ "re": self.0.re, "im": self.0.im })
    }
    fn from_json(v: &Value) -> Result<Self, Error> {
        let field = |k: &str| {
            v.get(k)
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::Parse(format!("float scalar: missing number field {k:?}")))
        };
        Ok(Float::new(field("re")?, field("im")?))
    }
}

macro_rules! float_binop {
    ($tr:ident, $m:ident, $op:tt) => {
        impl<'a> $tr<&'a Float> for &'a Float {
            type Output = Float;
            fn $m(self, o: &'a Float) -> Float {
                Float(self.0 $op o.0)
            }
        }
        impl $tr for Float {
            type Output = Float;
            fn $m(self, o: Float) -> Float {
                Float(self.0 $op o.0)
            }
        }
    };
}
float_binop!(Add, add, +);
float_binop!(Sub, sub, -);
float_binop!(Mul, mul, *);

impl Neg for &Float {
    type Output = Float;
    fn neg(self) -> Float {
        Float(-self.0)
    }
}
impl Neg for Float {
    type Output = Float;
    fn neg(self) -> Float {
        Float(-self.0)
    }
}
impl<'a> AddAssign<&'a Float> for Float {
    fn add_assign(&mut self, o: &'a Float) {
        self.0 += o.0;
    }
}
impl<'a> SubAssign<&'a Float> for Float {
    fn sub_assign(&mut self, o: &'a Float) {
        self.0 -= o.0;
    }
}

impl fmt::Display for Float {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.im == 0.0 {
            write!(f, "{}", self.0.re)
        } else {
            write!(f, "{}{:+}i", self.0.re, self.0.im)
        }
    }
}

impl fmt::Debug for Float {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Float({self})")
    }
}

// ---------------------------------------------------------------------------
// Residuals
// ---------------------------------------------------------------------------

/// Size of the difference between two sides of an identity.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Residual {
    /// `Some(true)` iff every entry vanished exactly; `None` in float mode.
    pub exact_zero: Option<bool>,
    /// Largest entry magnitude of the difference.
    pub max_abs: f64,
    /// Frobenius norm of the difference over max(1, Frobenius norm of the reference side).
    pub relative: f64,
}

impl Residual {
    /// Residual of `lhs − rhs`, entry by entry.
    pub fn between<'a, S: Scalar>(
        lhs: impl IntoIterator<Item = &'a S>,
        rhs: impl IntoIterator<Item = &'a S>,
    ) -> Self {
        let mut all_zero = true;
        let mut max_abs = 0f64;
        let mut diff2 = 0f64;
        let mut ref2 = 0f64;
        let mut r = rhs.into_iter();
        for x in lhs {
            let y = r.next().expect("residual operands differ in length");
            let d = x.minus(y);
            if !d.is_zero() {
                all_zero = false;
            }
            let m = d.magnitude();
            max_abs = max_abs.max(m);
            diff2 += m * m;
            let ry = y.magnitude().max(x.magnitude());
            ref2 += ry * ry;
        }
        assert!(r.next().is_none(), "residual operands differ in length");
        Residual {
            exact_zero: S::EXACT.then_some(all_zero),
            max_abs,
            relative: diff2.sqrt() / ref2.sqrt().max(1.0),
        }
    }

    /// Residual of a quantity that should vanish.
    pub fn of_zero<'a, S: Scalar>(entries: impl IntoIterator<Item = &'a S>) -> Self {
        let mut all_zero = true;
        let mut max_abs = 0f64;
        let mut n2 = 0f64;
        for x in entries {
            if !x.is_zero() {
                all_zero = false;
            }
            let m = x.magnitude();
            max_abs = max_abs.max(m);
            n2 += m * m;
        }
        Residual {
            exact_zero: S::EXACT.then_some(all_zero),
            max_abs,
            relative: n2.sqrt(),
        }
    }

    /// A residual that is known to be zero (used for vacuous checks).
    pub fn zero(exact: bool) -> Self {
        Residual {
            exact_zero: exact.then_some(true),
            max_abs: 0.0,
            relative: 0.0,
        }
    }

    /// Combines residuals of several identities into one summary.
    pub fn merge(parts: impl IntoIterator<Item = Residual>) -> Self {
        let mut out: Option<Residual> = None;
        for p in parts {
            out = Some(match out {
                None => p,
                Some(o) => Residual {
                    exact_zero: match (o.exact_zero, p.exact_zero) {
                        (Some(x), Some(y)) => Some(x && y),
                        _ => None,
                    },
                    max_abs: o.max_abs.max(p.max_abs),
                    relative: o.relative.max(p.relative),
                },
            });
        }
        out.unwrap_or(Residual {
            exact_zero: None,
            max_abs: 0.0,
            relative: 0.0,
        })
    }

    /// Exact mode: all entries vanished. Float mode: relative norm below `tol`.
    pub fn passes(&self, tol: f64) -> bool {
        match self.exact_zero {
            Some(z) => z,
            None => self.relative < tol,
        }
    }
}

impl fmt::Display for Residual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exact_zero {
            Some(true) => write!(f, "exact-zero"),
            Some(false) => write!(f, "nonzero (max |·| = {:.3e})", self.max_abs),
            None => write!(f, "rel {:.3e}", self.relative),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(a: i64, b: i64, c: i64, d: i64) -> Exact {
        Exact::from_parts((a, 1), (b, 1), (c, 1), (d, 1))
    }

    #[test]
    fn conjugate_product() {
        let x = e(1, 0, 0, 1);
        let y = e(1, 0, 0, -1);
        assert_eq!(&x * &y, Exact::from_i64(4));
    }

    #[test]
    fn rationalized_inverse() {
        let r = Exact::one().div(&Exact::sqrt3()).unwrap();
        assert_eq!(r, Exact::from_parts((0, 1), (0, 1), (1, 3), (0, 1)));
    }

    #[test]
    fn conj_of_i() {
        assert_eq!(Exact::i().conj(), -Exact::i());
    }

    #[test]
    fn division_by_zero_is_an_error() {
        assert!(matches!(Exact::one().div(&Exact::zero()), Err(Error::DivisionByZero)));
        assert!(Float::zero().inv().is_none());
    }

    #[test]
    fn float_embedding_of_units() {
        let s = Exact::sqrt3().to_c64();
        assert!((s.re - 1.7320508075688772).abs() < 1e-15 && s.im == 0.0);
        let t = (&Exact::i() * &Exact::sqrt3()).to_c64();
        assert!(t.re == 0.0 && (t.im - 1.7320508075688772).abs() < 1e-15);
        assert_eq!(Exact::zero().to_c64(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn norm_is_rational_product_of_conjugates() {
        let x = e(2, -1, 1, 3);
        let n = x.norm();
        let p = &(&x * &x.conj()) * &(&x.flip_sqrt3() * &x.flip_sqrt3().conj());
        assert_eq!(p, Exact::new(n, rat(0, 1), rat(0, 1), rat(0, 1)));
    }

    #[test]
    fn display_forms() {
        assert_eq!(Exact::from_parts((-3, 2), (0, 1), (0, 1), (1, 2)).to_string(), "-3/2 + 1/2i√3");
        assert_eq!(Exact::i().to_string(), "i");
    }

    #[test]
    fn json_round_trip() {
        let x = Exact::from_parts((-3, 4), (5, 7), (0, 1), (1, 9));
        assert_eq!(Exact::from_json(&x.to_json()).unwrap(), x);
        let y = Float::new(0.25, -1.5);
        assert_eq!(Float::from_json(&y.to_json()).unwrap(), y);
        assert!(Exact::from_json(&json!({"a": "1/2"})).is_err());
    }
}
