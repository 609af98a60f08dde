//! Scalar rings: exact Gaussian rationals, double complex, and the ring trait
//! every engine is generic over.

use alloc::boxed::Box;

use core::fmt;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// Commutative ring with conjugation and a ℚ(i)-algebra structure.
///
/// `inv` returns `None` for non-invertible elements. `conj` is complex
/// conjugation; for jet-valued scalars it also swaps the holomorphic and
/// antiholomorphic fiber variables, matching conjugation of functions.
pub trait Ring: Clone + PartialEq + fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn inv(&self) -> Option<Self>;
    fn conj(&self) -> Self;
    /// Embed an exact Gaussian rational.
    fn from_exact(v: &ExactScalar) -> Self;
    /// Whether equality in this ring is exact (false for floating point).
    fn is_exact() -> bool;

    fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }
    /// Embed a real rational.
    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_exact(&ExactScalar::from_ratio(num, den))
    }
    fn imag_unit() -> Self {
        Self::from_exact(&ExactScalar::i())
    }
    fn scale_ratio(&self, num: i64, den: i64) -> Self {
        self.mul(&Self::from_ratio(num, den))
    }
}

/// Exact rational with an `i64` fast path, promoted to `BigRational` on
/// overflow and demoted back whenever the value fits.
///
/// Invariants: `Small(n, d)` has `d > 0` and `gcd(n, d) = 1`; a `Big` value
/// never fits in the small representation. Equality is therefore structural.
#[derive(Clone, PartialEq, Eq)]
pub enum Rat {
    Small(i64, i64),
    Big(Box<BigRational>),
}

fn gcd_i128(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Rat {
    pub fn zero() -> Self {
        Rat::Small(0, 1)
    }

    pub fn one() -> Self {
        Rat::Small(1, 1)
    }

    pub fn from_i64(v: i64) -> Self {
        Rat::Small(v, 1)
    }

    /// `num/den` reduced to lowest terms. Panics on `den == 0`.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Self::from_i128(num as i128, den as i128)
    }

    fn from_i128(num: i128, den: i128) -> Self {
        debug_assert!(den != 0);
        if num == 0 {
            return Rat::Small(0, 1);
        }
        let sign = if den < 0 { -1 } else { 1 };
        let g = gcd_i128(num, den);
        let n = sign * num / g;
        let d = sign * den / g;
        match (i64::try_from(n), i64::try_from(d)) {
            (Ok(n), Ok(d)) => Rat::Small(n, d),
            _ => Rat::Big(Box::new(BigRational::new(BigInt::from(n), BigInt::from(d)))),
        }
    }

    fn promote(&self) -> BigRational {
        match self {
            Rat::Small(n, d) => BigRational::new(BigInt::from(*n), BigInt::from(*d)),
            Rat::Big(b) => (**b).clone(),
        }
    }

    fn from_big(b: BigRational) -> Self {
        if let (Some(n), Some(d)) = (b.numer().to_i64(), b.denom().to_i64()) {
            Rat::Small(n, d)
        } else {
            Rat::Big(Box::new(b))
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Rat::Small(0, _))
    }

    pub fn add(&self, rhs: &Rat) -> Rat {
        if let (Rat::Small(n1, d1), Rat::Small(n2, d2)) = (self, rhs) {
            let (n1, d1, n2, d2) = (*n1 as i128, *d1 as i128, *n2 as i128, *d2 as i128);
            return Rat::from_i128(n1 * d2 + n2 * d1, d1 * d2);
        }
        Rat::from_big(self.promote() + rhs.promote())
    }

    pub fn neg(&self) -> Rat {
        match self {
            Rat::Small(n, d) => {
                if let Some(m) = n.checked_neg() {
                    Rat::Small(m, *d)
                } else {
                    Rat::from_big(-self.promote())
                }
            }
            Rat::Big(b) => Rat::from_big(-(**b).clone()),
        }
    }

    pub fn sub(&self, rhs: &Rat) -> Rat {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &Rat) -> Rat {
        if let (Rat::Small(n1, d1), Rat::Small(n2, d2)) = (self, rhs) {
            let (n1, d1, n2, d2) = (*n1 as i128, *d1 as i128, *n2 as i128, *d2 as i128);
            return Rat::from_i128(n1 * n2, d1 * d2);
        }
        Rat::from_big(self.promote() * rhs.promote())
    }

    pub fn inv(&self) -> Option<Rat> {
        match self {
            Rat::Small(0, _) => None,
            Rat::Small(n, d) => Some(Rat::from_i128(*d as i128, *n as i128)),
            Rat::Big(b) => Some(Rat::from_big(b.recip())),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Rat::Small(n, d) => *n as f64 / *d as f64,
            Rat::Big(b) => b.to_f64().unwrap_or(f64::NAN),
        }
    }

    /// `(numerator, denominator)` as big integers, lowest terms, den > 0.
    pub fn to_big_parts(&self) -> (BigInt, BigInt) {
        let b = self.promote();
        (b.numer().clone(), b.denom().clone())
    }

    pub fn from_big_parts(num: BigInt, den: BigInt) -> Option<Rat> {
        if den.is_zero() {
            return None;
        }
        Some(Rat::from_big(BigRational::new(num, den)))
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Rat::Small(n, _) => *n < 0,
            Rat::Big(b) => b.is_negative(),
        }
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rat::Small(n, 1) => write!(f, "{n}"),
            Rat::Small(n, d) => write!(f, "{n}/{d}"),
            Rat::Big(b) => write!(f, "{b}"),
        }
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Gaussian rational: exact complex number with rational real and imaginary
/// parts. The default coefficient ring.
#[derive(Clone, PartialEq, Eq)]
pub struct ExactScalar {
    pub re: Rat,
    pub im: Rat,
}

impl ExactScalar {
    pub fn new(re: Rat, im: Rat) -> Self {
        ExactScalar { re, im }
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        ExactScalar { re: Rat::new(num, den), im: Rat::zero() }
    }

    pub fn from_i64(v: i64) -> Self {
        ExactScalar { re: Rat::from_i64(v), im: Rat::zero() }
    }

    /// √−1 as a ring element.
    pub fn i() -> Self {
        ExactScalar { re: Rat::zero(), im: Rat::one() }
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn to_c64(&self) -> Complex<f64> {
        Complex::new(self.re.to_f64(), self.im.to_f64())
    }

    /// |z|^2 = z * conj(z), a rational.
    pub fn norm_sq(&self) -> Rat {
        self.re.mul(&self.re).add(&self.im.mul(&self.im))
    }
}

impl fmt::Debug for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.re.is_zero() {
            write!(f, "{}i", self.im)
        } else {
            write!(f, "({}{}{}i)", self.re, if self.im.is_negative() { "" } else { "+" }, self.im)
        }
    }
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Ring for ExactScalar {
    fn zero() -> Self {
        ExactScalar { re: Rat::zero(), im: Rat::zero() }
    }

    fn one() -> Self {
        ExactScalar { re: Rat::one(), im: Rat::zero() }
    }

    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    fn add(&self, rhs: &Self) -> Self {
        ExactScalar { re: self.re.add(&rhs.re), im: self.im.add(&rhs.im) }
    }

    fn neg(&self) -> Self {
        ExactScalar { re: self.re.neg(), im: self.im.neg() }
    }

    fn mul(&self, rhs: &Self) -> Self {
        ExactScalar {
            re: self.re.mul(&rhs.re).sub(&self.im.mul(&rhs.im)),
            im: self.re.mul(&rhs.im).add(&self.im.mul(&rhs.re)),
        }
    }

    fn inv(&self) -> Option<Self> {
        let n = self.norm_sq().inv()?;
        Some(ExactScalar { re: self.re.mul(&n), im: self.im.mul(&n).neg() })
    }

    fn conj(&self) -> Self {
        ExactScalar { re: self.re.clone(), im: self.im.neg() }
    }

    fn from_exact(v: &ExactScalar) -> Self {
        v.clone()
    }

    fn is_exact() -> bool {
        true
    }
}

/// Double-precision complex scalars, used only by the quadrature harness.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct C64(pub Complex<f64>);

impl C64 {
    pub fn new(re: f64, im: f64) -> Self {
        C64(Complex::new(re, im))
    }

    pub fn abs(&self) -> f64 {
        // avoid relying on std-only hypot in no_std builds
        let (re, im) = (self.0.re, self.0.im);
        libm_hypot(re, im)
    }
}

fn libm_hypot(a: f64, b: f64) -> f64 {
    let (a, b) = (if a < 0.0 { -a } else { a }, if b < 0.0 { -b } else { b });
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if hi == 0.0 {
        return 0.0;
    }
    let r = lo / hi;
    hi * sqrt_newton(1.0 + r * r)
}

fn sqrt_newton(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut g = x;
    for _ in 0..40 {
        g = 0.5 * (g + x / g);
    }
    g
}

impl Ring for C64 {
    fn zero() -> Self {
        C64(Complex::new(0.0, 0.0))
    }

    fn one() -> Self {
        C64(Complex::new(1.0, 0.0))
    }

    fn is_zero(&self) -> bool {
        self.0.re == 0.0 && self.0.im == 0.0
    }

    fn add(&self, rhs: &Self) -> Self {
        C64(self.0 + rhs.0)
    }

    fn neg(&self) -> Self {
        C64(-self.0)
    }

    fn mul(&self, rhs: &Self) -> Self {
        C64(self.0 * rhs.0)
    }

    fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(C64(Complex::new(1.0, 0.0) / self.0))
        }
    }

    fn conj(&self) -> Self {
        C64(self.0.conj())
    }

    fn from_exact(v: &ExactScalar) -> Self {
        C64(v.to_c64())
    }

    fn is_exact() -> bool {
        false
    }
}

/// Tiny exact linear algebra: invert an n×n matrix over a ring.
/// Returns `None` when the matrix is singular (or not invertible over the
/// ring).
pub fn invert_matrix<R: Ring>(m: &[alloc::vec::Vec<R>]) -> Option<alloc::vec::Vec<alloc::vec::Vec<R>>> {
    use alloc::vec::Vec;
    let n = m.len();
    let mut a: Vec<Vec<R>> = Vec::with_capacity(n);
    for (i, row) in m.iter().enumerate() {
        debug_assert_eq!(row.len(), n);
        let mut r = row.clone();
        for j in 0..n {
            r.push(if i == j { R::one() } else { R::zero() });
        }
        a.push(r);
    }
    for col in 0..n {
        let piv = (col..n).find(|&r| {
            // prefer exactly invertible pivots
            a[r][col].inv().is_some()
        })?;
        a.swap(col, piv);
        let pinv = a[col][col].inv()?;
        for j in 0..2 * n {
            a[col][j] = a[col][j].mul(&pinv);
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in 0..2 * n {
                    let s = f.mul(&a[col][j]);
                    a[r][j] = a[r][j].sub(&s);
                }
            }
        }
    }
    Some(a.into_iter().map(|row| row[n..].to_vec()).collect())
}
