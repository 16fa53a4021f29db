//! Scalar backends and q-combinatorics.
//!
//! Two backends share one operator layer: exact Gaussian rationals (`Exact`)
//! and complex binary big-floats (`Float`). A [`QPoint`] fixes q through its
//! square root so that every half-integer power of q, and p = i q^{-1/2},
//! stays exact.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use dashu_int::IBig;
use dashu_ratio::RBig;

use crate::error::{Error, Result};

pub type Real = FBig<HalfEven, 2>;

// ---- exact backend ----

/// Gaussian rational `re + im·i`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Exact {
    re: RBig,
    im: RBig,
}

impl Exact {
    pub fn zero() -> Self {
        Exact { re: RBig::ZERO, im: RBig::ZERO }
    }

    pub fn one() -> Self {
        Exact { re: RBig::ONE, im: RBig::ZERO }
    }

    pub fn i() -> Self {
        Exact { re: RBig::ZERO, im: RBig::ONE }
    }

    pub fn new(re: RBig, im: RBig) -> Self {
        Exact { re, im }
    }

    pub fn real(re: RBig) -> Self {
        Exact { re, im: RBig::ZERO }
    }

    pub fn int(n: i64) -> Self {
        Exact::real(RBig::from(n))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Exact::real(RBig::from_parts_signed(IBig::from(num), IBig::from(den)))
    }

    /// Parses `a`, `a/b`, optionally with a leading sign.
    pub fn parse_rational(s: &str) -> Result<Self> {
        let s = s.trim();
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let n: IBig = n.parse().map_err(|_| Error::Usage(format!("not a rational: {s}")))?;
        let d: IBig = d.parse().map_err(|_| Error::Usage(format!("not a rational: {s}")))?;
        if d == IBig::ZERO {
            return Err(Error::Usage(format!("zero denominator in {s}")));
        }
        Ok(Exact::real(RBig::from_parts_signed(n, d)))
    }

    pub fn re(&self) -> &RBig {
        &self.re
    }

    pub fn im(&self) -> &RBig {
        &self.im
    }

    pub fn is_zero(&self) -> bool {
        self.re == RBig::ZERO && self.im == RBig::ZERO
    }

    pub fn is_one(&self) -> bool {
        self.re == RBig::ONE && self.im == RBig::ZERO
    }

    pub fn is_real(&self) -> bool {
        self.im == RBig::ZERO
    }

    pub fn conj(&self) -> Self {
        Exact { re: self.re.clone(), im: -self.im.clone() }
    }

    pub fn norm_sqr(&self) -> RBig {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn inv(&self) -> Self {
        assert!(!self.is_zero(), "inverse of zero");
        if self.is_real() {
            return Exact::real(RBig::ONE / &self.re);
        }
        let n = self.norm_sqr();
        Exact { re: &self.re / &n, im: -(&self.im / &n) }
    }

    pub fn pow(&self, e: i64) -> Self {
        let base = if e < 0 { self.inv() } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = Exact::one();
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &b;
            }
            e >>= 1;
            if e > 0 {
                b = &b * &b;
            }
        }
        acc
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.re.to_f64_fast(), self.im.to_f64_fast())
    }

    pub fn abs_f64(&self) -> f64 {
        let (a, b) = self.to_f64();
        a.hypot(b)
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_real() {
            write!(f, "{}", self.re)
        } else if self.re == RBig::ZERO {
            write!(f, "{}i", self.im)
        } else if self.im < RBig::ZERO {
            write!(f, "{}-{}i", self.re, -self.im.clone())
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

fn exact_mul(a: &Exact, b: &Exact) -> Exact {
    match (a.is_real(), b.is_real()) {
        (true, true) => Exact::real(&a.re * &b.re),
        (true, false) => Exact { re: &a.re * &b.re, im: &a.re * &b.im },
        (false, true) => Exact { re: &a.re * &b.re, im: &a.im * &b.re },
        _ => Exact {
            re: &a.re * &b.re - &a.im * &b.im,
            im: &a.re * &b.im + &a.im * &b.re,
        },
    }
}

fn exact_div(a: &Exact, b: &Exact) -> Exact {
    if b.is_real() {
        Exact { re: &a.re / &b.re, im: &a.im / &b.re }
    } else {
        exact_mul(a, &b.inv())
    }
}

macro_rules! forward_binops {
    ($t:ty, $add:expr, $sub:expr, $mul:expr, $div:expr) => {
        impl Add<&$t> for &$t {
            type Output = $t;
            fn add(self, o: &$t) -> $t {
                $add(self, o)
            }
        }
        impl Sub<&$t> for &$t {
            type Output = $t;
            fn sub(self, o: &$t) -> $t {
                $sub(self, o)
            }
        }
        impl Mul<&$t> for &$t {
            type Output = $t;
            fn mul(self, o: &$t) -> $t {
                $mul(self, o)
            }
        }
        impl Div<&$t> for &$t {
            type Output = $t;
            fn div(self, o: &$t) -> $t {
                $div(self, o)
            }
        }
        impl Add<$t> for $t {
            type Output = $t;
            fn add(self, o: $t) -> $t {
                $add(&self, &o)
            }
        }
        impl Sub<$t> for $t {
            type Output = $t;
            fn sub(self, o: $t) -> $t {
                $sub(&self, &o)
            }
        }
        impl Mul<$t> for $t {
            type Output = $t;
            fn mul(self, o: $t) -> $t {
                $mul(&self, &o)
            }
        }
        impl Div<$t> for $t {
            type Output = $t;
            fn div(self, o: $t) -> $t {
                $div(&self, &o)
            }
        }
        impl Add<$t> for &$t {
            type Output = $t;
            fn add(self, o: $t) -> $t {
                $add(self, &o)
            }
        }
        impl Sub<$t> for &$t {
            type Output = $t;
            fn sub(self, o: $t) -> $t {
                $sub(self, &o)
            }
        }
        impl Mul<$t> for &$t {
            type Output = $t;
            fn mul(self, o: $t) -> $t {
                $mul(self, &o)
            }
        }
        impl Div<$t> for &$t {
            type Output = $t;
            fn div(self, o: $t) -> $t {
                $div(self, &o)
            }
        }
        impl Add<&$t> for $t {
            type Output = $t;
            fn add(self, o: &$t) -> $t {
                $add(&self, o)
            }
        }
        impl Sub<&$t> for $t {
            type Output = $t;
            fn sub(self, o: &$t) -> $t {
                $sub(&self, o)
            }
        }
        impl Mul<&$t> for $t {
            type Output = $t;
            fn mul(self, o: &$t) -> $t {
                $mul(&self, o)
            }
        }
        impl Div<&$t> for $t {
            type Output = $t;
            fn div(self, o: &$t) -> $t {
                $div(&self, o)
            }
        }
    };
}

forward_binops!(
    Exact,
    |a: &Exact, b: &Exact| Exact { re: &a.re + &b.re, im: &a.im + &b.im },
    |a: &Exact, b: &Exact| Exact { re: &a.re - &b.re, im: &a.im - &b.im },
    exact_mul,
    exact_div
);

impl Neg for Exact {
    type Output = Exact;
    fn neg(self) -> Exact {
        Exact { re: -self.re, im: -self.im }
    }
}

impl Neg for &Exact {
    type Output = Exact;
    fn neg(self) -> Exact {
        -self.clone()
    }
}

// ---- float backend ----

pub fn real_from_rbig(x: &RBig, prec: usize) -> Real {
    let n = Real::from_parts(x.numerator().clone(), 0).with_precision(prec).value();
    let d = Real::from_parts(IBig::from(x.denominator().clone()), 0)
        .with_precision(prec)
        .value();
    n / d
}

fn real_zero(prec: usize) -> Real {
    Real::ZERO.with_precision(prec).value()
}

fn real_to_f64(x: &Real) -> f64 {
    x.to_f64().value()
}

/// Complex big-float with a recorded working precision in bits.
#[derive(Clone, Debug)]
pub struct Float {
    re: Real,
    im: Real,
}

impl Float {
    pub fn zero(prec: usize) -> Self {
        Float { re: real_zero(prec), im: real_zero(prec) }
    }

    pub fn from_exact(x: &Exact, prec: usize) -> Self {
        Float { re: real_from_rbig(&x.re, prec), im: real_from_rbig(&x.im, prec) }
    }

    pub fn from_real(re: Real) -> Self {
        let prec = re.precision();
        Float { re, im: real_zero(prec) }
    }

    pub fn re(&self) -> &Real {
        &self.re
    }

    pub fn im(&self) -> &Real {
        &self.im
    }

    pub fn precision(&self) -> usize {
        self.re.precision().max(self.im.precision())
    }

    pub fn is_zero(&self) -> bool {
        self.re.repr().is_zero() && self.im.repr().is_zero()
    }

    pub fn abs_f64(&self) -> f64 {
        real_to_f64(&self.re).hypot(real_to_f64(&self.im))
    }

    pub fn abs_im_f64(&self) -> f64 {
        real_to_f64(&self.im).abs()
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (real_to_f64(&self.re), real_to_f64(&self.im))
    }

    /// Decimal rendering of the real part (and imaginary part when nonzero).
    pub fn to_decimal_string(&self, digits: usize) -> String {
        let f = |x: &Real| -> String {
            if x.repr().is_zero() {
                return "0".into();
            }
            format!("{:.*e}", digits, real_to_f64(x))
        };
        if self.im.repr().is_zero() {
            f(&self.re)
        } else {
            format!("{}+{}i", f(&self.re), f(&self.im))
        }
    }
}

fn float_mul(a: &Float, b: &Float) -> Float {
    if b.im.repr().is_zero() {
        return Float { re: &a.re * &b.re, im: &a.im * &b.re };
    }
    if a.im.repr().is_zero() {
        return Float { re: &a.re * &b.re, im: &a.re * &b.im };
    }
    Float {
        re: &a.re * &b.re - &a.im * &b.im,
        im: &a.re * &b.im + &a.im * &b.re,
    }
}

fn float_div(a: &Float, b: &Float) -> Float {
    if b.im.repr().is_zero() {
        return Float { re: &a.re / &b.re, im: &a.im / &b.re };
    }
    let n = &b.re * &b.re + &b.im * &b.im;
    let conj = Float { re: b.re.clone(), im: -b.im.clone() };
    let t = float_mul(a, &conj);
    Float { re: &t.re / &n, im: &t.im / &n }
}

forward_binops!(
    Float,
    |a: &Float, b: &Float| Float { re: &a.re + &b.re, im: &a.im + &b.im },
    |a: &Float, b: &Float| Float { re: &a.re - &b.re, im: &a.im - &b.im },
    float_mul,
    float_div
);

impl Neg for Float {
    type Output = Float;
    fn neg(self) -> Float {
        Float { re: -self.re, im: -self.im }
    }
}

impl Neg for &Float {
    type Output = Float;
    fn neg(self) -> Float {
        -self.clone()
    }
}

// ---- backend abstraction ----

pub trait Scalar:
    Clone
    + fmt::Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
{
    fn is_zero(&self) -> bool;
    fn abs_f64(&self) -> f64;
    /// "0" for an exact zero, otherwise a decimal rendering.
    fn residual_string(&self) -> String;
}

impl Scalar for Exact {
    fn is_zero(&self) -> bool {
        Exact::is_zero(self)
    }
    fn abs_f64(&self) -> f64 {
        Exact::abs_f64(self)
    }
    fn residual_string(&self) -> String {
        if self.is_zero() {
            "0".into()
        } else {
            format!("{:e}", self.abs_f64())
        }
    }
}

impl Scalar for Float {
    fn is_zero(&self) -> bool {
        Float::is_zero(self)
    }
    fn abs_f64(&self) -> f64 {
        Float::abs_f64(self)
    }
    fn residual_string(&self) -> String {
        if self.is_zero() {
            "0".into()
        } else {
            format!("{:e}", self.abs_f64())
        }
    }
}

/// Maps exact constants into a scalar field.
pub trait Backend: Clone + Send + Sync {
    type S: Scalar;
    fn lift(&self, x: &Exact) -> Self::S;
    fn zero(&self) -> Self::S {
        self.lift(&Exact::zero())
    }
    fn one(&self) -> Self::S {
        self.lift(&Exact::one())
    }
    fn name(&self) -> String;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ExactBackend;

impl Backend for ExactBackend {
    type S = Exact;
    fn lift(&self, x: &Exact) -> Exact {
        x.clone()
    }
    fn name(&self) -> String {
        "exact".into()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FloatBackend {
    pub precision: usize,
}

impl Backend for FloatBackend {
    type S = Float;
    fn lift(&self, x: &Exact) -> Float {
        Float::from_exact(x, self.precision)
    }
    fn name(&self) -> String {
        format!("float{}", self.precision)
    }
}

// ---- q point ----

/// Evaluation point for q, given by `root = q^{1/2}` in (0,1).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QPoint {
    root: RBig,
}

impl QPoint {
    pub fn new(root: RBig) -> Result<Self> {
        if root <= RBig::ZERO || root >= RBig::ONE {
            return Err(Error::Domain(format!("q-root {root} must lie strictly between 0 and 1")));
        }
        Ok(QPoint { root })
    }

    pub fn from_ratio(num: i64, den: i64) -> Result<Self> {
        QPoint::new(RBig::from_parts_signed(IBig::from(num), IBig::from(den)))
    }

    pub fn parse(s: &str) -> Result<Self> {
        QPoint::new(Exact::parse_rational(s)?.re)
    }

    pub fn root(&self) -> Exact {
        Exact::real(self.root.clone())
    }

    pub fn root_rbig(&self) -> &RBig {
        &self.root
    }

    pub fn q(&self) -> Exact {
        self.root_pow(2)
    }

    /// q^{h/2}.
    pub fn root_pow(&self, h: i64) -> Exact {
        let r = if h < 0 { RBig::ONE / &self.root } else { self.root.clone() };
        Exact::real(r.pow(h.unsigned_abs() as usize))
    }

    /// q^k.
    pub fn q_pow(&self, k: i64) -> Exact {
        self.root_pow(2 * k)
    }

    /// p = i q^{-1/2}.
    pub fn p(&self) -> Exact {
        Exact::i() * self.root_pow(-1)
    }

    pub fn p_pow(&self, k: i64) -> Exact {
        let phase = match k.rem_euclid(4) {
            0 => Exact::one(),
            1 => Exact::i(),
            2 => Exact::int(-1),
            _ => -Exact::i(),
        };
        phase * self.root_pow(-k)
    }

    /// The q-integer [m] = (q^m - q^{-m})/(q - q^{-1}).
    pub fn qint(&self, m: i64) -> Exact {
        (self.q_pow(m) - self.q_pow(-m)) / (self.q_pow(1) - self.q_pow(-1))
    }

    pub fn qfactorial(&self, m: i64) -> Exact {
        (1..=m).fold(Exact::one(), |acc, k| acc * self.qint(k))
    }

    /// Bracket binomial [m k] = [m]!/([k]![m-k]!), zero outside 0 ≤ k ≤ m.
    pub fn qbinom_bracket(&self, m: i64, k: i64) -> Exact {
        if k < 0 || k > m {
            return Exact::zero();
        }
        self.qfactorial(m) / (self.qfactorial(k) * self.qfactorial(m - k))
    }

    /// (q^b; q^b)_m.
    pub fn qq(&self, b: i64, m: i64) -> Exact {
        let mut acc = Exact::one();
        for k in 1..=m {
            acc = acc * (Exact::one() - self.q_pow(b * k));
        }
        acc
    }

    /// Pochhammer binomial in base q^b: (q^b)_m / ((q^b)_k (q^b)_{m-k}), zero outside 0 ≤ k ≤ m.
    pub fn qbinom_poch(&self, b: i64, m: i64, k: i64) -> Exact {
        if k < 0 || k > m {
            return Exact::zero();
        }
        self.qq(b, m) / (self.qq(b, k) * self.qq(b, m - k))
    }

    /// (q^{base/2}; q^{step/2})_m with exponents in half units.
    pub fn q_pochhammer(&self, base_half: i64, step_half: i64, m: i64) -> Result<Exact> {
        if m < 0 {
            return Err(Error::Domain(format!("negative Pochhammer length {m}")));
        }
        let mut acc = Exact::one();
        for k in 0..m {
            acc = acc * (Exact::one() - self.root_pow(base_half + k * step_half));
        }
        Ok(acc)
    }

    /// (z; q^{step})_m for an arbitrary exact z.
    pub fn poch(&self, z: &Exact, step: i64, m: i64) -> Exact {
        let mut acc = Exact::one();
        for k in 0..m {
            acc = acc * (Exact::one() - z * &self.q_pow(step * k));
        }
        acc
    }
}

impl fmt::Display for QPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}

/// Big-float (z; q)_∞ at the given precision, truncated once factors fall below 2^{-prec}.
pub fn poch_infinite_float(z: &Float, q: &Float, prec: usize) -> Float {
    let one = Float::from_exact(&Exact::one(), prec);
    let eps = (2f64).powi(-(prec as i32) - 8);
    let mut acc = one.clone();
    let mut term = z.clone();
    for _ in 0..100_000 {
        if term.abs_f64() < eps {
            break;
        }
        acc = acc * (one.clone() - &term);
        term = term * q;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qp() -> QPoint {
        QPoint::from_ratio(1, 2).unwrap()
    }

    #[test]
    fn pochhammer_examples() {
        let q = qp();
        assert!(q.q_pochhammer(2, 2, 0).unwrap().is_one());
        assert_eq!(q.q_pochhammer(4, 2, 1).unwrap(), Exact::ratio(15, 16));
        let want = (Exact::one() - Exact::ratio(1, 256)) * (Exact::one() - Exact::ratio(1, 1024));
        assert_eq!(q.q_pochhammer(8, 2, 2).unwrap(), want);
        let want = (Exact::one() - Exact::ratio(1, 256)) * (Exact::one() - Exact::ratio(1, 65536));
        assert_eq!(q.qq(4, 2), want);
        assert!(q.q_pochhammer(2, 2, -1).is_err());
    }

    #[test]
    fn qint_examples() {
        let q = qp();
        assert!(q.qint(1).is_one());
        assert_eq!(q.qint(2), Exact::ratio(17, 4));
        assert!(q.qbinom_bracket(1, 2).is_zero());
        assert!(q.qbinom_poch(1, 1, 2).is_zero());
        assert!(q.qbinom_poch(2, 3, -1).is_zero());
    }

    #[test]
    fn p_squared() {
        let q = qp();
        let p = q.p();
        assert_eq!(&(&p * &p) * &q.q(), Exact::int(-1));
        assert_eq!(q.p_pow(3), &(&p * &p) * &p);
        assert_eq!(q.p_pow(-2), (&p * &p).inv());
    }

    #[test]
    fn rejects_bad_root() {
        assert!(QPoint::from_ratio(1, 1).is_err());
        assert!(QPoint::from_ratio(0, 1).is_err());
        assert!(QPoint::from_ratio(3, 2).is_err());
    }

    #[test]
    fn display_reduced() {
        assert_eq!(Exact::ratio(30, 32).to_string(), "15/16");
        assert_eq!(Exact::int(-3).to_string(), "-3");
        assert_eq!((Exact::ratio(1, 2) - Exact::i()).to_string(), "1/2-1i");
    }

    #[test]
    fn float_matches_exact() {
        let q = qp();
        let x = q.qq(2, 7) / q.qint(3);
        let f = Float::from_exact(&x, 256);
        let back = f - Float::from_exact(&x, 256);
        assert!(back.abs_f64() == 0.0);
        let g = Float::from_exact(&q.q(), 256) * Float::from_exact(&q.q().inv(), 256);
        assert!((g - Float::from_exact(&Exact::one(), 256)).abs_f64() < 1e-70);
    }

    #[test]
    fn infinite_product_converges() {
        let q = qp();
        let prec = 256;
        let z = Float::from_exact(&Exact::ratio(1, 3), prec);
        let qf = Float::from_exact(&q.q(), prec);
        let a = poch_infinite_float(&z, &qf, prec);
        let b = Float::from_exact(&q.poch(&Exact::ratio(1, 3), 1, 200), prec);
        assert!((a - b).abs_f64() < 1e-70);
    }
}
