//! Complex coefficients: exact rational pairs with a floating fallback.
//!
//! Arithmetic between two exact values stays exact. Any operation touching a
//! float produces a float.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;
pub type CQ = Complex<BigRational>;

#[derive(Clone, Debug)]
pub enum Scalar {
    Exact(CQ),
    Float(Complex64),
}

pub fn q(n: i64, d: i64) -> Q {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Exact(CQ::new(Q::zero(), Q::zero()))
    }

    pub fn one() -> Self {
        Scalar::int(1)
    }

    pub fn int(n: i64) -> Self {
        Scalar::Exact(CQ::new(Q::from_integer(n.into()), Q::zero()))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Scalar::Exact(CQ::new(q(n, d), Q::zero()))
    }

    pub fn rational(r: Q) -> Self {
        Scalar::Exact(CQ::new(r, Q::zero()))
    }

    pub fn exact(re: Q, im: Q) -> Self {
        Scalar::Exact(CQ::new(re, im))
    }

    pub fn i() -> Self {
        Scalar::Exact(CQ::new(Q::zero(), Q::one()))
    }

    pub fn float(x: f64) -> Self {
        Scalar::Float(Complex64::new(x, 0.0))
    }

    pub fn cfloat(z: Complex64) -> Self {
        Scalar::Float(z)
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(z) => z.re.is_zero() && z.im.is_zero(),
            Scalar::Float(z) => z.re == 0.0 && z.im == 0.0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Exact(z) => z.re.is_one() && z.im.is_zero(),
            Scalar::Float(z) => z.re == 1.0 && z.im == 0.0,
        }
    }

    pub fn to_c64(&self) -> Complex64 {
        match self {
            Scalar::Exact(z) => Complex64::new(qf(&z.re), qf(&z.im)),
            Scalar::Float(z) => *z,
        }
    }

    pub fn abs(&self) -> f64 {
        self.to_c64().norm()
    }

    /// Real rational part, if the value is exact and real.
    pub fn as_real_rational(&self) -> Option<Q> {
        match self {
            Scalar::Exact(z) if z.im.is_zero() => Some(z.re.clone()),
            _ => None,
        }
    }

    pub fn to_float(&self) -> Scalar {
        Scalar::Float(self.to_c64())
    }

    pub fn conj(&self) -> Scalar {
        match self {
            Scalar::Exact(z) => Scalar::Exact(z.conj()),
            Scalar::Float(z) => Scalar::Float(z.conj()),
        }
    }

    pub fn inv(&self) -> Scalar {
        Scalar::one() / self.clone()
    }

    pub fn powi(&self, n: i32) -> Scalar {
        let base = if n < 0 { self.inv() } else { self.clone() };
        let mut acc = Scalar::one();
        for _ in 0..n.unsigned_abs() {
            acc = acc * base.clone();
        }
        acc
    }

    /// Square root of a non-negative real value; exact when both numerator and
    /// denominator are perfect squares, otherwise a float.
    pub fn sqrt_real(&self) -> Scalar {
        if let Some(r) = self.as_real_rational() {
            if !r.is_negative() {
                let n = r.numer().sqrt();
                let d = r.denom().sqrt();
                if &n * &n == *r.numer() && &d * &d == *r.denom() {
                    return Scalar::rational(BigRational::new(n, d));
                }
            }
        }
        Scalar::Float(self.to_c64().sqrt())
    }

    /// Approximate equality with a combined absolute/relative tolerance.
    pub fn approx_eq(&self, other: &Scalar, tol: f64) -> bool {
        let a = self.to_c64();
        let b = other.to_c64();
        (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
    }
}

fn qf(r: &Q) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Exact conversion of a finite f64 to a rational.
pub fn rational_from_f64(x: f64) -> Option<Q> {
    BigRational::from_float(x)
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a == b,
            _ => self.to_c64() == other.to_c64(),
        }
    }
}

impl Default for Scalar {
    fn default() -> Self {
        Scalar::zero()
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::int(n)
    }
}

impl From<Q> for Scalar {
    fn from(r: Q) -> Self {
        Scalar::rational(r)
    }
}

impl From<Complex64> for Scalar {
    fn from(z: Complex64) -> Self {
        Scalar::Float(z)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr for Scalar {
            type Output = Scalar;
            fn $m(self, rhs: Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a $op b),
                    (a, b) => Scalar::Float(a.to_c64() $op b.to_c64()),
                }
            }
        }
        impl<'a> $tr<&'a Scalar> for &'a Scalar {
            type Output = Scalar;
            fn $m(self, rhs: &Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a $op b),
                    (a, b) => Scalar::Float(a.to_c64() $op b.to_c64()),
                }
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Div for Scalar {
    type Output = Scalar;
    fn div(self, rhs: Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => {
                assert!(!(b.re.is_zero() && b.im.is_zero()), "division by exact zero");
                let den = &b.re * &b.re + &b.im * &b.im;
                let num = a * b.conj();
                Scalar::Exact(CQ::new(num.re / &den, num.im / &den))
            }
            (a, b) => Scalar::Float(a.to_c64() / b.to_c64()),
        }
    }
}

impl<'a> Div<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn div(self, rhs: &Scalar) -> Scalar {
        self.clone() / rhs.clone()
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(a) => Scalar::Exact(-a),
            Scalar::Float(a) => Scalar::Float(-a),
        }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -(self.clone())
    }
}

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, rhs: &Scalar) {
        *self = &*self + rhs;
    }
}

impl SubAssign<&Scalar> for Scalar {
    fn sub_assign(&mut self, rhs: &Scalar) {
        *self = &*self - rhs;
    }
}

impl MulAssign<&Scalar> for Scalar {
    fn mul_assign(&mut self, rhs: &Scalar) {
        *self = &*self * rhs;
    }
}

fn fmt_q(r: &Q) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(z) => {
                if z.im.is_zero() {
                    write!(f, "{}", fmt_q(&z.re))
                } else if z.re.is_zero() {
                    write!(f, "{}i", fmt_q(&z.im))
                } else {
                    let sign = if z.im.is_negative() { "-" } else { "+" };
                    write!(f, "({}{}{}i)", fmt_q(&z.re), sign, fmt_q(&z.im.abs()))
                }
            }
            Scalar::Float(z) => write!(f, "f({:e},{:e})", z.re, z.im),
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("cannot parse scalar `{0}`")]
pub struct ScalarParseError(pub String);

fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        Some(BigRational::new(n, d))
    } else if s.contains('.') || s.contains('e') || s.contains('E') {
        decimal_to_q(s)
    } else {
        Some(BigRational::from_integer(s.parse().ok()?))
    }
}

/// Decimal literals such as `0.25` or `1e-3` parsed exactly.
fn decimal_to_q(s: &str) -> Option<Q> {
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(p) => (&s[..p], s[p + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let neg = mant.starts_with('-');
    let mant = mant.trim_start_matches(['-', '+']);
    let (ip, fp) = mant.split_once('.').unwrap_or((mant, ""));
    if !ip.chars().chain(fp.chars()).any(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{}{}", if ip.is_empty() { "0" } else { ip }, fp).parse().ok()?;
    let scale = exp - fp.len() as i32;
    let ten = BigInt::from(10);
    let mut r = BigRational::from_integer(digits);
    if scale >= 0 {
        r *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if neg { -r } else { r })
}

/// Parses a rational literal: integer, `p/q`, or a finite decimal.
pub fn parse_rational(s: &str) -> Option<Q> {
    parse_q(s)
}

impl FromStr for Scalar {
    type Err = ScalarParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ScalarParseError(s.to_string());
        let t = s.trim();
        if let Some(inner) = t.strip_prefix("f(").and_then(|r| r.strip_suffix(')')) {
            let (a, b) = inner.split_once(',').ok_or_else(err)?;
            let re: f64 = a.trim().parse().map_err(|_| err())?;
            let im: f64 = b.trim().parse().map_err(|_| err())?;
            return Ok(Scalar::Float(Complex64::new(re, im)));
        }
        let t = t.strip_prefix('(').and_then(|r| r.strip_suffix(')')).unwrap_or(t);
        if let Some(im) = t.strip_suffix('i') {
            // find the split between real and imaginary parts
            let bytes = im.as_bytes();
            let mut split = None;
            for k in (1..bytes.len()).rev() {
                if (bytes[k] == b'+' || bytes[k] == b'-') && bytes[k - 1] != b'e' && bytes[k - 1] != b'E' {
                    split = Some(k);
                    break;
                }
            }
            let (re, im) = match split {
                Some(k) => (parse_q(&im[..k]).ok_or_else(err)?, &im[k..]),
                None => (Q::zero(), im),
            };
            let im = match im.trim() {
                "" | "+" => Q::one(),
                "-" => -Q::one(),
                x => parse_q(x).ok_or_else(err)?,
            };
            return Ok(Scalar::Exact(CQ::new(re, im)));
        }
        Ok(Scalar::rational(parse_q(t).ok_or_else(err)?))
    }
}
