//! Coefficients: exact rationals, with an `f64` escape hatch.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A numeric constant. Arithmetic stays exact while both operands are
/// rational; anything touching a float becomes a float.
#[derive(Clone, Debug)]
pub enum Number {
    Rational(BigRational),
    Float(f64),
}

impl Number {
    pub fn zero() -> Self {
        Number::Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Number::Rational(BigRational::one())
    }

    pub fn int(n: i64) -> Self {
        Number::Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Number::Rational(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn from_f64(v: f64) -> Self {
        Number::Float(v)
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Number::Rational(r) => r.is_zero(),
            Number::Float(f) => *f == 0.0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Number::Rational(r) => r.is_one(),
            Number::Float(f) => *f == 1.0,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Number::Rational(r) => r.is_negative(),
            Number::Float(f) => *f < 0.0,
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, Number::Rational(_))
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Number::Rational(r) => Some(r),
            Number::Float(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Rational(r) => ratio_to_f64(r),
            Number::Float(f) => *f,
        }
    }

    pub fn abs(&self) -> Number {
        match self {
            Number::Rational(r) => Number::Rational(r.abs()),
            Number::Float(f) => Number::Float(f.abs()),
        }
    }

    pub fn add(&self, other: &Number) -> Number {
        match (self, other) {
            (Number::Rational(a), Number::Rational(b)) => Number::Rational(a + b),
            _ => Number::Float(self.to_f64() + other.to_f64()),
        }
    }

    pub fn sub(&self, other: &Number) -> Number {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Number) -> Number {
        match (self, other) {
            (Number::Rational(a), Number::Rational(b)) => Number::Rational(a * b),
            _ => Number::Float(self.to_f64() * other.to_f64()),
        }
    }

    /// Division; `None` on an exact zero divisor.
    pub fn div(&self, other: &Number) -> Option<Number> {
        match (self, other) {
            (Number::Rational(a), Number::Rational(b)) => {
                if b.is_zero() {
                    None
                } else {
                    Some(Number::Rational(a / b))
                }
            }
            _ => Some(Number::Float(self.to_f64() / other.to_f64())),
        }
    }

    pub fn neg(&self) -> Number {
        match self {
            Number::Rational(r) => Number::Rational(-r),
            Number::Float(f) => Number::Float(-f),
        }
    }

    /// `self^p`. Exact when the result is rational (integer `p`, or a
    /// perfect root); `None` when it is not representable exactly.
    pub fn pow_exact(&self, p: &BigRational) -> Option<Number> {
        match self {
            Number::Float(f) => Some(Number::Float(f.powf(ratio_to_f64(p)))),
            Number::Rational(r) => {
                if p.is_integer() {
                    let e = p.to_integer();
                    if r.is_zero() && e.is_negative() {
                        return None;
                    }
                    let e = e.to_i32()?;
                    Some(Number::Rational(pow_int(r, e)))
                } else {
                    if r.is_negative() {
                        return None;
                    }
                    // Perfect roots only: (a/b)^(m/n) with a, b perfect n-th powers.
                    let n = p.denom().to_u32()?;
                    let num_root = r.numer().nth_root(n);
                    let den_root = r.denom().nth_root(n);
                    if num_root.pow(n) != *r.numer() || den_root.pow(n) != *r.denom() {
                        return None;
                    }
                    let root = BigRational::new(num_root, den_root);
                    let m = p.numer().to_i32()?;
                    Some(Number::Rational(pow_int(&root, m)))
                }
            }
        }
    }

    pub fn powf(&self, p: f64) -> Number {
        Number::Float(self.to_f64().powf(p))
    }
}

pub(crate) fn pow_int(r: &BigRational, e: i32) -> BigRational {
    if e >= 0 {
        num_traits::pow(r.clone(), e as usize)
    } else {
        num_traits::pow(r.recip(), (-e) as usize)
    }
}

pub(crate) fn ratio_to_f64(r: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
pub(crate) fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub(crate) fn rat_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Exact conversion of a finite float to a rational.
pub fn rational_from_f64(v: f64) -> Option<BigRational> {
    BigRational::from_float(v)
}

impl PartialEq for Number {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Number {}

impl PartialOrd for Number {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Total order: all rationals sort before all floats, floats by `total_cmp`.
impl Ord for Number {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Number::Rational(a), Number::Rational(b)) => a.cmp(b),
            (Number::Float(a), Number::Float(b)) => a.total_cmp(b),
            (Number::Rational(_), Number::Float(_)) => Ordering::Less,
            (Number::Float(_), Number::Rational(_)) => Ordering::Greater,
        }
    }
}

impl Hash for Number {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Number::Rational(r) => {
                0u8.hash(state);
                r.hash(state);
            }
            Number::Float(f) => {
                1u8.hash(state);
                f.to_bits().hash(state);
            }
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Rational(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Number::Float(v) => {
                // Always carry a decimal point or exponent so the text reads as a float.
                let s = format!("{v:?}");
                f.write_str(&s)
            }
        }
    }
}

impl From<i64> for Number {
    fn from(n: i64) -> Self {
        Number::int(n)
    }
}

impl From<BigRational> for Number {
    fn from(r: BigRational) -> Self {
        Number::Rational(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_arithmetic_stays_rational() {
        let a = Number::ratio(1, 3);
        let b = Number::ratio(1, 6);
        assert_eq!(a.add(&b), Number::ratio(1, 2));
        assert_eq!(a.mul(&b), Number::ratio(1, 18));
        assert!(a.add(&b).is_rational());
    }

    #[test]
    fn float_contaminates() {
        let a = Number::ratio(1, 2);
        let b = Number::from_f64(0.25);
        assert!(!a.add(&b).is_rational());
        assert_eq!(a.add(&b).to_f64(), 0.75);
    }

    #[test]
    fn perfect_roots_are_exact() {
        let r = Number::ratio(4, 9);
        assert_eq!(r.pow_exact(&rat(1, 2)), Some(Number::ratio(2, 3)));
        assert_eq!(r.pow_exact(&rat(-1, 2)), Some(Number::ratio(3, 2)));
        assert_eq!(Number::int(2).pow_exact(&rat(1, 2)), None);
        assert_eq!(Number::int(0).pow_exact(&rat_int(-1)), None);
    }

    #[test]
    fn display_forms() {
        assert_eq!(Number::ratio(-3, 2).to_string(), "-3/2");
        assert_eq!(Number::int(7).to_string(), "7");
    }
}
