//! Real scalar backends for the root-of-unity sums: plain `f64` and a
//! double-double type carrying about 32 significant digits.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_traits::{FromPrimitive, Num, One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Precision {
    Double,
    DoubleDouble,
}

impl Precision {
    pub fn name(self) -> &'static str {
        match self {
            Precision::Double => "double",
            Precision::DoubleDouble => "double-double",
        }
    }

    pub fn next(self) -> Option<Precision> {
        match self {
            Precision::Double => Some(Precision::DoubleDouble),
            Precision::DoubleDouble => None,
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub trait Real:
    Copy + Send + Sync + fmt::Debug + PartialOrd + Num + Neg<Output = Self> + 'static
{
    const PRECISION: Precision;
    /// Half an ulp of one.
    const UNIT_ROUNDOFF: f64;

    fn from_f64(x: f64) -> Self;
    fn from_bigint(x: &BigInt) -> Self;
    fn to_f64(self) -> f64;
    fn abs(self) -> Self;
    /// Nearest integer and the distance to it.
    fn nearest_integer(self) -> (BigInt, f64);
    /// `exp(2πi·j/m)`.
    fn unit_root(j: u64, m: u64) -> Complex<Self>;

    fn from_i64(x: i64) -> Self {
        Self::from_bigint(&BigInt::from(x))
    }
}

/// `exp(2πi·j/m)` in double precision, exact at multiples of a quarter turn.
fn unit_root_f64(j: u64, m: u64) -> Complex<f64> {
    let j = j % m;
    if (4 * j) % m == 0 {
        return match 4 * j / m {
            0 => Complex::new(1.0, 0.0),
            1 => Complex::new(0.0, 1.0),
            2 => Complex::new(-1.0, 0.0),
            _ => Complex::new(0.0, -1.0),
        };
    }
    let (s, c) = (std::f64::consts::TAU * j as f64 / m as f64).sin_cos();
    Complex::new(c, s)
}

impl Real for f64 {
    const PRECISION: Precision = Precision::Double;
    const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

    fn from_f64(x: f64) -> Self {
        x
    }

    fn from_bigint(x: &BigInt) -> Self {
        x.to_f64().unwrap_or(f64::INFINITY)
    }

    fn to_f64(self) -> f64 {
        self
    }

    fn abs(self) -> Self {
        f64::abs(self)
    }

    fn nearest_integer(self) -> (BigInt, f64) {
        let n = self.round();
        (BigInt::from_f64(n).unwrap_or_default(), (self - n).abs())
    }

    fn unit_root(j: u64, m: u64) -> Complex<Self> {
        unit_root_f64(j, m)
    }
}

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Debug, Clone, Copy, Default, PartialEq, PartialOrd)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        DoubleDouble { hi, lo }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }
}

impl Add for DoubleDouble {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DoubleDouble { hi, lo }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;

    fn neg(self) -> Self {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;

    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;

    fn mul(self, o: Self) -> Self {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = Self;

    fn div(self, o: Self) -> Self {
        let q1 = self.hi / o.hi;
        let r = self - o * DoubleDouble::from(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * DoubleDouble::from(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DoubleDouble { hi, lo } + DoubleDouble::from(q3)
    }
}

impl Rem for DoubleDouble {
    type Output = Self;

    fn rem(self, o: Self) -> Self {
        let q = self / o;
        let t = if q.hi.fract() == 0.0 {
            DoubleDouble::new(q.hi, q.lo.trunc())
        } else {
            DoubleDouble::from(q.hi.trunc())
        };
        self - o * t
    }
}

impl Zero for DoubleDouble {
    fn zero() -> Self {
        DoubleDouble::default()
    }

    fn is_zero(&self) -> bool {
        self.hi == 0.0 && self.lo == 0.0
    }
}

impl One for DoubleDouble {
    fn one() -> Self {
        DoubleDouble::from(1.0)
    }
}

impl Num for DoubleDouble {
    type FromStrRadixErr = std::num::ParseFloatError;

    fn from_str_radix(s: &str, _radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        s.parse::<f64>().map(DoubleDouble::from)
    }
}

impl Real for DoubleDouble {
    const PRECISION: Precision = Precision::DoubleDouble;
    const UNIT_ROUNDOFF: f64 = f64::EPSILON * f64::EPSILON / 4.0;

    fn from_f64(x: f64) -> Self {
        DoubleDouble::from(x)
    }

    fn from_bigint(x: &BigInt) -> Self {
        let hi = x.to_f64().unwrap_or(f64::INFINITY);
        if !hi.is_finite() {
            return DoubleDouble::from(hi);
        }
        let rest = x - BigInt::from_f64(hi).unwrap_or_default();
        DoubleDouble::new(hi, rest.to_f64().unwrap_or(0.0))
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    fn nearest_integer(self) -> (BigInt, f64) {
        let a = self.hi.round();
        // hi - a is exact once |hi| ≥ 1/2; below that a = 0 anyway
        let frac = (self.hi - a) + self.lo;
        let b = frac.round();
        let n = BigInt::from_f64(a).unwrap_or_default() + BigInt::from_f64(b).unwrap_or_default();
        let dist = ((DoubleDouble::new(self.hi - a, self.lo)) - DoubleDouble::from(b)).to_f64();
        (n, dist.abs())
    }

    fn unit_root(j: u64, m: u64) -> Complex<Self> {
        let j = j % m;
        let seed = unit_root_f64(j, m);
        let mut z = Complex::new(DoubleDouble::from(seed.re), DoubleDouble::from(seed.im));
        if (4 * j) % m == 0 {
            return z;
        }
        // Newton on z^m = 1: z ← z - z(w - 1)/(m w), w = z^m
        let one = Complex::new(DoubleDouble::one(), DoubleDouble::zero());
        let order = DoubleDouble::from(m as f64);
        for _ in 0..2 {
            let w = num_traits::pow(z, m as usize);
            let step = z * (w - one) / (w * order);
            z = z - step;
        }
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dd(x: f64) -> DoubleDouble {
        DoubleDouble::from(x)
    }

    #[test]
    fn one_third_carries_a_low_word() {
        let t = dd(1.0) / dd(3.0);
        assert!(t.lo() != 0.0);
        let back = t * dd(3.0) - dd(1.0);
        assert!(back.to_f64().abs() < 1e-31);
    }

    #[test]
    fn sums_keep_bits_lost_in_f64() {
        let big = dd(1e17);
        let s = big + dd(1.0) - big;
        assert_eq!(s.to_f64(), 1.0);
    }

    #[test]
    fn bigint_round_trip_beyond_f64() {
        let x: BigInt = "123456789012345678901234567".parse().unwrap();
        let d = DoubleDouble::from_bigint(&x);
        let (n, dist) = d.nearest_integer();
        let diff = (&n - &x).to_f64().unwrap().abs();
        assert!(diff <= 1.0, "diff {diff}");
        assert!(dist <= 0.5);
        let (n, dist) = DoubleDouble::new(41.0, 0.75).nearest_integer();
        assert_eq!(n, BigInt::from(42));
        assert!((dist - 0.25).abs() < 1e-30);
    }

    #[test]
    fn roots_are_accurate_to_double_double() {
        for m in [3u64, 5, 7, 12, 30, 84] {
            for j in 0..m {
                let z = DoubleDouble::unit_root(j, m);
                let w = num_traits::pow(z, m as usize);
                let err = ((w.re - dd(1.0)).abs() + w.im.abs()).to_f64();
                assert!(err < 1e-29, "m={m} j={j} err={err:e}");
                let f = f64::unit_root(j, m);
                assert!((z.re.to_f64() - f.re).abs() < 1e-15);
                assert!((z.im.to_f64() - f.im).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn quarter_turns_are_exact() {
        assert_eq!(f64::unit_root(1, 4), Complex::new(0.0, 1.0));
        assert_eq!(f64::unit_root(0, 7), Complex::new(1.0, 0.0));
        assert_eq!(f64::unit_root(3, 3), Complex::new(1.0, 0.0));
        assert_eq!(f64::unit_root(6, 12), Complex::new(-1.0, 0.0));
    }
}
