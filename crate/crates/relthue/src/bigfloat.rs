//! Arbitrary-precision floating point helpers on top of [`rug`].
//!
//! Precision is specified in decimal digits and mapped to MPFR bits with a
//! fixed guard margin.  The crate-wide policy: quantities computed at `p`
//! digits are trusted to `p/2` digits, and every exactness decision is made
//! in integer arithmetic after a certified rounding step.

use num_bigint::BigInt;
use rug::ops::CompleteRound;
use rug::{Complex, Float, Integer};

/// Working precision in decimal digits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Prec {
    pub digits: u32,
}

impl Prec {
    pub fn new(digits: u32) -> Self {
        Prec {
            digits: digits.max(16),
        }
    }

    /// MPFR mantissa bits: `digits * log2(10)` rounded up, plus 32 guard bits.
    pub fn bits(self) -> u32 {
        (self.digits as f64 * std::f64::consts::LOG2_10).ceil() as u32 + 32
    }

    pub fn double(self) -> Self {
        Prec {
            digits: self.digits * 2,
        }
    }

    /// Half-precision trust threshold `10^(-digits/2)`.
    pub fn eps(self) -> Float {
        let mut e = Float::with_val(self.bits(), 10u32);
        e.pow_assign_i32(-((self.digits / 2) as i32));
        e
    }

    pub fn float(self, v: f64) -> Float {
        Float::with_val(self.bits(), v)
    }

    pub fn zero(self) -> Float {
        Float::with_val(self.bits(), 0)
    }

    pub fn complex(self, re: f64, im: f64) -> Complex {
        Complex::with_val(self.bits(), (re, im))
    }
}

trait PowAssignI32 {
    fn pow_assign_i32(&mut self, e: i32);
}

impl PowAssignI32 for Float {
    fn pow_assign_i32(&mut self, e: i32) {
        use rug::ops::Pow;
        let p = self.prec();
        *self = Float::with_val(p, (&*self).pow(e));
    }
}

pub fn big_to_rug(x: &BigInt) -> Integer {
    Integer::from_str_radix(&x.to_str_radix(16), 16).expect("radix-16 round trip")
}

pub fn rug_to_big(x: &Integer) -> BigInt {
    BigInt::parse_bytes(x.to_string_radix(16).as_bytes(), 16).expect("radix-16 round trip")
}

pub fn big_to_float(x: &BigInt, bits: u32) -> Float {
    Float::with_val(bits, big_to_rug(x))
}

/// Exact rational value of a (finite) binary float.
pub fn float_to_big_rational(x: &Float) -> num_rational::BigRational {
    let r = x.to_rational().expect("finite float");
    let (num, den) = r.into_numer_denom();
    num_rational::BigRational::new(rug_to_big(&num), rug_to_big(&den))
}

/// Nearest integer to `x` together with the rounding distance `|x - n|`.
pub fn round_to_big(x: &Float) -> (BigInt, Float) {
    let n = x
        .round_ref()
        .complete(x.prec())
        .to_integer()
        .expect("finite float");
    let dist = (x - Float::with_val(x.prec(), &n)).abs();
    (rug_to_big(&n), dist)
}

/// `ln` of an arbitrary-size integer at the given precision.
pub fn ln_big(x: &BigInt, bits: u32) -> Float {
    big_to_float(x, bits).ln()
}

/// Outward-rounded upper bound: multiplies a nonnegative quantity by
/// `1 + 10^(-digits/2)` so that downstream comparisons err on the large side.
pub fn round_up(x: &Float) -> Float {
    let p = Prec {
        digits: ((x.prec() as f64 - 32.0) / std::f64::consts::LOG2_10).floor() as u32,
    };
    let one = Float::with_val(x.prec(), 1);
    x.clone() * (one + p.eps())
}

/// Outward-rounded lower bound of a nonnegative quantity.
pub fn round_down(x: &Float) -> Float {
    let p = Prec {
        digits: ((x.prec() as f64 - 32.0) / std::f64::consts::LOG2_10).floor() as u32,
    };
    let one = Float::with_val(x.prec(), 1);
    x.clone() * (one - p.eps())
}

/// Deterministic embedding order: real roots ascending first, then complex
/// roots by (Re, Im) lexicographically.  `im_tol` decides realness.
pub fn cmp_roots(a: &Complex, b: &Complex, im_tol: &Float) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    let a_real = a.imag().clone().abs() < *im_tol;
    let b_real = b.imag().clone().abs() < *im_tol;
    match (a_real, b_real) {
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (true, true) => a.real().partial_cmp(b.real()).unwrap_or(Ordering::Equal),
        (false, false) => a
            .real()
            .partial_cmp(b.real())
            .unwrap_or(Ordering::Equal)
            .then(a.imag().partial_cmp(b.imag()).unwrap_or(Ordering::Equal)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn big_round_trip_preserves_value() {
        let x: BigInt = BigInt::one() << 200usize;
        let x = &x - 12345u32;
        let neg = -x.clone();
        assert_eq!(rug_to_big(&big_to_rug(&x)), x);
        assert_eq!(rug_to_big(&big_to_rug(&neg)), neg);
    }

    #[test]
    fn rounding_reports_distance() {
        let p = Prec::new(50);
        let f = p.float(3.25);
        let (n, d) = round_to_big(&f);
        assert_eq!(n, BigInt::from(3));
        assert!((d - p.float(0.25)).abs() < p.eps());
    }

    #[test]
    fn large_integer_to_float_and_back() {
        let p = Prec::new(200);
        let x: BigInt = (BigInt::one() << 400usize) + 7u32;
        let f = big_to_float(&x, p.bits());
        let (n, d) = round_to_big(&f);
        assert_eq!(n, x);
        assert!(d < p.eps());
    }

    #[test]
    fn root_order_puts_reals_first_ascending() {
        let p = Prec::new(30);
        let tol = p.eps();
        let mut roots = vec![
            p.complex(1.0, 2.0),
            p.complex(-3.0, 0.0),
            p.complex(1.0, -2.0),
            p.complex(2.0, 0.0),
        ];
        roots.sort_by(|a, b| cmp_roots(a, b, &tol));
        assert_eq!(roots[0].real().to_f64(), -3.0);
        assert_eq!(roots[1].real().to_f64(), 2.0);
        assert_eq!(roots[2].imag().to_f64(), -2.0);
        assert_eq!(roots[3].imag().to_f64(), 2.0);
    }
}
