//! Exact arithmetic over dyadic rationals `mantissa * 2^exponent`.
//!
//! Every finite f64 is a dyadic rational, so sums and products of f64-derived
//! quantities can be carried exactly in big-integer mantissas. The ordered
//! upper-bound branch sums are evaluated this way: divisions are deferred by
//! pulling a common integer denominator through the sum, and a single rounding
//! happens at the final conversion back to f64.
//!
//! Arithmetic is implemented on references (like `BigInt` itself) since the
//! mantissas are heap values.

use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;

#[derive(Debug, Clone, PartialEq)]
pub struct Dyadic {
    mantissa: BigInt,
    exponent: i64,
}

impl Dyadic {
    pub fn zero() -> Self {
        Self {
            mantissa: BigInt::from(0),
            exponent: 0,
        }
    }

    pub fn one() -> Self {
        Self {
            mantissa: BigInt::from(1),
            exponent: 0,
        }
    }

    pub fn from_int(value: i64) -> Self {
        Self {
            mantissa: BigInt::from(value),
            exponent: 0,
        }
    }

    pub fn from_bigint(value: BigInt) -> Self {
        Self {
            mantissa: value,
            exponent: 0,
        }
    }

    /// Exact decomposition of a finite f64.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "dyadic conversion requires a finite value");
        if x == 0.0 {
            return Self::zero();
        }
        let bits = x.to_bits();
        let negative = bits >> 63 != 0;
        let exp_bits = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mut mant, mut exp) = if exp_bits == 0 {
            (frac, -1074i64)
        } else {
            (frac | (1u64 << 52), exp_bits - 1075)
        };
        let tz = mant.trailing_zeros() as i64;
        mant >>= tz;
        exp += tz;
        let mut m = BigInt::from(mant);
        if negative {
            m = -m;
        }
        Self {
            mantissa: m,
            exponent: exp,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == BigInt::from(0)
    }

    pub fn mul_bigint(&self, other: &BigInt) -> Self {
        Self {
            mantissa: &self.mantissa * other,
            exponent: self.exponent,
        }
    }

    /// Powers base^0 ..= base^max, computed once and reused.
    pub fn power_table(base: &Self, max: usize) -> Vec<Self> {
        let mut table = Vec::with_capacity(max + 1);
        table.push(Self::one());
        for i in 1..=max {
            table.push(&table[i - 1] * base);
        }
        table
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;

    fn neg(self) -> Dyadic {
        Dyadic {
            mantissa: -self.mantissa.clone(),
            exponent: self.exponent,
        }
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;

    fn add(self, other: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.exponent == other.exponent {
            Dyadic {
                mantissa: &self.mantissa + &other.mantissa,
                exponent: self.exponent,
            }
        } else if self.exponent > other.exponent {
            let shift = (self.exponent - other.exponent) as usize;
            Dyadic {
                mantissa: (&self.mantissa << shift) + &other.mantissa,
                exponent: other.exponent,
            }
        } else {
            let shift = (other.exponent - self.exponent) as usize;
            Dyadic {
                mantissa: &self.mantissa + (&other.mantissa << shift),
                exponent: self.exponent,
            }
        }
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;

    fn sub(self, other: &Dyadic) -> Dyadic {
        self + &(-other)
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;

    fn mul(self, other: &Dyadic) -> Dyadic {
        Dyadic {
            mantissa: &self.mantissa * &other.mantissa,
            exponent: self.exponent + other.exponent,
        }
    }
}

/// Rounds `num / den` to f64, tolerating magnitudes far outside the f64
/// exponent range in the intermediates. Only the final value must be
/// representable.
pub fn dyadic_ratio_to_f64(num: &Dyadic, den: &Dyadic) -> f64 {
    assert!(!den.is_zero(), "dyadic ratio denominator must be nonzero");
    if num.is_zero() {
        return 0.0;
    }
    let (nf, ne) = top_bits(&num.mantissa);
    let (df, de) = top_bits(&den.mantissa);
    let mut value = nf / df;
    let mut scale = (num.exponent + ne) - (den.exponent + de);
    // Apply the power-of-two scale in chunks that cannot overflow: when
    // scaling up the intermediates stay below the final value, when scaling
    // down they start at |nf/df| <= 2^110.
    while scale > 0 {
        let step = scale.min(512);
        value *= 2f64.powi(step as i32);
        scale -= step;
    }
    while scale < 0 {
        let step = (-scale).min(512);
        value *= 2f64.powi(-(step as i32));
        scale += step;
    }
    value
}

/// Top ~110 bits of the mantissa as f64, plus the power of two dropped.
fn top_bits(mant: &BigInt) -> (f64, i64) {
    let (sign, mag) = (mant.sign(), mant.magnitude());
    let bits = mag.bits() as i64;
    let keep = 110i64;
    let (reduced, dropped) = if bits > keep {
        (mag >> (bits - keep) as usize, bits - keep)
    } else {
        (mag.clone(), 0)
    };
    let mut value = u128::try_from(&reduced).expect("reduced mantissa fits u128") as f64;
    if sign == num_bigint::Sign::Minus {
        value = -value;
    }
    (value, dropped)
}
