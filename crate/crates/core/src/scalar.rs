//! Scalar abstraction shared by the LP engine and the exact oracles.
//!
//! Floating types compare against tolerances; exact rationals use zero
//! tolerance everywhere, so the same pivoting code is exact on them.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

pub trait Scalar: Num + Signed + Clone + PartialOrd + Debug + Display + Send + Sync {
    /// True when arithmetic is exact and tolerances collapse to zero.
    const EXACT: bool;

    fn from_f64(x: f64) -> Self;

    fn to_f64(&self) -> f64;

    /// The scalar used for a nominal tolerance `eps`.
    fn tolerance(eps: f64) -> Self {
        if Self::EXACT {
            Self::zero()
        } else {
            Self::from_f64(eps)
        }
    }

    fn from_usize(n: usize) -> Self {
        Self::from_f64(n as f64)
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn from_f64(x: f64) -> Self {
        x as f32
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    /// Exact binary expansion of the float; non-finite inputs panic.
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite float")
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_usize(n: usize) -> Self {
        BigRational::from_integer(BigInt::from_usize(n).expect("usize fits BigInt"))
    }
}
