//! Scalar rings used by the matrix code.
//!
//! Matrices in this crate are generic over [`Ring`]. Exact work uses
//! [`BigRational`] or [`BigInt`]; float work uses `f64`; the positivity
//! pipeline instantiates the same code with [`SparsePoly`] entries.
//!
//! Identity elements are produced from an existing value (`zero_like`,
//! `one_like`) because polynomial identities depend on the variable count.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::polynomial::SparsePoly;

pub trait Ring: Clone + PartialEq + std::fmt::Debug {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn is_zero(&self) -> bool;

    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }
}

/// A ring with exact (or floating) division, used by linear solves.
pub trait Field: Ring {
    /// Exact fields never need a tolerance.
    const EXACT: bool;

    fn div(&self, other: &Self) -> Self;

    /// Magnitude used for pivot selection; exact fields only need "nonzero".
    fn pivot_weight(&self) -> f64;

    /// Strict sign test with the field's own notion of tolerance.
    fn signum_tol(&self, tol: f64) -> i8;

    fn to_f64(&self) -> f64;

    fn from_ratio(num: i64, den: i64) -> Self;
}

impl Ring for BigRational {
    fn zero_like(&self) -> Self {
        BigRational::zero()
    }
    fn one_like(&self) -> Self {
        BigRational::one()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
}

impl Field for BigRational {
    const EXACT: bool = true;

    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn pivot_weight(&self) -> f64 {
        if Zero::is_zero(self) {
            0.0
        } else {
            1.0
        }
    }
    fn signum_tol(&self, _tol: f64) -> i8 {
        if Zero::is_zero(self) {
            0
        } else if self.is_positive() {
            1
        } else {
            -1
        }
    }
    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(num.into(), den.into())
    }
}

impl Ring for BigInt {
    fn zero_like(&self) -> Self {
        BigInt::zero()
    }
    fn one_like(&self) -> Self {
        BigInt::one()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
}

impl Ring for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn one_like(&self) -> Self {
        1.0
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
}

impl Field for f64 {
    const EXACT: bool = false;

    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn pivot_weight(&self) -> f64 {
        self.abs()
    }
    fn signum_tol(&self, tol: f64) -> i8 {
        if *self > tol {
            1
        } else if *self < -tol {
            -1
        } else {
            0
        }
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
}

impl Ring for SparsePoly {
    fn zero_like(&self) -> Self {
        SparsePoly::zero(self.nvars())
    }
    fn one_like(&self) -> Self {
        SparsePoly::one(self.nvars())
    }
    fn add(&self, other: &Self) -> Self {
        self.checked_add(other).expect("polynomial variable counts differ")
    }
    fn neg(&self) -> Self {
        self.negated()
    }
    fn mul(&self, other: &Self) -> Self {
        self.checked_mul(other).expect("polynomial variable counts differ")
    }
    fn is_zero(&self) -> bool {
        self.n_terms() == 0
    }
}

/// Nearest `f64` to a big rational, robust to numerators and denominators
/// beyond the `f64` range.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    let (n, d) = (r.numer(), r.denom());
    let nb = n.bits() as i64;
    let db = d.bits() as i64;
    // Scale so that the quotient keeps ~60 significant bits.
    let shift = 60 - (nb - db);
    let q: BigInt = if shift >= 0 {
        (n << shift as usize) / d
    } else {
        n / (d << (-shift) as usize)
    };
    let qf = q.to_f64().unwrap_or(f64::NAN);
    // Two steps keep the power of two inside the f64 exponent range.
    let half = -shift / 2;
    qf * 2f64.powi(half as i32) * 2f64.powi((-shift - half) as i32)
}
