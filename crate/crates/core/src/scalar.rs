//! Scalar abstraction so the linear algebra and Newton recurrences run over
//! plain floats, jets, and exact rationals with one implementation.
//!
//! Constants are derived from an existing element (`zero_like`, `one_like`)
//! because a jet constant needs the variable-count context of its table;
//! there is no free-standing `zero()`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::GeomError;
use crate::jets::Jet3;

/// Commutative-ring operations plus exact division by small naturals, which
/// is all the Newton-identity recurrence needs.
pub trait RingScalar: Clone + std::fmt::Debug {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Division by a positive integer (exact for rationals).
    fn div_nat(&self, k: u32) -> Self;
}

/// Scalars with enough analysis for pivoted elimination and normalization:
/// a numeric magnitude for pivot choice, reciprocals, and square roots.
pub trait Scalar: RingScalar {
    /// Signed value slot: the number itself for floats, the constant
    /// coefficient for jets.  Sign decisions (causal character of a frame
    /// vector, pivot orientation) are made on this.
    fn val(&self) -> f64;
    /// Magnitude used for pivot selection and degeneracy thresholds.  For a
    /// jet this is the absolute value of its value slot: invertibility of a
    /// truncated jet is exactly invertibility of its value.
    fn mag(&self) -> f64 {
        self.val().abs()
    }
    /// Magnitude used when the scalar is the residual of an identity.  For a
    /// jet this covers every Taylor coefficient, so a vanishing residual
    /// means the identity holds as a local function, not just at the point.
    fn resid_mag(&self) -> f64 {
        self.mag()
    }
    fn recip(&self) -> Result<Self, GeomError>;
    fn sqrt(&self) -> Result<Self, GeomError>;
    fn scale(&self, k: f64) -> Self;
}

impl RingScalar for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn one_like(&self) -> Self {
        1.0
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn div_nat(&self, k: u32) -> Self {
        self / k as f64
    }
}

impl Scalar for f64 {
    fn val(&self) -> f64 {
        *self
    }
    fn recip(&self) -> Result<Self, GeomError> {
        if *self == 0.0 {
            return Err(GeomError::Singular { context: "inverting a zero scalar", pivot: 0.0 });
        }
        Ok(1.0 / self)
    }
    fn sqrt(&self) -> Result<Self, GeomError> {
        if *self <= 0.0 {
            return Err(GeomError::Singular {
                context: "square root of a non-positive scalar",
                pivot: *self,
            });
        }
        Ok(f64::sqrt(*self))
    }
    fn scale(&self, k: f64) -> Self {
        self * k
    }
}

impl RingScalar for Jet3 {
    fn zero_like(&self) -> Self {
        Jet3::zero_like(self)
    }
    fn one_like(&self) -> Self {
        self.constant_like(1.0)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        Jet3::mul(self, rhs)
    }
    fn neg(&self) -> Self {
        -self
    }
    fn div_nat(&self, k: u32) -> Self {
        self.scale(1.0 / k as f64)
    }
}

impl Scalar for Jet3 {
    fn val(&self) -> f64 {
        self.value()
    }
    fn resid_mag(&self) -> f64 {
        self.max_abs_coeff()
    }
    fn recip(&self) -> Result<Self, GeomError> {
        Ok(Jet3::recip(self)?)
    }
    fn sqrt(&self) -> Result<Self, GeomError> {
        Ok(Jet3::sqrt(self)?)
    }
    fn scale(&self, k: f64) -> Self {
        Jet3::scale(self, k)
    }
}

impl RingScalar for BigRational {
    fn zero_like(&self) -> Self {
        BigRational::zero()
    }
    fn one_like(&self) -> Self {
        BigRational::one()
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn div_nat(&self, k: u32) -> Self {
        self / BigRational::from_integer(BigInt::from(k))
    }
}
