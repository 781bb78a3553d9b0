//! Floating-point scalar abstraction.
//!
//! All physics in this crate is generic over the real scalar type through
//! [`Scalar`]; `f32` and `f64` are the supported instantiations. Concrete
//! `f64` type aliases live at the crate root.

use num_traits::{Float, FromPrimitive};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Real scalar type usable for all numerics in this crate: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + Sum + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Convert an `f64` constant, panicking only for genuinely
    /// unrepresentable values (never the case for the physical constants
    /// used here).
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable in scalar type")
    }

    #[inline]
    fn two() -> Self {
        Self::of(2.0)
    }

    #[inline]
    fn half() -> Self {
        Self::of(0.5)
    }

    #[inline]
    fn pi() -> Self {
        Self::of(std::f64::consts::PI)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Physical constants (CODATA 2018), exposed generically.
pub mod constants {
    use super::Scalar;

    /// Planck constant h in J s.
    pub const PLANCK_F64: f64 = 6.62607015e-34;
    /// Bohr magneton in J/T.
    pub const BOHR_MAGNETON_F64: f64 = 9.2740100783e-24;

    pub fn planck<T: Scalar>() -> T {
        T::of(PLANCK_F64)
    }

    pub fn bohr_magneton<T: Scalar>() -> T {
        T::of(BOHR_MAGNETON_F64)
    }

    /// Reduced Planck constant h/2pi in J s.
    pub fn hbar<T: Scalar>() -> T {
        T::of(PLANCK_F64 / (2.0 * std::f64::consts::PI))
    }

    /// Angular gyromagnetic factor g mu_B / hbar in rad/(s T).
    pub fn gyro_angular<T: Scalar>(g: T) -> T {
        g * bohr_magneton::<T>() / hbar::<T>()
    }
}
