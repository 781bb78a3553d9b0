//! Forward simulator and analysis toolkit for pulsed electrically detected
//! magnetic resonance (pEDMR) of weakly coupled spin pairs.
//!
//! The crate models one P-Pb0 pair as a 4x4 density matrix with
//! singlet-selective recombination, averages pair observables over the
//! inhomogeneously broadened ensemble, compiles a small pulse-sequence DSL,
//! maps the end-of-sequence spin deviation to a boxcar charge, and fits the
//! resulting decays and line shapes.
//!
//! Everything numeric is generic over the scalar type via [`scalar::Scalar`]
//! (`f32` or `f64`); the aliases below fix `f64` for ordinary use.

pub mod analysis;
pub mod detector;
pub mod ensemble;
pub mod error;
pub mod mat;
pub mod scalar;
pub mod sequence;
pub mod spin;

pub use error::{CoreError, Result};
pub use scalar::Scalar;

/// `f64` instantiations of the core types.
pub type PairState64 = spin::PairState<f64>;
pub type PairParams64 = spin::PairParams<f64>;
pub type SpectralModel64 = ensemble::SpectralModel<f64>;
pub type SpectralLine64 = ensemble::SpectralLine<f64>;
pub type PulseSequence64 = sequence::PulseSequence<f64>;
pub type TransientKernel64 = detector::TransientKernel<f64>;
pub type BoxcarWindow64 = detector::BoxcarWindow<f64>;
pub type Series64 = analysis::Series<f64>;
pub type FitResult64 = analysis::FitResult<f64>;
