//! Estimation of an unknown unitary channel `U ∈ SU(d)` from one or two uses
//! of a black box.
//!
//! The crate simulates the full estimation pipeline: a probe state is
//! prepared, the black box applies `U` (or `U ⊗ U`) to the probe's `A` side,
//! a measurement on the joint `A ⊗ B` system produces a guess `U_r`, and the
//! guess is scored with the trace fidelity `|tr(U U_r†)|² / d²`.  Averaging
//! over Haar-random `U` reproduces the optimal figures of merit in closed form:
//!
//! | setting                        | average fidelity          |
//! |--------------------------------|---------------------------|
//! | blind guess                    | `1/d²`                    |
//! | one use, product probe         | `(d+2)/((d+1)d²)`         |
//! | one use, maximally entangled   | `2/d²`                    |
//! | two parallel uses, `d = 2`     | `(3+√5)/8 ≈ 0.6545`       |
//!
//! Modules, bottom up:
//!
//! * [`numerics`]: dense complex matrices, Kronecker products, partial traces,
//!   Hermitian eigendecomposition.
//! * [`haar`]: Haar sampling of unitaries, Monte Carlo group averages, SU(2)
//!   axis/angle conversion.
//! * [`probes`]: maximally entangled probes, Schmidt form and the
//!   irrep-weighted probes for parallel uses.
//! * [`strategies`]: discrete and covariant measurements with guesses.
//! * [`fidelity`]: the figure of merit, its Monte Carlo average, and the
//!   analytic reference values.
//! * [`demos`]: the magnetic-field and channel-tuning scenarios.

pub mod demos;
pub mod fidelity;
pub mod haar;
pub mod numerics;
pub mod probes;
pub mod strategies;

pub use fidelity::{Estimate, ReferenceValues};
pub use haar::{AxisAngle, RngStream};
pub use numerics::{ComplexMatrix, PureState, C64};
pub use probes::{IrrepBlock, IrrepDecomposition, SchmidtForm};
pub use strategies::{CovariantSampler, DiscretePovm, Measurement, Strategy};

/// Errors raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("internal consistency error: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
