//! Free evolution of a double-dot exchange-only qubit under quasi-static
//! magnetic and charge noise.
//!
//! Numerical kernels are generic over [`scalar::Real`] (`f32` or `f64`); the
//! disorder averages, fits and sweeps run in `f64`.

pub mod analysis;
pub mod disorder;
pub mod error;
pub mod io;
pub mod quadrature;
pub mod qubit;
pub mod scalar;
pub mod special;
pub mod sweep;

pub use error::{Error, Result};

pub type ExchangeParams = qubit::ExchangeParams<f64>;
pub type ExchangeParamsF32 = qubit::ExchangeParams<f32>;
pub type ComplexMatrix2 = qubit::ComplexMatrix2<f64>;
pub type ComplexMatrix2F32 = qubit::ComplexMatrix2<f32>;
pub type QubitState = qubit::QubitState<f64>;
pub type QubitStateF32 = qubit::QubitState<f32>;
pub type Coefficients = qubit::Coefficients<f64>;
pub type NoiseSpec = disorder::NoiseSpec<f64>;
pub type NoiseSpecF32 = disorder::NoiseSpec<f32>;

pub use analysis::{EnvelopeFit, FitStatus, PhysicalScale};
pub use disorder::{ProbabilityTrace, QuadratureSpec, TimeGrid};
pub use qubit::InitialState;
