//! Envelope extraction, stretched-exponential decay fits and unit conversion.

mod envelope;
mod fit;
mod simplex;
mod units;

pub use envelope::{extract_upper_envelope, upper_envelope};
pub use fit::{fit_envelope, EnvelopeFit, FitStatus};
pub use simplex::{minimize_bounded, SimplexOptions, SimplexResult};
pub use units::{quality_factor, to_physical_time, PhysicalScale, HBAR_EV_S};
