use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Reduced Planck constant in eV s.
pub const HBAR_EV_S: f64 = 6.582_119_569e-16;

/// Conversion from dimensionless times (units of `hbar / j0`) to seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalScale {
    pub j0_ev: f64,
    pub time_unit_s: f64,
}

impl PhysicalScale {
    pub fn new(j0_ev: f64) -> Result<Self> {
        if !(j0_ev.is_finite() && j0_ev > 0.0) {
            return Err(Error::invalid("j0_ev", "must be positive and finite"));
        }
        Ok(Self {
            j0_ev,
            time_unit_s: HBAR_EV_S / j0_ev,
        })
    }

    /// Energy in eV expressed in units of `j0`.
    pub fn to_dimensionless_energy(&self, ev: f64) -> f64 {
        ev / self.j0_ev
    }
}

/// `exp(-1 / (j0 T2*))`; 1 for an infinite coherence time.
pub fn quality_factor<T: Real>(j0_t2_star: T) -> T {
    if j0_t2_star.is_infinite() && j0_t2_star > T::zero() {
        return T::one();
    }
    (-j0_t2_star.recip()).exp()
}

pub fn to_physical_time<T: Real>(t: T, scale: &PhysicalScale) -> T {
    t * T::lit(scale.time_unit_s)
}
