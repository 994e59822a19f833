//! Quasi-static noise model and disorder-averaged return probabilities.
//!
//! The dot-to-dot field offset `delta_e` is Gaussian with standard deviation
//! `sqrt(2) sigma_e`; the couplings `j1`, `j2` are Gaussians truncated to
//! non-negative values. Averages are computed either by deterministic
//! quadrature ([`disorder_average_quadrature`]) or by Monte Carlo
//! ([`disorder_average_mc`]), which serves as an independent cross-check.

mod average;
mod pdf;
mod sampling;
mod spectral;

pub use average::{disorder_average, disorder_average_mc, disorder_average_quadrature, Averaging};
pub use pdf::{pdf_delta_e, pdf_exchange, TruncatedGaussian};
pub use sampling::{sample_noise, NoiseSample};
pub use spectral::SpectralMeasure;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, Error, Result};
use crate::qubit::{ExchangeParams, InitialState};
use crate::scalar::Real;

/// Widths and means of the three noise distributions, in units of `j0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec<T> {
    /// `delta_e` has standard deviation `sqrt(2) * sigma_e`.
    pub sigma_e: T,
    pub sigma_j1: T,
    pub sigma_j2: T,
    /// Mean of the (untruncated) Gaussian for `j1`.
    pub j01: T,
    pub j02: T,
}

impl<T: Real> NoiseSpec<T> {
    /// Noise-free spec around the reference couplings `j01 = 0.5`, `j02 = 1.5`.
    pub fn noiseless() -> Self {
        Self {
            sigma_e: T::zero(),
            sigma_j1: T::zero(),
            sigma_j2: T::zero(),
            j01: T::lit(0.5),
            j02: T::lit(1.5),
        }
    }

    /// Reference means with `sigma_j1 = sigma_j2 = sigma_j`.
    pub fn symmetric(sigma_e: T, sigma_j: T) -> Self {
        Self {
            sigma_e,
            sigma_j1: sigma_j,
            sigma_j2: sigma_j,
            ..Self::noiseless()
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("sigma_e", self.sigma_e)?;
        ensure_non_negative("sigma_j1", self.sigma_j1)?;
        ensure_non_negative("sigma_j2", self.sigma_j2)?;
        ensure_non_negative("j01", self.j01)?;
        ensure_non_negative("j02", self.j02)?;
        Ok(())
    }

    /// Standard deviation of `delta_e`.
    pub fn delta_e_std(&self) -> T {
        T::SQRT_2() * self.sigma_e
    }

    /// Exchange parameters with the couplings set to their means.
    pub fn mean_params(&self, p: &ExchangeParams<T>) -> ExchangeParams<T> {
        p.with_couplings(self.j01, self.j02)
    }
}

impl<T: Real> Default for NoiseSpec<T> {
    fn default() -> Self {
        Self::noiseless()
    }
}

/// Resolution controls of the deterministic disorder average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    /// Gauss-Legendre nodes per panel.
    pub nodes_per_panel: usize,
    /// Largest phase `t_max * omega` swept across one panel, in radians.
    pub panel_phase: f64,
    /// Half-range of each noise variable in units of its standard deviation.
    pub truncation_width: f64,
    /// Relative tolerance of the adaptive angular integration.
    pub angular_tolerance: f64,
    /// Recompute at doubled resolution and flag points that move by more than
    /// [`QuadratureSpec::CONVERGENCE_LIMIT`].
    pub check_convergence: bool,
}

impl QuadratureSpec {
    pub const CONVERGENCE_LIMIT: f64 = 1e-5;

    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_panel == 0 {
            return Err(Error::invalid("nodes_per_panel", "must be at least 1"));
        }
        if !(self.panel_phase.is_finite() && self.panel_phase > 0.0) {
            return Err(Error::invalid("panel_phase", "must be positive"));
        }
        if !(self.truncation_width.is_finite() && self.truncation_width > 0.0) {
            return Err(Error::invalid("truncation_width", "must be positive"));
        }
        if !(self.angular_tolerance.is_finite() && self.angular_tolerance > 0.0) {
            return Err(Error::invalid("angular_tolerance", "must be positive"));
        }
        Ok(())
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            nodes_per_panel: 12,
            panel_phase: 2.0,
            truncation_width: 6.0,
            angular_tolerance: 1e-10,
            check_convergence: true,
        }
    }
}

/// Uniform time grid `t_k = k * t_max / (n_points - 1)`, in units of `hbar / j0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_max: f64,
    pub n_points: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, n_points: usize) -> Result<Self> {
        let g = Self { t_max, n_points };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(Error::invalid("t_max", "must be positive and finite"));
        }
        if self.n_points < 2 {
            return Err(Error::invalid("n_points", "must be at least 2"));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        self.t_max / (self.n_points - 1) as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let dt = self.step();
        (0..self.n_points)
            .map(|k| if k + 1 == self.n_points { self.t_max } else { k as f64 * dt })
            .collect()
    }
}

impl Default for TimeGrid {
    /// `[0, 200]` with 8001 points.
    fn default() -> Self {
        Self {
            t_max: 200.0,
            n_points: 8001,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AverageMethod {
    Quadrature,
    MonteCarlo,
}

impl AverageMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            AverageMethod::Quadrature => "quadrature",
            AverageMethod::MonteCarlo => "monte-carlo",
        }
    }
}

/// Diagnostics of a quadrature run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureReport {
    pub nodes: usize,
    /// Largest change of any point under doubled resolution; `None` when not checked.
    pub max_refinement_change: Option<f64>,
    /// `false` when the refinement check moved some point by more than the limit.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub initial: InitialState,
    pub params: ExchangeParams<f64>,
    pub noise: NoiseSpec<f64>,
    pub method: AverageMethod,
    pub quadrature: Option<QuadratureReport>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

/// Uniformly sampled (disorder-averaged) return probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Per-point Monte Carlo standard errors.
    pub std_errors: Option<Vec<f64>>,
    pub meta: TraceMeta,
}

impl ProbabilityTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `true` when the times are strictly increasing with a constant step (relative tolerance 1e-9).
    pub fn is_uniform(&self) -> bool {
        if self.times.len() < 2 {
            return true;
        }
        let dt = self.times[1] - self.times[0];
        if dt <= 0.0 {
            return false;
        }
        self.times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.max(w[1].abs()))
    }
}
