//! JSON run configurations. Every section has defaults; unknown keys are rejected.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::analysis::PhysicalScale;
use crate::disorder::{Averaging, NoiseSpec, QuadratureSpec, TimeGrid};
use crate::error::{Error, Result};
use crate::qubit::{ExchangeParams, InitialState};
use crate::sweep::{CellSettings, MaterialSettings, SweepGrid};

pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Quadrature,
    Mc,
}

impl std::str::FromStr for MethodName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadrature" => Ok(MethodName::Quadrature),
            "mc" => Ok(MethodName::Mc),
            other => Err(Error::invalid(
                "method",
                format!("unknown method `{other}` (expected quadrature|mc)"),
            )),
        }
    }
}

/// Noise widths; the means default to the couplings of the exchange parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub sigma_e: f64,
    pub sigma_j1: f64,
    pub sigma_j2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j01: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j02: Option<f64>,
}

impl NoiseConfig {
    pub fn resolve(&self, params: &ExchangeParams<f64>) -> NoiseSpec<f64> {
        NoiseSpec {
            sigma_e: self.sigma_e,
            sigma_j1: self.sigma_j1,
            sigma_j2: self.sigma_j2,
            j01: self.j01.unwrap_or(params.j1),
            j02: self.j02.unwrap_or(params.j2),
        }
    }
}

/// Settings of `simulate`, and of `fit` when it runs its own simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub params: ExchangeParams<f64>,
    pub noise: NoiseConfig,
    pub initial: InitialState,
    pub time: TimeGrid,
    pub method: MethodName,
    pub quadrature: QuadratureSpec,
    pub samples: usize,
    pub seed: u64,
    /// Exchange scale in eV; enables the `t_seconds` column.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j0_ev: Option<f64>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            params: ExchangeParams::reference(),
            noise: NoiseConfig::default(),
            initial: InitialState::Zero,
            time: TimeGrid::default(),
            method: MethodName::Quadrature,
            quadrature: QuadratureSpec::default(),
            samples: DEFAULT_MC_SAMPLES,
            seed: 0,
            j0_ev: None,
        }
    }
}

impl SimulateConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.noise().validate()?;
        self.time.validate()?;
        self.quadrature.validate()?;
        if self.samples == 0 {
            return Err(Error::invalid("samples", "must be at least 1"));
        }
        if let Some(j0) = self.j0_ev {
            PhysicalScale::new(j0)?;
        }
        Ok(())
    }

    pub fn noise(&self) -> NoiseSpec<f64> {
        self.noise.resolve(&self.params)
    }

    pub fn averaging(&self) -> Averaging {
        match self.method {
            MethodName::Quadrature => Averaging::Quadrature(self.quadrature),
            MethodName::Mc => Averaging::MonteCarlo {
                samples: self.samples,
                seed: self.seed,
            },
        }
    }
}

/// Settings of `fit`: either an existing trace file or an inline simulation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulateConfig>,
    /// Pins the envelope at `t = 0`; defaults to 1 for zero-state traces.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j0_ev: Option<f64>,
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        match (&self.trace, &self.simulation) {
            (Some(_), Some(_)) => {
                return Err(Error::invalid("trace", "give either `trace` or `simulation`, not both"))
            }
            (None, None) => return Err(Error::invalid("trace", "one of `trace` or `simulation` is required")),
            (None, Some(sim)) => sim.validate()?,
            (Some(_), None) => {}
        }
        if let Some(s) = self.fixed_start {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::invalid("fixed_start", "must lie in [0, 1]"));
            }
        }
        if let Some(j0) = self.j0_ev {
            PhysicalScale::new(j0)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub sigma_e_values: Vec<f64>,
    pub sigma_j_values: Vec<f64>,
    pub params: ExchangeParams<f64>,
    pub initial: InitialState,
    pub time: TimeGrid,
    pub quadrature: QuadratureSpec,
    /// Exchange scale in eV; enables the `t2_star_seconds` column.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j0_ev: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let g = SweepGrid::default();
        Self {
            sigma_e_values: g.sigma_e_values,
            sigma_j_values: g.sigma_j_values,
            params: g.settings.params,
            initial: g.settings.initial,
            time: g.settings.time,
            quadrature: g.settings.quadrature,
            j0_ev: None,
        }
    }
}

impl SweepConfig {
    pub fn grid(&self) -> SweepGrid {
        SweepGrid {
            sigma_e_values: self.sigma_e_values.clone(),
            sigma_j_values: self.sigma_j_values.clone(),
            settings: CellSettings {
                params: self.params,
                initial: self.initial,
                time: self.time,
                quadrature: self.quadrature,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid().validate()?;
        if let Some(j0) = self.j0_ev {
            PhysicalScale::new(j0)?;
        }
        Ok(())
    }
}

/// Settings of `materials`; see [`MaterialSettings`].
pub type MaterialsConfig = MaterialSettings;
