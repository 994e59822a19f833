//! Coherence-time maps over noise strengths and material comparisons.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{extract_upper_envelope, fit_envelope, quality_factor, FitStatus, PhysicalScale};
use crate::disorder::{disorder_average_quadrature, NoiseSpec, QuadratureSpec, TimeGrid};
use crate::error::{Error, Result};
use crate::qubit::{ExchangeParams, InitialState};

/// Everything a single cell needs besides its two noise strengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSettings {
    /// `j1`, `j2` double as the noise means `j01`, `j02`.
    pub params: ExchangeParams<f64>,
    pub initial: InitialState,
    pub time: TimeGrid,
    pub quadrature: QuadratureSpec,
}

impl Default for CellSettings {
    fn default() -> Self {
        Self {
            params: ExchangeParams::reference(),
            initial: InitialState::Zero,
            time: TimeGrid::default(),
            quadrature: QuadratureSpec::default(),
        }
    }
}

impl CellSettings {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.time.validate()?;
        self.quadrature.validate()
    }

    pub fn noise(&self, sigma_e: f64, sigma_j: f64) -> NoiseSpec<f64> {
        NoiseSpec {
            sigma_e,
            sigma_j1: sigma_j,
            sigma_j2: sigma_j,
            j01: self.params.j1,
            j02: self.params.j2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    Converged,
    NoDecay,
    InsufficientPeaks,
    FitFailed,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Converged => "converged",
            CellStatus::NoDecay => "no-decay",
            CellStatus::InsufficientPeaks => "insufficient-peaks",
            CellStatus::FitFailed => "fit-failed",
        }
    }
}

impl From<FitStatus> for CellStatus {
    fn from(s: FitStatus) -> Self {
        match s {
            FitStatus::Converged => CellStatus::Converged,
            FitStatus::NoDecay => CellStatus::NoDecay,
            FitStatus::InsufficientPeaks => CellStatus::InsufficientPeaks,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub sigma_e: f64,
    pub sigma_j: f64,
    /// Infinite for no decay, NaN when no fit was possible.
    pub j0_t2_star: f64,
    pub q: f64,
    pub alpha: f64,
    pub status: CellStatus,
    /// `false` when the quadrature refinement check flagged the trace.
    pub quadrature_converged: bool,
}

/// Averaged trace, envelope and fit for one `(sigma_e, sigma_j)` pair.
pub fn run_cell(sigma_e: f64, sigma_j: f64, settings: &CellSettings) -> Result<SweepCell> {
    settings.validate()?;
    let noise = settings.noise(sigma_e, sigma_j);
    noise.validate()?;
    let times = settings.time.times();
    let trace = disorder_average_quadrature(&settings.params, &noise, settings.initial, &times, &settings.quadrature)?;
    let quadrature_converged = trace.meta.quadrature.is_none_or(|q| q.converged);
    let fixed_start = match settings.initial {
        InitialState::Zero => Some(1.0),
        InitialState::Superposition => None,
    };
    let envelope = extract_upper_envelope(&trace)?;
    let (j0_t2_star, alpha, status) = match fit_envelope(&envelope, fixed_start) {
        Ok(fit) => {
            let alpha = if fit.status == FitStatus::Converged { fit.alpha } else { f64::NAN };
            (fit.t2_star, alpha, fit.status.into())
        }
        Err(Error::FitFailure(_)) => (f64::NAN, f64::NAN, CellStatus::FitFailed),
        Err(e) => return Err(e),
    };
    Ok(SweepCell {
        sigma_e,
        sigma_j,
        j0_t2_star,
        q: quality_factor(j0_t2_star),
        alpha,
        status,
        quadrature_converged,
    })
}

/// Noise strengths to map, applied as `sigma_j1 = sigma_j2 = sigma_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub sigma_e_values: Vec<f64>,
    pub sigma_j_values: Vec<f64>,
    pub settings: CellSettings,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            sigma_e_values: (0..=10).map(|k| k as f64 / 10.0).collect(),
            sigma_j_values: vec![0.0, 0.05, 0.1, 0.2, 0.3, 0.5],
            settings: CellSettings::default(),
        }
    }
}

fn check_axis(field: &'static str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid(field, "must not be empty"));
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid(field, "values must be finite and non-negative"));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(field, "values must be strictly increasing"));
    }
    Ok(())
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        check_axis("sigma_e_values", &self.sigma_e_values)?;
        check_axis("sigma_j_values", &self.sigma_j_values)?;
        self.settings.validate()
    }
}

/// All cells, row-major by `sigma_e` then `sigma_j`, computed in parallel.
pub fn run_sweep(grid: &SweepGrid) -> Result<Vec<SweepCell>> {
    grid.validate()?;
    let pairs: Vec<(f64, f64)> = grid
        .sigma_e_values
        .iter()
        .flat_map(|&se| grid.sigma_j_values.iter().map(move |&sj| (se, sj)))
        .collect();
    pairs
        .par_iter()
        .map(|&(se, sj)| run_cell(se, sj, &grid.settings))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialPreset {
    pub name: String,
    /// Magnetic noise strength in eV.
    pub sigma_e_floor: f64,
}

impl MaterialPreset {
    pub fn new(name: impl Into<String>, sigma_e_floor: f64) -> Self {
        Self {
            name: name.into(),
            sigma_e_floor,
        }
    }

    /// Isotopically purified silicon, natural silicon and GaAs.
    pub fn defaults() -> Vec<Self> {
        vec![
            Self::new("28Si", 0.0),
            Self::new("Si", 3e-9),
            Self::new("GaAs", 1e-7),
        ]
    }
}

/// Inputs of [`material_comparison`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialSettings {
    pub presets: Vec<MaterialPreset>,
    /// Charge-noise strengths in eV.
    pub sigma_j_values_ev: Vec<f64>,
    pub j0_ev: f64,
    pub both_initial_conditions: bool,
    /// Initial state used when `both_initial_conditions` is false.
    pub initial: InitialState,
    pub params: ExchangeParams<f64>,
    /// Starting horizon; extended while the decay is not resolved.
    pub time: TimeGrid,
    pub quadrature: QuadratureSpec,
    /// Number of times the horizon may be quadrupled.
    pub max_extensions: usize,
}

impl Default for MaterialSettings {
    fn default() -> Self {
        let (lo, hi, n) = (0.003e-6_f64, 0.5e-6_f64, 20);
        let sigma_j_values_ev = (0..n)
            .map(|k| {
                if k + 1 == n {
                    hi
                } else {
                    lo * (hi / lo).powf(k as f64 / (n - 1) as f64)
                }
            })
            .collect();
        Self {
            presets: MaterialPreset::defaults(),
            sigma_j_values_ev,
            j0_ev: 1e-6,
            both_initial_conditions: true,
            initial: InitialState::Zero,
            params: ExchangeParams::reference(),
            time: TimeGrid::default(),
            quadrature: QuadratureSpec::default(),
            max_extensions: 3,
        }
    }
}

impl MaterialSettings {
    pub fn validate(&self) -> Result<()> {
        if self.presets.is_empty() {
            return Err(Error::invalid("presets", "must not be empty"));
        }
        for p in &self.presets {
            if !(p.sigma_e_floor.is_finite() && p.sigma_e_floor >= 0.0) {
                return Err(Error::invalid("sigma_e_floor", "must be finite and non-negative"));
            }
        }
        check_axis("sigma_j_values_ev", &self.sigma_j_values_ev)?;
        PhysicalScale::new(self.j0_ev)?;
        self.params.validate()?;
        self.time.validate()?;
        self.quadrature.validate()
    }

    fn initial_states(&self) -> Vec<InitialState> {
        if self.both_initial_conditions {
            vec![InitialState::Zero, InitialState::Superposition]
        } else {
            vec![self.initial]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialRow {
    pub material: String,
    pub sigma_j_ev: f64,
    pub initial: InitialState,
    pub j0_t2_star: f64,
    pub t2_star_seconds: f64,
    pub status: CellStatus,
    /// Horizon of the trace the fit came from, in units of `hbar / j0`.
    pub t_max: f64,
}

/// Physical T2* for every preset, charge-noise strength and initial state.
///
/// A decay that is not resolved within the horizon (no decay detected, or
/// T2* beyond half the horizon) is recomputed on a four times longer trace with
/// the same step, up to `max_extensions` times.
pub fn material_comparison(settings: &MaterialSettings) -> Result<Vec<MaterialRow>> {
    settings.validate()?;
    let scale = PhysicalScale::new(settings.j0_ev)?;
    let mut jobs = Vec::new();
    for preset in &settings.presets {
        for &sj in &settings.sigma_j_values_ev {
            for initial in settings.initial_states() {
                jobs.push((preset, sj, initial));
            }
        }
    }
    jobs.par_iter()
        .map(|&(preset, sj_ev, initial)| {
            let se = scale.to_dimensionless_energy(preset.sigma_e_floor);
            let sj = scale.to_dimensionless_energy(sj_ev);
            let mut cell_settings = CellSettings {
                params: settings.params,
                initial,
                time: settings.time,
                quadrature: settings.quadrature,
            };
            let mut cell = run_cell(se, sj, &cell_settings)?;
            for _ in 0..settings.max_extensions {
                let t_max = cell_settings.time.t_max;
                let resolved = cell.status != CellStatus::NoDecay && !(cell.j0_t2_star > 0.5 * t_max);
                if resolved {
                    break;
                }
                cell_settings.time = TimeGrid::new(4.0 * t_max, (cell_settings.time.n_points - 1) * 4 + 1)?;
                cell = run_cell(se, sj, &cell_settings)?;
            }
            Ok(MaterialRow {
                material: preset.name.clone(),
                sigma_j_ev: sj_ev,
                initial,
                j0_t2_star: cell.j0_t2_star,
                t2_star_seconds: cell.j0_t2_star * scale.time_unit_s,
                status: cell.status,
                t_max: cell_settings.time.t_max,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> CellSettings {
        CellSettings {
            time: TimeGrid::new(200.0, 4001).unwrap(),
            ..CellSettings::default()
        }
    }

    #[test]
    fn noiseless_cell_has_unit_quality() {
        let c = run_cell(0.0, 0.0, &quick()).unwrap();
        assert_eq!(c.status, CellStatus::NoDecay);
        assert_eq!(c.q, 1.0);
        assert!(c.j0_t2_star.is_infinite());
    }

    #[test]
    fn one_by_one_grid_matches_cell() {
        let grid = SweepGrid {
            sigma_e_values: vec![0.3],
            sigma_j_values: vec![0.1],
            settings: quick(),
        };
        let cells = run_sweep(&grid).unwrap();
        assert_eq!(cells, vec![run_cell(0.3, 0.1, &quick()).unwrap()]);
    }

    #[test]
    fn finite_cells_satisfy_q_relation() {
        let c = run_cell(0.3, 0.1, &quick()).unwrap();
        assert_eq!(c.status, CellStatus::Converged);
        assert_eq!(c.q, (-1.0 / c.j0_t2_star).exp());
    }

    #[test]
    fn invalid_axes_rejected() {
        let mut g = SweepGrid::default();
        g.sigma_j_values = vec![0.1, 0.1];
        assert!(run_sweep(&g).is_err());
        g.sigma_j_values = vec![];
        assert!(run_sweep(&g).is_err());
        g.sigma_j_values = vec![-0.1];
        assert!(run_sweep(&g).is_err());
    }

    #[test]
    fn default_material_axis_is_logarithmic() {
        let s = MaterialSettings::default();
        let v = &s.sigma_j_values_ev;
        assert_eq!(v.len(), 20);
        assert!((v[0] - 3e-9).abs() < 1e-24);
        assert_eq!(v[19], 5e-7);
        let r = v[1] / v[0];
        for w in v.windows(2) {
            assert!((w[1] / w[0] / r - 1.0).abs() < 1e-9);
        }
    }
}
