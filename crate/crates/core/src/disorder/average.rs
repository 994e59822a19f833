use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    sample_noise, AverageMethod, NoiseSpec, ProbabilityTrace, QuadratureReport, QuadratureSpec,
    SpectralMeasure, TraceMeta,
};
use crate::error::{Error, Result};
use crate::qubit::{return_probability, ExchangeParams, InitialState};

/// Samples per Monte Carlo work unit; partial sums are merged in unit order.
const MC_CHUNK: usize = 4096;

/// How to evaluate the disorder average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Averaging {
    Quadrature(QuadratureSpec),
    MonteCarlo { samples: usize, seed: u64 },
}

pub fn disorder_average(
    p: &ExchangeParams<f64>,
    noise: &NoiseSpec<f64>,
    initial: InitialState,
    times: &[f64],
    averaging: &Averaging,
) -> Result<ProbabilityTrace> {
    match *averaging {
        Averaging::Quadrature(q) => disorder_average_quadrature(p, noise, initial, times, &q),
        Averaging::MonteCarlo { samples, seed } => {
            disorder_average_mc(p, noise, initial, times, samples, seed)
        }
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::invalid("times", "must not be empty"));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::invalid("times", "must be finite and non-negative"));
    }
    if times.len() >= 2 {
        let dt = times[1] - times[0];
        let uniform = dt > 0.0
            && times
                .windows(2)
                .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.max(w[1]));
        if !uniform {
            return Err(Error::invalid("times", "must be strictly increasing and uniformly spaced"));
        }
    }
    Ok(())
}

/// Deterministic disorder average on `times`.
///
/// When `q.check_convergence` is set the average is recomputed at doubled
/// resolution; the largest pointwise change is reported and `converged` is cleared
/// when it exceeds [`QuadratureSpec::CONVERGENCE_LIMIT`].
pub fn disorder_average_quadrature(
    p: &ExchangeParams<f64>,
    noise: &NoiseSpec<f64>,
    initial: InitialState,
    times: &[f64],
    q: &QuadratureSpec,
) -> Result<ProbabilityTrace> {
    check_times(times)?;
    let t_max = times.iter().copied().fold(0.0, f64::max);
    let measure = SpectralMeasure::build(p, noise, q, t_max, 1)?;
    let values = measure.trace(initial, times);
    let mut report = QuadratureReport {
        nodes: measure.len(),
        max_refinement_change: None,
        converged: true,
    };
    if q.check_convergence && measure.len() > 1 {
        let fine = SpectralMeasure::build(p, noise, q, t_max, 2)?;
        let change = fine
            .trace(initial, times)
            .iter()
            .zip(&values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        report.max_refinement_change = Some(change);
        report.converged = change <= QuadratureSpec::CONVERGENCE_LIMIT;
    }
    Ok(ProbabilityTrace {
        times: times.to_vec(),
        values,
        std_errors: None,
        meta: TraceMeta {
            initial,
            params: *p,
            noise: *noise,
            method: AverageMethod::Quadrature,
            quadrature: Some(report),
            samples: None,
            seed: None,
        },
    })
}

/// Running mean and sum of squared deviations per time point.
struct Moments {
    n: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn empty(len: usize) -> Self {
        Self {
            n: 0.0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    fn push(&mut self, values: impl Iterator<Item = f64>) {
        self.n += 1.0;
        for ((m, s), v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(values) {
            let delta = v - *m;
            *m += delta / self.n;
            *s += delta * (v - *m);
        }
    }

    fn merge(mut self, other: Self) -> Self {
        if other.n == 0.0 {
            return self;
        }
        if self.n == 0.0 {
            return other;
        }
        let n = self.n + other.n;
        for i in 0..self.mean.len() {
            let delta = other.mean[i] - self.mean[i];
            self.mean[i] += delta * other.n / n;
            self.m2[i] += other.m2[i] + delta * delta * self.n * other.n / n;
        }
        self.n = n;
        self
    }
}

/// Monte Carlo disorder average with per-point standard errors.
///
/// Sample `k` draws from ChaCha8 seeded with `seed` on stream `k`, so the result
/// does not depend on how samples are scheduled across threads.
pub fn disorder_average_mc(
    p: &ExchangeParams<f64>,
    noise: &NoiseSpec<f64>,
    initial: InitialState,
    times: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<ProbabilityTrace> {
    p.validate()?;
    noise.validate()?;
    check_times(times)?;
    if n_samples == 0 {
        return Err(Error::invalid("samples", "must be at least 1"));
    }
    let n_chunks = n_samples.div_ceil(MC_CHUNK);
    let partial: Vec<Moments> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Moments::empty(times.len());
            for k in (c * MC_CHUNK)..((c + 1) * MC_CHUNK).min(n_samples) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                let s = sample_noise(&mut rng, noise);
                let q = p.with_couplings(s.j1, s.j2);
                acc.push(times.iter().map(|&t| return_probability(initial, &q, s.delta_e, t)));
            }
            acc
        })
        .collect();
    let total = partial
        .into_iter()
        .fold(Moments::empty(times.len()), Moments::merge);
    let n = total.n;
    let std_errors = total
        .m2
        .iter()
        .map(|m2| if n > 1.0 { (m2 / (n - 1.0)).sqrt() / n.sqrt() } else { 0.0 })
        .collect();
    let values = total.mean.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    Ok(ProbabilityTrace {
        times: times.to_vec(),
        values,
        std_errors: Some(std_errors),
        meta: TraceMeta {
            initial,
            params: *p,
            noise: *noise,
            method: AverageMethod::MonteCarlo,
            quadrature: None,
            samples: Some(n_samples),
            seed: Some(seed),
        },
    })
}
