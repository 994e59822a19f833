use serde::{Deserialize, Serialize};

use super::simplex::{minimize_bounded, SimplexOptions};
use super::units::quality_factor;
use crate::error::{Error, Result};

/// Amplitudes below this count as no decay.
const MIN_AMPLITUDE: f64 = 0.02;
/// Decay times beyond this multiple of the fitted span count as no decay.
const MAX_T2_SPAN: f64 = 5.0;
const ALPHA_MIN: f64 = 0.5;
const ALPHA_MAX: f64 = 4.0;
const MIN_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitStatus {
    Converged,
    NoDecay,
    InsufficientPeaks,
}

impl FitStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            FitStatus::Converged => "converged",
            FitStatus::NoDecay => "no-decay",
            FitStatus::InsufficientPeaks => "insufficient-peaks",
        }
    }
}

impl std::fmt::Display for FitStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fitted `F(t) = p_infinity + (p_start - p_infinity) exp(-(t / t2_star)^alpha)`.
///
/// `t2_star` is infinite for [`FitStatus::NoDecay`]; all parameters are NaN for
/// [`FitStatus::InsufficientPeaks`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub p_infinity: f64,
    pub p_start: f64,
    pub t2_star: f64,
    pub alpha: f64,
    pub sse: f64,
    pub status: FitStatus,
}

impl EnvelopeFit {
    fn insufficient() -> Self {
        Self {
            p_infinity: f64::NAN,
            p_start: f64::NAN,
            t2_star: f64::NAN,
            alpha: f64::NAN,
            sse: f64::NAN,
            status: FitStatus::InsufficientPeaks,
        }
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        model(self.p_infinity, self.p_start, self.t2_star, self.alpha, t)
    }

    /// `exp(-1 / t2_star)` with `t2_star` in units of `hbar / j0`.
    pub fn quality_factor(&self) -> f64 {
        quality_factor(self.t2_star)
    }
}

fn model(p_inf: f64, p_start: f64, t2: f64, alpha: f64, t: f64) -> f64 {
    p_inf + (p_start - p_inf) * (-(t / t2).powf(alpha)).exp()
}

/// Least-squares fit of the stretched-exponential decay to envelope points.
///
/// With `fixed_start` the value at `t = 0` is pinned (1 for the zero-state
/// return probability); otherwise it is fitted. Returns
/// [`FitStatus::InsufficientPeaks`] for fewer than four points.
pub fn fit_envelope(points: &[(f64, f64)], fixed_start: Option<f64>) -> Result<EnvelopeFit> {
    for &(t, v) in points {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::invalid("points", "times must be finite and non-negative"));
        }
        if !v.is_finite() {
            return Err(Error::invalid("points", "values must be finite"));
        }
    }
    if points.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::invalid("points", "times must be strictly increasing"));
    }
    if let Some(s) = fixed_start {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::invalid("fixed_start", "must lie in [0, 1]"));
        }
    }
    if points.len() < MIN_POINTS {
        return Ok(EnvelopeFit::insufficient());
    }
    let t_max = points.last().unwrap().0;
    if t_max <= 0.0 {
        return Err(Error::invalid("points", "need a positive time span"));
    }

    let tail = (points.len() / 10).max(1);
    let p_inf_guess = (points[points.len() - tail..].iter().map(|p| p.1).sum::<f64>() / tail as f64).clamp(0.0, 1.0);
    let p_start_guess = fixed_start.unwrap_or(points[0].1.clamp(0.0, 1.0)).max(p_inf_guess);
    let threshold = p_inf_guess + (p_start_guess - p_inf_guess) / std::f64::consts::E;
    let t2_guess = points
        .iter()
        .find(|p| p.1 <= threshold && p.0 > 0.0)
        .map_or(t_max, |p| p.0);

    let ln_t_lo = (1e-6 * t_max).ln();
    let ln_t_hi = (10.0 * t_max).ln();
    // x = [p_inf, s, ln T, alpha] with p_start = p_inf + s (1 - p_inf); s absent when pinned
    let decode = |x: &[f64]| -> (f64, f64, f64, f64) {
        match fixed_start {
            Some(ps) => (x[0].min(ps), ps, x[1].exp(), x[2]),
            None => (x[0], x[0] + x[1] * (1.0 - x[0]), x[2].exp(), x[3]),
        }
    };
    let sse = |x: &[f64]| -> f64 {
        let (pi, ps, t2, a) = decode(x);
        points
            .iter()
            .map(|&(t, v)| {
                let r = model(pi, ps, t2, a, t) - v;
                r * r
            })
            .sum()
    };

    let (lo, hi, step): (Vec<f64>, Vec<f64>, Vec<f64>) = match fixed_start {
        Some(ps) => (
            vec![0.0, ln_t_lo, ALPHA_MIN],
            vec![ps, ln_t_hi, ALPHA_MAX],
            vec![0.1, 0.5, 0.3],
        ),
        None => (
            vec![0.0, 0.0, ln_t_lo, ALPHA_MIN],
            vec![1.0, 1.0, ln_t_hi, ALPHA_MAX],
            vec![0.1, 0.1, 0.5, 0.3],
        ),
    };
    let s_guess = if p_inf_guess < 1.0 {
        ((p_start_guess - p_inf_guess) / (1.0 - p_inf_guess)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let starts = [
        (1.0, 1.5),
        (0.5, 1.0),
        (2.0, 2.0),
        (1.0, 1.0),
        (1.0, 2.5),
        (0.3, 1.5),
        (3.0, 1.5),
        (1.0, 0.7),
    ];
    let opts = SimplexOptions::default();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for (t_mult, alpha) in starts {
        let ln_t = (t2_guess * t_mult).ln().clamp(ln_t_lo, ln_t_hi);
        let x0 = match fixed_start {
            Some(_) => vec![p_inf_guess.min(p_start_guess), ln_t, alpha],
            None => vec![p_inf_guess, s_guess, ln_t, alpha],
        };
        let mut r = minimize_bounded(sse, &x0, &step, &lo, &hi, opts);
        // restart from the optimum until it stops moving
        let polish: Vec<f64> = step.iter().map(|s| 0.05 * s).collect();
        for _ in 0..3 {
            let again = minimize_bounded(sse, &r.x, &polish, &lo, &hi, opts);
            let gain = r.value - again.value;
            let done = gain <= 1e-14 * r.value.abs() + 1e-32;
            if again.value < r.value {
                r = again;
            }
            if done {
                break;
            }
        }
        if r.value.is_finite() && best.as_ref().is_none_or(|b| r.value < b.1) {
            best = Some((r.x, r.value));
        }
    }
    let Some((x, value)) = best else {
        return Err(Error::FitFailure("no start produced a finite residual".into()));
    };
    let (p_infinity, p_start, t2_star, alpha) = decode(&x);
    let no_decay = p_start - p_infinity < MIN_AMPLITUDE || t2_star > MAX_T2_SPAN * t_max;
    Ok(EnvelopeFit {
        p_infinity,
        p_start,
        t2_star: if no_decay { f64::INFINITY } else { t2_star },
        alpha,
        sse: value,
        status: if no_decay {
            FitStatus::NoDecay
        } else {
            FitStatus::Converged
        },
    })
}
