use crate::error::{ensure_finite, Error, Result};
use crate::scalar::Real;
use crate::special::erf;

/// Density of the dot-to-dot field offset, `exp(-x^2 / (4 s^2)) / (2 s sqrt(pi))`.
///
/// A zero width is a Dirac delta and has no density; callers skip the integral instead.
pub fn pdf_delta_e<T: Real>(delta_e: T, sigma_e: T) -> Result<T> {
    ensure_finite("delta_e", delta_e)?;
    check_sigma("sigma_e", sigma_e)?;
    let two_s = T::lit(2.0) * sigma_e;
    let z = delta_e / two_s;
    Ok((-z * z).exp() / (two_s * T::PI().sqrt()))
}

/// Density of an exchange coupling: a Gaussian restricted to `j >= 0`.
pub fn pdf_exchange<T: Real>(j: T, j0: T, sigma: T) -> Result<T> {
    Ok(TruncatedGaussian::new(j0, sigma)?.pdf(j))
}

fn check_sigma<T: Real>(field: &'static str, sigma: T) -> Result<()> {
    ensure_finite(field, sigma)?;
    if sigma < T::zero() {
        return Err(Error::invalid(field, "must be non-negative"));
    }
    if sigma == T::zero() {
        return Err(Error::invalid(field, "zero width is a delta distribution, not a density"));
    }
    Ok(())
}

/// Normal distribution `N(mean, sigma^2)` truncated to `[0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedGaussian<T> {
    pub mean: T,
    pub sigma: T,
    /// `2 / (1 + erf(mean / (sigma sqrt 2)))`.
    pub norm: T,
}

impl<T: Real> TruncatedGaussian<T> {
    pub fn new(mean: T, sigma: T) -> Result<Self> {
        ensure_finite("j0", mean)?;
        if mean < T::zero() {
            return Err(Error::invalid("j0", "must be non-negative"));
        }
        check_sigma("sigma_j", sigma)?;
        let norm = T::lit(2.0) / (T::one() + erf(mean / (sigma * T::SQRT_2())));
        Ok(Self { mean, sigma, norm })
    }

    pub fn pdf(&self, j: T) -> T {
        if j < T::zero() {
            return T::zero();
        }
        let z = (j - self.mean) / self.sigma;
        self.norm * (-T::lit(0.5) * z * z).exp() / (self.sigma * (T::TAU()).sqrt())
    }

    /// Mean of the truncated distribution.
    pub fn truncated_mean(&self) -> T {
        let alpha = -self.mean / self.sigma;
        self.mean + self.sigma * self.hazard(alpha)
    }

    /// Variance of the truncated distribution.
    pub fn truncated_variance(&self) -> T {
        let alpha = -self.mean / self.sigma;
        let h = self.hazard(alpha);
        self.sigma * self.sigma * (T::one() + alpha * h - h * h)
    }

    // phi(alpha) / (1 - Phi(alpha))
    fn hazard(&self, alpha: T) -> T {
        let phi = (-T::lit(0.5) * alpha * alpha).exp() / T::TAU().sqrt();
        phi * self.norm
    }
}
