use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::NoiseSpec;
use crate::scalar::Real;

/// One realization of the quasi-static noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSample<T> {
    pub j1: T,
    pub j2: T,
    pub delta_e: T,
}

/// Draws `(j1, j2, delta_e)`: `delta_e ~ N(0, 2 sigma_e^2)` and each coupling from
/// its Gaussian by rejecting negative draws. Zero widths return the mean exactly.
pub fn sample_noise<T, R>(rng: &mut R, spec: &NoiseSpec<T>) -> NoiseSample<T>
where
    T: Real,
    R: Rng + ?Sized,
    StandardNormal: Distribution<T>,
{
    let j1 = truncated(rng, spec.j01, spec.sigma_j1);
    let j2 = truncated(rng, spec.j02, spec.sigma_j2);
    let delta_e = if spec.sigma_e == T::zero() {
        T::zero()
    } else {
        let z: T = StandardNormal.sample(rng);
        spec.delta_e_std() * z
    };
    NoiseSample { j1, j2, delta_e }
}

fn truncated<T, R>(rng: &mut R, mean: T, sigma: T) -> T
where
    T: Real,
    R: Rng + ?Sized,
    StandardNormal: Distribution<T>,
{
    if sigma == T::zero() {
        return mean;
    }
    loop {
        let z: T = StandardNormal.sample(rng);
        let j = mean + sigma * z;
        if j >= T::zero() {
            return j;
        }
    }
}
