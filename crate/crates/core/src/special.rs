//! Error function and its complement.

use crate::scalar::Real;

// Below this argument the power series is used; above it the continued fraction.
const SERIES_LIMIT: f64 = 2.5;
const MAX_TERMS: usize = 500;

/// `erf(x)` with absolute error below `1e-15` in double precision.
pub fn erf<T: Real>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    let ax = x.abs();
    if ax < T::lit(SERIES_LIMIT) {
        erf_series(x)
    } else {
        x.signum() * (T::one() - erfc_fraction(ax))
    }
}

/// `erfc(x) = 1 - erf(x)`, accurate in relative terms for large positive `x`.
pub fn erfc<T: Real>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    if x < T::zero() {
        return T::lit(2.0) - erfc(-x);
    }
    if x < T::lit(SERIES_LIMIT) {
        T::one() - erf_series(x)
    } else {
        erfc_fraction(x)
    }
}

/// `erf(x) = 2/sqrt(pi) e^{-x^2} sum_n 2^n x^{2n+1} / (2n+1)!!`; all terms share a sign.
fn erf_series<T: Real>(x: T) -> T {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for n in 1..MAX_TERMS {
        term = term * (x2 + x2) / T::from_usize(2 * n + 1).unwrap();
        sum = sum + term;
        if term.abs() <= sum.abs() * T::epsilon() {
            break;
        }
    }
    T::FRAC_2_SQRT_PI() * (-x2).exp() * sum
}

/// `erfc(x) = e^{-x^2}/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`, modified Lentz.
fn erfc_fraction<T: Real>(x: T) -> T {
    let tiny = T::min_positive_value() / T::epsilon();
    let mut f = x;
    let mut c = x;
    let mut d = T::zero();
    for n in 1..MAX_TERMS {
        let a = T::from_usize(n).unwrap() * T::lit(0.5);
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let delta = c * d;
        f = f * delta;
        if (delta - T::one()).abs() <= T::epsilon() {
            break;
        }
    }
    (-x * x).exp() / (T::PI().sqrt() * f)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Alternating Taylor series, summed to convergence in extended steps.
    fn taylor_erf(x: f64) -> f64 {
        let mut sum = 0.0;
        let mut power = x;
        let mut factorial = 1.0;
        for n in 0..200 {
            if n > 0 {
                factorial *= n as f64;
                power *= -x * x;
            }
            let term = power / (factorial * (2 * n + 1) as f64);
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1e-300) && n > 3 {
                break;
            }
        }
        sum * 2.0 / std::f64::consts::PI.sqrt()
    }

    #[test]
    fn erf_against_taylor_oracle() {
        assert_eq!(erf(0.0f64), 0.0);
        assert!((erf(1.0f64) - 0.842701).abs() < 1e-6);
        for i in 0..=60 {
            let x = -3.0 + 0.1 * i as f64;
            assert!((erf(x) - taylor_erf(x)).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn erf_is_odd() {
        assert_eq!(erf(-1.3f64), -erf(1.3f64));
        assert_eq!(erf(-4.2f64), -erf(4.2f64));
    }

    #[test]
    fn erfc_tail_values() {
        // mpmath, 30 digits
        let cases: [(f64, f64); 5] = [
            (2.5, 4.069520174449589e-4),
            (3.0, 2.209049699858544e-5),
            (5.0, 1.537459794428035e-12),
            (10.0, 2.088487583762545e-45),
            (-1.0, 1.842700792949715),
        ];
        for (x, want) in cases {
            let got = erfc(x);
            assert!(((got - want) / want).abs() < 1e-13, "x = {x}: {got} vs {want}");
        }
        assert!((erf(2.5f64) - (1.0 - 4.069520174449589e-4)).abs() < 1e-15);
        assert_eq!(erf(40.0f64), 1.0);
    }

    #[test]
    fn single_precision() {
        assert!((erf(1.0f32) - 0.842_700_8).abs() < 1e-6);
        assert!((erfc(3.0f32) - 2.209_05e-5).abs() < 1e-9);
    }
}
