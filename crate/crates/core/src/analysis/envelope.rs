use crate::disorder::ProbabilityTrace;
use crate::error::{Error, Result};

/// Upper envelope of a uniformly sampled trace.
///
/// The first sample is kept when it is not below its neighbor (a boundary
/// maximum, as for the zero-state return probability), followed by every strict
/// local maximum. A plateau counts once, at its midpoint.
pub fn extract_upper_envelope(trace: &ProbabilityTrace) -> Result<Vec<(f64, f64)>> {
    if !trace.is_uniform() {
        return Err(Error::invalid("times", "must be strictly increasing and uniformly spaced"));
    }
    upper_envelope(&trace.times, &trace.values)
}

/// [`extract_upper_envelope`] on raw slices.
pub fn upper_envelope(times: &[f64], values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if times.len() != values.len() {
        return Err(Error::invalid("values", "length differs from times"));
    }
    let n = values.len();
    if n < 3 {
        return Err(Error::invalid("values", "need at least 3 samples"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("values", "must be finite"));
    }
    let mut out = Vec::new();
    if values[0] >= values[1] {
        out.push((times[0], values[0]));
    }
    let mut k = 1;
    while k + 1 < n {
        if values[k] > values[k - 1] {
            let mut j = k;
            while j + 1 < n && values[j + 1] == values[k] {
                j += 1;
            }
            if j + 1 < n && values[j + 1] < values[k] {
                out.push((0.5 * (times[k] + times[j]), values[k]));
            }
            k = j + 1;
        } else {
            k += 1;
        }
    }
    Ok(out)
}
