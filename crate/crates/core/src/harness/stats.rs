//! Order statistics over Monte Carlo runs.

use serde::{Deserialize, Serialize};

/// Linearly interpolated quantile of unsorted `values`, `q` in `[0, 1]`.
/// An infinite neighbour wins the interpolation.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of empty sample");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if frac == 0.0 || v[lo] == v[hi] || v[lo].is_infinite() {
        v[lo]
    } else if v[hi].is_infinite() {
        v[hi]
    } else {
        v[lo] + (v[hi] - v[lo]) * frac
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Self {
        Self {
            q25: quantile(values, 0.25),
            median: quantile(values, 0.5),
            q75: quantile(values, 0.75),
        }
    }
}
