pub mod hierarchy;
pub mod schedule;
pub mod simulate;
pub mod validate;

use kawasaki_core::scheduler::{delta_theta, ScaleParams};

/// Upper scale for a step of length `s` from `low`. With `⟨φ⟩ = 0` the optimal
/// gap is infinite; a finite gap with horizon `s/(1 − ε)` is used instead.
pub fn upper_scale(low: f64, s: f64, p: &ScaleParams) -> f64 {
    let delta = delta_theta(low, p);
    if delta.is_finite() {
        low + delta
    } else {
        low + 2.0 * p.alpha * s / (1.0 - p.epsilon)
    }
}
