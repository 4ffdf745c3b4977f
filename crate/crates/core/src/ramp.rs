//! The C¹ cosine ramp shared by the traveling-efficiency score and the
//! connectivity edge weights.

use std::f64::consts::PI;

/// Cosine ramp from 1 down to 0.
///
/// Returns 1 on `[0, lo]`, `½ + ½cos(π(x−lo)/(hi−lo))` on `(lo, hi)` and 0 on
/// `[hi, ∞)`. Requires `lo < hi`.
pub fn ramp(x: f64, lo: f64, hi: f64) -> f64 {
    debug_assert!(lo < hi);
    if x <= lo {
        1.0
    } else if x >= hi {
        0.0
    } else {
        0.5 + 0.5 * (PI * (x - lo) / (hi - lo)).cos()
    }
}

/// Derivative of [`ramp`] with respect to `x`. Zero outside `(lo, hi)`.
pub fn ramp_slope(x: f64, lo: f64, hi: f64) -> f64 {
    if x <= lo || x >= hi {
        0.0
    } else {
        let w = hi - lo;
        -0.5 * PI / w * (PI * (x - lo) / w).sin()
    }
}

/// Complementary ramp rising from 0 on `[0, lo]` to 1 on `[hi, ∞)`.
pub fn ramp_up(x: f64, lo: f64, hi: f64) -> f64 {
    1.0 - ramp(x, lo, hi)
}

pub fn ramp_up_slope(x: f64, lo: f64, hi: f64) -> f64 {
    -ramp_slope(x, lo, hi)
}
