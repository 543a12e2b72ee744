//! Pass / Processing / Saturation decomposition of `tanh` on `x >= 0`.
//!
//! For a target maximum error `eps`, the pass region is where `x` itself is
//! within `eps` of `tanh(x)` and the saturation region is where `1` is.
//! Everything between is served by stored samples and interpolation.

use crate::error::{Error, Result};

/// Absolute bracket width at which bisection stops.
pub const BISECTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Pass,
    Processing,
    Saturation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionBoundaries {
    pub eps_max: f64,
    /// Largest `x` with `x - tanh(x) <= eps_max`.
    pub pass_end: f64,
    /// Smallest `x` with `1 - tanh(x) <= eps_max`.
    pub sat_start: f64,
}

/// `1 - tanh(x)` without cancellation for large `x`.
pub fn tanh_complement(x: f64) -> f64 {
    2.0 / ((2.0 * x).exp() + 1.0)
}

/// Bisection on a bracket where `f(lo) <= 0 < f(hi)` and `f` is
/// non-decreasing. Returns the last point known to satisfy `f <= 0`.
pub fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    debug_assert!(f(lo) <= 0.0 && f(hi) > 0.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn check_eps(eps_max: f64) -> Result<()> {
    if !(eps_max > 0.0 && eps_max < 0.5) {
        return Err(Error::param(format!("eps_max {eps_max} outside (0, 0.5)")));
    }
    Ok(())
}

/// Closed form of the saturation boundary, `atanh(1 - eps)`.
pub fn saturation_start_closed_form(eps_max: f64) -> f64 {
    0.5 * ((2.0 - eps_max) / eps_max).ln()
}

/// Saturation boundary found numerically, for cross-checking the closed form.
pub fn saturation_start_bisection(eps_max: f64) -> Result<f64> {
    check_eps(eps_max)?;
    // 1 - tanh(x) is decreasing; bisect on eps - (1 - tanh(x)).
    let g = |x: f64| eps_max - tanh_complement(x);
    let mut hi = 1.0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
    }
    Ok(bisect(g, 0.0, hi, BISECTION_TOL))
}

pub fn pass_end_bisection(eps_max: f64) -> Result<f64> {
    check_eps(eps_max)?;
    // x - tanh(x) grows without bound; x - tanh(x) >= x - 1.
    Ok(bisect(|x| x - x.tanh() - eps_max, 0.0, 2.0, BISECTION_TOL))
}

/// Region boundaries for `eps_max` in (0, 0.5).
///
/// Once `eps_max >= 1 - tanh(1)` the two outer regions overlap; both
/// boundaries then collapse to `x = 1`, where the pass and saturation errors
/// are equal, and the processing region is empty.
pub fn compute_boundaries(eps_max: f64) -> Result<RegionBoundaries> {
    let mut pass_end = pass_end_bisection(eps_max)?;
    let mut sat_start = saturation_start_closed_form(eps_max);
    if pass_end >= sat_start {
        pass_end = 1.0;
        sat_start = 1.0;
    }
    Ok(RegionBoundaries { eps_max, pass_end, sat_start })
}

/// Region of a non-negative input. Boundary points go to the cheaper
/// region: `pass_end` is Pass and `sat_start` is Saturation.
pub fn classify(x: f64, b: &RegionBoundaries) -> Region {
    if x <= b.pass_end {
        Region::Pass
    } else if x >= b.sat_start {
        Region::Saturation
    } else {
        Region::Processing
    }
}
