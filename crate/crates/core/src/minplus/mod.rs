//! Piecewise-linear min-plus algebra for the two curve families used by
//! delay analysis: concave arrival curves (minimum of token buckets) and
//! convex service curves (maximum of rate-latency pieces).
//!
//! All quantities are in bits, seconds and bits per second. Curves are kept
//! in a canonical form so that structurally equal curves compare equal.

mod concave;
mod convex;
mod deviation;

pub use concave::{ConcaveCurve, Shaper, TokenBucket};
pub use convex::{ConvexCurve, RateLatency};
pub use deviation::{h_dev, intersection_delay, residual_service, v_dev};

use thiserror::Error;

/// Relative tolerance for dominance and merge tests during canonicalization.
pub const DOMINANCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("negative time argument {0}")]
    NegativeTime(f64),
    #[error("invalid curve parameter: {0}")]
    InvalidParameter(String),
    #[error("a curve needs at least one piece")]
    Empty,
    #[error("unstable: arrival rate {arrival_rate} bit/s is not below service rate {service_rate} bit/s")]
    Unstable {
        arrival_rate: f64,
        service_rate: f64,
    },
}

pub(crate) fn approx_eq(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= DOMINANCE_TOL * a.abs().max(b.abs())
}

pub(crate) fn check_time(t: f64) -> Result<(), CurveError> {
    if t.is_nan() || t < 0.0 {
        Err(CurveError::NegativeTime(t))
    } else {
        Ok(())
    }
}

/// Min-plus convolution of two service curves (tandem concatenation).
pub fn convolve_service(a: &ConvexCurve, b: &ConvexCurve) -> ConvexCurve {
    a.convolve(b)
}

/// Tightest arrival bound after a greedy shaper.
pub fn shape(alpha: &ConcaveCurve, sigma: &Shaper) -> ConcaveCurve {
    alpha.shape(sigma)
}

/// Output arrival bound of a flow that spent at most `delay` in a server.
pub fn propagate(alpha: &ConcaveCurve, delay: f64) -> Result<ConcaveCurve, CurveError> {
    alpha.propagate(delay)
}

/// Pointwise sum of two arrival curves.
pub fn add_concave(a: &ConcaveCurve, b: &ConcaveCurve) -> ConcaveCurve {
    a.add(b)
}

pub fn eval_concave(curve: &ConcaveCurve, t: f64) -> Result<f64, CurveError> {
    curve.eval(t)
}

pub fn eval_convex(curve: &ConvexCurve, t: f64) -> Result<f64, CurveError> {
    curve.eval(t)
}
