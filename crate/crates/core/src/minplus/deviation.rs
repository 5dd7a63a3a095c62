//! Delay and backlog bounds between a concave arrival curve and a convex
//! service curve, and the left-over service seen by a flow under blind
//! multiplexing.

use super::{ConcaveCurve, ConvexCurve, CurveError, RateLatency};

fn check_stable(alpha: &ConcaveCurve, beta: &ConvexCurve) -> Result<(), CurveError> {
    if alpha.rate() < beta.rate() {
        Ok(())
    } else {
        Err(CurveError::Unstable {
            arrival_rate: alpha.rate(),
            service_rate: beta.rate(),
        })
    }
}

/// Horizontal deviation: the FIFO delay bound.
///
/// `t -> beta^-1(alpha(t)) - t` is concave, so its maximum sits at a kink:
/// either a breakpoint of `alpha` (including `0+`) or an instant where
/// `alpha` reaches the value of a breakpoint of `beta`.
pub fn h_dev(alpha: &ConcaveCurve, beta: &ConvexCurve) -> Result<f64, CurveError> {
    check_stable(alpha, beta)?;
    if beta.is_unbounded() {
        return Ok(0.0);
    }
    let mut best = beta.inverse(alpha.burst());
    for t in alpha.breakpoints() {
        best = best.max(beta.inverse(alpha.value(t)) - t);
    }
    for x in beta.breakpoints() {
        let y = beta.value(x);
        if y > alpha.burst() {
            if let Some(t) = alpha.inverse(y) {
                best = best.max(beta.inverse(alpha.value(t)) - t);
            }
        }
    }
    Ok(best.max(0.0))
}

/// Vertical deviation: the backlog bound. `alpha - beta` is concave, so the
/// maximum is at `0+` or at a breakpoint of either curve.
pub fn v_dev(alpha: &ConcaveCurve, beta: &ConvexCurve) -> Result<f64, CurveError> {
    check_stable(alpha, beta)?;
    let mut best = alpha.burst();
    if beta.is_unbounded() {
        return Ok(best);
    }
    for t in alpha.breakpoints().into_iter().chain(beta.breakpoints()) {
        best = best.max(alpha.value(t) - beta.value(t));
    }
    Ok(best)
}

/// First instant, not before the service latency, at which `beta` catches up
/// with `alpha`: the time a server needs to clear its buffer, which bounds
/// the delay under arbitrary multiplexing.
pub fn intersection_delay(alpha: &ConcaveCurve, beta: &ConvexCurve) -> Result<f64, CurveError> {
    check_stable(alpha, beta)?;
    if beta.is_unbounded() {
        return Ok(0.0);
    }
    Ok(catch_up(alpha, beta))
}

/// Merged breakpoints of both curves strictly after `from`.
fn merged_breakpoints(alpha: &ConcaveCurve, beta: &ConvexCurve, from: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = alpha
        .breakpoints()
        .into_iter()
        .chain(beta.breakpoints())
        .filter(|&x| x > from)
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Smallest `t >= latency(beta)` with `beta(t) >= alpha(t)`. Requires
/// stability and a bounded `beta`.
fn catch_up(alpha: &ConcaveCurve, beta: &ConvexCurve) -> f64 {
    // beta - alpha is convex and non-positive up to the latency.
    let start = beta.latency();
    let gap = |t: f64| beta.value(t) - alpha.value(t);
    if gap(start) >= 0.0 {
        return start;
    }
    let mut left = start;
    let mut root = None;
    for right in merged_breakpoints(alpha, beta, start) {
        let g_right = gap(right);
        if g_right >= 0.0 {
            let g_left = gap(left);
            root = Some(left + (-g_left) * (right - left) / (g_right - g_left));
            break;
        }
        left = right;
    }
    let mut t = root.unwrap_or_else(|| {
        let slope = beta.rate() - alpha.rate();
        left + (-gap(left)) / slope
    });
    // Interpolation may land a few rounding steps either side of the crossing.
    for _ in 0..64 {
        if gap(t) >= 0.0 {
            break;
        }
        t = t.next_up();
    }
    for _ in 0..64 {
        let before = t.next_down();
        if before < start || gap(before) < 0.0 {
            break;
        }
        t = before;
    }
    t
}

/// Service left to one flow by cross traffic `cross` under blind
/// multiplexing: the non-decreasing closure of `[beta - cross]_+`.
pub fn residual_service(
    beta: &ConvexCurve,
    cross: &ConcaveCurve,
) -> Result<ConvexCurve, CurveError> {
    check_stable(cross, beta)?;
    if beta.is_unbounded() {
        return Ok(ConvexCurve::unbounded());
    }
    // beta - cross is convex; it stays at or below zero until `start` and
    // increases afterwards, so each later segment is one rate-latency piece.
    let start = catch_up(cross, beta);
    let mut pieces = Vec::new();
    let mut points = vec![start];
    points.extend(merged_breakpoints(cross, beta, start));
    for x in points {
        let slope = beta.slope_after(x) - cross.slope_after(x);
        if slope <= 0.0 {
            continue;
        }
        let value = (beta.value(x) - cross.value(x)).max(0.0);
        let latency = (x - value / slope).max(0.0);
        pieces.push(RateLatency::new(slope, latency)?);
    }
    Ok(ConvexCurve::from_raw(pieces))
}
