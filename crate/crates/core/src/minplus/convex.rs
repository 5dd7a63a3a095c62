use super::{approx_eq, check_time, CurveError};

/// Rate-latency service `rate * max(0, t - latency)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateLatency {
    rate: f64,
    latency: f64,
}

impl RateLatency {
    pub fn new(rate: f64, latency: f64) -> Result<Self, CurveError> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(CurveError::InvalidParameter(format!(
                "service rate must be finite and positive, got {rate}"
            )));
        }
        if !(latency.is_finite() && latency >= 0.0) {
            return Err(CurveError::InvalidParameter(format!(
                "service latency must be finite and non-negative, got {latency}"
            )));
        }
        Ok(Self { rate, latency })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn latency(&self) -> f64 {
        self.latency
    }

    pub fn value(&self, t: f64) -> f64 {
        self.rate * (t - self.latency).max(0.0)
    }
}

/// Convex piecewise-linear service curve: the maximum of rate-latency pieces.
///
/// Pieces are stored by strictly increasing rate and latency with no
/// dominated piece. An empty piece list is the unbounded service (the
/// min-plus identity): zero at `t = 0` and infinite afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexCurve {
    pieces: Vec<RateLatency>,
}

impl ConvexCurve {
    pub fn new<I: IntoIterator<Item = RateLatency>>(pieces: I) -> Result<Self, CurveError> {
        let pieces: Vec<_> = pieces.into_iter().collect();
        if pieces.is_empty() {
            return Err(CurveError::Empty);
        }
        Ok(Self {
            pieces: canonicalize(pieces),
        })
    }

    pub fn rate_latency(rate: f64, latency: f64) -> Result<Self, CurveError> {
        Ok(Self {
            pieces: vec![RateLatency::new(rate, latency)?],
        })
    }

    /// Service that delivers everything instantly.
    pub fn unbounded() -> Self {
        Self { pieces: Vec::new() }
    }

    pub fn is_unbounded(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn pieces(&self) -> &[RateLatency] {
        &self.pieces
    }

    /// Time before any service is guaranteed.
    pub fn latency(&self) -> f64 {
        self.pieces.first().map_or(0.0, |p| p.latency)
    }

    /// Long-run service rate.
    pub fn rate(&self) -> f64 {
        self.pieces.last().map_or(f64::INFINITY, |p| p.rate)
    }

    pub fn eval(&self, t: f64) -> Result<f64, CurveError> {
        check_time(t)?;
        Ok(self.value(t))
    }

    pub(crate) fn value(&self, t: f64) -> f64 {
        if self.pieces.is_empty() {
            return if t > 0.0 { f64::INFINITY } else { 0.0 };
        }
        self.pieces.iter().map(|p| p.value(t)).fold(0.0, f64::max)
    }

    /// Right derivative at `t`.
    pub(crate) fn slope_after(&self, t: f64) -> f64 {
        if t < self.latency() {
            return 0.0;
        }
        let crossings = self.crossings();
        let idx = crossings.iter().take_while(|&&x| x <= t).count();
        self.pieces[idx].rate
    }

    fn crossings(&self) -> Vec<f64> {
        self.pieces
            .windows(2)
            .map(|w| crossing(&w[0], &w[1]))
            .collect()
    }

    /// The latency followed by every abscissa where the active piece changes.
    pub fn breakpoints(&self) -> Vec<f64> {
        if self.pieces.is_empty() {
            return Vec::new();
        }
        let mut bps = vec![self.latency()];
        bps.extend(self.crossings());
        bps
    }

    /// `inf { t : beta(t) >= y }` for `y > 0`; the latency for `y <= 0`
    /// (right limit, so a zero burst still waits for the latency).
    pub(crate) fn inverse(&self, y: f64) -> f64 {
        if self.pieces.is_empty() {
            return 0.0;
        }
        if y <= 0.0 {
            return self.latency();
        }
        self.pieces
            .iter()
            .map(|p| p.latency + y / p.rate)
            .fold(f64::INFINITY, f64::min)
    }

    /// Linear segments `(slope, length)` after the initial latency; the last
    /// one has infinite length.
    fn segments(&self) -> Vec<(f64, f64)> {
        let bps = self.breakpoints();
        self.pieces
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let len = match bps.get(i + 1) {
                    Some(next) => next - bps[i],
                    None => f64::INFINITY,
                };
                (p.rate, len)
            })
            .collect()
    }

    /// Min-plus convolution. Latencies add and the finite segments of both
    /// curves are laid end to end by increasing slope, up to the smaller of
    /// the two long-run rates.
    pub fn convolve(&self, other: &ConvexCurve) -> ConvexCurve {
        if self.is_unbounded() {
            return other.clone();
        }
        if other.is_unbounded() {
            return self.clone();
        }
        let final_rate = self.rate().min(other.rate());
        let mut segs: Vec<(f64, f64)> = self
            .segments()
            .into_iter()
            .chain(other.segments())
            .filter(|&(slope, len)| len.is_finite() && slope < final_rate)
            .collect();
        segs.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut x = self.latency() + other.latency();
        let mut y = 0.0;
        let mut pieces = Vec::with_capacity(segs.len() + 1);
        for (slope, len) in segs {
            pieces.push(RateLatency {
                rate: slope,
                latency: x - y / slope,
            });
            x += len;
            y += slope * len;
        }
        pieces.push(RateLatency {
            rate: final_rate,
            latency: (x - y / final_rate).max(0.0),
        });
        ConvexCurve {
            pieces: canonicalize(pieces),
        }
    }

    /// Builds a curve from pieces already known to be valid, e.g. derived
    /// from other curves.
    pub(crate) fn from_raw(pieces: Vec<RateLatency>) -> Self {
        if pieces.is_empty() {
            return Self::unbounded();
        }
        Self {
            pieces: canonicalize(pieces),
        }
    }
}

fn crossing(lo: &RateLatency, hi: &RateLatency) -> f64 {
    (hi.rate * hi.latency - lo.rate * lo.latency) / (hi.rate - lo.rate)
}

fn canonicalize(mut pieces: Vec<RateLatency>) -> Vec<RateLatency> {
    pieces.sort_by(|a, b| {
        a.latency
            .total_cmp(&b.latency)
            .then(b.rate.total_cmp(&a.rate))
    });

    // Increasing latency: a piece survives only if it is faster than every
    // piece that starts earlier.
    let mut kept: Vec<RateLatency> = Vec::with_capacity(pieces.len());
    for p in pieces {
        if let Some(last) = kept.last().copied() {
            if p.rate <= last.rate || approx_eq(p.rate, last.rate) {
                continue;
            }
            if approx_eq(p.latency, last.latency) {
                kept.pop();
                while let Some(prev) = kept.last() {
                    if prev.rate < p.rate {
                        break;
                    }
                    kept.pop();
                }
            }
        }
        kept.push(p);
    }

    // Upper envelope.
    let mut hull: Vec<RateLatency> = Vec::with_capacity(kept.len());
    for p in kept {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let x_ab = crossing(&a, &b);
            let x_ap = crossing(&a, &p);
            if x_ap <= x_ab || approx_eq(x_ap, x_ab) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}
