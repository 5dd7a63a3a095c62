use super::{approx_eq, check_time, CurveError};

/// Affine arrival bound `burst + rate * t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenBucket {
    rate: f64,
    burst: f64,
}

impl TokenBucket {
    pub fn new(rate: f64, burst: f64) -> Result<Self, CurveError> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(CurveError::InvalidParameter(format!(
                "token-bucket rate must be finite and non-negative, got {rate}"
            )));
        }
        if !(burst.is_finite() && burst >= 0.0) {
            return Err(CurveError::InvalidParameter(format!(
                "token-bucket burst must be finite and non-negative, got {burst}"
            )));
        }
        Ok(Self { rate, burst })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn burst(&self) -> f64 {
        self.burst
    }

    pub fn value(&self, t: f64) -> f64 {
        self.burst + self.rate * t
    }
}

/// Greedy shaper placed after a server. `Unbounded` is the identity of
/// [`ConcaveCurve::shape`] and models a link without capacity limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shaper {
    Unbounded,
    Bucket(TokenBucket),
}

/// Concave piecewise-linear arrival curve: the minimum of token buckets.
///
/// Pieces are stored by strictly decreasing rate and strictly increasing
/// burst, and every stored piece is active on some interval of `t >= 0`.
/// At `t = 0` the curve is evaluated as its right limit (the smallest burst).
#[derive(Debug, Clone, PartialEq)]
pub struct ConcaveCurve {
    pieces: Vec<TokenBucket>,
}

impl ConcaveCurve {
    pub fn new<I: IntoIterator<Item = TokenBucket>>(pieces: I) -> Result<Self, CurveError> {
        let pieces: Vec<_> = pieces.into_iter().collect();
        if pieces.is_empty() {
            return Err(CurveError::Empty);
        }
        Ok(Self {
            pieces: canonicalize(pieces),
        })
    }

    pub fn token_bucket(rate: f64, burst: f64) -> Result<Self, CurveError> {
        Ok(Self {
            pieces: vec![TokenBucket::new(rate, burst)?],
        })
    }

    /// The null arrival curve, neutral element of [`ConcaveCurve::add`].
    pub fn zero() -> Self {
        Self {
            pieces: vec![TokenBucket {
                rate: 0.0,
                burst: 0.0,
            }],
        }
    }

    pub fn pieces(&self) -> &[TokenBucket] {
        &self.pieces
    }

    /// Right limit at zero: the burst that can arrive at once.
    pub fn burst(&self) -> f64 {
        self.pieces[0].burst
    }

    /// Long-run arrival rate.
    pub fn rate(&self) -> f64 {
        self.pieces[self.pieces.len() - 1].rate
    }

    pub fn eval(&self, t: f64) -> Result<f64, CurveError> {
        check_time(t)?;
        Ok(self.value(t))
    }

    pub(crate) fn value(&self, t: f64) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.value(t))
            .fold(f64::INFINITY, f64::min)
    }

    /// Right derivative at `t`.
    pub(crate) fn slope_after(&self, t: f64) -> f64 {
        let bps = self.breakpoints();
        let idx = bps.iter().take_while(|&&b| b <= t).count();
        self.pieces[idx].rate
    }

    /// Abscissae where the active piece changes, in increasing order.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces
            .windows(2)
            .map(|w| crossing(&w[0], &w[1]))
            .collect()
    }

    /// Smallest `t >= 0` with `alpha(t) >= y`, or `None` if never reached.
    pub(crate) fn inverse(&self, y: f64) -> Option<f64> {
        let mut t: f64 = 0.0;
        for p in &self.pieces {
            if p.burst < y {
                if p.rate <= 0.0 {
                    return None;
                }
                t = t.max((y - p.burst) / p.rate);
            }
        }
        Some(t)
    }

    /// Pointwise sum. The sum of minima is the minimum of pairwise sums.
    pub fn add(&self, other: &ConcaveCurve) -> ConcaveCurve {
        let mut sums = Vec::with_capacity(self.pieces.len() * other.pieces.len());
        for a in &self.pieces {
            for b in &other.pieces {
                sums.push(TokenBucket {
                    rate: a.rate + b.rate,
                    burst: a.burst + b.burst,
                });
            }
        }
        ConcaveCurve {
            pieces: canonicalize(sums),
        }
    }

    pub fn shape(&self, sigma: &Shaper) -> ConcaveCurve {
        match sigma {
            Shaper::Unbounded => self.clone(),
            Shaper::Bucket(tb) => {
                let mut pieces = self.pieces.clone();
                pieces.push(*tb);
                ConcaveCurve {
                    pieces: canonicalize(pieces),
                }
            }
        }
    }

    /// `alpha(t + delay)`: every bucket gains `rate * delay` of burst.
    pub fn propagate(&self, delay: f64) -> Result<ConcaveCurve, CurveError> {
        check_time(delay)?;
        if !delay.is_finite() {
            return Err(CurveError::InvalidParameter(format!(
                "propagation delay must be finite, got {delay}"
            )));
        }
        if delay == 0.0 {
            return Ok(self.clone());
        }
        let pieces = self
            .pieces
            .iter()
            .map(|p| TokenBucket {
                rate: p.rate,
                burst: p.burst + p.rate * delay,
            })
            .collect();
        Ok(ConcaveCurve {
            pieces: canonicalize(pieces),
        })
    }

    /// Adds `extra` bits of burst to every bucket.
    pub fn with_extra_burst(&self, extra: f64) -> Result<ConcaveCurve, CurveError> {
        let pieces = self
            .pieces
            .iter()
            .map(|p| TokenBucket::new(p.rate, p.burst + extra))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ConcaveCurve {
            pieces: canonicalize(pieces),
        })
    }
}

fn crossing(hi: &TokenBucket, lo: &TokenBucket) -> f64 {
    (lo.burst - hi.burst) / (hi.rate - lo.rate)
}

fn canonicalize(mut pieces: Vec<TokenBucket>) -> Vec<TokenBucket> {
    pieces.sort_by(|a, b| a.rate.total_cmp(&b.rate).then(a.burst.total_cmp(&b.burst)));

    // Increasing rate: a piece survives only if its burst is below every
    // lower-rate piece.
    let mut kept: Vec<TokenBucket> = Vec::with_capacity(pieces.len());
    for p in pieces {
        if let Some(last) = kept.last().copied() {
            if p.burst >= last.burst || approx_eq(p.burst, last.burst) {
                continue;
            }
            if approx_eq(p.rate, last.rate) {
                kept.pop();
            }
        }
        kept.push(p);
    }
    kept.reverse();

    // Lower envelope over t >= 0.
    let mut hull: Vec<TokenBucket> = Vec::with_capacity(kept.len());
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
