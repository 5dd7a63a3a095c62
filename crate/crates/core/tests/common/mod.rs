//! Independent numerical oracles and random fixtures shared by the
//! integration tests. Oracles work from raw piece lists, never from the
//! canonical curves under test.

#![allow(dead_code)]

use indexmap::IndexMap;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tsnbound::generators::{gen_fixed_topology, GenParams, Param};
use tsnbound::minplus::{ConcaveCurve, ConvexCurve, RateLatency, TokenBucket};
use tsnbound::model::{AnalysisOptions, OutputPortNetwork};

pub const DEMO_JSON: &str = include_str!("../fixtures/demo.json");
pub const DEMO_XML: &str = include_str!("../fixtures/demo.xml");

/// Raw token buckets `(rate, burst)`.
#[derive(Debug, Clone)]
pub struct RawArrival(pub Vec<(f64, f64)>);

/// Raw rate-latency pieces `(rate, latency)`.
#[derive(Debug, Clone)]
pub struct RawService(pub Vec<(f64, f64)>);

impl RawArrival {
    pub fn eval(&self, t: f64) -> f64 {
        self.0
            .iter()
            .map(|&(r, b)| b + r * t)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn curve(&self) -> ConcaveCurve {
        ConcaveCurve::new(self.0.iter().map(|&(r, b)| TokenBucket::new(r, b).unwrap())).unwrap()
    }

    pub fn long_run_rate(&self) -> f64 {
        self.0.iter().map(|p| p.0).fold(f64::INFINITY, f64::min)
    }
}

impl RawService {
    pub fn eval(&self, t: f64) -> f64 {
        self.0
            .iter()
            .map(|&(r, l)| r * (t - l).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn curve(&self) -> ConvexCurve {
        ConvexCurve::new(self.0.iter().map(|&(r, l)| RateLatency::new(r, l).unwrap())).unwrap()
    }

    pub fn long_run_rate(&self) -> f64 {
        self.0.iter().map(|p| p.0).fold(0.0, f64::max)
    }

    /// Smallest `t` with `beta(t) >= y`, by bisection.
    pub fn inverse(&self, y: f64) -> f64 {
        let latency = self.0.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        if y <= 0.0 {
            return latency;
        }
        let mut hi = latency.max(1.0);
        while self.eval(hi) < y {
            hi *= 2.0;
        }
        let mut lo = latency;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) >= y {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

/// Maximum of a concave function on `[0, inf)` that eventually decreases:
/// grow the horizon until the function stops increasing, scan a grid, then
/// refine around the best grid point by ternary search.
pub fn concave_max(f: impl Fn(f64) -> f64) -> f64 {
    let mut horizon: f64 = 1e-9;
    while f(horizon * 1.01) > f(horizon) && horizon < 1e15 {
        horizon *= 2.0;
    }
    let horizon = horizon * 1.01;
    let n = 400;
    let step = horizon / n as f64;
    let mut best = 0;
    let mut best_val = f(0.0);
    for i in 1..=n {
        let v = f(i as f64 * step);
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    let mut lo = (best as f64 - 1.0).max(0.0) * step;
    let mut hi = (best as f64 + 1.0) * step;
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) < f(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    best_val.max(f(0.5 * (lo + hi)))
}

pub fn h_dev_oracle(a: &RawArrival, b: &RawService) -> f64 {
    concave_max(|t| b.inverse(a.eval(t)) - t).max(0.0)
}

pub fn v_dev_oracle(a: &RawArrival, b: &RawService) -> f64 {
    concave_max(|t| a.eval(t) - b.eval(t))
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if got == want {
        0.0
    } else {
        (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
    }
}

/// A random stable pair: 1 to 3 token buckets against 1 to 3 rate-latency
/// pieces, on scales typical of TSN links.
pub fn random_pair(rng: &mut ChaCha8Rng) -> (RawArrival, RawService) {
    loop {
        let na = rng.random_range(1..=3);
        let nb = rng.random_range(1..=3);
        let a = RawArrival(
            (0..na)
                .map(|_| (rng.random_range(0.0..5e6), rng.random_range(1.0..2e4)))
                .collect(),
        );
        let b = RawService(
            (0..nb)
                .map(|_| (rng.random_range(1e5..1e8), rng.random_range(0.0..1e-3)))
                .collect(),
        );
        if a.long_run_rate() < b.long_run_rate() {
            return (a, b);
        }
    }
}

/// The eight-switch connection map of the industrial example.
pub fn industrial_connections() -> IndexMap<String, Vec<String>> {
    let table: [(&str, &[&str]); 8] = [
        ("S1", &["S2", "S3", "S8"]),
        ("S2", &["S1", "S4", "S8"]),
        ("S3", &["S1", "S4", "S5", "S7", "S8"]),
        ("S4", &["S2", "S3", "S6", "S7", "S8"]),
        ("S5", &["S3", "S6", "S7"]),
        ("S6", &["S4", "S5", "S7"]),
        ("S7", &["S3", "S4", "S5", "S6"]),
        ("S8", &["S1", "S2", "S3", "S4"]),
    ];
    table
        .iter()
        .map(|(k, v)| (k.to_string(), v.iter().map(|s| s.to_string()).collect()))
        .collect()
}

/// Industrial-style parameters with random ranges, capacities and packet
/// sizes, at utilizations well below one.
pub fn industrial_params(seed: u64, options: AnalysisOptions) -> GenParams {
    GenParams {
        burst: Param::Range(80.0, 8192.0),
        arrival_rate: Param::Range(200.0, 2e4),
        max_packet_length: Param::Range(64.0, 1024.0),
        latency: Param::Range(2e-6, 2e-4),
        service_rate: Param::Range(1e6, 5e7),
        capacity: Some(Param::Range(1e7, 2.56e8)),
        seed,
        options,
    }
}

/// A random network over the industrial topology with 5 to 40 flows.
pub fn random_network(seed: u64, options: AnalysisOptions) -> OutputPortNetwork {
    let flows = 5 + (seed as usize * 7919) % 36;
    gen_fixed_topology(
        flows,
        &industrial_connections(),
        &industrial_params(seed, options),
    )
    .unwrap()
}
