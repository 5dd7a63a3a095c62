use indexmap::IndexMap;

use super::tfa::{Engine, TfaState};
use super::{AnalysisConfig, AnalysisError, CONVERGENCE_TOL};
use crate::minplus::ConcaveCurve;
use crate::model::{AnalysisOptions, OutputPortNetwork};

/// Converged bounds of one server.
#[derive(Debug, Clone, PartialEq)]
pub struct ServerState {
    /// Arrival curve of every flow crossing the server, keyed by flow name.
    pub arrivals: IndexMap<String, ConcaveCurve>,
    pub delay: f64,
    pub backlog: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub states: IndexMap<String, ServerState>,
    pub iterations: usize,
}

/// Smallest multiple of `quantum` that is not below `d`.
fn ceil_to(d: f64, quantum: f64) -> f64 {
    let k = (d / quantum).ceil();
    let v = k * quantum;
    if v < d {
        (k + 1.0) * quantum
    } else {
        v
    }
}

fn settled(old: f64, new: f64, quantized: bool) -> bool {
    if quantized {
        old == new
    } else {
        (new - old).abs() <= CONVERGENCE_TOL * new.abs()
    }
}

/// Iterates full TFA passes from zero delays. Every pass evaluates all
/// servers against the previous pass's delays, so a pass can be spread over
/// the executor without changing the result. With a CEIL quantum, delays are
/// rounded up to it after every pass.
pub(super) fn iterate(engine: &Engine, config: &AnalysisConfig) -> Result<TfaState, AnalysisError> {
    let n = engine.net.servers().len();
    let active = engine.analyzed();
    let quantum = engine.options.ceil_precision;
    let divergent = |iterations| AnalysisError::Divergent {
        cycles: engine.net.induced_graph().cycles(),
        iterations,
    };
    let limits: Vec<f64> = engine
        .sources
        .iter()
        .map(|a| config.explosion_factor * a.burst().max(1.0))
        .collect();

    let mut delays = vec![0.0; n];
    for iteration in 1..=config.max_iterations {
        let bounds = config.executor.map(&active, |&s| engine.bound(s, &delays));
        let mut next = vec![0.0; n];
        let mut backlogs = vec![0.0; n];
        for (&s, b) in active.iter().zip(bounds) {
            let b = b?;
            next[s] = match quantum {
                Some(q) => ceil_to(b.delay, q),
                None => b.delay,
            };
            backlogs[s] = b.backlog;
        }
        if next.iter().any(|d| !d.is_finite()) {
            return Err(divergent(iteration));
        }
        for (f, path) in engine.paths.iter().enumerate() {
            let rate = engine.sources[f].rate();
            let total = engine.upstream_delay(f, path.len(), &next);
            if engine.sources[f].burst() + rate * total > limits[f] {
                return Err(divergent(iteration));
            }
        }
        let converged = active
            .iter()
            .all(|&s| settled(delays[s], next[s], quantum.is_some()));
        delays = next;
        if converged {
            log::debug!("fixed point reached after {iteration} passes");
            return Ok(TfaState {
                delays,
                backlogs,
                iterations: iteration,
            });
        }
    }
    Err(divergent(config.max_iterations))
}

/// Solves the TFA equations of `net` by iteration and returns the per-server
/// state. Works on any network; acyclic ones settle after as many passes as
/// their longest path plus one.
pub fn fixed_point(
    net: &OutputPortNetwork,
    options: &AnalysisOptions,
    config: &AnalysisConfig,
) -> Result<FixedPoint, AnalysisError> {
    let engine = Engine::new(net, options)?;
    let state = iterate(&engine, config)?;
    let mut states = IndexMap::new();
    for s in engine.analyzed() {
        let mut arrivals = IndexMap::new();
        for (f, path) in engine.paths.iter().enumerate() {
            if let Some(k) = path.iter().position(|&x| x == s) {
                arrivals.insert(
                    net.flows()[f].name.clone(),
                    engine.arrival(f, k, &state.delays)?,
                );
            }
        }
        states.insert(
            net.servers()[s].name.clone(),
            ServerState {
                arrivals,
                delay: state.delays[s],
                backlog: state.backlogs[s],
            },
        );
    }
    Ok(FixedPoint {
        states,
        iterations: state.iterations,
    })
}
