use super::tfa::Engine;
use super::{timed, AnalysisConfig, AnalysisError, Method, NetworkResult};
use crate::minplus::{h_dev, residual_service, ConvexCurve, CurveError};
use crate::model::{AnalysisOptions, OutputPortNetwork};

/// End-to-end delay of flow `f`: its source curve against the concatenation
/// of the services left over by cross traffic at each hop. Cross traffic is
/// bounded by the converged TFA delays.
fn flow_bound(engine: &Engine, f: usize, delays: &[f64]) -> Result<f64, CurveError> {
    let mut service = ConvexCurve::unbounded();
    for &s in &engine.paths[f] {
        let cross = engine.aggregate(s, delays, Some(f))?;
        let left = residual_service(&engine.net.servers()[s].service, &cross)?;
        service = service.convolve(&left);
    }
    h_dev(&engine.sources[f], &service)
}

pub fn analyze_sfa(
    net: &OutputPortNetwork,
    options: &AnalysisOptions,
) -> Result<NetworkResult, AnalysisError> {
    analyze_sfa_with(net, options, &AnalysisConfig::default())
}

pub fn analyze_sfa_with(
    net: &OutputPortNetwork,
    options: &AnalysisOptions,
    config: &AnalysisConfig,
) -> Result<NetworkResult, AnalysisError> {
    let ((engine, state, e2e), elapsed) = timed(|| {
        let engine = Engine::new(net, options)?;
        let state = engine.run(config)?;
        let flows: Vec<usize> = (0..net.flows().len()).collect();
        let e2e = config
            .executor
            .map(&flows, |&f| flow_bound(&engine, f, &state.delays))
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
        Ok((engine, state, e2e))
    })?;
    let mut result = NetworkResult::new(net, Method::Sfa, *options);
    engine.fill_servers(&state, &mut result);
    for (flow, d) in net.flows().iter().zip(e2e) {
        result.flow_delays.insert(flow.name.clone(), d);
    }
    result.execution_time = elapsed;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::analyze_tfa;
    use crate::minplus::ConcaveCurve;
    use crate::model::{Flow, Server};

    fn server(name: &str, rate: f64, latency: f64) -> Server {
        Server::new(
            name,
            ConvexCurve::rate_latency(rate, latency).unwrap(),
            None,
        )
    }

    fn flow(name: &str, path: &[&str], rate: f64, burst: f64) -> Flow {
        Flow::new(
            name,
            path.iter().map(|s| s.to_string()).collect(),
            ConcaveCurve::token_bucket(rate, burst).unwrap(),
        )
    }

    #[test]
    fn lone_flow_pays_burst_once() {
        let net = OutputPortNetwork::new(
            "tandem",
            AnalysisOptions::default(),
            vec![server("a", 4e6, 10e-6), server("b", 4e6, 10e-6)],
            vec![flow("f", &["a", "b"], 1e4, 80.0)],
        )
        .unwrap();
        let sfa = analyze_sfa(&net, net.options()).unwrap();
        assert!((sfa.flow_delays["f"] - 40e-6).abs() < 1e-18);
        let tfa = analyze_tfa(&net, net.options()).unwrap();
        assert!(sfa.flow_delays["f"] < tfa.flow_delays["f"]);
        assert_eq!(sfa.server_delays, tfa.server_delays);
        assert_eq!(sfa.label, "native_SFA");
    }

    #[test]
    fn cross_traffic_reduces_service() {
        // f alone would see 1 + 10/10; g takes 5 bit/s and a 20-bit burst,
        // leaving rate 5 after latency 1 + 20/5.
        let net = OutputPortNetwork::new(
            "x",
            AnalysisOptions::default(),
            vec![server("s", 10.0, 1.0)],
            vec![flow("f", &["s"], 1.0, 10.0), flow("g", &["s"], 5.0, 20.0)],
        )
        .unwrap();
        let r = analyze_sfa(&net, net.options()).unwrap();
        let residual_latency = (10.0 * 1.0 + 20.0) / 5.0;
        assert!((r.flow_delays["f"] - (residual_latency + 10.0 / 5.0)).abs() < 1e-12);
    }
}
