use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use indexmap::IndexMap;
use tsnbound::analysis::{analyze, analyze_batch, AnalysisConfig, Method};
use tsnbound::generators::{
    gen_fixed_topology, gen_interleave, gen_mesh, gen_ring, GenParams, Param,
};
use tsnbound::model::{AnalysisOptions, OutputPortNetwork};
use tsnbound::Executor;

const EXECUTORS: [(&str, Executor); 2] = [
    ("sequential", Executor::Sequential),
    ("parallel", Executor::Parallel),
];

fn uniform() -> GenParams {
    GenParams::fixed(800.0, 1e4, 4000.0, 1e-5, 1e8, Some(1e9))
}

fn industrial(flows: usize, seed: u64) -> OutputPortNetwork {
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
    let connections: IndexMap<String, Vec<String>> = table
        .iter()
        .map(|(k, v)| (k.to_string(), v.iter().map(|s| s.to_string()).collect()))
        .collect();
    let params = GenParams {
        burst: Param::Range(80.0, 8192.0),
        arrival_rate: Param::Range(200.0, 2e4),
        max_packet_length: Param::Range(512.0, 12_000.0),
        latency: Param::Range(2e-6, 2e-5),
        service_rate: Param::Range(1e8, 1e9),
        capacity: Some(Param::Range(1e9, 1e10)),
        seed,
        options: AnalysisOptions {
            input_shaping: true,
            ..Default::default()
        },
    };
    gen_fixed_topology(flows, &connections, &params).unwrap()
}

fn single_network(c: &mut Criterion) {
    let cases = [
        ("interleave-64", gen_interleave(64, &uniform()).unwrap()),
        ("mesh-13", gen_mesh(13, &uniform()).unwrap()),
        ("ring-32", gen_ring(32, &uniform()).unwrap()),
        ("industrial-500", industrial(500, 7)),
    ];
    for method in Method::ALL {
        let mut group = c.benchmark_group(format!("{method}"));
        for (name, net) in &cases {
            for (exec_name, executor) in EXECUTORS {
                let config = AnalysisConfig::with_executor(executor);
                group.bench_with_input(BenchmarkId::new(exec_name, name), net, |b, net| {
                    b.iter(|| analyze(black_box(net), method, net.options(), &config).unwrap())
                });
            }
        }
        group.finish();
    }
}

fn batch(c: &mut Criterion) {
    let nets: Vec<OutputPortNetwork> = (0..64).map(|seed| industrial(50, seed)).collect();
    let mut group = c.benchmark_group("batch-64x50");
    for (exec_name, executor) in EXECUTORS {
        let config = AnalysisConfig::with_executor(executor);
        group.bench_function(exec_name, |b| {
            b.iter(|| analyze_batch(black_box(&nets), &Method::ALL, &config))
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default()
        .sample_size(20)
        .warm_up_time(Duration::from_millis(500))
        .measurement_time(Duration::from_secs(3));
    targets = single_network, batch
}
criterion_main!(benches);
