use std::fmt::{self, Write};

use super::ResultSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeUnit {
    Ns,
    Us,
    Ms,
    S,
}

impl TimeUnit {
    const LARGEST_FIRST: [TimeUnit; 4] = [TimeUnit::S, TimeUnit::Ms, TimeUnit::Us, TimeUnit::Ns];

    /// Seconds per unit.
    pub fn seconds(self) -> f64 {
        match self {
            TimeUnit::Ns => 1e-9,
            TimeUnit::Us => 1e-6,
            TimeUnit::Ms => 1e-3,
            TimeUnit::S => 1.0,
        }
    }

    /// `seconds` expressed in this unit.
    pub fn scale(self, seconds: f64) -> f64 {
        match self {
            TimeUnit::Ns => seconds * 1e9,
            TimeUnit::Us => seconds * 1e6,
            TimeUnit::Ms => seconds * 1e3,
            TimeUnit::S => seconds,
        }
    }
}

impl fmt::Display for TimeUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TimeUnit::Ns => "ns",
            TimeUnit::Us => "us",
            TimeUnit::Ms => "ms",
            TimeUnit::S => "s",
        })
    }
}

/// Largest unit in which the smallest positive value is at least one;
/// nanoseconds when no value is positive.
pub fn display_unit(seconds: impl IntoIterator<Item = f64>) -> TimeUnit {
    let smallest = seconds
        .into_iter()
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !smallest.is_finite() {
        return TimeUnit::Ns;
    }
    TimeUnit::LARGEST_FIRST
        .into_iter()
        .find(|u| u.scale(smallest) >= 1.0)
        .unwrap_or(TimeUnit::Ns)
}

fn fixed3(v: f64) -> String {
    format!("{v:.3}")
}

/// Three significant digits without trailing zeros.
fn significant3(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let digits = (2 - v.abs().log10().floor() as i32).max(0) as usize;
    let text = format!("{v:.digits$}");
    if text.contains('.') {
        text.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        text
    }
}

fn table_row(out: &mut String, cells: &[String]) {
    writeln!(out, "| {} |", cells.join(" | ")).unwrap();
}

fn table_header(out: &mut String, cells: &[String]) {
    table_row(out, cells);
    let rule: Vec<String> = cells
        .iter()
        .enumerate()
        .map(|(i, _)| if i == 0 { ":---".into() } else { "---:".into() })
        .collect();
    table_row(out, &rule);
}

/// Markdown report with six sections: flow end-to-end delays (with the
/// per-flow minimum over methods), server delays, execution times, topology
/// of the induced graph, flow paths and link utilization.
pub fn export_markdown(rs: &ResultSet) -> String {
    let net = rs.network();
    let results = rs.results();
    let labels: Vec<String> = results.iter().map(|r| r.label.clone()).collect();
    let mut out = String::new();
    writeln!(out, "# Delay analysis report: {}\n", net.name()).unwrap();

    let unit = display_unit(results.iter().flat_map(|r| r.flow_delays.values().copied()));
    writeln!(out, "## Flow end-to-end delay ({unit})\n").unwrap();
    let mut header = vec!["Flow".to_string()];
    header.extend(labels.iter().cloned());
    header.push("min".into());
    table_header(&mut out, &header);
    for flow in net.flows() {
        let raw: Vec<Option<f64>> = results
            .iter()
            .map(|r| r.flow_delays.get(&flow.name).copied())
            .collect();
        let mut row = vec![flow.name.clone()];
        row.extend(
            raw.iter()
                .map(|v| v.map_or("-".into(), |v| fixed3(unit.scale(v)))),
        );
        let min = raw.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        row.push(if min.is_finite() {
            fixed3(unit.scale(min))
        } else {
            "-".into()
        });
        table_row(&mut out, &row);
    }

    let unit = display_unit(
        results
            .iter()
            .flat_map(|r| r.server_delays.values().copied()),
    );
    writeln!(out, "\n## Server delay ({unit})\n").unwrap();
    let mut header = vec!["Server".to_string()];
    header.extend(labels.iter().cloned());
    table_header(&mut out, &header);
    for server in net.servers() {
        let raw: Vec<Option<f64>> = results
            .iter()
            .map(|r| r.server_delays.get(&server.name).copied())
            .collect();
        if raw.iter().all(Option::is_none) {
            continue;
        }
        let mut row = vec![server.name.clone()];
        row.extend(
            raw.iter()
                .map(|v| v.map_or("-".into(), |v| fixed3(unit.scale(v)))),
        );
        table_row(&mut out, &row);
    }

    let unit = display_unit(results.iter().map(|r| r.execution_time.as_secs_f64()));
    writeln!(out, "\n## Execution time ({unit})\n").unwrap();
    table_header(&mut out, &["Method".into(), "Time".into()]);
    for r in results {
        table_row(
            &mut out,
            &[
                r.label.clone(),
                fixed3(unit.scale(r.execution_time.as_secs_f64())),
            ],
        );
    }

    let graph = net.induced_graph();
    writeln!(out, "\n## Network topology\n").unwrap();
    for i in 0..graph.node_count() {
        let next: Vec<&str> = graph
            .successors(i)
            .into_iter()
            .map(|j| graph.name(j))
            .collect();
        if next.is_empty() {
            writeln!(out, "- {}", graph.name(i)).unwrap();
        } else {
            writeln!(out, "- {} -> {}", graph.name(i), next.join(", ")).unwrap();
        }
    }
    writeln!(
        out,
        "\n```dot\ndigraph \"{}\" {{",
        net.name().replace('"', "\\\"")
    )
    .unwrap();
    for i in 0..graph.node_count() {
        writeln!(out, "    \"{}\";", graph.name(i).replace('"', "\\\"")).unwrap();
    }
    for (a, b) in graph.edges() {
        writeln!(
            out,
            "    \"{}\" -> \"{}\";",
            a.replace('"', "\\\""),
            b.replace('"', "\\\"")
        )
        .unwrap();
    }
    writeln!(out, "}}\n```").unwrap();

    writeln!(out, "\n## Flow paths\n").unwrap();
    for flow in net.flows() {
        writeln!(out, "- {}: {}", flow.name, flow.path.join(" -> ")).unwrap();
    }

    writeln!(out, "\n## Link utilization\n").unwrap();
    table_header(&mut out, &["Server".into(), "Utilization".into()]);
    for (server, u) in net.link_utilization() {
        table_row(&mut out, &[server, significant3(u)]);
    }
    out
}
