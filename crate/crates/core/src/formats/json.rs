use serde::Serialize;
use serde_json::{json, Map, Value};

use super::{apply_token, FormatError, ParseMode};
use crate::minplus::{ConcaveCurve, ConvexCurve, RateLatency, TokenBucket};
use crate::model::quantity::{format_exact, format_with_unit, unit_of_dimension};
use crate::model::{
    parse_quantity, AnalysisOptions, Dimension, Flow, Multiplexing, OutputPortNetwork,
    QuantityInput, Server, Unit, DEFAULT_CEIL_PRECISION,
};

const UNIT_KEYS: [(&str, Dimension); 3] = [
    ("time_unit", Dimension::Time),
    ("data_unit", Dimension::Data),
    ("rate_unit", Dimension::Rate),
];

/// Default units in scope for bare numbers; inner objects override outer.
#[derive(Debug, Clone, Copy, Default)]
struct Scope {
    time: Option<Unit>,
    data: Option<Unit>,
    rate: Option<Unit>,
}

impl Scope {
    fn child(mut self, obj: &Map<String, Value>, at: &str) -> Result<Scope, FormatError> {
        for (key, dim) in UNIT_KEYS {
            let Some(v) = obj.get(key) else { continue };
            let text = v
                .as_str()
                .ok_or_else(|| FormatError::schema(at, format!("`{key}` must be a string")))?;
            let unit = unit_of_dimension(text, dim).map_err(FormatError::quantity(at))?;
            match dim {
                Dimension::Time => self.time = Some(unit),
                Dimension::Data => self.data = Some(unit),
                Dimension::Rate => self.rate = Some(unit),
            }
        }
        Ok(self)
    }

    fn unit(&self, dim: Dimension) -> Option<Unit> {
        match dim {
            Dimension::Time => self.time,
            Dimension::Data => self.data,
            Dimension::Rate => self.rate,
        }
    }

    fn quantity(&self, v: &Value, dim: Dimension, at: &str) -> Result<f64, FormatError> {
        let input = match v {
            Value::Number(n) => QuantityInput::Number(
                n.as_f64()
                    .ok_or_else(|| FormatError::schema(at, format!("{n} is not representable")))?,
            ),
            Value::String(s) => QuantityInput::Text(s),
            other => {
                return Err(FormatError::schema(
                    at,
                    format!("expected a quantity, found {other}"),
                ))
            }
        };
        parse_quantity(input, dim, self.unit(dim)).map_err(FormatError::quantity(at))
    }

    fn quantities(&self, v: &Value, dim: Dimension, at: &str) -> Result<Vec<f64>, FormatError> {
        let items = v
            .as_array()
            .ok_or_else(|| FormatError::schema(at, "expected an array"))?;
        items
            .iter()
            .enumerate()
            .map(|(i, item)| self.quantity(item, dim, &format!("{at}[{i}]")))
            .collect()
    }
}

fn object<'a>(
    v: &'a Value,
    at: &str,
    mode: ParseMode,
    allowed: &[&str],
) -> Result<&'a Map<String, Value>, FormatError> {
    let obj = v
        .as_object()
        .ok_or_else(|| FormatError::schema(at, "expected an object"))?;
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) && !UNIT_KEYS.iter().any(|(k, _)| k == key) {
            mode.unknown(at, format!("key `{key}`"))?;
        }
    }
    Ok(obj)
}

fn string<'a>(obj: &'a Map<String, Value>, key: &str, at: &str) -> Result<&'a str, FormatError> {
    obj.get(key)
        .ok_or_else(|| FormatError::schema(at, format!("missing `{key}`")))?
        .as_str()
        .ok_or_else(|| FormatError::schema(at, format!("`{key}` must be a string")))
}

/// Reads `{first: [...], second: [...]}` as position-paired quantities.
fn paired(
    v: &Value,
    keys: [(&str, Dimension); 2],
    scope: &Scope,
    at: &str,
    mode: ParseMode,
) -> Result<Vec<(f64, f64)>, FormatError> {
    let obj = object(v, at, mode, &[keys[0].0, keys[1].0])?;
    let mut columns = Vec::with_capacity(2);
    for (key, dim) in keys {
        let item = obj
            .get(key)
            .ok_or_else(|| FormatError::schema(at, format!("missing `{key}`")))?;
        columns.push(scope.quantities(item, dim, &format!("{at}.{key}"))?);
    }
    let (a, b) = (&columns[0], &columns[1]);
    if a.len() != b.len() {
        return Err(FormatError::schema(
            at,
            format!(
                "`{}` and `{}` differ in length ({} vs {})",
                keys[0].0,
                keys[1].0,
                a.len(),
                b.len()
            ),
        ));
    }
    if a.is_empty() {
        return Err(FormatError::schema(at, "a curve needs at least one piece"));
    }
    Ok(a.iter().copied().zip(b.iter().copied()).collect())
}

fn service_curve(
    v: &Value,
    scope: &Scope,
    at: &str,
    mode: ParseMode,
) -> Result<ConvexCurve, FormatError> {
    let pairs = paired(
        v,
        [("latencies", Dimension::Time), ("rates", Dimension::Rate)],
        scope,
        at,
        mode,
    )?;
    let pieces = pairs
        .into_iter()
        .map(|(t, r)| RateLatency::new(r, t))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| FormatError::quantity(at)(e.into()))?;
    ConvexCurve::new(pieces).map_err(|e| FormatError::quantity(at)(e.into()))
}

fn arrival_curve(
    v: &Value,
    scope: &Scope,
    at: &str,
    mode: ParseMode,
) -> Result<ConcaveCurve, FormatError> {
    let pairs = paired(
        v,
        [("bursts", Dimension::Data), ("rates", Dimension::Rate)],
        scope,
        at,
        mode,
    )?;
    let pieces = pairs
        .into_iter()
        .map(|(b, r)| TokenBucket::new(r, b))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| FormatError::quantity(at)(e.into()))?;
    ConcaveCurve::new(pieces).map_err(|e| FormatError::quantity(at)(e.into()))
}

fn optional<T>(
    obj: &Map<String, Value>,
    key: &str,
    f: impl FnOnce(&Value, &str) -> Result<T, FormatError>,
    at: &str,
) -> Result<Option<T>, FormatError> {
    obj.get(key)
        .map(|v| f(v, &format!("{at}.{key}")))
        .transpose()
}

pub fn parse_json(text: &str) -> Result<OutputPortNetwork, FormatError> {
    parse_json_with(text, ParseMode::Strict)
}

pub fn parse_json_with(text: &str, mode: ParseMode) -> Result<OutputPortNetwork, FormatError> {
    let doc: Value = serde_json::from_str(text)?;
    let top = object(&doc, "$", mode, &["network", "servers", "flows"])?;

    let at = "network";
    let net_val = top
        .get("network")
        .ok_or_else(|| FormatError::schema("$", "missing `network`"))?;
    let net = object(
        net_val,
        at,
        mode,
        &[
            "name",
            "packetizer",
            "multiplexing",
            "analysis_option",
            "min_packet_length",
            "max_packet_length",
            "service_curve",
            "capacity",
            "ceil_precision",
        ],
    )?;
    let scope = Scope::default().child(net, at)?;
    let name = string(net, "name", at)?.to_string();

    let mut options = AnalysisOptions::default();
    if let Some(m) = net.get("multiplexing") {
        options.multiplexing = match m.as_str() {
            Some("FIFO") => Multiplexing::Fifo,
            Some("ARBITRARY") => Multiplexing::Arbitrary,
            _ => {
                return Err(FormatError::schema(
                    at,
                    format!("multiplexing must be FIFO or ARBITRARY, found {m}"),
                ))
            }
        };
    }
    if let Some(p) = net.get("packetizer") {
        options.packetizer = p
            .as_bool()
            .ok_or_else(|| FormatError::schema(at, "`packetizer` must be a boolean"))?;
    }
    if let Some(opts) = net.get("analysis_option") {
        let opts = opts
            .as_array()
            .ok_or_else(|| FormatError::schema(at, "`analysis_option` must be an array"))?;
        let mut mux_set = true;
        for o in opts {
            match o.as_str() {
                Some(t @ ("FIFO" | "ARBITRARY")) => {
                    return Err(FormatError::schema(
                        at,
                        format!("`{t}` belongs in `multiplexing`"),
                    ))
                }
                Some(t) => apply_token(&mut options, t, &mut mux_set)?,
                None => return Err(FormatError::schema(at, "analysis options must be strings")),
            }
        }
    }
    if let Some(q) = optional(
        net,
        "ceil_precision",
        |v, a| scope.quantity(v, Dimension::Time, a),
        at,
    )? {
        options.ceil_precision = Some(q);
    }
    let default_min = optional(
        net,
        "min_packet_length",
        |v, a| scope.quantity(v, Dimension::Data, a),
        at,
    )?;
    let default_max = optional(
        net,
        "max_packet_length",
        |v, a| scope.quantity(v, Dimension::Data, a),
        at,
    )?;
    let default_service = optional(
        net,
        "service_curve",
        |v, a| service_curve(v, &scope, a, mode),
        at,
    )?;
    let default_capacity = optional(
        net,
        "capacity",
        |v, a| scope.quantity(v, Dimension::Rate, a),
        at,
    )?;

    let empty = Vec::new();
    let array = |key: &str| -> Result<&Vec<Value>, FormatError> {
        match top.get(key) {
            None => Ok(&empty),
            Some(v) => v
                .as_array()
                .ok_or_else(|| FormatError::schema("$", format!("`{key}` must be an array"))),
        }
    };

    let mut servers = Vec::new();
    for (i, v) in array("servers")?.iter().enumerate() {
        let at = format!("servers[{i}]");
        let obj = object(v, &at, mode, &["name", "service_curve", "capacity"])?;
        let scope = scope.child(obj, &at)?;
        let name = string(obj, "name", &at)?;
        let at = format!("servers[{i}] `{name}`");
        let service = match optional(
            obj,
            "service_curve",
            |v, a| service_curve(v, &scope, a, mode),
            &at,
        )? {
            Some(s) => s,
            None => default_service.clone().ok_or_else(|| {
                FormatError::schema(&at, "no service curve and no network default")
            })?,
        };
        let capacity = optional(
            obj,
            "capacity",
            |v, a| scope.quantity(v, Dimension::Rate, a),
            &at,
        )?
        .or(default_capacity);
        servers.push(Server::new(name, service, capacity));
    }

    let mut flows = Vec::new();
    for (i, v) in array("flows")?.iter().enumerate() {
        let at = format!("flows[{i}]");
        let obj = object(
            v,
            &at,
            mode,
            &[
                "name",
                "path",
                "arrival_curve",
                "max_packet_length",
                "min_packet_length",
            ],
        )?;
        let scope = scope.child(obj, &at)?;
        let name = string(obj, "name", &at)?;
        let at = format!("flows[{i}] `{name}`");
        let path = obj
            .get("path")
            .and_then(Value::as_array)
            .ok_or_else(|| FormatError::schema(&at, "missing `path` array"))?
            .iter()
            .map(|s| {
                s.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| FormatError::schema(&at, "path entries must be server names"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let arrival = obj
            .get("arrival_curve")
            .ok_or_else(|| FormatError::schema(&at, "missing `arrival_curve`"))?;
        let arrival = arrival_curve(arrival, &scope, &format!("{at}.arrival_curve"), mode)?;
        let min = optional(
            obj,
            "min_packet_length",
            |v, a| scope.quantity(v, Dimension::Data, a),
            &at,
        )?
        .or(default_min)
        .unwrap_or(0.0);
        let max = optional(
            obj,
            "max_packet_length",
            |v, a| scope.quantity(v, Dimension::Data, a),
            &at,
        )?
        .or(default_max)
        .unwrap_or(min);
        flows.push(Flow::new(name, path, arrival).with_packet_lengths(max, min));
    }

    Ok(OutputPortNetwork::new(name, options, servers, flows)?)
}

/// A quantity as a bare number in `unit` when that is exact, otherwise as
/// text in the base unit.
fn number(value: f64, unit: Unit) -> Value {
    match format_exact(value, unit).and_then(|t| t.parse::<f64>().ok()) {
        Some(x) if x.fract() == 0.0 && x.abs() < 9.0e15 => Value::from(x as i64),
        Some(x) => Value::from(x),
        None => Value::from(format_with_unit(value, Unit::base(unit.dimension()))),
    }
}

fn numbers(values: impl Iterator<Item = f64>, unit: Unit) -> Value {
    Value::Array(values.map(|v| number(v, unit)).collect())
}

pub fn write_json(net: &OutputPortNetwork) -> String {
    let options = net.options();
    let mut analysis_option = Vec::new();
    if options.input_shaping {
        analysis_option.push("IS");
    }
    if options.ceil_precision.is_some() {
        analysis_option.push("CEIL");
    }
    let mut network = json!({
        "name": net.name(),
        "packetizer": options.packetizer,
        "multiplexing": options.multiplexing.to_string(),
        "analysis_option": analysis_option,
        "time_unit": Unit::Us.symbol(),
        "data_unit": Unit::Byte.symbol(),
        "rate_unit": Unit::Mbps.symbol(),
    });
    if let Some(q) = options
        .ceil_precision
        .filter(|&q| q != DEFAULT_CEIL_PRECISION)
    {
        network["ceil_precision"] = number(q, Unit::Us);
    }

    let servers: Vec<Value> = net
        .servers()
        .iter()
        .map(|s| {
            let mut v = json!({
                "name": s.name,
                "service_curve": {
                    "latencies": numbers(s.service.pieces().iter().map(|p| p.latency()), Unit::Us),
                    "rates": numbers(s.service.pieces().iter().map(|p| p.rate()), Unit::Mbps),
                },
            });
            if let Some(c) = s.capacity {
                v["capacity"] = number(c, Unit::Mbps);
            }
            v
        })
        .collect();

    let flows: Vec<Value> = net
        .flows()
        .iter()
        .map(|f| {
            json!({
                "name": f.name,
                "path": f.path,
                "arrival_curve": {
                    "bursts": numbers(f.arrival.pieces().iter().map(|p| p.burst()), Unit::Byte),
                    "rates": numbers(f.arrival.pieces().iter().map(|p| p.rate()), Unit::Mbps),
                },
                "max_packet_length": number(f.max_packet_length, Unit::Byte),
                "min_packet_length": number(f.min_packet_length, Unit::Byte),
            })
        })
        .collect();

    let doc = json!({ "network": network, "servers": servers, "flows": flows });
    to_pretty(&doc)
}

/// Pretty JSON with four-space indentation and a trailing newline.
pub(crate) fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let fmt = serde_json::ser::PrettyFormatter::with_indent(b"    ");
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    value
        .serialize(&mut ser)
        .expect("JSON values always serialize");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelError;

    const DEMO: &str = include_str!("../../tests/fixtures/demo.json");

    fn bucket(rate: f64, burst: f64) -> TokenBucket {
        TokenBucket::new(rate, burst).unwrap()
    }

    #[test]
    fn demo_values() {
        let n = parse_json(DEMO).unwrap();
        assert_eq!(n.servers().len(), 3);
        assert_eq!(n.flows().len(), 3);
        assert!(n.options().input_shaping && !n.options().packetizer);

        let s0 = &n.servers()[0];
        let expected = ConvexCurve::new([
            RateLatency::new(4e6, 1e-5).unwrap(),
            RateLatency::new(50e6, 1e-3).unwrap(),
        ])
        .unwrap();
        assert_eq!(s0.service, expected);
        assert_eq!(s0.capacity, Some(1e8));
        assert_eq!(n.servers()[1].service, expected);

        // f0 overrides the rate unit to kbps, so its bare 0.5 is 500 bit/s.
        let f0 = &n.flows()[0];
        assert_eq!(
            f0.arrival.pieces(),
            &[bucket(1e4, 80.0), bucket(500.0, 16000.0)]
        );
        assert_eq!((f0.max_packet_length, f0.min_packet_length), (400.0, 32.0));
        assert_eq!(n.flows()[2].arrival.pieces(), &[bucket(1e4, 80.0)]);
    }

    #[test]
    fn local_time_unit_applies() {
        let text = r#"{"network": {"name": "n"}, "servers": [
            {"name": "s", "service_curve": {"latencies": [10], "rates": ["1Mbps"]}, "time_unit": "us"}]}"#;
        let n = parse_json(text).unwrap();
        assert_eq!(n.servers()[0].service.latency(), 1e-5);
    }

    #[test]
    fn demo_round_trip() {
        let n = parse_json(DEMO).unwrap();
        let text = write_json(&n);
        let back = parse_json(&text).unwrap();
        assert_eq!(back, n);
        assert_eq!(write_json(&back), text);
        assert!(text.contains("\n    \"network\": {"));
    }

    #[test]
    fn empty_flows_are_written() {
        let n = OutputPortNetwork::new("e", AnalysisOptions::default(), vec![], vec![]).unwrap();
        let text = write_json(&n);
        assert!(text.contains("\"flows\": []"));
        assert_eq!(parse_json(&text).unwrap(), n);
    }

    #[test]
    fn inexact_values_fall_back_to_base_units() {
        let s = Server::new(
            "s",
            ConvexCurve::rate_latency(1.0 / 3.0, 0.1 + 0.2).unwrap(),
            None,
        );
        let n = OutputPortNetwork::new("x", AnalysisOptions::default(), vec![s], vec![]).unwrap();
        assert_eq!(parse_json(&write_json(&n)).unwrap(), n);
    }

    #[test]
    fn errors() {
        let mismatch = r#"{"network": {"name": "n", "data_unit": "B", "rate_unit": "bps"},
            "servers": [{"name": "s", "service_curve": {"latencies": ["0s"], "rates": ["1Mbps"]}}],
            "flows": [{"name": "f", "path": ["s"], "arrival_curve": {"bursts": [1], "rates": [1, 2]}}]}"#;
        assert!(
            matches!(parse_json(mismatch), Err(FormatError::Schema { message, .. }) if message.contains("differ in length"))
        );

        let unknown_server = r#"{"network": {"name": "n"}, "servers": [],
            "flows": [{"name": "f", "path": ["s"], "arrival_curve": {"bursts": ["1B"], "rates": ["1bps"]}}]}"#;
        assert!(matches!(
            parse_json(unknown_server),
            Err(FormatError::Model(ModelError::UnknownServer { .. }))
        ));

        let no_name = r#"{"network": {}}"#;
        assert!(parse_json(no_name).is_err());

        let no_service = r#"{"network": {"name": "n"}, "servers": [{"name": "s"}]}"#;
        assert!(parse_json(no_service).is_err());

        let bare = r#"{"network": {"name": "n"}, "servers": [
            {"name": "s", "service_curve": {"latencies": [1], "rates": ["1Mbps"]}}]}"#;
        assert!(matches!(
            parse_json(bare),
            Err(FormatError::Quantity {
                source: ModelError::MissingUnit { .. },
                ..
            })
        ));

        let wrong_dim = r#"{"network": {"name": "n", "time_unit": "Mbps"}}"#;
        assert!(parse_json(wrong_dim).is_err());

        assert!(matches!(parse_json("{"), Err(FormatError::Json(_))));
        assert!(parse_json(r#"{"network": {"name": "n",}}"#).is_err());
    }

    #[test]
    fn network_level_service_default() {
        let text = r#"{"network": {"name": "n", "service_curve": {"latencies": ["1us"], "rates": ["1Gbps"]}, "capacity": "2Gbps"},
            "servers": [{"name": "s"}]}"#;
        let n = parse_json(text).unwrap();
        assert_eq!(
            n.servers()[0].service,
            ConvexCurve::rate_latency(1e9, 1e-6).unwrap()
        );
        assert_eq!(n.servers()[0].capacity, Some(2e9));
    }

    #[test]
    fn unknown_keys_depend_on_mode() {
        let text = r#"{"network": {"name": "n", "colour": "blue"}, "extra": 1}"#;
        assert!(matches!(parse_json(text), Err(FormatError::Schema { .. })));
        assert_eq!(
            parse_json_with(text, ParseMode::Lenient).unwrap().name(),
            "n"
        );
    }

    #[test]
    fn analysis_options() {
        let text = r#"{"network": {"name": "n", "multiplexing": "ARBITRARY", "analysis_option": ["IS", "PK", "CEIL"], "ceil_precision": "1ns"}}"#;
        let n = parse_json(text).unwrap();
        let o = n.options();
        assert_eq!(o.multiplexing, Multiplexing::Arbitrary);
        assert!(o.input_shaping && o.packetizer);
        assert_eq!(o.ceil_precision, Some(1e-9));
        assert_eq!(parse_json(&write_json(&n)).unwrap(), n);
        assert!(parse_json(r#"{"network": {"name": "n", "analysis_option": ["FIFO"]}}"#).is_err());
    }
}
