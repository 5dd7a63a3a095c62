use std::fmt::Write;

use roxmltree::Node as XmlNode;

use super::{format_technology, parse_technology, FormatError, ParseMode};
use crate::minplus::{ConcaveCurve, TokenBucket};
use crate::model::quantity::format_with_unit;
use crate::model::{
    parse_quantity, Dimension, Link, NetworkDefaults, Node, NodeKind, PhysicalFlow,
    PhysicalNetwork, PortParams, QuantityInput, Unit, DEFAULT_CEIL_PRECISION,
};

const PORT_ATTRS: [&str; 3] = ["service-latency", "service-rate", "transmission-capacity"];

pub fn parse_xml(text: &str) -> Result<PhysicalNetwork, FormatError> {
    parse_xml_with(text, ParseMode::Strict)
}

pub fn parse_xml_with(text: &str, mode: ParseMode) -> Result<PhysicalNetwork, FormatError> {
    let doc = roxmltree::Document::parse(text)?;
    let root = doc.root_element();
    if root.tag_name().name() != "elements" {
        return Err(FormatError::schema(
            &format!("<{}>", root.tag_name().name()),
            "root element must be <elements>",
        ));
    }

    let mut network = None;
    let mut nodes = Vec::new();
    let mut links = Vec::new();
    let mut flows = Vec::new();
    for el in root.children().filter(XmlNode::is_element) {
        match el.tag_name().name() {
            "network" => {
                if network.is_some() {
                    return Err(FormatError::schema(
                        "<elements>",
                        "more than one <network> element",
                    ));
                }
                network = Some(el);
            }
            "station" | "switch" => nodes.push(parse_node(el, mode)?),
            "link" => links.push(parse_link(el, mode)?),
            "flow" => flows.push(parse_flow(el, mode)?),
            other => mode.unknown("<elements>", format!("element <{other}>"))?,
        }
    }
    let Some(net_el) = network else {
        return Err(FormatError::schema(
            "<elements>",
            "missing <network> element",
        ));
    };

    let at = "<network>";
    check_attrs(
        net_el,
        at,
        mode,
        &[
            "name",
            "technology",
            "minimum-packet-size",
            "maximum-packet-size",
            "ceil-precision",
        ],
        true,
    )?;
    let mut options = parse_technology(net_el.attribute("technology").unwrap_or(""))?;
    if let Some(q) = single(net_el, "ceil-precision", Dimension::Time, at)? {
        options.ceil_precision = Some(q);
    }
    options.validate()?;
    let defaults = NetworkDefaults {
        port: port_params(net_el, at)?,
        min_packet_length: single(net_el, "minimum-packet-size", Dimension::Data, at)?,
        max_packet_length: single(net_el, "maximum-packet-size", Dimension::Data, at)?,
    };

    let phys = PhysicalNetwork {
        name: required(net_el, "name", at)?.to_string(),
        options,
        defaults,
        nodes,
        links,
        flows,
    };
    phys.validate()?;
    Ok(phys)
}

fn required<'a>(el: XmlNode<'a, '_>, attr: &str, at: &str) -> Result<&'a str, FormatError> {
    el.attribute(attr)
        .ok_or_else(|| FormatError::schema(at, format!("missing attribute `{attr}`")))
}

fn context(el: XmlNode) -> String {
    match el.attribute("name") {
        Some(name) => format!("<{} name=\"{name}\">", el.tag_name().name()),
        None => format!("<{}>", el.tag_name().name()),
    }
}

fn check_attrs(
    el: XmlNode,
    at: &str,
    mode: ParseMode,
    allowed: &[&str],
    port: bool,
) -> Result<(), FormatError> {
    for a in el.attributes() {
        let name = a.name();
        if !allowed.contains(&name) && !(port && PORT_ATTRS.contains(&name)) {
            mode.unknown(at, format!("attribute `{name}`"))?;
        }
    }
    Ok(())
}

fn list(
    el: XmlNode,
    attr: &str,
    dim: Dimension,
    at: &str,
) -> Result<Option<Vec<f64>>, FormatError> {
    let Some(text) = el.attribute(attr) else {
        return Ok(None);
    };
    let values = text
        .split_whitespace()
        .map(|t| parse_quantity(QuantityInput::Text(t), dim, None))
        .collect::<Result<Vec<_>, _>>()
        .map_err(FormatError::quantity(at))?;
    if values.is_empty() {
        return Err(FormatError::schema(
            at,
            format!("attribute `{attr}` is empty"),
        ));
    }
    Ok(Some(values))
}

fn single(el: XmlNode, attr: &str, dim: Dimension, at: &str) -> Result<Option<f64>, FormatError> {
    match list(el, attr, dim, at)? {
        None => Ok(None),
        Some(v) if v.len() == 1 => Ok(Some(v[0])),
        Some(_) => Err(FormatError::schema(
            at,
            format!("attribute `{attr}` takes one value"),
        )),
    }
}

fn port_params(el: XmlNode, at: &str) -> Result<PortParams, FormatError> {
    Ok(PortParams {
        service_latencies: list(el, "service-latency", Dimension::Time, at)?,
        service_rates: list(el, "service-rate", Dimension::Rate, at)?,
        capacity: single(el, "transmission-capacity", Dimension::Rate, at)?,
    })
}

fn no_children(el: XmlNode, at: &str, mode: ParseMode) -> Result<(), FormatError> {
    for c in el.children().filter(XmlNode::is_element) {
        mode.unknown(at, format!("element <{}>", c.tag_name().name()))?;
    }
    Ok(())
}

fn parse_node(el: XmlNode, mode: ParseMode) -> Result<Node, FormatError> {
    let at = context(el);
    check_attrs(el, &at, mode, &["name"], true)?;
    no_children(el, &at, mode)?;
    Ok(Node {
        name: required(el, "name", &at)?.to_string(),
        kind: if el.tag_name().name() == "switch" {
            NodeKind::Switch
        } else {
            NodeKind::Station
        },
        port: port_params(el, &at)?,
    })
}

fn parse_link(el: XmlNode, mode: ParseMode) -> Result<Link, FormatError> {
    let at = context(el);
    check_attrs(
        el,
        &at,
        mode,
        &["name", "from", "to", "fromPort", "toPort"],
        true,
    )?;
    no_children(el, &at, mode)?;
    Ok(Link {
        name: required(el, "name", &at)?.to_string(),
        from: required(el, "from", &at)?.to_string(),
        to: required(el, "to", &at)?.to_string(),
        from_port: required(el, "fromPort", &at)?.to_string(),
        to_port: required(el, "toPort", &at)?.to_string(),
        port: port_params(el, &at)?,
    })
}

fn parse_flow(el: XmlNode, mode: ParseMode) -> Result<PhysicalFlow, FormatError> {
    let at = context(el);
    check_attrs(
        el,
        &at,
        mode,
        &[
            "name",
            "arrival-curve",
            "lb-burst",
            "lb-rate",
            "maximum-packet-size",
            "minimum-packet-size",
            "source",
        ],
        false,
    )?;
    if let Some(kind) = el.attribute("arrival-curve") {
        if kind != "leaky-bucket" {
            return Err(FormatError::schema(
                &at,
                format!("unsupported arrival curve `{kind}`"),
            ));
        }
    }
    let missing = |attr: &str| FormatError::schema(&at, format!("missing attribute `{attr}`"));
    let bursts = list(el, "lb-burst", Dimension::Data, &at)?.ok_or_else(|| missing("lb-burst"))?;
    let rates = list(el, "lb-rate", Dimension::Rate, &at)?.ok_or_else(|| missing("lb-rate"))?;
    if bursts.len() != rates.len() {
        return Err(FormatError::schema(
            &at,
            "lb-burst and lb-rate differ in length",
        ));
    }
    let arrival = ConcaveCurve::new(
        rates
            .iter()
            .zip(&bursts)
            .map(|(&r, &b)| TokenBucket::new(r, b))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| FormatError::quantity(&at)(e.into()))?,
    )
    .map_err(|e| FormatError::quantity(&at)(e.into()))?;

    let mut targets = Vec::new();
    for t in el.children().filter(XmlNode::is_element) {
        if t.tag_name().name() != "target" {
            mode.unknown(&at, format!("element <{}>", t.tag_name().name()))?;
            continue;
        }
        let mut hops = Vec::new();
        for p in t.children().filter(XmlNode::is_element) {
            if p.tag_name().name() != "path" {
                mode.unknown(&at, format!("element <{}>", p.tag_name().name()))?;
                continue;
            }
            check_attrs(p, &at, mode, &["node"], false)?;
            hops.push(required(p, "node", &at)?.to_string());
        }
        targets.push(hops);
    }

    Ok(PhysicalFlow {
        name: required(el, "name", &at)?.to_string(),
        source: required(el, "source", &at)?.to_string(),
        targets,
        arrival,
        max_packet_length: single(el, "maximum-packet-size", Dimension::Data, &at)?,
        min_packet_length: single(el, "minimum-packet-size", Dimension::Data, &at)?,
    })
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

struct Tag(String);

impl Tag {
    fn new(name: &str) -> Self {
        Tag(format!("<{name}"))
    }

    fn attr(mut self, key: &str, value: &str) -> Self {
        write!(self.0, " {key}=\"{}\"", escape(value)).unwrap();
        self
    }

    fn quantities(self, key: &str, values: Option<&[f64]>, unit: Unit) -> Self {
        match values {
            Some(v) => {
                let text: Vec<String> = v.iter().map(|&x| format_with_unit(x, unit)).collect();
                self.attr(key, &text.join(" "))
            }
            None => self,
        }
    }

    fn quantity(self, key: &str, value: Option<f64>, unit: Unit) -> Self {
        self.quantities(key, value.as_ref().map(std::slice::from_ref), unit)
    }

    fn port(self, p: &PortParams) -> Self {
        self.quantities("service-latency", p.service_latencies.as_deref(), Unit::Us)
            .quantities("service-rate", p.service_rates.as_deref(), Unit::Mbps)
            .quantity("transmission-capacity", p.capacity, Unit::Mbps)
    }
}

pub fn write_xml(phys: &PhysicalNetwork) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<elements>\n");
    let mut line = |depth: usize, text: &str| {
        out.push_str(&"    ".repeat(depth));
        out.push_str(text);
        out.push('\n');
    };

    let ceil = phys
        .options
        .ceil_precision
        .filter(|&q| q != DEFAULT_CEIL_PRECISION);
    let net = Tag::new("network")
        .attr("name", &phys.name)
        .attr("technology", &format_technology(&phys.options))
        .quantity(
            "minimum-packet-size",
            phys.defaults.min_packet_length,
            Unit::Byte,
        )
        .quantity(
            "maximum-packet-size",
            phys.defaults.max_packet_length,
            Unit::Byte,
        )
        .quantity("ceil-precision", ceil, Unit::Us)
        .port(&phys.defaults.port);
    line(1, &format!("{}/>", net.0));

    for n in &phys.nodes {
        let kind = match n.kind {
            NodeKind::Station => "station",
            NodeKind::Switch => "switch",
        };
        line(
            1,
            &format!("{}/>", Tag::new(kind).attr("name", &n.name).port(&n.port).0),
        );
    }
    for l in &phys.links {
        let tag = Tag::new("link")
            .attr("name", &l.name)
            .attr("from", &l.from)
            .attr("to", &l.to)
            .attr("fromPort", &l.from_port)
            .attr("toPort", &l.to_port)
            .port(&l.port);
        line(1, &format!("{}/>", tag.0));
    }
    for f in &phys.flows {
        let rates: Vec<f64> = f.arrival.pieces().iter().map(|p| p.rate()).collect();
        let bursts: Vec<f64> = f.arrival.pieces().iter().map(|p| p.burst()).collect();
        let tag = Tag::new("flow")
            .attr("name", &f.name)
            .attr("arrival-curve", "leaky-bucket")
            .quantities("lb-burst", Some(&bursts), Unit::Byte)
            .quantities("lb-rate", Some(&rates), Unit::Mbps)
            .quantity("maximum-packet-size", f.max_packet_length, Unit::Byte)
            .quantity("minimum-packet-size", f.min_packet_length, Unit::Byte)
            .attr("source", &f.source);
        line(1, &format!("{}>", tag.0));
        for target in &f.targets {
            line(2, "<target>");
            for hop in target {
                line(3, &format!("{}/>", Tag::new("path").attr("node", hop).0));
            }
            line(2, "</target>");
        }
        line(1, "</flow>");
    }
    out.push_str("</elements>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AnalysisOptions, ModelError, Multiplexing};

    const DEMO: &str = include_str!("../../tests/fixtures/demo.xml");

    fn wrap(body: &str) -> String {
        format!("<elements>{body}</elements>")
    }

    #[test]
    fn demo_structure() {
        let p = parse_xml(DEMO).unwrap();
        assert_eq!(p.name, "demo");
        let stations = p
            .nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Station)
            .count();
        assert_eq!((stations, p.nodes.len() - stations), (5, 2));
        assert_eq!(p.links.len(), 6);
        assert_eq!(p.flows.len(), 3);
        assert_eq!(
            p.options,
            AnalysisOptions {
                multiplexing: Multiplexing::Fifo,
                input_shaping: true,
                ..Default::default()
            }
        );
        assert_eq!(p.defaults.min_packet_length, Some(32.0));
        let s0 = p.node("s0").unwrap();
        assert_eq!(s0.port.service_latencies.as_deref(), Some(&[1e-5][..]));
        assert_eq!(s0.port.service_rates.as_deref(), Some(&[4e6][..]));
        assert_eq!(p.links[3].port.capacity, Some(1e7));
        assert_eq!(
            p.flows[2].targets,
            vec![vec!["s1".to_string(), "sink0".to_string()]]
        );
        assert_eq!(p.flows[0].max_packet_length, Some(400.0));
    }

    #[test]
    fn demo_round_trip() {
        let p = parse_xml(DEMO).unwrap();
        let text = write_xml(&p);
        assert_eq!(parse_xml(&text).unwrap(), p);
        assert_eq!(write_xml(&parse_xml(&text).unwrap()), text);
    }

    #[test]
    fn network_defaults_stay_on_network() {
        let text = wrap(
            r#"<network name="n" service-rate="1Mbps 5Mbps" service-latency="1us 2ms" transmission-capacity="1Gbps"/>
               <switch name="a"/><station name="b"/>
               <link name="l" from="a" to="b" fromPort="o0" toPort="i0"/>"#,
        );
        let p = parse_xml(&text).unwrap();
        assert_eq!(p.defaults.port.service_rates, Some(vec![1e6, 5e6]));
        let out = write_xml(&p);
        assert_eq!(out.matches("service-rate").count(), 1);
        assert!(out.contains(r#"<switch name="a"/>"#));
        assert_eq!(parse_xml(&out).unwrap(), p);
    }

    #[test]
    fn technology_with_all_tokens() {
        let p = parse_xml(&wrap(
            r#"<network name="n" technology="ARBITRARY+IS+PK+CEIL"/>"#,
        ))
        .unwrap();
        assert_eq!(p.options.multiplexing, Multiplexing::Arbitrary);
        assert!(p.options.input_shaping && p.options.packetizer);
        assert_eq!(p.options.ceil_precision, Some(DEFAULT_CEIL_PRECISION));

        let p = parse_xml(&wrap(
            r#"<network name="n" technology="CEIL" ceil-precision="1ns"/>"#,
        ))
        .unwrap();
        assert_eq!(p.options.ceil_precision, Some(1e-9));
        assert_eq!(parse_xml(&write_xml(&p)).unwrap(), p);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_xml("<elements/>"),
            Err(FormatError::Schema { .. })
        ));
        let two = wrap(r#"<network name="a"/><network name="b"/>"#);
        assert!(parse_xml(&two).is_err());
        let bad = wrap(r#"<network name="a" technology="FIFO+FAST"/>"#);
        assert!(matches!(
            parse_xml(&bad),
            Err(FormatError::UnknownTechnology(_))
        ));
        let undefined = wrap(
            r#"<network name="a"/><switch name="s"/>
               <link name="l" from="s" to="ghost" fromPort="o0" toPort="i0"/>"#,
        );
        assert!(matches!(
            parse_xml(&undefined),
            Err(FormatError::Model(ModelError::UndefinedNode { .. }))
        ));
        let no_link = wrap(
            r#"<network name="a"/><station name="x"/><switch name="s"/>
               <flow name="f" lb-burst="1B" lb-rate="1kbps" source="x"><target><path node="s"/></target></flow>"#,
        );
        assert!(matches!(
            parse_xml(&no_link),
            Err(FormatError::Model(ModelError::NoLink { .. }))
        ));
        let malformed = wrap(r#"<network name="a" minimum-packet-size="4 parsecs"/>"#);
        assert!(matches!(
            parse_xml(&malformed),
            Err(FormatError::Quantity { .. })
        ));
        assert!(matches!(parse_xml("<elements>"), Err(FormatError::Xml(_))));
    }

    #[test]
    fn unknown_attributes_depend_on_mode() {
        let text = wrap(r#"<network name="a" colour="blue"/><router name="r"/>"#);
        assert!(parse_xml(&text).is_err());
        let p = parse_xml_with(&text, ParseMode::Lenient).unwrap();
        assert_eq!(p.name, "a");
        assert!(p.nodes.is_empty());
    }

    #[test]
    fn names_are_escaped() {
        let text = wrap(r#"<network name="a &amp; &quot;b&quot;"/>"#);
        let p = parse_xml(&text).unwrap();
        assert_eq!(p.name, "a & \"b\"");
        assert_eq!(parse_xml(&write_xml(&p)).unwrap(), p);
    }
}
