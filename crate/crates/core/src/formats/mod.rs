//! Network description files: the XML physical-network format and the JSON
//! output-port format.
//!
//! Both readers reject unknown elements, attributes and keys by default;
//! [`ParseMode::Lenient`] logs and skips them instead. Writers render every
//! quantity so that reading the file back yields bit-identical values.

mod json;
mod xml;

use std::path::Path;

use thiserror::Error;

pub(crate) use json::to_pretty;
pub use json::{parse_json, parse_json_with, write_json};
pub use xml::{parse_xml, parse_xml_with, write_xml};

use crate::model::{
    output_port_to_physical, physical_to_output_port, AnalysisOptions, ModelError, Multiplexing,
    OutputPortNetwork, PhysicalNetwork, DEFAULT_CEIL_PRECISION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    #[default]
    Strict,
    Lenient,
}

impl ParseMode {
    fn unknown(self, at: &str, what: String) -> Result<(), FormatError> {
        match self {
            ParseMode::Strict => Err(FormatError::schema(at, format!("unknown {what}"))),
            ParseMode::Lenient => {
                log::warn!("{at}: ignoring unknown {what}");
                Ok(())
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed XML: {0}")]
    Xml(#[from] roxmltree::Error),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{at}: {message}")]
    Schema { at: String, message: String },
    #[error("{at}: {source}")]
    Quantity {
        at: String,
        #[source]
        source: ModelError,
    },
    #[error("unknown technology token `{0}`")]
    UnknownTechnology(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl FormatError {
    pub(crate) fn schema(at: &str, message: impl Into<String>) -> Self {
        FormatError::Schema {
            at: at.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn quantity(at: &str) -> impl FnOnce(ModelError) -> Self + '_ {
        move |source| FormatError::Quantity {
            at: at.to_string(),
            source,
        }
    }
}

/// Applies one technology/analysis-option token to `options`.
pub(crate) fn apply_token(
    options: &mut AnalysisOptions,
    token: &str,
    mux_set: &mut bool,
) -> Result<(), FormatError> {
    let mux = match token {
        "FIFO" => Some(Multiplexing::Fifo),
        "ARBITRARY" => Some(Multiplexing::Arbitrary),
        "IS" => {
            options.input_shaping = true;
            None
        }
        "PK" => {
            options.packetizer = true;
            None
        }
        "CEIL" => {
            options.ceil_precision.get_or_insert(DEFAULT_CEIL_PRECISION);
            None
        }
        other => return Err(FormatError::UnknownTechnology(other.to_string())),
    };
    if let Some(m) = mux {
        if *mux_set && options.multiplexing != m {
            return Err(FormatError::schema(
                "technology",
                "FIFO and ARBITRARY are mutually exclusive",
            ));
        }
        options.multiplexing = m;
        *mux_set = true;
    }
    Ok(())
}

/// Parses a plus-joined technology string such as `FIFO+IS+PK`.
pub fn parse_technology(text: &str) -> Result<AnalysisOptions, FormatError> {
    let mut options = AnalysisOptions::default();
    let mut mux_set = false;
    for token in text.split('+').map(str::trim).filter(|t| !t.is_empty()) {
        apply_token(&mut options, token, &mut mux_set)?;
    }
    Ok(options)
}

pub fn format_technology(options: &AnalysisOptions) -> String {
    let mut tokens = vec![options.multiplexing.to_string()];
    if options.input_shaping {
        tokens.push("IS".into());
    }
    if options.packetizer {
        tokens.push("PK".into());
    }
    if options.ceil_precision.is_some() {
        tokens.push("CEIL".into());
    }
    tokens.join("+")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocumentKind {
    PhysicalXml,
    OutputPortJson,
}

impl DocumentKind {
    /// Infers the kind from a `.xml` or `.json` extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "xml" => Some(DocumentKind::PhysicalXml),
            "json" => Some(DocumentKind::OutputPortJson),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            DocumentKind::PhysicalXml => "xml",
            DocumentKind::OutputPortJson => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NetworkDocument {
    Physical(PhysicalNetwork),
    OutputPort(OutputPortNetwork),
}

impl NetworkDocument {
    pub fn parse(text: &str, kind: DocumentKind, mode: ParseMode) -> Result<Self, FormatError> {
        Ok(match kind {
            DocumentKind::PhysicalXml => NetworkDocument::Physical(parse_xml_with(text, mode)?),
            DocumentKind::OutputPortJson => {
                NetworkDocument::OutputPort(parse_json_with(text, mode)?)
            }
        })
    }

    pub fn kind(&self) -> DocumentKind {
        match self {
            NetworkDocument::Physical(_) => DocumentKind::PhysicalXml,
            NetworkDocument::OutputPort(_) => DocumentKind::OutputPortJson,
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            NetworkDocument::Physical(p) => write_xml(p),
            NetworkDocument::OutputPort(n) => write_json(n),
        }
    }

    /// The network in the form analyses run on.
    pub fn to_output_port(&self) -> Result<OutputPortNetwork, ModelError> {
        match self {
            NetworkDocument::Physical(p) => physical_to_output_port(p),
            NetworkDocument::OutputPort(n) => Ok(n.clone()),
        }
    }
}

/// Converts `doc` to `to`; converting to the same kind returns a copy.
pub fn convert(doc: &NetworkDocument, to: DocumentKind) -> Result<NetworkDocument, ModelError> {
    Ok(match (doc, to) {
        (NetworkDocument::Physical(p), DocumentKind::OutputPortJson) => {
            NetworkDocument::OutputPort(physical_to_output_port(p)?)
        }
        (NetworkDocument::OutputPort(n), DocumentKind::PhysicalXml) => {
            NetworkDocument::Physical(output_port_to_physical(n))
        }
        _ => doc.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn technology_tokens() {
        let o = parse_technology("ARBITRARY+IS+PK+CEIL").unwrap();
        assert_eq!(o.multiplexing, Multiplexing::Arbitrary);
        assert!(o.input_shaping && o.packetizer);
        assert_eq!(o.ceil_precision, Some(DEFAULT_CEIL_PRECISION));
        assert_eq!(format_technology(&o), "ARBITRARY+IS+PK+CEIL");

        assert_eq!(parse_technology("").unwrap(), AnalysisOptions::default());
        assert!(
            matches!(parse_technology("FIFO+XX"), Err(FormatError::UnknownTechnology(t)) if t == "XX")
        );
        assert!(parse_technology("FIFO+ARBITRARY").is_err());
    }

    #[test]
    fn kind_from_extension() {
        assert_eq!(
            DocumentKind::from_path(Path::new("a/b.XML")),
            Some(DocumentKind::PhysicalXml)
        );
        assert_eq!(
            DocumentKind::from_path(Path::new("net.json")),
            Some(DocumentKind::OutputPortJson)
        );
        assert_eq!(DocumentKind::from_path(Path::new("net.txt")), None);
    }
}
