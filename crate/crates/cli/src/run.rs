use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use tempfile::NamedTempFile;
use thiserror::Error;
use tsnbound::analysis::{analyze, AnalysisConfig, AnalysisError, Method};
use tsnbound::formats::{
    convert, write_json, DocumentKind, FormatError, NetworkDocument, ParseMode,
};
use tsnbound::generators::{
    gen_fixed_topology, gen_interleave, gen_mesh, gen_ring, GenError, GenParams, Param,
};
use tsnbound::model::{
    parse_quantity, AnalysisOptions, Dimension, ModelError, Multiplexing, QuantityInput,
};
use tsnbound::report::{export_json, export_markdown, ResultSet};
use tsnbound::Executor;

use crate::args::{
    AnalyzeArgs, Command, ConvertArgs, FormatArg, GenerateArgs, InputArgs, MultiplexingArg,
    OptionArgs, Topology,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Unstable(AnalysisError),
    #[error("{0}")]
    Divergent(AnalysisError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Unstable(_) => 3,
            CliError::Divergent(_) => 4,
            CliError::Io { .. } => 5,
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<GenError> for CliError {
    fn from(e: GenError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Unstable(_) => CliError::Unstable(e),
            AnalysisError::Divergent { .. } => CliError::Divergent(e),
            other => CliError::Input(other.to_string()),
        }
    }
}

pub fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Analyze(a) => run_analyze(&a),
        Command::Convert(c) => run_convert(&c),
        Command::Generate(g) => run_generate(&g),
    }
}

fn kind_of(format: FormatArg) -> DocumentKind {
    match format {
        FormatArg::Xml => DocumentKind::PhysicalXml,
        FormatArg::Json => DocumentKind::OutputPortJson,
    }
}

/// Reads and parses the input. Read failures are input errors (exit 2).
fn load(input: &InputArgs) -> Result<NetworkDocument, CliError> {
    let kind = match input.format {
        Some(f) => kind_of(f),
        None => DocumentKind::from_path(&input.input).ok_or_else(|| {
            CliError::Input(format!(
                "{}: cannot infer the format from the extension, use --format",
                input.input.display()
            ))
        })?,
    };
    let text = fs::read_to_string(&input.input)
        .map_err(|e| CliError::Input(format!("{}: {e}", input.input.display())))?;
    let mode = if input.lenient {
        ParseMode::Lenient
    } else {
        ParseMode::Strict
    };
    NetworkDocument::parse(&text, kind, mode)
        .map_err(|e| CliError::Input(format!("{}: {e}", input.input.display())))
}

fn apply_overrides(
    mut options: AnalysisOptions,
    args: &OptionArgs,
) -> Result<AnalysisOptions, CliError> {
    if let Some(m) = args.multiplexing {
        options.multiplexing = match m {
            MultiplexingArg::Fifo => Multiplexing::Fifo,
            MultiplexingArg::Arbitrary => Multiplexing::Arbitrary,
        };
    }
    if let Some(s) = args.shaping {
        options.input_shaping = s.enabled();
    }
    if let Some(p) = args.packetizer {
        options.packetizer = p.enabled();
    }
    if let Some(text) = &args.ceil {
        options.ceil_precision = if text.eq_ignore_ascii_case("off") {
            None
        } else {
            Some(parse_quantity(
                QuantityInput::Text(text),
                Dimension::Time,
                None,
            )?)
        };
    }
    options.validate()?;
    Ok(options)
}

pub fn parse_methods(text: &str) -> Result<Vec<Method>, CliError> {
    let mut methods = Vec::new();
    for token in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if token.eq_ignore_ascii_case("all") {
            methods.extend(Method::ALL);
        } else {
            methods.push(token.parse::<Method>().map_err(CliError::Input)?);
        }
    }
    methods.sort();
    methods.dedup();
    if methods.is_empty() {
        return Err(CliError::Input("no analysis method requested".into()));
    }
    Ok(methods)
}

fn stage(path: &Path, contents: &str) -> Result<NamedTempFile, CliError> {
    let io_err = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents.as_bytes()).map_err(io_err)?;
    tmp.flush().map_err(io_err)?;
    Ok(tmp)
}

/// Writes every file or none: all contents are staged in temporary files
/// before any of them is moved into place.
fn write_all(files: &[(PathBuf, String)]) -> Result<(), CliError> {
    let staged = files
        .iter()
        .map(|(path, text)| stage(path, text))
        .collect::<Result<Vec<_>, _>>()?;
    for (tmp, (path, _)) in staged.into_iter().zip(files) {
        tmp.persist(path).map_err(|e| CliError::Io {
            path: path.clone(),
            source: e.error,
        })?;
    }
    Ok(())
}

fn with_extension(base: &Path, ext: &str) -> PathBuf {
    let mut name = base.as_os_str().to_owned();
    name.push(".");
    name.push(ext);
    PathBuf::from(name)
}

fn run_analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let methods = parse_methods(&args.methods)?;
    let doc = load(&args.input)?;
    let net = doc.to_output_port()?;
    let options = apply_overrides(*net.options(), &args.options)?;
    let net = net.with_options(options)?;
    let executor = if args.sequential {
        Executor::Sequential
    } else {
        Executor::Parallel
    };
    let config = AnalysisConfig::with_executor(executor);

    let mut results = ResultSet::new(net.clone());
    for method in methods {
        match analyze(&net, method, &options, &config) {
            Ok(r) => {
                println!(
                    "{}: {} flows bounded in {:.3} ms ({} passes)",
                    r.label,
                    r.flow_delays.len(),
                    r.execution_time.as_secs_f64() * 1e3,
                    r.iterations
                );
                results
                    .push(r)
                    .map_err(|e| CliError::Input(e.to_string()))?;
            }
            Err(AnalysisError::EmptyNetwork) => {
                println!(
                    "{}: skipped, the network has no flows to analyze",
                    method.label()
                );
            }
            Err(e) => return Err(e.into()),
        }
    }

    let base = match &args.out {
        Some(b) => b.clone(),
        None => PathBuf::from(args.input.input.file_stem().unwrap_or_default()),
    };
    let files = [
        (with_extension(&base, "json"), export_json(&results)),
        (with_extension(&base, "md"), export_markdown(&results)),
    ];
    write_all(&files)?;
    for (path, _) in &files {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_convert(args: &ConvertArgs) -> Result<(), CliError> {
    let doc = load(&args.input)?;
    let target = kind_of(args.to);
    let converted = convert(&doc, target)?;
    let out = match &args.out {
        Some(p) => p.clone(),
        None => {
            let path = args.input.input.with_extension(target.extension());
            if path == args.input.input {
                let stem = path.file_stem().unwrap_or_default().to_string_lossy();
                path.with_file_name(format!("{stem}.normalized.{}", target.extension()))
            } else {
                path
            }
        }
    };
    write_all(&[(out.clone(), converted.to_text())])?;
    println!("wrote {}", out.display());
    Ok(())
}

fn param(text: &str, dim: Dimension) -> Result<Param, CliError> {
    Ok(Param::parse(text, dim)?)
}

fn read_connections(path: &Path) -> Result<IndexMap<String, Vec<String>>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: malformed connections: {e}", path.display())))
}

fn run_generate(args: &GenerateArgs) -> Result<(), CliError> {
    let params = GenParams {
        burst: param(&args.burst, Dimension::Data)?,
        arrival_rate: param(&args.arrival_rate, Dimension::Rate)?,
        max_packet_length: param(&args.max_packet_length, Dimension::Data)?,
        latency: param(&args.latency, Dimension::Time)?,
        service_rate: param(&args.service_rate, Dimension::Rate)?,
        capacity: args
            .capacity
            .as_deref()
            .map(|c| param(c, Dimension::Rate))
            .transpose()?,
        seed: args.seed,
        options: apply_overrides(AnalysisOptions::default(), &args.options)?,
    };
    let size = || {
        args.size.ok_or_else(|| {
            CliError::Input(format!("{:?} topology needs --size", args.topology).to_lowercase())
        })
    };
    let (net, n) = match args.topology {
        Topology::Interleave => (gen_interleave(size()?, &params)?, size()?),
        Topology::Ring => (gen_ring(size()?, &params)?, size()?),
        Topology::Mesh => (gen_mesh(size()?, &params)?, size()?),
        Topology::Fixed => {
            let flows = args
                .flows
                .ok_or_else(|| CliError::Input("fixed topology needs --flows".into()))?;
            let path = args
                .connections
                .as_ref()
                .ok_or_else(|| CliError::Input("fixed topology needs --connections".into()))?;
            (
                gen_fixed_topology(flows, &read_connections(path)?, &params)?,
                flows,
            )
        }
    };
    let out = args.out.clone().unwrap_or_else(|| {
        let kind = format!("{:?}", args.topology).to_lowercase();
        PathBuf::from(format!("{kind}-{n}.json"))
    });
    write_all(&[(out.clone(), write_json(&net))])?;
    println!(
        "wrote {} ({} servers, {} flows)",
        out.display(),
        net.servers().len(),
        net.flows().len()
    );
    Ok(())
}
