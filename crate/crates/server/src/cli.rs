//! `datagarden validate | build | serve`.

use std::fmt;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use datagarden_core::layout::Bounds;
use datagarden_core::mapping::{parse_mapping_with_lines, validate_mapping};
use datagarden_core::pipeline::{BuildError, BuildOptions, Bundle};
use datagarden_core::scene::{parse_scene, serialize_scene};
use datagarden_core::survey::{parse_responses_with_lines, parse_schema, validate_records};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_IO: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "datagarden", version, about = "Grow a 3D garden from questionnaire responses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check schema, mapping and responses; prints one diagnostic per line.
    Validate(Inputs),
    /// Build a scene document with an organic layout.
    Build(BuildArgs),
    /// Serve a scene document over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Inputs {
    /// Questionnaire schema document.
    #[arg(long)]
    pub schema: PathBuf,
    /// Visual mapping document.
    #[arg(long)]
    pub mapping: PathBuf,
    /// Responses CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    /// Output scene file.
    #[arg(long)]
    pub out: PathBuf,
    /// Ground size as WIDTHxDEPTH.
    #[arg(long, default_value = "40x40", value_parser = parse_bounds)]
    pub bounds: Bounds,
    /// Minimum distance between entities.
    #[arg(long, default_value_t = 1.5)]
    pub min_sep: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value = "DataGarden")]
    pub title: String,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    /// Scene document produced by `build`.
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
    /// Directory of viewer assets served under `/`.
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
}

/// Parses `WxD`, e.g. `40x40`.
pub fn parse_bounds(s: &str) -> Result<Bounds, String> {
    let (w, d) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WIDTHxDEPTH, got `{s}`"))?;
    let w: f64 = w.trim().parse().map_err(|_| format!("bad width `{w}`"))?;
    let d: f64 = d.trim().parse().map_err(|_| format!("bad depth `{d}`"))?;
    Bounds::new(w, d).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Error,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Error => f.write_str("ERROR"),
        }
    }
}

/// `LEVEL file:line message`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub level: Level,
    pub file: String,
    pub line: u64,
    pub message: String,
}

impl Diagnostic {
    fn error(file: &Path, line: u64, message: impl Into<String>) -> Self {
        Self {
            level: Level::Error,
            file: file.display().to_string(),
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}:{} {}", self.level, self.file, self.line, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("cannot read {path}: {source}")]
pub struct ReadError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

fn read(path: &Path) -> Result<String, ReadError> {
    fs::read_to_string(path).map_err(|source| ReadError {
        path: path.to_path_buf(),
        source,
    })
}

/// Result of checking one input bundle.
#[derive(Debug)]
pub struct Validation {
    pub diagnostics: Vec<Diagnostic>,
    /// Present when every file parsed.
    pub bundle: Option<Bundle>,
}

/// Parses and cross-checks the three inputs, collecting every diagnostic it can.
pub fn validate_inputs(inputs: &Inputs) -> Result<Validation, ReadError> {
    let schema_text = read(&inputs.schema)?;
    let mapping_text = read(&inputs.mapping)?;
    let data_text = read(&inputs.data)?;
    let mut diags = Vec::new();

    let schema = parse_schema(&schema_text)
        .map_err(|e| {
            let line = e.pos().map_or(1, |p| p.line as u64);
            diags.push(Diagnostic::error(&inputs.schema, line, e.to_string()));
        })
        .ok();
    let mapping = parse_mapping_with_lines(&mapping_text)
        .map_err(|e| {
            let line = e.pos().map_or(1, |p| p.line as u64);
            diags.push(Diagnostic::error(&inputs.mapping, line, e.to_string()));
        })
        .ok();

    let Some(schema) = schema else {
        return Ok(Validation {
            diagnostics: diags,
            bundle: None,
        });
    };
    if let Some((spec, lines)) = &mapping {
        for d in validate_mapping(spec, &schema) {
            diags.push(Diagnostic::error(&inputs.mapping, lines[d.binding] as u64, d.to_string()));
        }
    }
    let records = match parse_responses_with_lines(&data_text, &schema) {
        Ok(rows) => {
            let (records, lines): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
            for d in validate_records(&records, &schema) {
                diags.push(Diagnostic::error(&inputs.data, lines[d.index], d.to_string()));
            }
            Some(records)
        }
        Err(e) => {
            diags.push(Diagnostic::error(&inputs.data, e.line(), e.to_string()));
            None
        }
    };
    let bundle = match (mapping, records) {
        (Some((spec, _)), Some(records)) => Some(Bundle { schema, spec, records }),
        _ => None,
    };
    Ok(Validation {
        diagnostics: diags,
        bundle,
    })
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

/// Outcome of a CLI command: exit status plus lines for stdout and stderr.
#[derive(Debug, Default)]
pub struct Outcome {
    pub code: u8,
    pub stdout: Vec<String>,
    pub stderr: Vec<String>,
}

impl Outcome {
    fn io(e: impl fmt::Display) -> Self {
        Self {
            code: EXIT_IO,
            stderr: vec![format!("ERROR {e}")],
            ..Self::default()
        }
    }

    pub fn emit(&self) -> ExitCode {
        for l in &self.stdout {
            println!("{l}");
        }
        for l in &self.stderr {
            eprintln!("{l}");
        }
        ExitCode::from(self.code)
    }
}

pub fn cmd_validate(inputs: &Inputs) -> Outcome {
    match validate_inputs(inputs) {
        Err(e) => Outcome::io(e),
        Ok(v) => Outcome {
            code: if v.diagnostics.is_empty() { EXIT_OK } else { EXIT_INVALID },
            stdout: v.diagnostics.iter().map(ToString::to_string).collect(),
            stderr: Vec::new(),
        },
    }
}

/// Builds the scene text for `args` without writing it.
pub fn build_scene_text(args: &BuildArgs) -> Result<String, Outcome> {
    let v = validate_inputs(&args.inputs).map_err(Outcome::io)?;
    let bundle = match v.bundle {
        Some(b) if v.diagnostics.is_empty() => b,
        _ => {
            return Err(Outcome {
                code: EXIT_INVALID,
                stdout: v.diagnostics.iter().map(ToString::to_string).collect(),
                stderr: Vec::new(),
            })
        }
    };
    let opts = BuildOptions {
        bounds: args.bounds,
        min_sep: args.min_sep,
        seed: args.seed,
        title: args.title.clone(),
        generated_from: [&args.inputs.schema, &args.inputs.mapping, &args.inputs.data]
            .iter()
            .map(|p| file_name(p))
            .collect(),
    };
    let doc = bundle.build(&opts).map_err(|e| {
        let file = match &e {
            BuildError::Schema(_) => &args.inputs.schema,
            BuildError::Mapping(_) | BuildError::InvalidMapping(_) => &args.inputs.mapping,
            _ => &args.inputs.data,
        };
        Outcome {
            code: EXIT_INVALID,
            stdout: vec![Diagnostic::error(file, 1, e.to_string()).to_string()],
            stderr: Vec::new(),
        }
    })?;
    Ok(serialize_scene(&doc))
}

pub fn cmd_build(args: &BuildArgs) -> Outcome {
    let text = match build_scene_text(args) {
        Ok(t) => t,
        Err(o) => return o,
    };
    match fs::write(&args.out, text) {
        Ok(()) => Outcome::default(),
        Err(e) => Outcome::io(format!("cannot write {}: {e}", args.out.display())),
    }
}

pub fn cmd_serve(args: &ServeArgs) -> Outcome {
    let text = match read(&args.scene) {
        Ok(t) => t,
        Err(e) => return Outcome::io(e),
    };
    let scene = match parse_scene(&text) {
        Ok(s) => s,
        Err(e) => {
            return Outcome {
                code: EXIT_INVALID,
                stdout: vec![Diagnostic::error(&args.scene, 1, e.to_string()).to_string()],
                stderr: Vec::new(),
            }
        }
    };
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => return Outcome::io(e),
    };
    let addr = SocketAddr::new(args.host, args.port);
    let app = crate::http::router(crate::http::AppState::new(scene), args.static_dir.clone());
    runtime.block_on(async move {
        let listener = match tokio::net::TcpListener::bind(addr).await {
            Ok(l) => l,
            Err(e) => return Outcome::io(format!("cannot bind {addr}: {e}")),
        };
        eprintln!("serving scene on http://{addr}");
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        match axum::serve(listener, app).with_graceful_shutdown(shutdown).await {
            Ok(()) => Outcome::default(),
            Err(e) => Outcome::io(e),
        }
    })
}

pub fn run(cli: Cli) -> ExitCode {
    let outcome = match &cli.command {
        Command::Validate(inputs) => cmd_validate(inputs),
        Command::Build(args) => cmd_build(args),
        Command::Serve(args) => cmd_serve(args),
    };
    outcome.emit()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_flag() {
        let b = parse_bounds("40x30").unwrap();
        assert_eq!((b.width(), b.depth()), (40.0, 30.0));
        assert!(parse_bounds("40").is_err());
        assert!(parse_bounds("0x5").is_err());
        assert!(parse_bounds("ax5").is_err());
    }

    #[test]
    fn diagnostic_format() {
        let d = Diagnostic::error(Path::new("m.dg"), 3, "unknown question zodiac");
        assert_eq!(d.to_string(), "ERROR m.dg:3 unknown question zodiac");
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
