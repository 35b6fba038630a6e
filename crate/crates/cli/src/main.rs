//! `privar` command-line front end.

mod commands;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "privar", version, about = "Text obfuscation and privacy risk assessment for AR camera frames")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Blur and warp the text regions of one image.
    Obfuscate(commands::ObfuscateArgs),
    /// Print detected text boxes as JSON.
    Detect(commands::DetectArgs),
    /// Run one image through compression, obfuscation and the staged assessment locally.
    Assess(commands::AssessArgs),
    /// Start the edge service.
    ServeEdge(commands::ServeEdgeArgs),
    /// Start the cloud service.
    ServeCloud(commands::ServeCloudArgs),
    /// Submit every image in a directory through edge and cloud services.
    Run(run::RunArgs),
    /// Evaluate a classifier over a dataset manifest.
    Evaluate(commands::EvaluateArgs),
    /// Render a warning flash sequence for a risky frame.
    RenderWarnings(commands::RenderArgs),
    /// Write the bundled synthetic fixture.
    MakeFixture(commands::FixtureArgs),
}

pub fn non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("{s} is not a finite non-negative number"))
    }
}

#[derive(Args, Debug, Clone)]
pub struct ObfuscationFlags {
    /// Blur standard deviation in pixels.
    #[arg(long, env = "PRIVAR_SIGMA", default_value_t = privar_core::imaging::DEFAULT_SIGMA, value_parser = non_negative)]
    pub sigma: f64,
    /// Maximum warp displacement in pixels.
    #[arg(long, env = "PRIVAR_BETA", default_value_t = privar_core::imaging::DEFAULT_BETA, value_parser = non_negative)]
    pub beta: f64,
    /// Mask dilation in pixels.
    #[arg(long, env = "PRIVAR_PAD", default_value_t = privar_core::imaging::DEFAULT_PAD)]
    pub pad: u32,
}

impl ObfuscationFlags {
    pub fn params(&self) -> privar_core::imaging::ObfuscationParams {
        privar_core::imaging::ObfuscationParams { sigma: self.sigma, beta: self.beta, pad: self.pad, seed: 0 }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum DetectorKind {
    Heuristic,
    Annotation,
    External,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendKind {
    Mock,
    Remote,
    Replay,
}

#[derive(Args, Debug, Clone)]
pub struct BackendFlags {
    #[arg(long, env = "PRIVAR_BACKEND", value_enum, default_value_t = BackendKind::Mock)]
    pub backend: BackendKind,
    /// Scenario table for the mock backend.
    #[arg(long, env = "PRIVAR_SCENARIOS")]
    pub scenarios: Option<PathBuf>,
    /// Transcript JSONL: replayed by `replay`, appended to by `remote`.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    let result = match cli.command {
        Command::Obfuscate(a) => commands::obfuscate_cmd(a),
        Command::Detect(a) => commands::detect(a),
        Command::Assess(a) => commands::assess_cmd(a),
        Command::ServeEdge(a) => commands::serve_edge(a),
        Command::ServeCloud(a) => commands::serve_cloud(a),
        Command::Run(a) => run::run(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::RenderWarnings(a) => commands::render_warnings(a),
        Command::MakeFixture(a) => commands::make_fixture(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
