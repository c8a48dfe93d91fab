use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lpfg::cli_io::suite::{self, VerificationReport};
use lpfg::cli_io::{execute, parse_spec, render_output, write_outputs, OutputFormat, OutputSpec, Pipeline, RunSpec, DEFAULT_BAND, BAND_RANGE};
use lpfg::Error;

const EXIT_SPEC: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_VERIFY: u8 = 4;

/// Loop-group frames, surfaces and verification for pluriharmonic and
/// para-pluriharmonic maps.
#[derive(Parser)]
#[command(name = "lpfg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run spec
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// extra output; the format follows the extension (.obj .csv .json .txt .lpfg)
    #[arg(long, global = true)]
    out: Option<String>,
    /// Fourier band N (overrides the spec)
    #[arg(long, global = true)]
    band: Option<i32>,
    /// grid as <nx>x<ny>[@<half-width>] (overrides the spec)
    #[arg(long, global = true)]
    grid: Option<String>,
    /// verification suite name
    #[arg(long, global = true)]
    suite: Option<String>,
    /// worker threads
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Build the real (para) extended frame
    Frame,
    /// Build the complex frame from the morphed potential
    Morph,
    /// Apply a Sym formula to the frame
    Surface,
    /// Run a verification suite, or structural checks on the spec's potential
    Verify,
    /// Run the spec's own pipeline and write all of its outputs
    Export,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Spec { .. } | Error::Io(_) => EXIT_SPEC,
            _ => EXIT_NUMERIC,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_SPEC, message: message.into() }
}

fn load_spec(cli: &Cli, pipeline: Option<Pipeline>) -> Result<RunSpec, Failure> {
    let path = cli.spec.as_ref().ok_or_else(|| usage("this command needs --spec <path>"))?;
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut spec = parse_spec(&text)?;
    if let Some(p) = pipeline {
        spec.pipeline = p;
        // a grid written for another pipeline keeps its axes but not its mode
        let mode = spec.mode();
        if let Some(g) = spec.grid.as_mut().filter(|_| p != Pipeline::Verify) {
            g.mode = mode;
        }
    }
    if let Some(b) = cli.band {
        spec.band = b;
    }
    if let Some(g) = &cli.grid {
        spec.set_grid_shorthand(g)?;
    }
    if let Some(path) = &cli.out {
        spec.outputs.push(out_spec(path)?);
    }
    spec.validate()?;
    Ok(spec)
}

fn out_spec(path: &str) -> Result<OutputSpec, Failure> {
    let format = OutputFormat::from_path(path).ok_or_else(|| usage(format!("cannot tell the output format of `{path}`")))?;
    Ok(OutputSpec { path: path.to_string(), format })
}

fn write_report(report: &VerificationReport, out: Option<&str>) -> Result<(), Failure> {
    print!("{}", report.to_text());
    if let Some(path) = out {
        let text = match OutputFormat::from_path(path) {
            Some(OutputFormat::Json) => report.to_json() + "\n",
            Some(OutputFormat::Text) => report.to_text(),
            _ => return Err(usage(format!("a report is written as .json or .txt, not `{path}`"))),
        };
        std::fs::write(path, text).map_err(Error::from)?;
    }
    if report.pass {
        Ok(())
    } else {
        Err(Failure { code: EXIT_VERIFY, message: "verification failed".into() })
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global().map_err(|e| usage(e.to_string()))?;
    }
    if let Some(b) = cli.band {
        if !BAND_RANGE.contains(&b) {
            return Err(usage(format!("--band must lie in [{}, {}]", BAND_RANGE.start(), BAND_RANGE.end())));
        }
    }
    let pipeline = match cli.command {
        Command::Frame => Some(Pipeline::Frame),
        Command::Morph => Some(Pipeline::Morph),
        Command::Surface => Some(Pipeline::Surface),
        Command::Verify => Some(Pipeline::Verify),
        Command::Export => None,
    };
    if cli.command == Command::Verify && (cli.suite.is_some() || cli.spec.is_none()) {
        let name = cli.suite.as_deref().unwrap_or(suite::ALL);
        let report = suite::run_verification_suite(name, cli.band.unwrap_or(DEFAULT_BAND))?;
        return write_report(&report, cli.out.as_deref());
    }
    let spec = load_spec(cli, pipeline)?;
    let outputs = &spec.outputs;
    if cli.command == Command::Export && outputs.is_empty() {
        return Err(usage("export needs outputs in the spec or --out"));
    }
    let outcome = execute(&spec)?;
    if let Some(report) = &outcome.report {
        for o in outputs {
            std::fs::write(&o.path, render_output(&outcome, o.format)?).map_err(Error::from)?;
        }
        return write_report(report, None);
    }
    print!("{}", outcome.summary());
    write_outputs(&outcome, outputs)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("lpfg: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
