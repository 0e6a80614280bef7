use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sodefield_core::cli::{
    corpus_get, corpus_list, corpus_source, load_manifest, render_text, run, CliError, Command, Manifest, EXIT_INPUT,
};

#[derive(Parser, Debug)]
#[command(name = "sodefield", version, about = "Recognize and normalize second-order dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Manifest file (TOML); not needed with --corpus.
    manifest: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sample points for rank checks.
    #[arg(long)]
    samples: Option<usize>,
    /// Grid points per parameter axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Pass threshold on the straightening residual.
    #[arg(long)]
    tol: Option<f64>,
    /// Write the machine-readable report here ("-" for stdout).
    #[arg(long)]
    json: Option<PathBuf>,
    /// Use a builtin manifest.
    #[arg(long)]
    corpus: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Regularity and involutivity gates.
    Check(RunArgs),
    /// Case 1, case 2, or not second order.
    Classify(RunArgs),
    /// Beta coefficients, S, projectors, lifts, and identity checks.
    Connection(RunArgs),
    /// Mixed curvature and the quadratic verdict.
    Quadratic(RunArgs),
    /// Numeric normal coordinates and residuals.
    Straighten(RunArgs),
    /// Everything above in one document.
    Report(RunArgs),
    /// List builtin manifests, or print one.
    Corpus { name: Option<String> },
}

fn manifest(args: &RunArgs) -> Result<Manifest, CliError> {
    let mut m = match (&args.corpus, &args.manifest) {
        (Some(name), _) => corpus_get(name)?,
        (None, Some(path)) => load_manifest(path)?,
        (None, None) => return Err(CliError::Invalid("give a manifest path or --corpus".into())),
    };
    if let Some(s) = args.seed {
        m.options.seed = s;
    }
    if let Some(s) = args.samples {
        m.options.samples = Some(s);
    }
    if let Some(g) = args.grid {
        m.options.grid = Some(g);
    }
    if let Some(t) = args.tol {
        m.options.tolerance = t;
    }
    Ok(m)
}

fn execute(command: Command, args: &RunArgs) -> Result<i32, CliError> {
    let report = run(command, &manifest(args)?)?;
    match args.json.as_deref() {
        Some(p) if p.as_os_str() == "-" => println!("{}", report.to_json()),
        Some(p) => {
            std::fs::write(p, report.to_json()).map_err(|source| CliError::Io {
                path: p.display().to_string(),
                source,
            })?;
            print!("{}", render_text(&report));
        }
        None => print!("{}", render_text(&report)),
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Check(a) => (Command::Check, a),
        Cmd::Classify(a) => (Command::Classify, a),
        Cmd::Connection(a) => (Command::Connection, a),
        Cmd::Quadratic(a) => (Command::Quadratic, a),
        Cmd::Straighten(a) => (Command::Straighten, a),
        Cmd::Report(a) => (Command::Report, a),
        Cmd::Corpus { name: None } => {
            for n in corpus_list() {
                println!("{n}");
            }
            return ExitCode::SUCCESS;
        }
        Cmd::Corpus { name: Some(n) } => {
            return match corpus_source(&n) {
                Ok(text) => {
                    print!("{text}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_INPUT as u8)
                }
            };
        }
    };
    let code = execute(command, &args).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
