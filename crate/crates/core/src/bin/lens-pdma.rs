use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lens_pdma::config::{ExperimentConfig, OutputFormat};
use lens_pdma::linksim::run_experiment;
use lens_pdma::results::{merge, read_results, write_results, RunMetadata};
use lens_pdma::validate;
use lens_pdma::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_ORACLE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(version, about = "Uplink PDMA simulator for lens antenna arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep and write a result table.
    Run(RunArgs),
    /// Run the oracle checks; exits with 2 if any fails.
    Validate(ValidateArgs),
    /// Merge result tables on their sweep axis.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Jsonl => OutputFormat::Jsonl,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file, or `paper-defaults`.
    #[arg(long, default_value = "paper-defaults")]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct ReportArgs {
    /// Result tables to merge; series are named after the file stem.
    files: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_) | Error::Parse(_) | Error::SchemaMismatch(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var("SIM_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidConfig(format!("SIM_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Io(e.to_string()))
}

fn run(args: RunArgs) -> Result<(), Error> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.sim.seed = seed;
    }
    if let Some(trials) = args.trials {
        config.sim.n_trials = trials;
    }
    if let Some(format) = args.format {
        config.output.format = format.into();
    }
    if let Some(out) = args.out {
        config.output.path = Some(out);
    }
    let out = config.output.path.clone().unwrap_or_else(|| {
        PathBuf::from(match config.output.format {
            OutputFormat::Csv => "results.csv",
            OutputFormat::Jsonl => "results.jsonl",
        })
    });
    config.output.path = Some(out.clone());
    config.validate()?;
    configure_threads()?;

    let result = run_experiment(&config)?;
    let failed: usize = result.rows.iter().map(|r| r.failed_trials).sum();
    if failed > 0 {
        log::warn!("{failed} scheme-trials failed; see failed_trials in the output");
    }
    let metadata = RunMetadata::new(&config, &args.config, &out);
    write_results(&result, config.output.format, &out, &metadata)?;
    eprintln!("wrote {} rows to {}", result.rows.len(), out.display());
    Ok(())
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn validate_cmd(args: ValidateArgs) -> Result<bool, Error> {
    configure_threads()?;
    let report = validate::run_all();
    for c in &report.checks {
        println!("{c}");
    }
    if let Some(path) = &args.out {
        let mut w = open_out(Some(path))?;
        let io = |e: io::Error| Error::Io(e.to_string());
        match args.format {
            Format::Csv => {
                writeln!(w, "check,passed,measured,tolerance,detail").map_err(io)?;
                for c in &report.checks {
                    writeln!(w, "{},{},{:e},{:e},\"{}\"", c.name, c.passed, c.measured, c.tolerance, c.detail).map_err(io)?;
                }
            }
            Format::Jsonl => {
                for c in &report.checks {
                    let line = serde_json::to_string(c).map_err(|e| Error::Io(e.to_string()))?;
                    writeln!(w, "{line}").map_err(io)?;
                }
            }
        }
        w.flush().map_err(io)?;
    }
    let passed = report.all_passed();
    println!("{}", if passed { "all oracles passed" } else { "oracle failure" });
    Ok(passed)
}

fn report(args: ReportArgs) -> Result<(), Error> {
    if args.files.is_empty() {
        return Err(Error::InvalidConfig("report needs at least one result file".into()));
    }
    let mut inputs = Vec::new();
    for f in &args.files {
        let name = f.file_stem().map_or_else(|| f.display().to_string(), |s| s.to_string_lossy().into_owned());
        inputs.push((name, read_results(f)?));
    }
    let table = merge(&inputs)?;
    let mut w = open_out(args.out.as_deref())?;
    table.write_csv(&mut w)?;
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => run(a).map(|_| true),
        Command::Validate(a) => validate_cmd(a),
        Command::Report(a) => report(a).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_ORACLE),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
