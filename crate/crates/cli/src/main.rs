use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gtseq_cli::config::{parse_config, ExperimentConfig, Format, Mode};
use gtseq_cli::error::{CliError, CliResult};
use gtseq_cli::records::write_records;
use gtseq_cli::run::run;

/// Estimators for group testing under inverse sampling.
#[derive(Parser)]
#[command(name = "gtseq", version)]
struct Cli {
    #[command(subcommand)]
    mode: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate estimators at the configured sample points.
    Estimate(Shared),
    /// Check that the unbiased estimators have expectation equal to the truth.
    VerifyUnbiased(Shared),
    /// Search for estimates outside the parameter space.
    ScanProperness(Shared),
    /// Report whether each misclassification model is identifiable.
    Identify(Shared),
    /// Compare simulated terminal points with their exact probabilities.
    Simulate(Shared),
    /// Monte Carlo bias and MSE of every estimator over the grid.
    Bench(Shared),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

#[derive(Args)]
struct Shared {
    #[arg(long)]
    config: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Overrides the seed in the config file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "GTSEQ_THREADS")]
    threads: Option<usize>,
}

impl Command {
    fn split(self) -> (Mode, Shared) {
        match self {
            Command::Estimate(s) => (Mode::Estimate, s),
            Command::VerifyUnbiased(s) => (Mode::VerifyUnbiased, s),
            Command::ScanProperness(s) => (Mode::ScanProperness, s),
            Command::Identify(s) => (Mode::Identify, s),
            Command::Simulate(s) => (Mode::Simulate, s),
            Command::Bench(s) => (Mode::Bench, s),
        }
    }
}

fn load(mode: Mode, args: &Shared) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", args.config.display())))?;
    let mut cfg =
        parse_config(&text).map_err(|e| CliError::Validation(format!("{}: {e}", args.config.display())))?;
    if cfg.mode != mode {
        return Err(CliError::Validation(format!(
            "command is `{mode}` but {} sets mode = {}",
            args.config.display(),
            cfg.mode
        )));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(f) = args.format {
        cfg.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Jsonl => Format::Jsonl,
        };
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    Ok(cfg)
}

fn execute(mode: Mode, args: Shared) -> CliResult<()> {
    let cfg = load(mode, &args)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be >= 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Validation(e.to_string()))?;
    let output = pool.install(|| run(&cfg))?;

    match &cfg.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
            write_records(&output.records, cfg.format, BufWriter::new(file))?;
        }
        None => write_records(&output.records, cfg.format, BufWriter::new(io::stdout().lock()))?,
    }
    if !output.failures.is_empty() {
        let mut err = io::stderr().lock();
        for f in &output.failures {
            let _ = writeln!(err, "gtseq: {f}");
        }
        return Err(CliError::Numerical(format!("{} checks failed", output.failures.len())));
    }
    Ok(())
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors; here 2 means I/O, so remap to 1.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (mode, args) = cli.mode.split();
    match execute(mode, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gtseq: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
