use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use transval::sweep::Procedure;
use transval_cli::config::{load_config, parse_procedure, Overrides};
use transval_cli::{runner, table, CliError};

#[derive(Parser)]
#[command(name = "transval", version, about = "Transparent-validation experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's worker count (0 = one per core).
    #[arg(long)]
    workers: Option<usize>,
    /// Override the leak procedure: presample | batch.
    #[arg(long, value_parser = procedure_value)]
    procedure: Option<Procedure>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            workers: self.workers,
            procedure: self.procedure,
        }
    }
}

fn procedure_value(s: &str) -> Result<Procedure, String> {
    parse_procedure(s).ok_or_else(|| format!("expected \"presample\" or \"batch\" (got {s:?})"))
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured (p, model, replication) sweep and write the result CSV.
    Sweep(RunArgs),
    /// Run only the configured stability estimators.
    Stability(RunArgs),
    /// Recompute the knee from an existing result CSV.
    Knee {
        /// A CSV file previously written by the sweep subcommand.
        results: PathBuf,
    },
    /// Sample a dataset from the config's data section and emit it as CSV.
    GenData {
        /// Path to the TOML experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Number of examples (default: n + m + test from the config).
        #[arg(long)]
        count: Option<usize>,
        /// Output path (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the version.
    Version,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprint!("{e}");
            eprintln!();
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn write_file(path: &std::path::Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sweep(args) => {
            let cfg = load_config(&args.config, &args.overrides())?;
            let outcome = runner::run_config(&cfg)?;
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            write_file(&cfg.output, &table::render(&outcome.table))?;
            println!(
                "wrote {} rows to {}",
                outcome.table.rows.len(),
                cfg.output.display()
            );
            let failures = outcome.table.errors.len();
            if failures > 0 {
                return Err(CliError::CellFailure(failures));
            }
            Ok(())
        }
        Command::Stability(args) => {
            let cfg = load_config(&args.config, &args.overrides())?;
            let result = runner::stability_table(&cfg)?;
            write_file(&cfg.output, &table::render(&result))?;
            for s in &result.stability {
                println!(
                    "# stability,quantity={},mean={},std_error={},trials={}",
                    s.quantity,
                    table::fmt_float(s.mean),
                    table::fmt_float(s.std_error),
                    s.trials
                );
            }
            Ok(())
        }
        Command::Knee { results } => {
            let text = std::fs::read_to_string(&results)
                .map_err(|e| CliError::Io(format!("{}: {e}", results.display())))?;
            let parsed = table::parse_results(&text)
                .map_err(|e| CliError::Io(format!("{}: {e}", results.display())))?;
            match runner::knee_from_rows(&parsed) {
                Some(p) => println!("# knee,p={}", table::fmt_float(p)),
                None => println!("# knee,none"),
            }
            Ok(())
        }
        Command::GenData { config, count, out, seed } => {
            let cfg = load_config(&config, &Overrides { seed, ..Overrides::default() })?;
            let sizes = cfg.data.sizes;
            let count = count.unwrap_or(sizes.n + sizes.m + sizes.test.unwrap_or(0));
            let csv = runner::gen_data_csv(&cfg, count)?;
            match out {
                Some(path) => write_file(&path, &csv)?,
                None => print!("{csv}"),
            }
            Ok(())
        }
        Command::Version => {
            println!("transval {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    }
}
