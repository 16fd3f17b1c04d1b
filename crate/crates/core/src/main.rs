use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qfridge::analysis::SolverChoice;
use qfridge::cli::{self, presets, CliError, RunConfig};

#[derive(Parser)]
#[command(
    name = "qfridge",
    version,
    about = "Transient dynamics of a three-qubit absorption refrigerator"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named preset scenario.
    Preset {
        name: String,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// auto, spectral or integrator.
        #[arg(long, default_value = "auto")]
        solver: String,
    },
    /// Run a scenario described by a key = value config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// List preset names.
    ListPresets,
    /// Print the JSON summary of a config to standard output.
    Summary {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &PathBuf) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    RunConfig::parse(&text)
}

fn run_and_write(config: &RunConfig) -> Result<(), CliError> {
    let artifacts = cli::execute(config)?;
    for path in cli::write_artifacts(&config.out_dir, &artifacts)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Preset { name, out, solver } => {
            let mut config = presets::find(&name)?.config();
            config.solver = solver
                .parse::<SolverChoice>()
                .map_err(|e| CliError::Config(e.to_string()))?;
            config.out_dir = out;
            run_and_write(&config)
        }
        Command::Run { config } => run_and_write(&load(&config)?),
        Command::ListPresets => {
            let mut stdout = std::io::stdout().lock();
            for p in &presets::PRESETS {
                let _ = writeln!(stdout, "{:<6}  {}", p.name, p.description);
            }
            Ok(())
        }
        Command::Summary { config } => {
            let json = cli::summary_json(&load(&config)?)?;
            std::io::stdout()
                .write_all(json.as_bytes())
                .map_err(|source| CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(cli::EXIT_CONFIG as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(args.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qfridge: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
