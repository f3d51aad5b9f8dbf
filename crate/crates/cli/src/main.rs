//! Reproducibility driver: one subcommand per experiment, seeded runs,
//! CSV and plot-data emission.

mod config;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use output::RunOutput;

const EXIT_UNKNOWN_EXPERIMENT: u8 = 1;
const EXIT_BAD_CONFIG: u8 = 2;
const EXIT_UNWRITABLE_OUTPUT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "stq",
    about = "Closed-loop singlet-triplet qubit estimation simulator",
    after_help = experiment_help()
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its artifacts.
    Run {
        /// Experiment id (see the list below).
        experiment: String,
        /// Key-value config file; defaults are built in.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Master seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Individual overrides, `--set key=value`, applied after the file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory for manifest, tables, and summary.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn experiment_help() -> String {
    let mut text = String::from("experiments:\n");
    for id in experiments::EXPERIMENT_IDS {
        text.push_str(&format!("  {id:<14} {}\n", experiments::describe(id)));
    }
    text
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            experiment,
            config,
            seed,
            set,
            out,
        } => run(&experiment, config.as_deref(), seed, &set, &out),
    }
}

fn run(
    experiment: &str,
    config_path: Option<&std::path::Path>,
    seed: Option<u64>,
    set: &[String],
    out_dir: &std::path::Path,
) -> ExitCode {
    if !experiments::is_known(experiment) {
        eprintln!("error: unknown experiment `{experiment}`");
        eprintln!(
            "known experiments: {}",
            experiments::EXPERIMENT_IDS.join(", ")
        );
        return ExitCode::from(EXIT_UNKNOWN_EXPERIMENT);
    }

    let overrides: Result<Vec<(String, String)>, String> = set
        .iter()
        .map(|pair| {
            pair.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| format!("--set `{pair}` is not of the form key=value"))
        })
        .collect();
    let overrides = match overrides {
        Ok(o) => o,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(EXIT_BAD_CONFIG);
        }
    };

    let cfg = match RunConfig::load(config_path, &overrides, seed) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("error: {err:#}");
            return ExitCode::from(EXIT_BAD_CONFIG);
        }
    };

    let run_dir = out_dir.join(experiment);
    let mut output = match RunOutput::create(&run_dir) {
        Ok(o) => o,
        Err(err) => {
            eprintln!("error: {err:#}");
            return ExitCode::from(EXIT_UNWRITABLE_OUTPUT);
        }
    };

    println!(
        "running `{experiment}` (seed {}) -> {}",
        cfg.seed,
        run_dir.display()
    );
    if let Err(err) = experiments::run(experiment, &cfg, &mut output) {
        eprintln!("error: {err:#}");
        // Experiment-level failures after setup are config-or-io shaped;
        // distinguish io errors for the output exit code.
        let io = err
            .chain()
            .any(|c| c.downcast_ref::<std::io::Error>().is_some());
        return ExitCode::from(if io {
            EXIT_UNWRITABLE_OUTPUT
        } else {
            EXIT_BAD_CONFIG
        });
    }
    match output.finish(experiment, &cfg.manifest(experiment)) {
        Ok(_all_passed) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_UNWRITABLE_OUTPUT)
        }
    }
}
