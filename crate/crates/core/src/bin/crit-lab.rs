use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use critlab::run::{preset, preset_names, run, RunConfig};
use critlab::Error;

/// Overrides the output directory of every run.
const OUTPUT_ENV: &str = "CRIT_LAB_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "crit-lab", version, about = "Criticality workbench: run configs and built-in presets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a JSON run config.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Execute a built-in preset.
    Preset {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the preset names.
    ListPresets,
}

fn execute(config: Result<RunConfig, Error>, out: Option<PathBuf>) -> ExitCode {
    let out = out.or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from));
    let result = config.and_then(|c| {
        let dir = out.unwrap_or_else(|| c.output_dir.clone());
        run(&c, Some(&dir)).map(|s| (s, dir))
    });
    match result {
        Ok((summary, dir)) => {
            print!("{}", summary.to_text());
            println!("\nreport written to {}", dir.display());
            ExitCode::from(summary.exit_code() as u8)
        }
        Err(e @ Error::Config(_)) | Err(e @ Error::Json(_)) => {
            eprintln!("crit-lab: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("crit-lab: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out } => execute(RunConfig::from_file(&config), out),
        Command::Preset { name, out } => execute(preset(&name), out),
        Command::ListPresets => {
            for name in preset_names() {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
    }
}
