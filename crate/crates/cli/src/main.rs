//! Command-line front end for the array-assembly toolkit.
//!
//! `atomweaver run <config>` executes every scenario in an INI-style config
//! file; `atomweaver preset <name>` runs a built-in scenario set. Exit
//! codes: 0 success, 1 runtime failure, 2 config/usage parse error,
//! 3 invalid parameter value.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use atomweaver_cli::config::load_config;
use atomweaver_cli::presets::{apply_overrides, preset};
use atomweaver_cli::runner::run_scenarios;
use atomweaver_cli::{apply_thread_cap, CliError};

#[derive(Parser)]
#[command(
    name = "atomweaver",
    version,
    about = "Simulation and planning toolkit for tweezer-array assembly"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario in a config file.
    ///
    /// Relative output paths are resolved against the config file's
    /// directory.
    Run {
        /// Path to an INI-style scenario file.
        config: PathBuf,
    },
    /// Run a built-in scenario set.
    Preset {
        /// One of: fig3, fig4c, fig4d, figS5a, figS5b, figS5c, figS5d.
        name: String,
        /// Directory for output files.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Override the random seed of every scenario in the set.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the trial count of every scenario in the set.
        #[arg(long)]
        trials: Option<u64>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    apply_thread_cap()?;
    let files = match cli.command {
        Command::Run { config } => {
            let scenarios = load_config(&config)?;
            let base = match config.parent() {
                Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
                _ => PathBuf::from("."),
            };
            run_scenarios(&scenarios, &base)?
        }
        Command::Preset { name, out, seed, trials } => {
            let mut scenarios = preset(&name)?;
            apply_overrides(&mut scenarios, seed, trials);
            run_scenarios(&scenarios, &out)?
        }
    };
    for f in &files {
        println!("wrote {}", display_clean(f));
    }
    Ok(())
}

/// Strip a leading `./` so logged paths read naturally.
fn display_clean(path: &Path) -> String {
    let s = path.display().to_string();
    s.strip_prefix("./").map(str::to_owned).unwrap_or(s)
}
