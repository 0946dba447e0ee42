use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vortex_pairs::cli_io::commands;
use vortex_pairs::cli_io::{self, Outcome};

#[derive(Parser, Debug)]
#[command(name = "vortex-pairs", version, about = "Corotating and translating vortex patch pairs")]
struct Cli {
    /// TOML configuration file
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Override a configuration key, e.g. `--set continuation.ds_max=0.02`
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Output directory (same as `--set output.dir=...`)
    #[arg(short, long, global = true)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Warm-started Newton solves along the configured list of scales
    Local,
    /// Pseudo-arclength continuation until a monitor floor or another stop
    Continue {
        /// Resume from the last row of a branch file
        #[arg(long)]
        seed_from: Option<PathBuf>,
    },
    /// Recompute residuals and certificates for every row of a branch file
    Diagnose {
        branch: PathBuf,
        /// Report path (default: next to the branch file)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Contour plots of selected rows and a monitor plot
    Plot {
        branch: PathBuf,
        /// Row index to draw; repeatable
        #[arg(short, long = "index")]
        indices: Vec<usize>,
    },
}

fn run(cli: Cli) -> vortex_pairs::Result<Outcome> {
    let mut overrides = cli.overrides;
    if let Some(dir) = &cli.out_dir {
        overrides.push(format!("output.dir={:?}", dir.display().to_string()));
    }
    match cli.command {
        Command::Local => cli_io::cmd_local(&cli_io::load_config(cli.config.as_deref(), &overrides)?),
        Command::Continue { seed_from } => {
            let cfg = cli_io::load_config(cli.config.as_deref(), &overrides)?;
            cli_io::cmd_continue(&cfg, seed_from.as_deref())
        }
        Command::Diagnose { branch, out } => cli_io::cmd_diagnose(&branch, out.as_deref()),
        Command::Plot { branch, indices } => {
            let dir = cli.out_dir.unwrap_or_else(|| branch.parent().map(PathBuf::from).unwrap_or_default());
            cli_io::cmd_plot(&branch, &indices, &dir)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.exit_code == 0 {
                println!("{}", outcome.message);
            } else {
                eprintln!("{}", outcome.message);
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code_for(&e) as u8)
        }
    }
}
