use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use swarmcover_cli::commands::{
    cmd_compare, cmd_plot, cmd_run, CompareArgs, PlotArgs, PlotMode, RunArgs,
};
use swarmcover_cli::scenario_file::FilterChoice;

#[derive(Parser)]
#[command(
    name = "swarmcover",
    version,
    about = "Multi-agent coverage simulation: run scenarios, compare filters, render plots"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario; writes trajectories.csv, metrics.json, field_final.csv
    Run {
        /// Scenario JSON file
        #[arg(long)]
        scenario: PathBuf,
        /// Output directory (created if absent)
        #[arg(long)]
        out: PathBuf,
        /// Override the file's safety filter
        #[arg(long, value_enum)]
        filter: Option<FilterChoice>,
        /// Override the file's step count
        #[arg(long)]
        steps: Option<usize>,
        /// Override the file's seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Render a finished run directory to SVG
    Plot {
        /// Run directory produced by `run`
        #[arg(long)]
        run: PathBuf,
        /// Output SVG path
        #[arg(long)]
        out: PathBuf,
        /// traj: trajectories over the field; safeset: one obstacle's
        /// (position, velocity) slice
        #[arg(long, value_enum, default_value = "traj")]
        mode: PlotMode,
        /// Obstacle index for safeset mode
        #[arg(long, default_value_t = 0)]
        obstacle: usize,
    },
    /// Run a scenario under both the barrier filter and the potential-field
    /// baseline; writes compare.json and a side-by-side SVG
    Compare {
        /// Scenario JSON file
        #[arg(long)]
        scenario: PathBuf,
        /// Output directory (created if absent)
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, out, filter, steps, seed } => {
            cmd_run(&RunArgs { scenario, out, filter, steps, seed })
        }
        Command::Plot { run, out, mode, obstacle } => {
            cmd_plot(&PlotArgs { run, out, mode, obstacle })
        }
        Command::Compare { scenario, out } => cmd_compare(&CompareArgs { scenario, out }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
