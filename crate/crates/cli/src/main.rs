//! `skbd`: decision tables, single decisions and operating-characteristic
//! simulations for Keyboard-family dose-finding designs.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "skbd", version, about = "Shared Keyboard dose-finding designs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the pre-tabulated decision boundaries at one dose.
    Table(TableArgs),
    /// Recommend the next dose from interim data.
    Decide(DecideArgs),
    /// Simulate trials and report operating characteristics.
    Simulate(SimulateArgs),
    /// Built-in and randomly generated toxicity scenarios.
    Scenarios {
        #[command(subcommand)]
        command: ScenarioCommand,
    },
}

#[derive(Subcommand)]
enum ScenarioCommand {
    /// Write scenarios as JSON.
    Export(ExportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Args)]
struct TableArgs {
    #[arg(long)]
    config: PathBuf,
    /// Design name; the first configured design by default.
    #[arg(long)]
    design: Option<String>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DecideArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    design: Option<String>,
    /// Patients treated at each dose, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Vec<u32>,
    /// DLTs at each dose, comma separated.
    #[arg(long, value_delimiter = ',')]
    y: Vec<u32>,
    /// Current dose level (1-based).
    #[arg(long)]
    current: usize,
    /// Lowest eliminated dose level (1-based).
    #[arg(long)]
    eliminated_from: Option<usize>,
    /// Raw doses inserted so far, comma separated.
    #[arg(long, value_delimiter = ',')]
    inserted: Vec<f64>,
    /// JSON file of patient records for time-to-event decisions.
    #[arg(long)]
    patients: Option<PathBuf>,
    /// Also evaluate the dose-insertion triggers.
    #[arg(long)]
    check_insertion: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Scenario file, or a built-in set: fixed, fixed-N, insertion,
    /// insertion-N. Repeatable.
    #[arg(long, required = true)]
    scenario: Vec<String>,
    #[arg(long, default_value_t = 1000)]
    replicates: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, env = "SKBD_THREADS")]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write every simulated trial as JSON lines.
    #[arg(long)]
    paths: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    /// Built-in set: fixed, fixed-N, insertion, insertion-N.
    #[arg(long, default_value = "fixed", conflicts_with = "random")]
    set: String,
    /// Draw this many random scenarios instead.
    #[arg(long)]
    random: Option<usize>,
    #[arg(long, default_value_t = 5)]
    levels: usize,
    #[arg(long, default_value_t = 0.3)]
    phi: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Table(a) => commands::table(a),
        Command::Decide(a) => commands::decide(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Scenarios {
            command: ScenarioCommand::Export(a),
        } => commands::export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
