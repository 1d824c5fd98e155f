//! `emtask`: featurize, correlate, tune, train, evaluate, predict, screen.

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::Failure;

#[derive(Parser, Debug)]
#[command(name = "emtask", version, about = "Energetic-material property prediction toolkit")]
struct Cli {
    /// Worker threads; defaults to every logical CPU. Results do not depend
    /// on it.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: Option<u32>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Dedupe {
    /// Duplicate (material, channel) rows are an error.
    Error,
    /// Duplicate rows are averaged.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    StRf,
    StNn,
    MtNn,
}

/// `1` to `6`, or `all` for the full registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subset(pub Option<u8>);

fn parse_subset(s: &str) -> Result<Subset, String> {
    match s {
        "all" => Ok(Subset(None)),
        _ => match s.parse::<u8>() {
            Ok(n @ 1..=6) => Ok(Subset(Some(n))),
            _ => Err(format!("expected 1 to 6 or 'all', got '{s}'")),
        },
    }
}

#[derive(Args, Debug)]
pub struct DataArgs {
    /// Dataset CSV: material_id,smiles,property,fidelity,value,density.
    #[arg(long)]
    pub data: PathBuf,
    /// Registry JSON; the built-in twelve-channel registry when absent.
    #[arg(long)]
    pub registry: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Dedupe::Error)]
    pub dedupe: Dedupe,
    /// Channel subset.
    #[arg(long, value_parser = parse_subset, default_value = "all")]
    pub subset: Subset,
}

/// One density mode; descriptors only unless `--density`.
#[derive(Args, Debug)]
pub struct DensityMode {
    /// Append crystal density to the descriptors.
    #[arg(long, conflicts_with = "no_density")]
    pub density: bool,
    /// Molecular descriptors only (the default).
    #[arg(long)]
    pub no_density: bool,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub density: DensityMode,
    #[arg(long, value_enum, default_value_t = Family::MtNn)]
    pub family: Family,
    /// Channel key such as `det_velocity:exp`; required by single-task
    /// families.
    #[arg(long, required_if_eq_any = [("family", "st-rf"), ("family", "st-nn")])]
    pub channel: Option<String>,
    /// Grid JSON with optional `nn` and `forest` axes.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Inner cross-validation folds for the grid search.
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the descriptor matrix and its schema manifest.
    Featurize {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        density: DensityMode,
        /// Reuse an existing schema manifest instead of fitting one.
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pairwise channel correlations and overlap counts.
    Correlate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Grid search only: score table and winning cell.
    Tune(FitArgs),
    /// Grid search, then refit the winner on all rows and save it.
    Train(FitArgs),
    /// Repeated k-fold protocol for one or more model families.
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        /// With density. Give both flags, or neither, for both modes.
        #[arg(long)]
        density: bool,
        /// Without density.
        #[arg(long)]
        no_density: bool,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Family::StRf, Family::StNn, Family::MtNn])]
        models: Vec<Family>,
        #[arg(long, value_delimiter = ',', default_values_t = [0u64, 1, 2])]
        seeds: Vec<u64>,
        /// Outer folds.
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 5)]
        inner_folds: usize,
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-channel predictions for SMILES strings.
    Predict {
        /// Model file written by `train`.
        #[arg(long)]
        model: PathBuf,
        #[arg(long, required = true)]
        smiles: Vec<String>,
        /// Crystal density in g/cm3, once for all molecules or once per
        /// molecule; required by density models.
        #[arg(long)]
        density: Vec<f64>,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank candidates by one predicted channel, highest first.
    Screen {
        #[arg(long)]
        model: PathBuf,
        /// CSV with material_id,smiles and an optional density column.
        #[arg(long)]
        candidates: PathBuf,
        /// Channel key to rank by.
        #[arg(long)]
        by: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .map_err(|e| Failure::new("ThreadPool", e.to_string()))?;
    }
    match cli.command {
        Command::Featurize {
            data,
            density,
            schema,
            out,
        } => commands::featurize(&data, density.density, schema.as_deref(), &out),
        Command::Correlate { data, out } => commands::correlate(&data, &out),
        Command::Tune(args) => commands::tune(&args),
        Command::Train(args) => commands::train(&args),
        Command::Evaluate {
            data,
            density,
            no_density,
            models,
            seeds,
            folds,
            inner_folds,
            grid,
            out,
        } => {
            let modes = match (density, no_density) {
                (true, false) => vec![true],
                (false, true) => vec![false],
                _ => vec![false, true],
            };
            commands::evaluate(&commands::EvaluateArgs {
                data: &data,
                modes,
                models,
                seeds,
                folds,
                inner_folds,
                grid: grid.as_deref(),
                out: &out,
            })
        }
        Command::Predict {
            model,
            smiles,
            density,
            out,
        } => commands::predict(&model, &smiles, &density, out.as_deref()),
        Command::Screen {
            model,
            candidates,
            by,
            out,
        } => commands::screen(&model, &candidates, &by, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json_line());
            ExitCode::from(1)
        }
    }
}
