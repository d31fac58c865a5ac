//! `varsieve`: screen simulation input variables with decision trees.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "varsieve",
    version,
    about = "Decision-tree variable screening for simulation runs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Input table plus the columns that hold objectives.
#[derive(Args, Clone)]
pub struct InputArgs {
    /// CSV or ARFF file (chosen by extension).
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated objective column names.
    #[arg(long, value_delimiter = ',', required = true)]
    pub objectives: Vec<String>,
}

#[derive(Args, Clone)]
pub struct LearnerArgs {
    /// sdr, info-gain, best-first or ladtree.
    #[arg(long, default_value = "ladtree")]
    pub learner: String,
    /// Boosting iterations (ladtree) or split budget (other learners).
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Full learner spec as JSON, e.g. '{"kind":"sdr","sd_fraction":0.1}'.
    #[arg(long, conflicts_with_all = ["learner", "iterations"])]
    pub learner_json: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Load a table, print its shape, optionally convert it (.csv, .arff or .json).
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bin continuous objectives into classes.
    Discretize {
        #[command(flatten)]
        input: InputArgs,
        /// equal-width, equal-frequency or explicit-thresholds.
        #[arg(long, default_value = "equal-frequency")]
        method: String,
        /// Number of classes (equal-width / equal-frequency).
        #[arg(long, default_value_t = 4)]
        k: usize,
        /// Ascending cut points (explicit-thresholds).
        #[arg(long, value_delimiter = ',')]
        thresholds: Vec<f64>,
        /// Class labels, lowest bin first.
        #[arg(long, value_delimiter = ',')]
        labels: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one learner on one objective and save the model as JSON.
    Train {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        learner: LearnerArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// MAE/RMSE of a learner (or a saved model), or a comparison of learners.
    Evaluate {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        learner: LearnerArgs,
        /// Score this saved model on the input (training protocol).
        #[arg(long, conflicts_with_all = ["compare", "protocol"])]
        model: Option<PathBuf>,
        /// Comma-separated learners to rank against each other.
        #[arg(long, value_delimiter = ',')]
        compare: Vec<String>,
        #[arg(long, default_value = "loo")]
        protocol: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Importance ranking of a saved model.
    Rank {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grow a learner until MAE and RMSE meet the thresholds; report its variables.
    Select {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        learner: LearnerArgs,
        #[arg(long)]
        mae: f64,
        #[arg(long)]
        rmse: f64,
        #[arg(long, default_value_t = 20)]
        max_rounds: usize,
        #[arg(long, default_value = "loo")]
        protocol: String,
        /// Directory for one selection JSON per objective.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Keep only the variables named in ranking or selection files.
    Reduce {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        rankings: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Assemble a screening report from selection files.
    Report {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        selections: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic table with planted effective variables.
    Synth {
        #[arg(long, default_value_t = 42)]
        n_vars: usize,
        /// 1-based indices of the effective variables.
        #[arg(long, value_delimiter = ',', required = true)]
        effective: Vec<usize>,
        /// linear, xor or radial.
        #[arg(long, default_value = "linear")]
        family: String,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Overridden by the VARSIEVE_SEED environment variable.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        runs: usize,
        /// CSV path; the ground truth goes to `<stem>.truth.json` beside it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the whole workflow from a JSON config and/or flags.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub objectives: Vec<String>,
    #[arg(long)]
    pub learner: Option<String>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub mae: Option<f64>,
    #[arg(long)]
    pub rmse: Option<f64>,
    #[arg(long)]
    pub max_rounds: Option<usize>,
    #[arg(long)]
    pub protocol: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Zero the duration so reports from identical inputs are byte-identical.
    #[arg(long)]
    pub canonical: bool,
    /// Override any config field by dotted name, e.g. `learner.z_clip=3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Ingest { input, out } => commands::ingest(&input, out.as_deref()),
        Command::Discretize {
            input,
            method,
            k,
            thresholds,
            labels,
            out,
        } => commands::discretize(&input, &method, k, thresholds, labels, &out),
        Command::Train { input, learner, out } => commands::train(&input, &learner, &out),
        Command::Evaluate {
            input,
            learner,
            model,
            compare,
            protocol,
            out,
        } => commands::evaluate(&input, &learner, model.as_deref(), &compare, &protocol, out.as_deref()),
        Command::Rank { model, out } => commands::rank(&model, out.as_deref()),
        Command::Select {
            input,
            learner,
            mae,
            rmse,
            max_rounds,
            protocol,
            out,
        } => commands::select(&input, &learner, mae, rmse, max_rounds, &protocol, out.as_deref()),
        Command::Reduce { input, rankings, out } => commands::reduce(&input, &rankings, &out),
        Command::Report { input, selections, out } => commands::report(&input, &selections, out.as_deref()),
        Command::Synth {
            n_vars,
            effective,
            family,
            noise,
            k,
            seed,
            runs,
            out,
        } => commands::synth(n_vars, effective, &family, noise, k, seed, runs, &out),
        Command::Pipeline(args) => return commands::pipeline(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
