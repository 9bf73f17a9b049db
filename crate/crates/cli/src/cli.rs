use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rmcal_core::calibrator::DEFAULT_TOLERANCE;
use rmcal_core::prefs::TiePolicy;

#[derive(Debug, Parser)]
#[command(name = "rmcal", version, about = "Calibrate reward-model scores against Elo ratings")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a score file and summarize its contents.
    IngestCheck(IngestCheckArgs),
    /// Solve the score offset of one model against a reference.
    Calibrate(CalibrateArgs),
    /// Solve offsets for several models at once against the Elo win-rate matrix.
    CalibrateJoint(JointArgs),
    /// Report the mismatch degree of a pair at a given offset.
    Md(MdArgs),
    /// Build a preference dataset from scored responses.
    BuildPrefs(BuildPrefsArgs),
    /// Count stylistic patterns in chosen and rejected responses.
    Patterns(PatternsArgs),
    /// Z-normalize scores and average them per group.
    Zscore(ZscoreArgs),
    /// Bradley-Terry loss of a score assignment on a preference dataset.
    Btloss(BtlossArgs),
    /// Run the synthetic recovery suite.
    Simulate(SimulateArgs),
    /// Turn report files into tab-separated plot data.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Jsonl,
    Csv,
}

#[derive(Debug, Args)]
pub struct ScoresArg {
    /// Score file (JSONL, or CSV when the name ends in .csv).
    #[arg(long)]
    pub scores: PathBuf,
    /// Override the format guessed from the file name.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Args)]
pub struct EloArg {
    /// Elo ratings (JSON object, JSONL or CSV). Defaults to the bundled
    /// leaderboard snapshot.
    #[arg(long)]
    pub elo: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestCheckArgs {
    #[command(flatten)]
    pub scores: ScoresArg,
    #[command(flatten)]
    pub elo: EloArg,
    /// Models whose pairwise shared prompts should be checked.
    #[arg(long, value_delimiter = ',')]
    pub models: Vec<String>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub scores: ScoresArg,
    #[command(flatten)]
    pub elo: EloArg,
    #[arg(long)]
    pub over_valued: String,
    #[arg(long)]
    pub reference: String,
    /// Solve separately within each prompt category.
    #[arg(long)]
    pub per_category: bool,
    /// Win-rate tolerance.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tol: f64,
    /// Report file (line-delimited JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct JointArgs {
    #[command(flatten)]
    pub scores: ScoresArg,
    #[command(flatten)]
    pub elo: EloArg,
    /// Models to calibrate; defaults to every model in the score file.
    #[arg(long, value_delimiter = ',')]
    pub models: Vec<String>,
    /// Model whose offset stays 0; defaults to the highest-rated one.
    #[arg(long)]
    pub anchor: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    pub step: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    /// Stop once a step improves the loss by no more than this.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MdArgs {
    #[command(flatten)]
    pub scores: ScoresArg,
    #[command(flatten)]
    pub elo: EloArg,
    #[arg(long)]
    pub over_valued: String,
    #[arg(long)]
    pub reference: String,
    /// Offset added to the over-valued model's scores.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub offset: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BuildPrefsArgs {
    #[command(flatten)]
    pub scores: ScoresArg,
    /// Required unless taken from --calibration.
    #[arg(long)]
    pub over_valued: Option<String>,
    #[arg(long)]
    pub reference: Option<String>,
    /// Offset for the over-valued model.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "calibration")]
    pub offset: Option<f64>,
    /// Report written by calibrate or calibrate-joint.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long, default_value = "drop")]
    pub tie_policy: TiePolicy,
    /// Dataset file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PatternsArgs {
    /// Dataset written by build-prefs.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupBy {
    Style,
    Category,
    Model,
}

#[derive(Debug, Args)]
pub struct ZscoreArgs {
    /// Score file; records are grouped by --group-by.
    #[arg(long, conflicts_with = "dataset", required_unless_present = "dataset")]
    pub scores: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[arg(long, value_enum, default_value = "style")]
    pub group_by: GroupBy,
    /// Dataset; scores are grouped into chosen and rejected.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BtlossArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Rescore pairs from this file instead of using the stored raw scores.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Add the dataset's applied offsets to the scores.
    #[arg(long)]
    pub calibrated: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulation config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Recovery report (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the simulated score table (JSONL).
    #[arg(long)]
    pub scores_out: Option<PathBuf>,
    /// Also write the simulated battle log (JSONL).
    #[arg(long)]
    pub battles_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report files from calibrate, calibrate-joint, md, patterns or zscore.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Directory for the .tsv tables.
    #[arg(long)]
    pub out_dir: PathBuf,
}
