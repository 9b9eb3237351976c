//! Command implementations behind the `blinkscreen` binary.
//!
//! Every command takes its parsed arguments and returns the text it would
//! print, so integration tests can drive the pipeline in-process.

pub mod commands;
pub mod filter;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::run;

/// Exit code for a failed command: 2 for validation errors, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let validation = err.chain().any(|cause| {
        cause
            .downcast_ref::<blinkscreen::Error>()
            .is_some_and(blinkscreen::Error::is_validation)
    });
    if validation {
        2
    } else {
        1
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "blinkscreen",
    version,
    about = "Bell's palsy screening from blink asymmetry"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the open/closed eye classifier on a crop dataset.
    TrainBlink(TrainBlinkArgs),
    /// Turn per-frame eye crops into eye-state streams.
    ClassifyFrames(ClassifyFramesArgs),
    /// Compute blink features for every stream in a directory.
    Extract(ExtractArgs),
    /// Fit the final detector on a feature table.
    TrainDetector(TrainDetectorArgs),
    /// Cross-validate a final detector on a feature table.
    Evaluate(EvaluateArgs),
    /// Write a synthetic cohort of eye-state streams.
    Simulate(SimulateArgs),
    /// Screen one subject from their eye crops.
    Screen(ScreenArgs),
}

#[derive(Debug, Clone, Args)]
pub struct TrainBlinkArgs {
    /// Crop dataset root holding `open/` and `closed/`.
    #[arg(long)]
    pub data: PathBuf,
    /// Train, validation and test fractions.
    #[arg(long, default_value = "0.7,0.15,0.15")]
    pub split: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    /// Keep training after a perfect validation epoch.
    #[arg(long)]
    pub no_early_stop: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyFramesArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// A crop directory with `manifest.csv`, or a directory of them.
    #[arg(long)]
    pub crops: PathBuf,
    /// Output stream file, or output directory when `--crops` holds several videos.
    #[arg(long)]
    pub out: PathBuf,
    /// Frame rate to use instead of the manifest's.
    #[arg(long)]
    pub fps_override: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ExtractArgs {
    /// Directory of eye-state stream CSV files.
    #[arg(long)]
    pub streams: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// CSV with `video_id` and `label` columns; defaults to `<streams>/manifest.csv`.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Smooth each eye with a window-3 median before counting.
    #[arg(long)]
    pub median_filter: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct TrainDetectorArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, default_value = "hinge")]
    pub learner: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, default_value = "hinge")]
    pub learner: String,
    #[arg(long, default_value_t = 3)]
    pub kfold: usize,
    /// Also write the `tn,fp,fn,tp,accuracy` row here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 34)]
    pub normal: usize,
    #[arg(long, default_value_t = 41)]
    pub palsy: usize,
    #[arg(long, default_value_t = 30.0)]
    pub duration: f64,
    #[arg(long, default_value_t = 30.0)]
    pub fps: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also render per-frame eye crops under `<out>/crops/<video_id>/`.
    #[arg(long)]
    pub crops: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ScreenArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub detector: PathBuf,
    /// One subject's crop directory with `manifest.csv`.
    #[arg(long)]
    pub crops: PathBuf,
    #[arg(long)]
    pub fps_override: Option<f64>,
    #[arg(long)]
    pub median_filter: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
