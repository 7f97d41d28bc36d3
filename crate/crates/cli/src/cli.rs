use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

/// Latent variable evolution of fingerprint dictionary-attack images.
///
/// Every subcommand writes into its `--out` directory only and leaves a
/// `manifest.json` there that `lve rerun` can replay.
#[derive(Debug, Parser)]
#[command(name = "lve", version, propagate_version = true)]
pub struct Cli {
    #[command(flatten)]
    pub globals: Globals,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct Globals {
    /// Seed for every random choice of the run.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for parallel work (default: all CPUs).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// JSON object of option values, or a run manifest; flags override it.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a gallery directory from images or synthesize one.
    #[command(subcommand)]
    Gallery(GalleryCommand),
    /// Calibrate decision thresholds for target false match rates.
    Calibrate(CalibrateArgs),
    /// Evolve a masterprint against a gallery split.
    Evolve(EvolveArgs),
    /// Report the identities an image matches per matcher, split and FMR.
    Evaluate(EvaluateArgs),
    /// Render generator samples and count their minutiae.
    GenSample(GenSampleArgs),
    /// Write one of the built-in fixture generators as a weight file.
    GenFixture(GenFixtureArgs),
    /// Re-run the command recorded in a run manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Subcommand)]
pub enum GalleryCommand {
    /// Ingest an identity-organized image directory.
    Build(BuildArgs),
    /// Generate a synthetic gallery.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BuildArgs {
    /// Directory with one subdirectory per identity, or a `manifest` file.
    #[arg(long)]
    pub source: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fraction of identities assigned to the train split.
    #[arg(long, default_value_t = 0.5)]
    pub ratio: f64,
    /// Take a seeded square crop of this side from every image.
    #[arg(long)]
    pub crop: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub identities: usize,
    /// Partial prints per identity.
    #[arg(long, default_value_t = 12)]
    pub partials: usize,
    #[arg(long, default_value_t = 0.5)]
    pub ratio: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CalibrateArgs {
    /// Gallery directory written by `lve gallery`.
    #[arg(long)]
    pub gallery: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "default")]
    pub matcher: String,
    /// train, test or all.
    #[arg(long, default_value = "train")]
    pub split: String,
    /// Target false match rates as fractions (0.01 = 1%).
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.001, 0.0001])]
    pub fmr: Vec<f64>,
    /// Impostor pairs sampled for calibration.
    #[arg(long, default_value_t = 50_000)]
    pub pairs: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvolveArgs {
    #[arg(long)]
    pub gallery: Option<PathBuf>,
    /// Generator weight file (`.lvw`).
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Directory of threshold files written by `lve calibrate`.
    #[arg(long)]
    pub thresholds: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "default")]
    pub matcher: String,
    #[arg(long, default_value = "train")]
    pub split: String,
    /// Attack false match rate; selects the threshold file.
    #[arg(long, default_value_t = 0.01)]
    pub fmr: f64,
    /// Fitness evaluations.
    #[arg(long, default_value_t = 5_000)]
    pub budget: u64,
    /// count or smoothed.
    #[arg(long, default_value = "count")]
    pub fitness: String,
    /// Population size (default 4 + floor(3 ln n)).
    #[arg(long)]
    pub lambda: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma0: f64,
    /// Continue from a checkpoint file or the directory holding one.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub gallery: Option<PathBuf>,
    #[arg(long)]
    pub thresholds: Option<PathBuf>,
    /// Result directory of `lve evolve`; its `best.png` is evaluated.
    #[arg(long, conflicts_with = "image")]
    pub result: Option<PathBuf>,
    /// Any PNG or PGM image.
    #[arg(long)]
    pub image: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "default")]
    pub matchers: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = ["train".to_string(), "test".to_string()])]
    pub splits: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.001, 0.0001])]
    pub fmr: Vec<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GenSampleArgs {
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of random latents to render.
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    /// Render this latent (CSV) instead of random ones.
    #[arg(long)]
    pub latent: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GenFixtureArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// ridge, canonical, tiny or random.
    #[arg(long, default_value = "ridge")]
    pub kind: String,
    /// Output side of the ridge generator.
    #[arg(long, default_value_t = 128)]
    pub size: usize,
}

#[derive(Debug, Clone, Args)]
pub struct RerunArgs {
    /// A `manifest.json` written by an earlier run.
    pub manifest: PathBuf,
    /// Write to this directory instead of the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
