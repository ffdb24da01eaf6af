//! `mrf-som` command line: `generate`, `train`, `evaluate`, `export`.
//!
//! Settings resolve in order: built-in defaults (or the config stored in the
//! model for `evaluate` and `export`), then `--config` file, then flags, then
//! `--set key=value` pairs.
//!
//! Exit codes: 0 success, 2 usage, 3 sampling failure, 4 data or config
//! error, 5 I/O error.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use self::commands::{cmd_evaluate, cmd_export, cmd_generate, cmd_train, Model};
use self::config::{Mode, RunConfig};
use crate::error::Error;
use crate::lattice::{Layout, Metric};
use crate::mrf::{BmuScope, DistanceNormalization};
use crate::som::Decay;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SAMPLING: i32 = 3;
pub const EXIT_DATA: i32 = 4;
pub const EXIT_IO: i32 = 5;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Sampling(_) => EXIT_SAMPLING,
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_DATA,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mrf-som",
    version,
    about = "Self-organizing maps with restricted receptive fields over humanoid joint angles",
    long_about = "Self-organizing maps with restricted receptive fields over humanoid joint angles.\n\n\
        Defaults: a 4x4 hex-offset lattice measured with Manhattan distance, and the built-in \
        7-joint mask (head, shoulder, elbow and wrist quadrants with overlapping borders). \
        Data is synthesized from a seeded right-hand-to-face self-touch sampler unless a CSV \
        dataset is given."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample self-touch postures and write dataset.csv plus generation.json
    Generate(Overrides),
    /// Normalize data, train a map and write model.json plus train_log.csv
    Train(Overrides),
    /// Score a trained model on a dataset and write metrics.json
    Evaluate(ModelArgs),
    /// Write heatmaps, the neuron-distance map and the encoding report
    Export(ModelArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Trained model file
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// Flat `key = value` config file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Extra `key=value` setting, repeatable (any config key)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory [default: out]
    #[arg(long)]
    pub out: Option<String>,
    /// Seed for sampling, initialization and shuffling [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Postures to generate [default: 3216]
    #[arg(long)]
    pub n: Option<usize>,
    /// Sampler attempt budget, 0 = 50000 per posture [default: 0]
    #[arg(long)]
    pub max_attempts: Option<u64>,
    /// Hand-to-face touch radius in meters [default: 0.03]
    #[arg(long)]
    pub touch_radius: Option<f64>,
    /// Dataset CSV path or `synthesize:<n>` [default: synthesize:3216]
    #[arg(long)]
    pub dataset: Option<String>,
    /// Mask file or `default-paper` [default: default-paper]
    #[arg(long)]
    pub mask: Option<String>,
    /// `mrf` or `som` [default: mrf]
    #[arg(long)]
    pub mode: Option<Mode>,
    /// Lattice rows [default: 4]
    #[arg(long)]
    pub rows: Option<usize>,
    /// Lattice columns [default: 4]
    #[arg(long)]
    pub cols: Option<usize>,
    /// `hex-offset` or `rectangular` [default: hex-offset]
    #[arg(long)]
    pub layout: Option<Layout>,
    /// `manhattan` or `hex-axial` [default: manhattan]
    #[arg(long)]
    pub metric: Option<Metric>,
    /// Training epochs [default: 100]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Initial learning rate [default: 0.5]
    #[arg(long)]
    pub alpha0: Option<f64>,
    /// Final learning rate [default: 0.01]
    #[arg(long)]
    pub alpha_end: Option<f64>,
    /// Initial neighborhood radius [default: 2.0]
    #[arg(long)]
    pub sigma0: Option<f64>,
    /// Final neighborhood radius [default: 0.5]
    #[arg(long)]
    pub sigma_end: Option<f64>,
    /// `exponential` or `linear` [default: exponential]
    #[arg(long)]
    pub decay: Option<Decay>,
    /// `global-masked` or `per-group` [default: global-masked]
    #[arg(long)]
    pub bmu_scope: Option<BmuScope>,
    /// `rms-per-active-dim` or `unnormalized` [default: rms-per-active-dim]
    #[arg(long)]
    pub distance_normalization: Option<DistanceNormalization>,
    /// Relative weight for a joint to join a combination [default: 0.25]
    #[arg(long)]
    pub combination_threshold: Option<f64>,
}

impl Overrides {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        fn push<T: ToString>(out: &mut Vec<(&'static str, String)>, key: &'static str, v: &Option<T>) {
            if let Some(v) = v {
                out.push((key, v.to_string()));
            }
        }
        let mut out = Vec::new();
        push(&mut out, "out", &self.out);
        push(&mut out, "seed", &self.seed);
        push(&mut out, "n", &self.n);
        push(&mut out, "max_attempts", &self.max_attempts);
        push(&mut out, "touch_radius", &self.touch_radius);
        push(&mut out, "dataset", &self.dataset);
        push(&mut out, "mask", &self.mask);
        push(&mut out, "mode", &self.mode);
        push(&mut out, "rows", &self.rows);
        push(&mut out, "cols", &self.cols);
        push(&mut out, "layout", &self.layout);
        push(&mut out, "metric", &self.metric);
        push(&mut out, "epochs", &self.epochs);
        push(&mut out, "alpha0", &self.alpha0);
        push(&mut out, "alpha_end", &self.alpha_end);
        push(&mut out, "sigma0", &self.sigma0);
        push(&mut out, "sigma_end", &self.sigma_end);
        push(&mut out, "decay", &self.decay);
        push(&mut out, "bmu_scope", &self.bmu_scope);
        push(&mut out, "distance_normalization", &self.distance_normalization);
        push(&mut out, "combination_threshold", &self.combination_threshold);
        out
    }

    /// Layers the config file, flags and `--set` pairs onto `base`.
    pub fn resolve(&self, mut base: RunConfig) -> crate::Result<RunConfig> {
        if let Some(path) = &self.config {
            base.apply_file(path)?;
        }
        for (key, value) in self.pairs() {
            base.set(key, &value)?;
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Configuration(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            base.set(k.trim(), v.trim())?;
        }
        Ok(base)
    }
}

fn execute(command: Command) -> crate::Result<()> {
    match command {
        Command::Generate(o) => {
            let cfg = o.resolve(RunConfig::default())?;
            let m = cmd_generate(&cfg)?;
            eprintln!(
                "wrote {} postures to {} (acceptance rate {:.6})",
                m.n, cfg.out, m.acceptance_rate
            );
        }
        Command::Train(o) => {
            let cfg = o.resolve(RunConfig::default())?;
            let model = cmd_train(&cfg)?;
            eprintln!(
                "trained {} map {}x{} on {} inputs into {}",
                model.mode,
                model.codebook.lattice.rows,
                model.codebook.lattice.cols,
                model.codebook.dims(),
                cfg.out
            );
        }
        Command::Evaluate(a) => {
            let model = Model::load(&a.model)?;
            let cfg = a.overrides.resolve(model.config.clone())?;
            let m = cmd_evaluate(&model, &cfg)?;
            eprintln!(
                "quantization error {:.6}, topographic error {}",
                m.quantization_error,
                m.topographic_error.map_or("n/a".into(), |t| format!("{t:.4}"))
            );
        }
        Command::Export(a) => {
            let model = Model::load(&a.model)?;
            let cfg = a.overrides.resolve(model.config.clone())?;
            let files = cmd_export(&model, &cfg)?;
            eprintln!("wrote {} files to {}", files.len(), cfg.out);
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs one command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
