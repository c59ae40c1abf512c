use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use tsch_core::dataset::{split, LinkTrace, WindowSet, WindowSpec};
use tsch_core::network::Edge;
use tsch_core::predictor::{self, EpochLog, TrainConfig};

use crate::report::write_json;
use crate::{out_root, CmdResult, Failure, SplitArgs};

pub const CHECKPOINT_FILE: &str = "model.tsmc";
pub const TRAIN_LOG_FILE: &str = "train_log.json";

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainOptions {
    /// Window length (number of past samples fed to the model)
    #[arg(long = "np", default_value_t = 890)]
    pub n_p: usize,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    /// Initial Adam learning rate
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    /// Learning-rate multiplier applied after every epoch
    #[arg(long, default_value_t = 0.5)]
    pub lr_decay: f64,
    #[arg(long, default_value_t = 8)]
    pub hidden: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainOptions {
            n_p: WindowSpec::default().n_p,
            epochs: d.epochs,
            batch_size: d.batch_size,
            lr: d.learning_rate,
            lr_decay: d.lr_decay,
            hidden: d.hidden_units,
        }
    }
}

impl TrainOptions {
    pub fn to_config(&self, seed: u64) -> CmdResult<(WindowSpec, TrainConfig)> {
        let spec = WindowSpec::new(self.n_p).map_err(|e| Failure::usage(format!("--np: {e}")))?;
        let cfg = TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.lr,
            lr_decay: self.lr_decay,
            hidden_units: self.hidden,
            seed,
            ..TrainConfig::default()
        };
        cfg.check().map_err(|e| Failure::usage(format!("invalid training options: {e}")))?;
        Ok((spec, cfg))
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Link trace file
    pub trace: PathBuf,
    #[command(flatten)]
    pub options: TrainOptions,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Seed for weight initialization and shuffling
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory [default: $TSCHML_OUT/train/<trace name>]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// `train_log.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub trace: String,
    pub edge: Edge,
    pub trace_samples: usize,
    pub train_samples: usize,
    pub test_samples: usize,
    pub train_windows: usize,
    pub n_p: usize,
    pub n_params: usize,
    pub config: TrainConfig,
    pub epochs: Vec<EpochLog>,
}

/// Loads a trace file; a missing file is a usage error.
pub fn load_trace(path: &Path) -> CmdResult<LinkTrace> {
    if !path.is_file() {
        return Err(Failure::usage(format!("trace not found: {}", path.display())));
    }
    LinkTrace::load(path).map_err(|e| Failure::Runtime(anyhow::anyhow!("cannot read trace {}: {e}", path.display())))
}

pub(crate) fn file_label(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trace".into())
}

/// Trains on the training segment of `trace_path` and writes the checkpoint
/// and training log into `out`.
pub fn train_into(
    trace_path: &Path,
    options: &TrainOptions,
    split_args: &SplitArgs,
    seed: u64,
    out: &Path,
) -> CmdResult<TrainLog> {
    let (spec, cfg) = options.to_config(seed)?;
    let trace = load_trace(trace_path)?;
    let (train_len, test_len) = split_args.resolve(trace.len())?;
    if train_len < spec.n_p + 1 {
        return Err(Failure::Runtime(anyhow::anyhow!(
            "training segment has {train_len} samples (trace has {}); n_p = {} needs at least {}",
            trace.len(),
            spec.n_p,
            spec.n_p + 1
        )));
    }
    let (train_trace, _) = split(&trace, train_len, test_len)?;
    let set = WindowSet::new(&train_trace, spec)?;
    let trained = predictor::train(&set, &cfg)?;

    std::fs::create_dir_all(out)?;
    trained
        .model
        .save_checkpoint(out.join(CHECKPOINT_FILE), Some(&trained.config))?;
    let log = TrainLog {
        trace: file_label(trace_path),
        edge: trace.edge(),
        trace_samples: trace.len(),
        train_samples: train_len,
        test_samples: test_len,
        train_windows: set.len(),
        n_p: spec.n_p,
        n_params: trained.model.n_params(),
        config: trained.config,
        epochs: trained.log,
    };
    write_json(&out.join(TRAIN_LOG_FILE), &log)?;
    Ok(log)
}

pub fn run(args: &TrainArgs) -> CmdResult<TrainLog> {
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| out_root().join("train").join(file_stem(&args.trace)));
    let log = train_into(&args.trace, &args.options, &args.split, args.seed, &out)?;
    println!(
        "trained {} on {} windows ({} parameters), final loss {:.6} -> {}",
        log.edge,
        log.train_windows,
        log.n_params,
        log.epochs.last().map_or(f64::NAN, |e| e.loss),
        out.join(CHECKPOINT_FILE).display()
    );
    Ok(log)
}
