use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;
use tsch_core::analysis::{auc, autocorrelation_with, confusion, energy, metrics, CorrelationMethod};
use tsch_core::dataset::{split, WindowSet, WindowSpec};
use tsch_core::predictor::{classify, evaluate_scores, MlpModel};

use crate::profile::{parse_profile, NamedProfile};
use crate::report::{csv_table, write_json, LinkReport};
use crate::train::{file_label, load_trace};
use crate::{out_root, CmdResult, Failure, SplitArgs};

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalOptions {
    /// Scores at or above the threshold predict a used slot
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Energy profile: openmote-b, openmote-stm or custom:<path> [default: openmote-b]
    #[arg(long, value_parser = parse_profile)]
    pub profile: Option<NamedProfile>,
    /// Largest autocorrelation lag [default: half the test segment]
    #[arg(long)]
    pub max_lag: Option<usize>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            threshold: 0.5,
            profile: None,
            max_lag: None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Model checkpoint written by `train`
    pub checkpoint: PathBuf,
    /// Link trace file
    pub trace: PathBuf,
    /// Expected window length [default: the checkpoint's input size]
    #[arg(long = "np")]
    pub n_p: Option<usize>,
    #[command(flatten)]
    pub options: EvalOptions,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Level recorded in the report
    #[arg(long)]
    pub level: Option<usize>,
    /// Output directory [default: $TSCHML_OUT/eval/<trace name>]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn load_model(path: &Path) -> CmdResult<MlpModel> {
    if !path.is_file() {
        return Err(Failure::usage(format!("checkpoint not found: {}", path.display())));
    }
    MlpModel::load_checkpoint(path)
        .map(|(m, _)| m)
        .map_err(|e| Failure::Runtime(anyhow::anyhow!("cannot read checkpoint {}: {e}", path.display())))
}

/// Evaluates `model` on the test segment of the trace at `trace_path`.
pub fn evaluate_model(
    model: &MlpModel,
    trace_path: &Path,
    options: &EvalOptions,
    split_args: &SplitArgs,
    default_profile: &NamedProfile,
    level: Option<usize>,
) -> CmdResult<LinkReport> {
    if !(0.0..=1.0).contains(&options.threshold) {
        return Err(Failure::usage(format!(
            "--threshold must lie in [0, 1], got {}",
            options.threshold
        )));
    }
    let profile = options.profile.clone().unwrap_or_else(|| default_profile.clone());
    let n_p = model.n_inputs();
    let trace = load_trace(trace_path)?;
    let (train_len, test_len) = split_args.resolve(trace.len())?;
    if test_len < n_p + 1 {
        return Err(Failure::Runtime(anyhow::anyhow!(
            "test segment has {test_len} samples; n_p = {n_p} needs at least {}",
            n_p + 1
        )));
    }
    let (_, test) = split(&trace, train_len, test_len)?;
    let spec = WindowSpec::new(n_p)?;
    let set = WindowSet::new(&test, spec)?;
    let scores = evaluate_scores(model, &set)?;
    let targets: Vec<bool> = (0..set.len()).map(|j| set.target(j)).collect();
    let flags: Vec<bool> = scores.iter().map(|&s| classify(s, options.threshold)).collect();
    let cm = confusion(&flags, &targets)?;
    let m = metrics(&cm)?;
    let has_both = cm.tp + cm.fn_ > 0 && cm.fp + cm.tn > 0;
    let auc = if has_both { Some(auc(&scores, &targets)?) } else { None };
    let (rho_max, rho_max_lag, max_lag) = if test.count_ones() > 0 {
        let ac = autocorrelation_with(&test, options.max_lag, CorrelationMethod::Transform)?;
        (ac.rho_max, ac.rho_max_lag, ac.max_lag())
    } else {
        (None, None, options.max_lag.map_or(test.len() / 2, |m| m.min(test.len() / 2)))
    };
    let t_matrix_s = trace.t_matrix_us() as f64 / 1e6;
    // normalized by the test segment length, not the window count
    let power = energy(&cm, &profile.profile, test_len as u64, t_matrix_s)?;
    Ok(LinkReport {
        edge: trace.edge(),
        level,
        trace: file_label(trace_path),
        test_offset: train_len,
        test_samples: test_len,
        windows: set.len(),
        n_p,
        threshold: options.threshold,
        profile,
        t_matrix_s,
        confusion: cm,
        metrics: m,
        auc,
        rho_max,
        rho_max_lag,
        max_lag,
        power_uw: power.into(),
    })
}

pub fn write_report(report: &LinkReport, out: &Path) -> CmdResult<()> {
    std::fs::create_dir_all(out)?;
    write_json(&out.join(REPORT_JSON), report)?;
    std::fs::write(out.join(REPORT_CSV), csv_table(std::slice::from_ref(report)))?;
    Ok(())
}

pub fn run(args: &EvaluateArgs) -> CmdResult<LinkReport> {
    let model = load_model(&args.checkpoint)?;
    if let Some(n_p) = args.n_p {
        if n_p != model.n_inputs() {
            return Err(Failure::Runtime(anyhow::anyhow!(
                "checkpoint expects {} inputs but --np is {n_p}",
                model.n_inputs()
            )));
        }
    }
    let report = evaluate_model(
        &model,
        &args.trace,
        &args.options,
        &args.split,
        &NamedProfile::openmote_b(),
        args.level,
    )?;
    let stem = args
        .trace
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trace".into());
    let out = args.out.clone().unwrap_or_else(|| out_root().join("eval").join(stem));
    write_report(&report, &out)?;
    print!("{}", csv_table(std::slice::from_ref(&report)));
    Ok(report)
}
