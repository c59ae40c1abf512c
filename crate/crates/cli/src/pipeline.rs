use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use tsch_core::network::{Edge, NetworkConfig};
use tsch_core::sim::SimOutput;

use crate::evaluate::{evaluate_model, load_model, write_report, EvalOptions, REPORT_CSV, REPORT_JSON};
use crate::manifest::{
    fingerprint, sha256_file, unix_millis, Artifact, ConfigRef, PipelineManifest, StageRecord, MANIFEST_FILE,
};
use crate::profile::NamedProfile;
use crate::report::{csv_table, write_json, LinkReport};
use crate::simulate::{apply_overrides, load_config, simulate_into};
use crate::train::{train_into, TrainOptions, CHECKPOINT_FILE, TRAIN_LOG_FILE};
use crate::{out_root, CmdResult, Failure, SplitArgs};

pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const LEVEL_INDICES_CSV: &str = "level_indices.csv";
const SIM_DIR: &str = "sim";
const LINKS_DIR: &str = "links";

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    /// Network configuration (JSON) [default: the bundled 31-node tree]
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Simulated time in days [default: the configuration's duration]
    #[arg(long, conflicts_with = "duration_slots")]
    pub duration_days: Option<f64>,
    #[arg(long)]
    pub duration_slots: Option<u64>,
    /// Seed for the simulation and for training [default: the configuration's seed]
    #[arg(long)]
    pub seed: Option<u64>,
    /// `all`, or comma-separated links such as `16-24,24-28` [default: the
    /// configuration's analysis links]
    #[arg(long)]
    pub links: Option<String>,
    #[command(flatten)]
    pub train: TrainOptions,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub eval: EvalOptions,
    /// Links processed concurrently [default: one per core]
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Recompute every stage even when earlier outputs are intact
    #[arg(long)]
    pub force: bool,
    /// Output directory [default: $TSCHML_OUT/pipeline]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct PipelineSummary {
    pub out: PathBuf,
    pub reports: Vec<LinkReport>,
    pub manifest: PipelineManifest,
}

/// Resolves `--links` against the schedule, ordered by level then link.
pub fn select_links(config: &NetworkConfig, spec: Option<&str>) -> CmdResult<Vec<(Edge, usize)>> {
    let scheduled = config.schedule.edges();
    let edges: Vec<Edge> = match spec.map(str::trim) {
        Some("all") => scheduled.clone(),
        Some(list) => {
            let mut out = Vec::new();
            for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let edge = item.parse::<Edge>().ok().filter(|e| scheduled.contains(e));
                match edge {
                    Some(e) if !out.contains(&e) => out.push(e),
                    Some(_) => {}
                    None => {
                        let mut sorted = scheduled.clone();
                        sorted.sort();
                        let valid: Vec<String> = sorted.iter().map(|e| format!("{}-{}", e.sender.0, e.receiver.0)).collect();
                        return Err(Failure::usage(format!(
                            "unknown link '{item}'; valid links: {}",
                            valid.join(", ")
                        )));
                    }
                }
            }
            if out.is_empty() {
                return Err(Failure::usage("--links names no link"));
            }
            out
        }
        None if config.analysis_links.is_empty() => scheduled.clone(),
        None => config.analysis_links.clone(),
    };
    let mut leveled: Vec<(Edge, usize)> = edges
        .into_iter()
        .map(|e| {
            config
                .topology
                .edge_level(e)
                .map(|l| (e, l))
                .ok_or_else(|| Failure::usage(format!("link {e} is not part of the topology")))
        })
        .collect::<CmdResult<_>>()?;
    leveled.sort_by_key(|&(e, l)| (l, e));
    Ok(leveled)
}

fn link_dir(edge: Edge) -> PathBuf {
    PathBuf::from(LINKS_DIR).join(format!("{}_{}", edge.sender.0, edge.receiver.0))
}

fn trace_path(edge: Edge) -> PathBuf {
    PathBuf::from(SIM_DIR).join(SimOutput::trace_file_name(edge))
}

/// Stage bookkeeping shared by concurrent link workers.
struct Ledger {
    root: PathBuf,
    previous: Option<PipelineManifest>,
    current: Mutex<(PipelineManifest, BTreeMap<usize, StageRecord>)>,
}

impl Ledger {
    /// Runs `work` unless an earlier run left matching, intact outputs.
    fn stage(
        &self,
        order: usize,
        name: String,
        fp: String,
        outputs: &[PathBuf],
        work: impl FnOnce() -> CmdResult<()>,
    ) -> CmdResult<()> {
        let reused = self.previous.as_ref().and_then(|m| m.reusable(&name, &fp, &self.root));
        let record = match reused {
            Some(r) if r.artifacts.len() == outputs.len() => r,
            _ => {
                let started = unix_millis();
                work()?;
                let artifacts = outputs
                    .iter()
                    .map(|p| Artifact::record(&self.root, p.clone()))
                    .collect::<anyhow::Result<Vec<_>>>()?;
                StageRecord {
                    name,
                    fingerprint: fp,
                    started_unix_ms: started,
                    finished_unix_ms: unix_millis(),
                    reused: false,
                    artifacts,
                }
            }
        };
        let mut guard = self.current.lock().expect("ledger lock");
        guard.1.insert(order, record);
        let (manifest, records) = &mut *guard;
        manifest.stages = records.values().cloned().collect();
        write_json(&self.root.join(MANIFEST_FILE), manifest)?;
        Ok(())
    }

    fn into_manifest(self) -> PipelineManifest {
        self.current.into_inner().expect("ledger lock").0
    }
}

#[derive(Serialize)]
struct SimInputs<'a> {
    version: &'a str,
    config: String,
}

#[derive(Serialize)]
struct TrainInputs<'a> {
    version: &'a str,
    trace_sha256: String,
    options: &'a TrainOptions,
    split: &'a SplitArgs,
    seed: u64,
}

#[derive(Serialize)]
struct EvalInputs<'a> {
    version: &'a str,
    checkpoint_sha256: String,
    trace_sha256: String,
    options: &'a EvalOptions,
    profile: &'a NamedProfile,
    split: &'a SplitArgs,
    level: usize,
}

const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn run(args: &PipelineArgs) -> CmdResult<PipelineSummary> {
    let mut loaded = load_config(args.config.as_deref())?;
    apply_overrides(&mut loaded.config, args.seed, args.duration_days, args.duration_slots)?;
    let config = &loaded.config;
    let links = select_links(config, args.links.as_deref())?;
    args.train.to_config(config.params.seed)?;
    if let Some(0) = args.jobs {
        return Err(Failure::usage("--jobs must be at least 1"));
    }
    let seed = config.params.seed;
    let root = args.out.clone().unwrap_or_else(|| out_root().join("pipeline"));
    std::fs::create_dir_all(&root)?;

    let previous = if args.force {
        None
    } else {
        PipelineManifest::load(&root).ok()
    };
    let ledger = Ledger {
        root: root.clone(),
        previous,
        current: Mutex::new((
            PipelineManifest {
                config: ConfigRef {
                    path: loaded.path.clone(),
                    sha256: loaded.sha256.clone(),
                },
                seed,
                stages: Vec::new(),
            },
            BTreeMap::new(),
        )),
    };

    let mut sim_outputs: Vec<PathBuf> = config.schedule.edges().into_iter().map(trace_path).collect();
    sim_outputs.push(PathBuf::from(SIM_DIR).join(tsch_core::sim::RunManifest::FILE_NAME));
    let sim_fp = fingerprint(&SimInputs {
        version: VERSION,
        config: config.to_json_string()?,
    });
    ledger.stage(0, "simulate".into(), sim_fp, &sim_outputs, || {
        simulate_into(config, &root.join(SIM_DIR)).map(|_| ())
    })?;

    let default_profile = NamedProfile {
        name: "config".into(),
        profile: config.params.energy,
    };
    let profile = args.eval.profile.clone().unwrap_or(default_profile);

    let per_link = |(i, &(edge, level)): (usize, &(Edge, usize))| -> CmdResult<LinkReport> {
        let dir = link_dir(edge);
        let trace = trace_path(edge);
        let trace_sha = sha256_file(&root.join(&trace))?;
        let train_fp = fingerprint(&TrainInputs {
            version: VERSION,
            trace_sha256: trace_sha.clone(),
            options: &args.train,
            split: &args.split,
            seed,
        });
        let train_outputs = [dir.join(CHECKPOINT_FILE), dir.join(TRAIN_LOG_FILE)];
        ledger.stage(1 + 2 * i, format!("train {edge}"), train_fp, &train_outputs, || {
            train_into(&root.join(&trace), &args.train, &args.split, seed, &root.join(&dir)).map(|_| ())
        })?;

        let checkpoint = root.join(dir.join(CHECKPOINT_FILE));
        let eval_fp = fingerprint(&EvalInputs {
            version: VERSION,
            checkpoint_sha256: sha256_file(&checkpoint)?,
            trace_sha256: trace_sha,
            options: &args.eval,
            profile: &profile,
            split: &args.split,
            level,
        });
        let eval_outputs = [dir.join(REPORT_JSON), dir.join(REPORT_CSV)];
        ledger.stage(2 + 2 * i, format!("evaluate {edge}"), eval_fp, &eval_outputs, || {
            let model = load_model(&checkpoint)?;
            let options = EvalOptions {
                profile: Some(profile.clone()),
                ..args.eval.clone()
            };
            let report = evaluate_model(&model, &root.join(&trace), &options, &args.split, &profile, Some(level))?;
            write_report(&report, &root.join(&dir))
        })?;
        let text = std::fs::read_to_string(root.join(dir.join(REPORT_JSON)))?;
        Ok(serde_json::from_str(&text)?)
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(anyhow::Error::from)?;
    let reports: Vec<LinkReport> =
        pool.install(|| links.par_iter().enumerate().map(per_link).collect::<CmdResult<Vec<_>>>())?;

    let report_outputs = [
        PathBuf::from(SUMMARY_CSV),
        PathBuf::from(SUMMARY_JSON),
        PathBuf::from(LEVEL_INDICES_CSV),
    ];
    ledger.stage(
        1 + 2 * links.len(),
        "report".into(),
        fingerprint(&reports),
        &report_outputs,
        || write_summary(&root, &reports),
    )?;

    print!("{}", csv_table(&reports));
    Ok(PipelineSummary {
        out: root,
        reports,
        manifest: ledger.into_manifest(),
    })
}

/// Quality indices against level, one row per link, for plotting.
pub fn level_indices_table(reports: &[LinkReport]) -> String {
    let mut s = String::from("level,link,rho_max,auc,accuracy,precision,recall,f1\n");
    let raw = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "undefined".into());
    for r in reports {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.level.map(|l| l.to_string()).unwrap_or_default(),
            r.edge,
            raw(r.rho_max),
            raw(r.auc),
            r.metrics.accuracy,
            raw(r.metrics.precision),
            raw(r.metrics.recall),
            raw(r.metrics.f1)
        ));
    }
    s
}

fn write_summary(root: &Path, reports: &[LinkReport]) -> CmdResult<()> {
    std::fs::write(root.join(SUMMARY_CSV), csv_table(reports))?;
    write_json(&root.join(SUMMARY_JSON), &reports)?;
    std::fs::write(root.join(LEVEL_INDICES_CSV), level_indices_table(reports))?;
    Ok(())
}
