use std::path::{Path, PathBuf};

use clap::Args;
use tsch_core::network::{NetworkConfig, REFERENCE_TREE_JSON};
use tsch_core::sim::{self, RunManifest};

use crate::manifest::sha256_hex;
use crate::{out_root, CmdResult, Failure};

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Network configuration (JSON) [default: the bundled 31-node tree]
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Simulated time in days
    #[arg(long, conflicts_with = "duration_slots")]
    pub duration_days: Option<f64>,
    /// Simulated time in slots
    #[arg(long)]
    pub duration_slots: Option<u64>,
    /// Seed for channel losses and random flow phases
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: $TSCHML_OUT/sim]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A loaded configuration together with the bytes it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: NetworkConfig,
    /// File path, or `None` for the bundled configuration.
    pub path: Option<PathBuf>,
    pub sha256: String,
}

/// Reads, parses and validates a configuration. Every failure here is a
/// usage error.
pub fn load_config(path: Option<&Path>) -> CmdResult<LoadedConfig> {
    let text = match path {
        Some(p) => {
            if !p.is_file() {
                return Err(Failure::usage(format!("config not found: {}", p.display())));
            }
            std::fs::read_to_string(p)
                .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", p.display())))?
        }
        None => REFERENCE_TREE_JSON.to_string(),
    };
    let config = NetworkConfig::from_json_str(&text).map_err(|e| Failure::usage(format!("invalid config: {e}")))?;
    check_config(&config)?;
    Ok(LoadedConfig {
        config,
        path: path.map(Path::to_path_buf),
        sha256: sha256_hex(text.as_bytes()),
    })
}

fn check_config(config: &NetworkConfig) -> CmdResult<()> {
    let diags = config.validate();
    if diags.is_empty() {
        return Ok(());
    }
    let lines: Vec<String> = diags.iter().map(|d| format!("  {d}")).collect();
    Err(Failure::usage(format!(
        "configuration has {} problem(s):\n{}",
        diags.len(),
        lines.join("\n")
    )))
}

/// Applies the seed and duration overrides.
pub fn apply_overrides(
    config: &mut NetworkConfig,
    seed: Option<u64>,
    days: Option<f64>,
    slots: Option<u64>,
) -> CmdResult<()> {
    if let Some(seed) = seed {
        config
            .set_seed(seed)
            .map_err(|e| Failure::usage(format!("invalid config: {e}")))?;
    }
    if let Some(days) = days {
        if !(days >= 0.0 && days.is_finite()) {
            return Err(Failure::usage(format!("--duration-days must be non-negative, got {days}")));
        }
        config.params.duration_slots = config.params.slots_for_days(days);
    }
    if let Some(slots) = slots {
        config.params.duration_slots = slots;
    }
    config.params.check().map_err(|e| Failure::usage(format!("invalid parameters: {e}")))?;
    Ok(())
}

/// Runs the simulation and writes traces plus `run.json` into `out`.
pub fn simulate_into(config: &NetworkConfig, out: &Path) -> CmdResult<RunManifest> {
    let output = sim::run(config, &config.params)?;
    Ok(output.write_to_dir(&config.params, out)?)
}

pub fn run(args: &SimulateArgs) -> CmdResult<RunManifest> {
    let mut loaded = load_config(args.config.as_deref())?;
    apply_overrides(&mut loaded.config, args.seed, args.duration_days, args.duration_slots)?;
    let out = args.out.clone().unwrap_or_else(|| out_root().join("sim"));
    let manifest = simulate_into(&loaded.config, &out)?;
    let delivered: u64 = manifest.flows.iter().map(|f| f.delivered).sum();
    let generated: u64 = manifest.flows.iter().map(|f| f.generated).sum();
    println!(
        "simulated {} slots (seed {}): {} traces, {delivered}/{generated} packets delivered -> {}",
        manifest.duration_slots,
        manifest.seed,
        manifest.traces.len(),
        out.display()
    );
    Ok(manifest)
}
