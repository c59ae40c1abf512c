use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "pipeline.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let mut f = std::fs::File::open(path).with_context(|| format!("open {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Hash of a stage's inputs, used to decide whether earlier outputs can be reused.
pub fn fingerprint<T: Serialize>(inputs: &T) -> String {
    sha256_hex(&serde_json::to_vec(inputs).expect("stage inputs serialize"))
}

pub fn unix_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the pipeline output directory.
    pub path: PathBuf,
    pub sha256: String,
}

impl Artifact {
    pub fn record(root: &Path, rel: impl Into<PathBuf>) -> anyhow::Result<Self> {
        let path = rel.into();
        let sha256 = sha256_file(&root.join(&path))?;
        Ok(Artifact { path, sha256 })
    }

    pub fn matches(&self, root: &Path) -> bool {
        sha256_file(&root.join(&self.path)).is_ok_and(|h| h == self.sha256)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub fingerprint: String,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    /// Outputs were found intact from an earlier run and not recomputed.
    pub reused: bool,
    pub artifacts: Vec<Artifact>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigRef {
    /// `None` for the bundled configuration.
    pub path: Option<PathBuf>,
    pub sha256: String,
}

/// `pipeline.json`: the only artifact carrying timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineManifest {
    pub config: ConfigRef,
    pub seed: u64,
    pub stages: Vec<StageRecord>,
}

impl PipelineManifest {
    pub fn load(root: &Path) -> anyhow::Result<Self> {
        let path = root.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).with_context(|| format!("read {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }

    /// Checks that every recorded artifact exists with its recorded hash.
    pub fn verify(&self, root: &Path) -> anyhow::Result<()> {
        for stage in &self.stages {
            for a in &stage.artifacts {
                let path = root.join(&a.path);
                let got = sha256_file(&path).with_context(|| format!("stage {}", stage.name))?;
                if got != a.sha256 {
                    bail!("{} changed since stage {} wrote it", path.display(), stage.name);
                }
            }
        }
        Ok(())
    }

    /// An earlier record for `name` whose inputs match and whose outputs are intact.
    pub fn reusable(&self, name: &str, fingerprint: &str, root: &Path) -> Option<StageRecord> {
        let s = self.stage(name)?;
        (s.fingerprint == fingerprint && !s.artifacts.is_empty() && s.artifacts.iter().all(|a| a.matches(root)))
            .then(|| StageRecord {
                reused: true,
                ..s.clone()
            })
    }
}
