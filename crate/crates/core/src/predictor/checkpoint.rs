use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MlpModel, TrainConfig};
use crate::error::Error;
use crate::Result;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"TSMC";
const FORMAT_NAME: &str = "tsch-mlp";
const FORMAT_VERSION: u32 = 1;
const LAYOUT: &str = "per layer: kernel[in][out] row-major, then bias[out]; f64 little-endian";

/// JSON header of a checkpoint file.
///
/// The file is `"TSMC"`, the header length as u32 LE, the header JSON, then
/// `n_params` little-endian f64 values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub version: u32,
    pub layers: [usize; 3],
    pub activations: [String; 2],
    pub layout: String,
    pub n_params: usize,
    pub seed: Option<u64>,
    pub train_config: Option<TrainConfig>,
}

impl MlpModel {
    pub fn write_checkpoint(&self, mut w: impl Write, config: Option<&TrainConfig>) -> Result<()> {
        let header = CheckpointHeader {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            layers: self.layer_sizes(),
            activations: ["relu".into(), "sigmoid".into()],
            layout: LAYOUT.into(),
            n_params: self.n_params(),
            seed: config.map(|c| c.seed),
            train_config: config.cloned(),
        };
        let json = serde_json::to_vec(&header)?;
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&(json.len() as u32).to_le_bytes())?;
        w.write_all(&json)?;
        let mut payload = Vec::with_capacity(self.n_params() * 8);
        for p in self.params() {
            payload.extend_from_slice(&p.to_le_bytes());
        }
        w.write_all(&payload)?;
        Ok(())
    }

    pub fn read_checkpoint(mut r: impl Read) -> Result<(MlpModel, CheckpointHeader)> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| Error::Format("checkpoint truncated".into()))?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::Format("not a model checkpoint (bad magic)".into()));
        }
        let mut len = [0u8; 4];
        r.read_exact(&mut len)?;
        let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
        r.read_exact(&mut json)
            .map_err(|_| Error::Format("checkpoint header truncated".into()))?;
        let header: CheckpointHeader = serde_json::from_slice(&json)?;
        if header.format != FORMAT_NAME || header.version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint {} v{}",
                header.format, header.version
            )));
        }
        if header.layers[2] != 1 || header.activations != ["relu", "sigmoid"] {
            return Err(Error::Format("only in-relu-sigmoid(1) networks are supported".into()));
        }
        let mut payload = Vec::new();
        r.read_to_end(&mut payload)?;
        if payload.len() != header.n_params * 8 {
            return Err(Error::Format(format!(
                "payload holds {} bytes, header declares {} parameters",
                payload.len(),
                header.n_params
            )));
        }
        let params: Vec<f64> = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let model = MlpModel::from_params(header.layers[0], header.layers[1], &params)
            .map_err(|e| Error::Format(e.to_string()))?;
        Ok((model, header))
    }

    pub fn save_checkpoint(&self, path: impl AsRef<Path>, config: Option<&TrainConfig>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_checkpoint(&mut w, config)?;
        w.flush()?;
        Ok(())
    }

    pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(MlpModel, CheckpointHeader)> {
        MlpModel::read_checkpoint(BufReader::new(File::open(path)?))
    }
}
