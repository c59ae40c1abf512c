use serde::{Deserialize, Serialize};

use crate::error::{config, domain};
use crate::Result;

const FIRST_CHANNEL: u8 = 11;
const LAST_CHANNEL: u8 = 26;

/// Ordered list of IEEE 802.15.4 channels (11..=26) indexed by
/// `(ASN + channel offset) mod len`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct HopSequence {
    channels: Vec<u8>,
}

impl HopSequence {
    pub fn new(channels: Vec<u8>) -> Result<Self> {
        if channels.is_empty() {
            return Err(config("hop sequence must contain at least one channel"));
        }
        if let Some(bad) = channels
            .iter()
            .find(|c| !(FIRST_CHANNEL..=LAST_CHANNEL).contains(*c))
        {
            return Err(config(format!("channel {bad} is outside 11..=26")));
        }
        if channels.len() == 16 {
            let mut seen = [false; 16];
            for &c in &channels {
                let slot = &mut seen[(c - FIRST_CHANNEL) as usize];
                if *slot {
                    return Err(config(format!(
                        "a 16-entry hop sequence must be a permutation, channel {c} repeats"
                    )));
                }
                *slot = true;
            }
        }
        Ok(HopSequence { channels })
    }

    /// `[11, 12, ..., 26]`.
    pub fn identity() -> Self {
        HopSequence {
            channels: (FIRST_CHANNEL..=LAST_CHANNEL).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn channels(&self) -> &[u8] {
        &self.channels
    }
}

impl Default for HopSequence {
    fn default() -> Self {
        HopSequence::identity()
    }
}

impl TryFrom<Vec<u8>> for HopSequence {
    type Error = crate::Error;

    fn try_from(channels: Vec<u8>) -> Result<Self> {
        HopSequence::new(channels)
    }
}

impl From<HopSequence> for Vec<u8> {
    fn from(h: HopSequence) -> Vec<u8> {
        h.channels
    }
}

/// Physical channel used by a cell at a given absolute slot number.
pub fn physical_channel(asn: u64, ch_offset: usize, hop: &HopSequence) -> Result<u8> {
    let len = hop.len();
    if ch_offset >= len {
        return Err(domain(format!(
            "channel offset {ch_offset} out of range for hop sequence of length {len}"
        )));
    }
    let idx = (asn % len as u64 + ch_offset as u64) % len as u64;
    Ok(hop.channels[idx as usize])
}
