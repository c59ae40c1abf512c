use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{domain, Error};
use crate::network::Edge;
use crate::Result;

pub const TRACE_MAGIC: &[u8; 4] = b"TSLT";
pub const TRACE_FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 2 + 2 + 8 + 8;

/// Bit-packed slot-usage sequence of one link: bit `k` is 1 when the sender
/// transmitted in the `k`-th scheduled occurrence of the link.
///
/// Bits are stored LSB-first in 64-bit words, which is also the byte order of
/// the on-disk payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkTrace {
    edge: Edge,
    t_matrix_us: u64,
    len: usize,
    words: Vec<u64>,
}

impl LinkTrace {
    pub fn new(edge: Edge, t_matrix_us: u64) -> Self {
        LinkTrace {
            edge,
            t_matrix_us,
            len: 0,
            words: Vec::new(),
        }
    }

    pub fn with_capacity(edge: Edge, t_matrix_us: u64, bits: usize) -> Self {
        let mut t = Self::new(edge, t_matrix_us);
        t.words.reserve(bits.div_ceil(64));
        t
    }

    pub fn from_bits(edge: Edge, t_matrix_us: u64, bits: impl IntoIterator<Item = bool>) -> Self {
        let mut t = Self::new(edge, t_matrix_us);
        t.extend(bits);
        t
    }

    pub fn edge(&self) -> Edge {
        self.edge
    }

    /// Interval between successive samples of a once-per-slotframe link.
    pub fn t_matrix_us(&self) -> u64 {
        self.t_matrix_us
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, bit: bool) {
        let (w, b) = (self.len / 64, self.len % 64);
        if b == 0 {
            self.words.push(0);
        }
        if bit {
            self.words[w] |= 1 << b;
        }
        self.len += 1;
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        (i < self.len).then(|| self.words[i / 64] >> (i % 64) & 1 == 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.words[i / 64] >> (i % 64) & 1 == 1)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Packed words; bits past `len` are zero.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Positions of the set bits in `[start, end)`, ascending.
    pub fn ones_in(&self, start: usize, end: usize, mut f: impl FnMut(usize)) {
        let end = end.min(self.len);
        if start >= end {
            return;
        }
        let (first, last) = (start / 64, (end - 1) / 64);
        for w in first..=last {
            let mut word = self.words[w];
            if w == first {
                word &= u64::MAX << (start % 64);
            }
            if w == last && end % 64 != 0 {
                word &= u64::MAX >> (64 - end % 64);
            }
            while word != 0 {
                let tz = word.trailing_zeros() as usize;
                f(w * 64 + tz);
                word &= word - 1;
            }
        }
    }

    /// Copy of samples `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> Result<LinkTrace> {
        if start.checked_add(len).is_none_or(|end| end > self.len) {
            return Err(domain(format!(
                "slice [{start}, {start}+{len}) exceeds trace length {}",
                self.len
            )));
        }
        let mut out = LinkTrace::with_capacity(self.edge, self.t_matrix_us, len);
        if start % 64 == 0 {
            out.words
                .extend_from_slice(&self.words[start / 64..(start + len).div_ceil(64)]);
            out.len = len;
            if len % 64 != 0 {
                if let Some(last) = out.words.last_mut() {
                    *last &= u64::MAX >> (64 - len % 64);
                }
            }
        } else {
            out.extend((start..start + len).map(|i| self.words[i / 64] >> (i % 64) & 1 == 1));
        }
        Ok(out)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let sender = self.edge.sender.0;
        let receiver = self.edge.receiver.0;
        let mut header = Vec::with_capacity(HEADER_LEN);
        header.extend_from_slice(TRACE_MAGIC);
        header.extend_from_slice(&TRACE_FORMAT_VERSION.to_le_bytes());
        header.extend_from_slice(&sender.to_le_bytes());
        header.extend_from_slice(&receiver.to_le_bytes());
        header.extend_from_slice(&(self.len as u64).to_le_bytes());
        header.extend_from_slice(&self.t_matrix_us.to_le_bytes());
        w.write_all(&header)?;
        let n_bytes = self.len.div_ceil(8);
        let mut payload = Vec::with_capacity(n_bytes);
        for word in &self.words {
            payload.extend_from_slice(&word.to_le_bytes());
        }
        payload.truncate(n_bytes);
        w.write_all(&payload)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<LinkTrace> {
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header)
            .map_err(|_| Error::Format("trace header truncated".into()))?;
        if &header[0..4] != TRACE_MAGIC {
            return Err(Error::Format("not a trace file (bad magic)".into()));
        }
        let u16_at = |i: usize| u16::from_le_bytes([header[i], header[i + 1]]);
        let u64_at = |i: usize| u64::from_le_bytes(header[i..i + 8].try_into().unwrap());
        let version = u16_at(4);
        if version != TRACE_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported trace version {version}")));
        }
        let edge = Edge::new(u16_at(6), u16_at(8));
        let len = usize::try_from(u64_at(10))
            .map_err(|_| Error::Format("sample count too large".into()))?;
        let t_matrix_us = u64_at(18);

        let n_bytes = len.div_ceil(8);
        let mut payload = Vec::with_capacity(n_bytes);
        r.by_ref().take(n_bytes as u64).read_to_end(&mut payload)?;
        if payload.len() != n_bytes {
            return Err(Error::Format(format!(
                "payload holds {} bytes, header declares {len} samples",
                payload.len()
            )));
        }
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(Error::Format("trailing bytes after payload".into()));
        }
        let words: Vec<u64> = payload
            .chunks(8)
            .map(|c| {
                let mut b = [0u8; 8];
                b[..c.len()].copy_from_slice(c);
                u64::from_le_bytes(b)
            })
            .collect();
        if len % 64 != 0 && words.last().is_some_and(|w| w >> (len % 64) != 0) {
            return Err(Error::Format("non-zero padding bits".into()));
        }
        Ok(LinkTrace {
            edge,
            t_matrix_us,
            len,
            words,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<LinkTrace> {
        LinkTrace::read_from(BufReader::new(File::open(path)?))
    }
}

impl Extend<bool> for LinkTrace {
    fn extend<I: IntoIterator<Item = bool>>(&mut self, iter: I) {
        for b in iter {
            self.push(b);
        }
    }
}
