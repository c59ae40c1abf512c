use serde::{Deserialize, Serialize};

use super::LinkTrace;
use crate::error::domain;
use crate::Result;

/// Sliding-window shape: the model sees the last `n_p` samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub n_p: usize,
}

impl WindowSpec {
    pub fn new(n_p: usize) -> Result<Self> {
        if n_p == 0 {
            return Err(domain("window length n_p must be at least 1"));
        }
        Ok(WindowSpec { n_p })
    }
}

impl Default for WindowSpec {
    /// 890 samples, about 30 minutes of 2.02 s slotframes.
    fn default() -> Self {
        WindowSpec { n_p: 890 }
    }
}

/// Contiguous split: the first `train_len` samples and the `test_len` samples right after them.
pub fn split(trace: &LinkTrace, train_len: usize, test_len: usize) -> Result<(LinkTrace, LinkTrace)> {
    match train_len.checked_add(test_len) {
        Some(total) if total <= trace.len() => {}
        _ => {
            return Err(domain(format!(
                "split {train_len} + {test_len} exceeds trace length {}",
                trace.len()
            )))
        }
    }
    Ok((trace.slice(0, train_len)?, trace.slice(train_len, test_len)?))
}

/// One supervised example. `active` lists the positions of `X` that hold a 1,
/// where `X[0]` is the most recent sample and `X[n_p - 1]` the oldest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    pub index: usize,
    pub n_p: usize,
    pub active: Vec<u32>,
    pub target: bool,
}

impl Window {
    pub fn to_dense(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n_p];
        for &i in &self.active {
            x[i as usize] = 1.0;
        }
        x
    }
}

/// Random-access view of all windows of a trace, without unpacking it.
#[derive(Debug, Clone, Copy)]
pub struct WindowSet<'a> {
    trace: &'a LinkTrace,
    n_p: usize,
}

impl<'a> WindowSet<'a> {
    pub fn new(trace: &'a LinkTrace, spec: WindowSpec) -> Result<Self> {
        if spec.n_p == 0 {
            return Err(domain("window length n_p must be at least 1"));
        }
        if trace.len() < spec.n_p + 1 {
            return Err(domain(format!(
                "trace of {} samples is shorter than n_p + 1 = {}",
                trace.len(),
                spec.n_p + 1
            )));
        }
        Ok(WindowSet { trace, n_p: spec.n_p })
    }

    /// `N - n_p`.
    pub fn len(&self) -> usize {
        self.trace.len() - self.n_p
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_p(&self) -> usize {
        self.n_p
    }

    pub fn trace(&self) -> &'a LinkTrace {
        self.trace
    }

    pub fn target(&self, j: usize) -> bool {
        self.trace.get(j + self.n_p).unwrap_or(false)
    }

    /// Appends the active input positions of window `j` to `out`, ascending.
    pub fn push_active(&self, j: usize, out: &mut Vec<u32>) {
        let start = out.len();
        let newest = j + self.n_p - 1;
        self.trace
            .ones_in(j, j + self.n_p, |s| out.push((newest - s) as u32));
        out[start..].reverse();
    }

    pub fn window(&self, j: usize) -> Window {
        let mut active = Vec::new();
        self.push_active(j, &mut active);
        Window {
            index: j,
            n_p: self.n_p,
            active,
            target: self.target(j),
        }
    }

    pub fn iter(&self) -> Windows<'a> {
        Windows { set: *self, next: 0 }
    }

    /// Assembles the windows at `indices` into one sparse batch.
    pub fn batch(&self, indices: &[usize]) -> Batch {
        let mut b = Batch::with_capacity(self.n_p, indices.len());
        self.batch_into(indices, &mut b);
        b
    }

    /// Like [`WindowSet::batch`], reusing the buffers of `out`.
    pub fn batch_into(&self, indices: &[usize], out: &mut Batch) {
        out.n_p = self.n_p;
        out.offsets.clear();
        out.active.clear();
        out.targets.clear();
        for &j in indices {
            self.push_active(j, &mut out.active);
            out.offsets.push(out.active.len());
            out.targets.push(if self.target(j) { 1.0 } else { 0.0 });
        }
    }

    /// Batch of windows `[start, end)`.
    pub fn batch_range(&self, start: usize, end: usize) -> Batch {
        let idx: Vec<usize> = (start..end.min(self.len())).collect();
        self.batch(&idx)
    }
}

/// Streaming iterator over windows in trace order.
#[derive(Debug, Clone)]
pub struct Windows<'a> {
    set: WindowSet<'a>,
    next: usize,
}

impl Iterator for Windows<'_> {
    type Item = Window;

    fn next(&mut self) -> Option<Window> {
        (self.next < self.set.len()).then(|| {
            let w = self.set.window(self.next);
            self.next += 1;
            w
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.set.len() - self.next;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Windows<'_> {}

/// All `N - n_p` windows of `trace`.
pub fn windows(trace: &LinkTrace, spec: WindowSpec) -> Result<Windows<'_>> {
    Ok(WindowSet::new(trace, spec)?.iter())
}

/// Sparse binary rows in CSR form plus their targets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Batch {
    pub n_p: usize,
    /// `active[offsets[r-1]..offsets[r]]` are the set inputs of row `r` (`offsets[-1] = 0`).
    pub offsets: Vec<usize>,
    pub active: Vec<u32>,
    pub targets: Vec<f64>,
}

impl Batch {
    pub fn with_capacity(n_p: usize, rows: usize) -> Self {
        Batch {
            n_p,
            offsets: Vec::with_capacity(rows),
            active: Vec::new(),
            targets: Vec::with_capacity(rows),
        }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn row(&self, r: usize) -> &[u32] {
        let start = if r == 0 { 0 } else { self.offsets[r - 1] };
        &self.active[start..self.offsets[r]]
    }

    pub fn push_row(&mut self, active: &[u32], target: f64) {
        self.active.extend_from_slice(active);
        self.offsets.push(self.active.len());
        self.targets.push(target);
    }
}
