//! Link traces and the supervised windows cut from them.

mod trace;
mod windows;

pub use trace::{LinkTrace, TRACE_FORMAT_VERSION, TRACE_MAGIC};
pub use windows::{split, windows, Batch, Window, WindowSet, WindowSpec, Windows};
