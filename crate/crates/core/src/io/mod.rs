//! File formats: traces, vocabs, reports and figures.

pub mod report;
pub mod trace;
pub mod vocab;

pub use report::{emit_report, read_report, write_report};
pub use trace::{read_trace, validate_trace, validate_trace_bytes, write_trace, Violation, FORMAT_VERSION};
pub use vocab::{read_vocab, write_vocab};
