//! Line-delimited trace files.
//!
//! Line 1 is a JSON header object; every following line is one record
//! object. Reals are written as shortest round-trip decimals, so reading a
//! trace back reproduces every `f64` bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::dynamics::{MapSpec, NoiseSpec};
use crate::error::{Error, Result};
use crate::state::{State, SymbolicInput, TraceSource, Trajectory};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub format_version: u64,
    pub dim: usize,
    pub source: TraceSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map_spec: Option<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_spec: Option<NoiseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
}

/// One step. `input_id` is the symbol consumed on the way to the next
/// record and is omitted on the final record when written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: u64,
    pub state: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_text: Option<String>,
}

impl TraceHeader {
    pub fn for_trajectory(t: &Trajectory) -> Self {
        TraceHeader {
            format_version: FORMAT_VERSION,
            dim: t.dim(),
            source: t.source,
            map_spec: t.map.clone(),
            noise_spec: t.noise,
            seed: t.seed,
            model_id: t.model_id.clone(),
        }
    }
}

pub fn write_trace_to<W: Write>(trajectory: &Trajectory, mut out: W) -> Result<()> {
    let io = |e| Error::io("<trace>", e);
    serde_json::to_writer(&mut out, &TraceHeader::for_trajectory(trajectory))?;
    out.write_all(b"\n").map_err(io)?;
    let inputs = trajectory.inputs();
    for (k, state) in trajectory.states().iter().enumerate() {
        let input = inputs.get(k);
        let record = TraceRecord {
            step: k as u64,
            state: state.as_slice().to_vec(),
            input_id: input.map(|s| s.id),
            input_text: input.and_then(|s| s.text.clone()),
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn write_trace(trajectory: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_trace_to(trajectory, BufWriter::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Trajectory> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_trace_from(BufReader::new(file), path)
}

/// Parses a trace, failing on the first invariant violation.
pub fn read_trace_from<R: BufRead>(reader: R, path: &Path) -> Result<Trajectory> {
    let fmt = |line: usize, message: String| Error::Format {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = reader.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| fmt(1, "missing header".into()))?
        .map_err(|e| Error::io(path, e))?;
    let header_value: Value =
        serde_json::from_str(&header_line).map_err(|e| fmt(1, format!("header: {e}")))?;
    if let Some(v) = header_value.get("format_version").and_then(Value::as_u64) {
        if v != FORMAT_VERSION {
            return Err(Error::UnknownVersion(v));
        }
    }
    let header: TraceHeader =
        serde_json::from_value(header_value).map_err(|e| fmt(1, format!("header: {e}")))?;
    if header.dim == 0 {
        return Err(fmt(1, "header: dim must be positive".into()));
    }

    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TraceRecord =
            serde_json::from_str(&line).map_err(|e| fmt(line_no, format!("record: {e}")))?;
        let k = records.len() as u64;
        if rec.step != k {
            return Err(fmt(line_no, format!("step {} where {k} expected", rec.step)));
        }
        if rec.state.len() != header.dim {
            return Err(fmt(
                line_no,
                format!("step {}: state length {} != dim {}", rec.step, rec.state.len(), header.dim),
            ));
        }
        records.push((line_no, rec));
    }
    let n = records.len();
    if n == 0 {
        return Err(fmt(2, "no records".into()));
    }
    let mut states = Vec::with_capacity(n);
    let mut inputs = Vec::with_capacity(n - 1);
    for (idx, (line_no, rec)) in records.into_iter().enumerate() {
        let state = State::new(rec.state)
            .map_err(|_| fmt(line_no, format!("step {}: non-finite state", rec.step)))?;
        states.push(state);
        if idx + 1 < n {
            let id = rec
                .input_id
                .ok_or_else(|| fmt(line_no, format!("step {}: missing input_id", rec.step)))?;
            inputs.push(SymbolicInput { id, text: rec.input_text });
        }
    }
    let mut t = Trajectory::new(states, inputs)?;
    t.source = header.source;
    t.seed = header.seed;
    t.map = header.map_spec;
    t.noise = header.noise_spec;
    t.model_id = header.model_id;
    Ok(t)
}

/// One broken invariant in a trace file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// 1-based line number.
    pub line: usize,
    /// 0-based record index (`None` for the header).
    pub record: Option<usize>,
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.record {
            Some(r) => write!(f, "line {} (record {r}) `{}`: {}", self.line, self.field, self.message),
            None => write!(f, "line {} (header) `{}`: {}", self.line, self.field, self.message),
        }
    }
}

pub fn validate_trace(path: impl AsRef<Path>) -> Result<Vec<Violation>> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    Ok(validate_trace_bytes(&bytes))
}

/// Parses JSON, accepting the bare `NaN` / `Infinity` tokens some writers
/// emit so they can be reported as non-finite values rather than as syntax
/// errors.
fn parse_lenient(line: &str) -> std::result::Result<Value, serde_json::Error> {
    serde_json::from_str(line).or_else(|e| {
        if line.contains("NaN") || line.contains("Infinity") {
            let patched = line
                .replace("-Infinity", "null")
                .replace("Infinity", "null")
                .replace("NaN", "null");
            serde_json::from_str(&patched).map_err(|_| e)
        } else {
            Err(e)
        }
    })
}

/// Checks every trace invariant and returns all violations. Never panics.
pub fn validate_trace_bytes(bytes: &[u8]) -> Vec<Violation> {
    let text = String::from_utf8_lossy(bytes);
    let mut out = Vec::new();
    let mut push = |line: usize, record: Option<usize>, field: &str, message: String| {
        out.push(Violation {
            line,
            record,
            field: field.to_string(),
            message,
        })
    };
    if bytes.len() != text.len() || std::str::from_utf8(bytes).is_err() {
        push(1, None, "encoding", "file is not valid UTF-8".into());
    }

    let mut lines = text.lines().enumerate();
    let dim = match lines.next() {
        None => {
            push(1, None, "header", "missing header line".into());
            return out;
        }
        Some((_, line)) => match parse_lenient(line) {
            Ok(Value::Object(h)) => check_header(&h, |f, m| push(1, None, f, m)),
            Ok(_) => {
                push(1, None, "header", "header is not a JSON object".into());
                None
            }
            Err(e) => {
                push(1, None, "header", format!("invalid JSON: {e}"));
                None
            }
        },
    };

    let mut prev_step: Option<(usize, u64)> = None;
    let mut records: Vec<(usize, bool)> = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let idx = records.len();
        let rec = match parse_lenient(line) {
            Ok(Value::Object(r)) => r,
            Ok(_) => {
                push(line_no, Some(idx), "record", "record is not a JSON object".into());
                records.push((line_no, true));
                continue;
            }
            Err(e) => {
                push(line_no, Some(idx), "record", format!("invalid JSON: {e}"));
                records.push((line_no, true));
                continue;
            }
        };

        match rec.get("step").and_then(Value::as_u64) {
            None => push(line_no, Some(idx), "step", "missing or not a non-negative integer".into()),
            Some(step) => {
                match prev_step {
                    None if step != 0 => push(line_no, Some(idx), "step", format!("first step is {step}, expected 0")),
                    Some((pi, ps)) if step <= ps => push(
                        line_no,
                        Some(idx),
                        "step",
                        format!("record {idx} has step {step}, not greater than record {pi} step {ps}"),
                    ),
                    Some((pi, ps)) if step != ps + 1 => push(
                        line_no,
                        Some(idx),
                        "step",
                        format!("record {idx} has step {step} after record {pi} step {ps}; steps must be consecutive"),
                    ),
                    _ => {}
                }
                prev_step = Some((idx, step));
            }
        }

        match rec.get("state") {
            Some(Value::Array(values)) => {
                if let Some(d) = dim {
                    if values.len() != d {
                        push(line_no, Some(idx), "state", format!("length {} != dim {d}", values.len()));
                    }
                }
                if values.iter().any(|v| v.as_f64().is_none_or(|x| !x.is_finite())) {
                    push(line_no, Some(idx), "state", "non-finite or non-numeric value".into());
                }
            }
            _ => push(line_no, Some(idx), "state", "missing or not an array".into()),
        }

        let has_input = match rec.get("input_id") {
            None => false,
            Some(v) if v.as_u64().is_some() => true,
            Some(_) => {
                push(line_no, Some(idx), "input_id", "not a non-negative integer".into());
                true
            }
        };
        if let Some(v) = rec.get("input_text") {
            if !v.is_string() {
                push(line_no, Some(idx), "input_text", "not a string".into());
            }
        }
        records.push((line_no, has_input));
    }

    if records.is_empty() {
        push(2, None, "records", "no records".into());
    }
    let last = records.len().saturating_sub(1);
    for (idx, (line_no, has_input)) in records.iter().enumerate() {
        if idx < last && !has_input {
            push(*line_no, Some(idx), "input_id", "missing (required on every record but the last)".into());
        }
    }
    out.sort_by_key(|v| v.line);
    out
}

fn check_header(h: &Map<String, Value>, mut push: impl FnMut(&str, String)) -> Option<usize> {
    match h.get("format_version").map(Value::as_u64) {
        None => push("format_version", "missing".into()),
        Some(Some(FORMAT_VERSION)) => {}
        Some(Some(v)) => push("format_version", format!("unsupported version {v}")),
        Some(None) => push("format_version", "not an integer".into()),
    }
    let dim = match h.get("dim").and_then(Value::as_u64) {
        Some(d) if d > 0 => Some(d as usize),
        _ => {
            push("dim", "missing or not a positive integer".into());
            None
        }
    };
    match h.get("source") {
        Some(v) if serde_json::from_value::<TraceSource>(v.clone()).is_ok() => {}
        _ => push("source", "missing or not one of simulated, extracted".into()),
    }
    if let Some(v) = h.get("map_spec") {
        match serde_json::from_value::<MapSpec>(v.clone()) {
            Ok(spec) => {
                if let Err(e) = spec.validate() {
                    push("map_spec", e.to_string());
                }
                if dim.is_some_and(|d| d != spec.dim) {
                    push("map_spec", format!("dim {} != header dim", spec.dim));
                }
            }
            Err(e) => push("map_spec", e.to_string()),
        }
    }
    if let Some(v) = h.get("noise_spec") {
        match serde_json::from_value::<NoiseSpec>(v.clone()) {
            Ok(n) => {
                if let Err(e) = n.validate() {
                    push("noise_spec", e.to_string());
                }
            }
            Err(e) => push("noise_spec", e.to_string()),
        }
    }
    if h.get("seed").is_some_and(|v| v.as_u64().is_none()) {
        push("seed", "not a non-negative integer".into());
    }
    if h.get("model_id").is_some_and(|v| !v.is_string()) {
        push("model_id", "not a string".into());
    }
    dim
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = r#"{"format_version":1,"dim":2,"source":"extracted"}"#;

    fn file(records: &[&str]) -> Vec<u8> {
        let mut s = String::from(HEADER);
        for r in records {
            s.push('\n');
            s.push_str(r);
        }
        s.push('\n');
        s.into_bytes()
    }

    #[test]
    fn valid_file_has_no_violations() {
        let bytes = file(&[
            r#"{"step":0,"state":[0.0,1.0],"input_id":0}"#,
            r#"{"step":1,"state":[0.5,1.5]}"#,
        ]);
        assert!(validate_trace_bytes(&bytes).is_empty());
        let t = read_trace_from(&bytes[..], Path::new("x")).unwrap();
        assert_eq!(t.states().len(), 2);
        assert_eq!(t.source, TraceSource::Extracted);
    }

    #[test]
    fn nan_reported_at_its_step() {
        let mut recs: Vec<String> = (0..20)
            .map(|k| format!(r#"{{"step":{k},"state":[{k}.0,1.0],"input_id":0}}"#))
            .collect();
        recs[17] = r#"{"step":17,"state":[NaN,1.0],"input_id":0}"#.into();
        let refs: Vec<&str> = recs.iter().map(String::as_str).collect();
        let v = validate_trace_bytes(&file(&refs));
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].record, Some(17));
        assert_eq!(v[0].field, "state");
    }

    #[test]
    fn non_monotonic_steps_name_both_records() {
        let v = validate_trace_bytes(&file(&[
            r#"{"step":0,"state":[0.0,0.0],"input_id":0}"#,
            r#"{"step":1,"state":[0.0,0.0],"input_id":0}"#,
            r#"{"step":1,"state":[0.0,0.0]}"#,
        ]));
        assert_eq!(v.len(), 1);
        assert!(v[0].message.contains("record 2") && v[0].message.contains("record 1"));
    }

    #[test]
    fn wrong_length_named() {
        let bytes = file(&[
            r#"{"step":0,"state":[0.0],"input_id":0}"#,
            r#"{"step":1,"state":[0.0,0.0]}"#,
        ]);
        let v = validate_trace_bytes(&bytes);
        assert_eq!(v.len(), 1);
        assert_eq!((v[0].record, v[0].field.as_str()), (Some(0), "state"));
        let err = read_trace_from(&bytes[..], Path::new("t")).unwrap_err();
        assert!(err.to_string().contains("step 0"), "{err}");
    }

    #[test]
    fn unknown_version_is_hard_error() {
        let bytes = br#"{"format_version":2,"dim":1,"source":"simulated"}
{"step":0,"state":[0.0]}
"#;
        assert!(matches!(read_trace_from(&bytes[..], Path::new("t")), Err(Error::UnknownVersion(2))));
        assert_eq!(validate_trace_bytes(bytes)[0].field, "format_version");
    }

    #[test]
    fn garbage_is_reported_not_panicked() {
        assert!(!validate_trace_bytes(b"").is_empty());
        assert!(!validate_trace_bytes(b"\xff\xfe{").is_empty());
        assert!(!validate_trace_bytes(b"[1,2]\n{\"step\":\"x\"}").is_empty());
    }

    #[test]
    fn missing_inner_input_id() {
        let v = validate_trace_bytes(&file(&[
            r#"{"step":0,"state":[0.0,0.0]}"#,
            r#"{"step":1,"state":[0.0,0.0]}"#,
        ]));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "input_id");
    }
}
