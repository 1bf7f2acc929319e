//! Progress output on stderr: plain lines, or one JSON object per line.

use std::path::Path;

use rcxi::analysis::Verdict;
use serde_json::{json, Value};

pub struct Logger {
    json: bool,
}

impl Logger {
    pub fn new(json: bool) -> Self {
        Logger { json }
    }

    pub fn event(&self, name: &str, fields: Value) {
        if self.json {
            let mut obj = json!({ "event": name });
            if let (Some(o), Value::Object(f)) = (obj.as_object_mut(), fields) {
                o.extend(f);
            }
            eprintln!("{obj}");
        }
    }

    pub fn wrote(&self, path: &Path) {
        if self.json {
            self.event("wrote", json!({ "path": path }));
        } else {
            eprintln!("wrote {}", path.display());
        }
    }

    pub fn verdict(&self, v: &Verdict) {
        if self.json {
            self.event("verdict", serde_json::to_value(v).unwrap_or(Value::Null));
            return;
        }
        for c in &v.checks {
            let status = match c.passed {
                Some(true) => "pass",
                Some(false) => "fail",
                None => "n/a",
            };
            let name = serde_json::to_value(c.check).unwrap_or(Value::Null);
            eprintln!("  {:<14} {status}", name.as_str().unwrap_or("?"));
        }
        eprintln!("all required checks passed: {}", v.all_passed);
    }

    pub fn error(&self, message: &str) {
        if self.json {
            eprintln!("{}", json!({ "event": "error", "message": message }));
        } else {
            eprintln!("error: {message}");
        }
    }
}
