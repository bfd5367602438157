//! JSON-lines reports.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use serde_json::{Map, Value};

pub struct Report {
    path: PathBuf,
    log: Option<PathBuf>,
    lines: Vec<String>,
    pass: bool,
}

impl Report {
    pub fn new(out: &Path, log: Option<PathBuf>) -> Self {
        Report {
            path: out.join("report.jsonl"),
            log,
            lines: Vec::new(),
            pass: true,
        }
    }

    /// Appends `{"event": event, ...fields}`; non-object payloads go under `value`.
    pub fn emit(&mut self, event: &str, payload: impl Serialize) -> anyhow::Result<()> {
        let mut obj = Map::new();
        obj.insert("event".into(), Value::String(event.into()));
        match serde_json::to_value(payload)? {
            Value::Object(m) => obj.extend(m),
            Value::Null => {}
            other => {
                obj.insert("value".into(), other);
            }
        }
        self.lines.push(serde_json::to_string(&obj)?);
        Ok(())
    }

    /// Records a pass/fail check and folds it into the run status.
    pub fn check(&mut self, name: &str, pass: bool, detail: impl Serialize) -> anyhow::Result<()> {
        self.pass &= pass;
        println!("check {name} pass={pass}");
        self.emit(
            "check",
            serde_json::json!({ "name": name, "pass": pass, "detail": detail }),
        )
    }

    pub fn pass(&self) -> bool {
        self.pass
    }

    pub fn finish(mut self) -> anyhow::Result<bool> {
        let pass = self.pass;
        self.emit("status", serde_json::json!({ "pass": pass }))?;
        let mut text = self.lines.join("\n");
        text.push('\n');
        fs::write(&self.path, &text).with_context(|| format!("{}", self.path.display()))?;
        if let Some(log) = &self.log {
            fs::write(log, &text).with_context(|| format!("{}", log.display()))?;
        }
        Ok(pass)
    }
}
