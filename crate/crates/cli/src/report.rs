use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

/// What a command did, printed as `key=value` lines or as one JSON object.
#[derive(Debug, Default, Serialize)]
pub struct RunReport {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub inputs: BTreeMap<String, Value>,
    pub parameters: BTreeMap<String, Value>,
    pub metrics: BTreeMap<String, Value>,
    pub counts: BTreeMap<String, usize>,
    pub flags: Vec<String>,
    /// Milliseconds; the only field that varies between identical runs.
    pub wall_time_ms: f64,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            ..Self::default()
        }
    }

    pub fn input(&mut self, key: &str, v: impl Into<Value>) -> &mut Self {
        self.inputs.insert(key.into(), v.into());
        self
    }

    pub fn param(&mut self, key: &str, v: impl Into<Value>) -> &mut Self {
        self.parameters.insert(key.into(), v.into());
        self
    }

    pub fn metric(&mut self, key: &str, v: impl Into<Value>) -> &mut Self {
        self.metrics.insert(key.into(), v.into());
        self
    }

    pub fn count(&mut self, key: &str, v: usize) -> &mut Self {
        self.counts.insert(key.into(), v);
        self
    }

    pub fn render(&self, json: bool) -> String {
        if json {
            let mut s = serde_json::to_string(self).expect("report serializes");
            s.push('\n');
            return s;
        }
        let mut out = String::new();
        let mut line = |k: &str, v: &dyn std::fmt::Display| {
            writeln!(out, "{k}={v}").expect("write to string");
        };
        line("command", &self.command);
        if let Some(seed) = self.seed {
            line("seed", &seed);
        }
        for (section, map) in [("input", &self.inputs), ("param", &self.parameters), ("metric", &self.metrics)] {
            for (k, v) in map {
                line(&format!("{section}.{k}"), &plain(v));
            }
        }
        for (k, v) in &self.counts {
            line(&format!("count.{k}"), v);
        }
        for f in &self.flags {
            line("flag", f);
        }
        line("wall_time_ms", &format!("{:.3}", self.wall_time_ms));
        out
    }
}

/// Strings without quotes, arrays comma-separated, everything else as JSON.
fn plain(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(plain).collect::<Vec<_>>().join(","),
        other => other.to_string(),
    }
}
