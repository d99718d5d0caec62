//! Machine-readable run reports.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    pub params: BTreeMap<String, Value>,
    pub seed: u64,
    pub metrics: BTreeMap<String, Value>,
    pub verdicts: Vec<Verdict>,
    pub started_at: String,
    pub finished_at: Option<String>,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl RunReport {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            version: VERSION.to_string(),
            params: BTreeMap::new(),
            seed,
            metrics: BTreeMap::new(),
            verdicts: Vec::new(),
            started_at: now(),
            finished_at: None,
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.params.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    pub fn metric(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.metrics.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    pub fn verdict(&mut self, name: &str, pass: bool, detail: impl Into<String>) -> &mut Self {
        self.verdicts.push(Verdict { name: name.to_string(), pass, detail: detail.into() });
        self
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn failed(&self) -> Vec<&Verdict> {
        self.verdicts.iter().filter(|v| !v.pass).collect()
    }

    pub fn finish(&mut self) {
        self.finished_at = Some(now());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidConfig(format!("not a run report: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut r = RunReport::new("demo", 7);
        r.param("p", 5).metric("lambda", 0.04).verdict("ok", true, "fine");
        r.finish();
        let back = RunReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(back.all_pass());
        assert_eq!(back.version, VERSION);
        r.verdict("bad", false, "");
        assert_eq!(r.failed().len(), 1);
    }
}
