use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use kpos_core::qmaps::{MapJson, ReprKind, SuperOperator};
use kpos_core::{Budget, Tolerances};
use serde::Serialize;
use serde_json::{json, Value};

use crate::fail::CliResult;

pub const SCHEMA: &str = "kpos-report/1";

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunConfig {
    pub master_seed: u64,
    pub tolerances: Tolerances,
    pub budget: Budget,
    pub output_path: Option<PathBuf>,
    pub threads: Option<usize>,
}

/// Everything except `header` is a deterministic function of the command
/// line and its inputs.
pub struct ReportBuilder {
    started: Instant,
    command: Value,
    config: Value,
    inputs: serde_json::Map<String, Value>,
    timings: serde_json::Map<String, Value>,
}

impl ReportBuilder {
    pub fn new(name: &str, argv: &[String], config: &RunConfig) -> Self {
        ReportBuilder {
            started: Instant::now(),
            command: json!({ "name": name, "argv": argv }),
            config: serde_json::to_value(config).expect("config serializes"),
            inputs: Default::default(),
            timings: Default::default(),
        }
    }

    pub fn input_map(&mut self, key: &str, reference: &str, map: &SuperOperator) -> CliResult<()> {
        let j = MapJson::from_map(map, ReprKind::Choi, 1e-12)?;
        self.inputs
            .insert(key.into(), json!({ "ref": reference, "map": j }));
        Ok(())
    }

    pub fn input_value(&mut self, key: &str, v: Value) {
        self.inputs.insert(key.into(), v);
    }

    pub fn timing(&mut self, key: &str, seconds: f64) {
        self.timings.insert(key.into(), json!(seconds));
    }

    pub fn finish(self, results: Value) -> Value {
        let unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let mut header = json!({
            "timestampUnix": unix,
            "wallTimeSeconds": self.started.elapsed().as_secs_f64(),
            "version": env!("CARGO_PKG_VERSION"),
        });
        let fastest = self
            .timings
            .iter()
            .filter_map(|(k, v)| v.as_f64().map(|t| (k.clone(), t)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(k, _)| k);
        if let Some(f) = fastest {
            header["fastest"] = json!(f);
            header["timings"] = Value::Object(self.timings);
        }
        json!({
            "schema": SCHEMA,
            "header": header,
            "command": self.command,
            "config": self.config,
            "inputs": Value::Object(self.inputs),
            "results": results,
        })
    }
}
