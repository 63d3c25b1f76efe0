use serde::{Deserialize, Serialize};

use crate::config::{hash_hex, RunConfig, Seeds};

pub const TOOL: &str = "uqc";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Attached to every output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub seeds: Seeds,
}

impl Provenance {
    pub fn new(command: &str, cfg: &RunConfig) -> Self {
        Self::with_hash(command, cfg.hash(), cfg.seeds)
    }

    /// Provenance for a run spanning several configurations.
    pub fn for_many(command: &str, cfgs: &[RunConfig]) -> Self {
        let joined: Vec<String> = cfgs.iter().map(RunConfig::canonical_json).collect();
        let hash = hash_hex(format!("[{}]", joined.join(",")).as_bytes());
        Self::with_hash(command, hash, cfgs.first().expect("at least one config").seeds)
    }

    pub fn with_hash(command: &str, config_hash: String, seeds: Seeds) -> Self {
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            config_hash,
            seeds,
        }
    }

    /// `key=value` tags for dataset metadata lines.
    pub fn tags(&self) -> Vec<(&'static str, String)> {
        vec![
            ("version", self.version.clone()),
            ("config", self.config_hash.clone()),
            ("data_seed", self.seeds.data.to_string()),
            ("init_seed", self.seeds.init.to_string()),
            ("shuffle_seed", self.seeds.shuffle.to_string()),
            ("sampler_seed", self.seeds.sampler.to_string()),
        ]
    }

    /// Comment line for CSV outputs other than datasets.
    pub fn csv_comment(&self) -> String {
        let tags: Vec<String> = self.tags().iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("# {} {} {}", self.tool, self.command, tags.join(" "))
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("provenance serializes")
    }
}
