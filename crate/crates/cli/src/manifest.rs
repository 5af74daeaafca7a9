//! `manifest.json`: what a batch was asked to produce and what it has
//! finished. A run is only marked complete after its trace file has been
//! renamed into place, so a killed batch leaves `pending` entries behind
//! and the next invocation redoes exactly those.

use std::path::{Path, PathBuf};

use normshift::io::{sha256_file, write_atomic};
use serde::{Deserialize, Serialize};

use crate::fail::{CliResult, Failure};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Pending,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub replicate: u32,
    pub scenario: String,
    /// Relative to the output directory.
    pub path: String,
    pub status: RunStatus,
    pub sha256: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub master_seed: u64,
    pub population_sha256: String,
    pub total_days: u32,
    pub replicates: Vec<u32>,
    pub scenarios: Vec<String>,
    pub runs: Vec<RunRecord>,
}

impl RunManifest {
    pub fn path(out_dir: &Path) -> PathBuf {
        out_dir.join(MANIFEST_FILE)
    }

    pub fn load(out_dir: &Path) -> CliResult<Option<RunManifest>> {
        let path = Self::path(out_dir);
        match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)
                .map(Some)
                .map_err(|e| Failure::io(format!("failed to parse {}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Failure::io(format!("{}: {e}", path.display()))),
        }
    }

    pub fn save(&self, out_dir: &Path) -> CliResult<()> {
        let mut m = self.clone();
        m.sort();
        let mut text = serde_json::to_string_pretty(&m).expect("manifest serialises");
        text.push('\n');
        write_atomic(&Self::path(out_dir), text.as_bytes())?;
        Ok(())
    }

    /// Same inputs, so existing outputs are reusable.
    pub fn same_inputs(&self, other: &RunManifest) -> bool {
        self.config_hash == other.config_hash
            && self.master_seed == other.master_seed
            && self.population_sha256 == other.population_sha256
            && self.total_days == other.total_days
    }

    pub fn find(&self, replicate: u32, scenario: &str) -> Option<&RunRecord> {
        self.runs.iter().find(|r| r.replicate == replicate && r.scenario == scenario)
    }

    pub fn upsert(&mut self, record: RunRecord) {
        match self.runs.iter_mut().find(|r| r.replicate == record.replicate && r.scenario == record.scenario) {
            Some(r) => *r = record,
            None => self.runs.push(record),
        }
    }

    /// A completed run whose file still hashes to the recorded digest.
    pub fn verified(&self, out_dir: &Path, replicate: u32, scenario: &str) -> CliResult<bool> {
        let Some(r) = self.find(replicate, scenario) else { return Ok(false) };
        if r.status != RunStatus::Complete {
            return Ok(false);
        }
        let path = out_dir.join(&r.path);
        if !path.exists() {
            return Ok(false);
        }
        let actual = sha256_file(&path)?;
        if Some(&actual) != r.sha256.as_ref() {
            return Err(Failure::runtime(format!(
                "{} was modified after it was recorded in the manifest; rerun with --force to regenerate it",
                path.display()
            )));
        }
        Ok(true)
    }

    fn sort(&mut self) {
        self.replicates.sort_unstable();
        self.replicates.dedup();
        let rank = |s: &str| match s {
            "control" => 0,
            "cfd" => 1,
            _ => 2,
        };
        self.scenarios.sort_by(|a, b| rank(a).cmp(&rank(b)).then(a.cmp(b)));
        self.scenarios.dedup();
        self.runs.sort_by(|a, b| a.replicate.cmp(&b.replicate).then(rank(&a.scenario).cmp(&rank(&b.scenario))));
    }
}

pub fn trace_file_name(replicate: u32, scenario: &str) -> String {
    format!("traces/run{replicate}_{scenario}.csv")
}
