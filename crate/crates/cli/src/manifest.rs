//! Run manifest written next to every training or evaluation artifact.

use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Failure;

#[derive(Debug, Serialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to rerun a command bit-exactly: resolved config,
/// seeds, input digests and the feature layout. Only the timing fields
/// vary between identical runs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub dataset: InputFile,
    pub registry: Option<InputFile>,
    pub schemas: Vec<serde_json::Value>,
    pub started_unix_seconds: u64,
    pub wall_clock_seconds: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn digest_file(path: &Path) -> Result<InputFile, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::io(path, e))?;
    Ok(InputFile {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

/// Wall-clock capture started when a command begins.
pub struct Clock {
    started: Instant,
    unix: u64,
}

impl Clock {
    pub fn start() -> Self {
        Clock {
            started: Instant::now(),
            unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn unix(&self) -> u64 {
        self.unix
    }

    pub fn elapsed(&self) -> f64 {
        self.started.elapsed().as_secs_f64()
    }
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<(), Failure> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| Failure::io(&path, e))
    }
}
