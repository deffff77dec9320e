//! Run manifests: what ran, on which scene, with which options.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub scene: Option<String>,
    /// SHA-256 of the scene file bytes.
    pub scene_hash: Option<String>,
    /// Every option after defaults and scene values are resolved.
    pub options: Value,
    pub version: String,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    /// `pass`, `fail` or `error`.
    pub status: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(dir.join("manifest.json"), text + "\n")
    }
}
