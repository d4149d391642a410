//! Run manifests: `key = value` files holding the tool version, the config
//! snapshot, seeds and dataset content hashes.

use std::fs;
use std::path::Path;

use eegforge_core::config::KvConfig;
use eegforge_core::io::{file_sha256, write_atomic};

use crate::error::{io_err, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn new_manifest(command: &str) -> KvConfig {
    let mut m = KvConfig::default();
    m.set("tool_version", TOOL_VERSION);
    m.set("command", command);
    m
}

pub fn record_hash(m: &mut KvConfig, path: &Path) -> Result<()> {
    let name = path.file_name().map(|n| n.to_string_lossy().to_string()).unwrap_or_default();
    m.set(&format!("hash.{name}"), file_sha256(path)?);
    Ok(())
}

pub fn save(m: &KvConfig, path: &Path) -> Result<()> {
    write_atomic(path, m.render().as_bytes())?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Option<KvConfig>> {
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(Some(KvConfig::parse(&text)?))
}

/// Entries of `m` other than `skip`, for comparing two manifests.
pub fn without(m: &KvConfig, skip: &[&str]) -> Vec<(String, String)> {
    m.keys()
        .filter(|k| !skip.contains(k))
        .map(|k| (k.to_string(), m.get_str(k).unwrap_or_default().to_string()))
        .collect()
}

pub fn parse_list(s: &str) -> Vec<usize> {
    s.split(',').filter_map(|x| x.trim().parse().ok()).collect()
}

pub fn format_list(xs: &[usize]) -> String {
    xs.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}
