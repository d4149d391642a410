//! File helpers: atomic writes, content hashes, CSV records.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::signal::{ChannelLayout, EegRecord};

/// Write to `<path>.tmp` and rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_sha256(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

/// Parse a CSV record: a `# fs_hz=<float>` comment line, a header row of
/// channel names, then one row per sample with one column per channel.
/// Channels get a grid layout.
pub fn parse_csv_record(text: &str, record_id: &str) -> Result<EegRecord> {
    let bad = |reason: String| Error::format(record_id, reason);
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let mut fs_hz = None;
    let header = loop {
        let line = lines.next().ok_or_else(|| bad("missing header row".into()))?;
        let t = line.trim();
        if let Some(comment) = t.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("fs_hz=") {
                fs_hz = Some(
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| bad(format!("bad sample rate `{v}`")))?,
                );
            }
            continue;
        }
        break t;
    };
    let fs_hz = fs_hz.ok_or_else(|| bad("missing `# fs_hz=<float>` line".into()))?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let n_ch = names.len();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); n_ch];
    for (row, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n_ch {
            return Err(bad(format!(
                "row {} has {} fields, header has {n_ch}",
                row + 1,
                fields.len()
            )));
        }
        for (col, f) in columns.iter_mut().zip(fields) {
            col.push(
                f.trim()
                    .parse()
                    .map_err(|_| bad(format!("row {}: bad value `{f}`", row + 1)))?,
            );
        }
    }
    let n = columns.first().map_or(0, Vec::len);
    let data = Array2::from_shape_fn((n_ch, n), |(c, t)| columns[c][t]);
    let grid = ChannelLayout::grid(n_ch);
    let layout = ChannelLayout::new(names, grid.positions().to_vec())?;
    EegRecord::new(data, fs_hz, Arc::new(layout), record_id)
}

pub fn format_csv_record(record: &EegRecord) -> String {
    let mut out = format!("# fs_hz={}\n", record.sample_rate_hz());
    out.push_str(&record.layout().names().join(","));
    out.push('\n');
    for t in 0..record.n_samples() {
        let row: Vec<String> = record.data().column(t).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
