//! Run reports and atomic output files.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use tempfile::NamedTempFile;

use qcmap::Result;

#[derive(Debug, Serialize)]
pub struct RunReport<C: Serialize, R: Serialize> {
    pub command: String,
    pub config: C,
    pub result: R,
    pub wall_time_ms: u64,
    pub version: &'static str,
}

impl<C: Serialize, R: Serialize> RunReport<C, R> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report types always serialize")
    }
}

/// Write `bytes` next to `path` and rename into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
