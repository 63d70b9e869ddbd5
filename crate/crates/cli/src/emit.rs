//! Atomic CSV/JSON writers.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use ewkv_core::table::NormTable;
use serde::Serialize;

use crate::experiments::Outcome;

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// One `{experiment}_{column}.csv` per column, with header `t,norm` and
/// shortest round-trip decimal formatting.
pub fn emit_plotdata(dir: &Path, experiment: &str, table: &NormTable) -> io::Result<Vec<PathBuf>> {
    if table.is_empty() {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            "refusing to write an empty table",
        ));
    }
    let mut written = Vec::new();
    for col in &table.columns {
        let mut text = String::from("t,norm\n");
        for (t, v) in table.times.iter().zip(&col.values) {
            text.push_str(&format!("{t:?},{v:?}\n"));
        }
        let path = dir.join(format!("{experiment}_{}.csv", col.name));
        write_atomic(&path, text.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

pub fn emit_json(dir: &Path, name: &str, value: &impl Serialize) -> io::Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    let path = dir.join(name);
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

/// Writes every table, report and the certificate list of one run.
pub fn emit_outcome(dir: &Path, outcome: &Outcome) -> io::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (experiment, table) in &outcome.tables {
        written.extend(emit_plotdata(dir, experiment, table)?);
    }
    for (name, value) in &outcome.reports {
        written.push(emit_json(dir, name, value)?);
    }
    written.push(emit_json(dir, "certificates.json", &outcome.certificates)?);
    Ok(written)
}
