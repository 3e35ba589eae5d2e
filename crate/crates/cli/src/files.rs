//! Reading and writing the on-disk formats.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use mosaic_qaoa_core::dataset::{check_unique, DatasetRecord, SCHEMA_VERSION};
use mosaic_qaoa_core::CnfFormula;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{fatal, Failure};

pub fn read_dimacs(path: &Path) -> Result<CnfFormula, Failure> {
    let text = fs::read_to_string(path).map_err(|e| fatal(format!("{}: {e}", path.display())))?;
    CnfFormula::parse_dimacs(&text).map_err(|e| fatal(format!("{}: {e}", path.display())))
}

pub fn write_dimacs(path: &Path, f: &CnfFormula) -> Result<(), Failure> {
    write_text(path, &f.to_dimacs())
}

pub fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| fatal(format!("{}: {e}", dir.display())))?;
        }
    }
    fs::write(path, text).map_err(|e| fatal(format!("{}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline.
pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(fatal)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| fatal(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| fatal(format!("{}: {e}", path.display())))
}

/// Files in `dir` with extension `ext`, sorted by name. A file path is
/// returned as the only entry.
pub fn list_files(path: &Path, ext: &str) -> Result<Vec<PathBuf>, Failure> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let entries = fs::read_dir(path).map_err(|e| fatal(format!("{}: {e}", path.display())))?;
    let mut out: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == ext))
        .collect();
    out.sort();
    Ok(out)
}

pub fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Writes validated, duplicate-free records, one JSON object per line.
pub fn export_jsonl(path: &Path, records: &[DatasetRecord]) -> Result<(), Failure> {
    for (i, r) in records.iter().enumerate() {
        r.validate().map_err(|e| fatal(format!("record {i} ({}): {e}", r.formula)))?;
    }
    check_unique(records).map_err(fatal)?;
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(fatal)?;
        out.push(b'\n');
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| fatal(format!("{}: {e}", dir.display())))?;
    }
    let mut file = fs::File::create(path).map_err(|e| fatal(format!("{}: {e}", path.display())))?;
    file.write_all(&out).map_err(fatal)
}

pub fn import_jsonl(path: &Path) -> Result<Vec<DatasetRecord>, Failure> {
    let file = fs::File::open(path).map_err(|e| fatal(format!("{}: {e}", path.display())))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(fatal)?;
        if line.trim().is_empty() {
            continue;
        }
        let version: serde_json::Value = serde_json::from_str(&line)
            .map_err(|e| fatal(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if version.get("schema_version").and_then(|v| v.as_u64()) != Some(SCHEMA_VERSION as u64) {
            return Err(fatal(format!(
                "{}:{}: schema_version {} does not match {SCHEMA_VERSION}",
                path.display(),
                i + 1,
                version.get("schema_version").unwrap_or(&serde_json::Value::Null)
            )));
        }
        records.push(
            serde_json::from_value(version)
                .map_err(|e| fatal(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(records)
}
