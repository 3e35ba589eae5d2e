//! `export-dataset`: run records to split JSONL token datasets.

use std::path::{Path, PathBuf};

use log::info;
use mosaic_qaoa_core::dataset::{check_unique, stratified_split, DatasetRecord, SCHEMA_VERSION};
use mosaic_qaoa_core::tokens::{Vocabulary, ANGLE_SCHEME};
use mosaic_qaoa_core::Strategy;
use serde::Serialize;

use crate::cli::ExportArgs;
use crate::commands::run::parse_strategies;
use crate::files::{export_jsonl, list_files, read_json, write_json};
use crate::records::RunRecord;
use crate::{fatal, unix_time, Failure, Outcome, TOOL_VERSION};

pub const SPLIT_NAMES: [&str; 3] = ["train", "val", "test"];

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool_version: &'a str,
    schema_version: u32,
    angle_scheme: &'a str,
    created_unix: u64,
    split: [f64; 3],
    seed: u64,
    strategies: &'a [Strategy],
    counts: [usize; 3],
    config_digests: Vec<String>,
}

pub fn parse_split(text: &str) -> Result<[f64; 3], Failure> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::Config(format!("--split {text:?}: {e}")))?;
    let ratios: [f64; 3] = parts
        .try_into()
        .map_err(|_| Failure::Config(format!("--split {text:?} needs three fractions")))?;
    if ratios.iter().any(|r| r.is_nan() || *r < 0.0) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Failure::Config(format!("--split {text:?} must be nonnegative and sum to 1")));
    }
    Ok(ratios)
}

/// Run record files under `path`, looking inside `runs/` when present.
pub fn run_files(path: &Path) -> Result<Vec<PathBuf>, Failure> {
    let nested = path.join("runs");
    if nested.is_dir() {
        list_files(&nested, "json")
    } else if path.is_dir() || path.is_file() {
        list_files(path, "json")
    } else {
        Err(fatal(format!("{}: no such file or directory", path.display())))
    }
}

pub fn execute(args: &ExportArgs) -> Outcome {
    let ratios = parse_split(&args.split)?;
    let strategies = parse_strategies(&args.strategy)?;
    let mut records = Vec::new();
    let mut digests = Vec::new();
    for path in run_files(&args.runs)? {
        let run: RunRecord = read_json(&path)?;
        if !strategies.contains(&run.strategy) {
            continue;
        }
        let f = run.formula()?;
        let record = DatasetRecord::from_circuit(&f, &run.circuit, run.opt, &run.config_digest, run.formula_seed)
            .map_err(|e| fatal(format!("{}: {e}", path.display())))?;
        if !digests.contains(&run.config_digest) {
            digests.push(run.config_digest.clone());
        }
        records.push(record);
    }
    if records.is_empty() {
        return Err(fatal(format!("no {} runs under {}", args.strategy, args.runs.display())));
    }
    check_unique(&records).map_err(fatal)?;
    let n_max = records.iter().map(|r| r.n).max().unwrap_or(0);
    let parts = stratified_split(records, ratios, args.seed).map_err(|e| Failure::Config(e.to_string()))?;
    let mut counts = [0; 3];
    for (k, part) in parts.iter().enumerate() {
        export_jsonl(&args.out.join(format!("{}.jsonl", SPLIT_NAMES[k])), part)?;
        counts[k] = part.len();
    }
    let vocab = Vocabulary::new(n_max).map_err(fatal)?;
    write_json(&args.out.join("vocab.json"), &vocab)?;
    info!("exported {counts:?} records, vocabulary of {}", vocab.len());
    digests.sort();
    write_json(
        &args.out.join("manifest.json"),
        &Manifest {
            tool_version: TOOL_VERSION,
            schema_version: SCHEMA_VERSION,
            angle_scheme: ANGLE_SCHEME,
            created_unix: unix_time(),
            split: ratios,
            seed: args.seed,
            strategies: &strategies,
            counts,
            config_digests: digests,
        },
    )?;
    Ok(0)
}
