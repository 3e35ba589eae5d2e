//! `plotdata`: tidy CSV tables from run records.

use std::collections::BTreeMap;
use std::io::Write;

use mosaic_qaoa_core::metrics::approximation_ratio;
use mosaic_qaoa_core::Strategy;

use crate::cli::{PlotArgs, PlotKind};
use crate::commands::export::run_files;
use crate::files::{read_json, write_text};
use crate::records::RunRecord;
use crate::{fatal, Outcome};

pub fn header(kind: PlotKind) -> &'static [&'static str] {
    match kind {
        PlotKind::EnergyTrace => &["formula_id", "strategy", "gamma0", "layer", "energy", "ar"],
        PlotKind::MaxGrad => &[
            "formula_id",
            "strategy",
            "gamma0",
            "layer",
            "max_gradient",
            "gradient_sum",
            "mosaic_sum",
            "tetris_sum",
            "adapt_sum",
        ],
        PlotKind::OpHistogram => &["strategy", "family", "count"],
        PlotKind::ParamBands => &["formula_id", "strategy", "gamma0", "layer", "parameter", "operator", "value"],
    }
}

fn rows(kind: PlotKind, runs: &[RunRecord]) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    match kind {
        PlotKind::EnergyTrace => {
            for r in runs {
                for (k, e) in r.energy_trace.iter().enumerate() {
                    out.push(vec![
                        r.formula_id.clone(),
                        r.strategy.to_string(),
                        r.gamma0.to_string(),
                        (k + 1).to_string(),
                        e.to_string(),
                        approximation_ratio(*e, r.m, r.opt).to_string(),
                    ]);
                }
            }
        }
        PlotKind::MaxGrad => {
            for r in runs {
                for (k, g) in r.max_gradient_trace.iter().enumerate() {
                    let sums = r.selection_sums.get(k);
                    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                    out.push(vec![
                        r.formula_id.clone(),
                        r.strategy.to_string(),
                        r.gamma0.to_string(),
                        (k + 1).to_string(),
                        g.to_string(),
                        opt(r.gradient_sum_trace.get(k).copied()),
                        opt(sums.map(|s| s.mosaic)),
                        opt(sums.map(|s| s.tetris)),
                        opt(sums.map(|s| s.adapt)),
                    ]);
                }
            }
        }
        PlotKind::OpHistogram => {
            let mut counts: BTreeMap<(Strategy, String), usize> = BTreeMap::new();
            for r in runs {
                for layer in &r.circuit.layers {
                    for (op, _) in &layer.mixers {
                        *counts.entry((r.strategy, op.family())).or_insert(0) += 1;
                    }
                }
            }
            for ((s, family), c) in counts {
                out.push(vec![s.to_string(), family, c.to_string()]);
            }
        }
        PlotKind::ParamBands => {
            for r in runs {
                for (k, layer) in r.circuit.layers.iter().enumerate() {
                    let base = [r.formula_id.clone(), r.strategy.to_string(), r.gamma0.to_string(), (k + 1).to_string()];
                    let mut row = |param: &str, op: String, v: f64| {
                        let mut row = base.to_vec();
                        row.extend([param.to_string(), op, v.to_string()]);
                        out.push(row);
                    };
                    row("gamma", String::new(), layer.gamma);
                    for (op, beta) in &layer.mixers {
                        row("beta", op.name(), *beta);
                    }
                }
            }
        }
    }
    out
}

/// CSV text for `kind` over `runs`; header only when `runs` is empty.
pub fn render(kind: PlotKind, runs: &[RunRecord]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header(kind))?;
    for row in rows(kind, runs) {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn execute(args: &PlotArgs) -> Outcome {
    let mut runs = Vec::new();
    for path in run_files(&args.runs)? {
        runs.push(read_json::<RunRecord>(&path)?);
    }
    let text = render(args.kind, &runs).map_err(fatal)?;
    match &args.out {
        Some(p) => write_text(p, &text)?,
        None => std::io::stdout().write_all(text.as_bytes()).map_err(fatal)?,
    }
    Ok(0)
}
