//! The per-run JSON record written by `run` and read by the downstream
//! commands.

use mosaic_qaoa_core::engine::{AnsatzCircuit, EngineConfig, RunResult, SelectionSums, StopReason, Strategy};
use mosaic_qaoa_core::metrics::EvalReport;
use mosaic_qaoa_core::{CnfFormula, Provenance};
use serde::{Deserialize, Serialize};

use crate::{fatal, Failure};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub formula_id: String,
    pub strategy: Strategy,
    /// The probe angle of the kept run.
    pub gamma0: f64,
    /// Every probe angle tried; one entry unless grid-selected.
    pub gamma_grid: Vec<f64>,
    pub n: usize,
    pub m: usize,
    pub opt: usize,
    pub satisfiable: bool,
    pub provenance: Provenance,
    pub formula_seed: u64,
    /// Formula text in file clause order.
    pub formula: String,
    /// Seed for the measurement shots behind `report`.
    pub sample_seed: u64,
    pub circuit: AnsatzCircuit,
    pub energy_trace: Vec<f64>,
    pub gradient_sum_trace: Vec<f64>,
    pub max_gradient_trace: Vec<f64>,
    /// Per layer, filled only with `--compare-selectors`.
    #[serde(default)]
    pub selection_sums: Vec<SelectionSums>,
    pub exact_tiling: Vec<bool>,
    pub stop_reason: StopReason,
    pub final_max_gradient: Option<f64>,
    pub final_energy: f64,
    pub report: EvalReport,
    pub engine: EngineConfig,
    pub config_digest: String,
    pub tool_version: String,
}

impl RunRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        formula_id: &str,
        f: &CnfFormula,
        opt: usize,
        gamma_grid: &[f64],
        gamma0: f64,
        result: &RunResult,
        report: EvalReport,
        sample_seed: u64,
        engine: &EngineConfig,
        config_digest: &str,
    ) -> Self {
        Self {
            formula_id: formula_id.to_string(),
            strategy: engine.strategy,
            gamma0,
            gamma_grid: gamma_grid.to_vec(),
            n: f.n() as usize,
            m: f.m(),
            opt,
            satisfiable: opt == f.m(),
            provenance: f.provenance(),
            formula_seed: f.seed(),
            formula: f.formula_string(),
            sample_seed,
            circuit: result.circuit.clone(),
            energy_trace: result.energy_trace.clone(),
            gradient_sum_trace: result.gradient_sum_trace.clone(),
            max_gradient_trace: result.max_gradient_trace.clone(),
            selection_sums: result.selection_sums.clone(),
            exact_tiling: result.exact_tiling.clone(),
            stop_reason: result.stop_reason,
            final_max_gradient: result.final_max_gradient,
            final_energy: result.final_energy,
            report,
            engine: EngineConfig {
                gamma0,
                ..engine.clone()
            },
            config_digest: config_digest.to_string(),
            tool_version: crate::TOOL_VERSION.to_string(),
        }
    }

    pub fn formula(&self) -> Result<CnfFormula, Failure> {
        CnfFormula::parse_formula_string(&self.formula, self.n as u32)
            .map(|f| f.with_origin(self.provenance, self.formula_seed))
            .map_err(|e| fatal(format!("run {}: {e}", self.formula_id)))
    }

    /// File name under `runs/`: `<id>__<strategy>__g<gamma or grid>.json`.
    pub fn file_name(formula_id: &str, strategy: Strategy, gamma_grid: &[f64]) -> String {
        let tag = match gamma_grid {
            [g] => format!("{g}"),
            _ => "grid".to_string(),
        };
        format!("{formula_id}__{strategy}__g{tag}.json")
    }
}
