//! The adaptive ansatz loop.
//!
//! Starting from `|+>^n`, each iteration scores the operator pool on the
//! probe-evolved state, picks a tile of support-disjoint operators according
//! to the strategy, appends a layer `(gamma = gamma0, beta = 0, ...)` and
//! re-optimizes every parameter with BFGS using adjoint gradients.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bfgs::{self, BfgsOptions};
use crate::clock::{Clock, NoClock};
use crate::math::abs;
use crate::pool::{build_pool, score_pool, PoolOperator, ScoredPool};
use crate::sat::CnfFormula;
use crate::sim::{apply_diagonal_phase, build_cost_diag_capped, check_support, CostDiagonal, StateVector, SIM_CAP};
use crate::tiling::{
    candidate_ops, select_single_adapt, solve_greedy_tetris, solve_mwis_exact_within,
    IncompatibilityGraph, TileSelection, MWIS_TIME_BUDGET_SECS,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// One operator per layer, the largest `|g|`.
    Adapt,
    /// Greedy packing of compatible operators by `|g|`.
    Tetris,
    /// Exact maximum-weight tiling.
    Mosaic,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Adapt, Strategy::Tetris, Strategy::Mosaic];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Adapt => "adapt",
            Strategy::Tetris => "tetris",
            Strategy::Mosaic => "mosaic",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adapt" => Ok(Strategy::Adapt),
            "tetris" => Ok(Strategy::Tetris),
            "mosaic" => Ok(Strategy::Mosaic),
            _ => Err(Error::Format(format!("unknown strategy {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzLayer {
    pub gamma: f64,
    pub mixers: Vec<(PoolOperator, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzCircuit {
    pub n: usize,
    pub layers: Vec<AnsatzLayer>,
}

impl AnsatzCircuit {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            layers: Vec::new(),
        }
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| 1 + l.mixers.len()).sum()
    }

    /// Flat parameters, per layer `[gamma, beta_1, ..., beta_r]`.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for layer in &self.layers {
            out.push(layer.gamma);
            out.extend(layer.mixers.iter().map(|(_, b)| *b));
        }
        out
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.parameter_count() {
            return Err(Error::DimensionMismatch {
                expected: self.parameter_count(),
                got: params.len(),
            });
        }
        let mut it = params.iter();
        for layer in &mut self.layers {
            layer.gamma = *it.next().unwrap();
            for (_, b) in &mut layer.mixers {
                *b = *it.next().unwrap();
            }
        }
        Ok(())
    }

    /// Every layer nonempty, operator supports inside `n` qubits and pairwise
    /// disjoint within a layer.
    pub fn validate(&self) -> Result<()> {
        for (k, layer) in self.layers.iter().enumerate() {
            if layer.mixers.is_empty() {
                return Err(Error::InvalidCircuit(format!("layer {} has no mixers", k + 1)));
            }
            let mut used = 0u64;
            for (op, _) in &layer.mixers {
                check_support(op, self.n)?;
                let mask = op.support_mask(self.n);
                if used & mask != 0 {
                    return Err(Error::InvalidCircuit(format!(
                        "layer {}: {op} overlaps another mixer",
                        k + 1
                    )));
                }
                used |= mask;
            }
        }
        Ok(())
    }
}

/// Runs `circuit` on `|+>^n`: per layer, the phase separator then each mixer
/// in listed order.
pub fn evaluate_circuit(circuit: &AnsatzCircuit, diag: &CostDiagonal) -> Result<(StateVector, f64)> {
    check_dims(circuit, diag)?;
    circuit.validate()?;
    let mut psi = StateVector::plus(circuit.n);
    for layer in &circuit.layers {
        psi.apply_phase(diag, layer.gamma)?;
        for (op, beta) in &layer.mixers {
            psi.apply_pauli_rotation(op, *beta)?;
        }
    }
    let energy = psi.expectation(diag)?;
    Ok((psi, energy))
}

fn check_dims(circuit: &AnsatzCircuit, diag: &CostDiagonal) -> Result<()> {
    if circuit.n != diag.n() {
        return Err(Error::DimensionMismatch {
            expected: diag.n(),
            got: circuit.n,
        });
    }
    Ok(())
}

/// Energy and its gradient with respect to the flat parameters, by one
/// forward pass and one reverse (adjoint) sweep.
pub fn energy_and_gradient(
    circuit: &AnsatzCircuit,
    diag: &CostDiagonal,
    params: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let mut c = circuit.clone();
    c.set_parameters(params)?;
    let (psi, energy) = evaluate_circuit(&c, diag)?;
    let n = c.n;
    let values = diag.values();
    let mut phi: Vec<Complex64> = psi.amplitudes().to_vec();
    let mut lambda: Vec<Complex64> = phi.iter().zip(values).map(|(a, v)| a * v).collect();
    let mut grad = vec![0.0; params.len()];
    let mut idx = params.len();
    for layer in c.layers.iter().rev() {
        for (op, beta) in layer.mixers.iter().rev() {
            idx -= 1;
            let terms = op.pauli_terms(n);
            let w: Complex64 = terms.iter().map(|t| t.matrix_element(&lambda, &phi)).sum();
            grad[idx] = 2.0 * w.im;
            for t in &terms {
                t.rotate(&mut phi, -beta);
                t.rotate(&mut lambda, -beta);
            }
        }
        idx -= 1;
        let w: Complex64 = lambda
            .iter()
            .zip(&phi)
            .zip(values)
            .map(|((l, p), v)| l.conj() * p * v)
            .sum();
        grad[idx] = 2.0 * w.im;
        apply_diagonal_phase(&mut phi, values, -layer.gamma);
        apply_diagonal_phase(&mut lambda, values, -layer.gamma);
    }
    Ok((energy, grad))
}

/// Re-optimizes every parameter of `circuit` from `warm_start`. Returns the
/// best parameters found and their energy.
pub fn optimize_params(
    circuit: &AnsatzCircuit,
    diag: &CostDiagonal,
    warm_start: &[f64],
    opts: &BfgsOptions,
) -> Result<(Vec<f64>, f64)> {
    if warm_start.len() != circuit.parameter_count() {
        return Err(Error::DimensionMismatch {
            expected: circuit.parameter_count(),
            got: warm_start.len(),
        });
    }
    check_dims(circuit, diag)?;
    circuit.validate()?;
    let min = bfgs::minimize(|x| energy_and_gradient(circuit, diag, x), warm_start, opts)?;
    Ok((min.x, min.value))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub gamma0: f64,
    pub strategy: Strategy,
    pub layer_stopper_max: usize,
    pub optimizer_tolerance: f64,
    pub optimizer_max_iterations: usize,
    pub slow_stopper_threshold: f64,
    pub slow_stopper_patience: usize,
    pub gradient_threshold: f64,
    pub score_stopper_threshold: f64,
    pub parameter_stopper_max: usize,
    /// Stop once the energy drops to this value. Disabled by default.
    pub floor_stopper: Option<f64>,
    pub mwis_time_budget_secs: f64,
    pub simulator_cap: u32,
    /// Also evaluate all three selectors on every layer's graph and record
    /// their weights in [`RunResult::selection_sums`].
    pub compare_selectors: bool,
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            gamma0: 0.5,
            strategy: Strategy::Mosaic,
            layer_stopper_max: 20,
            optimizer_tolerance: 1e-6,
            optimizer_max_iterations: 1000,
            slow_stopper_threshold: 1e-6,
            slow_stopper_patience: 5,
            gradient_threshold: 1e-6,
            score_stopper_threshold: 1e-6,
            parameter_stopper_max: 200,
            floor_stopper: None,
            mwis_time_budget_secs: MWIS_TIME_BUDGET_SECS,
            simulator_cap: SIM_CAP,
            compare_selectors: false,
            seed: 0,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("optimizer_tolerance", self.optimizer_tolerance),
            ("slow_stopper_threshold", self.slow_stopper_threshold),
            ("gradient_threshold", self.gradient_threshold),
            ("score_stopper_threshold", self.score_stopper_threshold),
            ("mwis_time_budget_secs", self.mwis_time_budget_secs),
        ];
        for (name, v) in positive {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::Format(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.gamma0.is_finite() {
            return Err(Error::Format(format!("gamma0 must be finite, got {}", self.gamma0)));
        }
        if self.layer_stopper_max == 0 || self.parameter_stopper_max == 0 {
            return Err(Error::Format("layer and parameter limits must be at least 1".into()));
        }
        if self.slow_stopper_patience == 0 {
            return Err(Error::Format("slow_stopper_patience must be at least 1".into()));
        }
        Ok(())
    }

    fn bfgs(&self) -> BfgsOptions {
        BfgsOptions {
            tolerance: self.optimizer_tolerance,
            max_iterations: self.optimizer_max_iterations,
            ..BfgsOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    ScoreStopper,
    SlowStopper,
    LayerMax,
    ParameterMax,
    FloorStopper,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::ScoreStopper => "ScoreStopper",
            StopReason::SlowStopper => "SlowStopper",
            StopReason::LayerMax => "LayerMax",
            StopReason::ParameterMax => "ParameterMax",
            StopReason::FloorStopper => "FloorStopper",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Weights the three selectors achieve on one layer's incompatibility graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionSums {
    pub mosaic: f64,
    pub tetris: f64,
    pub adapt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub circuit: AnsatzCircuit,
    /// Optimized energy after each layer.
    pub energy_trace: Vec<f64>,
    /// Summed `|g|` of the operators chosen for each layer.
    pub gradient_sum_trace: Vec<f64>,
    /// Largest pool `|g|` at each layer's scoring step.
    pub max_gradient_trace: Vec<f64>,
    /// Per layer, present when `compare_selectors` is on.
    pub selection_sums: Vec<SelectionSums>,
    /// False for any layer whose exact tiling hit the time budget.
    pub exact_tiling: Vec<bool>,
    pub stop_reason: StopReason,
    /// Largest pool `|g|` at the last scoring step (the one that stopped the
    /// run for [`StopReason::ScoreStopper`]); `None` if the run stopped
    /// before re-scoring.
    pub final_max_gradient: Option<f64>,
    pub final_energy: f64,
    pub final_state: StateVector,
    pub wall_time: f64,
}

impl RunResult {
    pub fn layers(&self) -> usize {
        self.circuit.depth()
    }

    pub fn parameter_count(&self) -> usize {
        self.circuit.parameter_count()
    }
}

pub fn run(f: &CnfFormula, cfg: &EngineConfig) -> Result<RunResult> {
    run_with_clock(f, cfg, &NoClock)
}

pub fn run_with_clock(f: &CnfFormula, cfg: &EngineConfig, clock: &dyn Clock) -> Result<RunResult> {
    cfg.validate()?;
    let diag = build_cost_diag_capped(f, cfg.simulator_cap)?;
    run_on_diagonal(&diag, cfg, clock)
}

fn select(strategy: Strategy, g: &IncompatibilityGraph, cfg: &EngineConfig, clock: &dyn Clock) -> TileSelection {
    match strategy {
        Strategy::Adapt => select_single_adapt(g),
        Strategy::Tetris => solve_greedy_tetris(g),
        Strategy::Mosaic => solve_mwis_exact_within(g, clock, cfg.mwis_time_budget_secs),
    }
}

/// The adaptive loop on a prebuilt cost diagonal.
pub fn run_on_diagonal(diag: &CostDiagonal, cfg: &EngineConfig, clock: &dyn Clock) -> Result<RunResult> {
    cfg.validate()?;
    let start = clock.seconds();
    let n = diag.n();
    let pool = build_pool(n)?;
    let opts = cfg.bfgs();

    let mut circuit = AnsatzCircuit::empty(n);
    let mut params: Vec<f64> = Vec::new();
    let mut state = StateVector::plus(n);
    let mut energy = state.expectation(diag)?;
    let mut energy_trace = Vec::new();
    let mut gradient_sum_trace = Vec::new();
    let mut max_gradient_trace = Vec::new();
    let mut selection_sums = Vec::new();
    let mut exact_tiling = Vec::new();
    let mut final_max_gradient = None;

    let stop_reason = loop {
        if circuit.depth() >= cfg.layer_stopper_max {
            break StopReason::LayerMax;
        }
        let scored: ScoredPool = score_pool(&state, diag, cfg.gamma0, &pool, cfg.gradient_threshold)?;
        let max_g = scored.max_abs_score();
        final_max_gradient = Some(max_g);
        if max_g.is_nan() || max_g < cfg.score_stopper_threshold {
            break StopReason::ScoreStopper;
        }
        let graph = IncompatibilityGraph::from_scored(&scored, n);
        if graph.is_empty() {
            break StopReason::ScoreStopper;
        }
        let ops = candidate_ops(&scored);
        let chosen = select(cfg.strategy, &graph, cfg, clock);
        if cfg.compare_selectors {
            let weight = |s: Strategy| {
                if s == cfg.strategy {
                    chosen.total_weight
                } else {
                    select(s, &graph, cfg, clock).total_weight
                }
            };
            selection_sums.push(SelectionSums {
                mosaic: weight(Strategy::Mosaic),
                tetris: weight(Strategy::Tetris),
                adapt: weight(Strategy::Adapt),
            });
        }
        exact_tiling.push(chosen.exact);
        max_gradient_trace.push(max_g);
        gradient_sum_trace.push(chosen.total_weight);
        circuit.layers.push(AnsatzLayer {
            gamma: cfg.gamma0,
            mixers: chosen.chosen.iter().map(|&i| (ops[i], 0.0)).collect(),
        });
        params.push(cfg.gamma0);
        params.extend(core::iter::repeat_n(0.0, chosen.chosen.len()));

        let (best, value) = optimize_params(&circuit, diag, &params, &opts).map_err(|e| match e {
            Error::NumericFailure(msg) => Error::NumericFailure(format!(
                "{msg}; circuit before re-optimization has {} layers, last energy {energy}",
                circuit.depth()
            )),
            other => other,
        })?;
        // The warm start already reproduces the previous energy; never accept
        // a worse point.
        if value <= energy || energy_trace.is_empty() {
            params = best;
        }
        circuit.set_parameters(&params)?;
        let (psi, e) = evaluate_circuit(&circuit, diag)?;
        state = psi;
        energy = e;
        energy_trace.push(energy);

        if let Some(floor) = cfg.floor_stopper {
            if energy <= floor {
                final_max_gradient = None;
                break StopReason::FloorStopper;
            }
        }
        if circuit.parameter_count() >= cfg.parameter_stopper_max {
            final_max_gradient = None;
            break StopReason::ParameterMax;
        }
        let p = cfg.slow_stopper_patience;
        if energy_trace.len() > p {
            let k = energy_trace.len() - 1;
            if abs(energy_trace[k] - energy_trace[k - p]) < cfg.slow_stopper_threshold {
                final_max_gradient = None;
                break StopReason::SlowStopper;
            }
        }
    };
    if stop_reason == StopReason::LayerMax {
        final_max_gradient = None;
    }

    Ok(RunResult {
        circuit,
        energy_trace,
        gradient_sum_trace,
        max_gradient_trace,
        selection_sums,
        exact_tiling,
        stop_reason,
        final_max_gradient,
        final_energy: energy,
        final_state: state,
        wall_time: clock.seconds() - start,
    })
}

/// Default probe angles for the grid-selected variant.
pub const GAMMA_GRID: [f64; 3] = [0.01, 0.1, 0.5];

/// Runs once per `gamma0` and keeps the lowest final energy (equivalently the
/// highest approximation ratio), preferring fewer layers on ties and then the
/// earlier grid entry.
pub fn run_gamma_grid(
    f: &CnfFormula,
    cfg: &EngineConfig,
    gammas: &[f64],
    clock: &dyn Clock,
) -> Result<(f64, RunResult)> {
    const TIE: f64 = 1e-9;
    if gammas.is_empty() {
        return Err(Error::Format("empty gamma0 grid".into()));
    }
    cfg.validate()?;
    let diag = build_cost_diag_capped(f, cfg.simulator_cap)?;
    let mut best: Option<(f64, RunResult)> = None;
    for &g in gammas {
        let c = EngineConfig { gamma0: g, ..cfg.clone() };
        let r = run_on_diagonal(&diag, &c, clock)?;
        let better = match &best {
            None => true,
            Some((_, b)) => {
                r.final_energy < b.final_energy - TIE
                    || (abs(r.final_energy - b.final_energy) <= TIE && r.layers() < b.layers())
            }
        };
        if better {
            best = Some((g, r));
        }
    }
    Ok(best.unwrap())
}

/// Human-readable one-line description of a circuit.
pub fn describe(circuit: &AnsatzCircuit) -> String {
    let mut out = String::new();
    for (k, layer) in circuit.layers.iter().enumerate() {
        if k > 0 {
            out.push_str(" ; ");
        }
        out.push_str(&format!("g={:.4}", layer.gamma));
        for (op, b) in &layer.mixers {
            out.push_str(&format!(" {op}:{b:.4}"));
        }
    }
    out
}
