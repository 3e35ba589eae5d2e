//! `eval-circuit`: validity and quality of externally produced circuits.
//!
//! Samples are token sequences. A sample that does not start with `<bos>` is
//! taken to be the circuit part only and is prefixed with the formula tokens.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use log::info;
use mosaic_qaoa_core::engine::{evaluate_circuit, AnsatzCircuit};
use mosaic_qaoa_core::metrics::{approximation_ratio, best_shot_ar, layers_to_target, stuck, AR_TARGET};
use mosaic_qaoa_core::sat::max_sat_opt;
use mosaic_qaoa_core::sim::{build_cost_diag, CostDiagonal};
use mosaic_qaoa_core::tokens::{detokenize, formula_tokens, validate_tokens, Token, TokenSequence};
use mosaic_qaoa_core::CnfFormula;
use serde::{Deserialize, Serialize};

use crate::cli::EvalArgs;
use crate::files::{file_stem, read_dimacs, read_json};
use crate::records::RunRecord;
use crate::{derive_seed, fatal, Failure, Outcome};

/// Energies recorded by `run` must be reproduced within this tolerance.
pub const REPRODUCTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sample {
    Text(String),
    Tokens(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRequest {
    pub id: String,
    /// Formula string, `|` after every clause.
    pub formula: String,
    pub n: usize,
    pub samples: Vec<Sample>,
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub index: usize,
    pub valid: bool,
    pub reason: Option<String>,
    pub energy: Option<f64>,
    pub ar_expectation: Option<f64>,
    pub ar_best_shot: Option<f64>,
    pub stuck: Option<bool>,
    pub layers: Option<usize>,
    pub layers_to_999: Option<usize>,
    pub parameter_count: Option<usize>,
}

impl SampleResult {
    fn invalid(index: usize, reason: String) -> Self {
        Self {
            index,
            valid: false,
            reason: Some(reason),
            energy: None,
            ar_expectation: None,
            ar_best_shot: None,
            stuck: None,
            layers: None,
            layers_to_999: None,
            parameter_count: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResponse {
    pub id: String,
    pub n: usize,
    pub m: usize,
    pub opt: usize,
    pub valid_count: usize,
    /// True when no sample is valid.
    pub formula_error: bool,
    /// Percentage of invalid samples.
    pub circuit_error_rate: f64,
    pub samples: Vec<SampleResult>,
}

struct Target {
    formula: CnfFormula,
    diag: CostDiagonal,
    opt: usize,
}

impl Target {
    fn new(f: &CnfFormula) -> Result<Self, String> {
        let formula = f.canonicalize();
        let diag = build_cost_diag(&formula).map_err(|e| e.to_string())?;
        let opt = max_sat_opt(&formula).map_err(|e| e.to_string())?.opt;
        Ok(Self { formula, diag, opt })
    }

    fn sequence(&self, sample: &Sample) -> Result<TokenSequence, String> {
        let mut seq = match sample {
            Sample::Text(t) => TokenSequence::parse_text(t),
            Sample::Tokens(ts) => TokenSequence::from_strings(ts.iter().map(String::as_str)),
        }
        .map_err(|e| e.to_string())?;
        if seq.tokens.first() != Some(&Token::Bos) {
            let mut full = formula_tokens(&self.formula);
            full.append(&mut seq.tokens);
            seq.tokens = full;
        }
        Ok(seq)
    }

    fn energy(&self, circuit: &AnsatzCircuit) -> Result<f64, String> {
        evaluate_circuit(circuit, &self.diag).map(|(_, e)| e).map_err(|e| e.to_string())
    }

    fn score(&self, index: usize, sample: &Sample, shots: u64, seed: u64) -> SampleResult {
        match self.score_inner(index, sample, shots, seed) {
            Ok(r) => r,
            Err(reason) => SampleResult::invalid(index, reason),
        }
    }

    fn score_inner(&self, index: usize, sample: &Sample, shots: u64, seed: u64) -> Result<SampleResult, String> {
        let n = self.formula.n() as usize;
        let seq = self.sequence(sample)?;
        let verdict = validate_tokens(&seq, n);
        if !verdict.valid {
            return Err(verdict.reason.unwrap_or_default());
        }
        let (tf, circuit) = detokenize(&seq, n).map_err(|e| e.to_string())?;
        if tf.clauses() != self.formula.clauses() {
            return Err("encoded formula differs from the requested formula".into());
        }
        let m = self.formula.m();
        let (state, energy) = evaluate_circuit(&circuit, &self.diag).map_err(|e| e.to_string())?;
        let mut trace = Vec::with_capacity(circuit.depth());
        for p in 1..=circuit.depth() {
            let prefix = AnsatzCircuit {
                n,
                layers: circuit.layers[..p].to_vec(),
            };
            trace.push(self.energy(&prefix)?);
        }
        let counts = state.sample(shots, seed);
        Ok(SampleResult {
            index,
            valid: true,
            reason: None,
            energy: Some(energy),
            ar_expectation: Some(approximation_ratio(energy, m, self.opt)),
            ar_best_shot: Some(best_shot_ar(&counts, &self.diag, self.opt)),
            stuck: Some(stuck(&counts, &self.diag)),
            layers: Some(circuit.depth()),
            layers_to_999: layers_to_target(&trace, m, self.opt, AR_TARGET),
            parameter_count: Some(circuit.parameter_count()),
        })
    }
}

/// Scores every sample of one request. Only an unusable formula is an error;
/// bad samples become invalid verdicts.
pub fn evaluate_request(req: &EvalRequest, default_shots: u64, default_seed: u64) -> Result<EvalResponse, String> {
    let f = CnfFormula::parse_formula_string(&req.formula, req.n as u32).map_err(|e| format!("{}: {e}", req.id))?;
    let target = Target::new(&f).map_err(|e| format!("{}: {e}", req.id))?;
    let shots = req.shots.unwrap_or(default_shots);
    let seed = req.seed.unwrap_or(default_seed);
    let samples: Vec<SampleResult> = req
        .samples
        .iter()
        .enumerate()
        .map(|(k, s)| target.score(k, s, shots, derive_seed(seed, &format!("{}#{k}", req.id))))
        .collect();
    let valid_count = samples.iter().filter(|s| s.valid).count();
    Ok(EvalResponse {
        id: req.id.clone(),
        n: req.n,
        m: f.m(),
        opt: target.opt,
        valid_count,
        formula_error: valid_count == 0,
        circuit_error_rate: if samples.is_empty() {
            0.0
        } else {
            100.0 * (samples.len() - valid_count) as f64 / samples.len() as f64
        },
        samples,
    })
}

#[derive(Debug, Serialize)]
struct Reproduction {
    formula_id: String,
    recorded_energy: f64,
    energy: f64,
    abs_diff: f64,
    reproduced: bool,
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => crate::files::write_text(p, text),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(fatal),
    }
}

fn json_line(value: &impl Serialize) -> Result<String, Failure> {
    let mut s = serde_json::to_string(value).map_err(fatal)?;
    s.push('\n');
    Ok(s)
}

fn check_circuit(path: &Path, out: Option<&Path>) -> Outcome {
    let run: RunRecord = read_json(path)?;
    let f = run.formula()?;
    let target = Target::new(&f).map_err(fatal)?;
    let energy = target.energy(&run.circuit).map_err(fatal)?;
    let abs_diff = (energy - run.final_energy).abs();
    let reproduced = abs_diff <= REPRODUCTION_TOLERANCE;
    emit(
        out,
        &json_line(&Reproduction {
            formula_id: run.formula_id.clone(),
            recorded_energy: run.final_energy,
            energy,
            abs_diff,
            reproduced,
        })?,
    )?;
    if reproduced {
        Ok(0)
    } else {
        Err(fatal(format!(
            "{}: recorded energy {} but circuit evaluates to {energy}",
            run.formula_id, run.final_energy
        )))
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>, Failure> {
    let file = fs::File::open(path).map_err(|e| fatal(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(fatal)?;
        if !line.trim().is_empty() {
            out.push(line);
        }
    }
    Ok(out)
}

pub fn execute(args: &EvalArgs) -> Outcome {
    if args.shots == 0 {
        return Err(Failure::Config("--shots must be positive".into()));
    }
    let out = args.out.as_deref();
    if let Some(path) = &args.circuit {
        return check_circuit(path, out);
    }
    if let Some(path) = &args.requests {
        let mut body = String::new();
        let mut failed = 0;
        for (i, line) in read_lines(path)?.iter().enumerate() {
            let req: EvalRequest = serde_json::from_str(line)
                .map_err(|e| fatal(format!("{}:{}: {e}", path.display(), i + 1)))?;
            let req = EvalRequest {
                samples: truncate(req.samples.clone(), args.samples),
                ..req
            };
            match evaluate_request(&req, args.shots, args.seed) {
                Ok(resp) => {
                    info!("{}: {}/{} valid", resp.id, resp.valid_count, resp.samples.len());
                    body.push_str(&json_line(&resp)?);
                }
                Err(msg) => {
                    log::error!("{msg}");
                    failed += 1;
                }
            }
        }
        emit(out, &body)?;
        return Ok(failed);
    }
    match (&args.tokens, &args.instance) {
        (Some(tokens), Some(instance)) => {
            let f = read_dimacs(instance)?;
            let samples = truncate(read_lines(tokens)?.into_iter().map(Sample::Text).collect(), args.samples);
            let req = EvalRequest {
                id: file_stem(instance),
                formula: f.canonicalize().formula_string(),
                n: f.n() as usize,
                samples,
                shots: None,
                seed: None,
            };
            let resp = evaluate_request(&req, args.shots, args.seed).map_err(fatal)?;
            emit(out, &json_line(&resp)?)?;
            Ok(0)
        }
        _ => Err(Failure::Config(
            "eval-circuit needs --tokens with --instance, --requests, or --circuit".into(),
        )),
    }
}

fn truncate(mut samples: Vec<Sample>, k: Option<usize>) -> Vec<Sample> {
    if let Some(k) = k {
        samples.truncate(k);
    }
    samples
}
