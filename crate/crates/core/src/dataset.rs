//! Supervision records: a canonical formula, its optimized circuit as tokens,
//! and enough metadata to recompute the score.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{evaluate_circuit, AnsatzCircuit};
use crate::math::{abs, round};
use crate::metrics::{approximation_ratio, build_lcg};
use crate::sat::{CnfFormula, Provenance};
use crate::sim::build_cost_diag;
use crate::tokens::{detokenize, tokenize, validate_tokens, TokenSequence};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// One JSONL line. Field order is the serialized order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub schema_version: u32,
    /// Canonical formula string, `|` after every clause.
    pub formula: String,
    pub n: usize,
    pub m: usize,
    pub satisfiable: bool,
    pub provenance: Provenance,
    pub lcg_edges: Vec<(usize, usize)>,
    pub tokens: Vec<String>,
    /// Expectation energy of the circuit as encoded in `tokens`.
    pub energy: f64,
    pub opt: usize,
    pub ar: f64,
    pub layers: usize,
    pub config_digest: String,
    pub seed: u64,
}

impl DatasetRecord {
    /// Builds a record from an engine circuit. Energy and AR are those of the
    /// quantized circuit the tokens describe, so evaluating the tokens
    /// reproduces them.
    pub fn from_circuit(
        f: &CnfFormula,
        circuit: &AnsatzCircuit,
        opt: usize,
        config_digest: &str,
        seed: u64,
    ) -> Result<Self> {
        let canonical = f.canonicalize();
        let seq = tokenize(&canonical, circuit)?;
        let n = f.n() as usize;
        let (_, quantized) = detokenize(&seq, n)?;
        let diag = build_cost_diag(&canonical)?;
        let (_, energy) = evaluate_circuit(&quantized, &diag)?;
        let lcg = build_lcg(&canonical);
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            formula: canonical.formula_string(),
            n,
            m: f.m(),
            satisfiable: opt == f.m(),
            provenance: f.provenance(),
            lcg_edges: lcg.edges,
            tokens: seq.to_strings(),
            energy,
            opt,
            ar: approximation_ratio(energy, f.m(), opt),
            layers: quantized.depth(),
            config_digest: config_digest.to_string(),
            seed,
        })
    }

    pub fn formula(&self) -> Result<CnfFormula> {
        Ok(CnfFormula::parse_formula_string(&self.formula, self.n as u32)?.with_origin(self.provenance, self.seed))
    }

    pub fn token_sequence(&self) -> Result<TokenSequence> {
        TokenSequence::from_strings(self.tokens.iter().map(String::as_str))
    }

    pub fn recompute_ar(&self) -> f64 {
        approximation_ratio(self.energy, self.m, self.opt)
    }

    /// Structural consistency of every field. Does not re-simulate; see
    /// [`Self::verify_energy`].
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Format(msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        let f = self.formula()?;
        if !f.is_canonical() {
            return bad(format!("formula is not canonical: {}", self.formula));
        }
        if f.m() != self.m {
            return bad(format!("m = {} but formula has {} clauses", self.m, f.m()));
        }
        if self.opt > self.m || self.opt == 0 && self.m > 0 {
            return bad(format!("opt {} impossible for m {}", self.opt, self.m));
        }
        if self.satisfiable != (self.opt == self.m) {
            return bad("satisfiable flag disagrees with opt".into());
        }
        if build_lcg(&f).edges != self.lcg_edges {
            return bad("lcg_edges do not match the formula".into());
        }
        let seq = self.token_sequence()?;
        let verdict = validate_tokens(&seq, self.n);
        if !verdict.valid {
            return bad(format!("invalid tokens: {}", verdict.reason.unwrap_or_default()));
        }
        let (tf, circuit) = detokenize(&seq, self.n)?;
        if tf.clauses() != f.clauses() {
            return bad("token formula differs from the formula field".into());
        }
        if circuit.depth() != self.layers {
            return bad(format!("layers = {} but tokens hold {}", self.layers, circuit.depth()));
        }
        if abs(self.recompute_ar() - self.ar) > 1e-9 {
            return bad(format!("stored AR {} differs from recomputed {}", self.ar, self.recompute_ar()));
        }
        Ok(())
    }

    /// Re-simulates the token circuit and checks the stored energy.
    pub fn verify_energy(&self, tol: f64) -> Result<f64> {
        let (f, circuit) = detokenize(&self.token_sequence()?, self.n)?;
        let diag = build_cost_diag(&f)?;
        let (_, e) = evaluate_circuit(&circuit, &diag)?;
        if abs(e - self.energy) > tol {
            return Err(Error::Format(format!(
                "stored energy {} but circuit evaluates to {e}",
                self.energy
            )));
        }
        Ok(e)
    }
}

/// Fails listing every canonical formula that appears more than once.
pub fn check_unique(records: &[DatasetRecord]) -> Result<()> {
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records {
        *seen.entry(r.formula.as_str()).or_insert(0) += 1;
    }
    let dups: Vec<String> = seen
        .into_iter()
        .filter(|(_, c)| *c > 1)
        .map(|(f, c)| format!("{f} (x{c})"))
        .collect();
    if dups.is_empty() {
        Ok(())
    } else {
        Err(Error::Format(format!("duplicate canonical formulas: {}", dups.join("; "))))
    }
}

/// Train/validation/test split stratified by `(satisfiable, provenance)`.
/// Each stratum is shuffled with `seed` and cut by rounded ratios; the test
/// part takes the remainder. Output order within a part follows the input
/// order.
pub fn stratified_split(
    records: Vec<DatasetRecord>,
    ratios: [f64; 3],
    seed: u64,
) -> Result<[Vec<DatasetRecord>; 3]> {
    let total: f64 = ratios.iter().sum();
    if ratios.iter().any(|r| r.is_nan() || *r < 0.0) || abs(total - 1.0) > 1e-9 {
        return Err(Error::Format(format!("split ratios {ratios:?} must be nonnegative and sum to 1")));
    }
    let mut strata: BTreeMap<(bool, Provenance), Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        strata.entry((r.satisfiable, r.provenance)).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut part_of = alloc::vec![2usize; records.len()];
    for idx in strata.values_mut() {
        idx.shuffle(&mut rng);
        let len = idx.len() as f64;
        let n_train = round(ratios[0] * len) as usize;
        let n_val = (round(ratios[1] * len) as usize).min(idx.len() - n_train.min(idx.len()));
        for (k, &i) in idx.iter().enumerate() {
            part_of[i] = if k < n_train {
                0
            } else if k < n_train + n_val {
                1
            } else {
                2
            };
        }
    }
    let mut out: [Vec<DatasetRecord>; 3] = Default::default();
    for (r, p) in records.into_iter().zip(part_of) {
        out[p].push(r);
    }
    Ok(out)
}
