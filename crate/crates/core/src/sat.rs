//! 3-CNF instances: literals, clauses, formulas, the uniform and balanced
//! random generators, canonical ordering and the exhaustive Max-SAT oracle.

use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::math::round_half_up;
use crate::{Error, Result};

/// Clause-to-variable ratio at the uniform random 3-SAT phase transition.
pub const UNIFORM_ALPHA: f64 = 4.26;
/// Clause-to-variable ratio at the balanced 3-SAT phase transition.
pub const BALANCED_ALPHA: f64 = 3.6;
/// Relative spread of the sampled clause ratio around the transition.
pub const ALPHA_SPREAD: f64 = 0.2;
/// Default variable cap for [`max_sat_opt`].
pub const MAX_SAT_CAP: u32 = 24;

const BALANCED_MAX_RESTARTS: usize = 200;

/// A variable `x_i` (1-based) or its negation.
///
/// The derived order compares the variable index first and puts `x_i`
/// before `¬x_i` on ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    var: u32,
    negated: bool,
}

impl Literal {
    pub fn new(var: u32, negated: bool) -> Result<Self> {
        if var == 0 {
            return Err(Error::Format("variable indices start at 1".into()));
        }
        Ok(Self { var, negated })
    }

    /// # Panics
    /// If `var == 0`.
    pub fn positive(var: u32) -> Self {
        assert!(var >= 1, "variable indices start at 1");
        Self { var, negated: false }
    }

    /// # Panics
    /// If `var == 0`.
    pub fn negative(var: u32) -> Self {
        assert!(var >= 1, "variable indices start at 1");
        Self { var, negated: true }
    }

    pub fn var(self) -> u32 {
        self.var
    }

    pub fn is_negated(self) -> bool {
        self.negated
    }

    /// Zero-based qubit carrying this literal's variable.
    pub fn qubit(self) -> usize {
        (self.var - 1) as usize
    }

    /// Truth value under an assignment packed as bits (bit `k` = `x_{k+1}`).
    #[inline]
    pub fn is_true(self, assignment: u64) -> bool {
        let bit = (assignment >> (self.var - 1)) & 1 == 1;
        bit != self.negated
    }

    pub fn to_dimacs(self) -> i64 {
        if self.negated {
            -(self.var as i64)
        } else {
            self.var as i64
        }
    }

    pub fn from_dimacs(value: i64) -> Result<Self> {
        if value == 0 || value.unsigned_abs() > u32::MAX as u64 {
            return Err(Error::Format(format!("invalid DIMACS literal {value}")));
        }
        Literal::new(value.unsigned_abs() as u32, value < 0)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "-x{}", self.var)
        } else {
            write!(f, "x{}", self.var)
        }
    }
}

impl FromStr for Literal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (negated, rest) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let digits = rest
            .strip_prefix('x')
            .ok_or_else(|| Error::Format(format!("not a literal: {s:?}")))?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0')
        {
            return Err(Error::Format(format!("not a literal: {s:?}")));
        }
        let var: u32 = digits
            .parse()
            .map_err(|_| Error::Format(format!("not a literal: {s:?}")))?;
        Literal::new(var, negated)
    }
}

/// Disjunction of exactly three literals over pairwise distinct variables,
/// stored in canonical intra-clause order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clause {
    lits: [Literal; 3],
}

impl Clause {
    pub fn new(a: Literal, b: Literal, c: Literal) -> Result<Self> {
        if a.var == b.var || a.var == c.var || b.var == c.var {
            return Err(Error::Format(format!(
                "clause ({a} {b} {c}) repeats a variable"
            )));
        }
        let mut lits = [a, b, c];
        lits.sort_unstable();
        Ok(Self { lits })
    }

    pub fn from_slice(lits: &[Literal]) -> Result<Self> {
        match lits {
            [a, b, c] => Clause::new(*a, *b, *c),
            _ => Err(Error::Format(format!(
                "clause has {} literals, expected 3",
                lits.len()
            ))),
        }
    }

    pub fn literals(&self) -> &[Literal; 3] {
        &self.lits
    }

    pub fn max_var(&self) -> u32 {
        self.lits[2].var
    }

    /// Bits of the three variables.
    pub fn support_mask(&self) -> u64 {
        self.lits.iter().fold(0, |acc, l| acc | 1u64 << (l.var - 1))
    }

    /// The unique assignment pattern (restricted to [`Self::support_mask`])
    /// that makes every literal false.
    pub fn violating_pattern(&self) -> u64 {
        self.lits
            .iter()
            .filter(|l| l.negated)
            .fold(0, |acc, l| acc | 1u64 << (l.var - 1))
    }

    #[inline]
    pub fn is_satisfied(&self, assignment: u64) -> bool {
        assignment & self.support_mask() != self.violating_pattern()
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lits[0], self.lits[1], self.lits[2])
    }
}

/// Where a formula came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Uniform,
    Balanced,
    External,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Uniform => "uniform",
            Provenance::Balanced => "balanced",
            Provenance::External => "external",
        }
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Provenance::Uniform),
            "balanced" => Ok(Provenance::Balanced),
            "external" => Ok(Provenance::External),
            other => Err(Error::Format(format!("unknown provenance {other:?}"))),
        }
    }
}

/// A 3-CNF formula over `n` variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CnfFormula {
    n: u32,
    clauses: Vec<Clause>,
    provenance: Provenance,
    seed: u64,
}

impl CnfFormula {
    pub fn new(n: u32, clauses: Vec<Clause>, provenance: Provenance, seed: u64) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(Error::InvalidDimension(format!(
                "variable count must be in [1, 64], got {n}"
            )));
        }
        if let Some(bad) = clauses.iter().find(|c| c.max_var() > n) {
            return Err(Error::Format(format!(
                "clause ({bad}) references a variable above n = {n}"
            )));
        }
        Ok(Self {
            n,
            clauses,
            provenance,
            seed,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_origin(mut self, provenance: Provenance, seed: u64) -> Self {
        self.provenance = provenance;
        self.seed = seed;
        self
    }

    pub fn satisfied_count(&self, assignment: u64) -> usize {
        self.clauses
            .iter()
            .filter(|c| c.is_satisfied(assignment))
            .count()
    }

    pub fn violated_count(&self, assignment: u64) -> usize {
        self.m() - self.satisfied_count(assignment)
    }

    /// Clauses sorted lexicographically (literals are already sorted inside
    /// each clause).
    pub fn canonicalize(&self) -> Self {
        let mut clauses = self.clauses.clone();
        clauses.sort();
        Self {
            clauses,
            ..self.clone()
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.clauses.windows(2).all(|w| w[0] <= w[1])
    }

    /// Formula text in token form, clauses in stored order: every clause is
    /// followed by `|`, e.g. `"x1 x2 x3 | x1 x2 -x4 |"`.
    pub fn formula_string(&self) -> String {
        let mut out = String::new();
        for (i, clause) in self.clauses.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&clause.to_string());
            out.push_str(" |");
        }
        out
    }

    pub fn canonical_string(&self) -> String {
        self.canonicalize().formula_string()
    }

    /// Parses the text produced by [`Self::formula_string`].
    pub fn parse_formula_string(text: &str, n: u32) -> Result<Self> {
        let mut clauses = Vec::new();
        let mut pending = Vec::with_capacity(3);
        for word in text.split_whitespace() {
            if word == "|" {
                clauses.push(Clause::from_slice(&pending)?);
                pending.clear();
            } else {
                pending.push(word.parse::<Literal>()?);
            }
        }
        if !pending.is_empty() {
            return Err(Error::Format("formula string must end with '|'".into()));
        }
        CnfFormula::new(n, clauses, Provenance::External, 0)
    }

    /// DIMACS CNF text. Provenance and seed travel in a comment line that
    /// [`Self::parse_dimacs`] reads back.
    pub fn to_dimacs(&self) -> String {
        let mut out = format!(
            "c mosaic-qaoa provenance={} seed={}\np cnf {} {}\n",
            self.provenance.as_str(),
            self.seed,
            self.n,
            self.m()
        );
        for clause in &self.clauses {
            for lit in clause.literals() {
                out.push_str(&format!("{} ", lit.to_dimacs()));
            }
            out.push_str("0\n");
        }
        out
    }

    /// Parses DIMACS CNF where every clause has exactly three literals over
    /// distinct variables. Clauses may span lines; `%` ends the input.
    pub fn parse_dimacs(text: &str) -> Result<Self> {
        let mut header: Option<(u32, usize)> = None;
        let mut provenance = Provenance::External;
        let mut seed = 0;
        let mut clauses = Vec::new();
        let mut pending = Vec::with_capacity(3);
        for line in text.lines() {
            let line = line.trim();
            if line.starts_with('%') {
                break;
            }
            if let Some(comment) = line.strip_prefix('c') {
                for field in comment.split_whitespace() {
                    if let Some(v) = field.strip_prefix("provenance=") {
                        provenance = v.parse()?;
                    } else if let Some(v) = field.strip_prefix("seed=") {
                        seed = v
                            .parse()
                            .map_err(|_| Error::Format(format!("bad seed comment {v:?}")))?;
                    }
                }
                continue;
            }
            if let Some(rest) = line.strip_prefix('p') {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let parsed = match parts.as_slice() {
                    ["cnf", n, m] => n.parse().ok().zip(m.parse().ok()),
                    _ => None,
                };
                header = Some(parsed.ok_or_else(|| Error::Format(format!("bad problem line {line:?}")))?);
                continue;
            }
            if line.is_empty() {
                continue;
            }
            if header.is_none() {
                return Err(Error::Format("clause before the problem line".into()));
            }
            for word in line.split_whitespace() {
                let v: i64 = word
                    .parse()
                    .map_err(|_| Error::Format(format!("bad DIMACS token {word:?}")))?;
                if v == 0 {
                    if pending.len() != 3 {
                        return Err(Error::Format(format!(
                            "clause {} has {} literals, expected 3",
                            clauses.len() + 1,
                            pending.len()
                        )));
                    }
                    clauses.push(Clause::from_slice(&pending).map_err(|e| {
                        Error::Format(format!("clause {}: {e}", clauses.len() + 1))
                    })?);
                    pending.clear();
                } else {
                    pending.push(Literal::from_dimacs(v)?);
                }
            }
        }
        if !pending.is_empty() {
            return Err(Error::Format("last clause is not terminated by 0".into()));
        }
        let (n, m) = header.ok_or_else(|| Error::Format("missing problem line".into()))?;
        if m != clauses.len() {
            return Err(Error::Format(format!(
                "problem line declares {m} clauses, found {}",
                clauses.len()
            )));
        }
        CnfFormula::new(n, clauses, provenance, seed)
    }

    /// Per-variable `(positive, negative)` occurrence counts, index 0 = `x_1`.
    pub fn polarity_counts(&self) -> Vec<(usize, usize)> {
        let mut counts = alloc::vec![(0usize, 0usize); self.n as usize];
        for lit in self.clauses.iter().flat_map(|c| c.lits.iter()) {
            let slot = &mut counts[lit.qubit()];
            if lit.negated {
                slot.1 += 1;
            } else {
                slot.0 += 1;
            }
        }
        counts
    }
}

/// Exhaustive Max-SAT optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxSatOptimum {
    pub opt: usize,
    /// One optimal assignment, bit `k` = `x_{k+1}`.
    pub witness: u64,
}

impl MaxSatOptimum {
    pub fn is_satisfiable(&self, m: usize) -> bool {
        self.opt == m
    }
}

/// Render an assignment as an `n`-character string, `x_1` first.
pub fn assignment_string(assignment: u64, n: u32) -> String {
    (0..n)
        .map(|k| if (assignment >> k) & 1 == 1 { '1' } else { '0' })
        .collect()
}

pub fn parse_assignment_string(text: &str) -> Result<u64> {
    if text.is_empty() || text.len() > 64 {
        return Err(Error::Format(format!("bad assignment string {text:?}")));
    }
    text.bytes().enumerate().try_fold(0u64, |acc, (k, b)| match b {
        b'0' => Ok(acc),
        b'1' => Ok(acc | 1 << k),
        _ => Err(Error::Format(format!("bad assignment string {text:?}"))),
    })
}

pub fn max_sat_opt(f: &CnfFormula) -> Result<MaxSatOptimum> {
    max_sat_opt_capped(f, MAX_SAT_CAP)
}

pub fn max_sat_opt_capped(f: &CnfFormula, cap: u32) -> Result<MaxSatOptimum> {
    if f.n() > cap {
        return Err(Error::Capacity {
            what: "max-sat variables",
            got: f.n() as usize,
            limit: cap as usize,
        });
    }
    let masks: Vec<(u64, u64)> = f
        .clauses()
        .iter()
        .map(|c| (c.support_mask(), c.violating_pattern()))
        .collect();
    let mut best = MaxSatOptimum { opt: 0, witness: 0 };
    let mut first = true;
    for assignment in 0..(1u64 << f.n()) {
        let sat = masks
            .iter()
            .filter(|(mask, pat)| assignment & mask != *pat)
            .count();
        if first || sat > best.opt {
            best = MaxSatOptimum {
                opt: sat,
                witness: assignment,
            };
            first = false;
            if sat == masks.len() {
                break;
            }
        }
    }
    Ok(best)
}

/// `m = round(alpha * n)`, half-up.
pub fn clause_count(alpha: f64, n: u32) -> usize {
    round_half_up(alpha * n as f64) as usize
}

/// Number of distinct 3-clauses over `n` variables: `C(n,3) * 8`.
pub fn distinct_clause_capacity(n: u32) -> u64 {
    let n = n as u64;
    if n < 3 {
        return 0;
    }
    n * (n - 1) * (n - 2) / 6 * 8
}

fn check_generator_dimension(n: u32) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidDimension(format!(
            "3-SAT generation needs n >= 3, got {n}"
        )));
    }
    if n > 64 {
        return Err(Error::InvalidDimension(format!(
            "at most 64 variables are supported, got {n}"
        )));
    }
    Ok(())
}

fn random_clause(rng: &mut ChaCha8Rng, n: u32) -> Clause {
    let mut vars = [0u32; 3];
    let mut filled = 0;
    while filled < 3 {
        let v = rng.random_range(1..=n);
        if !vars[..filled].contains(&v) {
            vars[filled] = v;
            filled += 1;
        }
    }
    let lit = |rng: &mut ChaCha8Rng, v| Literal {
        var: v,
        negated: rng.random::<bool>(),
    };
    let (a, b, c) = (lit(rng, vars[0]), lit(rng, vars[1]), lit(rng, vars[2]));
    Clause::new(a, b, c).expect("distinct variables by construction")
}

/// Uniform random 3-SAT: `m = round(alpha * n)` with `alpha` drawn uniformly
/// from `4.26 * [0.8, 1.2]`, each clause over three distinct variables with
/// fair-coin polarities. Duplicate clauses are re-drawn whenever enough
/// distinct clauses exist.
pub fn generate_uniform(n: u32, seed: u64) -> Result<CnfFormula> {
    check_generator_dimension(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alpha = rng.random_range(
        UNIFORM_ALPHA * (1.0 - ALPHA_SPREAD)..=UNIFORM_ALPHA * (1.0 + ALPHA_SPREAD),
    );
    let m = clause_count(alpha, n);
    let reject_duplicates = m as u64 <= distinct_clause_capacity(n);
    if !reject_duplicates {
        log::warn!("n = {n} admits fewer than m = {m} distinct clauses; duplicates allowed");
    }
    let mut seen = BTreeSet::new();
    let mut clauses = Vec::with_capacity(m);
    while clauses.len() < m {
        let clause = random_clause(&mut rng, n);
        if reject_duplicates && !seen.insert(clause) {
            continue;
        }
        clauses.push(clause);
    }
    CnfFormula::new(n, clauses, Provenance::Uniform, seed)
}

/// Balanced 3-SAT: `m = round(3.6 * (1 + delta) * n)`, `delta ~ U(-0.2, 0.2)`.
///
/// Every variable occurs `floor(3m/n)` or `ceil(3m/n)` times, split between
/// polarities as evenly as possible. The literal multiset is shuffled, packed
/// into consecutive triples and repaired by literal swaps (which keep the
/// multiset intact) until no clause repeats a variable or duplicates another
/// clause. A packing that cannot be repaired within `10 m` swaps is thrown
/// away and rebuilt from the continuing random stream.
pub fn generate_balanced(n: u32, seed: u64) -> Result<CnfFormula> {
    check_generator_dimension(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let delta = rng.random_range(-ALPHA_SPREAD..=ALPHA_SPREAD);
    let m = clause_count(BALANCED_ALPHA * (1.0 + delta), n);
    if m as u64 > distinct_clause_capacity(n) {
        return Err(Error::GenerationFailure(format!(
            "n = {n}, m = {m}: only {} distinct clauses exist",
            distinct_clause_capacity(n)
        )));
    }
    let mut last_conflicts = 0;
    for _ in 0..BALANCED_MAX_RESTARTS {
        let mut slots = balanced_literals(n, m, &mut rng);
        slots.shuffle(&mut rng);
        match repair_packing(&mut slots, m, &mut rng) {
            0 => {
                let clauses = slots
                    .chunks_exact(3)
                    .map(|c| Clause::from_slice(c).expect("repaired packing"))
                    .collect();
                return CnfFormula::new(n, clauses, Provenance::Balanced, seed);
            }
            conflicts => last_conflicts = conflicts,
        }
    }
    Err(Error::GenerationFailure(format!(
        "n = {n}, m = {m}, seed = {seed}: {last_conflicts} conflicting clauses left after \
         {BALANCED_MAX_RESTARTS} restarts"
    )))
}

fn balanced_literals(n: u32, m: usize, rng: &mut ChaCha8Rng) -> Vec<Literal> {
    let total = 3 * m;
    let base = total / n as usize;
    let extra = total % n as usize;
    let mut vars: Vec<u32> = (1..=n).collect();
    vars.shuffle(rng);
    let mut slots = Vec::with_capacity(total);
    for (i, &var) in vars.iter().enumerate() {
        let count = base + usize::from(i < extra);
        let mut positives = count / 2;
        if count % 2 == 1 && rng.random::<bool>() {
            positives += 1;
        }
        slots.extend((0..positives).map(|_| Literal::positive(var)));
        slots.extend((positives..count).map(|_| Literal::negative(var)));
    }
    slots
}

/// Clause indices that are invalid (repeated variable) or duplicate an
/// earlier clause.
fn conflicting_clauses(slots: &[Literal]) -> Vec<usize> {
    let mut bad = Vec::new();
    let mut seen: BTreeMap<[Literal; 3], usize> = BTreeMap::new();
    for (r, chunk) in slots.chunks_exact(3).enumerate() {
        if chunk[0].var == chunk[1].var || chunk[0].var == chunk[2].var || chunk[1].var == chunk[2].var
        {
            bad.push(r);
            continue;
        }
        let mut key = [chunk[0], chunk[1], chunk[2]];
        key.sort_unstable();
        let copies = seen.entry(key).or_insert(0);
        if *copies > 0 {
            bad.push(r);
        }
        *copies += 1;
    }
    bad
}

fn repair_packing(slots: &mut [Literal], m: usize, rng: &mut ChaCha8Rng) -> usize {
    let mut bad = conflicting_clauses(slots);
    for _ in 0..10 * m {
        if bad.is_empty() {
            break;
        }
        let r = bad[rng.random_range(0..bad.len())];
        let i = 3 * r + rng.random_range(0..3);
        let j = rng.random_range(0..slots.len());
        if j / 3 == r || slots[i] == slots[j] {
            continue;
        }
        slots.swap(i, j);
        let after = conflicting_clauses(slots);
        if after.len() <= bad.len() {
            bad = after;
        } else {
            slots.swap(i, j);
        }
    }
    bad.len()
}
