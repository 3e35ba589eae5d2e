//! Token sequences pairing a formula with a circuit.
//!
//! Grammar:
//!
//! ```text
//! <bos> (lit lit lit |)* <end_of_formula> (<new_layer_p> (op angle)+ angle)* <eos> <pad>*
//! ```
//!
//! Each layer lists its mixers with their `beta`, then the layer's `gamma`.
//! Angles share one vocabulary of [`ANGLE_BINS`] uniform bins over
//! `(-pi, pi]`; token `a{k}` stands for `k * 2pi / ANGLE_BINS`,
//! `k in -511..=512`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::{AnsatzCircuit, AnsatzLayer};
use crate::math::{floor, round};
use crate::pool::{build_pool, PoolOperator};
use crate::sat::{Clause, CnfFormula, Literal, Provenance};
use crate::{Error, Result};

pub const ANGLE_BINS: i32 = 1024;
pub const MAX_TOKENS: usize = 1024;
/// Identifies the angle quantization in serialized vocabularies.
pub const ANGLE_SCHEME: &str = "uniform-1024";

const MIN_BIN: i32 = -(ANGLE_BINS / 2) + 1;
const MAX_BIN: i32 = ANGLE_BINS / 2;

pub fn bin_width() -> f64 {
    2.0 * PI / ANGLE_BINS as f64
}

/// Maps an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut t = theta - two_pi * floor((theta + PI) / two_pi);
    // Now t is in [-pi, pi).
    if t <= -PI {
        t += two_pi;
    }
    t
}

/// Nearest bin index; the result is within half a bin of `theta` modulo 2pi.
pub fn quantize(theta: f64) -> i32 {
    let k = round(wrap_angle(theta) / bin_width()) as i32;
    if k < MIN_BIN {
        k + ANGLE_BINS
    } else {
        k
    }
}

pub fn dequantize(bin: i32) -> f64 {
    bin as f64 * bin_width()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Token {
    Bos,
    EndOfFormula,
    Eos,
    Pad,
    NewLayer,
    Separator,
    Literal(Literal),
    Operator(PoolOperator),
    /// Angle bin index in `-511..=512`.
    Angle(i32),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Bos => f.write_str("<bos>"),
            Token::EndOfFormula => f.write_str("<end_of_formula>"),
            Token::Eos => f.write_str("<eos>"),
            Token::Pad => f.write_str("<pad>"),
            Token::NewLayer => f.write_str("<new_layer_p>"),
            Token::Separator => f.write_str("|"),
            Token::Literal(l) => write!(f, "{l}"),
            Token::Operator(op) => write!(f, "{op}"),
            Token::Angle(k) => write!(f, "a{k}"),
        }
    }
}

impl FromStr for Token {
    type Err = Error;

    /// Strict inverse of `Display`; `¬x3` is also accepted for `-x3`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::Parse {
            index: 0,
            token: s.to_string(),
            reason: reason.to_string(),
        };
        Ok(match s {
            "<bos>" => Token::Bos,
            "<end_of_formula>" => Token::EndOfFormula,
            "<eos>" => Token::Eos,
            "<pad>" => Token::Pad,
            "<new_layer_p>" => Token::NewLayer,
            "|" => Token::Separator,
            _ if s.starts_with('x') || s.starts_with('-') => {
                Token::Literal(s.parse().map_err(|_| bad("malformed literal"))?)
            }
            _ if s.starts_with('¬') => {
                let lit: Literal = format!("-{}", &s['¬'.len_utf8()..])
                    .parse()
                    .map_err(|_| bad("malformed literal"))?;
                Token::Literal(lit)
            }
            _ if s.starts_with('a') => {
                let digits = &s[1..];
                let canonical = digits
                    .strip_prefix('-')
                    .unwrap_or(digits)
                    .chars()
                    .all(|c| c.is_ascii_digit());
                let k: i32 = digits.parse().map_err(|_| bad("malformed angle"))?;
                if !canonical || k.to_string() != digits {
                    return Err(bad("malformed angle"));
                }
                if !(MIN_BIN..=MAX_BIN).contains(&k) {
                    return Err(bad("angle bin out of range"));
                }
                Token::Angle(k)
            }
            _ => Token::Operator(s.parse().map_err(|_| bad("unknown token"))?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TokenSequence {
    pub tokens: Vec<Token>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.to_string()).collect()
    }

    /// Parses whitespace-separated tokens; errors name the first offending
    /// token and its position.
    pub fn parse_text(text: &str) -> Result<Self> {
        Self::from_strings(text.split_whitespace())
    }

    pub fn from_strings<'a, I: IntoIterator<Item = &'a str>>(items: I) -> Result<Self> {
        let tokens = items
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                s.parse::<Token>().map_err(|e| match e {
                    Error::Parse { token, reason, .. } => Error::Parse { index: i, token, reason },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { tokens })
    }

    /// Appends `<pad>` up to `len` tokens.
    pub fn pad_to(&mut self, len: usize) {
        while self.tokens.len() < len {
            self.tokens.push(Token::Pad);
        }
    }
}

impl fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

/// Formula part only: `<bos> ... <end_of_formula>`.
pub fn formula_tokens(f: &CnfFormula) -> Vec<Token> {
    let mut out = Vec::with_capacity(2 + 4 * f.m());
    out.push(Token::Bos);
    for clause in f.clauses() {
        out.extend(clause.literals().iter().map(|l| Token::Literal(*l)));
        out.push(Token::Separator);
    }
    out.push(Token::EndOfFormula);
    out
}

/// Encodes a canonical formula and a circuit over the same variables.
pub fn tokenize(f: &CnfFormula, c: &AnsatzCircuit) -> Result<TokenSequence> {
    if !f.is_canonical() {
        return Err(Error::Format("formula must be canonical before tokenization".into()));
    }
    if c.n != f.n() as usize {
        return Err(Error::DimensionMismatch {
            expected: f.n() as usize,
            got: c.n,
        });
    }
    let mut tokens = formula_tokens(f);
    for layer in &c.layers {
        tokens.push(Token::NewLayer);
        for (op, beta) in &layer.mixers {
            tokens.push(Token::Operator(*op));
            tokens.push(Token::Angle(quantize(*beta)));
        }
        tokens.push(Token::Angle(quantize(layer.gamma)));
    }
    tokens.push(Token::Eos);
    if tokens.len() > MAX_TOKENS {
        return Err(Error::Capacity {
            what: "token sequence length",
            got: tokens.len(),
            limit: MAX_TOKENS,
        });
    }
    Ok(TokenSequence { tokens })
}

/// Inverse of [`tokenize`] for `n` variables. Angles come back as bin
/// centers. The circuit is returned as parsed, without the support checks
/// of [`validate_tokens`].
pub fn detokenize(seq: &TokenSequence, n: usize) -> Result<(CnfFormula, AnsatzCircuit)> {
    let toks = &seq.tokens;
    let err = |i: usize, reason: &str| Error::Parse {
        index: i,
        token: toks.get(i).map_or_else(|| "<end of sequence>".to_string(), |t| t.to_string()),
        reason: reason.to_string(),
    };
    if n == 0 || n > 64 {
        return Err(Error::InvalidDimension(format!("cannot detokenize for n = {n}")));
    }
    let mut i = 0;
    if toks.first() != Some(&Token::Bos) {
        return Err(err(0, "expected <bos>"));
    }
    i += 1;

    let mut clauses = Vec::new();
    loop {
        match toks.get(i) {
            Some(Token::EndOfFormula) => {
                i += 1;
                break;
            }
            Some(Token::Literal(_)) => {
                let start = i;
                let mut lits = [Literal::positive(1); 3];
                for slot in &mut lits {
                    match toks.get(i) {
                        Some(Token::Literal(l)) if (l.var() as usize) <= n => *slot = *l,
                        Some(Token::Literal(_)) => return Err(err(i, "variable exceeds n")),
                        _ => return Err(err(i, "expected a literal")),
                    }
                    i += 1;
                }
                if toks.get(i) != Some(&Token::Separator) {
                    return Err(err(i, "expected | after three literals"));
                }
                let clause = Clause::from_slice(&lits).map_err(|_| err(start, "repeated variable in clause"))?;
                clauses.push(clause);
                i += 1;
            }
            _ => return Err(err(i, "expected a literal or <end_of_formula>")),
        }
    }
    let formula = CnfFormula::new(n as u32, clauses, Provenance::External, 0)?;

    let mut layers = Vec::new();
    loop {
        match toks.get(i) {
            Some(Token::Eos) => {
                i += 1;
                break;
            }
            Some(Token::NewLayer) => {
                i += 1;
                let mut mixers = Vec::new();
                let gamma = loop {
                    match (toks.get(i), toks.get(i + 1)) {
                        (Some(Token::Operator(op)), Some(Token::Angle(k))) => {
                            if n < 64 && op.support_mask(n) >> n != 0 {
                                return Err(err(i, "operator acts outside the register"));
                            }
                            mixers.push((*op, dequantize(*k)));
                            i += 2;
                        }
                        (Some(Token::Operator(_)), _) => return Err(err(i + 1, "expected an angle after operator")),
                        (Some(Token::Angle(k)), _) if !mixers.is_empty() => {
                            i += 1;
                            break dequantize(*k);
                        }
                        _ => return Err(err(i, "expected an operator")),
                    }
                };
                layers.push(AnsatzLayer { gamma, mixers });
            }
            _ => return Err(err(i, "expected <new_layer_p> or <eos>")),
        }
    }
    if let Some(j) = (i..toks.len()).find(|&j| toks[j] != Token::Pad) {
        return Err(err(j, "only <pad> may follow <eos>"));
    }
    Ok((formula, AnsatzCircuit { n, layers }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
}

impl Verdict {
    pub fn valid() -> Self {
        Self { valid: true, reason: None }
    }

    pub fn invalid(reason: impl Into<String>) -> Self {
        Self {
            valid: false,
            reason: Some(reason.into()),
        }
    }
}

/// Grammar, length, qubit range and per-layer disjointness checks.
pub fn validate_tokens(seq: &TokenSequence, n: usize) -> Verdict {
    if seq.len() > MAX_TOKENS {
        return Verdict::invalid(format!("sequence has {} tokens, limit {MAX_TOKENS}", seq.len()));
    }
    if !seq.tokens.contains(&Token::Eos) {
        return Verdict::invalid("missing <eos>");
    }
    match detokenize(seq, n) {
        Err(e) => Verdict::invalid(e.to_string()),
        Ok((_, circuit)) => match circuit.validate() {
            Ok(()) => Verdict::valid(),
            Err(e) => Verdict::invalid(e.to_string()),
        },
    }
}

/// Fixed token-to-id table for formulas over at most `n_max` variables.
///
/// Ids: `<pad>` = 0, then the other special tokens, positive then negative
/// literals, the operator pool in pool order, and the angle bins ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub n_max: usize,
    pub angle_scheme: String,
    pub tokens: Vec<String>,
}

impl Vocabulary {
    pub fn new(n_max: usize) -> Result<Self> {
        let mut tokens: Vec<String> = [
            Token::Pad,
            Token::Bos,
            Token::EndOfFormula,
            Token::Eos,
            Token::NewLayer,
            Token::Separator,
        ]
        .iter()
        .map(|t| t.to_string())
        .collect();
        for neg in [false, true] {
            for v in 1..=n_max as u32 {
                tokens.push(Literal::new(v, neg)?.to_string());
            }
        }
        tokens.extend(build_pool(n_max)?.iter().map(|op| op.name()));
        tokens.extend((MIN_BIN..=MAX_BIN).map(|k| Token::Angle(k).to_string()));
        Ok(Self {
            n_max,
            angle_scheme: ANGLE_SCHEME.to_string(),
            tokens,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id_of(&self, token: &Token) -> Option<u32> {
        let s = token.to_string();
        self.tokens.iter().position(|t| *t == s).map(|i| i as u32)
    }

    pub fn encode(&self, seq: &TokenSequence) -> Result<Vec<u32>> {
        seq.tokens
            .iter()
            .enumerate()
            .map(|(i, t)| {
                self.id_of(t).ok_or_else(|| Error::Parse {
                    index: i,
                    token: t.to_string(),
                    reason: "not in vocabulary".into(),
                })
            })
            .collect()
    }

    pub fn decode(&self, ids: &[u32]) -> Result<TokenSequence> {
        let strings = ids
            .iter()
            .enumerate()
            .map(|(i, id)| {
                self.tokens.get(*id as usize).map(String::as_str).ok_or_else(|| Error::Parse {
                    index: i,
                    token: id.to_string(),
                    reason: "id outside vocabulary".into(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        TokenSequence::from_strings(strings)
    }
}
