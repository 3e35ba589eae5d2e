//! The mixer-operator pool and its gradient scoring.
//!
//! Pool contents for `n` qubits: the global X mixer, `X_i` and `Y_i` on every
//! qubit, `X_iX_j` and `Y_iY_j` on unordered pairs, and `X_iY_j`, `X_iZ_j`,
//! `Y_iZ_j` on ordered pairs. `Z`-only strings commute with the clause
//! Hamiltonian and are left out. Symmetric pairs are stored once, so the
//! pool has `1 + 2n + 4n(n-1)` members.
//!
//! Qubit indices are zero-based in code and one-based in operator names
//! (`"XMIXER"`, `"X3"`, `"X1X4"`, `"Y2Z5"`).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::sim::{score_evolved, CostDiagonal, PauliString, StateVector};
use crate::{Error, Result};

/// Default minimum `|score|` for an operator to become a tiling candidate.
pub const GRADIENT_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn letter(self) -> char {
        match self {
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        }
    }

    fn from_letter(c: char) -> Option<Self> {
        match c {
            'X' => Some(Axis::X),
            'Y' => Some(Axis::Y),
            'Z' => Some(Axis::Z),
            _ => None,
        }
    }

    fn masks(self, qubit: usize) -> (u64, u64) {
        let bit = 1u64 << qubit;
        match self {
            Axis::X => (bit, 0),
            Axis::Y => (bit, bit),
            Axis::Z => (0, bit),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PoolOperator {
    /// `sum_k X_k`.
    GlobalX,
    Single { axis: Axis, qubit: usize },
    Pair {
        first: Axis,
        q1: usize,
        second: Axis,
        q2: usize,
    },
}

impl PoolOperator {
    pub fn single(axis: Axis, qubit: usize) -> Result<Self> {
        if axis == Axis::Z {
            return Err(Error::InvalidOperator(
                "single-qubit Z commutes with the cost Hamiltonian".into(),
            ));
        }
        Ok(PoolOperator::Single { axis, qubit })
    }

    /// Builds a two-qubit operator in its stored form: `XX`/`YY` with the
    /// smaller qubit first, mixed types ordered `X < Y < Z` by axis.
    pub fn pair(a1: Axis, q1: usize, a2: Axis, q2: usize) -> Result<Self> {
        if q1 == q2 {
            return Err(Error::InvalidOperator(format!(
                "two-qubit operator acts twice on qubit {}",
                q1 + 1
            )));
        }
        if a1 == Axis::Z && a2 == Axis::Z {
            return Err(Error::InvalidOperator(
                "ZZ commutes with the cost Hamiltonian".into(),
            ));
        }
        let (first, q1, second, q2) = if a1 == a2 {
            if q1 < q2 {
                (a1, q1, a2, q2)
            } else {
                (a2, q2, a1, q1)
            }
        } else if a1 < a2 {
            (a1, q1, a2, q2)
        } else {
            (a2, q2, a1, q1)
        };
        Ok(PoolOperator::Pair {
            first,
            q1,
            second,
            q2,
        })
    }

    pub fn support_mask(&self, n: usize) -> u64 {
        match *self {
            PoolOperator::GlobalX => {
                if n >= 64 {
                    u64::MAX
                } else {
                    (1u64 << n) - 1
                }
            }
            PoolOperator::Single { qubit, .. } => 1u64 << qubit,
            PoolOperator::Pair { q1, q2, .. } => 1u64 << q1 | 1u64 << q2,
        }
    }

    pub fn support(&self, n: usize) -> Vec<usize> {
        let mask = self.support_mask(n);
        (0..64).filter(|k| mask >> k & 1 == 1).collect()
    }

    /// Commuting Pauli strings whose sum is this operator.
    pub fn pauli_terms(&self, n: usize) -> Vec<PauliString> {
        match *self {
            PoolOperator::GlobalX => (0..n)
                .map(|k| PauliString {
                    x_mask: 1 << k,
                    z_mask: 0,
                })
                .collect(),
            PoolOperator::Single { axis, qubit } => {
                let (x_mask, z_mask) = axis.masks(qubit);
                vec![PauliString { x_mask, z_mask }]
            }
            PoolOperator::Pair {
                first,
                q1,
                second,
                q2,
            } => {
                let (x1, z1) = first.masks(q1);
                let (x2, z2) = second.masks(q2);
                vec![PauliString {
                    x_mask: x1 | x2,
                    z_mask: z1 | z2,
                }]
            }
        }
    }

    /// True for the global mixer, `X_i` and `X_iX_j`.
    pub fn is_pure_x(&self) -> bool {
        match *self {
            PoolOperator::GlobalX => true,
            PoolOperator::Single { axis, .. } => axis == Axis::X,
            PoolOperator::Pair { first, second, .. } => first == Axis::X && second == Axis::X,
        }
    }

    /// Operator family without qubit indices: `XMIXER`, `X`, `Y`, `XX`, `YY`,
    /// `XY`, `XZ`, `YZ`.
    pub fn family(&self) -> String {
        match *self {
            PoolOperator::GlobalX => "XMIXER".into(),
            PoolOperator::Single { axis, .. } => format!("{}", axis.letter()),
            PoolOperator::Pair { first, second, .. } => {
                format!("{}{}", first.letter(), second.letter())
            }
        }
    }

    pub fn name(&self) -> String {
        format!("{self}")
    }
}

impl fmt::Display for PoolOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            PoolOperator::GlobalX => f.write_str("XMIXER"),
            PoolOperator::Single { axis, qubit } => write!(f, "{}{}", axis.letter(), qubit + 1),
            PoolOperator::Pair {
                first,
                q1,
                second,
                q2,
            } => write!(
                f,
                "{}{}{}{}",
                first.letter(),
                q1 + 1,
                second.letter(),
                q2 + 1
            ),
        }
    }
}

impl FromStr for PoolOperator {
    type Err = Error;

    /// Accepts any ordering of a two-qubit name (`"Z5Y2"` parses to `Y2Z5`).
    fn from_str(s: &str) -> Result<Self> {
        if s == "XMIXER" {
            return Ok(PoolOperator::GlobalX);
        }
        let bad = || Error::InvalidOperator(format!("unknown operator {s:?}"));
        let mut factors = Vec::with_capacity(2);
        let mut chars = s.char_indices().peekable();
        while let Some((start, c)) = chars.next() {
            let axis = Axis::from_letter(c).ok_or_else(bad)?;
            let digits_start = start + 1;
            let mut end = digits_start;
            while let Some(&(i, d)) = chars.peek() {
                if !d.is_ascii_digit() {
                    break;
                }
                end = i + 1;
                chars.next();
            }
            let digits = &s[digits_start..end];
            if digits.is_empty() || digits.starts_with('0') {
                return Err(bad());
            }
            let q: usize = digits.parse().map_err(|_| bad())?;
            if q > 64 {
                return Err(bad());
            }
            factors.push((axis, q - 1));
        }
        match factors.as_slice() {
            [(axis, q)] => PoolOperator::single(*axis, *q),
            [(a1, q1), (a2, q2)] => PoolOperator::pair(*a1, *q1, *a2, *q2),
            _ => Err(bad()),
        }
    }
}

impl serde::Serialize for PoolOperator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for PoolOperator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let name = <alloc::borrow::Cow<'de, str>>::deserialize(d)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

pub fn pool_size(n: usize) -> usize {
    1 + 2 * n + 4 * n * n.saturating_sub(1)
}

pub fn build_pool(n: usize) -> Result<Vec<PoolOperator>> {
    if n < 2 {
        return Err(Error::InvalidDimension(format!(
            "operator pool needs at least 2 qubits, got {n}"
        )));
    }
    if n > 64 {
        return Err(Error::InvalidDimension(format!(
            "operator pool supports at most 64 qubits, got {n}"
        )));
    }
    let mut pool = Vec::with_capacity(pool_size(n));
    pool.push(PoolOperator::GlobalX);
    for q in 0..n {
        pool.push(PoolOperator::Single { axis: Axis::X, qubit: q });
        pool.push(PoolOperator::Single { axis: Axis::Y, qubit: q });
    }
    for (a1, a2) in [(Axis::X, Axis::X), (Axis::Y, Axis::Y)] {
        for i in 0..n {
            for j in i + 1..n {
                pool.push(PoolOperator::pair(a1, i, a2, j)?);
            }
        }
    }
    for (a1, a2) in [(Axis::X, Axis::Y), (Axis::X, Axis::Z), (Axis::Y, Axis::Z)] {
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    pool.push(PoolOperator::pair(a1, i, a2, j)?);
                }
            }
        }
    }
    debug_assert_eq!(pool.len(), pool_size(n));
    Ok(pool)
}

/// Gradient scores for a whole pool at one probe angle.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPool {
    /// Every pool member with its score, in pool order.
    pub scores: Vec<(PoolOperator, f64)>,
    pub gamma0: f64,
    pub threshold: f64,
}

impl ScoredPool {
    /// Operators with `|score| >= threshold`, in pool order.
    pub fn candidates(&self) -> impl Iterator<Item = &(PoolOperator, f64)> + '_ {
        self.scores
            .iter()
            .filter(move |(_, s)| s.abs() >= self.threshold)
    }

    pub fn max_abs_score(&self) -> f64 {
        self.scores.iter().map(|(_, s)| s.abs()).fold(0.0, f64::max)
    }
}

/// Scores every operator against `phi = exp(-i gamma0 H_C) psi`, computed
/// once and shared.
pub fn score_pool(
    psi: &StateVector,
    diag: &CostDiagonal,
    gamma0: f64,
    pool: &[PoolOperator],
    threshold: f64,
) -> Result<ScoredPool> {
    let mut phi = psi.clone();
    phi.apply_phase(diag, gamma0)?;
    let scores = pool
        .iter()
        .map(|op| score_evolved(&phi, diag, op).map(|s| (*op, s)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoredPool {
        scores,
        gamma0,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;
    use alloc::string::ToString;

    #[test]
    fn pool_sizes() {
        assert_eq!(build_pool(2).unwrap().len(), 13);
        assert_eq!(build_pool(3).unwrap().len(), 31);
        for n in 2..=14 {
            let pool = build_pool(n).unwrap();
            assert_eq!(pool.len(), 1 + 2 * n + 4 * n * (n - 1));
            let unique: BTreeSet<String> = pool.iter().map(|p| p.name()).collect();
            assert_eq!(unique.len(), pool.len());
        }
        assert!(build_pool(1).is_err());
    }

    #[test]
    fn no_z_only_strings_and_support_sizes() {
        let n = 5;
        for op in build_pool(n).unwrap() {
            for term in op.pauli_terms(n) {
                assert_ne!(term.x_mask, 0, "{op}");
            }
            let k = op.support(n).len();
            assert!(k == 1 || k == 2 || (k == n && op == PoolOperator::GlobalX));
        }
    }

    #[test]
    fn names_round_trip() {
        for op in build_pool(11).unwrap() {
            assert_eq!(op.name().parse::<PoolOperator>().unwrap(), op);
        }
        assert_eq!("X1X4".parse::<PoolOperator>().unwrap().to_string(), "X1X4");
        assert_eq!("X4X1".parse::<PoolOperator>().unwrap().to_string(), "X1X4");
        assert_eq!("Z5Y2".parse::<PoolOperator>().unwrap().to_string(), "Y2Z5");
        assert_eq!("Y7X3".parse::<PoolOperator>().unwrap().to_string(), "X3Y7");
        for bad in ["Z1", "Z1Z2", "X1X1", "X0", "X", "Q1", "X1Y2Z3", "x1", "X01"] {
            assert!(bad.parse::<PoolOperator>().is_err(), "{bad}");
        }
    }
}
