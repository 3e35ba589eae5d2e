//! Exact statevector simulation for the diagonal clause Hamiltonian.
//!
//! Basis index bit `k` is qubit `k`, which carries variable `x_{k+1}`;
//! `|1>` means true.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::{cos, sin, sqrt};
use crate::pool::PoolOperator;
use crate::sat::CnfFormula;
use crate::{Error, Result};

/// Default qubit cap for the simulator (2^20 amplitudes).
pub const SIM_CAP: u32 = 20;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Diagonal of the clause Hamiltonian: entry `b` is the number of clauses
/// violated by assignment `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostDiagonal {
    values: Vec<f64>,
    n: usize,
    m: usize,
    ground_energy: f64,
}

impl CostDiagonal {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn ground_energy(&self) -> f64 {
        self.ground_energy
    }

    pub fn energy_of(&self, basis: usize) -> f64 {
        self.values[basis]
    }
}

pub fn build_cost_diag(f: &CnfFormula) -> Result<CostDiagonal> {
    build_cost_diag_capped(f, SIM_CAP)
}

/// Sums the clause penalty products over all clauses. A clause's product of
/// literal penalties is 1 exactly on the assignments that falsify all three
/// literals, i.e. where the clause's support bits equal its violating pattern.
pub fn build_cost_diag_capped(f: &CnfFormula, cap: u32) -> Result<CostDiagonal> {
    if f.n() > cap {
        return Err(Error::Capacity {
            what: "simulator qubits",
            got: f.n() as usize,
            limit: cap as usize,
        });
    }
    let dim = 1usize << f.n();
    let mut values = vec![0.0; dim];
    for clause in f.clauses() {
        let mask = clause.support_mask() as usize;
        let pattern = clause.violating_pattern() as usize;
        for (b, v) in values.iter_mut().enumerate() {
            if b & mask == pattern {
                *v += 1.0;
            }
        }
    }
    let ground_energy = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(CostDiagonal {
        values,
        n: f.n() as usize,
        m: f.m(),
        ground_energy,
    })
}

/// A Pauli string stored as flip and phase masks: `X` sets the x bit, `Z`
/// the z bit, `Y` both.
///
/// `P|b> = i^{#Y} (-1)^{popcount(b & z)} |b ^ x>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    pub x_mask: u64,
    pub z_mask: u64,
}

impl PauliString {
    pub fn support_mask(&self) -> u64 {
        self.x_mask | self.z_mask
    }

    fn y_phase(&self) -> Complex64 {
        match (self.x_mask & self.z_mask).count_ones() % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => I,
            2 => Complex64::new(-1.0, 0.0),
            _ => -I,
        }
    }

    /// Coefficient of `P|b>` on `|b ^ x>`.
    #[inline]
    fn phase(&self, y_phase: Complex64, b: usize) -> Complex64 {
        if (b as u64 & self.z_mask).count_ones() % 2 == 1 {
            -y_phase
        } else {
            y_phase
        }
    }

    /// `<left| P |right>`.
    pub fn matrix_element(&self, left: &[Complex64], right: &[Complex64]) -> Complex64 {
        let yp = self.y_phase();
        let x = self.x_mask as usize;
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, l) in left.iter().enumerate() {
            let b = c ^ x;
            acc += l.conj() * self.phase(yp, b) * right[b];
        }
        acc
    }

    /// `<left| diag · P |right>`.
    pub fn weighted_matrix_element(
        &self,
        left: &[Complex64],
        diag: &[f64],
        right: &[Complex64],
    ) -> Complex64 {
        let yp = self.y_phase();
        let x = self.x_mask as usize;
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, l) in left.iter().enumerate() {
            let b = c ^ x;
            acc += l.conj() * diag[c] * self.phase(yp, b) * right[b];
        }
        acc
    }

    /// In-place `exp(-i beta P)` via `cos(beta) I - i sin(beta) P` on bit pairs.
    pub fn rotate(&self, amps: &mut [Complex64], beta: f64) {
        let (c, s) = (cos(beta), sin(beta));
        let yp = self.y_phase();
        let x = self.x_mask as usize;
        if x == 0 {
            for (b, a) in amps.iter_mut().enumerate() {
                let p = self.phase(yp, b);
                *a *= Complex64::new(c, 0.0) - I * s * p;
            }
            return;
        }
        let low = x & x.wrapping_neg();
        let mis = -I * s;
        for b in 0..amps.len() {
            if b & low != 0 {
                continue;
            }
            let b2 = b ^ x;
            let (a1, a2) = (amps[b], amps[b2]);
            amps[b] = a1 * c + mis * self.phase(yp, b2) * a2;
            amps[b2] = a2 * c + mis * self.phase(yp, b) * a1;
        }
    }
}

/// Normalized complex amplitudes over `2^n` basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
    n: usize,
}

impl StateVector {
    /// `|+>^n`.
    pub fn plus(n: usize) -> Self {
        let dim = 1usize << n;
        let a = 1.0 / sqrt(dim as f64);
        Self {
            amps: vec![Complex64::new(a, 0.0); dim],
            n,
        }
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1usize << n];
        amps[index] = Complex64::new(1.0, 0.0);
        Self { amps, n }
    }

    /// Wraps raw amplitudes; rejects wrong lengths and norms off by more
    /// than 1e-10.
    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1usize << n {
            return Err(Error::DimensionMismatch {
                expected: 1usize << n,
                got: amps.len(),
            });
        }
        let state = Self { amps, n };
        let norm = state.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NumericFailure(alloc::format!(
                "state norm {norm} is not 1"
            )));
        }
        Ok(state)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        sqrt(self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn check_diag(&self, diag: &CostDiagonal) -> Result<()> {
        if diag.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: diag.dim(),
            });
        }
        Ok(())
    }

    /// `exp(-i gamma H_C)`.
    pub fn apply_phase(&mut self, diag: &CostDiagonal, gamma: f64) -> Result<()> {
        self.check_diag(diag)?;
        apply_diagonal_phase(&mut self.amps, diag.values(), gamma);
        Ok(())
    }

    /// `exp(-i beta A)` for a pool operator. The global mixer is applied as
    /// `n` commuting single-qubit X rotations sharing `beta`.
    pub fn apply_pauli_rotation(&mut self, op: &PoolOperator, beta: f64) -> Result<()> {
        check_support(op, self.n)?;
        for term in op.pauli_terms(self.n) {
            term.rotate(&mut self.amps, beta);
        }
        Ok(())
    }

    /// `<psi|H_C|psi>`, summed in index order.
    pub fn expectation(&self, diag: &CostDiagonal) -> Result<f64> {
        self.check_diag(diag)?;
        Ok(self
            .amps
            .iter()
            .zip(diag.values())
            .map(|(a, v)| v * a.norm_sqr())
            .sum())
    }

    /// Draws `shots` basis states from `|amp|^2`, deterministic in `seed`.
    pub fn sample(&self, shots: u64, seed: u64) -> ShotCounts {
        let mut cumulative = Vec::with_capacity(self.dim());
        let mut total = 0.0;
        for a in &self.amps {
            total += a.norm_sqr();
            cumulative.push(total);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = BTreeMap::new();
        for _ in 0..shots {
            let u = rng.random::<f64>() * total;
            let mut idx = cumulative.partition_point(|&c| c <= u);
            if idx >= self.dim() {
                // u rounded onto the total; take the last state with mass.
                idx = cumulative.partition_point(|&c| c < total);
            }
            *counts.entry(idx as u64).or_insert(0) += 1;
        }
        ShotCounts { counts, shots }
    }
}

pub(crate) fn apply_diagonal_phase(amps: &mut [Complex64], diag: &[f64], gamma: f64) {
    for (a, v) in amps.iter_mut().zip(diag) {
        let t = -gamma * v;
        *a *= Complex64::new(cos(t), sin(t));
    }
}

pub(crate) fn check_support(op: &PoolOperator, n: usize) -> Result<()> {
    if n == 0 || n < 64 && op.support_mask(n) >> n != 0 {
        return Err(Error::SupportOutOfRange {
            support: op.support(n),
            n,
        });
    }
    Ok(())
}

/// Gradient score of appending `exp(-i beta A)` after a probe evolution
/// `phi = exp(-i gamma0 H_C) psi`:
///
/// `score = -dE/dbeta |_0 = -2 Im <phi| H_C A |phi>`.
///
/// The value is real by construction; its magnitude is the operator weight
/// used for tiling.
pub fn gradient_score(
    psi: &StateVector,
    diag: &CostDiagonal,
    op: &PoolOperator,
    gamma0: f64,
) -> Result<f64> {
    let mut phi = psi.clone();
    phi.apply_phase(diag, gamma0)?;
    score_evolved(&phi, diag, op)
}

/// Score against an already-evolved state `phi`.
pub fn score_evolved(phi: &StateVector, diag: &CostDiagonal, op: &PoolOperator) -> Result<f64> {
    phi.check_diag(diag)?;
    check_support(op, phi.n)?;
    let z: Complex64 = op
        .pauli_terms(phi.n)
        .iter()
        .map(|t| t.weighted_matrix_element(&phi.amps, diag.values(), &phi.amps))
        .sum();
    Ok(-2.0 * z.im)
}

/// Measurement outcomes keyed by basis index.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ShotCounts {
    pub counts: BTreeMap<u64, u64>,
    pub shots: u64,
}

impl ShotCounts {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}
