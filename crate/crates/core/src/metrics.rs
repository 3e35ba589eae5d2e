//! Approximation ratios, the stuck flag, error rates and the literal-clause
//! graph.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::engine::RunResult;
use crate::sat::CnfFormula;
use crate::sim::{CostDiagonal, ShotCounts};

/// Approximation-ratio threshold used for "layers to target".
pub const AR_TARGET: f64 = 0.999;

/// Default number of measurement shots.
pub const DEFAULT_SHOTS: u64 = 1000;

/// `(m - energy) / opt`, clamped to `[0, 1]`. Clamping is logged.
pub fn approximation_ratio(energy: f64, m: usize, opt: usize) -> f64 {
    let ar = (m as f64 - energy) / opt.max(1) as f64;
    if !(0.0..=1.0).contains(&ar) {
        // Round-off above 1 is routine for solved instances; only report
        // real excursions.
        if !(-1e-9..=1.0 + 1e-9).contains(&ar) {
            log::warn!("approximation ratio {ar} clamped (energy {energy}, m {m}, opt {opt})");
        }
        return ar.clamp(0.0, 1.0);
    }
    ar
}

/// True iff every sampled basis state violates more clauses than the ground
/// state. Empty counts are stuck.
pub fn stuck(counts: &ShotCounts, diag: &CostDiagonal) -> bool {
    counts
        .counts
        .iter()
        .filter(|(_, c)| **c > 0)
        .all(|(b, _)| diag.energy_of(*b as usize) > diag.ground_energy())
}

/// Best AR over the sampled basis states.
pub fn best_shot_ar(counts: &ShotCounts, diag: &CostDiagonal, opt: usize) -> f64 {
    counts
        .counts
        .iter()
        .filter(|(_, c)| **c > 0)
        .map(|(b, _)| approximation_ratio(diag.energy_of(*b as usize), diag.m(), opt))
        .fold(0.0, f64::max)
}

/// One-based index of the first layer whose AR reaches `target`.
pub fn layers_to_target(trace: &[f64], m: usize, opt: usize, target: f64) -> Option<usize> {
    trace
        .iter()
        .position(|&e| approximation_ratio(e, m, opt) >= target)
        .map(|i| i + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub ar_expectation: f64,
    pub ar_best_shot: f64,
    pub stuck: bool,
    pub layers_to_999: Option<usize>,
    pub parameter_count: usize,
}

impl EvalReport {
    /// Report for a finished engine run. The final state is sampled with
    /// `shots` shots from `seed`.
    pub fn for_run(run: &RunResult, diag: &CostDiagonal, opt: usize, shots: u64, seed: u64) -> Self {
        let counts = run.final_state.sample(shots, seed);
        Self {
            ar_expectation: approximation_ratio(run.final_energy, diag.m(), opt),
            ar_best_shot: best_shot_ar(&counts, diag, opt),
            stuck: stuck(&counts, diag),
            layers_to_999: layers_to_target(&run.energy_trace, diag.m(), opt, AR_TARGET),
            parameter_count: run.parameter_count(),
        }
    }
}

/// `(formula error rate, circuit error rate)` in percent. A formula errs when
/// none of its samples is valid; formulas without samples are skipped.
pub fn error_rates(samples: &[Vec<bool>]) -> (f64, f64) {
    let formulas: Vec<&Vec<bool>> = samples.iter().filter(|s| !s.is_empty()).collect();
    if formulas.is_empty() {
        return (0.0, 0.0);
    }
    let failed_formulas = formulas.iter().filter(|s| s.iter().all(|v| !v)).count();
    let total: usize = formulas.iter().map(|s| s.len()).sum();
    let invalid: usize = formulas.iter().map(|s| s.iter().filter(|v| !**v).count()).sum();
    (
        100.0 * failed_formulas as f64 / formulas.len() as f64,
        100.0 * invalid as f64 / total as f64,
    )
}

/// Bipartite literal-clause graph: nodes `0..n` are `x_1..x_n`, `n..2n` are
/// the negations, `2n..2n+m` are clauses in formula order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiteralClauseGraph {
    pub node_count: usize,
    /// `(literal node, clause node)` pairs in clause order.
    pub edges: Vec<(usize, usize)>,
}

impl LiteralClauseGraph {
    pub fn degree(&self, node: usize) -> usize {
        self.edges.iter().filter(|(a, b)| *a == node || *b == node).count()
    }
}

pub fn build_lcg(f: &CnfFormula) -> LiteralClauseGraph {
    let n = f.n() as usize;
    let mut edges = Vec::with_capacity(3 * f.m());
    for (j, clause) in f.clauses().iter().enumerate() {
        for lit in clause.literals() {
            let node = lit.qubit() + if lit.is_negated() { n } else { 0 };
            edges.push((node, 2 * n + j));
        }
    }
    LiteralClauseGraph {
        node_count: 2 * n + f.m(),
        edges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sat::{Clause, Literal, Provenance};
    use crate::sim::{build_cost_diag, StateVector};
    use alloc::collections::BTreeMap;
    use alloc::vec;

    fn single_clause() -> CnfFormula {
        let c = Clause::new(Literal::positive(1), Literal::positive(2), Literal::positive(3)).unwrap();
        CnfFormula::new(3, vec![c], Provenance::External, 0).unwrap()
    }

    fn counts(pairs: &[(u64, u64)]) -> ShotCounts {
        ShotCounts {
            counts: pairs.iter().copied().collect::<BTreeMap<_, _>>(),
            shots: pairs.iter().map(|p| p.1).sum(),
        }
    }

    #[test]
    fn ar_examples() {
        assert_eq!(approximation_ratio(0.0, 5, 5), 1.0);
        assert_eq!(approximation_ratio(1.0, 9, 8), 1.0);
        let diag = build_cost_diag(&single_clause()).unwrap();
        let e = StateVector::plus(3).expectation(&diag).unwrap();
        assert!((approximation_ratio(e, 1, 1) - 0.875).abs() < 1e-15);
        assert_eq!(approximation_ratio(-0.5, 1, 1), 1.0);
        assert_eq!(approximation_ratio(3.0, 2, 1), 0.0);
    }

    #[test]
    fn stuck_examples() {
        let diag = build_cost_diag(&single_clause()).unwrap();
        assert!(!stuck(&counts(&[(7, 1000)]), &diag));
        assert!(stuck(&counts(&[(0, 1000)]), &diag));
        assert!(!stuck(&counts(&[(0, 999), (1, 1)]), &diag));
        assert_eq!(best_shot_ar(&counts(&[(0, 999), (1, 1)]), &diag, 1), 1.0);
    }

    #[test]
    fn layers_to_target_examples() {
        assert_eq!(layers_to_target(&[2.0, 0.0, 0.0], 10, 10, AR_TARGET), Some(2));
        assert_eq!(layers_to_target(&[1.0, 0.1], 10, 10, AR_TARGET), None);
        assert_eq!(layers_to_target(&[], 10, 10, AR_TARGET), None);
    }

    #[test]
    fn error_rate_examples() {
        let mut s = vec![vec![true; 5]; 10];
        assert_eq!(error_rates(&s), (0.0, 0.0));
        s[3] = vec![false; 5];
        assert_eq!(error_rates(&s), (10.0, 10.0));
    }

    #[test]
    fn lcg_single_clause() {
        let g = build_lcg(&single_clause());
        assert_eq!(g.node_count, 7);
        assert_eq!(g.edges, vec![(0, 6), (1, 6), (2, 6)]);
        assert_eq!(g.degree(3), 0);
    }
}
