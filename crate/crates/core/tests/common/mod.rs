// Independent reference implementations used by the integration suites.
#![allow(dead_code)]

use mosaic_qaoa_core::engine::{AnsatzCircuit, AnsatzLayer};
use mosaic_qaoa_core::pool::{build_pool, Axis, PoolOperator};
use mosaic_qaoa_core::sat::{
    generate_balanced, generate_uniform, max_sat_opt, CnfFormula, Provenance,
};
use mosaic_qaoa_core::tiling::IncompatibilityGraph;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Violated-clause count by evaluating each DIMACS literal directly.
pub fn brute_force_diagonal(f: &CnfFormula) -> Vec<f64> {
    let n = f.n();
    (0..1u64 << n)
        .map(|b| {
            f.clauses()
                .iter()
                .filter(|c| {
                    c.literals().iter().all(|l| {
                        let d = l.to_dimacs();
                        let value = (b >> (d.unsigned_abs() - 1)) & 1 == 1;
                        if d > 0 {
                            !value
                        } else {
                            value
                        }
                    })
                })
                .count() as f64
        })
        .collect()
}

pub fn brute_force_opt(f: &CnfFormula) -> usize {
    let diag = brute_force_diagonal(f);
    f.m() - diag.iter().fold(f64::INFINITY, |a, &b| a.min(b)) as usize
}

type Matrix = Vec<Vec<Complex64>>;

fn pauli_2x2(letter: char) -> [[Complex64; 2]; 2] {
    let (o, z) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    let i = Complex64::new(0.0, 1.0);
    match letter {
        'I' => [[o, z], [z, o]],
        'X' => [[z, o], [o, z]],
        'Y' => [[z, -i], [i, z]],
        'Z' => [[o, z], [z, -o]],
        _ => unreachable!(),
    }
}

/// Dense `2^n x 2^n` matrix of a Pauli string given per-qubit letters.
pub fn dense_pauli(letters: &[char]) -> Matrix {
    let n = letters.len();
    let dim = 1usize << n;
    let mats: Vec<_> = letters.iter().map(|&c| pauli_2x2(c)).collect();
    (0..dim)
        .map(|r| {
            (0..dim)
                .map(|c| {
                    let mut v = Complex64::new(1.0, 0.0);
                    for (k, m) in mats.iter().enumerate() {
                        v *= m[(r >> k) & 1][(c >> k) & 1];
                    }
                    v
                })
                .collect()
        })
        .collect()
}

/// Pauli letters for each commuting term of a pool operator.
pub fn operator_letters(op: &PoolOperator, n: usize) -> Vec<Vec<char>> {
    let letter = |a: Axis| match a {
        Axis::X => 'X',
        Axis::Y => 'Y',
        Axis::Z => 'Z',
    };
    match *op {
        PoolOperator::GlobalX => (0..n)
            .map(|k| (0..n).map(|q| if q == k { 'X' } else { 'I' }).collect())
            .collect(),
        PoolOperator::Single { axis, qubit } => {
            vec![(0..n).map(|q| if q == qubit { letter(axis) } else { 'I' }).collect()]
        }
        PoolOperator::Pair { first, q1, second, q2 } => vec![(0..n)
            .map(|q| {
                if q == q1 {
                    letter(first)
                } else if q == q2 {
                    letter(second)
                } else {
                    'I'
                }
            })
            .collect()],
    }
}

pub fn mat_vec(m: &Matrix, v: &[Complex64]) -> Vec<Complex64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// `exp(-i beta P) = cos(beta) I - i sin(beta) P` for a Pauli string `P`.
pub fn dense_rotation(letters: &[char], beta: f64) -> Matrix {
    let p = dense_pauli(letters);
    let dim = p.len();
    let (c, s) = (beta.cos(), beta.sin());
    (0..dim)
        .map(|r| {
            (0..dim)
                .map(|col| {
                    let id = if r == col { c } else { 0.0 };
                    Complex64::new(id, 0.0) - Complex64::new(0.0, s) * p[r][col]
                })
                .collect()
        })
        .collect()
}

/// Gate-by-gate dense evaluation of a circuit from `|+>^n`.
pub fn dense_evaluate(circuit: &AnsatzCircuit, diag: &[f64]) -> (Vec<Complex64>, f64) {
    let n = circuit.n;
    let dim = 1usize << n;
    let mut psi = vec![Complex64::new(1.0 / (dim as f64).sqrt(), 0.0); dim];
    for layer in &circuit.layers {
        let phase: Matrix = (0..dim)
            .map(|r| {
                (0..dim)
                    .map(|c| {
                        if r == c {
                            Complex64::from_polar(1.0, -layer.gamma * diag[r])
                        } else {
                            Complex64::new(0.0, 0.0)
                        }
                    })
                    .collect()
            })
            .collect();
        psi = mat_vec(&phase, &psi);
        for (op, beta) in &layer.mixers {
            for letters in operator_letters(op, n) {
                psi = mat_vec(&dense_rotation(&letters, *beta), &psi);
            }
        }
    }
    let e = psi.iter().zip(diag).map(|(a, v)| a.norm_sqr() * v).sum();
    (psi, e)
}

/// A random formula: uniform or balanced, `n` variables.
pub fn random_formula(n: u32, seed: u64) -> CnfFormula {
    if seed % 2 == 0 || n < 4 {
        generate_uniform(n, seed).unwrap()
    } else {
        generate_balanced(n, seed).unwrap()
    }
}

/// First `count` satisfiable formulas of the given kind, scanning seeds from
/// `start`.
pub fn satisfiable_formulas(n: u32, count: usize, kind: Provenance, start: u64) -> Vec<CnfFormula> {
    let mut out = Vec::new();
    let mut seed = start;
    while out.len() < count {
        let f = match kind {
            Provenance::Balanced => generate_balanced(n, seed),
            _ => generate_uniform(n, seed),
        };
        seed += 1;
        let Ok(f) = f else { continue };
        if max_sat_opt(&f).unwrap().opt == f.m() {
            out.push(f);
        }
    }
    out
}

/// Random circuit with 1..=max_layers layers of support-disjoint pool
/// operators and angles in `(-pi, pi)`.
pub fn random_circuit(n: usize, max_layers: usize, rng: &mut Rng8) -> AnsatzCircuit {
    let pool = build_pool(n).unwrap();
    let layers = rng.random_range(1..=max_layers);
    let mut out = Vec::new();
    for _ in 0..layers {
        let mut ops = pool.clone();
        ops.shuffle(rng);
        let want = rng.random_range(1..=3);
        let mut used = 0u64;
        let mut mixers = Vec::new();
        for op in ops {
            let mask = op.support_mask(n);
            if used & mask == 0 {
                used |= mask;
                mixers.push((op, rng.random_range(-3.1..3.1)));
                if mixers.len() == want {
                    break;
                }
            }
        }
        out.push(AnsatzLayer {
            gamma: rng.random_range(-3.1..3.1),
            mixers,
        });
    }
    AnsatzCircuit { n, layers: out }
}

/// Random weighted graph on `nodes` vertices with edge probability `p`.
pub fn random_graph(nodes: usize, p: f64, rng: &mut Rng8) -> IncompatibilityGraph {
    let labels = (0..nodes).map(|i| format!("v{i:02}")).collect();
    let weights = (0..nodes)
        .map(|_| {
            // Coarse weights make ties common.
            if rng.random_bool(0.3) {
                rng.random_range(1..5) as f64 / 4.0
            } else {
                rng.random_range(0.0..1.0)
            }
        })
        .collect();
    let mut edges = Vec::new();
    for u in 0..nodes {
        for v in u + 1..nodes {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    IncompatibilityGraph::from_edges(labels, weights, &edges)
}

/// Maximum independent-set weight by enumerating every independent set.
pub fn enumerate_mwis(g: &IncompatibilityGraph) -> f64 {
    fn go(g: &IncompatibilityGraph, next: usize, chosen: &mut Vec<usize>, weight: f64, best: &mut f64) {
        if weight > *best {
            *best = weight;
        }
        for v in next..g.len() {
            if chosen.iter().all(|&u| !g.has_edge(u, v)) {
                chosen.push(v);
                go(g, v + 1, chosen, weight + g.weights()[v], best);
                chosen.pop();
            }
        }
    }
    let mut best = 0.0;
    go(g, 0, &mut Vec::new(), 0.0, &mut best);
    best
}

/// Central difference of `f` at `x` along coordinate `i`.
pub fn central_difference(f: &dyn Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut plus = x.to_vec();
    let mut minus = x.to_vec();
    plus[i] += h;
    minus[i] -= h;
    (f(&plus) - f(&minus)) / (2.0 * h)
}
