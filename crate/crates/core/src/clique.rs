//! Clique instances: the two toy fixtures, a seeded random generator and an
//! exhaustive classical solver.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{binomial, MAX_QUBITS};
use crate::hamiltonian::{HamiltonianError, ProblemGraph};

/// Largest number of k-subsets the exhaustive solver will visit.
pub const MAX_SUBSETS: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliqueError {
    #[error(transparent)]
    Graph(#[from] HamiltonianError),
    #[error("edge probability {0} outside [0, 1]")]
    EdgeProbability(f64),
    #[error("weight range [{low}, {high}] is empty, negative or not finite")]
    WeightRange { low: f64, high: f64 },
    #[error("node count {n} outside 2..={max}")]
    NodeCount { n: usize, max: usize },
    #[error("C({n}, {k}) = {count} subsets exceeds the limit of {max}")]
    Capacity { n: usize, k: usize, count: u64, max: u64 },
    #[error("alpha {0} is not a finite number")]
    NonFiniteAlpha(f64),
}

/// A graph together with what is known about its optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliqueInstance {
    pub graph: ProblemGraph,
    pub description: String,
    pub expected: Option<Expected>,
}

/// Optimal subsets (1-based, ascending) and their energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expected {
    pub subsets: Vec<Vec<usize>>,
    pub value: f64,
}

const TOY_WEIGHTS: [f64; 6] = [1.0, 1.0, 1.0, 1.5, 1.5, 1.5];

/// Toy example 1: triangle 1-2-3, path 1-6-5-2 and pendant 6-4.
///
/// Node weights are `[1, 1, 1, 1.5, 1.5, 1.5]` and `k = 3`. The triangle
/// has energy `-3 alpha` and the heavy triple {4,5,6} has `1 - 4.5 alpha`,
/// so the optimum switches at `alpha = 2/3`.
pub fn toy_example_1(alpha: f64) -> Result<CliqueInstance, CliqueError> {
    let edges = [(1, 2), (1, 3), (2, 3), (1, 6), (2, 5), (5, 6), (4, 6)];
    toy_instance(&edges, alpha, "toy example 1")
}

/// Toy example 2: toy example 1 with nodes 1,3 and nodes 5,6 relabelled.
pub fn toy_example_2(alpha: f64) -> Result<CliqueInstance, CliqueError> {
    let edges = [(2, 3), (1, 3), (1, 2), (3, 5), (2, 6), (5, 6), (4, 5)];
    toy_instance(&edges, alpha, "toy example 2")
}

fn toy_instance(edges: &[(usize, usize)], alpha: f64, name: &str) -> Result<CliqueInstance, CliqueError> {
    let graph = ProblemGraph::new(6, edges.iter().copied(), TOY_WEIGHTS.to_vec(), 3, alpha)?;
    let light = -3.0 * alpha;
    let heavy = 1.0 - 4.5 * alpha;
    let expected = if light < heavy {
        Expected { subsets: vec![vec![1, 2, 3]], value: light }
    } else if heavy < light {
        Expected { subsets: vec![vec![4, 5, 6]], value: heavy }
    } else {
        Expected { subsets: vec![vec![1, 2, 3], vec![4, 5, 6]], value: light }
    };
    Ok(CliqueInstance { graph, description: format!("{name}, alpha = {alpha}"), expected: Some(expected) })
}

/// Erdos-Renyi `G(n, p)` with weights uniform on `[weight_low, weight_high]`.
///
/// The generator is `ChaCha8Rng::seed_from_u64(seed)`. Edge coins are drawn
/// first, one `f64` per pair `(i, j)`, `i < j`, in lexicographic order, and
/// an edge is kept when the draw is below `p`. Weights are drawn afterwards
/// for nodes `1..=n`. The instance has `alpha = 0`; use
/// [`ProblemGraph::with_alpha`] to change it.
pub fn random_instance(
    n: usize,
    k: usize,
    edge_probability: f64,
    weight_low: f64,
    weight_high: f64,
    seed: u64,
) -> Result<CliqueInstance, CliqueError> {
    if !(2..=MAX_QUBITS).contains(&n) {
        return Err(CliqueError::NodeCount { n, max: MAX_QUBITS });
    }
    if !(0.0..=1.0).contains(&edge_probability) {
        return Err(CliqueError::EdgeProbability(edge_probability));
    }
    if !(weight_low.is_finite() && weight_high.is_finite() && 0.0 <= weight_low && weight_low <= weight_high) {
        return Err(CliqueError::WeightRange { low: weight_low, high: weight_high });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 1..=n {
        for j in (i + 1)..=n {
            if rng.gen::<f64>() < edge_probability {
                edges.push((i, j));
            }
        }
    }
    let dist = Uniform::new_inclusive(weight_low, weight_high);
    let weights = (0..n).map(|_| dist.sample(&mut rng)).collect();
    let graph = ProblemGraph::new(n, edges, weights, k, 0.0)?;
    Ok(CliqueInstance {
        graph,
        description: format!(
            "random G({n}, {edge_probability}), k = {k}, weights in [{weight_low}, {weight_high}], seed {seed}"
        ),
        expected: None,
    })
}

/// One row of the exhaustive table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetEnergy {
    pub nodes: Vec<usize>,
    pub missing_edges: usize,
    pub energy: f64,
}

/// Exhaustive solution of a clique instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForce {
    /// Every subset attaining the minimum, in lexicographic order.
    pub best: Vec<Vec<usize>>,
    pub best_energy: f64,
    /// All k-subsets sorted by energy, ties in lexicographic order.
    pub table: Vec<SubsetEnergy>,
}

/// Visits all k-subsets with exact rational energies for tie detection.
///
/// `alpha` is taken from the graph and converted exactly.
pub fn brute_force(instance: &CliqueInstance) -> Result<BruteForce, CliqueError> {
    let alpha = instance.graph.alpha();
    let exact = BigRational::from_float(alpha).ok_or(CliqueError::NonFiniteAlpha(alpha))?;
    brute_force_with_alpha(instance, &exact)
}

/// [`brute_force`] with an exact `alpha`, e.g. `2/3`.
///
/// Floating-point energies in the table still use the graph's own `alpha`.
pub fn brute_force_with_alpha(instance: &CliqueInstance, alpha: &BigRational) -> Result<BruteForce, CliqueError> {
    let g = &instance.graph;
    let (n, k) = (g.n(), g.k());
    let count = binomial(n, k);
    if count > MAX_SUBSETS {
        return Err(CliqueError::Capacity { n, k, count, max: MAX_SUBSETS });
    }
    let exact_weights: Vec<BigRational> =
        g.weights().iter().map(|&w| BigRational::from_float(w).expect("weights are validated finite")).collect();

    let mut rows: Vec<(SubsetEnergy, BigRational)> = Vec::with_capacity(count as usize);
    let mut nodes: Vec<usize> = (1..=k).collect();
    loop {
        let mut missing = 0usize;
        for a in 0..k {
            for b in (a + 1)..k {
                if !g.has_edge(nodes[a], nodes[b]) {
                    missing += 1;
                }
            }
        }
        let weight: f64 = nodes.iter().map(|&v| g.weights()[v - 1]).sum();
        let energy = missing as f64 - g.alpha() * weight;
        let exact_weight = nodes.iter().fold(BigRational::zero(), |acc, &v| acc + &exact_weights[v - 1]);
        let exact = BigRational::from_integer(BigInt::from(missing)) - alpha * exact_weight;
        rows.push((SubsetEnergy { nodes: nodes.clone(), missing_edges: missing, energy }, exact));
        if !next_combination(&mut nodes, n) {
            break;
        }
    }
    rows.sort_by(|a, b| a.1.cmp(&b.1));
    let min = rows[0].1.clone();
    let best = rows.iter().take_while(|r| r.1 == min).map(|r| r.0.nodes.clone()).collect();
    let best_energy = min.to_f64().unwrap_or(f64::NAN);
    Ok(BruteForce { best, best_energy, table: rows.into_iter().map(|r| r.0).collect() })
}

/// Advances an ascending k-subset of `1..=n` in lexicographic order.
fn next_combination(nodes: &mut [usize], n: usize) -> bool {
    let k = nodes.len();
    let Some(i) = (0..k).rev().find(|&i| nodes[i] < n - (k - 1 - i)) else {
        return false;
    };
    nodes[i] += 1;
    for j in (i + 1)..k {
        nodes[j] = nodes[j - 1] + 1;
    }
    true
}
