//! Mixer and target operators, and the linear interpolation
//! `H(s) = (1 - s) H0 + s H1`.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{node_mask, BasisError, BasisMode, BasisSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HamiltonianError {
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("edge ({0}, {1}) is a self-loop or has an endpoint outside 1..=n")]
    InvalidEdge(usize, usize),
    #[error("expected {expected} weights, got {found}")]
    WeightCount { expected: usize, found: usize },
    #[error("weight {index} is negative or not finite: {value}")]
    InvalidWeight { index: usize, value: f64 },
    #[error("alpha must be a finite nonnegative number, got {0}")]
    InvalidAlpha(f64),
    #[error("clique size {k} must satisfy 0 < k < n = {n}")]
    InvalidCliqueSize { n: usize, k: usize },
    #[error("diagonal target has {found} entries for a basis of {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("mixer is not symmetric at ({0}, {1})")]
    AsymmetricMixer(usize, usize),
    #[error("mixer has a positive off-diagonal entry at ({0}, {1})")]
    PositiveOffDiagonal(usize, usize),
    #[error("interpolation parameter {0} outside [0, 1]")]
    ScheduleOutOfRange(f64),
}

/// Weighted graph instance for the maximum-weight k-clique encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    weights: Vec<f64>,
    k: usize,
    alpha: f64,
}

impl ProblemGraph {
    /// Edges are 1-based unordered pairs; duplicates are merged.
    pub fn new(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        weights: Vec<f64>,
        k: usize,
        alpha: f64,
    ) -> Result<Self, HamiltonianError> {
        if k == 0 || k >= n {
            return Err(HamiltonianError::InvalidCliqueSize { n, k });
        }
        if weights.len() != n {
            return Err(HamiltonianError::WeightCount { expected: n, found: weights.len() });
        }
        if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            return Err(HamiltonianError::InvalidWeight { index, value });
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(HamiltonianError::InvalidAlpha(alpha));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b || a == 0 || b == 0 || a > n || b > n {
                return Err(HamiltonianError::InvalidEdge(a, b));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Self { n, edges: set.into_iter().collect(), weights, k, alpha })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Sorted `(i, j)` pairs with `i < j`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self, HamiltonianError> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(HamiltonianError::InvalidAlpha(alpha));
        }
        Ok(Self { alpha, ..self.clone() })
    }

    /// Missing-edge count minus `alpha` times the selected weight.
    pub fn subset_energy(&self, nodes: &[usize]) -> f64 {
        let missing = self.missing_edges(nodes);
        let weight: f64 = nodes.iter().map(|&v| self.weights[v - 1]).sum();
        missing as f64 - self.alpha * weight
    }

    pub fn missing_edges(&self, nodes: &[usize]) -> usize {
        let mut missing = 0;
        for (idx, &a) in nodes.iter().enumerate() {
            for &b in &nodes[idx + 1..] {
                if !self.has_edge(a, b) {
                    missing += 1;
                }
            }
        }
        missing
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixerKind {
    /// `-sum_{i=1}^{n-1} S^{i,i+1}` on the weight-k subspace.
    #[default]
    SwapChain,
    /// The chain plus the `(n, 1)` term.
    SwapCycle,
    /// `-sum_i sigma_x^(i)` on the full space.
    TransverseField,
}

/// `H0 = -sum_i sigma_x^(i)` over the full `2^n` basis.
pub fn build_transverse_field(n: usize) -> Result<(BasisSet, DMatrix<f64>), HamiltonianError> {
    let basis = BasisSet::enumerate(n, BasisMode::Full)?;
    let d = basis.len();
    let mut h0 = DMatrix::zeros(d, d);
    for (a, &x) in basis.states().iter().enumerate() {
        for node in 1..=n {
            let y = x ^ node_mask(n, node);
            // full-mode index equals the state word
            h0[(a, y as usize)] = -1.0;
        }
    }
    Ok((basis, h0))
}

/// Adjacent-swap mixer restricted to Hamming weight `k`.
///
/// `S^{i,j}` acts as `|01><10| + |10><01|` on qubits `i, j` and annihilates
/// `|00>` and `|11>`, so `H0` has a zero diagonal and
/// `<a|H0|b> = -(number of adjacent pairs whose exchange maps a to b)`.
pub fn build_swap_mixer(n: usize, k: usize, wrap: bool) -> Result<(BasisSet, DMatrix<f64>), HamiltonianError> {
    let basis = BasisSet::enumerate(n, BasisMode::WeightK(k))?;
    let d = basis.len();
    let mut h0 = DMatrix::zeros(d, d);
    for (a, &x) in basis.states().iter().enumerate() {
        for (i, j) in swap_pairs(n, wrap) {
            let (mi, mj) = (node_mask(n, i), node_mask(n, j));
            if (x & mi != 0) != (x & mj != 0) {
                let y = x ^ mi ^ mj;
                let b = basis.index_of(y).expect("swap preserves weight");
                h0[(a, b)] -= 1.0;
            }
        }
    }
    Ok((basis, h0))
}

/// 1-based qubit pairs coupled by the swap mixer.
pub fn swap_pairs(n: usize, wrap: bool) -> Vec<(usize, usize)> {
    let mut pairs: Vec<_> = (1..n).map(|i| (i, i + 1)).collect();
    // for n = 2 the wrap term would repeat (1, 2)
    if wrap && n > 2 {
        pairs.push((n, 1));
    }
    pairs
}

/// Clique target energies over `basis`.
///
/// On a weight-k basis this is the encoding proper. On a full basis every
/// subset is scored with the same formula, which is what the Pauli-form
/// target does before the weight-k restriction.
pub fn build_clique_target(graph: &ProblemGraph, basis: &BasisSet) -> Result<DVector<f64>, HamiltonianError> {
    if basis.n() != graph.n() {
        return Err(HamiltonianError::LengthMismatch { expected: graph.n(), found: basis.n() });
    }
    let n = graph.n();
    let energies = basis.states().iter().map(|&x| {
        let nodes = crate::basis::selected_nodes(n, x);
        graph.subset_energy(&nodes)
    });
    Ok(DVector::from_iterator(basis.len(), energies))
}

pub fn build_diagonal_target(energies: &[f64], basis: &BasisSet) -> Result<DVector<f64>, HamiltonianError> {
    if energies.len() != basis.len() {
        return Err(HamiltonianError::LengthMismatch { expected: basis.len(), found: energies.len() });
    }
    Ok(DVector::from_column_slice(energies))
}

/// Mixer and diagonal target sharing one ordered basis.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianPair {
    basis: BasisSet,
    h0: DMatrix<f64>,
    h1_diag: DVector<f64>,
}

impl HamiltonianPair {
    pub fn new(basis: BasisSet, h0: DMatrix<f64>, h1_diag: DVector<f64>) -> Result<Self, HamiltonianError> {
        let d = basis.len();
        if h0.nrows() != d || h0.ncols() != d {
            return Err(BasisError::DimensionMismatch { expected: d, found: h0.nrows() }.into());
        }
        if h1_diag.len() != d {
            return Err(HamiltonianError::LengthMismatch { expected: d, found: h1_diag.len() });
        }
        for i in 0..d {
            for j in (i + 1)..d {
                if h0[(i, j)] != h0[(j, i)] {
                    return Err(HamiltonianError::AsymmetricMixer(i, j));
                }
                if h0[(i, j)] > 0.0 {
                    return Err(HamiltonianError::PositiveOffDiagonal(i, j));
                }
            }
        }
        Ok(Self { basis, h0, h1_diag })
    }

    /// Mixer plus clique target for `graph`.
    pub fn for_clique(graph: &ProblemGraph, mixer: MixerKind) -> Result<Self, HamiltonianError> {
        let (basis, h0) = match mixer {
            MixerKind::SwapChain => build_swap_mixer(graph.n(), graph.k(), false)?,
            MixerKind::SwapCycle => build_swap_mixer(graph.n(), graph.k(), true)?,
            MixerKind::TransverseField => build_transverse_field(graph.n())?,
        };
        let h1 = build_clique_target(graph, &basis)?;
        Self::new(basis, h0, h1)
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn h0(&self) -> &DMatrix<f64> {
        &self.h0
    }

    pub fn h1_diag(&self) -> &DVector<f64> {
        &self.h1_diag
    }

    /// `E_i(1)`, the final energy of basis state `i`.
    pub fn final_energy(&self, i: usize) -> f64 {
        self.h1_diag[i]
    }

    /// `dH/ds = H1 - H0` for the linear schedule.
    pub fn h_dot(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.h1_diag) - &self.h0
    }

    pub fn interpolate(&self, s: f64) -> Result<DMatrix<f64>, HamiltonianError> {
        if !(0.0..=1.0).contains(&s) {
            return Err(HamiltonianError::ScheduleOutOfRange(s));
        }
        Ok(self.interpolate_unchecked(s))
    }

    pub(crate) fn interpolate_unchecked(&self, s: f64) -> DMatrix<f64> {
        let mut h = &self.h0 * (1.0 - s);
        for i in 0..self.dim() {
            h[(i, i)] += s * self.h1_diag[i];
        }
        h
    }
}
