//! Computational basis enumeration and the mixer graph.
//!
//! States are stored as `u32` words where node 1 (the leftmost character of
//! the printed bitstring) is the most significant of the `n` used bits.
//!
//! Orderings:
//!
//! - full mode: binary counting order, `000`, `001`, ..., `111`;
//! - weight-k mode: lexicographic order of the selected node sets, so for
//!   `n = 3, k = 1` the states are `100`, `010`, `001`, and for toy-sized
//!   clique instances `111000` (nodes {1,2,3}) comes first.
//!
//! Weight-k ranks use the combinatorial number system, so `rank` and
//! `unrank` cost O(n) and no lookup table is stored.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest qubit count accepted in weight-k mode.
pub const MAX_QUBITS: usize = 20;
/// Largest qubit count accepted in full mode.
pub const MAX_FULL_QUBITS: usize = 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("qubit count {n} outside 1..={max}")]
    Capacity { n: usize, max: usize },
    #[error("hamming weight {k} must satisfy 0 < k < n = {n}")]
    InvalidWeight { n: usize, k: usize },
    #[error("operator dimension {found} does not match basis size {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operator has a positive off-diagonal entry at ({row}, {col})")]
    MixedSigns { row: usize, col: usize },
    #[error("operator is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("basis index {index} out of range for size {len}")]
    IndexOutOfRange { index: usize, len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisMode {
    Full,
    WeightK(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    n: usize,
    mode: BasisMode,
    states: Vec<u32>,
}

/// Binomial coefficient as `u64`; exact for every `n <= 62`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// Bit mask of a 1-based node in an `n`-bit state.
#[inline]
pub fn node_mask(n: usize, node: usize) -> u32 {
    debug_assert!(node >= 1 && node <= n);
    1 << (n - node)
}

/// Renders a state with node 1 leftmost.
pub fn format_state(n: usize, state: u32) -> String {
    (1..=n).map(|node| if state & node_mask(n, node) != 0 { '1' } else { '0' }).collect()
}

/// Parses a bitstring such as `"111000"`.
pub fn parse_state(text: &str) -> Option<u32> {
    if text.is_empty() || text.len() > 32 {
        return None;
    }
    text.chars().try_fold(0u32, |acc, c| match c {
        '0' => Some(acc << 1),
        '1' => Some((acc << 1) | 1),
        _ => None,
    })
}

/// Selected nodes of a state, 1-based and ascending.
pub fn selected_nodes(n: usize, state: u32) -> Vec<usize> {
    (1..=n).filter(|&node| state & node_mask(n, node) != 0).collect()
}

impl BasisSet {
    pub fn enumerate(n: usize, mode: BasisMode) -> Result<Self, BasisError> {
        match mode {
            BasisMode::Full => {
                if n == 0 || n > MAX_FULL_QUBITS {
                    return Err(BasisError::Capacity { n, max: MAX_FULL_QUBITS });
                }
                let states = (0..(1u32 << n)).collect();
                Ok(Self { n, mode, states })
            }
            BasisMode::WeightK(k) => {
                if n == 0 || n > MAX_QUBITS {
                    return Err(BasisError::Capacity { n, max: MAX_QUBITS });
                }
                if k == 0 || k >= n {
                    return Err(BasisError::InvalidWeight { n, k });
                }
                let count = binomial(n, k);
                let mut basis = Self { n, mode, states: Vec::with_capacity(count as usize) };
                for m in 0..count {
                    let state = basis.unrank(m).expect("rank in range");
                    basis.states.push(state);
                }
                Ok(basis)
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> BasisMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[u32] {
        &self.states
    }

    pub fn state(&self, index: usize) -> u32 {
        self.states[index]
    }

    pub fn label(&self, index: usize) -> String {
        format_state(self.n, self.states[index])
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.len()).map(|i| self.label(i)).collect()
    }

    pub fn contains(&self, state: u32) -> bool {
        self.rank(state).is_some()
    }

    /// Index of `state` in the ordered basis, `None` if it is not a member.
    pub fn rank(&self, state: u32) -> Option<u64> {
        if self.n < 32 && state >> self.n != 0 {
            return None;
        }
        match self.mode {
            BasisMode::Full => Some(state as u64),
            BasisMode::WeightK(k) => {
                if state.count_ones() as usize != k {
                    return None;
                }
                // Combinadic of the bit positions counted from the least
                // significant bit gives the ascending numeric rank; node-set
                // lexicographic order is its reverse.
                let mut ascending = 0u64;
                let mut seen = 0usize;
                for pos in 0..self.n {
                    if state & (1 << pos) != 0 {
                        seen += 1;
                        ascending += binomial(pos, seen);
                    }
                }
                Some(binomial(self.n, k) - 1 - ascending)
            }
        }
    }

    pub fn index_of(&self, state: u32) -> Option<usize> {
        self.rank(state).map(|r| r as usize)
    }

    /// Inverse of [`BasisSet::rank`].
    pub fn unrank(&self, rank: u64) -> Option<u32> {
        match self.mode {
            BasisMode::Full => (rank < (1u64 << self.n)).then_some(rank as u32),
            BasisMode::WeightK(k) => {
                let total = binomial(self.n, k);
                if rank >= total {
                    return None;
                }
                let mut remaining = total - 1 - rank;
                let mut state = 0u32;
                let mut ones = k;
                for pos in (0..self.n).rev() {
                    if ones == 0 {
                        break;
                    }
                    let c = binomial(pos, ones);
                    if remaining >= c {
                        remaining -= c;
                        state |= 1 << pos;
                        ones -= 1;
                    }
                }
                Some(state)
            }
        }
    }
}

/// Graph whose adjacency matrix is `-H0`, over basis indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixerGraph {
    adjacency: Vec<Vec<usize>>,
}

impl MixerGraph {
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &j in &self.adjacency[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

fn check_dimension(h0: &DMatrix<f64>, basis: &BasisSet) -> Result<(), BasisError> {
    let d = basis.len();
    if h0.nrows() != d || h0.ncols() != d {
        return Err(BasisError::DimensionMismatch { expected: d, found: h0.nrows() });
    }
    Ok(())
}

/// Builds `G(H0)`: edge `(i, j)` iff `<x_i| -H0 |x_j> > 0`.
pub fn mixer_graph(h0: &DMatrix<f64>, basis: &BasisSet) -> Result<MixerGraph, BasisError> {
    check_dimension(h0, basis)?;
    let d = basis.len();
    let mut adjacency = vec![Vec::new(); d];
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let v = h0[(i, j)];
            if v > 0.0 {
                return Err(BasisError::MixedSigns { row: i, col: j });
            }
            if v != h0[(j, i)] {
                return Err(BasisError::NotSymmetric { row: i, col: j });
            }
            if v < 0.0 {
                adjacency[i].push(j);
            }
        }
    }
    Ok(MixerGraph { adjacency })
}

/// `(-H0)|x_i>` in basis coordinates.
pub fn neighbor_state(i: usize, h0: &DMatrix<f64>, basis: &BasisSet) -> Result<DVector<f64>, BasisError> {
    check_dimension(h0, basis)?;
    if i >= basis.len() {
        return Err(BasisError::IndexOutOfRange { index: i, len: basis.len() });
    }
    Ok(DVector::from_iterator(basis.len(), h0.row(i).iter().map(|v| -v)))
}
