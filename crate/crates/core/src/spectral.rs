//! Eigendecomposition along the interpolation, gap location and the
//! perturbative identities built on top of it.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::hamiltonian::{HamiltonianError, HamiltonianPair};

/// Relative tolerance below which two eigenvalues count as degenerate.
pub const DEGENERACY_RTOL: f64 = 1e-9;
/// Overlaps at or below this magnitude make the ratio identities undefined.
pub const COMPONENT_GUARD: f64 = 1e-12;
/// Central-difference step for first derivatives.
pub const FD_STEP_FIRST: f64 = 1e-5;
/// Central-difference step for second derivatives.
pub const FD_STEP_SECOND: f64 = 1e-4;
/// Largest dimension for which [`Instant`] refines its eigenvectors.
pub const REFINE_MAX_DIM: usize = 256;

const SYMMETRY_RTOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error("matrix is empty")]
    Empty,
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric at ({row}, {col}): {upper} vs {lower}")]
    NotSymmetric { row: usize, col: usize, upper: f64, lower: f64 },
    #[error("symmetric eigensolver did not converge for dimension {dim} within {max_iterations} iterations")]
    NoConvergence { dim: usize, max_iterations: usize },
    #[error("at s = {s}: {source}")]
    AtSchedule { s: f64, source: Box<SpectralError> },
    #[error("level {level} is degenerate at s = {s}")]
    Degenerate { level: usize, s: f64 },
    #[error("level {level} out of range for dimension {dim}")]
    LevelOutOfRange { level: usize, dim: usize },
    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("spectrum is degenerate at every scanned point")]
    AllDegenerate,
}

/// Whether `a` and `b` are equal within the degeneracy tolerance.
pub fn is_degenerate(a: f64, b: f64) -> bool {
    (a - b).abs() <= DEGENERACY_RTOL * (1.0 + a.abs().max(b.abs()))
}

/// Ascending eigenvalues with eigenvectors as matching columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl Eigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `E_1 - E_0`, or 0 for a one-dimensional problem.
    pub fn gap(&self) -> f64 {
        if self.dim() < 2 {
            0.0
        } else {
            self.values[1] - self.values[0]
        }
    }

    /// Largest `||A v_k - l_k v_k|| / (1 + |l_k|)`.
    pub fn max_residual(&self, a: &DMatrix<f64>) -> f64 {
        let av = a * &self.vectors;
        (0..self.dim())
            .map(|k| {
                let r = av.column(k) - self.vectors.column(k) * self.values[k];
                r.norm() / (1.0 + self.values[k].abs())
            })
            .fold(0.0, f64::max)
    }

    /// Frobenius norm of `V^T V - I`.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.vectors.transpose() * &self.vectors;
        (g - DMatrix::identity(self.dim(), self.dim())).norm()
    }

    /// Index ranges of consecutive degenerate eigenvalues.
    pub fn clusters(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for k in 1..=self.dim() {
            if k == self.dim() || !is_degenerate(self.values[k - 1], self.values[k]) {
                out.push(start..k);
                start = k;
            }
        }
        out
    }

    fn sort_ascending(self) -> Self {
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        let values = DVector::from_iterator(self.dim(), order.iter().map(|&k| self.values[k]));
        let vectors = self.vectors.select_columns(order.iter());
        Self { values, vectors }
    }

    fn fix_signs(&mut self) {
        for k in 0..self.dim() {
            let col = self.vectors.column(k);
            let flip = if k == 0 { col.sum() < 0.0 } else { col[col.iamax()] < 0.0 };
            if flip {
                self.vectors.column_mut(k).neg_mut();
            }
        }
    }
}

fn check_symmetric(a: &DMatrix<f64>) -> Result<(), SpectralError> {
    if a.nrows() != a.ncols() {
        return Err(SpectralError::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    if a.is_empty() {
        return Err(SpectralError::Empty);
    }
    let scale = a.amax().max(1.0);
    for i in 0..a.nrows() {
        for j in (i + 1)..a.ncols() {
            if (a[(i, j)] - a[(j, i)]).abs() > SYMMETRY_RTOL * scale {
                return Err(SpectralError::NotSymmetric { row: i, col: j, upper: a[(i, j)], lower: a[(j, i)] });
            }
        }
    }
    Ok(())
}

/// Symmetric eigendecomposition, eigenvalues ascending.
///
/// The ground vector is signed to have a positive sum and every other
/// vector to have a positive largest-magnitude component.
pub fn eigendecompose(a: &DMatrix<f64>) -> Result<Eigen, SpectralError> {
    check_symmetric(a)?;
    let dim = a.nrows();
    let max_iterations = 1000 * dim.max(10);
    let eig = a
        .clone()
        .try_symmetric_eigen(f64::EPSILON, max_iterations)
        .ok_or(SpectralError::NoConvergence { dim, max_iterations })?;
    let mut out = Eigen { values: eig.eigenvalues, vectors: eig.eigenvectors }.sort_ascending();
    out.fix_signs();
    Ok(out)
}

/// [`eigendecompose`] followed by one inverse-iteration step per level.
///
/// The extra step makes small eigenvector components accurate relative to
/// their own size, which the componentwise ratio identities need.
pub fn eigendecompose_refined(a: &DMatrix<f64>) -> Result<Eigen, SpectralError> {
    let mut eig = eigendecompose(a)?;
    refine(a, &mut eig);
    Ok(eig)
}

fn shifted_solve(a: &DMatrix<f64>, sigma: f64, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let dim = a.nrows();
    for attempt in 0..4 {
        let shift = sigma + attempt as f64 * 1e-13 * (1.0 + sigma.abs());
        let mut m = a.clone();
        for i in 0..dim {
            m[(i, i)] -= shift;
        }
        if let Some(x) = m.lu().solve(rhs) {
            let norm = x.norm();
            if norm.is_finite() && norm > 0.0 {
                return Some(x / norm);
            }
        }
    }
    None
}

fn refine(a: &DMatrix<f64>, eig: &mut Eigen) {
    for range in eig.clusters() {
        let mut done: Vec<DVector<f64>> = Vec::with_capacity(range.len());
        for k in range.clone() {
            let original = eig.vectors.column(k).into_owned();
            let mut x = shifted_solve(a, eig.values[k], &original).unwrap_or_else(|| original.clone());
            for q in &done {
                let p = q.dot(&x);
                x.axpy(-p, q, 1.0);
            }
            let norm = x.norm();
            if !(norm.is_finite() && norm > 1e-8) {
                x = original.clone();
            } else {
                x /= norm;
            }
            if x.dot(&original) < 0.0 {
                x.neg_mut();
            }
            done.push(x);
        }
        for (k, x) in range.zip(done) {
            eig.values[k] = x.dot(&(a * &x));
            eig.vectors.set_column(k, &x);
        }
    }
}

/// Sorted eigenvalues of `H(s)`.
pub fn spectrum(pair: &HamiltonianPair, s: f64) -> Result<DVector<f64>, SpectralError> {
    let h = pair.interpolate(s)?;
    check_symmetric(&h)?;
    let mut values = h.symmetric_eigenvalues();
    values.as_mut_slice().sort_by(f64::total_cmp);
    Ok(values)
}

/// `Delta(s) = E_1(s) - E_0(s)`.
pub fn gap_at(pair: &HamiltonianPair, s: f64) -> Result<f64, SpectralError> {
    let values = spectrum(pair, s)?;
    if values.len() < 2 {
        return Err(SpectralError::InvalidArgument("gap needs at least two levels".into()));
    }
    Ok(values[1] - values[0])
}

/// Eigendecomposition of `H(s)` with the quantities derived from it.
#[derive(Debug, Clone)]
pub struct Instant<'a> {
    pair: &'a HamiltonianPair,
    s: f64,
    eigen: Eigen,
    /// `<E_j| dH/ds |E_k>`
    hdot_eigen: DMatrix<f64>,
}

impl<'a> Instant<'a> {
    /// Refined decomposition for dimensions up to [`REFINE_MAX_DIM`].
    pub fn new(pair: &'a HamiltonianPair, s: f64) -> Result<Self, SpectralError> {
        Self::with_refinement(pair, s, pair.dim() <= REFINE_MAX_DIM)
    }

    pub fn with_refinement(pair: &'a HamiltonianPair, s: f64, refined: bool) -> Result<Self, SpectralError> {
        let h = pair.interpolate(s)?;
        let at = |e: SpectralError| SpectralError::AtSchedule { s, source: Box::new(e) };
        let eigen = if refined { eigendecompose_refined(&h) } else { eigendecompose(&h) }.map_err(at)?;
        let hdot_eigen = eigen.vectors.transpose() * pair.h_dot() * &eigen.vectors;
        Ok(Self { pair, s, eigen, hdot_eigen })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn pair(&self) -> &'a HamiltonianPair {
        self.pair
    }

    pub fn eigen(&self) -> &Eigen {
        &self.eigen
    }

    pub fn energy(&self, k: usize) -> f64 {
        self.eigen.values[k]
    }

    pub fn vector(&self, k: usize) -> DVector<f64> {
        self.eigen.vectors.column(k).into_owned()
    }

    pub fn component(&self, i: usize, k: usize) -> f64 {
        self.eigen.vectors[(i, k)]
    }

    pub fn gap(&self) -> f64 {
        self.eigen.gap()
    }

    /// `<E_j| dH/ds |E_k>`.
    pub fn hdot_element(&self, j: usize, k: usize) -> f64 {
        self.hdot_eigen[(j, k)]
    }

    /// Flips the sign of eigenvector `k`.
    pub fn flip(&mut self, k: usize) {
        self.eigen.vectors.column_mut(k).neg_mut();
        self.hdot_eigen.column_mut(k).neg_mut();
        self.hdot_eigen.row_mut(k).neg_mut();
    }

    fn check_level(&self, k: usize) -> Result<(), SpectralError> {
        let dim = self.eigen.dim();
        if k >= dim {
            return Err(SpectralError::LevelOutOfRange { level: k, dim });
        }
        let v = &self.eigen.values;
        let below = k > 0 && is_degenerate(v[k - 1], v[k]);
        let above = k + 1 < dim && is_degenerate(v[k], v[k + 1]);
        if below || above {
            return Err(SpectralError::Degenerate { level: k, s: self.s });
        }
        Ok(())
    }

    fn check_index(&self, i: usize) -> Result<(), SpectralError> {
        let dim = self.eigen.dim();
        if i >= dim {
            return Err(SpectralError::IndexOutOfRange { index: i, dim });
        }
        Ok(())
    }

    /// `dE_k/ds = <E_k|dH/ds|E_k>`.
    pub fn lemma1_first(&self, k: usize) -> Result<f64, SpectralError> {
        self.check_level(k)?;
        Ok(self.hdot_eigen[(k, k)])
    }

    /// `d|E_k>/ds = sum_{j != k} <E_j|dH/ds|E_k> / (E_k - E_j) |E_j>`.
    pub fn lemma1_vector_derivative(&self, k: usize) -> Result<DVector<f64>, SpectralError> {
        self.check_level(k)?;
        let e = &self.eigen.values;
        let coeffs =
            DVector::from_fn(
                self.eigen.dim(),
                |j, _| {
                    if j == k {
                        0.0
                    } else {
                        self.hdot_eigen[(j, k)] / (e[k] - e[j])
                    }
                },
            );
        Ok(&self.eigen.vectors * coeffs)
    }

    /// `d^2E_k/ds^2 = 2 sum_{j != k} <E_j|dH/ds|E_k>^2 / (E_k - E_j)`.
    pub fn lemma1_second(&self, k: usize) -> Result<f64, SpectralError> {
        self.check_level(k)?;
        let e = &self.eigen.values;
        let sum: f64 =
            (0..self.eigen.dim()).filter(|&j| j != k).map(|j| self.hdot_eigen[(j, k)].powi(2) / (e[k] - e[j])).sum();
        Ok(2.0 * sum)
    }

    /// `<x_i|(-H0)|E_k> / <x_i|E_k>`, or `None` when the component vanishes.
    pub fn neighbor_ratio(&self, i: usize, k: usize) -> Result<Option<f64>, SpectralError> {
        self.check_index(i)?;
        if k >= self.eigen.dim() {
            return Err(SpectralError::LevelOutOfRange { level: k, dim: self.eigen.dim() });
        }
        let c = self.eigen.vectors[(i, k)];
        if c.abs() <= COMPONENT_GUARD {
            return Ok(None);
        }
        let neigh = -self.pair.h0().row(i).dot(&self.eigen.vectors.column(k).transpose());
        Ok(Some(neigh / c))
    }

    /// `E_k - [s E_i(1) - (1 - s) <x_i|(-H0)|E_k> / <x_i|E_k>]`.
    pub fn energy_identity_residual(&self, i: usize, k: usize) -> Result<Option<f64>, SpectralError> {
        let Some(ratio) = self.neighbor_ratio(i, k)? else {
            return Ok(None);
        };
        let s = self.s;
        Ok(Some(self.energy(k) - (s * self.pair.final_energy(i) - (1.0 - s) * ratio)))
    }

    /// `Delta - (1 - s) (r_0 - r_1)` with `r_k` the neighbor ratio of level k.
    pub fn gap_identity_residual(&self, i: usize) -> Result<Option<f64>, SpectralError> {
        let (Some(r0), Some(r1)) = (self.neighbor_ratio(i, 0)?, self.neighbor_ratio(i, 1)?) else {
            return Ok(None);
        };
        Ok(Some(self.gap() - (1.0 - self.s) * (r0 - r1)))
    }

    /// `r_0 - r_1` at the final ground-state index, which equals
    /// `Delta / (1 - s)`.
    pub fn failure_condition_residual(&self) -> Result<Option<f64>, SpectralError> {
        if self.s >= 1.0 {
            return Err(SpectralError::InvalidArgument("ratio difference undefined at s = 1".into()));
        }
        let gs = final_ground_index(self.pair);
        let (Some(r0), Some(r1)) = (self.neighbor_ratio(gs, 0)?, self.neighbor_ratio(gs, 1)?) else {
            return Ok(None);
        };
        let diff = r0 - r1;
        let expected = self.gap() / (1.0 - self.s);
        debug_assert!(
            (diff - expected).abs() <= 1e-6 * (1.0 + expected.abs()),
            "ratio difference {diff} vs {expected}"
        );
        Ok(Some(diff))
    }

    /// Triangle-inequality bounds on `Delta^2` from basis index `i`.
    pub fn min_gap_bounds(&self, i: usize) -> Result<Option<GapBounds>, SpectralError> {
        let (Some(r0), Some(r1)) = (self.neighbor_ratio(i, 0)?, self.neighbor_ratio(i, 1)?) else {
            return Ok(None);
        };
        let f2 = (1.0 - self.s).powi(2);
        let lower = f2 * (r0 * r0 - r1 * r1);
        let upper = f2 * (r0 * r0 + r1 * r1);
        let delta2 = self.gap().powi(2);
        Ok(Some(GapBounds {
            lower,
            upper,
            delta_squared: delta2,
            lower_holds: lower <= delta2,
            upper_holds: delta2 <= upper,
        }))
    }
}

/// Both bounds on `Delta^2` and whether each holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapBounds {
    pub lower: f64,
    pub upper: f64,
    pub delta_squared: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

/// Index of the smallest final energy (first one on ties).
pub fn final_ground_index(pair: &HamiltonianPair) -> usize {
    pair.h1_diag().argmin().0
}

pub fn lemma1_first(pair: &HamiltonianPair, s: f64, k: usize) -> Result<f64, SpectralError> {
    Instant::new(pair, s)?.lemma1_first(k)
}

pub fn lemma1_vector_derivative(pair: &HamiltonianPair, s: f64, k: usize) -> Result<DVector<f64>, SpectralError> {
    Instant::new(pair, s)?.lemma1_vector_derivative(k)
}

pub fn lemma1_second(pair: &HamiltonianPair, s: f64, k: usize) -> Result<f64, SpectralError> {
    Instant::new(pair, s)?.lemma1_second(k)
}

pub fn energy_identity_residual(
    pair: &HamiltonianPair,
    s: f64,
    i: usize,
    k: usize,
) -> Result<Option<f64>, SpectralError> {
    Instant::new(pair, s)?.energy_identity_residual(i, k)
}

pub fn gap_identity_residual(pair: &HamiltonianPair, s: f64, i: usize) -> Result<Option<f64>, SpectralError> {
    Instant::new(pair, s)?.gap_identity_residual(i)
}

pub fn failure_condition_residual(pair: &HamiltonianPair, s: f64) -> Result<Option<f64>, SpectralError> {
    Instant::new(pair, s)?.failure_condition_residual()
}

pub fn min_gap_bounds(pair: &HamiltonianPair, s_star: f64, i: usize) -> Result<Option<GapBounds>, SpectralError> {
    Instant::new(pair, s_star)?.min_gap_bounds(i)
}

/// `n` evenly spaced points from 0 to 1 inclusive.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|t| t as f64 / (n - 1) as f64).collect(),
    }
}

/// Decompositions over a grid with a continuous gauge.
#[derive(Debug, Clone)]
pub struct SpectralSweep<'a> {
    pair: &'a HamiltonianPair,
    grid: Vec<f64>,
    energies: Vec<DVector<f64>>,
    vectors: Vec<DMatrix<f64>>,
}

impl<'a> SpectralSweep<'a> {
    pub fn new(pair: &'a HamiltonianPair, grid: &[f64]) -> Result<Self, SpectralError> {
        if grid.len() < 2 {
            return Err(SpectralError::InvalidGrid("needs at least two points".into()));
        }
        if grid.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(SpectralError::InvalidGrid("points must lie in [0, 1]".into()));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SpectralError::InvalidGrid("points must be strictly increasing".into()));
        }
        let decomps = grid
            .par_iter()
            .map(|&s| {
                let h = pair.interpolate(s)?;
                eigendecompose(&h).map_err(|e| SpectralError::AtSchedule { s, source: Box::new(e) })
            })
            .collect::<Result<Vec<_>, _>>()?;

        let mut energies = Vec::with_capacity(grid.len());
        let mut vectors: Vec<DMatrix<f64>> = Vec::with_capacity(grid.len());
        for eig in decomps {
            let aligned = match vectors.last() {
                Some(prev) => align_gauge(prev, &eig),
                None => eig.vectors,
            };
            energies.push(eig.values);
            vectors.push(aligned);
        }
        Ok(Self { pair, grid: grid.to_vec(), energies, vectors })
    }

    pub fn pair(&self) -> &'a HamiltonianPair {
        self.pair
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn energies(&self) -> &[DVector<f64>] {
        &self.energies
    }

    pub fn vectors(&self) -> &[DMatrix<f64>] {
        &self.vectors
    }

    /// `E_k` along the grid.
    pub fn level(&self, k: usize) -> Vec<f64> {
        self.energies.iter().map(|e| e[k]).collect()
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.energies.iter().map(|e| e[1] - e[0]).collect()
    }

    /// `|<x_i|E_k(s)>|^2` along the grid.
    pub fn squared_overlap(&self, i: usize, k: usize) -> Vec<f64> {
        self.vectors.iter().map(|v| v[(i, k)].powi(2)).collect()
    }
}

/// Reorders columns inside degenerate clusters by greedy maximal overlap
/// with `prev`, then fixes signs so matched overlaps are nonnegative.
fn align_gauge(prev: &DMatrix<f64>, eig: &Eigen) -> DMatrix<f64> {
    let overlap = prev.transpose() * &eig.vectors;
    let mut out = eig.vectors.clone();
    for range in eig.clusters() {
        let mut free_new: Vec<usize> = range.clone().collect();
        let mut free_old: Vec<usize> = range.clone().collect();
        let mut assignment = vec![0; range.len()];
        while !free_old.is_empty() {
            let (mut bo, mut bn, mut best) = (0, 0, -1.0);
            for (oi, &o) in free_old.iter().enumerate() {
                for (ni, &n) in free_new.iter().enumerate() {
                    let v = overlap[(o, n)].abs();
                    if v > best {
                        (bo, bn, best) = (oi, ni, v);
                    }
                }
            }
            let (o, n) = (free_old.swap_remove(bo), free_new.swap_remove(bn));
            assignment[o - range.start] = n;
        }
        for (slot, &n) in range.clone().zip(&assignment) {
            let sign = if overlap[(slot, n)] < 0.0 { -1.0 } else { 1.0 };
            out.set_column(slot, &(eig.vectors.column(n) * sign));
        }
    }
    out
}

/// Location and depth of the smallest gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinGap {
    pub s_star: f64,
    pub delta_min: f64,
    /// The minimum sits at `s = 1`, i.e. the final ground level is degenerate.
    pub degenerate_at_end: bool,
}

/// Global minimum of `Delta(s)` on `[0, 1]`.
///
/// A coarse scan brackets the minimum, golden-section search narrows the
/// bracket to `tol`, and Newton steps on `Delta'(s)` from the derivative
/// formulas take `s*` to stationarity.
pub fn min_gap(pair: &HamiltonianPair, coarse_points: usize, tol: f64) -> Result<MinGap, SpectralError> {
    if coarse_points < 50 {
        return Err(SpectralError::InvalidArgument(format!("coarse_points must be at least 50, got {coarse_points}")));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(SpectralError::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    if pair.dim() < 2 {
        return Err(SpectralError::InvalidArgument("gap needs at least two levels".into()));
    }
    let grid = uniform_grid(coarse_points);
    let spectra = grid.par_iter().map(|&s| spectrum(pair, s)).collect::<Result<Vec<_>, _>>()?;
    if spectra.iter().all(|v| is_degenerate(v[0], v[1])) {
        return Err(SpectralError::AllDegenerate);
    }
    let gaps: Vec<f64> = spectra.iter().map(|v| v[1] - v[0]).collect();
    let best = gaps.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(t, _)| t).expect("non-empty grid");

    let last = coarse_points - 1;
    if best == last && is_degenerate(spectra[last][0], spectra[last][1]) {
        return Ok(MinGap { s_star: 1.0, delta_min: gaps[last], degenerate_at_end: true });
    }

    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(last)];
    let (mut s, mut delta) = golden_section(|x| gap_at(pair, x), lo, hi, tol)?;
    if gaps[best] < delta {
        (s, delta) = (grid[best], gaps[best]);
    }
    let (s, delta) = newton_polish(pair, s, delta, lo, hi)?;
    Ok(MinGap { s_star: s, delta_min: delta, degenerate_at_end: false })
}

fn golden_section<F>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64), SpectralError>
where
    F: Fn(f64) -> Result<f64, SpectralError>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..300 {
        if b - a <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            (d, fd) = (c, fc);
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            (c, fc) = (d, fd);
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

fn newton_polish(
    pair: &HamiltonianPair,
    mut s: f64,
    mut delta: f64,
    lo: f64,
    hi: f64,
) -> Result<(f64, f64), SpectralError> {
    let slope = |s: f64| -> Result<Option<(f64, f64)>, SpectralError> {
        let inst = Instant::with_refinement(pair, s, false)?;
        let d1 = inst.lemma1_first(1).and_then(|a| Ok(a - inst.lemma1_first(0)?));
        let d2 = inst.lemma1_second(1).and_then(|a| Ok(a - inst.lemma1_second(0)?));
        match (d1, d2) {
            (Ok(d1), Ok(d2)) => Ok(Some((d1, d2))),
            (Err(SpectralError::Degenerate { .. }), _) | (_, Err(SpectralError::Degenerate { .. })) => Ok(None),
            (Err(e), _) | (_, Err(e)) => Err(e),
        }
    };
    let Some((mut d1, mut d2)) = slope(s)? else {
        return bisect_slope(pair, s, delta, lo, hi);
    };
    for _ in 0..30 {
        if d2 <= 0.0 {
            break;
        }
        let next = s - d1 / d2;
        if !(lo..=hi).contains(&next) || next == s {
            break;
        }
        let Some((n1, n2)) = slope(next)? else { break };
        if n1.abs() >= d1.abs() {
            break;
        }
        let next_delta = gap_at(pair, next)?;
        (s, delta, d1, d2) = (next, next_delta, n1, n2);
    }
    Ok((s, delta))
}

/// Bisection on the sign of `<E_1|dH/ds|E_1> - <E_0|dH/ds|E_0>`, which stays
/// meaningful when the two levels are closer than the degeneracy tolerance.
fn bisect_slope(pair: &HamiltonianPair, s: f64, delta: f64, lo: f64, hi: f64) -> Result<(f64, f64), SpectralError> {
    let slope = |x: f64| -> Result<(f64, f64), SpectralError> {
        let inst = Instant::with_refinement(pair, x, false)?;
        Ok((inst.hdot_eigen[(1, 1)] - inst.hdot_eigen[(0, 0)], inst.gap()))
    };
    let (mut a, mut b) = (lo, hi);
    let mut width = 1e-12;
    while width < hi - lo {
        let (l, r) = ((s - width).max(lo), (s + width).min(hi));
        if slope(l)?.0 < 0.0 && slope(r)?.0 > 0.0 {
            (a, b) = (l, r);
            break;
        }
        width *= 10.0;
    }
    if !(slope(a)?.0 < 0.0 && slope(b)?.0 > 0.0) {
        return Ok((s, delta));
    }
    let (mut best_s, mut best) = (s, delta);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let (g, gap) = slope(m)?;
        if gap < best {
            (best_s, best) = (m, gap);
        }
        if g < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok((best_s, best))
}
