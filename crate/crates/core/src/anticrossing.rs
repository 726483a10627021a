//! Overlap families around an anti-crossing, hyperbola fits, the two
//! anti-crossing definitions and the identities that hold at `s*`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hamiltonian::HamiltonianPair;
use crate::spectral::{min_gap, Instant, MinGap, SpectralError, SpectralSweep};

/// Absolute tolerance for grouping final energies into levels.
pub const FINAL_LEVEL_TOL: f64 = 1e-9;
/// Largest `|Delta'(s*)|` accepted as stationary.
pub const STATIONARITY_TOL: f64 = 1e-6;
/// Largest finite-difference step for the eigenvector identities.
pub const MAX_IDENTITY_STEP: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AntiCrossingError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("final ground level is {0}-fold degenerate")]
    DegenerateGround(usize),
    #[error("s* = {s} is not stationary: |Delta'| = {derivative:e} > {tol:e}")]
    NonStationary { s: f64, derivative: f64, tol: f64 },
    #[error("step {h:e} too large: Delta(s* +- h) / Delta_min = {ratio}")]
    StepTooLarge { h: f64, ratio: f64 },
    #[error("window around s* = {s} has {points} points on a side, need {needed}")]
    WindowTooSmall { s: f64, points: usize, needed: usize },
    #[error("s* = {0} is not a grid point of the series")]
    OffGrid(f64),
    #[error("final spectrum has a single level")]
    SingleLevel,
}

/// One final energy level and the basis indices that sit on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalLevel {
    pub energy: f64,
    pub members: Vec<usize>,
}

/// Basis states grouped by final energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalLevelPartition {
    pub levels: Vec<FinalLevel>,
    pub tolerance: f64,
}

impl FinalLevelPartition {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Basis index of the solution when the ground level is a single state.
    pub fn ground_state(&self) -> Option<usize> {
        match self.levels.first()?.members.as_slice() {
            [i] => Some(*i),
            _ => None,
        }
    }

    pub fn level_of(&self, index: usize) -> Option<usize> {
        self.levels.iter().position(|l| l.members.contains(&index))
    }
}

/// Single-linkage grouping of the target diagonal.
pub fn partition_final_levels(pair: &HamiltonianPair, tol: f64) -> FinalLevelPartition {
    let h1 = pair.h1_diag();
    let mut order: Vec<usize> = (0..h1.len()).collect();
    order.sort_by(|&a, &b| h1[a].total_cmp(&h1[b]));
    let mut levels: Vec<FinalLevel> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for i in order {
        match levels.last_mut() {
            Some(level) if h1[i] - last <= tol => level.members.push(i),
            _ => levels.push(FinalLevel { energy: h1[i], members: vec![i] }),
        }
        last = h1[i];
    }
    for level in &mut levels {
        level.members.sort_unstable();
    }
    FinalLevelPartition { levels, tolerance: tol }
}

/// Squared overlaps along a grid, stored as `series[k][t]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapSeries {
    pub grid: Vec<f64>,
    /// `a_k(s)`: weight of the instantaneous ground vector on final level k.
    pub a: Vec<Vec<f64>>,
    /// `b_k(s)`: the same for the first excited vector.
    pub b: Vec<Vec<f64>>,
    /// `g_k(s)`: weight of the solution state on instantaneous level k.
    pub g: Vec<Vec<f64>>,
}

impl OverlapSeries {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Index of the grid point equal to `s`.
    pub fn index_of(&self, s: f64) -> Option<usize> {
        self.grid.iter().position(|&x| x == s)
    }
}

/// `a_k` and `b_k` series; these need no unique solution state.
pub fn level_overlaps(sweep: &SpectralSweep<'_>, partition: &FinalLevelPartition) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let level_weights = |col: usize| -> Vec<Vec<f64>> {
        partition
            .levels
            .iter()
            .map(|level| {
                sweep.vectors().iter().map(|v| level.members.iter().map(|&i| v[(i, col)].powi(2)).sum()).collect()
            })
            .collect()
    };
    (level_weights(0), level_weights(1))
}

pub fn compute_overlaps(
    sweep: &SpectralSweep<'_>,
    partition: &FinalLevelPartition,
) -> Result<OverlapSeries, AntiCrossingError> {
    let gs = partition.ground_state().ok_or(AntiCrossingError::DegenerateGround(partition.levels[0].members.len()))?;
    let (a, b) = level_overlaps(sweep, partition);
    let g = (0..sweep.pair().dim()).map(|k| sweep.squared_overlap(gs, k)).collect();
    Ok(OverlapSeries { grid: sweep.grid().to_vec(), a, b, g })
}

/// `E_(s) = E_c + B x -/+ sqrt(Delta^2 + A^2 x^2) / 2` with `x = s - s*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WilkinsonFit {
    pub a: f64,
    pub b: f64,
    pub e_center: f64,
    pub delta_fit: f64,
    pub rms_residual: f64,
    /// Fit reproduces `Delta_min` within 5% and its residual is below 5% of it.
    pub valid: bool,
    pub window: (f64, f64),
}

fn hyperbola(p: &[f64; 4], x: f64) -> (f64, f64) {
    let r = (p[2] * p[2] + p[3] * p[3] * x * x).sqrt();
    let mid = p[0] + p[1] * x;
    (mid - r / 2.0, mid + r / 2.0)
}

fn fit_rss(p: &[f64; 4], xs: &[f64], e0: &[f64], e1: &[f64]) -> f64 {
    xs.iter()
        .zip(e0.iter().zip(e1))
        .map(|(&x, (&l, &u))| {
            let (m0, m1) = hyperbola(p, x);
            (m0 - l).powi(2) + (m1 - u).powi(2)
        })
        .sum()
}

/// Least-squares hyperbola through the two lowest levels.
///
/// A linear fit of the mean and of the squared splitting seeds
/// Levenberg-Marquardt iterations on all four parameters.
pub fn wilkinson_fit(
    s: &[f64],
    e0: &[f64],
    e1: &[f64],
    s_star: f64,
    delta_min: f64,
) -> Result<WilkinsonFit, AntiCrossingError> {
    let left = s.iter().filter(|&&x| x < s_star).count();
    let right = s.iter().filter(|&&x| x > s_star).count();
    if s.len() < 7 || left < 3 || right < 3 {
        return Err(AntiCrossingError::WindowTooSmall { s: s_star, points: left.min(right), needed: 3 });
    }
    let xs: Vec<f64> = s.iter().map(|&v| v - s_star).collect();
    let m = xs.len();

    let lin = |cols: &dyn Fn(f64) -> [f64; 2], ys: &dyn Fn(usize) -> f64| -> [f64; 2] {
        let a = DMatrix::from_fn(m, 2, |i, j| cols(xs[i])[j]);
        let y = DVector::from_fn(m, |i, _| ys(i));
        let sol = (a.transpose() * &a).lu().solve(&(a.transpose() * y));
        sol.map(|v| [v[0], v[1]]).unwrap_or([0.0, 0.0])
    };
    let mean = lin(&|x| [1.0, x], &|i| (e0[i] + e1[i]) / 2.0);
    let split = lin(&|x| [1.0, x * x], &|i| (e1[i] - e0[i]).powi(2));
    let mut p = [mean[0], mean[1], split[0].max(0.0).sqrt(), split[1].max(0.0).sqrt()];
    if p[2] == 0.0 {
        p[2] = delta_min.max(f64::MIN_POSITIVE);
    }

    let mut rss = fit_rss(&p, &xs, e0, e1);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        let mut jac = DMatrix::zeros(2 * m, 4);
        let mut res = DVector::zeros(2 * m);
        for (i, &x) in xs.iter().enumerate() {
            let r = (p[2] * p[2] + p[3] * p[3] * x * x).sqrt().max(f64::MIN_POSITIVE);
            let (m0, m1) = hyperbola(&p, x);
            res[2 * i] = e0[i] - m0;
            res[2 * i + 1] = e1[i] - m1;
            for (row, sign) in [(2 * i, -1.0), (2 * i + 1, 1.0)] {
                jac[(row, 0)] = 1.0;
                jac[(row, 1)] = x;
                jac[(row, 2)] = sign * p[2] / (2.0 * r);
                jac[(row, 3)] = sign * p[3] * x * x / (2.0 * r);
            }
        }
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * res;
        let mut improved = false;
        for _ in 0..20 {
            let mut damped = jtj.clone();
            for d in 0..4 {
                damped[(d, d)] += lambda * jtj[(d, d)].max(1e-300);
            }
            let Some(step) = damped.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2], p[3] + step[3]];
            let trial_rss = fit_rss(&trial, &xs, e0, e1);
            if trial_rss < rss {
                let gain = rss - trial_rss;
                p = trial;
                rss = trial_rss;
                lambda = (lambda / 10.0).max(1e-12);
                improved = gain > 1e-15 * rss.max(1e-300);
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let rms = (rss / (2 * m) as f64).sqrt();
    let delta_fit = p[2].abs();
    let valid = (delta_fit - delta_min).abs() <= 0.05 * delta_min && rms <= 0.05 * delta_min;
    Ok(WilkinsonFit {
        a: p[3].abs(),
        b: p[1],
        e_center: p[0],
        delta_fit,
        rms_residual: rms,
        valid,
        window: (s[0], s[s.len() - 1]),
    })
}

/// Acceptance thresholds for the measured `(gamma, epsilon)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcThresholds {
    pub gamma_max: f64,
    pub epsilon_max: f64,
}

impl Default for AcThresholds {
    fn default() -> Self {
        Self { gamma_max: 0.1, epsilon_max: 0.1 }
    }
}

/// Smallest `(gamma, epsilon)` for which a definition holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DefinitionMeasurement {
    pub satisfied: bool,
    pub gamma: f64,
    pub epsilon: f64,
    /// Half-width of the window that minimises gamma.
    pub delta_window: f64,
    /// Leakage part of gamma on that window.
    pub gamma_leakage: f64,
    /// Swap part of gamma on that window.
    pub gamma_swap: f64,
}

/// Symmetric grid around `s*` for the definition measurements.
///
/// Offsets combine 80 log-spaced values from `1e-7` and 201 evenly spaced
/// values up to `min(s*, 1 - s*, 0.3)`. Returns the grid and the index of
/// `s*` in it.
pub fn definition_grid(s_star: f64) -> Result<(Vec<f64>, usize), AntiCrossingError> {
    let dmax = s_star.min(1.0 - s_star).min(0.3);
    if dmax.is_nan() || dmax <= 1e-7 {
        return Err(AntiCrossingError::WindowTooSmall { s: s_star, points: 0, needed: 1 });
    }
    let mut offsets: Vec<f64> = (0..80)
        .map(|i| 1e-7 * (dmax / 1e-7).powf(i as f64 / 79.0))
        .chain((1..=200).map(|i| dmax * i as f64 / 200.0))
        .map(|o| o.min(dmax))
        .collect();
    offsets.sort_by(f64::total_cmp);
    offsets.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);
    let mut grid: Vec<f64> = offsets.iter().rev().map(|o| s_star - o).collect();
    let center = grid.len();
    grid.push(s_star);
    grid.extend(offsets.iter().map(|o| s_star + o));
    for x in &mut grid {
        *x = x.clamp(0.0, 1.0);
    }
    grid.dedup();
    Ok((grid, center))
}

fn measure_pairs(
    grid: &[f64],
    center: usize,
    pairs: &[(&[f64], &[f64])],
    thresholds: AcThresholds,
) -> DefinitionMeasurement {
    // rising and falling component of each (x, y) pair
    let epsilon = pairs.iter().flat_map(|(x, y)| [x[center], y[center]]).map(|v| (v - 0.5).abs()).fold(0.0, f64::max);
    let span = center.min(grid.len() - 1 - center);
    let mut best = (f64::INFINITY, 0.0, f64::INFINITY, f64::INFINITY);
    let mut leak_min = vec![f64::INFINITY; pairs.len()];
    for j in 1..=span {
        let (l, r) = (center - j, center + j);
        for (p, (x, y)) in pairs.iter().enumerate() {
            leak_min[p] = leak_min[p].min(x[l] + y[l]).min(x[r] + y[r]);
        }
        if j == 1 {
            for (p, (x, y)) in pairs.iter().enumerate() {
                leak_min[p] = leak_min[p].min(x[center] + y[center]);
            }
        }
        let leak = (1.0 - leak_min.iter().copied().fold(f64::INFINITY, f64::min)).max(0.0);
        let swap = pairs
            .iter()
            .enumerate()
            .flat_map(|(p, (x, y))| {
                // pairs alternate: even index rises through s*, odd falls
                if p % 2 == 0 {
                    [x[l], 1.0 - x[r], 1.0 - y[l], y[r]]
                } else {
                    [1.0 - x[l], x[r], y[l], 1.0 - y[r]]
                }
            })
            .fold(0.0, f64::max)
            .max(0.0);
        let gamma = leak.max(swap);
        if gamma < best.0 {
            best = (gamma, grid[r] - grid[center], leak, swap);
        }
    }
    let (gamma, delta_window, gamma_leakage, gamma_swap) = best;
    DefinitionMeasurement {
        satisfied: gamma <= thresholds.gamma_max && epsilon <= thresholds.epsilon_max,
        gamma: gamma.min(1.0),
        epsilon,
        delta_window,
        gamma_leakage,
        gamma_swap,
    }
}

/// Two-level anti-crossing on the final levels 0 and 1 (first definition).
///
/// Clauses: `a_0 + a_1` and `b_0 + b_1` stay above `1 - gamma` on the
/// window; `a_0, a_1, b_0, b_1` are within `epsilon` of 1/2 at `s*`; across
/// the window `a_0` rises from below `gamma` to above `1 - gamma` while
/// `a_1` falls, and `b_0`, `b_1` do the opposite.
pub fn measure_choi(
    series: &OverlapSeries,
    s_star: f64,
    thresholds: AcThresholds,
) -> Result<DefinitionMeasurement, AntiCrossingError> {
    if series.a.len() < 2 {
        return Err(AntiCrossingError::SingleLevel);
    }
    let c = series.index_of(s_star).ok_or(AntiCrossingError::OffGrid(s_star))?;
    let pairs: [(&[f64], &[f64]); 2] = [(&series.a[0], &series.a[1]), (&series.b[0], &series.b[1])];
    Ok(measure_pairs(&series.grid, c, &pairs, thresholds))
}

/// Anti-crossing read off `g_0` and `g_1` only (second definition).
pub fn measure_g_def(
    series: &OverlapSeries,
    s_star: f64,
    thresholds: AcThresholds,
) -> Result<DefinitionMeasurement, AntiCrossingError> {
    let c = series.index_of(s_star).ok_or(AntiCrossingError::OffGrid(s_star))?;
    let pairs: [(&[f64], &[f64]); 1] = [(&series.g[0], &series.g[1])];
    Ok(measure_pairs(&series.grid, c, &pairs, thresholds))
}

/// Both sides of the min-gap expansion over final levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prop1Check {
    pub delta: f64,
    /// `sum_k E_k(1) (b_k(s*) - a_k(s*))`
    pub level_sum: f64,
    pub residual: f64,
    /// `Delta'(s*)`; absent when the two lowest levels are within the
    /// degeneracy tolerance at `s*`.
    pub derivative: Option<f64>,
}

/// Compares `Delta(s*)` with `sum_k E_k(1) (b_k - a_k)` at a stationary `s*`.
pub fn check_prop1(instant: &Instant<'_>, partition: &FinalLevelPartition) -> Result<Prop1Check, AntiCrossingError> {
    let derivative = match (instant.lemma1_first(1), instant.lemma1_first(0)) {
        (Ok(d1), Ok(d0)) => Some(d1 - d0),
        (Err(SpectralError::Degenerate { .. }), _) | (_, Err(SpectralError::Degenerate { .. })) => None,
        (Err(e), _) | (_, Err(e)) => return Err(e.into()),
    };
    if let Some(d) = derivative.filter(|d| d.abs() > STATIONARITY_TOL) {
        return Err(AntiCrossingError::NonStationary { s: instant.s(), derivative: d.abs(), tol: STATIONARITY_TOL });
    }
    let level_sum: f64 = partition
        .levels
        .iter()
        .map(|level| {
            let (a, b) = level.members.iter().fold((0.0, 0.0), |(a, b), &i| {
                (a + instant.component(i, 0).powi(2), b + instant.component(i, 1).powi(2))
            });
            level.energy * (b - a)
        })
        .sum();
    let delta = instant.gap();
    Ok(Prop1Check { delta, level_sum, residual: (delta - level_sum).abs(), derivative })
}

/// `K epsilon - Delta_min` with `K = 2 (E_0 + E_1 + 2M)` on energies shifted
/// so that `E_0(1) = 0`, and `M` the largest shifted final energy.
pub fn corollary1_margin(partition: &FinalLevelPartition, epsilon: f64, delta_min: f64) -> f64 {
    let e0 = partition.levels[0].energy;
    let e1 = partition.levels.get(1).map_or(0.0, |l| l.energy - e0);
    let top = partition.levels.last().map_or(0.0, |l| l.energy - e0);
    let k = 2.0 * (e1 + 2.0 * top);
    k * epsilon - delta_min
}

/// [`corollary1_margin`] when the first definition holds, `None` otherwise.
pub fn check_corollary1(choi: &DefinitionMeasurement, partition: &FinalLevelPartition, delta_min: f64) -> Option<f64> {
    choi.satisfied.then(|| corollary1_margin(partition, choi.epsilon, delta_min))
}

/// `<E_0(s*)| dH/ds |E_1(s*)> / Delta_min`, signed through the gauge of
/// `instant`. Flip the sign of level 1 there to make it nonnegative.
pub fn beta(instant: &Instant<'_>) -> f64 {
    instant.hdot_element(0, 1) / instant.gap()
}

/// Makes `beta >= 0` by flipping level 1; level 0 keeps its positive sum.
pub fn fix_beta_gauge(instant: &mut Instant<'_>) {
    if beta(instant) < 0.0 {
        instant.flip(1);
    }
}

/// Rotation of the two crossing eigenvectors at `s*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem2Check {
    pub beta: f64,
    pub h: f64,
    /// `|| d|E_0>/ds + beta |E_1> || / beta`, central differences.
    pub residual0: f64,
    /// `|| d|E_1>/ds - beta |E_0> || / beta`, central differences.
    pub residual1: f64,
    /// The same two residuals from the perturbative vector derivative.
    pub analytic_residual0: f64,
    pub analytic_residual1: f64,
    /// `max_{i in {0,1}, j >= 2} |<E_i|dH/ds|E_j>|`
    pub offdiag_max: f64,
    /// `offdiag_max / (beta Delta_min)`
    pub offdiag_relative: f64,
}

/// Step for the identity checks: at most [`MAX_IDENTITY_STEP`] and a
/// hundredth of the anti-crossing width `Delta / A`.
pub fn identity_step(instant: &Instant<'_>) -> Result<f64, AntiCrossingError> {
    let curvature = instant.lemma1_second(1)? - instant.lemma1_second(0)?;
    let delta = instant.gap();
    let a = (delta * curvature).max(0.0).sqrt();
    Ok(if a > 0.0 { MAX_IDENTITY_STEP.min(1e-2 * delta / a) } else { MAX_IDENTITY_STEP })
}

fn aligned_neighbors<'a>(
    pair: &'a HamiltonianPair,
    center: &Instant<'_>,
    h: f64,
) -> Result<(Instant<'a>, Instant<'a>), AntiCrossingError> {
    if !(h > 0.0 && h <= MAX_IDENTITY_STEP) {
        return Err(AntiCrossingError::StepTooLarge { h, ratio: f64::NAN });
    }
    let s = center.s();
    if s - h < 0.0 || s + h > 1.0 {
        return Err(AntiCrossingError::StepTooLarge { h, ratio: f64::NAN });
    }
    let mut out = Vec::with_capacity(2);
    for x in [s + h, s - h] {
        let mut inst = Instant::new(pair, x)?;
        let ratio = inst.gap() / center.gap();
        if ratio > 2.0 {
            return Err(AntiCrossingError::StepTooLarge { h, ratio });
        }
        for k in 0..2 {
            if inst.vector(k).dot(&center.vector(k)) < 0.0 {
                inst.flip(k);
            }
        }
        out.push(inst);
    }
    let minus = out.pop().expect("two points");
    let plus = out.pop().expect("two points");
    Ok((plus, minus))
}

/// Checks `d|E_0>/ds = -beta |E_1>` and `d|E_1>/ds = beta |E_0>` at `s*`.
///
/// `instant` must already carry the `beta >= 0` gauge.
pub fn check_theorem2(instant: &Instant<'_>, h: f64) -> Result<Theorem2Check, AntiCrossingError> {
    let pair = instant.pair();
    let (plus, minus) = aligned_neighbors(pair, instant, h)?;
    let beta = beta(instant);
    let (v0, v1) = (instant.vector(0), instant.vector(1));
    let fd = |k: usize| (plus.vector(k) - minus.vector(k)) / (2.0 * h);
    let residual0 = (fd(0) + &v1 * beta).norm() / beta.abs();
    let residual1 = (fd(1) - &v0 * beta).norm() / beta.abs();
    let analytic_residual0 = (instant.lemma1_vector_derivative(0)? + &v1 * beta).norm() / beta.abs();
    let analytic_residual1 = (instant.lemma1_vector_derivative(1)? - &v0 * beta).norm() / beta.abs();
    let offdiag_max = (2..pair.dim())
        .flat_map(|j| [instant.hdot_element(0, j), instant.hdot_element(1, j)])
        .map(f64::abs)
        .fold(0.0, f64::max);
    Ok(Theorem2Check {
        beta,
        h,
        residual0,
        residual1,
        analytic_residual0,
        analytic_residual1,
        offdiag_max,
        offdiag_relative: offdiag_max / (beta.abs() * instant.gap()),
    })
}

/// Slopes of the solution weights on the two crossing levels at `s*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Corollary2Check {
    pub g0: f64,
    pub g1: f64,
    pub g0_prime: f64,
    pub g1_prime: f64,
    /// `|g_0' + g_1'| / beta`
    pub sum_residual: f64,
    /// `|g_0' - g_1' + 4 beta <GS|E_0><GS|E_1>| / beta`
    pub diff_residual: f64,
    /// `|g_0' - g_1'| / (beta (g_0 + g_1) / 2)`; close to 4 for a clean swap.
    pub diff_ratio: f64,
}

/// Central differences of `g_0`, `g_1` at `s*` against the rotation rate.
///
/// Differentiating `g_k = <GS|E_k>^2` with the rotation identities gives
/// `g_0' = -g_1' = -2 beta <GS|E_0><GS|E_1>`.
pub fn check_corollary2(
    instant: &Instant<'_>,
    partition: &FinalLevelPartition,
    h: f64,
) -> Result<Corollary2Check, AntiCrossingError> {
    let gs = partition.ground_state().ok_or(AntiCrossingError::DegenerateGround(partition.levels[0].members.len()))?;
    let (plus, minus) = aligned_neighbors(instant.pair(), instant, h)?;
    let beta = beta(instant);
    let slope = |k: usize| (plus.component(gs, k).powi(2) - minus.component(gs, k).powi(2)) / (2.0 * h);
    let (g0_prime, g1_prime) = (slope(0), slope(1));
    let (x0, x1) = (instant.component(gs, 0), instant.component(gs, 1));
    let (g0, g1) = (x0 * x0, x1 * x1);
    Ok(Corollary2Check {
        g0,
        g1,
        g0_prime,
        g1_prime,
        sum_residual: (g0_prime + g1_prime).abs() / beta.abs(),
        diff_residual: (g0_prime - g1_prime + 4.0 * beta * x0 * x1).abs() / beta.abs(),
        diff_ratio: (g0_prime - g1_prime).abs() / (beta.abs() * (g0 + g1) / 2.0),
    })
}

/// Settings for [`analyze`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub coarse_points: usize,
    pub tol: f64,
    pub thresholds: AcThresholds,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self { coarse_points: 1001, tol: 1e-10, thresholds: AcThresholds::default() }
    }
}

/// Everything measured at the smallest gap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AntiCrossingReport {
    pub s_star: f64,
    pub delta_min: f64,
    pub beta: f64,
    pub wilkinson: Option<WilkinsonFit>,
    pub choi: DefinitionMeasurement,
    pub g_def: DefinitionMeasurement,
    pub prop1: Prop1Check,
    /// Present only when the first definition is satisfied.
    pub corollary1_margin: Option<f64>,
    /// The same margin evaluated regardless of the definition.
    pub corollary1_margin_unchecked: f64,
    pub theorem2: Theorem2Check,
    pub corollary2: Corollary2Check,
    pub offdiag_max: f64,
    pub partition: FinalLevelPartition,
}

/// Hyperbola fit on 41 points spanning two widths `Delta / A` either side.
pub fn fit_at_min_gap(pair: &HamiltonianPair, instant: &Instant<'_>) -> Result<WilkinsonFit, AntiCrossingError> {
    let s_star = instant.s();
    let delta = instant.gap();
    let curvature = instant.lemma1_second(1)? - instant.lemma1_second(0)?;
    let a = (delta * curvature).max(0.0).sqrt();
    let half = if a > 0.0 { 2.0 * delta / a } else { 0.05 };
    let half = half.min(s_star).min(1.0 - s_star);
    if half.is_nan() || half <= 0.0 {
        return Err(AntiCrossingError::WindowTooSmall { s: s_star, points: 0, needed: 3 });
    }
    let grid: Vec<f64> = (0..41).map(|i| s_star - half + 2.0 * half * i as f64 / 40.0).collect();
    let sweep = SpectralSweep::new(pair, &grid)?;
    wilkinson_fit(&grid, &sweep.level(0), &sweep.level(1), s_star, delta)
}

/// Full analysis at the located minimum gap.
pub fn analyze(pair: &HamiltonianPair, options: AnalysisOptions) -> Result<AntiCrossingReport, AntiCrossingError> {
    let partition = partition_final_levels(pair, FINAL_LEVEL_TOL);
    if partition.ground_state().is_none() {
        return Err(AntiCrossingError::DegenerateGround(partition.levels[0].members.len()));
    }
    if partition.len() < 2 {
        return Err(AntiCrossingError::SingleLevel);
    }
    let MinGap { s_star, delta_min, .. } = min_gap(pair, options.coarse_points, options.tol)?;
    analyze_at(pair, &partition, s_star, delta_min, options.thresholds)
}

/// [`analyze`] with a known minimum.
pub fn analyze_at(
    pair: &HamiltonianPair,
    partition: &FinalLevelPartition,
    s_star: f64,
    delta_min: f64,
    thresholds: AcThresholds,
) -> Result<AntiCrossingReport, AntiCrossingError> {
    let mut instant = Instant::new(pair, s_star)?;
    fix_beta_gauge(&mut instant);

    let wilkinson = fit_at_min_gap(pair, &instant).ok();

    let (grid, _) = definition_grid(s_star)?;
    let sweep = SpectralSweep::new(pair, &grid)?;
    let series = compute_overlaps(&sweep, partition)?;
    let choi = measure_choi(&series, s_star, thresholds)?;
    let g_def = measure_g_def(&series, s_star, thresholds)?;

    let prop1 = check_prop1(&instant, partition)?;
    let corollary1_margin_unchecked = corollary1_margin(partition, choi.epsilon, delta_min);

    let mut h = identity_step(&instant)?;
    let (theorem2, corollary2) = loop {
        match (check_theorem2(&instant, h), check_corollary2(&instant, partition, h)) {
            (Ok(t), Ok(c)) => break (t, c),
            (Err(AntiCrossingError::StepTooLarge { .. }), _) | (_, Err(AntiCrossingError::StepTooLarge { .. }))
                if h > 1e-9 =>
            {
                h /= 10.0
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    };

    Ok(AntiCrossingReport {
        s_star,
        delta_min,
        beta: theorem2.beta,
        wilkinson,
        choi,
        g_def,
        prop1,
        corollary1_margin: check_corollary1(&choi, partition, delta_min),
        corollary1_margin_unchecked,
        offdiag_max: theorem2.offdiag_max,
        theorem2,
        corollary2,
        partition: partition.clone(),
    })
}
