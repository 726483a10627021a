#![allow(dead_code)]

use acgap::clique::{toy_example_1, toy_example_2};
use acgap::{HamiltonianPair, MixerKind};
use nalgebra::DMatrix;

pub fn toy1(alpha: f64) -> HamiltonianPair {
    HamiltonianPair::for_clique(&toy_example_1(alpha).unwrap().graph, MixerKind::SwapChain).unwrap()
}

pub fn toy2(alpha: f64) -> HamiltonianPair {
    HamiltonianPair::for_clique(&toy_example_2(alpha).unwrap().graph, MixerKind::SwapChain).unwrap()
}

/// Cyclic Jacobi rotations until the off-diagonal mass is negligible.
/// Returns ascending eigenvalues and matching eigenvector columns.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].powi(2))
            .sum();
        if off.sqrt() < 1e-15 * (1.0 + m.norm()) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Instance parameters for the `i`-th seeded oracle instance: n in 4..=8,
/// k in 2..n, alpha in {0, 0.25, 0.5}.
pub fn seeded_params(i: u64) -> (usize, usize, f64) {
    let n = 4 + (i % 5) as usize;
    let k = 2 + (i / 5) as usize % (n - 2);
    let alpha = [0.0, 0.25, 0.5][(i % 3) as usize];
    (n, k, alpha)
}

pub type Labelled = Vec<(String, f64)>;

/// Brute-force table and target diagonal as `(label, energy)` lists sorted by
/// energy, then label.
pub fn oracle_and_diagonal(instance: &acgap::clique::CliqueInstance) -> (Labelled, Labelled) {
    let n = instance.graph.n();
    let bf = acgap::clique::brute_force(instance).unwrap();
    let mut oracle: Vec<(String, f64)> = bf
        .table
        .iter()
        .map(|row| {
            let label: String = (1..=n).map(|v| if row.nodes.contains(&v) { '1' } else { '0' }).collect();
            (label, row.energy)
        })
        .collect();
    let pair = HamiltonianPair::for_clique(&instance.graph, MixerKind::SwapChain).unwrap();
    let mut diag: Vec<(String, f64)> = (0..pair.dim()).map(|i| (pair.basis().label(i), pair.final_energy(i))).collect();
    let key = |a: &(String, f64), b: &(String, f64)| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0));
    oracle.sort_by(key);
    diag.sort_by(key);
    (oracle, diag)
}
