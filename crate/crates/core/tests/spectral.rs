mod common;

use acgap::basis::mixer_graph;
use acgap::cli::lemma1_deviation;
use acgap::hamiltonian::build_transverse_field;
use acgap::spectral::{eigendecompose, min_gap, uniform_grid, Instant, SpectralSweep};
use common::{jacobi_eigen, toy1, toy2};

#[test]
fn eigendecompose_matches_jacobi_on_toy1() {
    let pair = toy1(0.5);
    let h = pair.interpolate(0.5).unwrap();
    let eig = eigendecompose(&h).unwrap();
    let (values, vectors) = jacobi_eigen(&h);
    for (k, v) in values.iter().enumerate() {
        assert!((eig.values[k] - v).abs() < 1e-9, "level {k}: {} vs {v}", eig.values[k]);
    }
    for k in 0..2 {
        let a = eig.vectors.column(k);
        let b = vectors.column(k);
        assert!((a.dot(&b).abs() - 1.0).abs() < 1e-9, "vector {k}");
    }
}

#[test]
fn eigendecompose_matches_jacobi_on_degenerate_spectrum() {
    let (_, h0) = build_transverse_field(4).unwrap();
    let eig = eigendecompose(&h0).unwrap();
    let (values, _) = jacobi_eigen(&h0);
    for (k, v) in values.iter().enumerate() {
        assert!((eig.values[k] - v).abs() < 1e-9);
    }
    assert!(eig.orthonormality_error() < 1e-10);
}

#[test]
fn transverse_field_ground_level() {
    for n in 1..=6 {
        let (basis, h0) = build_transverse_field(n).unwrap();
        let eig = eigendecompose(&h0).unwrap();
        assert!((eig.values[0] + n as f64).abs() < 1e-10, "n = {n}");
        assert!(eig.values[1] - eig.values[0] > 1.0 - 1e-10, "n = {n}");
        let g = mixer_graph(&h0, &basis).unwrap();
        assert_eq!(g.edge_count(), n << (n - 1));
        assert!((0..basis.len()).all(|i| g.degree(i) == n));
    }
}

#[test]
fn sweep_is_orthonormal_and_weyl_continuous() {
    for pair in [toy1(0.0), toy1(0.5), toy2(0.2)] {
        let grid = uniform_grid(201);
        let sweep = SpectralSweep::new(&pair, &grid).unwrap();
        let spread = (pair.h_dot()).norm();
        for (t, v) in sweep.vectors().iter().enumerate() {
            let dev = (v.transpose() * v - nalgebra::DMatrix::identity(v.nrows(), v.ncols())).norm();
            assert!(dev < 1e-10, "t = {t}: {dev}");
        }
        let e = sweep.energies();
        for t in 0..grid.len() - 1 {
            let step = (pair.interpolate(grid[t + 1]).unwrap() - pair.interpolate(grid[t]).unwrap()).norm();
            assert!(step <= (grid[t + 1] - grid[t]) * spread * (1.0 + 1e-12));
            for (k, (a, b)) in e[t].iter().zip(e[t + 1].iter()).enumerate() {
                assert!((b - a).abs() <= step + 1e-12, "t = {t}, k = {k}");
            }
        }
    }
}

#[test]
fn gap_stays_open_before_the_end() {
    for pair in [toy1(0.0), toy1(0.5), toy1(0.66), toy2(0.2)] {
        let grid = uniform_grid(1001);
        let sweep = SpectralSweep::new(&pair, &grid).unwrap();
        let gaps = sweep.gaps();
        assert!(gaps[..grid.len() - 1].iter().all(|&g| g > 0.0));
        let mg = min_gap(&pair, 1001, 1e-10).unwrap();
        assert!(mg.delta_min > 0.0 && !mg.degenerate_at_end);
    }
}

#[test]
fn lemma1_agrees_with_finite_differences() {
    let pair = toy1(0.5);
    let s_star = min_gap(&pair, 1001, 1e-10).unwrap().s_star;
    for seed in 0..3 {
        let d = lemma1_deviation(&pair, 20, &[0], Some(s_star), seed, false).unwrap();
        assert_eq!(d.samples.len(), 20);
        assert!(d.samples.iter().all(|s| (s - s_star).abs() >= 0.05));
        assert!(d.first <= 1e-6, "{d:?}");
        assert!(d.second <= 1e-5, "{d:?}");
        assert!(d.vector <= 1e-6, "{d:?}");
    }
}

#[test]
fn ratio_identities_on_both_toys() {
    for pair in [toy1(0.0), toy1(0.5), toy2(0.0), toy2(0.5)] {
        for &s in &uniform_grid(21) {
            let inst = Instant::new(&pair, s).unwrap();
            for i in 0..pair.dim() {
                for k in 0..pair.dim() {
                    if let Some(r) = inst.energy_identity_residual(i, k).unwrap() {
                        assert!(r.abs() <= 1e-8 * (1.0 + inst.energy(k).abs()), "s {s} i {i} k {k}: {r}");
                    }
                }
                if let Some(r) = inst.gap_identity_residual(i).unwrap() {
                    assert!(r.abs() <= 1e-8 * (1.0 + inst.energy(1).abs()), "s {s} i {i}: {r}");
                }
            }
        }
    }
}
