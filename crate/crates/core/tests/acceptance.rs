//! Acceptance criteria 1-9. Each test writes one `criterion N ... PASS|FAIL`
//! line to stdout (bypassing the harness capture) and then asserts.

mod common;

use std::io::Write;
use std::time::{Duration, Instant as Clock};

use acgap::anticrossing::{
    analyze, check_prop1, compute_overlaps, partition_final_levels, AnalysisOptions, AntiCrossingReport,
    FINAL_LEVEL_TOL,
};
use acgap::basis::parse_state;
use acgap::cli::{cmd_scan, lemma1_deviation, Cli, Command, LEMMA1_TOLERANCES};
use acgap::clique::{random_instance, CliqueInstance};
use acgap::hamiltonian::build_clique_target;
use acgap::spectral::{min_gap, uniform_grid, Instant, SpectralSweep};
use acgap::{HamiltonianPair, MixerKind};
use clap::Parser;
use common::{oracle_and_diagonal, seeded_params, toy1, toy2};
use rayon::prelude::*;

fn verdict(id: u32, title: &str, pass: bool, elapsed: Duration, budget: Duration, lines: &[String]) {
    let within = elapsed <= budget;
    let ok = pass && within;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "criterion {id} ({title}): {} [{:.2} s of {:.0} s]",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    for line in lines {
        let _ = writeln!(out, "    {line}");
    }
    let _ = out.flush();
    assert!(within, "criterion {id} exceeded its runtime budget");
    assert!(pass, "criterion {id} failed: {lines:?}");
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

#[test]
fn criterion_1_encoding() {
    let clock = Clock::now();
    let mut lines = Vec::new();
    let mut pass = true;
    for alpha in [0.0, 0.5, 2.0 / 3.0] {
        let graph = acgap::clique::toy_example_1(alpha).unwrap().graph;
        let pair = HamiltonianPair::for_clique(&graph, MixerKind::SwapChain).unwrap();
        let diag = build_clique_target(&graph, pair.basis()).unwrap();
        let energy = |label: &str| diag[pair.basis().index_of(parse_state(label).unwrap()).unwrap()];
        let (tri, heavy) = (energy("111000"), energy("000111"));
        let ok = tri == -3.0 * alpha && heavy == 1.0 - 4.5 * alpha;
        pass &= ok;
        lines.push(format!("alpha {alpha:.6}: E(111000) = {tri}, E(000111) = {heavy} {}", mark(ok)));
    }
    let mismatched: Vec<u64> = (0..50)
        .filter(|&seed| {
            let (n, k, alpha) = seeded_params(seed);
            let inst = random_instance(n, k, 0.5, 1.0, 2.0, seed).unwrap();
            let inst = CliqueInstance { graph: inst.graph.with_alpha(alpha).unwrap(), ..inst };
            let (oracle, diag) = oracle_and_diagonal(&inst);
            oracle != diag
        })
        .collect();
    pass &= mismatched.is_empty();
    lines.push(format!("50 seeded instances (n 4..8): sorted oracle = sorted diagonal, mismatches {mismatched:?}"));
    verdict(1, "encoding", pass, clock.elapsed(), Duration::from_secs(5), &lines);
}

#[test]
fn criterion_2_spectral_identities() {
    let clock = Clock::now();
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, make) in [("toy1", toy1 as fn(f64) -> HamiltonianPair), ("toy2", toy2)] {
        for alpha in [0.0, 0.5] {
            let pair = make(alpha);
            let (mut worst5, mut worst6, mut count) = (0.0f64, 0.0f64, 0usize);
            for &s in &uniform_grid(21) {
                let inst = Instant::new(&pair, s).unwrap();
                for i in 0..pair.dim() {
                    for k in 0..pair.dim() {
                        if let Some(r) = inst.energy_identity_residual(i, k).unwrap() {
                            worst5 = worst5.max(r.abs() / (1.0 + inst.energy(k).abs()));
                            count += 1;
                        }
                    }
                    if let Some(r) = inst.gap_identity_residual(i).unwrap() {
                        let scale = 1.0 + inst.energy(0).abs().max(inst.energy(1).abs());
                        worst6 = worst6.max(r.abs() / scale);
                    }
                }
            }
            let ok = worst5 <= 1e-8 && worst6 <= 1e-8;
            pass &= ok;
            lines.push(format!(
                "{name} alpha {alpha}: worst scaled residuals {worst5:.2e} (energy) {worst6:.2e} (gap) over {count} triples {}",
                mark(ok)
            ));
        }
    }
    verdict(2, "spectral identities", pass, clock.elapsed(), Duration::from_secs(10), &lines);
}

#[test]
fn criterion_3_lemma1_finite_differences() {
    let clock = Clock::now();
    let pair = toy1(0.5);
    let s_star = min_gap(&pair, 1001, 1e-10).unwrap().s_star;
    let d = lemma1_deviation(&pair, 20, &[0], Some(s_star), 0, false).unwrap();
    let [t1, t2, tv] = LEMMA1_TOLERANCES;
    let pass = d.samples.len() == 20 && d.first <= t1 && d.second <= t2 && d.vector <= tv;
    let lines = vec![
        format!("toy1 alpha 0.5, ground level, {} points at least 0.05 from s* = {s_star:.6}", d.samples.len()),
        format!(
            "first {:.2e} (tol {t1:.0e}), second {:.2e} (tol {t2:.0e}), vector {:.2e} (tol {tv:.0e})",
            d.first, d.second, d.vector
        ),
    ];
    verdict(3, "derivative formulas", pass, clock.elapsed(), Duration::from_secs(10), &lines);
}

#[test]
fn criterion_4_min_gap_expansion() {
    let clock = Clock::now();
    let mut cases: Vec<(&str, f64, HamiltonianPair)> =
        [0.0, 0.2, 0.5, 0.6, 0.66].into_iter().map(|a| ("toy1", a, toy1(a))).collect();
    cases.push(("toy2", 0.2, toy2(0.2)));
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, alpha, pair) in &cases {
        let mg = min_gap(pair, 1001, 1e-10).unwrap();
        let inst = Instant::new(pair, mg.s_star).unwrap();
        let tol = 1e-6 * (1.0 + mg.delta_min);
        let (ok, text) = match check_prop1(&inst, &partition_final_levels(pair, FINAL_LEVEL_TOL)) {
            Ok(c) => (c.residual <= tol, format!("residual {:.2e}", c.residual)),
            Err(e) => (false, e.to_string()),
        };
        pass &= ok;
        lines.push(format!(
            "{name} alpha {alpha}: s* {:.6}, Delta {:.5e}, {text} (tol {tol:.2e}) {}",
            mg.s_star,
            mg.delta_min,
            mark(ok)
        ));
    }
    verdict(4, "min-gap level expansion", pass, clock.elapsed(), Duration::from_secs(30), &lines);
}

fn report(pair: &HamiltonianPair) -> AntiCrossingReport {
    analyze(pair, AnalysisOptions::default()).unwrap()
}

fn subsumption_holds(r: &AntiCrossingReport) -> bool {
    !r.choi.satisfied
        || (r.g_def.satisfied && r.g_def.gamma <= r.choi.gamma + 1e-9 && r.g_def.epsilon <= r.choi.epsilon + 1e-9)
}

#[test]
fn criterion_5_definition_behavior() {
    let clock = Clock::now();
    let mut lines = Vec::new();
    let r0 = report(&toy1(0.0));
    let ok0 = r0.choi.satisfied && r0.choi.gamma <= 0.1 && r0.choi.epsilon <= 0.1;
    lines.push(format!(
        "toy1 alpha 0: first definition satisfied {} with gamma {:.4}, epsilon {:.4} (needs satisfied, both <= 0.1) {}",
        r0.choi.satisfied,
        r0.choi.gamma,
        r0.choi.epsilon,
        mark(ok0)
    ));
    let r5 = report(&toy1(0.5));
    let ok5 = !r5.choi.satisfied && r5.g_def.satisfied && r5.g_def.gamma <= 0.1 && r5.g_def.epsilon <= 0.1;
    lines.push(format!(
        "toy1 alpha 0.5: first definition satisfied {} (gamma {:.4}, epsilon {:.4}); g definition satisfied {} (gamma {:.4}, epsilon {:.4}) {}",
        r5.choi.satisfied,
        r5.choi.gamma,
        r5.choi.epsilon,
        r5.g_def.satisfied,
        r5.g_def.gamma,
        r5.g_def.epsilon,
        mark(ok5)
    ));
    let mut satisfied = 0;
    let mut subsumed = true;
    for alpha in [0.0, 0.2, 0.5, 0.6, 0.66] {
        for pair in [toy1(alpha), toy2(alpha)] {
            if let Ok(r) = analyze(&pair, AnalysisOptions::default()) {
                satisfied += usize::from(r.choi.satisfied);
                subsumed &= subsumption_holds(&r);
            }
        }
    }
    lines.push(format!(
        "subsumption over both toys, alpha in {{0, 0.2, 0.5, 0.6, 0.66}}: {satisfied} satisfied cases {}",
        mark(subsumed)
    ));
    verdict(5, "definition behavior", ok0 && ok5 && subsumed, clock.elapsed(), Duration::from_secs(30), &lines);
}

/// The first ten seeds of `random_instance(8, 3, 0.5, 1.0, 2.0, seed)` at
/// alpha 0.5 whose first-definition measurement is satisfied under the
/// default analysis options, found by scanning seeds upward from 0.
const RANDOM_SEEDS: [u64; 10] = [81, 126, 158, 169, 232, 279, 387, 388, 389, 394];

#[test]
fn criterion_6_corollary1_margin() {
    let clock = Clock::now();
    let mut lines = Vec::new();
    let mut pass = true;
    let r0 = report(&toy1(0.0));
    match r0.corollary1_margin {
        Some(m) => {
            pass &= m >= 0.0;
            lines.push(format!("toy1 alpha 0: margin {m:.4e} {}", mark(m >= 0.0)));
        }
        None => lines.push(format!(
            "toy1 alpha 0: first definition not satisfied (gamma {:.4}, epsilon {:.4}); margin not applicable",
            r0.choi.gamma, r0.choi.epsilon
        )),
    }
    let hits: Vec<(u64, AntiCrossingReport)> = RANDOM_SEEDS
        .par_iter()
        .map(|&seed| {
            let inst = random_instance(8, 3, 0.5, 1.0, 2.0, seed).unwrap();
            let pair = HamiltonianPair::for_clique(&inst.graph.with_alpha(0.5).unwrap(), MixerKind::SwapChain).unwrap();
            (seed, report(&pair))
        })
        .collect();
    for (seed, r) in &hits {
        let Some(m) = r.corollary1_margin else {
            pass = false;
            lines.push(format!("seed {seed}: first definition no longer satisfied FAIL"));
            continue;
        };
        pass &= m >= 0.0;
        lines.push(format!(
            "random n 8 k 3 p 0.5 seed {seed} alpha 0.5: gamma {:.4}, epsilon {:.4}, margin {m:.4e} {}",
            r.choi.gamma,
            r.choi.epsilon,
            mark(m >= 0.0)
        ));
    }
    verdict(6, "margin where the first definition holds", pass, clock.elapsed(), Duration::from_secs(60), &lines);
}

#[test]
fn criterion_7_rotation_trend() {
    let clock = Clock::now();
    let mut lines = Vec::new();
    let mut pass = true;
    let mut slopes = Vec::new();
    for alpha in [0.6, 0.63, 0.66] {
        let r = report(&toy1(alpha));
        let (t, c) = (r.theorem2, r.corollary2);
        let thm = t.residual0.max(t.residual1);
        let cor = c.sum_residual.max(c.diff_residual);
        let opposite = c.g0_prime * c.g1_prime < 0.0;
        let ok = thm <= 1e-2 && cor <= 1e-2 && opposite;
        pass &= ok;
        lines.push(format!(
            "toy1 alpha {alpha}: Delta {:.4e}, beta {:.4e}, rotation residuals {:.3e} / {:.3e} (perturbative {:.3e} / {:.3e}), slope residuals {:.3e} / {:.3e}, g0' {:.4e}, g1' {:.4e} {}",
            r.delta_min,
            t.beta,
            t.residual0,
            t.residual1,
            t.analytic_residual0,
            t.analytic_residual1,
            c.sum_residual,
            c.diff_residual,
            c.g0_prime,
            c.g1_prime,
            mark(ok)
        ));
        slopes.push((r.delta_min, c.g0_prime.abs()));
    }
    slopes.sort_by(|a, b| b.0.total_cmp(&a.0));
    let increasing = slopes.windows(2).all(|w| w[1].1 > w[0].1);
    pass &= increasing;
    lines.push(format!("|g0'| strictly increasing as Delta decreases: {}", mark(increasing)));
    verdict(7, "rotation identities and slope trend", pass, clock.elapsed(), Duration::from_secs(60), &lines);
}

#[test]
fn criterion_8_dominance_order() {
    let clock = Clock::now();
    let pair = toy2(0.2);
    let grid = uniform_grid(1001);
    let sweep = SpectralSweep::new(&pair, &grid).unwrap();
    let series = compute_overlaps(&sweep, &partition_final_levels(&pair, FINAL_LEVEL_TOL)).unwrap();
    let mut lines = Vec::new();
    let mut pass = true;
    let mut intervals = Vec::new();
    for k in [2, 1, 0] {
        let idx: Vec<usize> = (0..grid.len()).filter(|&t| series.g[k][t] > 0.5).collect();
        let contiguous = idx.windows(2).all(|w| w[1] == w[0] + 1);
        let ok = !idx.is_empty() && contiguous;
        pass &= ok;
        match (idx.first(), idx.last()) {
            (Some(&a), Some(&b)) => {
                lines.push(format!("g_{k} > 0.5 on s in [{:.3}, {:.3}] {}", grid[a], grid[b], mark(ok)));
                intervals.push((a, b));
            }
            _ => lines.push(format!("g_{k} never exceeds 0.5 FAIL")),
        }
    }
    let ordered = intervals.len() == 3 && intervals.windows(2).all(|w| w[0].1 < w[1].0);
    pass &= ordered;
    lines.push(format!("intervals disjoint and ordered g_2, g_1, g_0: {}", mark(ordered)));
    verdict(8, "multi-level dominance", pass, clock.elapsed(), Duration::from_secs(10), &lines);
}

#[test]
fn criterion_9_determinism() {
    let clock = Clock::now();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        let cli = Cli::try_parse_from([
            "acgap",
            "scan",
            "--fixture",
            "toy2",
            "--alpha",
            "0,0.2",
            "--grid",
            "501",
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .unwrap();
        let Command::Scan(args) = cli.command else { unreachable!() };
        cmd_scan(&args).unwrap();
    }
    let mut compared = 0;
    let mut differing = Vec::new();
    for alpha in ["alpha_0", "alpha_0.2"] {
        for name in ["energies.csv", "gap.csv", "overlaps_a.csv", "overlaps_b.csv", "overlaps_g.csv"] {
            let read = |i: usize| std::fs::read(dirs[i].path().join(alpha).join(name)).unwrap();
            compared += 1;
            if read(0) != read(1) {
                differing.push(format!("{alpha}/{name}"));
            }
        }
    }
    let lines = vec![format!("{compared} CSV files compared, differing: {differing:?}")];
    verdict(9, "determinism", differing.is_empty(), clock.elapsed(), Duration::from_secs(60), &lines);
}
