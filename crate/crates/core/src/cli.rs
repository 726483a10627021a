//! Command-line front end.
//!
//! ```text
//! acgap scan     (--instance PATH | --fixture NAME) [--alpha LIST] [--grid N] [--out DIR] ...
//! acgap verify   (--instance PATH | --fixture NAME) [--alpha LIST] [--checks LIST] ...
//! acgap fixtures [NAME ...] [--alpha A] [--out DIR]
//! ```
//!
//! Exit status is 0 on success, 1 when an asserted check fails and 2 on
//! usage or I/O errors. Errors are written to stderr as
//! `{"error": {"kind": ..., "message": ...}}`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::anticrossing::{
    analyze_at, check_prop1, compute_overlaps, level_overlaps, partition_final_levels, AcThresholds, AntiCrossingError,
    AntiCrossingReport, FinalLevelPartition, FINAL_LEVEL_TOL,
};
use crate::basis::BasisMode;
use crate::clique::{brute_force, random_instance, toy_example_1, toy_example_2, CliqueInstance};
use crate::hamiltonian::{HamiltonianPair, MixerKind, ProblemGraph};
use crate::spectral::{
    final_ground_index, min_gap, uniform_grid, Instant, MinGap, SpectralError, SpectralSweep, FD_STEP_FIRST,
    FD_STEP_SECOND,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "acgap", version, about = "Gap and anti-crossing analysis of adiabatic interpolations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep the spectrum and write CSV series plus a JSON report per alpha.
    Scan(RunArgs),
    /// Run the identity and invariant checks and print a JSON summary.
    Verify(RunArgs),
    /// Print the built-in fixtures as instance documents.
    Fixtures(FixturesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureName {
    Toy1,
    Toy2,
    Random,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InstanceArgs {
    /// Instance document (JSON).
    #[arg(long, conflicts_with = "fixture", required_unless_present = "fixture")]
    pub instance: Option<PathBuf>,
    /// Built-in instance.
    #[arg(long, value_enum)]
    pub fixture: Option<FixtureName>,
    /// Seed for `--fixture random`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Node count for `--fixture random`.
    #[arg(long, default_value_t = 7)]
    pub nodes: usize,
    /// Clique size for `--fixture random`.
    #[arg(long, default_value_t = 3)]
    pub clique: usize,
    /// Edge probability for `--fixture random`.
    #[arg(long, default_value_t = 0.5)]
    pub edge_prob: f64,
    #[arg(long, default_value_t = 1.0)]
    pub weight_low: f64,
    #[arg(long, default_value_t = 2.0)]
    pub weight_high: f64,
    /// Mixer override; defaults to the instance's own.
    #[arg(long, value_enum)]
    pub mixer: Option<MixerArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MixerArg {
    SwapChain,
    SwapCycle,
    TransverseField,
}

impl From<MixerArg> for MixerKind {
    fn from(m: MixerArg) -> Self {
        match m {
            MixerArg::SwapChain => MixerKind::SwapChain,
            MixerArg::SwapCycle => MixerKind::SwapCycle,
            MixerArg::TransverseField => MixerKind::TransverseField,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: InstanceArgs,
    /// Comma-separated alpha values; fractions such as 2/3 are accepted.
    #[arg(long, value_delimiter = ',', value_parser = parse_number)]
    pub alpha: Vec<f64>,
    /// Points of the uniform s grid.
    #[arg(long, default_value_t = 1001, value_parser = parse_grid)]
    pub grid: usize,
    /// Tolerance on the location of the minimum gap.
    #[arg(long, default_value_t = 1e-10, value_parser = parse_positive)]
    pub refine: f64,
    /// Number of levels written to the CSV files.
    #[arg(long, default_value_t = 6)]
    pub levels: usize,
    /// Output directory for `scan`.
    #[arg(long, default_value = "acgap-out")]
    pub out: PathBuf,
    /// Checks run by `verify`; all by default.
    #[arg(long, value_delimiter = ',', value_enum)]
    pub checks: Vec<CheckName>,
    #[arg(long, default_value_t = 0.1)]
    pub gamma_max: f64,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon_max: f64,
}

#[derive(Debug, Clone, Args)]
pub struct FixturesArgs {
    /// Fixtures to print; both toys by default.
    #[arg(value_enum)]
    pub names: Vec<ToyName>,
    #[arg(long, default_value_t = 0.5, value_parser = parse_number)]
    pub alpha: f64,
    /// Write `<name>.json` files here instead of printing.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ToyName {
    Toy1,
    Toy2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    Oracle,
    Lemma1,
    EnergyRatio,
    GapRatio,
    FailureCondition,
    Bounds,
    Prop1,
    Definitions,
    Cor1,
    Thm2,
    Cor2,
}

impl CheckName {
    const ALL: [CheckName; 11] = [
        CheckName::Oracle,
        CheckName::Lemma1,
        CheckName::EnergyRatio,
        CheckName::GapRatio,
        CheckName::FailureCondition,
        CheckName::Bounds,
        CheckName::Prop1,
        CheckName::Definitions,
        CheckName::Cor1,
        CheckName::Thm2,
        CheckName::Cor2,
    ];
}

fn parse_number(text: &str) -> Result<f64, String> {
    let value = match text.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|e| format!("{e}"))?;
            let den: f64 = den.trim().parse().map_err(|e| format!("{e}"))?;
            num / den
        }
        None => text.trim().parse().map_err(|e| format!("{e}"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("not a finite number: {text}"))
    }
}

fn parse_grid(text: &str) -> Result<usize, String> {
    let n: usize = text.parse().map_err(|e| format!("{e}"))?;
    if n < 51 {
        return Err(format!("grid needs at least 51 points, got {n}"));
    }
    Ok(n)
}

fn parse_positive(text: &str) -> Result<f64, String> {
    let v = parse_number(text)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be positive, got {text}"))
    }
}

/// Instance document: 1-based edges, `mixer` optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    pub weights: Vec<f64>,
    pub edges: Vec<[usize; 2]>,
    #[serde(default)]
    pub mixer: MixerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl InstanceFile {
    pub fn from_instance(instance: &CliqueInstance, mixer: MixerKind) -> Self {
        let g = &instance.graph;
        Self {
            n: g.n(),
            k: g.k(),
            alpha: g.alpha(),
            weights: g.weights().to_vec(),
            edges: g.edges().iter().map(|&(a, b)| [a, b]).collect(),
            mixer,
            description: Some(instance.description.clone()),
        }
    }

    pub fn to_graph(&self) -> Result<ProblemGraph, CliError> {
        ProblemGraph::new(self.n, self.edges.iter().map(|e| (e[0], e[1])), self.weights.clone(), self.k, self.alpha)
            .map_err(|e| CliError::new("invalid_instance", e.to_string()))
    }
}

/// Error reported on stderr with exit status 2.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    fn new(kind: &'static str, message: impl Into<String>) -> Self {
        Self { kind, message: message.into() }
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        Self::new("io", format!("{}: {err}", path.display()))
    }

    pub fn to_json(&self) -> Value {
        json!({ "error": { "kind": self.kind, "message": self.message } })
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{err}");
                return 0;
            }
            let e = CliError::new("usage", err.to_string().trim_end().to_string());
            let _ = writeln!(stderr, "{}", e.to_json());
            return 2;
        }
    };
    let result = match cli.command {
        Command::Scan(args) => cmd_scan(&args).map(|summary| {
            let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&summary).expect("json"));
            0
        }),
        Command::Verify(args) => cmd_verify(&args).map(|summary| {
            let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&summary.to_json()).expect("json"));
            if summary.passed() {
                0
            } else {
                1
            }
        }),
        Command::Fixtures(args) => cmd_fixtures(&args, stdout).map(|_| 0),
    };
    result.unwrap_or_else(|e| {
        let _ = writeln!(stderr, "{}", e.to_json());
        2
    })
}

/// Instance plus the mixer to use with it.
#[derive(Debug, Clone)]
pub struct LoadedInstance {
    pub instance: CliqueInstance,
    pub mixer: MixerKind,
}

pub fn load_instance(args: &InstanceArgs) -> Result<LoadedInstance, CliError> {
    let (instance, mixer) = match (&args.instance, args.fixture) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let file: InstanceFile = serde_json::from_str(&text)
                .map_err(|e| CliError::new("invalid_instance", format!("{}: {e}", path.display())))?;
            let graph = file.to_graph()?;
            let description = file.description.clone().unwrap_or_else(|| path.display().to_string());
            (CliqueInstance { graph, description, expected: None }, file.mixer)
        }
        (None, Some(FixtureName::Toy1)) => (fixture_error(toy_example_1(0.5))?, MixerKind::SwapChain),
        (None, Some(FixtureName::Toy2)) => (fixture_error(toy_example_2(0.2))?, MixerKind::SwapChain),
        (None, Some(FixtureName::Random)) => (
            fixture_error(random_instance(
                args.nodes,
                args.clique,
                args.edge_prob,
                args.weight_low,
                args.weight_high,
                args.seed,
            ))?,
            MixerKind::SwapChain,
        ),
        (None, None) => return Err(CliError::new("usage", "one of --instance or --fixture is required")),
    };
    Ok(LoadedInstance { instance, mixer: args.mixer.map(Into::into).unwrap_or(mixer) })
}

fn fixture_error<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, CliError> {
    r.map_err(|e| CliError::new("invalid_instance", e.to_string()))
}

fn alphas(args: &RunArgs, loaded: &LoadedInstance) -> Result<Vec<f64>, CliError> {
    if args.alpha.is_empty() {
        return Ok(vec![loaded.instance.graph.alpha()]);
    }
    if let Some(a) = args.alpha.iter().find(|a| **a < 0.0) {
        return Err(CliError::new("usage", format!("alpha must be nonnegative, got {a}")));
    }
    Ok(args.alpha.clone())
}

fn build_pair(loaded: &LoadedInstance, alpha: f64) -> Result<(ProblemGraph, HamiltonianPair), CliError> {
    let graph =
        loaded.instance.graph.with_alpha(alpha).map_err(|e| CliError::new("invalid_instance", e.to_string()))?;
    let pair = HamiltonianPair::for_clique(&graph, loaded.mixer)
        .map_err(|e| CliError::new("invalid_instance", e.to_string()))?;
    Ok((graph, pair))
}

fn spectral_error(e: impl std::fmt::Display) -> CliError {
    CliError::new("numerical", e.to_string())
}

/// Directory name used for one alpha value.
pub fn alpha_dir(alpha: f64) -> String {
    format!("alpha_{alpha}")
}

/// Writes a header row and one row per grid point, 17 significant digits.
pub fn write_series_csv(path: &Path, header: &[String], grid: &[f64], columns: &[Vec<f64>]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))?;
    let csv_err = |e: csv::Error| CliError::new("io", format!("{}: {e}", path.display()));
    w.write_record(header).map_err(csv_err)?;
    for (t, s) in grid.iter().enumerate() {
        let row = std::iter::once(*s).chain(columns.iter().map(|c| c[t])).map(|v| format!("{v:.16e}"));
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads a file written by [`write_series_csv`].
pub fn read_series_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))?;
    let csv_err = |e: csv::Error| CliError::new("io", format!("{}: {e}", path.display()));
    let header = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| CliError::new("io", format!("{}: {e}", path.display()))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

fn headed(prefix: &str, count: usize) -> Vec<String> {
    std::iter::once("s".to_string()).chain((0..count).map(|k| format!("{prefix}_{k}"))).collect()
}

/// Per-alpha outcome of `scan`.
#[derive(Debug, Clone, Serialize)]
pub struct ScanEntry {
    pub alpha: f64,
    pub directory: PathBuf,
    pub files: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
struct ScanReport<'a> {
    version: &'a str,
    config: &'a RunArgs,
    alpha: f64,
    instance: InstanceFile,
    basis: BasisMode,
    min_gap: Option<MinGap>,
    warnings: &'a [String],
    report: Option<&'a AntiCrossingReport>,
}

pub fn cmd_scan(args: &RunArgs) -> Result<Vec<ScanEntry>, CliError> {
    let loaded = load_instance(&args.source)?;
    let alphas = alphas(args, &loaded)?;
    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    alphas.par_iter().map(|&alpha| scan_one(args, &loaded, alpha)).collect()
}

fn scan_one(args: &RunArgs, loaded: &LoadedInstance, alpha: f64) -> Result<ScanEntry, CliError> {
    let (graph, pair) = build_pair(loaded, alpha)?;
    let dir = args.out.join(alpha_dir(alpha));
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut files = Vec::new();
    let mut warnings = Vec::new();

    let grid = uniform_grid(args.grid);
    let sweep = SpectralSweep::new(&pair, &grid).map_err(spectral_error)?;
    let m = args.levels.min(pair.dim());
    let energies: Vec<Vec<f64>> = (0..m).map(|k| sweep.level(k)).collect();
    write_series_csv(&dir.join("energies.csv"), &headed("E", m), &grid, &energies)?;
    files.push("energies.csv".to_string());
    write_series_csv(&dir.join("gap.csv"), &["s".into(), "delta".into()], &grid, &[sweep.gaps()])?;
    files.push("gap.csv".to_string());

    let partition = partition_final_levels(&pair, FINAL_LEVEL_TOL);
    let (a, b) = level_overlaps(&sweep, &partition);
    let lm = args.levels.min(partition.len());
    write_series_csv(&dir.join("overlaps_a.csv"), &headed("a", lm), &grid, &a[..lm])?;
    write_series_csv(&dir.join("overlaps_b.csv"), &headed("b", lm), &grid, &b[..lm])?;
    files.extend(["overlaps_a.csv".to_string(), "overlaps_b.csv".to_string()]);

    match compute_overlaps(&sweep, &partition) {
        Ok(series) => {
            write_series_csv(&dir.join("overlaps_g.csv"), &headed("g", m), &grid, &series.g[..m])?;
            files.push("overlaps_g.csv".to_string());
        }
        Err(e) => warnings.push(format!("g series skipped: {e}")),
    }

    let (mg, report) = analysis(&pair, &partition, args, &mut warnings);
    let doc = ScanReport {
        version: VERSION,
        config: args,
        alpha,
        instance: InstanceFile::from_instance(&CliqueInstance { graph, ..loaded.instance.clone() }, loaded.mixer),
        basis: pair.basis().mode(),
        min_gap: mg,
        warnings: &warnings,
        report: report.as_ref(),
    };
    let path = dir.join("report.json");
    let text = serde_json::to_string_pretty(&doc).expect("report serializes");
    fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
    files.push("report.json".to_string());
    Ok(ScanEntry { alpha, directory: dir, files, warnings })
}

fn analysis(
    pair: &HamiltonianPair,
    partition: &FinalLevelPartition,
    args: &RunArgs,
    warnings: &mut Vec<String>,
) -> (Option<MinGap>, Option<AntiCrossingReport>) {
    let mg = match min_gap(pair, args.grid, args.refine) {
        Ok(mg) => mg,
        Err(e) => {
            warnings.push(format!("minimum gap unavailable: {e}"));
            return (None, None);
        }
    };
    if partition.ground_state().is_none() {
        warnings.push(format!(
            "final ground level is {}-fold degenerate; anti-crossing analysis skipped",
            partition.levels[0].members.len()
        ));
        return (Some(mg), None);
    }
    if mg.degenerate_at_end {
        warnings.push("minimum gap at s = 1; anti-crossing analysis skipped".to_string());
        return (Some(mg), None);
    }
    let thresholds = AcThresholds { gamma_max: args.gamma_max, epsilon_max: args.epsilon_max };
    match analyze_at(pair, partition, mg.s_star, mg.delta_min, thresholds) {
        Ok(r) => (Some(mg), Some(r)),
        Err(e) => {
            warnings.push(format!("anti-crossing analysis failed: {e}"));
            (Some(mg), None)
        }
    }
}

/// How a check result is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Measured and reported, not asserted.
    Report,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub check: CheckName,
    pub alpha: f64,
    pub status: CheckStatus,
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifySummary {
    pub version: &'static str,
    pub results: Vec<CheckResult>,
    pub warnings: Vec<String>,
}

impl VerifySummary {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.status != CheckStatus::Fail)
    }

    pub fn to_json(&self) -> Value {
        let count = |s: CheckStatus| self.results.iter().filter(|r| r.status == s).count();
        json!({
            "version": self.version,
            "passed": self.passed(),
            "counts": {
                "pass": count(CheckStatus::Pass),
                "fail": count(CheckStatus::Fail),
                "report": count(CheckStatus::Report),
                "skipped": count(CheckStatus::Skipped),
            },
            "warnings": self.warnings,
            "results": self.results,
        })
    }
}

struct Recorder {
    alpha: f64,
    results: Vec<CheckResult>,
}

impl Recorder {
    fn assert(&mut self, check: CheckName, value: f64, tolerance: f64, detail: impl Into<String>) {
        let status = if value <= tolerance { CheckStatus::Pass } else { CheckStatus::Fail };
        self.push(check, status, Some(value), Some(tolerance), detail);
    }

    fn report(&mut self, check: CheckName, value: f64, detail: impl Into<String>) {
        self.push(check, CheckStatus::Report, Some(value), None, detail);
    }

    fn skip(&mut self, check: CheckName, reason: impl Into<String>) {
        self.push(check, CheckStatus::Skipped, None, None, reason);
    }

    fn fail(&mut self, check: CheckName, reason: impl Into<String>) {
        self.push(check, CheckStatus::Fail, None, None, reason);
    }

    fn push(
        &mut self,
        check: CheckName,
        status: CheckStatus,
        value: Option<f64>,
        tolerance: Option<f64>,
        detail: impl Into<String>,
    ) {
        self.results.push(CheckResult { check, alpha: self.alpha, status, value, tolerance, detail: detail.into() });
    }
}

pub fn cmd_verify(args: &RunArgs) -> Result<VerifySummary, CliError> {
    let loaded = load_instance(&args.source)?;
    let alphas = alphas(args, &loaded)?;
    let checks: Vec<CheckName> = if args.checks.is_empty() { CheckName::ALL.to_vec() } else { args.checks.clone() };
    let per_alpha =
        alphas.par_iter().map(|&alpha| verify_one(args, &loaded, alpha, &checks)).collect::<Result<Vec<_>, _>>()?;
    let mut results = Vec::new();
    let mut warnings = Vec::new();
    for (r, w) in per_alpha {
        results.extend(r);
        warnings.extend(w);
    }
    Ok(VerifySummary { version: VERSION, results, warnings })
}

fn verify_one(
    args: &RunArgs,
    loaded: &LoadedInstance,
    alpha: f64,
    checks: &[CheckName],
) -> Result<(Vec<CheckResult>, Vec<String>), CliError> {
    let (graph, pair) = build_pair(loaded, alpha)?;
    let mut rec = Recorder { alpha, results: Vec::new() };
    let mut warnings = Vec::new();
    let partition = partition_final_levels(&pair, FINAL_LEVEL_TOL);
    let unique_gs = partition.ground_state().is_some();
    if !unique_gs {
        warnings.push(format!(
            "alpha {alpha}: final ground level is {}-fold degenerate",
            partition.levels[0].members.len()
        ));
    }
    let wants = |c: CheckName| checks.contains(&c);

    if wants(CheckName::Oracle) {
        check_oracle(&mut rec, &graph, &pair);
    }
    let grid21 = uniform_grid(21);
    if wants(CheckName::EnergyRatio) || wants(CheckName::GapRatio) {
        check_ratio_identities(&mut rec, &pair, &grid21, wants(CheckName::EnergyRatio), wants(CheckName::GapRatio))?;
    }

    let located = min_gap(&pair, args.grid, args.refine);
    let closest = located.as_ref().ok().map(|m| m.s_star);
    let mg = match located {
        Ok(m) if !m.degenerate_at_end => Some(m),
        Ok(_) => {
            warnings.push(format!("alpha {alpha}: minimum gap at s = 1"));
            None
        }
        Err(e) => {
            warnings.push(format!("alpha {alpha}: minimum gap unavailable: {e}"));
            None
        }
    };

    if wants(CheckName::Lemma1) {
        check_lemma1(&mut rec, &pair, closest)?;
    }

    let Some(mg) = mg else {
        for c in [
            CheckName::FailureCondition,
            CheckName::Bounds,
            CheckName::Prop1,
            CheckName::Definitions,
            CheckName::Cor1,
            CheckName::Thm2,
            CheckName::Cor2,
        ] {
            if wants(c) {
                rec.skip(c, "no interior minimum gap");
            }
        }
        return Ok((rec.results, warnings));
    };

    if wants(CheckName::FailureCondition) || wants(CheckName::Bounds) {
        let inst = Instant::new(&pair, mg.s_star).map_err(spectral_error)?;
        let gs = final_ground_index(&pair);
        if wants(CheckName::FailureCondition) {
            match inst.failure_condition_residual().map_err(spectral_error)? {
                Some(diff) => {
                    let expected = mg.delta_min / (1.0 - mg.s_star);
                    rec.assert(
                        CheckName::FailureCondition,
                        (diff - expected).abs() / (1.0 + expected.abs()),
                        1e-8,
                        format!("ratio difference {diff:e} vs Delta/(1-s) {expected:e} at s* = {}", mg.s_star),
                    );
                }
                None => rec.skip(CheckName::FailureCondition, "vanishing solution component at s*"),
            }
        }
        if wants(CheckName::Bounds) {
            match inst.min_gap_bounds(gs).map_err(spectral_error)? {
                Some(b) => rec.report(
                    CheckName::Bounds,
                    b.delta_squared,
                    format!(
                        "lower {:e} (holds: {}), upper {:e} (holds: {})",
                        b.lower, b.lower_holds, b.upper, b.upper_holds
                    ),
                ),
                None => rec.skip(CheckName::Bounds, "vanishing solution component at s*"),
            }
        }
    }

    let anticrossing_checks =
        [CheckName::Prop1, CheckName::Definitions, CheckName::Cor1, CheckName::Thm2, CheckName::Cor2];
    if !unique_gs {
        for c in anticrossing_checks {
            if wants(c) {
                rec.skip(c, "degenerate final ground level");
            }
        }
        return Ok((rec.results, warnings));
    }
    if wants(CheckName::Prop1) {
        let inst = Instant::new(&pair, mg.s_star).map_err(spectral_error)?;
        match check_prop1(&inst, &partition) {
            Ok(p) => rec.assert(
                CheckName::Prop1,
                p.residual,
                1e-6 * (1.0 + mg.delta_min),
                format!("Delta {:e} vs level sum {:e}", p.delta, p.level_sum),
            ),
            Err(e) => rec.fail(CheckName::Prop1, e.to_string()),
        }
    }
    let rest = [CheckName::Definitions, CheckName::Cor1, CheckName::Thm2, CheckName::Cor2];
    if !rest.iter().any(|&c| wants(c)) {
        return Ok((rec.results, warnings));
    }
    let thresholds = AcThresholds { gamma_max: args.gamma_max, epsilon_max: args.epsilon_max };
    let r = match analyze_at(&pair, &partition, mg.s_star, mg.delta_min, thresholds) {
        Ok(r) => r,
        Err(e) => {
            let degenerate = matches!(e, AntiCrossingError::Spectral(SpectralError::Degenerate { .. }));
            for c in rest.into_iter().filter(|&c| wants(c)) {
                if degenerate {
                    rec.skip(c, format!("lowest levels unresolved at s*: {e}"));
                } else {
                    rec.fail(c, format!("analysis failed: {e}"));
                }
            }
            return Ok((rec.results, warnings));
        }
    };
    if wants(CheckName::Definitions) {
        rec.report(
            CheckName::Definitions,
            r.choi.gamma,
            format!(
                "first definition gamma {:.4} epsilon {:.4} satisfied {}; g definition gamma {:.4} epsilon {:.4} satisfied {}",
                r.choi.gamma, r.choi.epsilon, r.choi.satisfied, r.g_def.gamma, r.g_def.epsilon, r.g_def.satisfied
            ),
        );
    }
    if wants(CheckName::Cor1) {
        match r.corollary1_margin {
            Some(margin) => rec.assert(CheckName::Cor1, -margin, 0.0, format!("margin K eps - Delta = {margin:e}")),
            None => rec.skip(CheckName::Cor1, "first definition not satisfied"),
        }
    }
    if wants(CheckName::Thm2) {
        let t = r.theorem2;
        rec.report(
            CheckName::Thm2,
            t.residual0.max(t.residual1),
            format!(
                "beta {:e}, h {:e}, residuals {:e} / {:e}, offdiag {:e} ({:e} of beta Delta)",
                t.beta, t.h, t.residual0, t.residual1, t.offdiag_max, t.offdiag_relative
            ),
        );
    }
    if wants(CheckName::Cor2) {
        let c = r.corollary2;
        rec.report(
            CheckName::Cor2,
            c.sum_residual.max(c.diff_residual),
            format!(
                "g0' {:e}, g1' {:e}, sum residual {:e}, difference residual {:e}",
                c.g0_prime, c.g1_prime, c.sum_residual, c.diff_residual
            ),
        );
    }
    Ok((rec.results, warnings))
}

fn check_oracle(rec: &mut Recorder, graph: &ProblemGraph, pair: &HamiltonianPair) {
    if !matches!(pair.basis().mode(), BasisMode::WeightK(_)) {
        rec.skip(CheckName::Oracle, "basis is not a weight-k subspace");
        return;
    }
    let instance = CliqueInstance { graph: graph.clone(), description: String::new(), expected: None };
    let bf = match brute_force(&instance) {
        Ok(bf) => bf,
        Err(e) => {
            rec.skip(CheckName::Oracle, e.to_string());
            return;
        }
    };
    let mut from_oracle: Vec<(String, f64)> = bf
        .table
        .iter()
        .map(|row| {
            let mut bits = vec!['0'; graph.n()];
            for &v in &row.nodes {
                bits[v - 1] = '1';
            }
            (bits.into_iter().collect(), row.energy)
        })
        .collect();
    let mut from_pair: Vec<(String, f64)> =
        (0..pair.dim()).map(|i| (pair.basis().label(i), pair.final_energy(i))).collect();
    from_oracle.sort_by(|a, b| a.0.cmp(&b.0));
    from_pair.sort_by(|a, b| a.0.cmp(&b.0));
    let mismatches = from_oracle.iter().zip(&from_pair).filter(|(a, b)| a != b).count()
        + from_oracle.len().abs_diff(from_pair.len());
    rec.assert(
        CheckName::Oracle,
        mismatches as f64,
        0.0,
        format!("{} subsets, best {:?} at {}", from_oracle.len(), bf.best, bf.best_energy),
    );
}

fn check_ratio_identities(
    rec: &mut Recorder,
    pair: &HamiltonianPair,
    grid: &[f64],
    energy_ratio: bool,
    gap_ratio: bool,
) -> Result<(), CliError> {
    let (mut worst5, mut worst6, mut n5, mut n6) = (0.0f64, 0.0f64, 0usize, 0usize);
    for &s in grid {
        let inst = Instant::new(pair, s).map_err(spectral_error)?;
        for i in 0..pair.dim() {
            if energy_ratio {
                for k in 0..pair.dim() {
                    if let Some(r) = inst.energy_identity_residual(i, k).map_err(spectral_error)? {
                        worst5 = worst5.max(r.abs() / (1.0 + inst.energy(k).abs()));
                        n5 += 1;
                    }
                }
            }
            if gap_ratio {
                if let Some(r) = inst.gap_identity_residual(i).map_err(spectral_error)? {
                    worst6 = worst6.max(r.abs() / (1.0 + inst.gap()));
                    n6 += 1;
                }
            }
        }
    }
    if energy_ratio {
        rec.assert(CheckName::EnergyRatio, worst5, 1e-8, format!("{n5} (i, k, s) triples on {} points", grid.len()));
    }
    if gap_ratio {
        rec.assert(CheckName::GapRatio, worst6, 1e-8, format!("{n6} (i, s) pairs on {} points", grid.len()));
    }
    Ok(())
}

/// Largest deviations between the derivative formulas and central
/// differences over levels `levels` at `points` seeded random values of
/// `s` in `(0.02, 0.98)`, none within 0.05 of `s_star`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma1Deviation {
    pub first: f64,
    pub second: f64,
    pub vector: f64,
    pub samples: Vec<f64>,
    /// Draws discarded because the differences at `h` and `2h` disagreed.
    pub unresolved: usize,
}

/// Tolerances on the first, second and vector derivatives.
pub const LEMMA1_TOLERANCES: [f64; 3] = [1e-6, 1e-5, 1e-6];

/// With `resolved_only`, a draw is replaced when the difference quotients at
/// steps `h` and `2h` differ by more than a tenth of the tolerance, so that
/// near-crossings too sharp for the step do not count against the formulas.
pub fn lemma1_deviation(
    pair: &HamiltonianPair,
    points: usize,
    levels: &[usize],
    s_star: Option<f64>,
    seed: u64,
    resolved_only: bool,
) -> Result<Lemma1Deviation, SpectralError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Lemma1Deviation { first: 0.0, second: 0.0, vector: 0.0, samples: Vec::new(), unresolved: 0 };
    let at = |x: f64| Instant::new(pair, x);
    while out.samples.len() < points && out.unresolved < 50 * points.max(1) {
        let s: f64 = rng.gen_range(0.02..0.98);
        if s_star.is_some_and(|x| (x - s).abs() < 0.05) {
            continue;
        }
        let inst = at(s)?;
        let mut errors = [0.0f64; 3];
        let mut spread = [0.0f64; 3];
        for &k in levels {
            let v = inst.vector(k);
            let aligned = |w: nalgebra::DVector<f64>| if w.dot(&v) < 0.0 { -w } else { w };
            let quotients = |h1: f64, h2: f64| -> Result<(f64, f64, nalgebra::DVector<f64>), SpectralError> {
                let (p1, m1, p2, m2) = (at(s + h1)?, at(s - h1)?, at(s + h2)?, at(s - h2)?);
                Ok((
                    (p1.energy(k) - m1.energy(k)) / (2.0 * h1),
                    (p2.energy(k) - 2.0 * inst.energy(k) + m2.energy(k)) / (h2 * h2),
                    (aligned(p1.vector(k)) - aligned(m1.vector(k))) / (2.0 * h1),
                ))
            };
            let (fd1, fd2, fdv) = quotients(FD_STEP_FIRST, FD_STEP_SECOND)?;
            errors[0] = errors[0].max((inst.lemma1_first(k)? - fd1).abs());
            errors[1] = errors[1].max((inst.lemma1_second(k)? - fd2).abs());
            errors[2] = errors[2].max((inst.lemma1_vector_derivative(k)? - &fdv).norm());
            if resolved_only {
                let (c1, c2, cv) = quotients(2.0 * FD_STEP_FIRST, 2.0 * FD_STEP_SECOND)?;
                spread[0] = spread[0].max((c1 - fd1).abs());
                spread[1] = spread[1].max((c2 - fd2).abs());
                spread[2] = spread[2].max((cv - fdv).norm());
            }
        }
        if (0..3).any(|j| spread[j] > 0.1 * LEMMA1_TOLERANCES[j]) {
            out.unresolved += 1;
            continue;
        }
        out.first = out.first.max(errors[0]);
        out.second = out.second.max(errors[1]);
        out.vector = out.vector.max(errors[2]);
        out.samples.push(s);
    }
    Ok(out)
}

fn check_lemma1(rec: &mut Recorder, pair: &HamiltonianPair, s_star: Option<f64>) -> Result<(), CliError> {
    match lemma1_deviation(pair, 20, &[0], s_star, 0, true) {
        Ok(d) if d.samples.is_empty() => {
            rec.skip(CheckName::Lemma1, "no sample where the difference step resolves the ground level")
        }
        Ok(d) => {
            let detail = format!(
                "ground level, {} interior points, {} draws skipped where the step does not resolve the level",
                d.samples.len(),
                d.unresolved
            );
            let [t1, t2, tv] = LEMMA1_TOLERANCES;
            rec.assert(CheckName::Lemma1, d.first, t1, format!("first derivative, {detail}"));
            rec.assert(CheckName::Lemma1, d.second, t2, format!("second derivative, {detail}"));
            rec.assert(CheckName::Lemma1, d.vector, tv, format!("vector derivative, {detail}"));
        }
        Err(SpectralError::Degenerate { s, .. }) => {
            rec.skip(CheckName::Lemma1, format!("ground level degenerate at s = {s}"))
        }
        Err(e) => return Err(spectral_error(e)),
    }
    Ok(())
}

pub fn cmd_fixtures(args: &FixturesArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let names = if args.names.is_empty() { vec![ToyName::Toy1, ToyName::Toy2] } else { args.names.clone() };
    let mut docs = Vec::new();
    for name in &names {
        let (label, inst) = match name {
            ToyName::Toy1 => ("toy1", toy_example_1(args.alpha)),
            ToyName::Toy2 => ("toy2", toy_example_2(args.alpha)),
        };
        let inst = fixture_error(inst)?;
        docs.push((label, InstanceFile::from_instance(&inst, MixerKind::SwapChain)));
    }
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for (label, doc) in &docs {
            let path = dir.join(format!("{label}.json"));
            let text = serde_json::to_string_pretty(doc).expect("instance serializes");
            fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        }
        return Ok(());
    }
    let value = if docs.len() == 1 {
        serde_json::to_value(&docs[0].1).expect("instance serializes")
    } else {
        Value::Object(
            docs.iter()
                .map(|(label, doc)| (label.to_string(), serde_json::to_value(doc).expect("instance serializes")))
                .collect(),
        )
    };
    writeln!(stdout, "{}", serde_json::to_string_pretty(&value).expect("json"))
        .map_err(|e| CliError::new("io", e.to_string()))
}
