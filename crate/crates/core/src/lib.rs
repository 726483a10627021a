//! Spectral analysis of adiabatic interpolations `H(s) = (1 - s) H0 + s H1`
//! with a diagonal target: gap tracking, anti-crossing measurement and the
//! weighted k-clique encoding.

pub mod anticrossing;
pub mod basis;
pub mod cli;
pub mod clique;
pub mod hamiltonian;
pub mod spectral;

pub use anticrossing::{analyze, AnalysisOptions, AntiCrossingReport};
pub use basis::{BasisMode, BasisSet};
pub use hamiltonian::{HamiltonianPair, MixerKind, ProblemGraph};
pub use spectral::{min_gap, Instant, MinGap, SpectralSweep};
