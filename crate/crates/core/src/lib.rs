//! Quantization of Markov-type measures on graph-directed fractals.
//!
//! A [`MarkovSystem`] couples a row-stochastic matrix `P` with contraction
//! ratios `C` and an initial distribution `χ`. The crate computes the
//! spectral exponent `s_r`, the strongly connected structure that drives the
//! log-correction, the finite maximal antichains `Λ_{k,r}`, and two-sided
//! bounds on the quantization error of a concrete realization on the line.

pub mod analysis;
pub mod antichain;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod graph;
pub mod model;
pub mod numeric;
pub mod spectral;
pub mod verify;

pub use analysis::{analyze, AnalysisReport};
pub use antichain::{enumerate_antichain, Antichain, AntichainOptions, AntichainWalker, WordVisitor};
pub use config::{load_model, ModelConfig};
pub use error::{Error, Result};
pub use graph::{critical_structure, scc_condensation, Condensation, CriticalStructure};
pub use model::{validate_system, MarkovSystem, Number, ValidationReport, Violation, Word};
pub use spectral::{solve_sr, Scope, SpectralSolution};
