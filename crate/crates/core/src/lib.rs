//! Evolution of binary genomes on MAX-SAT and parity fitness landscapes,
//! comparing a restricted-Boltzmann-machine reproduction model with
//! random mutation and a best-random-guess baseline.
//!
//! The crate is organised bottom-up:
//!
//! * [`sat`]: fitness landscapes (CNF formulas, parity), random instance
//!   generation and DIMACS interchange.
//! * [`rbm`]: a Bernoulli RBM trained with persistent contrastive divergence.
//! * [`evolution`]: populations, truncation selection and the generational loop.
//! * [`experiments`]: sweeps, trend tables and the secondary studies
//!   (genome completion, ablation, selection switch, fitness histograms).

pub mod error;
pub mod evolution;
pub mod experiments;
mod linalg;
pub mod rbm;
pub mod rng;
pub mod sat;
pub mod stats;

pub use error::{Error, Result};
pub use evolution::{
    mean_expected_heterozygosity, run_generation_loop, FitnessSwitch, GenerationObserver,
    GenerationRecord, Model, ModelConfig, Population, SurvivorSpec,
};
pub use rbm::{Ablation, PositivePhase, Rbm, RbmConfig, RbmPersistence};
pub use rng::{derive_seed, SimRng};
pub use sat::{CnfInstance, FitnessFn, Genome, Literal};
pub use stats::MeanSe;
