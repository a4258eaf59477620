//! Experiment drivers built on the generational loop.
//!
//! Every driver takes a master seed and derives one seed per replicate with
//! [`derive_seed`], so results are identical whatever the thread count.
//! Replicates run on the ambient rayon pool; wrap calls in
//! `ThreadPool::install` to bound parallelism.

pub mod ablation;
pub mod completion;
pub mod histogram;
pub mod output;
pub mod sweep;
pub mod switch;
pub mod trend;

use rayon::prelude::*;

use crate::error::Result;
use crate::evolution::{run_generation_loop, GenerationRecord, ModelConfig};
use crate::rng::derive_seed;
use crate::stats::MeanSe;

/// Per-generation mean and standard error over replicate runs.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedCurve {
    pub mean_fitness: Vec<MeanSe>,
    pub best_fitness: Vec<MeanSe>,
    pub mean_heterozygosity: Vec<MeanSe>,
}

impl AveragedCurve {
    pub fn from_runs(runs: &[Vec<GenerationRecord>]) -> Self {
        let column = |f: fn(&GenerationRecord) -> f64| {
            let per_run: Vec<Vec<f64>> = runs.iter().map(|r| r.iter().map(f).collect()).collect();
            MeanSe::per_generation(&per_run)
        };
        AveragedCurve {
            mean_fitness: column(|r| r.mean_fitness),
            best_fitness: column(|r| r.best_fitness),
            mean_heterozygosity: column(|r| r.mean_heterozygosity),
        }
    }

    pub fn generations(&self) -> usize {
        self.mean_fitness.len()
    }
}

/// Runs `runs` copies of `template`, replicate `r` seeded with
/// `derive_seed(master_seed, r)`.
pub fn run_replicates(
    template: &ModelConfig,
    runs: usize,
    master_seed: u64,
) -> Result<Vec<Vec<GenerationRecord>>> {
    (0..runs)
        .into_par_iter()
        .map(|r| {
            let mut config = template.clone();
            config.seed = derive_seed(master_seed, r as u64);
            run_generation_loop(&config, &mut ())
        })
        .collect()
}
