//! Full, weights-only and biases-only RBM variants on the same landscape.

use super::{run_replicates, AveragedCurve};
use crate::error::{Error, Result};
use crate::evolution::{Model, ModelConfig, SurvivorSpec};
use crate::rbm::{Ablation, RbmConfig, RbmPersistence};
use crate::sat::FitnessFn;

#[derive(Debug, Clone)]
pub struct AblationConfig {
    pub fitness: FitnessFn,
    pub population_sizes: Vec<usize>,
    /// Template; its ablation field is overridden per variant.
    pub rbm: RbmConfig,
    pub survivors: SurvivorSpec,
    pub runs: usize,
    pub generations: usize,
    pub variants: Vec<Ablation>,
}

impl AblationConfig {
    /// `H = n`, `T = 20`, `B = 10`, 50% survivors.
    pub fn new(fitness: FitnessFn, population_sizes: Vec<usize>, learning_rate: f64) -> Self {
        let n = fitness.num_variables();
        AblationConfig {
            fitness,
            population_sizes,
            rbm: RbmConfig::new(n, learning_rate, 20, 10),
            survivors: SurvivorSpec::TopPercent(50.0),
            runs: 100,
            generations: 100,
            variants: vec![Ablation::Full, Ablation::WeightsOnly, Ablation::BiasesOnly],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationCurve {
    pub population_size: usize,
    pub ablation: Ablation,
    pub curve: AveragedCurve,
}

/// All variants at a given `N` share the replicate seeds, so run `r` of
/// every variant starts from the same initial population.
pub fn run_ablation(config: &AblationConfig, master_seed: u64) -> Result<Vec<AblationCurve>> {
    if config.runs == 0 {
        return Err(Error::Config("runs must be positive".into()));
    }
    let mut out = Vec::new();
    for (k, &n) in config.population_sizes.iter().enumerate() {
        let seed = crate::rng::derive_seed_tagged(master_seed, &format!("ablation/{k}"));
        for &ablation in &config.variants {
            let template = ModelConfig::new(
                Model::Rbm {
                    config: config.rbm.clone().with_ablation(ablation),
                    survivors: config.survivors,
                    persistence: RbmPersistence::Fresh,
                },
                n,
                config.fitness.clone(),
                config.generations,
                0,
            );
            let runs = run_replicates(&template, config.runs, seed)?;
            out.push(AblationCurve {
                population_size: n,
                ablation,
                curve: AveragedCurve::from_runs(&runs),
            });
        }
    }
    Ok(out)
}
