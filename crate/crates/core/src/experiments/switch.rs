//! Selection-switch study: the fitness landscape changes mid-run and the
//! response of genetic variation is tracked.

use super::{run_replicates, AveragedCurve};
use crate::error::{Error, Result};
use crate::evolution::{FitnessSwitch, Model, ModelConfig, SurvivorSpec};
use crate::rbm::{RbmConfig, RbmPersistence};
use crate::sat::FitnessFn;

#[derive(Debug, Clone)]
pub struct SwitchConfig {
    pub instance_a: FitnessFn,
    pub instance_b: FitnessFn,
    /// `None` keeps `instance_a` throughout.
    pub switch_generation: Option<usize>,
    pub population_size: usize,
    pub rbm: RbmConfig,
    pub survivors: SurvivorSpec,
    pub runs: usize,
    pub generations: usize,
}

impl SwitchConfig {
    /// `N = 100`, `H = n`, `T = 20`, `B = 10`, `η = 0.1`, 50% survivors.
    pub fn new(instance_a: FitnessFn, instance_b: FitnessFn, switch_generation: Option<usize>) -> Self {
        let n = instance_a.num_variables();
        SwitchConfig {
            instance_a,
            instance_b,
            switch_generation,
            population_size: 100,
            rbm: RbmConfig::new(n, 0.1, 20, 10),
            survivors: SurvivorSpec::TopPercent(50.0),
            runs: 100,
            generations: 100,
        }
    }

    pub fn model_config(&self) -> Result<ModelConfig> {
        let (a, b) = (self.instance_a.num_variables(), self.instance_b.num_variables());
        if a != b {
            return Err(Error::Config(format!(
                "switch instances differ in length: {a} and {b} variables"
            )));
        }
        let mut config = ModelConfig::new(
            Model::Rbm {
                config: self.rbm.clone(),
                survivors: self.survivors,
                persistence: RbmPersistence::Fresh,
            },
            self.population_size,
            self.instance_a.clone(),
            self.generations,
            0,
        );
        config.switch = self.switch_generation.map(|generation| FitnessSwitch {
            generation,
            fitness: self.instance_b.clone(),
        });
        Ok(config)
    }
}

pub fn run_switch(config: &SwitchConfig, master_seed: u64) -> Result<AveragedCurve> {
    if config.runs == 0 {
        return Err(Error::Config("runs must be positive".into()));
    }
    let runs = run_replicates(&config.model_config()?, config.runs, master_seed)?;
    Ok(AveragedCurve::from_runs(&runs))
}
