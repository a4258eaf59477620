//! Genome-completion test: do RBM completions carry the correlations of the
//! population, or only its per-locus frequencies?
//!
//! After each generation's RBM is trained, `completion_count` source genomes
//! are drawn from the survivors. Their first `clamp_length` loci are clamped
//! and the rest are sampled by the RBM ("inferred" genomes). "Shuffled"
//! genomes pair the known part of source `i` with the inferred part of
//! completion `j` for every `i < j`.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use super::AveragedCurve;
use crate::error::{Error, Result};
use crate::evolution::{
    run_generation_loop, GenerationObserver, GenerationRecord, Model, ModelConfig, SurvivorSpec,
};
use crate::rbm::{Rbm, RbmConfig, RbmPersistence};
use crate::rng::{derive_seed, SimRng};
use crate::sat::{FitnessFn, Genome};
use crate::stats::MeanSe;

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionTestConfig {
    /// Genome length of the even-parity landscape.
    pub parity_arity: usize,
    pub population_size: usize,
    pub completion_count: usize,
    /// Defaults to `parity_arity - 1`.
    pub clamp_length: usize,
    pub runs: usize,
    pub generations: usize,
    pub rbm: RbmConfig,
    pub survivors: SurvivorSpec,
    /// Use both orientations of every pair, doubling the shuffled count.
    pub symmetric_pairs: bool,
}

impl CompletionTestConfig {
    pub fn new(parity_arity: usize, population_size: usize) -> Self {
        CompletionTestConfig {
            parity_arity,
            population_size,
            completion_count: 100,
            clamp_length: parity_arity.saturating_sub(1),
            runs: 100,
            generations: 50,
            rbm: RbmConfig::new(parity_arity, 0.1, 20, 10),
            survivors: SurvivorSpec::TopPercent(50.0),
            symmetric_pairs: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.parity_arity;
        if n < 2 {
            return Err(Error::Config(format!("parity arity {n} must be at least 2")));
        }
        if self.clamp_length == 0 || self.clamp_length > n {
            return Err(Error::Config(format!(
                "clamp length {} outside 1..={n}",
                self.clamp_length
            )));
        }
        if self.completion_count < 2 {
            return Err(Error::Config("completion count must be at least 2".into()));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be positive".into()));
        }
        Ok(())
    }

    fn model_config(&self, seed: u64) -> ModelConfig {
        ModelConfig::new(
            Model::Rbm {
                config: self.rbm.clone(),
                survivors: self.survivors,
                persistence: RbmPersistence::Fresh,
            },
            self.population_size,
            FitnessFn::even_parity(self.parity_arity),
            self.generations,
            seed,
        )
    }
}

/// Number of shuffled genomes built from `count` completions.
pub fn shuffled_count(count: usize, symmetric: bool) -> usize {
    let pairs = count * count.saturating_sub(1) / 2;
    if symmetric {
        2 * pairs
    } else {
        pairs
    }
}

/// Crosses the first `clamp_length` loci of `known[i]` with the remaining
/// loci of `inferred[j]` for `i < j` (and `j < i` when `symmetric`).
pub fn shuffled_genomes(known: &[Genome], inferred: &[Genome], clamp_length: usize, symmetric: bool) -> Vec<Genome> {
    let count = known.len().min(inferred.len());
    let mut out = Vec::with_capacity(shuffled_count(count, symmetric));
    let cross = |i: usize, j: usize| {
        let mut bits = known[i].bits()[..clamp_length].to_vec();
        bits.extend_from_slice(&inferred[j].bits()[clamp_length..]);
        Genome::new(bits)
    };
    for i in 0..count {
        for j in i + 1..count {
            out.push(cross(i, j));
            if symmetric {
                out.push(cross(j, i));
            }
        }
    }
    out
}

/// One generation of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompletionSample {
    pub generation: usize,
    pub inferred_mean: f64,
    pub shuffled_mean: f64,
    /// Sources were drawn with replacement because there were fewer
    /// survivors than completions.
    pub with_replacement: bool,
}

struct CompletionObserver<'a> {
    config: &'a CompletionTestConfig,
    fitness: FitnessFn,
    samples: Vec<CompletionSample>,
}

impl GenerationObserver for CompletionObserver<'_> {
    fn on_rbm_trained(
        &mut self,
        generation: usize,
        survivors: &[Genome],
        rbm: &Rbm,
        rbm_config: &RbmConfig,
        rng: &mut SimRng,
    ) -> Result<()> {
        let count = self.config.completion_count;
        let clamp = self.config.clamp_length;
        let with_replacement = survivors.len() < count;
        let sources: Vec<&Genome> = if with_replacement {
            (0..count).map(|_| &survivors[rng.random_range(0..survivors.len())]).collect()
        } else {
            index::sample(rng, survivors.len(), count).into_iter().map(|i| &survivors[i]).collect()
        };
        let positions: Vec<usize> = (0..clamp).collect();
        let known: Vec<&[u8]> = sources.iter().map(|g| &g.bits()[..clamp]).collect();
        let inferred = rbm.complete_many(&positions, &known, rbm_config.iterations, rng)?;
        let known_genomes: Vec<Genome> = sources.into_iter().cloned().collect();
        let shuffled = shuffled_genomes(&known_genomes, &inferred, clamp, self.config.symmetric_pairs);
        let mean = |gs: &[Genome]| -> Result<f64> {
            let mut total = 0.0;
            for g in gs {
                total += self.fitness.evaluate(g)?;
            }
            Ok(total / gs.len() as f64)
        };
        self.samples.push(CompletionSample {
            generation,
            inferred_mean: mean(&inferred)?,
            shuffled_mean: mean(&shuffled)?,
            with_replacement,
        });
        Ok(())
    }
}

/// Per-generation averages over runs.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionPoint {
    pub generation: usize,
    pub inferred: MeanSe,
    pub shuffled: MeanSe,
    /// Paired `inferred - shuffled` over runs.
    pub gap: MeanSe,
    pub with_replacement: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionReport {
    pub points: Vec<CompletionPoint>,
    /// Per-run samples, one entry per RBM generation.
    pub runs: Vec<Vec<CompletionSample>>,
    pub curve: AveragedCurve,
}

impl CompletionReport {
    /// Paired gap averaged over generations `[first, last]` within each run,
    /// then across runs.
    pub fn window_gap(&self, first: usize, last: usize) -> MeanSe {
        let per_run: Vec<f64> = self
            .runs
            .iter()
            .map(|samples| {
                let window: Vec<f64> = samples
                    .iter()
                    .filter(|s| (first..=last).contains(&s.generation))
                    .map(|s| s.inferred_mean - s.shuffled_mean)
                    .collect();
                window.iter().sum::<f64>() / window.len() as f64
            })
            .collect();
        MeanSe::from_values(&per_run)
    }
}

impl CompletionReport {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "generation,runs,inferred_mean_fitness,inferred_se,shuffled_mean_fitness,shuffled_se,gap,gap_se,with_replacement"
        )?;
        for p in &self.points {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                p.generation,
                p.inferred.runs,
                p.inferred.mean,
                p.inferred.se,
                p.shuffled.mean,
                p.shuffled.se,
                p.gap.mean,
                p.gap.se,
                p.with_replacement
            )?;
        }
        Ok(())
    }
}

/// Runs the completion test `config.runs` times, run `r` seeded with
/// `derive_seed(master_seed, r)`.
pub fn run_completion_test(config: &CompletionTestConfig, master_seed: u64) -> Result<CompletionReport> {
    config.validate()?;
    let per_run: Vec<(Vec<GenerationRecord>, Vec<CompletionSample>)> = (0..config.runs)
        .into_par_iter()
        .map(|r| {
            let model = config.model_config(derive_seed(master_seed, r as u64));
            let mut observer = CompletionObserver {
                config,
                fitness: model.fitness.clone(),
                samples: Vec::new(),
            };
            let records = run_generation_loop(&model, &mut observer)?;
            Ok((records, observer.samples))
        })
        .collect::<Result<_>>()?;

    let generations = per_run[0].1.len();
    let points = (0..generations)
        .map(|g| {
            let column = |f: fn(&CompletionSample) -> f64| {
                MeanSe::from_values(&per_run.iter().map(|(_, s)| f(&s[g])).collect::<Vec<_>>())
            };
            CompletionPoint {
                generation: per_run[0].1[g].generation,
                inferred: column(|s| s.inferred_mean),
                shuffled: column(|s| s.shuffled_mean),
                gap: column(|s| s.inferred_mean - s.shuffled_mean),
                with_replacement: per_run.iter().any(|(_, s)| s[g].with_replacement),
            }
        })
        .collect();
    let (records, samples): (Vec<_>, Vec<_>) = per_run.into_iter().unzip();
    Ok(CompletionReport {
        points,
        runs: samples,
        curve: AveragedCurve::from_runs(&records),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(bits: &[u8]) -> Genome {
        Genome::new(bits.to_vec())
    }

    #[test]
    fn pair_counts() {
        assert_eq!(shuffled_count(100, false), 4950);
        assert_eq!(shuffled_count(100, true), 9900);
        let known: Vec<Genome> = (0..100).map(|i| g(&[(i % 2) as u8, 0, 0])).collect();
        assert_eq!(shuffled_genomes(&known, &known, 2, false).len(), 4950);
        assert_eq!(shuffled_genomes(&known, &known, 2, true).len(), 9900);
    }

    #[test]
    fn shuffled_orientation() {
        let known = [g(&[1, 1, 0]), g(&[0, 0, 0])];
        let inferred = [g(&[1, 1, 1]), g(&[0, 0, 1])];
        assert_eq!(shuffled_genomes(&known, &inferred, 2, false), vec![g(&[1, 1, 1])]);
        assert_eq!(
            shuffled_genomes(&known, &inferred, 2, true),
            vec![g(&[1, 1, 1]), g(&[0, 0, 1])]
        );
    }

    // with both orientations each source appears equally often among the
    // shuffled genomes, so the two means coincide
    #[test]
    fn full_clamp_has_no_gap() {
        let mut config = CompletionTestConfig::new(3, 100);
        config.clamp_length = 3;
        config.symmetric_pairs = true;
        config.runs = 3;
        config.generations = 4;
        let report = run_completion_test(&config, 2).unwrap();
        assert_eq!(report.points.len(), 4);
        for p in &report.points {
            assert!(p.gap.mean.abs() < 1e-12, "{p:?}");
        }
        assert_eq!(report.curve.generations(), 5);
        assert!(report.window_gap(0, 3).mean.abs() < 1e-12);
        assert_eq!(report.window_gap(0, 3).runs, 3);
    }

    #[test]
    fn small_survivor_pool_is_flagged() {
        let mut config = CompletionTestConfig::new(3, 100);
        config.runs = 2;
        config.generations = 2;
        config.completion_count = 60;
        let report = run_completion_test(&config, 0).unwrap();
        assert!(report.points.iter().all(|p| p.with_replacement));
        config.completion_count = 50;
        let report = run_completion_test(&config, 0).unwrap();
        assert!(report.points.iter().all(|p| !p.with_replacement));
        let mut csv = Vec::new();
        report.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 3);
    }

    #[test]
    fn invalid_configs() {
        let mut config = CompletionTestConfig::new(3, 100);
        config.clamp_length = 4;
        assert!(run_completion_test(&config, 0).is_err());
        config.clamp_length = 0;
        assert!(run_completion_test(&config, 0).is_err());
    }
}
