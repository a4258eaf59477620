//! Exhaustive parameter sweeps with best-combination selection.
//!
//! Admissibility rules:
//!
//! * `N` must not exceed the largest `N_max` of the grid;
//! * RM: `S·N/100` below one survivor is excluded;
//! * RBM: fewer than 50 resolved survivors is excluded;
//! * RBM: the batch size must be strictly below `N`.
//!
//! [`SweepGrid::enumerate`] is the single place these rules live; the CLI's
//! `validate` command reports exactly its output.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use super::output::{read_run_csv, write_atomic, write_averaged_csv, write_run_csv};
use super::AveragedCurve;
use crate::error::{Error, Result};
use crate::evolution::{
    run_generation_loop, GenerationRecord, Model, ModelConfig, SurvivorSpec, MIN_RBM_SURVIVORS,
};
use crate::rbm::{PositivePhase, RbmConfig, RbmPersistence};
use crate::rng::{derive_seed, derive_seed_tagged, rng_from_seed};
use crate::sat::FitnessFn;
use crate::stats::MeanSe;

#[derive(Debug, Clone)]
pub struct NamedFitness {
    pub name: String,
    pub fitness: FitnessFn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbmAxes {
    pub population_sizes: Vec<usize>,
    pub survivors: Vec<SurvivorSpec>,
    /// Hidden units as a multiple of the genome length.
    pub hidden_multipliers: Vec<usize>,
    pub iterations: Vec<usize>,
    pub learning_rates: Vec<f64>,
    pub batch_sizes: Vec<usize>,
}

impl RbmAxes {
    /// The RBM column of the published parameter table.
    pub fn full_table() -> Self {
        RbmAxes {
            population_sizes: vec![100, 1000, 10000],
            survivors: pct(&[5.0, 10.0, 50.0]),
            hidden_multipliers: vec![1, 2],
            iterations: vec![20, 100],
            learning_rates: vec![0.00001, 0.0001, 0.001, 0.01, 0.05],
            batch_sizes: vec![10, 100, 1000],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmAxes {
    pub population_sizes: Vec<usize>,
    pub survivors: Vec<SurvivorSpec>,
    pub mutations: Vec<usize>,
}

impl RmAxes {
    /// The RM column of the published parameter table.
    pub fn full_table() -> Self {
        let mut survivors = vec![SurvivorSpec::TopCount(1)];
        survivors.extend(pct(&[1.0, 5.0, 10.0, 50.0]));
        RmAxes {
            population_sizes: vec![2, 10, 100, 1000, 10000],
            survivors,
            mutations: vec![1, 2, 3, 4, 5],
        }
    }
}

fn pct(values: &[f64]) -> Vec<SurvivorSpec> {
    values.iter().map(|&p| SurvivorSpec::TopPercent(p)).collect()
}

#[derive(Debug, Clone)]
pub struct SweepGrid {
    pub instances: Vec<NamedFitness>,
    /// Each value defines one comparison panel over combinations with
    /// `N <= N_max`.
    pub n_max: Vec<usize>,
    pub rbm: Option<RbmAxes>,
    pub rm: Option<RmAxes>,
    pub brg_population_sizes: Vec<usize>,
    pub checkpoints: Vec<usize>,
    pub replicates: usize,
    pub rbm_persistence: RbmPersistence,
    pub positive_phase: PositivePhase,
}

impl SweepGrid {
    pub fn new(instances: Vec<NamedFitness>, n_max: Vec<usize>) -> Self {
        SweepGrid {
            instances,
            n_max,
            rbm: None,
            rm: None,
            brg_population_sizes: Vec::new(),
            checkpoints: vec![50, 100, 500],
            replicates: 1,
            rbm_persistence: RbmPersistence::Fresh,
            positive_phase: PositivePhase::Probabilities,
        }
    }

    pub fn generations(&self) -> usize {
        self.checkpoints.iter().copied().max().unwrap_or(0)
    }

    fn largest_n_max(&self) -> usize {
        self.n_max.iter().copied().max().unwrap_or(usize::MAX)
    }

    /// Every combination of the axes, split into admissible and excluded.
    pub fn enumerate(&self) -> (Vec<Combination>, Vec<Exclusion>) {
        let mut admitted = Vec::new();
        let mut excluded = Vec::new();
        let n_max = self.largest_n_max();
        let mut push = |combo: Combination| {
            let reasons = combo.exclusion_reasons(n_max);
            if reasons.is_empty() {
                admitted.push(combo);
            } else {
                excluded.push(Exclusion {
                    combination: combo,
                    reasons,
                });
            }
        };
        for instance in 0..self.instances.len() {
            if let Some(axes) = &self.rbm {
                for &n in &axes.population_sizes {
                    for &survivors in &axes.survivors {
                        for &hidden_multiplier in &axes.hidden_multipliers {
                            for &iterations in &axes.iterations {
                                for &learning_rate in &axes.learning_rates {
                                    for &batch_size in &axes.batch_sizes {
                                        push(Combination {
                                            instance,
                                            population_size: n,
                                            params: ModelParams::Rbm {
                                                survivors,
                                                hidden_multiplier,
                                                iterations,
                                                learning_rate,
                                                batch_size,
                                            },
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
            if let Some(axes) = &self.rm {
                for &n in &axes.population_sizes {
                    for &survivors in &axes.survivors {
                        for &mutations in &axes.mutations {
                            push(Combination {
                                instance,
                                population_size: n,
                                params: ModelParams::Rm {
                                    survivors,
                                    mutations,
                                },
                            });
                        }
                    }
                }
            }
            for &n in &self.brg_population_sizes {
                push(Combination {
                    instance,
                    population_size: n,
                    params: ModelParams::Brg,
                });
            }
        }
        (admitted, excluded)
    }

    fn validate(&self) -> Result<()> {
        if self.instances.is_empty() {
            return Err(Error::Config("sweep needs at least one fitness instance".into()));
        }
        if self.checkpoints.is_empty() {
            return Err(Error::Config("sweep needs at least one checkpoint generation".into()));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelParams {
    Rbm {
        survivors: SurvivorSpec,
        hidden_multiplier: usize,
        iterations: usize,
        learning_rate: f64,
        batch_size: usize,
    },
    Rm {
        survivors: SurvivorSpec,
        mutations: usize,
    },
    Brg,
}

impl ModelParams {
    pub fn model_name(&self) -> &'static str {
        match self {
            ModelParams::Rbm { .. } => "rbm",
            ModelParams::Rm { .. } => "rm",
            ModelParams::Brg => "brg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Combination {
    pub instance: usize,
    pub population_size: usize,
    pub params: ModelParams,
}

impl Combination {
    pub fn exclusion_reasons(&self, n_max: usize) -> Vec<ExclusionReason> {
        let n = self.population_size;
        let mut reasons = Vec::new();
        if n > n_max {
            reasons.push(ExclusionReason::PopulationAboveMax {
                population: n,
                n_max,
            });
        }
        match self.params {
            ModelParams::Rm { survivors, .. } => {
                if survivors.exact_count(n) < 1.0 {
                    reasons.push(ExclusionReason::FewerThanOneSurvivor {
                        survivors,
                        population: n,
                    });
                }
            }
            ModelParams::Rbm {
                survivors,
                batch_size,
                ..
            } => {
                let count = survivors.resolve(n).unwrap_or(0);
                if count < MIN_RBM_SURVIVORS {
                    reasons.push(ExclusionReason::TooFewRbmSurvivors { survivors: count });
                }
                if batch_size >= n {
                    reasons.push(ExclusionReason::BatchNotBelowPopulation {
                        batch: batch_size,
                        population: n,
                    });
                }
            }
            ModelParams::Brg => {}
        }
        reasons
    }

    pub fn model_config(&self, grid: &SweepGrid, seed: u64) -> ModelConfig {
        let fitness = grid.instances[self.instance].fitness.clone();
        let n = fitness.num_variables();
        let model = match self.params {
            ModelParams::Rbm {
                survivors,
                hidden_multiplier,
                iterations,
                learning_rate,
                batch_size,
            } => {
                let mut config = RbmConfig::new(hidden_multiplier * n, learning_rate, iterations, batch_size);
                config.positive_phase = grid.positive_phase;
                Model::Rbm {
                    config,
                    survivors,
                    persistence: grid.rbm_persistence,
                }
            }
            ModelParams::Rm {
                survivors,
                mutations,
            } => Model::Rm {
                mutations,
                survivors,
            },
            ModelParams::Brg => Model::Brg,
        };
        ModelConfig::new(model, self.population_size, fitness, grid.generations(), seed)
    }
}

impl fmt::Display for Combination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} N={}", self.params.model_name(), self.population_size)?;
        match self.params {
            ModelParams::Rbm {
                survivors,
                hidden_multiplier,
                iterations,
                learning_rate,
                batch_size,
            } => write!(
                f,
                " S={survivors} H={hidden_multiplier}x T={iterations} eta={learning_rate} B={batch_size}"
            ),
            ModelParams::Rm {
                survivors,
                mutations,
            } => write!(f, " S={survivors} mu={mutations}"),
            ModelParams::Brg => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExclusionReason {
    PopulationAboveMax { population: usize, n_max: usize },
    FewerThanOneSurvivor { survivors: SurvivorSpec, population: usize },
    TooFewRbmSurvivors { survivors: usize },
    BatchNotBelowPopulation { batch: usize, population: usize },
}

impl fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExclusionReason::PopulationAboveMax { population, n_max } => {
                write!(f, "N={population} > N_max={n_max}")
            }
            ExclusionReason::FewerThanOneSurvivor {
                survivors,
                population,
            } => write!(f, "fewer than 1 survivor ({survivors} of N={population})"),
            ExclusionReason::TooFewRbmSurvivors { survivors } => {
                write!(f, "RBM survivors {survivors} < {MIN_RBM_SURVIVORS}")
            }
            ExclusionReason::BatchNotBelowPopulation { batch, population } => {
                write!(f, "B={batch} not < N={population}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exclusion {
    pub combination: Combination,
    pub reasons: Vec<ExclusionReason>,
}

impl fmt::Display for Exclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let reasons: Vec<String> = self.reasons.iter().map(ToString::to_string).collect();
        write!(f, "{}: {}", self.combination, reasons.join("; "))
    }
}

#[derive(Debug, Clone)]
pub struct JobResult {
    pub job_index: usize,
    pub combination: usize,
    pub replicate: usize,
    pub seed: u64,
    pub records: Vec<GenerationRecord>,
    /// Score at each checkpoint: mean fitness, or best-so-far for BRG.
    pub checkpoint_values: Vec<f64>,
    pub runtime_seconds: f64,
    pub resumed: bool,
}

#[derive(Debug, Clone)]
pub struct BestEntry {
    pub instance: usize,
    pub n_max: usize,
    pub model: &'static str,
    pub checkpoint: usize,
    pub combination: usize,
    pub score: MeanSe,
    /// Combinations sharing the top score; one was drawn at random.
    pub tied: usize,
    pub curve: AveragedCurve,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub combinations: Vec<Combination>,
    pub exclusions: Vec<Exclusion>,
    pub checkpoints: Vec<usize>,
    pub jobs: Vec<JobResult>,
    pub best: Vec<BestEntry>,
}

impl SweepReport {
    pub fn best_for(&self, instance: usize, n_max: usize, model: &str, checkpoint: usize) -> Option<&BestEntry> {
        self.best.iter().find(|b| {
            b.instance == instance && b.n_max == n_max && b.model == model && b.checkpoint == checkpoint
        })
    }

    pub fn jobs_for(&self, combination: usize) -> impl Iterator<Item = &JobResult> {
        self.jobs.iter().filter(move |j| j.combination == combination)
    }
}

fn checkpoint_values(params: &ModelParams, records: &[GenerationRecord], checkpoints: &[usize]) -> Vec<f64> {
    checkpoints
        .iter()
        .map(|&cp| {
            let r = &records[cp.min(records.len() - 1)];
            match params {
                ModelParams::Brg => r.best_fitness,
                _ => r.mean_fitness,
            }
        })
        .collect()
}

fn job_paths(dir: &Path, job_index: usize) -> (PathBuf, PathBuf) {
    let jobs = dir.join("jobs");
    (
        jobs.join(format!("job_{job_index:06}.csv")),
        jobs.join(format!("job_{job_index:06}.meta")),
    )
}

fn load_job(dir: &Path, job_index: usize, seed: u64, generations: usize) -> Option<(Vec<GenerationRecord>, f64)> {
    let (csv, meta) = job_paths(dir, job_index);
    let meta = fs::read_to_string(meta).ok()?;
    let mut stored_seed = None;
    let mut runtime = None;
    for line in meta.lines() {
        if let Some(v) = line.strip_prefix("seed=") {
            stored_seed = v.parse::<u64>().ok();
        } else if let Some(v) = line.strip_prefix("runtime_seconds=") {
            runtime = v.parse::<f64>().ok();
        }
    }
    if stored_seed != Some(seed) {
        return None;
    }
    let records = read_run_csv(&fs::read_to_string(csv).ok()?).ok()?;
    (records.len() == generations + 1).then_some((records, runtime?))
}

/// Runs every admissible combination `grid.replicates` times and picks, for
/// each instance, `N_max`, model and checkpoint, the combination with the
/// highest mean score (ties drawn with a stream derived from `master_seed`).
///
/// With `out_dir`, each finished job is persisted under `jobs/`, and jobs
/// already present from an interrupted run are loaded instead of rerun.
pub fn run_sweep(grid: &SweepGrid, master_seed: u64, out_dir: Option<&Path>) -> Result<SweepReport> {
    grid.validate()?;
    let (combinations, exclusions) = grid.enumerate();
    if combinations.is_empty() {
        return Err(Error::Config(format!(
            "no admissible combinations ({} excluded)",
            exclusions.len()
        )));
    }
    let generations = grid.generations();
    let replicates = grid.replicates;
    let job_count = combinations.len() * replicates;

    let jobs: Vec<JobResult> = (0..job_count)
        .into_par_iter()
        .map(|job_index| {
            let combination = job_index / replicates;
            let replicate = job_index % replicates;
            let combo = &combinations[combination];
            let seed = derive_seed(master_seed, job_index as u64);
            let loaded = out_dir.and_then(|d| load_job(d, job_index, seed, generations));
            let resumed = loaded.is_some();
            let (records, runtime_seconds) = match loaded {
                Some(found) => found,
                None => {
                    let start = Instant::now();
                    let records = run_generation_loop(&combo.model_config(grid, seed), &mut ())?;
                    let runtime = start.elapsed().as_secs_f64();
                    if let Some(dir) = out_dir {
                        let (csv, meta) = job_paths(dir, job_index);
                        write_atomic(&csv, |w| write_run_csv(w, &records))?;
                        write_atomic(&meta, |w| {
                            writeln!(w, "seed={seed}\nruntime_seconds={runtime}\ncombination={combo}")
                        })?;
                    }
                    (records, runtime)
                }
            };
            Ok(JobResult {
                job_index,
                combination,
                replicate,
                seed,
                checkpoint_values: checkpoint_values(&combo.params, &records, &grid.checkpoints),
                records,
                runtime_seconds,
                resumed,
            })
        })
        .collect::<Result<_>>()?;

    let scores: Vec<Vec<MeanSe>> = (0..combinations.len())
        .map(|c| {
            let runs = &jobs[c * replicates..(c + 1) * replicates];
            (0..grid.checkpoints.len())
                .map(|k| MeanSe::from_values(&runs.iter().map(|j| j.checkpoint_values[k]).collect::<Vec<_>>()))
                .collect()
        })
        .collect();

    let mut best = Vec::new();
    let mut n_max_values = grid.n_max.clone();
    if n_max_values.is_empty() {
        n_max_values.push(usize::MAX);
    }
    for instance in 0..grid.instances.len() {
        for &n_max in &n_max_values {
            for model in ["rbm", "rm", "brg"] {
                let candidates: Vec<usize> = (0..combinations.len())
                    .filter(|&c| {
                        let combo = &combinations[c];
                        combo.instance == instance
                            && combo.params.model_name() == model
                            && combo.population_size <= n_max
                    })
                    .collect();
                if candidates.is_empty() {
                    continue;
                }
                for (k, &checkpoint) in grid.checkpoints.iter().enumerate() {
                    let top = candidates
                        .iter()
                        .map(|&c| scores[c][k].mean)
                        .fold(f64::NEG_INFINITY, f64::max);
                    let tied: Vec<usize> = candidates
                        .iter()
                        .copied()
                        .filter(|&c| scores[c][k].mean == top)
                        .collect();
                    let tag = format!("tie/{instance}/{n_max}/{model}/{checkpoint}");
                    let pick = if tied.len() == 1 {
                        tied[0]
                    } else {
                        tied[rng_from_seed(derive_seed_tagged(master_seed, &tag)).random_range(0..tied.len())]
                    };
                    let runs: Vec<Vec<GenerationRecord>> = jobs[pick * replicates..(pick + 1) * replicates]
                        .iter()
                        .map(|j| j.records.clone())
                        .collect();
                    best.push(BestEntry {
                        instance,
                        n_max,
                        model,
                        checkpoint,
                        combination: pick,
                        score: scores[pick][k],
                        tied: tied.len(),
                        curve: AveragedCurve::from_runs(&runs),
                    });
                }
            }
        }
    }

    Ok(SweepReport {
        combinations,
        exclusions,
        checkpoints: grid.checkpoints.clone(),
        jobs,
        best,
    })
}

fn param_columns(combo: &Combination) -> [String; 6] {
    let blank = String::new;
    match combo.params {
        ModelParams::Rbm {
            survivors,
            hidden_multiplier,
            iterations,
            learning_rate,
            batch_size,
        } => [
            survivors.to_string(),
            hidden_multiplier.to_string(),
            iterations.to_string(),
            learning_rate.to_string(),
            batch_size.to_string(),
            blank(),
        ],
        ModelParams::Rm {
            survivors,
            mutations,
        } => [survivors.to_string(), blank(), blank(), blank(), blank(), mutations.to_string()],
        ModelParams::Brg => [blank(), blank(), blank(), blank(), blank(), blank()],
    }
}

impl SweepReport {
    /// One row per job.
    pub fn write_sweep_csv<W: std::io::Write>(&self, mut w: W, grid: &SweepGrid) -> std::io::Result<()> {
        let cps: Vec<String> = self.checkpoints.iter().map(|c| format!("mean_fitness@{c}")).collect();
        writeln!(
            w,
            "model,instance,population_size,survivors,hidden_multiplier,iterations,learning_rate,batch_size,mutations,replicate,{},seed,runtime_seconds",
            cps.join(",")
        )?;
        for job in &self.jobs {
            let combo = &self.combinations[job.combination];
            let values: Vec<String> = job.checkpoint_values.iter().map(f64::to_string).collect();
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                combo.params.model_name(),
                grid.instances[combo.instance].name,
                combo.population_size,
                param_columns(combo).join(","),
                job.replicate,
                values.join(","),
                format_args!("{},{}", job.seed, job.runtime_seconds),
            )?;
        }
        Ok(())
    }

    pub fn write_best_csv<W: std::io::Write>(&self, mut w: W, grid: &SweepGrid) -> std::io::Result<()> {
        writeln!(
            w,
            "instance,n_max,model,checkpoint,population_size,survivors,hidden_multiplier,iterations,learning_rate,batch_size,mutations,score,score_se,runs,tied"
        )?;
        for b in &self.best {
            let combo = &self.combinations[b.combination];
            let n_max = if b.n_max == usize::MAX { String::new() } else { b.n_max.to_string() };
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                grid.instances[b.instance].name,
                n_max,
                b.model,
                b.checkpoint,
                combo.population_size,
                param_columns(combo).join(","),
                b.score.mean,
                b.score.se,
                b.score.runs,
                b.tied
            )?;
        }
        Ok(())
    }

    /// Writes `sweep.csv`, `best.csv`, `sweep.log` and the averaged curve of
    /// every best combination under `curves/`.
    pub fn write_outputs(&self, dir: &Path, grid: &SweepGrid) -> Result<()> {
        write_atomic(&dir.join("sweep.csv"), |w| self.write_sweep_csv(w, grid))?;
        write_atomic(&dir.join("best.csv"), |w| self.write_best_csv(w, grid))?;
        write_atomic(&dir.join("sweep.log"), |w| {
            writeln!(w, "admissible combinations: {}", self.combinations.len())?;
            writeln!(w, "jobs: {} ({} resumed)", self.jobs.len(), self.jobs.iter().filter(|j| j.resumed).count())?;
            writeln!(w, "excluded combinations: {}", self.exclusions.len())?;
            for e in &self.exclusions {
                writeln!(w, "excluded {}: {e}", grid.instances[e.combination.instance].name)?;
            }
            Ok(())
        })?;
        for b in &self.best {
            let n_max = if b.n_max == usize::MAX { "all".to_string() } else { b.n_max.to_string() };
            let name = format!(
                "{}_nmax{}_{}_g{}.csv",
                sanitize(&grid.instances[b.instance].name),
                n_max,
                b.model,
                b.checkpoint
            );
            write_atomic(&dir.join("curves").join(name), |w| write_averaged_csv(w, &b.curve))?;
        }
        Ok(())
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}
