use std::fs;
use std::path::{Path, PathBuf};

use boltzevo_core::experiments::ablation::run_ablation;
use boltzevo_core::experiments::completion::run_completion_test;
use boltzevo_core::experiments::output::{
    write_atomic, write_averaged_csv, write_histogram_csv, write_run_csv,
};
use boltzevo_core::experiments::sweep::{run_sweep, Combination, ModelParams};
use boltzevo_core::experiments::switch::run_switch;
use boltzevo_core::experiments::trend::run_trend_table;
use boltzevo_core::experiments::{run_replicates, AveragedCurve};
use boltzevo_core::rng::rng_from_seed;
use boltzevo_core::sat::{emit_dimacs_with_comments, gen_uniform_ksat};
use boltzevo_core::{Model, ModelConfig};

use crate::error::CliError;
use crate::manifest::{Manifest, Plan};

pub struct RunOverrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

pub fn gen_instance(n: usize, k: usize, ratio: f64, seed: u64, out: &Path) -> Result<(), CliError> {
    let instance = gen_uniform_ksat(n, k, ratio, &mut rng_from_seed(seed))?;
    let comments = vec![
        "uniform random k-SAT".to_string(),
        format!("n = {n}"),
        format!("k = {k}"),
        format!("ratio = {ratio}"),
        format!("seed = {seed}"),
    ];
    let text = emit_dimacs_with_comments(&instance, &comments);
    write_atomic(out, |w| w.write_all(text.as_bytes()))?;
    println!(
        "wrote {} ({} variables, {} clauses)",
        out.display(),
        instance.num_variables(),
        instance.num_clauses()
    );
    Ok(())
}

/// The single-combination view of a trajectory config, for admissibility.
fn as_combination(config: &ModelConfig) -> Combination {
    let n = config.fitness.num_variables();
    let params = match &config.model {
        Model::Rbm { config: rbm, survivors, .. } => ModelParams::Rbm {
            survivors: *survivors,
            hidden_multiplier: rbm.num_hidden / n.max(1),
            iterations: rbm.iterations,
            learning_rate: rbm.learning_rate,
            batch_size: rbm.batch_size,
        },
        Model::Rm { mutations, survivors } => ModelParams::Rm {
            survivors: *survivors,
            mutations: *mutations,
        },
        Model::Brg => ModelParams::Brg,
    };
    Combination {
        instance: 0,
        population_size: config.population_size,
        params,
    }
}

/// Lines describing every excluded combination, then a count.
pub fn validate(manifest: &Manifest) -> Result<Vec<String>, CliError> {
    let mut lines = Vec::new();
    match &manifest.plan {
        Plan::Sweep(grid) => {
            let (admitted, excluded) = grid.enumerate();
            for e in &excluded {
                lines.push(format!("excluded {}: {e}", grid.instances[e.combination.instance].name));
            }
            lines.push(format!("{} exclusions", excluded.len()));
            if admitted.is_empty() {
                lines.push("no admissible combinations".into());
            }
        }
        Plan::Trajectory { config, .. } => {
            let combo = as_combination(config);
            let reasons = combo.exclusion_reasons(usize::MAX);
            if !reasons.is_empty() {
                let reasons: Vec<String> = reasons.iter().map(ToString::to_string).collect();
                lines.push(format!("excluded {combo}: {}", reasons.join("; ")));
            }
            lines.push(format!("{} exclusions", usize::from(!reasons.is_empty())));
            if reasons.is_empty() {
                config.validate()?;
            }
        }
        Plan::TrendTable { axes, .. } => {
            let mut blanks = 0;
            for &s in &axes.survivors {
                for &n in &axes.population_sizes {
                    if boltzevo_core::experiments::trend::cell_is_blank(s, n) {
                        blanks += 1;
                        lines.push(format!("blank S={s} N={n}: at most one survivor"));
                    }
                }
            }
            lines.push(format!("{blanks} exclusions"));
        }
        Plan::Completion(config) => {
            config.validate()?;
            lines.push("0 exclusions".into());
        }
        Plan::Ablation(_) | Plan::Switch(_) => lines.push("0 exclusions".into()),
    }
    Ok(lines)
}

fn write_curve(path: &Path, curve: &AveragedCurve) -> Result<(), CliError> {
    write_atomic(path, |w| write_averaged_csv(w, curve))?;
    Ok(())
}

/// Runs the manifest and returns the one-line summary.
pub fn run(manifest: &Manifest, overrides: &RunOverrides) -> Result<String, CliError> {
    let seed = overrides
        .seed
        .or(manifest.seed)
        .ok_or_else(|| CliError::Usage("no seed: set `seed` in [run] or pass --seed".into()))?;
    let out = overrides
        .out
        .clone()
        .or_else(|| manifest.out.clone())
        .ok_or_else(|| CliError::Usage("no output directory: set `out` in [run] or pass --out".into()))?;
    fs::create_dir_all(&out).map_err(boltzevo_core::Error::from)?;
    let jobs = overrides.jobs.or(manifest.jobs);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    pool.install(|| run_plan(&manifest.plan, seed, &out))
}

fn run_plan(plan: &Plan, seed: u64, out: &Path) -> Result<String, CliError> {
    match plan {
        Plan::Trajectory { config, runs } => {
            let records = run_replicates(config, *runs, seed)?;
            for (r, run) in records.iter().enumerate() {
                write_atomic(&out.join(format!("run_{r:03}.csv")), |w| write_run_csv(w, run))?;
                if config.record_histograms {
                    write_atomic(&out.join(format!("histogram_{r:03}.csv")), |w| write_histogram_csv(w, run))?;
                }
            }
            let curve = AveragedCurve::from_runs(&records);
            write_curve(&out.join("averaged.csv"), &curve)?;
            let last = curve.mean_fitness.last().expect("at least one generation");
            Ok(format!(
                "final mean fitness {} (se {}, {} runs) at generation {}",
                last.mean,
                last.se,
                last.runs,
                config.generations
            ))
        }
        Plan::Sweep(grid) => {
            let report = run_sweep(grid, seed, Some(out))?;
            report.write_outputs(out, grid)?;
            Ok(format!(
                "{} jobs over {} combinations ({} excluded); best configurations in {}",
                report.jobs.len(),
                report.combinations.len(),
                report.exclusions.len(),
                out.join("best.csv").display()
            ))
        }
        Plan::TrendTable { fitness, axes } => {
            let table = run_trend_table(fitness, axes, seed)?;
            let path = out.join("trend.csv");
            write_atomic(&path, |w| table.write_csv(w))?;
            Ok(format!("trend table written to {}", path.display()))
        }
        Plan::Completion(config) => {
            let report = run_completion_test(config, seed)?;
            let path = out.join("completion.csv");
            write_atomic(&path, |w| report.write_csv(w))?;
            write_curve(&out.join("averaged.csv"), &report.curve)?;
            let last = report.points.last();
            Ok(match last {
                Some(p) => format!(
                    "final inferred {} vs shuffled {} (gap {} ± {}); table in {}",
                    p.inferred.mean,
                    p.shuffled.mean,
                    p.gap.mean,
                    p.gap.se,
                    path.display()
                ),
                None => format!("no RBM generations; table in {}", path.display()),
            })
        }
        Plan::Ablation(config) => {
            let curves = run_ablation(config, seed)?;
            let mut parts = Vec::new();
            for c in &curves {
                let name = format!("ablation_N{}_{}.csv", c.population_size, c.ablation.name());
                write_curve(&out.join(name), &c.curve)?;
                let last = c.curve.mean_fitness.last().expect("at least one generation");
                parts.push(format!("N={} {}={}", c.population_size, c.ablation.name(), last.mean));
            }
            Ok(format!("final mean fitness: {}", parts.join(", ")))
        }
        Plan::Switch(config) => {
            let curve = run_switch(config, seed)?;
            write_curve(&out.join("switch.csv"), &curve)?;
            let last = curve.mean_heterozygosity.last().expect("at least one generation");
            Ok(format!(
                "final mean heterozygosity {} at generation {}",
                last.mean, config.generations
            ))
        }
    }
}
