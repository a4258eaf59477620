//! Run manifests: INI-style sections of `key = value` lines, `#` comments,
//! comma-separated lists.
//!
//! ```text
//! [run]
//! experiment = sweep
//! seed = 42
//! out = results/sweep150
//!
//! [fitness]
//! n = 150
//! instance_seed = 7
//!
//! [rm]
//! population_size = 10, 100, 1000
//! survivors = 1, 1%, 5%, 10%, 50%
//! mutations = 1, 2, 3, 4, 5
//! ```
//!
//! Every key is checked; unknown sections or keys are errors.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use boltzevo_core::experiments::ablation::AblationConfig;
use boltzevo_core::experiments::completion::CompletionTestConfig;
use boltzevo_core::experiments::sweep::{NamedFitness, RbmAxes, RmAxes, SweepGrid};
use boltzevo_core::experiments::switch::SwitchConfig;
use boltzevo_core::experiments::trend::TrendAxes;
use boltzevo_core::rng::rng_from_seed;
use boltzevo_core::sat::{gen_uniform_ksat, read_dimacs_file};
use boltzevo_core::{
    Ablation, FitnessFn, Model, ModelConfig, PositivePhase, RbmConfig, RbmPersistence, SurvivorSpec,
};
use ini::Ini;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Trajectory,
    Sweep,
    TrendTable,
    Completion,
    Ablation,
    Switch,
    Histogram,
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "trajectory" => ExperimentKind::Trajectory,
            "sweep" => ExperimentKind::Sweep,
            "trend_table" => ExperimentKind::TrendTable,
            "completion" => ExperimentKind::Completion,
            "ablation" => ExperimentKind::Ablation,
            "switch" => ExperimentKind::Switch,
            "histogram" => ExperimentKind::Histogram,
            _ => {
                return Err(format!(
                    "unknown experiment `{s}` (trajectory, sweep, trend_table, completion, ablation, switch, histogram)"
                ))
            }
        })
    }
}

#[derive(Debug, Clone)]
pub enum Plan {
    /// Also used for histogram runs, with `record_histograms` set.
    Trajectory { config: ModelConfig, runs: usize },
    Sweep(SweepGrid),
    TrendTable { fitness: FitnessFn, axes: TrendAxes },
    Completion(CompletionTestConfig),
    Ablation(AblationConfig),
    Switch(SwitchConfig),
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub plan: Plan,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

const KEYS: &[(&str, &[&str])] = &[
    ("run", &["experiment", "seed", "out", "jobs", "runs", "generations", "model"]),
    ("fitness", &["instance", "n", "k", "ratio", "instance_seed", "parity"]),
    ("fitness_b", &["instance", "n", "k", "ratio", "instance_seed", "parity"]),
    (
        "rbm",
        &[
            "population_size",
            "survivors",
            "hidden_multiplier",
            "iterations",
            "learning_rate",
            "batch_size",
            "persistence",
            "positive_phase",
            "ablation",
        ],
    ),
    ("rm", &["population_size", "survivors", "mutations"]),
    ("brg", &["population_size"]),
    ("sweep", &["n_max", "checkpoints", "replicates"]),
    ("trend", &["generation", "replicates"]),
    ("completion", &["population_size", "completion_count", "clamp_length", "symmetric_pairs"]),
    ("ablation", &["population_size", "variants"]),
    ("switch", &["generation", "population_size"]),
];

struct Doc {
    ini: Ini,
    base: PathBuf,
}

fn err(section: &str, key: &str, message: impl Into<String>) -> CliError {
    CliError::Manifest {
        key: format!("[{section}] {key}"),
        message: message.into(),
    }
}

impl Doc {
    fn has_section(&self, section: &str) -> bool {
        self.ini.section(Some(section)).is_some()
    }

    fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.ini.section(Some(section))?.get(key).map(str::trim)
    }

    fn parse<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(section, key)
            .map(|v| v.parse::<T>().map_err(|e| err(section, key, format!("`{v}`: {e}"))))
            .transpose()
    }

    fn get<T: FromStr>(&self, section: &str, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parse(section, key)?.unwrap_or(default))
    }

    fn require<T: FromStr>(&self, section: &str, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.parse(section, key)?.ok_or_else(|| err(section, key, "missing"))
    }

    fn list<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<Vec<T>>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let Some(raw) = self.raw(section, key) else {
            return Ok(None);
        };
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|v| v.parse::<T>().map_err(|e| err(section, key, format!("`{v}`: {e}"))))
            .collect::<Result<Vec<_>, _>>()
            .and_then(|v| {
                if v.is_empty() {
                    Err(err(section, key, "empty list"))
                } else {
                    Ok(Some(v))
                }
            })
    }

    fn list_or<T: FromStr>(&self, section: &str, key: &str, default: Vec<T>) -> Result<Vec<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.list(section, key)?.unwrap_or(default))
    }

    /// A key that may hold a list elsewhere but must be a single value here.
    fn single<T: FromStr + Clone>(&self, section: &str, key: &str, default: Option<T>) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.list::<T>(section, key)? {
            Some(v) if v.len() == 1 => Ok(v[0].clone()),
            Some(_) => Err(err(section, key, "expected a single value for this experiment")),
            None => default.ok_or_else(|| err(section, key, "missing")),
        }
    }

    fn check_keys(&self) -> Result<(), CliError> {
        for (section, props) in self.ini.iter() {
            let Some(section) = section else {
                if let Some((key, _)) = props.iter().next() {
                    return Err(err("", key, "key outside any section"));
                }
                continue;
            };
            let Some((_, allowed)) = KEYS.iter().find(|(s, _)| *s == section) else {
                return Err(CliError::Manifest {
                    key: format!("[{section}]"),
                    message: "unknown section".into(),
                });
            };
            let mut seen = BTreeSet::new();
            for (key, _) in props.iter() {
                if !allowed.contains(&key) {
                    return Err(err(section, key, "unknown key"));
                }
                if !seen.insert(key) {
                    return Err(err(section, key, "given twice"));
                }
            }
        }
        Ok(())
    }
}

/// `50%` or a plain survivor count.
#[derive(Debug, Clone, Copy)]
struct Survivors(SurvivorSpec);

impl FromStr for Survivors {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.strip_suffix('%') {
            Some(p) => {
                let p: f64 = p.trim().parse().map_err(|e| format!("{e}"))?;
                if !(p > 0.0 && p <= 100.0) {
                    return Err("percentage must be in (0, 100]".into());
                }
                Ok(Survivors(SurvivorSpec::TopPercent(p)))
            }
            None => {
                let c: usize = s.parse().map_err(|e| format!("{e}"))?;
                if c == 0 {
                    return Err("survivor count must be positive".into());
                }
                Ok(Survivors(SurvivorSpec::TopCount(c)))
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Choice<T>(T);

impl FromStr for Choice<RbmPersistence> {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fresh" => Ok(Choice(RbmPersistence::Fresh)),
            "persistent" => Ok(Choice(RbmPersistence::Persistent)),
            _ => Err("expected fresh or persistent".into()),
        }
    }
}

impl FromStr for Choice<PositivePhase> {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "probabilities" => Ok(Choice(PositivePhase::Probabilities)),
            "samples" => Ok(Choice(PositivePhase::Samples)),
            _ => Err("expected probabilities or samples".into()),
        }
    }
}

impl FromStr for Choice<Ablation> {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "full" => Ok(Choice(Ablation::Full)),
            "weights_only" => Ok(Choice(Ablation::WeightsOnly)),
            "biases_only" => Ok(Choice(Ablation::BiasesOnly)),
            _ => Err("expected full, weights_only or biases_only".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ModelKind {
    Rbm,
    Rm,
    Brg,
}

impl FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rbm" => Ok(ModelKind::Rbm),
            "rm" => Ok(ModelKind::Rm),
            "brg" => Ok(ModelKind::Brg),
            _ => Err("expected rbm, rm or brg".into()),
        }
    }
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Unreadable {
            path: path.to_path_buf(),
            source: e,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    /// Relative instance paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let ini = Ini::load_from_str(text).map_err(|e| CliError::Manifest {
            key: "(syntax)".into(),
            message: e.to_string(),
        })?;
        let doc = Doc {
            ini,
            base: base.to_path_buf(),
        };
        doc.check_keys()?;
        let kind: ExperimentKind = doc.require("run", "experiment")?;
        let seed = doc.parse("run", "seed")?;
        let out = doc.raw("run", "out").map(PathBuf::from);
        let jobs: Option<usize> = doc.parse("run", "jobs")?;
        if jobs == Some(0) {
            return Err(err("run", "jobs", "must be positive"));
        }
        let plan = build_plan(&doc, kind)?;
        Ok(Manifest {
            plan,
            seed,
            out,
            jobs,
        })
    }
}

fn fitness_section(doc: &Doc, section: &str) -> Result<Vec<NamedFitness>, CliError> {
    if !doc.has_section(section) {
        return Err(CliError::Manifest {
            key: format!("[{section}]"),
            message: "missing section".into(),
        });
    }
    if let Some(paths) = doc.list::<String>(section, "instance")? {
        for key in ["n", "k", "ratio", "instance_seed", "parity"] {
            if doc.raw(section, key).is_some() {
                return Err(err(section, key, "cannot be combined with `instance`"));
            }
        }
        return paths
            .into_iter()
            .map(|p| {
                let path = doc.base.join(&p);
                if !path.is_file() {
                    return Err(err(section, "instance", format!("no such file {}", path.display())));
                }
                let instance = read_dimacs_file(&path)?;
                let name = Path::new(&p)
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or(p);
                Ok(NamedFitness {
                    name,
                    fitness: FitnessFn::max_sat(instance),
                })
            })
            .collect();
    }
    if let Some(arity) = doc.parse::<usize>(section, "parity")? {
        if arity == 0 {
            return Err(err(section, "parity", "must be positive"));
        }
        return Ok(vec![NamedFitness {
            name: format!("parity{arity}"),
            fitness: FitnessFn::even_parity(arity),
        }]);
    }
    let n: usize = doc.require(section, "n")?;
    let k: usize = doc.get(section, "k", 3)?;
    let ratio: f64 = doc.get(section, "ratio", 4.267)?;
    let seed: u64 = doc.require(section, "instance_seed")?;
    let instance = gen_uniform_ksat(n, k, ratio, &mut rng_from_seed(seed))?;
    Ok(vec![NamedFitness {
        name: format!("uf{n}_k{k}_s{seed}"),
        fitness: FitnessFn::max_sat(instance),
    }])
}

fn single_fitness(doc: &Doc, section: &str) -> Result<FitnessFn, CliError> {
    let mut all = fitness_section(doc, section)?;
    if all.len() != 1 {
        return Err(err(section, "instance", "expected a single instance for this experiment"));
    }
    Ok(all.remove(0).fitness)
}

fn rbm_config(doc: &Doc, n: usize, defaults: &RbmConfig) -> Result<RbmConfig, CliError> {
    let multiplier: usize = doc.single("rbm", "hidden_multiplier", Some(1))?;
    let mut config = RbmConfig::new(
        multiplier * n,
        doc.single("rbm", "learning_rate", Some(defaults.learning_rate))?,
        doc.single("rbm", "iterations", Some(defaults.iterations))?,
        doc.single("rbm", "batch_size", Some(defaults.batch_size))?,
    );
    config.ablation = doc.get("rbm", "ablation", Choice(Ablation::Full))?.0;
    config.positive_phase = doc.get("rbm", "positive_phase", Choice(PositivePhase::Probabilities))?.0;
    config.validate().map_err(|e| err("rbm", "", e.to_string()))?;
    Ok(config)
}

fn default_rbm() -> RbmConfig {
    RbmConfig::new(1, 0.01, 20, 10)
}

fn build_plan(doc: &Doc, kind: ExperimentKind) -> Result<Plan, CliError> {
    let runs: usize = doc.get("run", "runs", 1)?;
    if runs == 0 {
        return Err(err("run", "runs", "must be positive"));
    }
    let generations = doc.parse::<usize>("run", "generations")?;
    let need_generations = || generations.ok_or_else(|| err("run", "generations", "missing"));
    Ok(match kind {
        ExperimentKind::Trajectory | ExperimentKind::Histogram => {
            let fitness = single_fitness(doc, "fitness")?;
            let n = fitness.num_variables();
            let model = match doc.require::<ModelKind>("run", "model")? {
                ModelKind::Rbm => Model::Rbm {
                    config: rbm_config(doc, n, &default_rbm())?,
                    survivors: doc.single::<Survivors>("rbm", "survivors", Some(Survivors(SurvivorSpec::TopPercent(50.0))))?.0,
                    persistence: doc.get("rbm", "persistence", Choice(RbmPersistence::Fresh))?.0,
                },
                ModelKind::Rm => Model::Rm {
                    mutations: doc.single("rm", "mutations", Some(1))?,
                    survivors: doc.single::<Survivors>("rm", "survivors", None)?.0,
                },
                ModelKind::Brg => Model::Brg,
            };
            let section = model.name();
            let population_size: usize = doc.single(section, "population_size", None)?;
            let mut config = ModelConfig::new(model, population_size, fitness, need_generations()?, 0);
            config.record_histograms = kind == ExperimentKind::Histogram;
            Plan::Trajectory { config, runs }
        }
        ExperimentKind::Sweep => {
            let instances = fitness_section(doc, "fitness")?;
            let mut grid = SweepGrid::new(instances, doc.list_or("sweep", "n_max", Vec::new())?);
            grid.checkpoints = doc.list_or("sweep", "checkpoints", vec![50, 100, 500])?;
            grid.replicates = doc.get("sweep", "replicates", 1)?;
            if grid.replicates == 0 {
                return Err(err("sweep", "replicates", "must be positive"));
            }
            if generations.is_some() {
                return Err(err("run", "generations", "sweeps run to the largest checkpoint"));
            }
            if doc.has_section("rbm") {
                let full = RbmAxes::full_table();
                let survivors: Vec<Survivors> = doc.list_or(
                    "rbm",
                    "survivors",
                    full.survivors.iter().copied().map(Survivors).collect(),
                )?;
                grid.rbm = Some(RbmAxes {
                    population_sizes: doc.list_or("rbm", "population_size", full.population_sizes)?,
                    survivors: survivors.into_iter().map(|s| s.0).collect(),
                    hidden_multipliers: doc.list_or("rbm", "hidden_multiplier", full.hidden_multipliers)?,
                    iterations: doc.list_or("rbm", "iterations", full.iterations)?,
                    learning_rates: doc.list_or("rbm", "learning_rate", full.learning_rates)?,
                    batch_sizes: doc.list_or("rbm", "batch_size", full.batch_sizes)?,
                });
                grid.rbm_persistence = doc.get("rbm", "persistence", Choice(RbmPersistence::Fresh))?.0;
                grid.positive_phase = doc.get("rbm", "positive_phase", Choice(PositivePhase::Probabilities))?.0;
                if doc.raw("rbm", "ablation").is_some() {
                    return Err(err("rbm", "ablation", "not a sweep axis"));
                }
            }
            if doc.has_section("rm") {
                grid.rm = Some(rm_axes(doc)?);
            }
            if doc.has_section("brg") {
                grid.brg_population_sizes = doc.list_or("brg", "population_size", vec![100])?;
            }
            Plan::Sweep(grid)
        }
        ExperimentKind::TrendTable => {
            let fitness = single_fitness(doc, "fitness")?;
            let rm = rm_axes(doc)?;
            let defaults = TrendAxes::default();
            let axes = TrendAxes {
                population_sizes: rm.population_sizes,
                survivors: rm.survivors,
                mutations: rm.mutations,
                generation: doc.get("trend", "generation", defaults.generation)?,
                replicates: doc.get("trend", "replicates", defaults.replicates)?,
            };
            Plan::TrendTable { fitness, axes }
        }
        ExperimentKind::Completion => {
            let arity: usize = doc.require("fitness", "parity")?;
            let population_size = doc.require("completion", "population_size")?;
            let mut config = CompletionTestConfig::new(arity, population_size);
            config.completion_count = doc.get("completion", "completion_count", config.completion_count)?;
            config.clamp_length = doc.get("completion", "clamp_length", config.clamp_length)?;
            config.symmetric_pairs = doc.get("completion", "symmetric_pairs", false)?;
            config.runs = runs;
            config.generations = need_generations()?;
            config.rbm = rbm_config(doc, arity, &config.rbm)?;
            config.survivors = doc.single::<Survivors>("rbm", "survivors", Some(Survivors(config.survivors)))?.0;
            Plan::Completion(config)
        }
        ExperimentKind::Ablation => {
            let fitness = single_fitness(doc, "fitness")?;
            let n = fitness.num_variables();
            let sizes = doc
                .list("ablation", "population_size")?
                .ok_or_else(|| err("ablation", "population_size", "missing"))?;
            let mut config = AblationConfig::new(fitness, sizes, 0.01);
            config.rbm = rbm_config(doc, n, &config.rbm)?;
            config.survivors = doc.single::<Survivors>("rbm", "survivors", Some(Survivors(config.survivors)))?.0;
            let variants: Vec<Choice<Ablation>> = doc.list_or(
                "ablation",
                "variants",
                config.variants.iter().copied().map(Choice).collect(),
            )?;
            config.variants = variants.into_iter().map(|c| c.0).collect();
            config.runs = runs;
            config.generations = need_generations()?;
            Plan::Ablation(config)
        }
        ExperimentKind::Switch => {
            let a = single_fitness(doc, "fitness")?;
            let b = single_fitness(doc, "fitness_b")?;
            let switch_generation = match doc.raw("switch", "generation") {
                None | Some("none") => None,
                Some(_) => Some(doc.require("switch", "generation")?),
            };
            let n = a.num_variables();
            let mut config = SwitchConfig::new(a, b, switch_generation);
            config.population_size = doc.get("switch", "population_size", config.population_size)?;
            config.rbm = rbm_config(doc, n, &config.rbm)?;
            config.survivors = doc.single::<Survivors>("rbm", "survivors", Some(Survivors(config.survivors)))?.0;
            config.runs = runs;
            config.generations = need_generations()?;
            Plan::Switch(config)
        }
    })
}

fn rm_axes(doc: &Doc) -> Result<RmAxes, CliError> {
    let full = RmAxes::full_table();
    let survivors: Vec<Survivors> =
        doc.list_or("rm", "survivors", full.survivors.iter().copied().map(Survivors).collect())?;
    Ok(RmAxes {
        population_sizes: doc.list_or("rm", "population_size", full.population_sizes)?,
        survivors: survivors.into_iter().map(|s| s.0).collect(),
        mutations: doc.list_or("rm", "mutations", full.mutations)?,
    })
}
