//! Populations, truncation selection and the three reproduction models:
//! RBM offspring generation, random mutation (RM) and best random guess (BRG).

use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::error::{Error, Result};
use crate::experiments::histogram::{fitness_histogram, Histogram};
use crate::rbm::{Rbm, RbmConfig, RbmPersistence};
use crate::rng::{rng_from_seed, SimRng};
use crate::sat::{FitnessFn, Genome};

/// An RBM cannot be trained on fewer survivors than this.
pub const MIN_RBM_SURVIVORS: usize = 50;

/// Genomes of one generation with their cached fitness values.
#[derive(Debug, Clone)]
pub struct Population {
    genomes: Vec<Genome>,
    fitnesses: Vec<f64>,
}

impl Population {
    pub fn evaluate(genomes: Vec<Genome>, fitness: &FitnessFn) -> Result<Self> {
        let fitnesses = genomes
            .iter()
            .map(|g| fitness.evaluate(g))
            .collect::<Result<_>>()?;
        Ok(Population { genomes, fitnesses })
    }

    /// Fair-coin bits everywhere.
    pub fn random<R: Rng + ?Sized>(size: usize, fitness: &FitnessFn, rng: &mut R) -> Result<Self> {
        Population::evaluate(random_genomes(size, fitness.num_variables(), rng), fitness)
    }

    pub fn len(&self) -> usize {
        self.genomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genomes.is_empty()
    }

    pub fn genomes(&self) -> &[Genome] {
        &self.genomes
    }

    pub fn fitnesses(&self) -> &[f64] {
        &self.fitnesses
    }

    pub fn genome_len(&self) -> usize {
        self.genomes.first().map_or(0, Genome::len)
    }

    pub fn mean_fitness(&self) -> f64 {
        self.fitnesses.iter().sum::<f64>() / self.len() as f64
    }

    pub fn best_fitness(&self) -> f64 {
        self.fitnesses.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn subset(&self, indices: &[usize]) -> Population {
        Population {
            genomes: indices.iter().map(|&i| self.genomes[i].clone()).collect(),
            fitnesses: indices.iter().map(|&i| self.fitnesses[i]).collect(),
        }
    }
}

pub fn random_genomes<R: Rng + ?Sized>(count: usize, len: usize, rng: &mut R) -> Vec<Genome> {
    (0..count)
        .map(|_| Genome::new((0..len).map(|_| u8::from(rng.random::<bool>())).collect()))
        .collect()
}

/// Mean over loci of `1 - p² - q²`, where `p` is the frequency of allele 1.
pub fn mean_expected_heterozygosity(pop: &Population) -> f64 {
    heterozygosity_of(pop.genomes())
}

fn heterozygosity_of(genomes: &[Genome]) -> f64 {
    let n = genomes.first().map_or(0, Genome::len);
    if n == 0 {
        return 0.0;
    }
    let mut ones = vec![0u32; n];
    for g in genomes {
        for (c, &b) in ones.iter_mut().zip(g.bits()) {
            *c += u32::from(b);
        }
    }
    let size = genomes.len() as f64;
    ones.iter()
        .map(|&c| {
            let p = f64::from(c) / size;
            let q = 1.0 - p;
            1.0 - p * p - q * q
        })
        .sum::<f64>()
        / n as f64
}

/// How many individuals survive truncation selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurvivorSpec {
    /// Percentage of the population, in (0, 100].
    TopPercent(f64),
    TopCount(usize),
}

impl SurvivorSpec {
    /// Survivors before rounding: `S·N/100`, or the explicit count.
    pub fn exact_count(&self, population_size: usize) -> f64 {
        match *self {
            SurvivorSpec::TopPercent(p) => p * population_size as f64 / 100.0,
            SurvivorSpec::TopCount(c) => c as f64,
        }
    }

    /// `round(S·N/100)` with a minimum of one, or the explicit count.
    pub fn resolve(&self, population_size: usize) -> Result<usize> {
        let count = match *self {
            SurvivorSpec::TopPercent(p) => {
                if !(p > 0.0 && p <= 100.0) {
                    return Err(Error::InvalidParameter(format!(
                        "survivor percentage {p} outside (0, 100]"
                    )));
                }
                (self.exact_count(population_size).round() as usize).max(1)
            }
            SurvivorSpec::TopCount(c) => c,
        };
        if count == 0 || count > population_size {
            return Err(Error::InvalidParameter(format!(
                "{self} resolves to {count} survivors for N={population_size}"
            )));
        }
        Ok(count)
    }
}

impl std::fmt::Display for SurvivorSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SurvivorSpec::TopPercent(p) => write!(f, "{p}%"),
            SurvivorSpec::TopCount(c) => write!(f, "{c}"),
        }
    }
}

/// Indices of the `count` fittest individuals. Ties at the cutoff are broken
/// uniformly at random.
pub fn select_top_indices<R: Rng + ?Sized>(fitnesses: &[f64], count: usize, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitnesses.len()).collect();
    order.shuffle(rng);
    // stable sort keeps the shuffled order among equal fitness values
    order.sort_by(|&a, &b| fitnesses[b].total_cmp(&fitnesses[a]));
    order.truncate(count);
    order
}

pub fn select_top<R: Rng + ?Sized>(pop: &Population, spec: SurvivorSpec, rng: &mut R) -> Result<Vec<Genome>> {
    let count = spec.resolve(pop.len())?;
    Ok(select_top_indices(pop.fitnesses(), count, rng)
        .into_iter()
        .map(|i| pop.genomes[i].clone())
        .collect())
}

/// Random-mutation reproduction: each of `size` offspring copies a parent
/// drawn uniformly with replacement and flips `mutations` distinct loci.
/// `survivors` must carry fitness values under `fitness`.
pub fn step_rm<R: Rng + ?Sized>(
    survivors: &Population,
    size: usize,
    mutations: usize,
    fitness: &FitnessFn,
    rng: &mut R,
) -> Result<Population> {
    if survivors.is_empty() {
        return Err(Error::Config("random mutation needs at least one survivor".into()));
    }
    let n = survivors.genome_len();
    if mutations == 0 || mutations > n {
        return Err(Error::InvalidParameter(format!(
            "mutation count {mutations} must be in 1..={n}"
        )));
    }
    let mut genomes = Vec::with_capacity(size);
    let mut fitnesses = Vec::with_capacity(size);
    for _ in 0..size {
        let p = rng.random_range(0..survivors.len());
        let parent = &survivors.genomes[p];
        let flips = index::sample(rng, n, mutations).into_vec();
        let mut child = parent.clone();
        for &i in &flips {
            child.flip(i);
        }
        fitnesses.push(fitness.evaluate_mutant(parent, survivors.fitnesses[p], &child, &flips));
        genomes.push(child);
    }
    Ok(Population { genomes, fitnesses })
}

/// Trains `rbm` on the survivors and samples `size` offspring from it.
pub fn step_rbm<R: Rng + ?Sized>(
    survivors: &[Genome],
    size: usize,
    config: &RbmConfig,
    rbm: &mut Rbm,
    fitness: &FitnessFn,
    rng: &mut R,
) -> Result<Population> {
    if survivors.len() < MIN_RBM_SURVIVORS {
        return Err(Error::Config(format!(
            "RBM survivors {} < {MIN_RBM_SURVIVORS}",
            survivors.len()
        )));
    }
    rbm.train_pcd(survivors, config, rng)?;
    Population::evaluate(rbm.generate(size, config.iterations, rng), fitness)
}

/// Best genome seen so far by the random-guess baseline.
#[derive(Debug, Clone)]
pub struct BrgState {
    pub best: Genome,
    pub best_fitness: f64,
}

impl BrgState {
    fn observe(&mut self, pop: &Population) {
        for (g, &f) in pop.genomes.iter().zip(&pop.fitnesses) {
            if f > self.best_fitness {
                self.best_fitness = f;
                self.best = g.clone();
            }
        }
    }
}

/// Draws `size` fresh random genomes and folds them into the running best.
pub fn step_brg<R: Rng + ?Sized>(
    state: &mut Option<BrgState>,
    size: usize,
    fitness: &FitnessFn,
    rng: &mut R,
) -> Result<Population> {
    let pop = Population::random(size, fitness, rng)?;
    let s = state.get_or_insert_with(|| BrgState {
        best: Genome::zeros(fitness.num_variables()),
        best_fitness: f64::NEG_INFINITY,
    });
    s.observe(&pop);
    Ok(pop)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Rbm {
        config: RbmConfig,
        survivors: SurvivorSpec,
        persistence: RbmPersistence,
    },
    Rm {
        mutations: usize,
        survivors: SurvivorSpec,
    },
    Brg,
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Rbm { .. } => "rbm",
            Model::Rm { .. } => "rm",
            Model::Brg => "brg",
        }
    }
}

/// Fitness is evaluated against `fitness` from `generation` onward.
#[derive(Debug, Clone)]
pub struct FitnessSwitch {
    pub generation: usize,
    pub fitness: FitnessFn,
}

#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub model: Model,
    pub population_size: usize,
    pub fitness: FitnessFn,
    pub generations: usize,
    pub seed: u64,
    pub switch: Option<FitnessSwitch>,
    /// Attach a fitness histogram to every record.
    pub record_histograms: bool,
}

impl ModelConfig {
    pub fn new(model: Model, population_size: usize, fitness: FitnessFn, generations: usize, seed: u64) -> Self {
        ModelConfig {
            model,
            population_size,
            fitness,
            generations,
            seed,
            switch: None,
            record_histograms: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.population_size;
        if n == 0 {
            return Err(Error::Config("population size must be positive".into()));
        }
        let genome_len = self.fitness.num_variables();
        if let Some(switch) = &self.switch {
            if switch.fitness.num_variables() != genome_len {
                return Err(Error::Config(format!(
                    "switched fitness has {} variables, expected {genome_len}",
                    switch.fitness.num_variables()
                )));
            }
        }
        match &self.model {
            Model::Rbm { config, survivors, .. } => {
                config.validate()?;
                let s = survivors.resolve(n)?;
                if s < MIN_RBM_SURVIVORS {
                    return Err(Error::Config(format!(
                        "RBM survivors {s} < {MIN_RBM_SURVIVORS}"
                    )));
                }
            }
            Model::Rm { mutations, survivors } => {
                if survivors.exact_count(n) < 1.0 {
                    return Err(Error::Config(format!(
                        "{survivors} of N={n} leaves fewer than 1 survivor"
                    )));
                }
                survivors.resolve(n)?;
                if *mutations == 0 || *mutations > genome_len {
                    return Err(Error::Config(format!(
                        "mutation count {mutations} must be in 1..={genome_len}"
                    )));
                }
            }
            Model::Brg => {}
        }
        Ok(())
    }

    fn fitness_at(&self, generation: usize) -> &FitnessFn {
        match &self.switch {
            Some(s) if generation >= s.generation => &s.fitness,
            _ => &self.fitness,
        }
    }
}

/// Statistics of one generation, taken before selection.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    pub mean_fitness: f64,
    /// Population maximum; for BRG the best fitness seen so far.
    pub best_fitness: f64,
    pub mean_heterozygosity: f64,
    pub histogram: Option<Histogram>,
}

/// Hooks into [`run_generation_loop`]. Observers get their own random
/// stream so that observing a run never changes it.
pub trait GenerationObserver {
    fn on_population(&mut self, _generation: usize, _population: &Population) -> Result<()> {
        Ok(())
    }

    /// Called after the RBM of `generation` has been trained on `survivors`.
    fn on_rbm_trained(
        &mut self,
        _generation: usize,
        _survivors: &[Genome],
        _rbm: &Rbm,
        _config: &RbmConfig,
        _rng: &mut SimRng,
    ) -> Result<()> {
        Ok(())
    }
}

impl GenerationObserver for () {}

/// Runs `config.generations` rounds of evaluate → record → select →
/// reproduce. Returns `generations + 1` records, starting with the random
/// initial population.
pub fn run_generation_loop(
    config: &ModelConfig,
    observer: &mut dyn GenerationObserver,
) -> Result<Vec<GenerationRecord>> {
    config.validate()?;
    let mut rng = rng_from_seed(config.seed);
    let mut observer_rng = rng_from_seed(crate::rng::derive_seed_tagged(config.seed, "observer"));
    let size = config.population_size;
    let n = config.fitness.num_variables();

    let mut brg: Option<BrgState> = None;
    let mut pop = match config.model {
        Model::Brg => step_brg(&mut brg, size, config.fitness_at(0), &mut rng)?,
        _ => Population::random(size, config.fitness_at(0), &mut rng)?,
    };
    let mut persistent_rbm: Option<Rbm> = None;
    let mut records = Vec::with_capacity(config.generations + 1);

    for generation in 0..=config.generations {
        let fitness = config.fitness_at(generation);
        let best = match &brg {
            Some(state) => state.best_fitness,
            None => pop.best_fitness(),
        };
        records.push(GenerationRecord {
            generation,
            mean_fitness: pop.mean_fitness(),
            best_fitness: best,
            mean_heterozygosity: mean_expected_heterozygosity(&pop),
            histogram: config
                .record_histograms
                .then(|| fitness_histogram(pop.fitnesses())),
        });
        observer.on_population(generation, &pop)?;
        if generation == config.generations {
            break;
        }

        let next_fitness = config.fitness_at(generation + 1);
        pop = match &config.model {
            Model::Rm { mutations, survivors } => {
                let count = survivors.resolve(size)?;
                let chosen = select_top_indices(pop.fitnesses(), count, &mut rng);
                let mut parents = pop.subset(&chosen);
                if !std::ptr::eq(fitness, next_fitness) {
                    parents = Population::evaluate(parents.genomes, next_fitness)?;
                }
                step_rm(&parents, size, *mutations, next_fitness, &mut rng)?
            }
            Model::Rbm {
                config: rbm_config,
                survivors,
                persistence,
            } => {
                let count = survivors.resolve(size)?;
                let chosen = select_top_indices(pop.fitnesses(), count, &mut rng);
                let parents: Vec<Genome> = chosen.iter().map(|&i| pop.genomes[i].clone()).collect();
                let mut rbm = match (persistence, persistent_rbm.take()) {
                    (RbmPersistence::Persistent, Some(rbm)) => rbm,
                    _ => Rbm::new(n, rbm_config, &mut rng)?,
                };
                let next = step_rbm(&parents, size, rbm_config, &mut rbm, next_fitness, &mut rng)?;
                observer.on_rbm_trained(generation, &parents, &rbm, rbm_config, &mut observer_rng)?;
                if *persistence == RbmPersistence::Persistent {
                    persistent_rbm = Some(rbm);
                }
                next
            }
            Model::Brg => {
                if let Some(state) = brg.as_mut().filter(|_| !std::ptr::eq(fitness, next_fitness)) {
                    state.best_fitness = next_fitness.evaluate(&state.best)?;
                }
                step_brg(&mut brg, size, next_fitness, &mut rng)?
            }
        };
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sat::gen_uniform_ksat;
    use proptest::prelude::*;

    fn sat_fitness(n: usize, seed: u64) -> FitnessFn {
        FitnessFn::max_sat(gen_uniform_ksat(n, 3, 4.267, &mut rng_from_seed(seed)).unwrap())
    }

    fn population(fitnesses: &[f64], n: usize) -> Population {
        Population {
            genomes: (0..fitnesses.len()).map(|_| Genome::zeros(n)).collect(),
            fitnesses: fitnesses.to_vec(),
        }
    }

    #[test]
    fn initial_population_is_fair() {
        let fitness = FitnessFn::even_parity(100);
        let pop = Population::random(10_000, &fitness, &mut rng_from_seed(1)).unwrap();
        let ones: usize = pop.genomes().iter().map(Genome::count_ones).sum();
        assert!((ones as f64 / 1e6 - 0.5).abs() < 0.015);
        let single = Population::random(1, &fitness, &mut rng_from_seed(2)).unwrap();
        assert_eq!(single.len(), 1);
    }

    #[test]
    fn generation_zero_mean_is_seven_eighths() {
        let fitness = sat_fitness(150, 3);
        let pop = Population::random(1000, &fitness, &mut rng_from_seed(4)).unwrap();
        assert!((pop.mean_fitness() - 0.875).abs() < 0.01);
    }

    #[test]
    fn survivor_rounding() {
        use SurvivorSpec::*;
        assert_eq!(TopPercent(50.0).resolve(10).unwrap(), 5);
        assert_eq!(TopPercent(5.0).resolve(10).unwrap(), 1); // 0.5 rounds up
        assert_eq!(TopPercent(1.0).resolve(10).unwrap(), 1); // minimum one
        assert_eq!(TopPercent(1.0).exact_count(10), 0.1);
        assert_eq!(TopPercent(10.0).resolve(1000).unwrap(), 100);
        assert!(TopCount(0).resolve(10).is_err());
        assert!(TopCount(11).resolve(10).is_err());
        assert!(TopPercent(0.0).resolve(10).is_err());
        assert!(TopPercent(120.0).resolve(10).is_err());
    }

    #[test]
    fn selects_the_fittest() {
        let fit: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let mut chosen = select_top_indices(&fit, 5, &mut rng_from_seed(0));
        chosen.sort_unstable();
        assert_eq!(chosen, vec![5, 6, 7, 8, 9]);
        assert_eq!(select_top_indices(&fit, 1, &mut rng_from_seed(0)), vec![9]);
        let pop = population(&fit, 2);
        assert_eq!(select_top(&pop, SurvivorSpec::TopPercent(50.0), &mut rng_from_seed(0)).unwrap().len(), 5);
    }

    #[test]
    fn ties_are_broken_randomly() {
        let fit = vec![0.5; 100];
        let a = select_top_indices(&fit, 10, &mut rng_from_seed(1));
        let b = select_top_indices(&fit, 10, &mut rng_from_seed(2));
        assert_eq!(a.len(), 10);
        assert_ne!(a, b);
    }

    #[test]
    fn full_mutation_complements_parent() {
        let fitness = FitnessFn::even_parity(6);
        let parent = Population::evaluate(vec![Genome::new(vec![1, 0, 1, 1, 0, 0])], &fitness).unwrap();
        let kids = step_rm(&parent, 5, 6, &fitness, &mut rng_from_seed(3)).unwrap();
        for k in kids.genomes() {
            assert_eq!(k.bits(), &[0, 1, 0, 0, 1, 1]);
        }
        assert!(step_rm(&parent, 5, 7, &fitness, &mut rng_from_seed(3)).is_err());
    }

    #[test]
    fn single_flip_from_one_parent_has_at_most_n_offspring() {
        let fitness = sat_fitness(20, 5);
        let parent = Population::random(1, &fitness, &mut rng_from_seed(6)).unwrap();
        let kids = step_rm(&parent, 2000, 1, &fitness, &mut rng_from_seed(7)).unwrap();
        let distinct: std::collections::HashSet<_> = kids.genomes().iter().collect();
        assert_eq!(distinct.len(), 20);
    }

    proptest! {
        #[test]
        fn offspring_differ_from_a_parent_in_exactly_mu_loci(seed in any::<u64>(), mu in 1usize..8) {
            let fitness = sat_fitness(30, seed);
            let mut rng = rng_from_seed(seed);
            let parents = Population::random(3, &fitness, &mut rng).unwrap();
            let kids = step_rm(&parents, 40, mu, &fitness, &mut rng).unwrap();
            for (k, &f) in kids.genomes().iter().zip(kids.fitnesses()) {
                prop_assert!(parents.genomes().iter().any(|p| p.hamming(k) == mu));
                prop_assert_eq!(f, fitness.evaluate(k).unwrap());
            }
        }

        #[test]
        fn heterozygosity_is_bounded(seed in any::<u64>(), size in 1usize..50, n in 1usize..20) {
            let fitness = FitnessFn::even_parity(n);
            let pop = Population::random(size, &fitness, &mut rng_from_seed(seed)).unwrap();
            let h = mean_expected_heterozygosity(&pop);
            prop_assert!((0.0..=0.5).contains(&h));
        }

        #[test]
        fn heterozygosity_matches_pairwise_enumeration(seed in any::<u64>(), size in 1usize..30, n in 1usize..10) {
            // 1 - p² - q² is the probability that two alleles drawn with
            // replacement differ; count those ordered pairs directly.
            let fitness = FitnessFn::even_parity(n);
            let pop = Population::random(size, &fitness, &mut rng_from_seed(seed)).unwrap();
            let g = pop.genomes();
            let mut total = 0.0;
            for locus in 0..n {
                let differ = g.iter()
                    .flat_map(|a| g.iter().map(move |b| (a, b)))
                    .filter(|(a, b)| a.bits()[locus] != b.bits()[locus])
                    .count();
                total += differ as f64 / (size * size) as f64;
            }
            prop_assert!((mean_expected_heterozygosity(&pop) - total / n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn heterozygosity_examples() {
        let same = vec![Genome::new(vec![1, 0, 1]); 4];
        assert_eq!(heterozygosity_of(&same), 0.0);
        let half = vec![Genome::new(vec![0, 1]), Genome::new(vec![1, 0])];
        assert_eq!(heterozygosity_of(&half), 0.5);
        let mixed = vec![Genome::new(vec![0, 0]), Genome::new(vec![1, 1]), Genome::new(vec![1, 0])];
        assert!((heterozygosity_of(&mixed) - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn brg_keeps_running_maximum() {
        let fitness = sat_fitness(30, 8);
        let mut state = None;
        let mut rng = rng_from_seed(9);
        let first = step_brg(&mut state, 1, &fitness, &mut rng).unwrap();
        assert_eq!(state.as_ref().unwrap().best_fitness, first.fitnesses()[0]);
        let mut last = f64::NEG_INFINITY;
        for _ in 0..50 {
            step_brg(&mut state, 5, &fitness, &mut rng).unwrap();
            let best = state.as_ref().unwrap().best_fitness;
            assert!(best >= last);
            last = best;
        }
    }

    fn rm_config(generations: usize, seed: u64) -> ModelConfig {
        ModelConfig::new(
            Model::Rm {
                mutations: 1,
                survivors: SurvivorSpec::TopCount(1),
            },
            40,
            sat_fitness(50, 10),
            generations,
            seed,
        )
    }

    #[test]
    fn zero_generations_gives_one_record() {
        let records = run_generation_loop(&rm_config(0, 1), &mut ()).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].generation, 0);
    }

    #[test]
    fn runs_are_reproducible() {
        let a = run_generation_loop(&rm_config(30, 2), &mut ()).unwrap();
        let b = run_generation_loop(&rm_config(30, 2), &mut ()).unwrap();
        assert_eq!(a, b);
        let c = run_generation_loop(&rm_config(30, 3), &mut ()).unwrap();
        assert_ne!(a, c);
    }

    struct Capture(Vec<Population>);

    impl GenerationObserver for Capture {
        fn on_population(&mut self, _: usize, p: &Population) -> Result<()> {
            self.0.push(p.clone());
            Ok(())
        }
    }

    #[test]
    fn single_survivor_is_a_fittest_parent() {
        // With one survivor and one flip, some fittest genome of the previous
        // generation is one flip away from every offspring.
        let config = rm_config(20, 4);
        let mut cap = Capture(Vec::new());
        run_generation_loop(&config, &mut cap).unwrap();
        for pair in cap.0.windows(2) {
            let (prev, next) = (&pair[0], &pair[1]);
            assert_eq!(next.len(), config.population_size);
            let best = prev.best_fitness();
            assert!(prev
                .genomes()
                .iter()
                .zip(prev.fitnesses())
                .any(|(g, &f)| f == best && next.genomes().iter().all(|c| c.hamming(g) == 1)));
        }
    }

    #[test]
    fn records_respect_bounds_for_every_model() {
        let fitness = sat_fitness(40, 11);
        let models = [
            Model::Rm {
                mutations: 2,
                survivors: SurvivorSpec::TopPercent(10.0),
            },
            Model::Rbm {
                config: RbmConfig::new(40, 0.05, 5, 10),
                survivors: SurvivorSpec::TopPercent(50.0),
                persistence: RbmPersistence::Fresh,
            },
            Model::Brg,
        ];
        for model in models {
            let config = ModelConfig::new(model, 100, fitness.clone(), 8, 12);
            let mut cap = Capture(Vec::new());
            let records = run_generation_loop(&config, &mut cap).unwrap();
            assert_eq!(records.len(), 9);
            assert!(cap.0.iter().all(|p| p.len() == 100));
            for r in &records {
                assert!(0.0 <= r.mean_fitness && r.mean_fitness <= r.best_fitness && r.best_fitness <= 1.0);
                assert!((0.0..=0.5).contains(&r.mean_heterozygosity));
            }
        }
    }

    #[test]
    fn brg_record_is_monotone() {
        let config = ModelConfig::new(Model::Brg, 10, sat_fitness(30, 13), 40, 14);
        let records = run_generation_loop(&config, &mut ()).unwrap();
        assert!(records.windows(2).all(|w| w[1].best_fitness >= w[0].best_fitness));
    }

    #[test]
    fn rbm_step_requires_enough_survivors() {
        let fitness = FitnessFn::even_parity(4);
        let config = RbmConfig::new(4, 0.1, 2, 5);
        let mut rng = rng_from_seed(15);
        let mut rbm = Rbm::new(4, &config, &mut rng).unwrap();
        let few = random_genomes(49, 4, &mut rng);
        assert!(matches!(
            step_rbm(&few, 10, &config, &mut rbm, &fitness, &mut rng),
            Err(Error::Config(_))
        ));
        let enough = random_genomes(50, 4, &mut rng);
        let next = step_rbm(&enough, 77, &config, &mut rbm, &fitness, &mut rng).unwrap();
        assert_eq!(next.len(), 77);
    }

    #[test]
    fn identical_survivors_collapse_offspring() {
        let n = 30;
        let fitness = FitnessFn::even_parity(n);
        let mut rng = rng_from_seed(16);
        let target = random_genomes(1, n, &mut rng).pop().unwrap();
        let survivors = vec![target.clone(); 100];
        let config = RbmConfig::new(n, 0.1, 50, 10);
        let mut rbm = Rbm::new(n, &config, &mut rng).unwrap();
        let next = step_rbm(&survivors, 200, &config, &mut rbm, &fitness, &mut rng).unwrap();
        let close = next.genomes().iter().filter(|g| g.hamming(&target) <= n / 10).count();
        assert!(close >= 180, "{close}");
    }

    #[test]
    fn untrained_rbm_offspring_are_uniform() {
        let n = 20;
        let fitness = FitnessFn::even_parity(n);
        let mut rng = rng_from_seed(17);
        let survivors = vec![Genome::zeros(n); 60];
        let config = RbmConfig::new(n, 0.0, 5, 10);
        let mut rbm = Rbm::zeroed(n, n);
        let next = step_rbm(&survivors, 5000, &config, &mut rbm, &fitness, &mut rng).unwrap();
        for i in 0..n {
            let f = next.genomes().iter().filter(|g| g.bits()[i] == 1).count() as f64 / 5000.0;
            assert!((f - 0.5).abs() < 0.02, "locus {i}: {f}");
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let fitness = sat_fitness(20, 18);
        let rm = |survivors, mutations| {
            ModelConfig::new(Model::Rm { mutations, survivors }, 10, fitness.clone(), 1, 0).validate()
        };
        assert!(rm(SurvivorSpec::TopPercent(5.0), 1).is_err());
        assert!(rm(SurvivorSpec::TopPercent(10.0), 1).is_ok());
        assert!(rm(SurvivorSpec::TopCount(1), 21).is_err());
        let rbm = ModelConfig::new(
            Model::Rbm {
                config: RbmConfig::new(20, 0.1, 1, 10),
                survivors: SurvivorSpec::TopPercent(5.0),
                persistence: RbmPersistence::Fresh,
            },
            100,
            fitness.clone(),
            1,
            0,
        );
        assert!(rbm.validate().is_err());
        let mut switched = rm_config(1, 0);
        switched.switch = Some(FitnessSwitch {
            generation: 1,
            fitness: sat_fitness(21, 0),
        });
        assert!(switched.validate().is_err());
    }

    #[test]
    fn switch_changes_fitness_from_its_generation() {
        let a = sat_fitness(20, 19);
        let b = sat_fitness(20, 20);
        let mut config = rm_config(10, 21);
        config.fitness = a.clone();
        config.switch = Some(FitnessSwitch { generation: 5, fitness: b.clone() });
        let mut cap = Capture(Vec::new());
        run_generation_loop(&config, &mut cap).unwrap();
        for (g, pop) in cap.0.iter().enumerate() {
            let f = if g < 5 { &a } else { &b };
            for (genome, &fit) in pop.genomes().iter().zip(pop.fitnesses()) {
                assert_eq!(fit, f.evaluate(genome).unwrap(), "generation {g}");
            }
        }
    }
}
