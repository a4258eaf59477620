//! Random-mutation trend table: mean fitness at a fixed generation over
//! population size, survivor fraction and mutation count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evolution::{run_generation_loop, Model, ModelConfig, SurvivorSpec};
use crate::rng::derive_seed;
use crate::sat::FitnessFn;
use crate::stats::MeanSe;

#[derive(Debug, Clone, PartialEq)]
pub struct TrendAxes {
    pub population_sizes: Vec<usize>,
    pub survivors: Vec<SurvivorSpec>,
    pub mutations: Vec<usize>,
    pub generation: usize,
    pub replicates: usize,
}

impl Default for TrendAxes {
    fn default() -> Self {
        TrendAxes {
            population_sizes: vec![2, 10, 100, 1000, 10000],
            survivors: vec![
                SurvivorSpec::TopCount(1),
                SurvivorSpec::TopPercent(1.0),
                SurvivorSpec::TopPercent(5.0),
                SurvivorSpec::TopPercent(10.0),
                SurvivorSpec::TopPercent(50.0),
            ],
            mutations: vec![1, 2, 3, 4, 5],
            generation: 500,
            replicates: 1,
        }
    }
}

/// A percentage row leaves a blank cell when at most one individual would
/// survive; the explicit single-survivor row is never blank.
pub fn cell_is_blank(survivors: SurvivorSpec, population_size: usize) -> bool {
    match survivors {
        SurvivorSpec::TopPercent(_) => survivors.exact_count(population_size) <= 1.0,
        SurvivorSpec::TopCount(c) => c == 0 || c > population_size,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendRow {
    pub survivors: SurvivorSpec,
    pub mutations: usize,
    /// One cell per population size; `None` where blank.
    pub cells: Vec<Option<MeanSe>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendTable {
    pub population_sizes: Vec<usize>,
    pub generation: usize,
    pub rows: Vec<TrendRow>,
}

impl TrendTable {
    pub fn cell(&self, survivors: SurvivorSpec, mutations: usize, population_size: usize) -> Option<MeanSe> {
        let col = self.population_sizes.iter().position(|&n| n == population_size)?;
        self.rows
            .iter()
            .find(|r| r.survivors == survivors && r.mutations == mutations)
            .and_then(|r| r.cells[col])
    }

    /// Long-form CSV; blank cells have empty value columns.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "survivors,mutations,population_size,mean_fitness@{},se,runs", self.generation)?;
        for row in &self.rows {
            for (&n, cell) in self.population_sizes.iter().zip(&row.cells) {
                match cell {
                    Some(c) => writeln!(w, "{},{},{n},{},{},{}", row.survivors, row.mutations, c.mean, c.se, c.runs)?,
                    None => writeln!(w, "{},{},{n},,,", row.survivors, row.mutations)?,
                }
            }
        }
        Ok(())
    }
}

/// Every non-blank cell is run `axes.replicates` times; cell `c`, replicate
/// `r` uses `derive_seed(master_seed, c * replicates + r)` with cells
/// numbered row-major over (survivors, mutations, N).
pub fn run_trend_table(fitness: &FitnessFn, axes: &TrendAxes, master_seed: u64) -> Result<TrendTable> {
    if axes.replicates == 0 {
        return Err(Error::Config("replicates must be positive".into()));
    }
    let mut cells = Vec::new();
    for &survivors in &axes.survivors {
        for &mutations in &axes.mutations {
            for &n in &axes.population_sizes {
                cells.push((survivors, mutations, n));
            }
        }
    }
    let reps = axes.replicates;
    let values: Vec<Option<f64>> = (0..cells.len() * reps)
        .into_par_iter()
        .map(|job| {
            let (survivors, mutations, n) = cells[job / reps];
            if cell_is_blank(survivors, n) {
                return Ok(None);
            }
            let config = ModelConfig::new(
                Model::Rm { mutations, survivors },
                n,
                fitness.clone(),
                axes.generation,
                derive_seed(master_seed, job as u64),
            );
            let records = run_generation_loop(&config, &mut ())?;
            Ok(Some(records[axes.generation].mean_fitness))
        })
        .collect::<Result<_>>()?;

    let cols = axes.population_sizes.len();
    let mut rows = Vec::new();
    for (r, chunk) in cells.chunks(cols.max(1)).enumerate() {
        let (survivors, mutations, _) = chunk[0];
        let row_cells = (0..chunk.len())
            .map(|c| {
                let base = (r * cols + c) * reps;
                let runs: Option<Vec<f64>> = values[base..base + reps].iter().copied().collect();
                runs.map(|v| MeanSe::from_values(&v))
            })
            .collect();
        rows.push(TrendRow {
            survivors,
            mutations,
            cells: row_cells,
        });
    }
    Ok(TrendTable {
        population_sizes: axes.population_sizes.clone(),
        generation: axes.generation,
        rows,
    })
}
