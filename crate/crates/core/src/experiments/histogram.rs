//! Fitness distributions binned at 0.005.

/// Width of one fitness bin.
pub const BIN_WIDTH: f64 = 0.005;
const BINS_PER_UNIT: f64 = 200.0;
/// Bins `[0, 0.005), …, [0.995, 1.0), [1.0, 1.005)`.
pub const NUM_BINS: usize = 201;

/// Fraction of the population in each bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn bin_lower(index: usize) -> f64 {
        index as f64 / BINS_PER_UNIT
    }

    pub fn bin_of(fitness: f64) -> usize {
        // the small offset keeps exact multiples of the bin width (which are
        // common for clause fractions) from falling into the bin below
        let idx = (fitness * BINS_PER_UNIT + 1e-9).floor();
        (idx.max(0.0) as usize).min(NUM_BINS - 1)
    }

    pub fn total(&self) -> f64 {
        self.density.iter().sum()
    }

    /// Indices of strict local maxima after a centred 3-bin moving average.
    /// Plateaus count once.
    pub fn smoothed_modes(&self) -> Vec<usize> {
        let d = &self.density;
        let smooth: Vec<f64> = (0..d.len())
            .map(|i| {
                let lo = i.saturating_sub(1);
                let hi = (i + 1).min(d.len() - 1);
                d[lo..=hi].iter().sum::<f64>() / 3.0
            })
            .collect();
        let mut modes = Vec::new();
        let mut i = 0;
        while i < smooth.len() {
            let mut j = i;
            while j + 1 < smooth.len() && smooth[j + 1] == smooth[i] {
                j += 1;
            }
            let left_lower = i == 0 || smooth[i - 1] < smooth[i];
            let right_lower = j + 1 == smooth.len() || smooth[j + 1] < smooth[i];
            if smooth[i] > 0.0 && left_lower && right_lower {
                modes.push(i);
            }
            i = j + 1;
        }
        modes
    }
}

/// Counts per 0.005 bin divided by the number of values.
pub fn fitness_histogram(fitnesses: &[f64]) -> Histogram {
    let mut density = vec![0.0; NUM_BINS];
    if fitnesses.is_empty() {
        return Histogram { density };
    }
    for &f in fitnesses {
        density[Histogram::bin_of(f)] += 1.0;
    }
    let n = fitnesses.len() as f64;
    density.iter_mut().for_each(|d| *d /= n);
    Histogram { density }
}
