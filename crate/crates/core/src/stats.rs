//! Mean and standard error over replicate runs.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    /// Standard error of the mean (sample standard deviation / sqrt(runs)).
    /// Zero when fewer than two values are available.
    pub se: f64,
    pub runs: usize,
}

impl MeanSe {
    pub fn from_values(values: &[f64]) -> Self {
        let runs = values.len();
        if runs == 0 {
            return MeanSe {
                mean: f64::NAN,
                se: 0.0,
                runs,
            };
        }
        let mean = values.iter().sum::<f64>() / runs as f64;
        let se = if runs > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
            (var / runs as f64).sqrt()
        } else {
            0.0
        };
        MeanSe { mean, se, runs }
    }

    /// Collects one value per run at every generation; `runs[r][g]`.
    pub fn per_generation(runs: &[Vec<f64>]) -> Vec<MeanSe> {
        let len = runs.iter().map(Vec::len).min().unwrap_or(0);
        (0..len)
            .map(|g| {
                let column: Vec<f64> = runs.iter().map(|r| r[g]).collect();
                MeanSe::from_values(&column)
            })
            .collect()
    }
}
