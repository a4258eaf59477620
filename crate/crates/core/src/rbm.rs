//! Bernoulli restricted Boltzmann machine.
//!
//! Visible and hidden units are binary. Activation probabilities are
//! `sigmoid(W v + b)` for the hidden layer and `sigmoid(Wᵀ h + a)` for the
//! visible layer, with `W` stored as an `H × n` row-major matrix.
//!
//! Training uses persistent contrastive divergence: the data is shuffled
//! and cut into minibatches of `B` vectors, and every minibatch receives `T`
//! parameter updates. Each update computes the positive statistics from the
//! clamped minibatch and the negative statistics from a persistent chain of
//! `B` fantasy particles that is advanced by one Gibbs step. As in
//! scikit-learn's `BernoulliRBM`, the persisted chain state is the sampled
//! hidden layer, starting from zeros.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::{gemm, Layout};
use crate::sat::Genome;

/// Standard deviation of the initial parameter distribution.
pub const INIT_STD: f32 = 0.01;

/// Rows processed together when running free or clamped chains.
const CHAIN_CHUNK: usize = 256;

const SNAPSHOT_MAGIC: &str = "BOLTZEVO-RBM 1";

/// Which parameter groups exist and learn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ablation {
    #[default]
    Full,
    /// Biases fixed at zero; only weights learn.
    WeightsOnly,
    /// Weights fixed at zero; only biases learn.
    BiasesOnly,
}

impl Ablation {
    pub fn trains_weights(self) -> bool {
        !matches!(self, Ablation::BiasesOnly)
    }

    pub fn trains_biases(self) -> bool {
        !matches!(self, Ablation::WeightsOnly)
    }

    pub fn name(self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::WeightsOnly => "weights_only",
            Ablation::BiasesOnly => "biases_only",
        }
    }
}

/// Statistic used for the hidden layer in the positive phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PositivePhase {
    #[default]
    Probabilities,
    Samples,
}

/// Whether a new machine is trained every generation or one machine keeps
/// learning across generations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RbmPersistence {
    #[default]
    Fresh,
    Persistent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbmConfig {
    pub num_hidden: usize,
    pub learning_rate: f64,
    /// Parameter updates per minibatch; also the number of Gibbs steps used
    /// when generating offspring.
    pub iterations: usize,
    pub batch_size: usize,
    pub ablation: Ablation,
    pub positive_phase: PositivePhase,
}

impl RbmConfig {
    pub fn new(num_hidden: usize, learning_rate: f64, iterations: usize, batch_size: usize) -> Self {
        RbmConfig {
            num_hidden,
            learning_rate,
            iterations,
            batch_size,
            ablation: Ablation::Full,
            positive_phase: PositivePhase::Probabilities,
        }
    }

    pub fn with_ablation(mut self, ablation: Ablation) -> Self {
        self.ablation = ablation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_hidden == 0 {
            return Err(Error::InvalidParameter("num_hidden must be positive".into()));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter("batch_size must be positive".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning_rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rbm {
    num_visible: usize,
    num_hidden: usize,
    weights: Vec<f32>,
    visible_bias: Vec<f32>,
    hidden_bias: Vec<f32>,
    ablation: Ablation,
    // chain_len × num_hidden, binary
    fantasy_hidden: Vec<f32>,
    chain_len: usize,
}

#[inline]
fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

fn sample_in_place<R: Rng + ?Sized>(values: &mut [f32], rng: &mut R) {
    for p in values {
        *p = if rng.random::<f32>() < *p { 1.0 } else { 0.0 };
    }
}

/// Independent Bernoulli draw for every probability.
pub fn sample_layer<R: Rng + ?Sized>(probs: &[f32], rng: &mut R) -> Vec<u8> {
    probs
        .iter()
        .map(|&p| u8::from(rng.random::<f32>() < p))
        .collect()
}

impl Rbm {
    /// Weights and biases drawn i.i.d. from `N(0, 0.01²)`; the group frozen
    /// by the ablation is set to zero instead.
    pub fn new<R: Rng + ?Sized>(num_visible: usize, config: &RbmConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        if num_visible == 0 {
            return Err(Error::InvalidParameter("num_visible must be positive".into()));
        }
        let h = config.num_hidden;
        let normal = Normal::new(0.0f32, INIT_STD).expect("valid normal");
        let mut draw = |len: usize, enabled: bool| -> Vec<f32> {
            if enabled {
                (0..len).map(|_| normal.sample(rng)).collect()
            } else {
                vec![0.0; len]
            }
        };
        let ablation = config.ablation;
        let weights = draw(h * num_visible, ablation.trains_weights());
        let visible_bias = draw(num_visible, ablation.trains_biases());
        let hidden_bias = draw(h, ablation.trains_biases());
        Ok(Rbm {
            num_visible,
            num_hidden: h,
            weights,
            visible_bias,
            hidden_bias,
            ablation,
            fantasy_hidden: Vec::new(),
            chain_len: 0,
        })
    }

    /// All parameters zero.
    pub fn zeroed(num_visible: usize, num_hidden: usize) -> Self {
        Rbm {
            num_visible,
            num_hidden,
            weights: vec![0.0; num_visible * num_hidden],
            visible_bias: vec![0.0; num_visible],
            hidden_bias: vec![0.0; num_hidden],
            ablation: Ablation::Full,
            fantasy_hidden: Vec::new(),
            chain_len: 0,
        }
    }

    /// `weights` is `num_hidden × num_visible`, row-major.
    pub fn from_parts(
        num_visible: usize,
        num_hidden: usize,
        weights: Vec<f32>,
        visible_bias: Vec<f32>,
        hidden_bias: Vec<f32>,
    ) -> Result<Self> {
        let check = |expected: usize, found: usize| {
            if expected == found {
                Ok(())
            } else {
                Err(Error::Dimension { expected, found })
            }
        };
        check(num_visible * num_hidden, weights.len())?;
        check(num_visible, visible_bias.len())?;
        check(num_hidden, hidden_bias.len())?;
        Ok(Rbm {
            num_visible,
            num_hidden,
            weights,
            visible_bias,
            hidden_bias,
            ablation: Ablation::Full,
            fantasy_hidden: Vec::new(),
            chain_len: 0,
        })
    }

    /// The machine with the roles of the two layers exchanged.
    pub fn transposed(&self) -> Rbm {
        let (n, h) = (self.num_visible, self.num_hidden);
        let mut weights = vec![0.0; n * h];
        for j in 0..h {
            for i in 0..n {
                weights[i * h + j] = self.weights[j * n + i];
            }
        }
        Rbm::from_parts(h, n, weights, self.hidden_bias.clone(), self.visible_bias.clone())
            .expect("dimensions are consistent")
    }

    pub fn num_visible(&self) -> usize {
        self.num_visible
    }

    pub fn num_hidden(&self) -> usize {
        self.num_hidden
    }

    pub fn ablation(&self) -> Ablation {
        self.ablation
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn weight(&self, hidden: usize, visible: usize) -> f32 {
        self.weights[hidden * self.num_visible + visible]
    }

    pub fn visible_bias(&self) -> &[f32] {
        &self.visible_bias
    }

    pub fn hidden_bias(&self) -> &[f32] {
        &self.hidden_bias
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(&self.visible_bias)
            .chain(&self.hidden_bias)
            .all(|v| v.is_finite())
    }

    fn hidden_probs_into(&self, visible: &[f32], rows: usize, out: &mut [f32]) {
        let (n, h) = (self.num_visible, self.num_hidden);
        let out = &mut out[..rows * h];
        for row in out.chunks_exact_mut(h) {
            row.copy_from_slice(&self.hidden_bias);
        }
        gemm(
            1.0,
            &visible[..rows * n],
            Layout::row_major(rows, n),
            &self.weights,
            Layout::transposed(n, h),
            1.0,
            out,
            Layout::row_major(rows, h),
        );
        out.iter_mut().for_each(|x| *x = sigmoid(*x));
    }

    fn visible_probs_into(&self, hidden: &[f32], rows: usize, out: &mut [f32]) {
        let (n, h) = (self.num_visible, self.num_hidden);
        let out = &mut out[..rows * n];
        for row in out.chunks_exact_mut(n) {
            row.copy_from_slice(&self.visible_bias);
        }
        gemm(
            1.0,
            &hidden[..rows * h],
            Layout::row_major(rows, h),
            &self.weights,
            Layout::row_major(h, n),
            1.0,
            out,
            Layout::row_major(rows, n),
        );
        out.iter_mut().for_each(|x| *x = sigmoid(*x));
    }

    /// `p(h_j = 1 | v) = sigmoid(Σ_i w_ji v_i + b_j)`.
    pub fn hidden_activation_probs(&self, visible: &[u8]) -> Result<Vec<f32>> {
        if visible.len() != self.num_visible {
            return Err(Error::Dimension {
                expected: self.num_visible,
                found: visible.len(),
            });
        }
        let v: Vec<f32> = visible.iter().map(|&b| f32::from(b)).collect();
        let mut out = vec![0.0; self.num_hidden];
        self.hidden_probs_into(&v, 1, &mut out);
        Ok(out)
    }

    /// `p(v_i = 1 | h) = sigmoid(Σ_j w_ji h_j + a_i)`.
    pub fn visible_activation_probs(&self, hidden: &[u8]) -> Result<Vec<f32>> {
        if hidden.len() != self.num_hidden {
            return Err(Error::Dimension {
                expected: self.num_hidden,
                found: hidden.len(),
            });
        }
        let h: Vec<f32> = hidden.iter().map(|&b| f32::from(b)).collect();
        let mut out = vec![0.0; self.num_visible];
        self.visible_probs_into(&h, 1, &mut out);
        Ok(out)
    }

    /// One pass of persistent contrastive divergence over `data`.
    pub fn train_pcd<R: Rng + ?Sized>(
        &mut self,
        data: &[Genome],
        config: &RbmConfig,
        rng: &mut R,
    ) -> Result<()> {
        config.validate()?;
        if data.is_empty() {
            return Err(Error::Training("empty training set".into()));
        }
        if config.num_hidden != self.num_hidden {
            return Err(Error::Dimension {
                expected: self.num_hidden,
                found: config.num_hidden,
            });
        }
        if let Some(bad) = data.iter().find(|g| g.len() != self.num_visible) {
            return Err(Error::Dimension {
                expected: self.num_visible,
                found: bad.len(),
            });
        }
        // a batch larger than the data trains on everything as one short batch
        let b = config.batch_size;
        let (n, h) = (self.num_visible, self.num_hidden);
        if self.chain_len != b {
            self.fantasy_hidden = vec![0.0; b * h];
            self.chain_len = b;
        }

        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(rng);

        // rows [0, rows) hold the minibatch, rows [rows, rows + b) the fantasy particles
        let mut stacked = vec![0.0f32; 2 * b * n];
        let mut probs = vec![0.0f32; 2 * b * h];
        let mut fantasy_visible = vec![0.0f32; b * n];
        let eta = config.learning_rate as f32;

        for batch in order.chunks(b) {
            let rows = batch.len();
            for (dst, &idx) in stacked.chunks_exact_mut(n).zip(batch) {
                for (d, &bit) in dst.iter_mut().zip(data[idx].bits()) {
                    *d = f32::from(bit);
                }
            }
            for _ in 0..config.iterations {
                self.pcd_update(
                    rows,
                    eta,
                    config.positive_phase,
                    &mut stacked,
                    &mut probs,
                    &mut fantasy_visible,
                    rng,
                );
            }
        }

        if !self.is_finite() {
            return Err(Error::Training("non-finite parameter after update".into()));
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn pcd_update<R: Rng + ?Sized>(
        &mut self,
        rows: usize,
        eta: f32,
        positive_phase: PositivePhase,
        stacked: &mut [f32],
        probs: &mut [f32],
        fantasy_visible: &mut [f32],
        rng: &mut R,
    ) {
        let (n, h, b) = (self.num_visible, self.num_hidden, self.chain_len);
        let total = rows + b;

        // advance the persistent chain: v ~ p(v | h_fantasy)
        self.visible_probs_into(&self.fantasy_hidden, b, fantasy_visible);
        sample_in_place(fantasy_visible, rng);
        stacked[rows * n..total * n].copy_from_slice(fantasy_visible);

        // hidden probabilities for data and particles in one product
        self.hidden_probs_into(stacked, total, probs);
        self.fantasy_hidden.copy_from_slice(&probs[rows * h..total * h]);
        sample_in_place(&mut self.fantasy_hidden, rng);
        if positive_phase == PositivePhase::Samples {
            sample_in_place(&mut probs[..rows * h], rng);
        }

        let pos_scale = eta / rows as f32;
        let neg_scale = -eta / b as f32;
        probs[..rows * h].iter_mut().for_each(|p| *p *= pos_scale);
        probs[rows * h..total * h].iter_mut().for_each(|p| *p *= neg_scale);

        if self.ablation.trains_weights() {
            // W += Pᵀ · V over the stacked rows
            gemm(
                1.0,
                &probs[..total * h],
                Layout::transposed(h, total),
                &stacked[..total * n],
                Layout::row_major(total, n),
                1.0,
                &mut self.weights,
                Layout::row_major(h, n),
            );
        }
        if self.ablation.trains_biases() {
            for row in probs[..total * h].chunks_exact(h) {
                for (bj, p) in self.hidden_bias.iter_mut().zip(row) {
                    *bj += p;
                }
            }
            for (r, row) in stacked[..total * n].chunks_exact(n).enumerate() {
                let scale = if r < rows { pos_scale } else { neg_scale };
                for (ai, v) in self.visible_bias.iter_mut().zip(row) {
                    *ai += scale * v;
                }
            }
        }
    }

    /// `count` independent free-running samples, each starting from a
    /// uniformly random visible layer and taking `gibbs_steps` alternations.
    pub fn generate<R: Rng + ?Sized>(&self, count: usize, gibbs_steps: usize, rng: &mut R) -> Vec<Genome> {
        self.run_chains(count, gibbs_steps, &[], &[], rng)
    }

    /// Fills in the unknown units of one genome. Clamped units are reset to
    /// `known_values` after every visible-layer sample.
    pub fn complete<R: Rng + ?Sized>(
        &self,
        known_positions: &[usize],
        known_values: &[u8],
        gibbs_steps: usize,
        rng: &mut R,
    ) -> Result<Genome> {
        let mut out = self.complete_many(known_positions, &[known_values], gibbs_steps, rng)?;
        Ok(out.pop().expect("one completion"))
    }

    /// Batched [`Rbm::complete`]: one completion per entry of `known_values`,
    /// all clamped at the same positions.
    pub fn complete_many<R: Rng + ?Sized, V: AsRef<[u8]>>(
        &self,
        known_positions: &[usize],
        known_values: &[V],
        gibbs_steps: usize,
        rng: &mut R,
    ) -> Result<Vec<Genome>> {
        let k = known_positions.len();
        let mut seen = vec![false; self.num_visible];
        for &p in known_positions {
            if p >= self.num_visible {
                return Err(Error::VariableOutOfRange {
                    var: p,
                    num_variables: self.num_visible,
                });
            }
            if std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidParameter(format!("position {p} clamped twice")));
            }
        }
        let mut flat = Vec::with_capacity(known_values.len() * k);
        for values in known_values {
            let values = values.as_ref();
            if values.len() != k {
                return Err(Error::Dimension {
                    expected: k,
                    found: values.len(),
                });
            }
            if values.iter().any(|&v| v > 1) {
                return Err(Error::InvalidParameter("known values must be 0 or 1".into()));
            }
            flat.extend_from_slice(values);
        }
        Ok(self.run_chains(known_values.len(), gibbs_steps, known_positions, &flat, rng))
    }

    fn run_chains<R: Rng + ?Sized>(
        &self,
        count: usize,
        gibbs_steps: usize,
        positions: &[usize],
        values: &[u8],
        rng: &mut R,
    ) -> Vec<Genome> {
        let (n, h) = (self.num_visible, self.num_hidden);
        let k = positions.len();
        let mut out = Vec::with_capacity(count);
        let chunk = CHAIN_CHUNK.min(count.max(1));
        let mut visible = vec![0.0f32; chunk * n];
        let mut hidden = vec![0.0f32; chunk * h];

        let clamp = |visible: &mut [f32], first: usize, rows: usize| {
            if k == 0 {
                return;
            }
            for r in 0..rows {
                let known = &values[(first + r) * k..(first + r + 1) * k];
                for (&p, &v) in positions.iter().zip(known) {
                    visible[r * n + p] = f32::from(v);
                }
            }
        };

        let mut first = 0;
        while first < count {
            let rows = chunk.min(count - first);
            let v = &mut visible[..rows * n];
            v.iter_mut()
                .for_each(|x| *x = if rng.random::<bool>() { 1.0 } else { 0.0 });
            clamp(v, first, rows);
            for _ in 0..gibbs_steps {
                self.hidden_probs_into(v, rows, &mut hidden);
                sample_in_place(&mut hidden[..rows * h], rng);
                self.visible_probs_into(&hidden, rows, v);
                sample_in_place(v, rng);
                clamp(v, first, rows);
            }
            out.extend(
                v.chunks_exact(n)
                    .map(|row| Genome::new(row.iter().map(|&x| x as u8).collect())),
            );
            first += rows;
        }
        out
    }

    /// Text dump of the parameters (not the chain state). Floats use Rust's
    /// shortest round-trip formatting, so [`Rbm::read_snapshot`] restores
    /// them exactly.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        let mut s = String::new();
        let _ = writeln!(s, "{SNAPSHOT_MAGIC}");
        let _ = writeln!(s, "visible {}", self.num_visible);
        let _ = writeln!(s, "hidden {}", self.num_hidden);
        let _ = writeln!(s, "ablation {}", self.ablation.name());
        let join = |xs: &[f32]| xs.iter().map(f32::to_string).collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, "weights");
        for row in self.weights.chunks(self.num_visible) {
            let _ = writeln!(s, "{}", join(row));
        }
        let _ = writeln!(s, "visible_bias\n{}", join(&self.visible_bias));
        let _ = writeln!(s, "hidden_bias\n{}", join(&self.hidden_bias));
        w.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn read_snapshot<B: BufRead>(r: B) -> Result<Self> {
        let lines: Vec<String> = r.lines().collect::<std::io::Result<_>>()?;
        let mut it = lines.iter().map(|l| l.trim());
        let bad = |what: &str| Error::Snapshot(format!("expected {what}"));
        if it.next() != Some(SNAPSHOT_MAGIC) {
            return Err(bad(SNAPSHOT_MAGIC));
        }
        let mut count = |key: &str| -> Result<usize> {
            it.next()
                .and_then(|l| l.strip_prefix(key))
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| bad(key))
        };
        let n = count("visible")?;
        let h = count("hidden")?;
        let ablation = match it.next().and_then(|l| l.strip_prefix("ablation ")) {
            Some("full") => Ablation::Full,
            Some("weights_only") => Ablation::WeightsOnly,
            Some("biases_only") => Ablation::BiasesOnly,
            _ => return Err(bad("ablation")),
        };
        let floats = |line: Option<&str>, len: usize, what: &str| -> Result<Vec<f32>> {
            let values: Vec<f32> = line
                .ok_or_else(|| bad(what))?
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad(what)))
                .collect::<Result<_>>()?;
            if values.len() != len {
                return Err(bad(what));
            }
            Ok(values)
        };
        if it.next() != Some("weights") {
            return Err(bad("weights"));
        }
        let mut weights = Vec::with_capacity(n * h);
        for _ in 0..h {
            weights.extend(floats(it.next(), n, "weight row")?);
        }
        if it.next() != Some("visible_bias") {
            return Err(bad("visible_bias"));
        }
        let visible_bias = floats(it.next(), n, "visible biases")?;
        if it.next() != Some("hidden_bias") {
            return Err(bad("hidden_bias"));
        }
        let hidden_bias = floats(it.next(), h, "hidden biases")?;
        let mut rbm = Rbm::from_parts(n, h, weights, visible_bias, hidden_bias)?;
        rbm.ablation = ablation;
        Ok(rbm)
    }
}
