use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::network::{splice_context, FrameBatch};

/// Layout of a synthetic frame-classification corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub raw_dim: usize,
    pub context: usize,
    pub n_triphone_targets: usize,
    pub n_monophone_targets: usize,
    pub frames_per_batch: usize,
    pub noise: f64,
    /// Frames per label run are drawn from `1..=max_run`.
    pub max_run: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            raw_dim: 8,
            context: 1,
            n_triphone_targets: 20,
            n_monophone_targets: 10,
            frames_per_batch: 64,
            noise: 0.6,
            max_run: 5,
            seed: 7,
        }
    }
}

/// Frames are noisy class prototypes, scaled per dimension by a speaker gain
/// vector, then spliced. Triphone class `k` belongs to monophone
/// `k * n_mono / n_tri`.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    spec: SyntheticSpec,
    prototypes: Array2<f64>,
    rng: ChaCha8Rng,
}

impl SyntheticCorpus {
    pub fn new(spec: SyntheticSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let prototypes = Array2::from_shape_simple_fn((spec.n_triphone_targets, spec.raw_dim), || {
            StandardNormal.sample(&mut rng)
        });
        Self {
            spec,
            prototypes,
            rng,
        }
    }

    pub fn spec(&self) -> &SyntheticSpec {
        &self.spec
    }

    pub fn input_dim(&self) -> usize {
        self.spec.raw_dim * (2 * self.spec.context + 1)
    }

    pub fn unit_gains(&self) -> Array1<f64> {
        Array1::ones(self.spec.raw_dim)
    }

    /// Log-normal gains with the given spread, each with a random sign.
    pub fn random_gains(&mut self, spread: f64) -> Array1<f64> {
        let n = Normal::new(0.0, spread).unwrap();
        let rng = &mut self.rng;
        Array1::from_shape_simple_fn(self.spec.raw_dim, || {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            sign * n.sample(rng).exp()
        })
    }

    pub fn batch(&mut self, speaker: &str, gains: &Array1<f64>) -> FrameBatch {
        let s = &self.spec;
        let t = s.frames_per_batch;
        let mut tri = Vec::with_capacity(t);
        while tri.len() < t {
            let label = self.rng.random_range(0..s.n_triphone_targets);
            let run = self.rng.random_range(1..=s.max_run.max(1));
            tri.extend(std::iter::repeat_n(label, run));
        }
        tri.truncate(t);
        let mut raw = Array2::zeros((t, s.raw_dim));
        for (row, &label) in tri.iter().enumerate() {
            for d in 0..s.raw_dim {
                let noise: f64 = StandardNormal.sample(&mut self.rng);
                raw[[row, d]] = gains[d] * (self.prototypes[[label, d]] + s.noise * noise);
            }
        }
        let mono = tri
            .iter()
            .map(|&k| k * s.n_monophone_targets / s.n_triphone_targets)
            .collect();
        let features = splice_context(&raw, s.context).expect("non-empty batch");
        FrameBatch::new(features, tri, mono, speaker).expect("consistent synthetic batch")
    }

    pub fn batches(&mut self, speaker: &str, gains: &Array1<f64>, n: usize) -> Vec<FrameBatch> {
        (0..n).map(|_| self.batch(speaker, gains)).collect()
    }
}
