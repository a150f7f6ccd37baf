use std::collections::BTreeMap;

use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{MtlWeights, NetworkConfig};
use super::lhuc::LhucTable;
use super::network::{backward, forward_cached, mtl_loss, FrameBatch, Mode};
use super::params::ModelParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OptimizerKind {
    Sgd,
    RmsProp { decay: f64, epsilon: f64 },
}

impl OptimizerKind {
    pub fn rmsprop() -> Self {
        OptimizerKind::RmsProp {
            decay: 0.9,
            epsilon: 1e-8,
        }
    }

    fn step(&self, lr: f64, theta: &mut [f64], grad: &[f64], state: &mut Vec<f64>) {
        match *self {
            OptimizerKind::Sgd => {
                for (t, g) in theta.iter_mut().zip(grad) {
                    *t -= lr * g;
                }
            }
            OptimizerKind::RmsProp { decay, epsilon } => {
                if state.len() != theta.len() {
                    *state = vec![0.0; theta.len()];
                }
                for ((t, g), s) in theta.iter_mut().zip(grad).zip(state.iter_mut()) {
                    *s = decay * *s + (1.0 - decay) * g * g;
                    *t -= lr * g / (s.sqrt() + epsilon);
                }
            }
        }
    }
}

/// How speaker LHUC vectors take part in training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LhucMode {
    /// Speaker-independent: no LHUC at all.
    Off,
    /// LHUC applied but held at the identity.
    Frozen,
    /// Speaker-adaptive training: each batch also updates its speaker's vector.
    Sat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub weights: MtlWeights,
    pub lhuc: LhucMode,
    pub seed: u64,
    pub dropout: bool,
    pub shuffle: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            epochs: 10,
            learning_rate: 0.05,
            optimizer: OptimizerKind::Sgd,
            weights: MtlWeights::default(),
            lhuc: LhucMode::Sat,
            seed: 0,
            dropout: true,
            shuffle: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LhucUpdate {
    pub epoch: usize,
    /// Position of the batch in the input slice.
    pub batch_index: usize,
    pub speaker_id: String,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub lhuc: LhucTable,
    /// Mean training-mode minibatch loss of each epoch.
    pub epoch_losses: Vec<f64>,
    pub lhuc_updates: Vec<LhucUpdate>,
}

impl TrainOutcome {
    pub fn final_loss(&self) -> f64 {
        *self.epoch_losses.last().unwrap_or(&f64::NAN)
    }
}

fn validate_options(lr: f64) -> Result<()> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::InvalidParams(format!("learning rate {lr} must be positive")));
    }
    Ok(())
}

fn update_running_stats(params: &mut ModelParams, stats: &[(Array1<f64>, Array1<f64>)]) {
    let m = params.config.batch_norm_momentum;
    for (layer, (mean, var)) in params.layers.iter_mut().zip(stats) {
        layer.running_mean.zip_mut_with(mean, |r, &b| *r = m * *r + (1.0 - m) * b);
        layer.running_var.zip_mut_with(var, |r, &b| *r = m * *r + (1.0 - m) * b);
    }
}

/// Mini-batch training of the network, with LHUC vectors estimated jointly
/// when `options.lhuc` is [`LhucMode::Sat`]. Fully deterministic given the seed.
pub fn train_sat(
    batches: &[FrameBatch],
    config: &NetworkConfig,
    options: &TrainOptions,
) -> Result<TrainOutcome> {
    if batches.is_empty() {
        return Err(Error::EmptyStream);
    }
    validate_options(options.learning_rate)?;
    config.validate()?;
    for b in batches {
        b.check_against(config)?;
    }
    let mut init_rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut params = ModelParams::init(config, &mut init_rng)?;
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(options.seed);
    dropout_rng.set_stream(1);
    let mut order_rng = ChaCha8Rng::seed_from_u64(options.seed);
    order_rng.set_stream(2);

    let mut lhuc = LhucTable::new(config.hidden_dims[0]);
    if options.lhuc != LhucMode::Off {
        for b in batches {
            lhuc.entry(&b.speaker_id);
        }
    }
    let mut param_state: Vec<Vec<f64>> = vec![Vec::new(); params.trainable().len()];
    let mut lhuc_state: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut epoch_losses = Vec::with_capacity(options.epochs);
    let mut lhuc_updates = Vec::new();
    let mut order: Vec<usize> = (0..batches.len()).collect();

    for epoch in 0..options.epochs {
        if options.shuffle {
            order.shuffle(&mut order_rng);
        }
        let mut total = 0.0;
        for &bi in &order {
            let batch = &batches[bi];
            let r = match options.lhuc {
                LhucMode::Off => None,
                _ => Some(lhuc.entry(&batch.speaker_id).clone()),
            };
            let mode = if options.dropout {
                Mode::train(&mut dropout_rng)
            } else {
                Mode::train_without_dropout()
            };
            let cache = forward_cached(&params, batch.features.view(), r.as_ref(), mode)?;
            total += mtl_loss(
                &cache.posteriors,
                &batch.triphone_labels,
                &batch.monophone_labels,
                options.weights,
            )?;
            let (grads, d_lhuc) = backward(
                &params,
                &cache,
                &batch.triphone_labels,
                &batch.monophone_labels,
                options.weights,
            )?;
            let stats: Vec<_> = cache
                .batch_stats()
                .expect("training mode records batch statistics")
                .into_iter()
                .map(|(m, v)| (m.clone(), v.clone()))
                .collect();
            update_running_stats(&mut params, &stats);
            for ((theta, g), s) in params
                .trainable_mut()
                .into_iter()
                .zip(grads.trainable())
                .zip(param_state.iter_mut())
            {
                options.optimizer.step(options.learning_rate, theta, g, s);
            }
            if let (LhucMode::Sat, Some(dr)) = (options.lhuc, d_lhuc) {
                let entry = lhuc.entry(&batch.speaker_id);
                let state = lhuc_state.entry(batch.speaker_id.clone()).or_default();
                options.optimizer.step(
                    options.learning_rate,
                    entry.as_slice_mut().unwrap(),
                    dr.as_slice().unwrap(),
                    state,
                );
                lhuc_updates.push(LhucUpdate {
                    epoch,
                    batch_index: bi,
                    speaker_id: batch.speaker_id.clone(),
                });
            }
        }
        epoch_losses.push(total / batches.len() as f64);
    }
    Ok(TrainOutcome {
        params,
        lhuc,
        epoch_losses,
        lhuc_updates,
    })
}

/// Mean evaluation-mode loss over `batches`. With a table, each batch uses
/// its speaker's entry, or the identity if the speaker is absent.
pub fn evaluate_loss(
    params: &ModelParams,
    batches: &[FrameBatch],
    lhuc: Option<&LhucTable>,
    weights: MtlWeights,
) -> Result<f64> {
    if batches.is_empty() {
        return Err(Error::EmptyStream);
    }
    let mut total = 0.0;
    for b in batches {
        b.check_against(&params.config)?;
        let r = lhuc.and_then(|t| t.get(&b.speaker_id));
        let post = forward_cached(params, b.features.view(), r, Mode::Eval)?.posteriors;
        total += mtl_loss(&post, &b.triphone_labels, &b.monophone_labels, weights)?;
    }
    Ok(total / batches.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptOptions {
    pub learning_rate: f64,
    /// Passes over the utterance list; each utterance is one update.
    pub passes: usize,
    pub optimizer: OptimizerKind,
    pub weights: MtlWeights,
}

impl Default for AdaptOptions {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            passes: 1,
            optimizer: OptimizerKind::Sgd,
            weights: MtlWeights::default(),
        }
    }
}

/// Estimates an LHUC vector for one unseen speaker with the network frozen
/// and batch norm on its stored statistics. The labels in `utterances` are
/// used as given; for unsupervised adaptation they are first-pass hypotheses.
pub fn adapt_test(
    params: &ModelParams,
    utterances: &[FrameBatch],
    options: &AdaptOptions,
) -> Result<Array1<f64>> {
    let first = utterances.first().ok_or(Error::NoAdaptationData)?;
    validate_options(options.learning_rate)?;
    for u in utterances {
        u.check_against(&params.config)?;
        if u.speaker_id != first.speaker_id {
            return Err(Error::InvalidParams(format!(
                "adaptation data mixes speakers {} and {}",
                first.speaker_id, u.speaker_id
            )));
        }
    }
    let mut r = Array1::zeros(params.config.hidden_dims[0]);
    let mut state = Vec::new();
    for _ in 0..options.passes {
        for u in utterances {
            let cache = forward_cached(params, u.features.view(), Some(&r), Mode::Eval)?;
            let (_, dr) = backward(
                params,
                &cache,
                &u.triphone_labels,
                &u.monophone_labels,
                options.weights,
            )?;
            let dr = dr.expect("LHUC was supplied");
            options.optimizer.step(
                options.learning_rate,
                r.as_slice_mut().unwrap(),
                dr.as_slice().unwrap(),
                &mut state,
            );
        }
    }
    Ok(r)
}
