//! Desk-scale hybrid DNN acoustic model.
//!
//! Seven hidden layers, each affine -> ReLU -> batch norm, with linear
//! bottlenecks in front of layers 2-6, dropout after layers 1-6, additive
//! skip connections 1->3 and 4->6, and two softmax heads (tied triphone
//! states and monophones) trained with the interpolated loss
//! `lambda * CE_tri + (1 - lambda) * CE_mono`.
//!
//! Speaker adaptation uses LHUC: layer-1 activations are scaled per speaker
//! by `2 * sigmoid(r)`, with `r` estimated jointly with the network during
//! training and alone, per utterance, at test time.

mod config;
mod gradcheck;
mod io;
mod lhuc;
mod network;
mod params;
mod synth;
mod train;

pub use config::{LhucPlacement, MtlWeights, NetworkConfig};
pub use gradcheck::{gradient_check, GradCheckOptions, GradCheckReport};
pub use io::{load_params, read_params, save_params, write_params, MODEL_MAGIC, MODEL_VERSION};
pub use lhuc::{lhuc_scale, LhucTable};
pub use network::{
    backward, forward, forward_cached, mtl_loss, softmax_rows, splice_context, ForwardCache,
    FrameBatch, Mode, Posteriors,
};
pub use params::{HiddenLayer, ModelParams, OutputHead};
pub use synth::{SyntheticCorpus, SyntheticSpec};
pub use train::{
    adapt_test, evaluate_loss, train_sat, AdaptOptions, LhucMode, LhucUpdate, OptimizerKind,
    TrainOptions, TrainOutcome,
};
