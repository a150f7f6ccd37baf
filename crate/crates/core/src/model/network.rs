use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, RngCore};

use super::config::{LhucPlacement, MtlWeights, NetworkConfig};
use super::lhuc::{lhuc_scale, LhucTable};
use super::params::ModelParams;
use crate::error::{Error, Result};

/// Spliced features and frame labels for one speaker.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBatch {
    pub features: Array2<f64>,
    pub triphone_labels: Vec<usize>,
    pub monophone_labels: Vec<usize>,
    pub speaker_id: String,
}

impl FrameBatch {
    pub fn new(
        features: Array2<f64>,
        triphone_labels: Vec<usize>,
        monophone_labels: Vec<usize>,
        speaker_id: impl Into<String>,
    ) -> Result<Self> {
        let t = features.nrows();
        if t == 0 {
            return Err(Error::ShapeMismatch("batch has no frames".into()));
        }
        if triphone_labels.len() != t || monophone_labels.len() != t {
            return Err(Error::ShapeMismatch(format!(
                "{t} frames but {} triphone and {} monophone labels",
                triphone_labels.len(),
                monophone_labels.len()
            )));
        }
        Ok(Self {
            features,
            triphone_labels,
            monophone_labels,
            speaker_id: speaker_id.into(),
        })
    }

    pub fn n_frames(&self) -> usize {
        self.features.nrows()
    }

    pub fn check_against(&self, config: &NetworkConfig) -> Result<()> {
        if self.features.ncols() != config.input_dim {
            return Err(Error::ShapeMismatch(format!(
                "features have {} columns, network expects {}",
                self.features.ncols(),
                config.input_dim
            )));
        }
        check_labels(&self.triphone_labels, config.n_triphone_targets, "triphone")?;
        check_labels(&self.monophone_labels, config.n_monophone_targets, "monophone")
    }
}

fn check_labels(labels: &[usize], n: usize, what: &str) -> Result<()> {
    match labels.iter().find(|&&l| l >= n) {
        Some(l) => Err(Error::ShapeMismatch(format!(
            "{what} label {l} out of range for {n} targets"
        ))),
        None => Ok(()),
    }
}

/// Concatenates frames `t - context ..= t + context`, replicating the edges.
pub fn splice_context(frames: &Array2<f64>, context: usize) -> Result<Array2<f64>> {
    let (t, d) = frames.dim();
    if t == 0 {
        return Err(Error::ShapeMismatch("cannot splice zero frames".into()));
    }
    let width = 2 * context + 1;
    let mut out = Array2::zeros((t, d * width));
    for row in 0..t {
        for k in 0..width {
            let src = (row + k).saturating_sub(context).min(t - 1);
            out.row_mut(row)
                .slice_mut(ndarray::s![k * d..(k + 1) * d])
                .assign(&frames.row(src));
        }
    }
    Ok(out)
}

/// Training mode uses per-batch normalisation statistics and, when an RNG is
/// supplied, dropout. Evaluation uses the stored running statistics.
pub enum Mode<'r> {
    Train { dropout_rng: Option<&'r mut dyn RngCore> },
    Eval,
}

impl<'r> Mode<'r> {
    pub fn train(rng: &'r mut dyn RngCore) -> Self {
        Mode::Train {
            dropout_rng: Some(rng),
        }
    }

    pub fn train_without_dropout() -> Self {
        Mode::Train { dropout_rng: None }
    }

    pub fn is_train(&self) -> bool {
        matches!(self, Mode::Train { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Posteriors {
    pub triphone: Array2<f64>,
    pub monophone: Array2<f64>,
}

#[derive(Debug, Clone)]
struct LayerCache {
    input: Array2<f64>,
    bottleneck_out: Option<Array2<f64>>,
    pre: Array2<f64>,
    relu: Array2<f64>,
    xhat: Array2<f64>,
    inv_std: Array1<f64>,
    batch_stats: Option<(Array1<f64>, Array1<f64>)>,
    bn_out: Array2<f64>,
    mask: Option<Array2<f64>>,
    output: Array2<f64>,
}

/// Intermediate values of one forward pass, consumed by [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    layers: Vec<LayerCache>,
    lhuc: Option<(Array1<f64>, Array1<f64>)>,
    train: bool,
    pub posteriors: Posteriors,
}

impl ForwardCache {
    /// Per-layer batch mean and biased variance (training mode only).
    pub fn batch_stats(&self) -> Option<Vec<(&Array1<f64>, &Array1<f64>)>> {
        self.layers
            .iter()
            .map(|l| l.batch_stats.as_ref().map(|(m, v)| (m, v)))
            .collect()
    }

    /// Output of every hidden layer, in order.
    pub fn hidden_outputs(&self) -> Vec<&Array2<f64>> {
        self.layers.iter().map(|l| &l.output).collect()
    }
}

/// Numerically stable row-wise softmax.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

fn relu(a: &Array2<f64>) -> Array2<f64> {
    a.mapv(|v| if v > 0.0 { v } else { 0.0 })
}

/// Runs the network and keeps everything the backward pass needs.
///
/// `lhuc_r` is the raw LHUC vector for the batch's speaker.
pub fn forward_cached(
    params: &ModelParams,
    features: ArrayView2<f64>,
    lhuc_r: Option<&Array1<f64>>,
    mut mode: Mode<'_>,
) -> Result<ForwardCache> {
    let cfg = &params.config;
    if features.ncols() != cfg.input_dim {
        return Err(Error::ShapeMismatch(format!(
            "features have {} columns, network expects {}",
            features.ncols(),
            cfg.input_dim
        )));
    }
    if features.nrows() == 0 {
        return Err(Error::ShapeMismatch("batch has no frames".into()));
    }
    let lhuc = match lhuc_r {
        Some(r) if r.len() != cfg.hidden_dims[0] => {
            return Err(Error::ShapeMismatch(format!(
                "LHUC vector has {} entries, layer 1 has {} units",
                r.len(),
                cfg.hidden_dims[0]
            )))
        }
        Some(r) => Some((r.clone(), lhuc_scale(r))),
        None => None,
    };
    let train = mode.is_train();
    let n_frames = features.nrows() as f64;
    let eps = cfg.batch_norm_epsilon;
    let mut caches: Vec<LayerCache> = Vec::with_capacity(params.layers.len());

    for (i, layer) in params.layers.iter().enumerate() {
        let l = i + 1;
        let mut input = if i == 0 {
            features.to_owned()
        } else {
            caches[i - 1].output.clone()
        };
        for &(from, to) in &cfg.skip_connections {
            if to == l {
                input += &caches[from - 1].output;
            }
        }
        let bottleneck_out = layer.bottleneck.as_ref().map(|b| input.dot(b));
        let pre = bottleneck_out.as_ref().unwrap_or(&input).dot(&layer.weight) + &layer.bias;
        let relu_out = relu(&pre);
        let scale = if i == 0 { lhuc.as_ref().map(|(_, g)| g) } else { None };

        let bn_in = match (scale, cfg.lhuc_placement) {
            (Some(g), LhucPlacement::BeforeBatchNorm) => &relu_out * g,
            _ => relu_out.clone(),
        };
        let (mean, var, batch_stats) = if train {
            let mean = bn_in.sum_axis(Axis(0)) / n_frames;
            let var = (&bn_in - &mean).mapv(|v| v * v).sum_axis(Axis(0)) / n_frames;
            (mean.clone(), var.clone(), Some((mean, var)))
        } else {
            (layer.running_mean.clone(), layer.running_var.clone(), None)
        };
        let inv_std = var.mapv(|v| 1.0 / (v + eps).sqrt());
        let xhat = (&bn_in - &mean) * &inv_std;
        let bn_out = &xhat * &layer.gamma + &layer.beta;
        let scaled = match (scale, cfg.lhuc_placement) {
            (Some(g), LhucPlacement::AfterBatchNorm) => &bn_out * g,
            _ => bn_out.clone(),
        };

        let p = cfg.dropout_rate;
        let mask = match &mut mode {
            Mode::Train {
                dropout_rng: Some(rng),
            } if NetworkConfig::has_dropout(l) && p > 0.0 => {
                let keep = 1.0 / (1.0 - p);
                Some(Array2::from_shape_simple_fn(scaled.raw_dim(), || {
                    if rng.random::<f64>() >= p {
                        keep
                    } else {
                        0.0
                    }
                }))
            }
            _ => None,
        };
        let output = match &mask {
            Some(m) => &scaled * m,
            None => scaled,
        };
        caches.push(LayerCache {
            input,
            bottleneck_out,
            pre,
            relu: relu_out,
            xhat,
            inv_std,
            batch_stats,
            bn_out,
            mask,
            output,
        });
    }

    let last = &caches.last().unwrap().output;
    let triphone = softmax_rows(&(last.dot(&params.triphone.weight) + &params.triphone.bias));
    let monophone = softmax_rows(&(last.dot(&params.monophone.weight) + &params.monophone.bias));
    Ok(ForwardCache {
        layers: caches,
        lhuc,
        train,
        posteriors: Posteriors {
            triphone,
            monophone,
        },
    })
}

/// Posteriors for a batch. With an LHUC table the batch's speaker must be in it.
pub fn forward(
    params: &ModelParams,
    batch: &FrameBatch,
    lhuc: Option<&LhucTable>,
    mode: Mode<'_>,
) -> Result<Posteriors> {
    batch.check_against(&params.config)?;
    let r = match lhuc {
        Some(table) => Some(
            table
                .get(&batch.speaker_id)
                .ok_or_else(|| Error::MissingLhuc(batch.speaker_id.clone()))?,
        ),
        None => None,
    };
    Ok(forward_cached(params, batch.features.view(), r, mode)?.posteriors)
}

fn cross_entropy(post: &Array2<f64>, labels: &[usize]) -> f64 {
    let sum: f64 = labels
        .iter()
        .enumerate()
        .map(|(t, &y)| -post[[t, y]].ln())
        .sum();
    sum / labels.len() as f64
}

/// `lambda * CE_tri + (1 - lambda) * CE_mono`, each the mean negative log
/// posterior of the labelled target. A task with zero weight is skipped.
pub fn mtl_loss(
    posteriors: &Posteriors,
    triphone_labels: &[usize],
    monophone_labels: &[usize],
    weights: MtlWeights,
) -> Result<f64> {
    let t = posteriors.triphone.nrows();
    if posteriors.monophone.nrows() != t || triphone_labels.len() != t || monophone_labels.len() != t
    {
        return Err(Error::ShapeMismatch("posteriors and labels disagree on frame count".into()));
    }
    check_labels(triphone_labels, posteriors.triphone.ncols(), "triphone")?;
    check_labels(monophone_labels, posteriors.monophone.ncols(), "monophone")?;
    let lambda = weights.lambda();
    let mut loss = 0.0;
    if lambda > 0.0 {
        loss += lambda * cross_entropy(&posteriors.triphone, triphone_labels);
    }
    if lambda < 1.0 {
        loss += (1.0 - lambda) * cross_entropy(&posteriors.monophone, monophone_labels);
    }
    Ok(loss)
}

fn logit_grad(post: &Array2<f64>, labels: &[usize], weight: f64) -> Array2<f64> {
    if weight == 0.0 {
        return Array2::zeros(post.raw_dim());
    }
    let mut g = post.clone();
    for (t, &y) in labels.iter().enumerate() {
        g[[t, y]] -= 1.0;
    }
    g * (weight / labels.len() as f64)
}

/// Gradient of [`mtl_loss`] with respect to every trainable tensor and, if
/// the forward pass used LHUC, to the raw LHUC vector.
pub fn backward(
    params: &ModelParams,
    cache: &ForwardCache,
    triphone_labels: &[usize],
    monophone_labels: &[usize],
    weights: MtlWeights,
) -> Result<(ModelParams, Option<Array1<f64>>)> {
    let cfg = &params.config;
    let post = &cache.posteriors;
    if triphone_labels.len() != post.triphone.nrows() || monophone_labels.len() != post.triphone.nrows()
    {
        return Err(Error::ShapeMismatch("labels and cache disagree on frame count".into()));
    }
    check_labels(triphone_labels, cfg.n_triphone_targets, "triphone")?;
    check_labels(monophone_labels, cfg.n_monophone_targets, "monophone")?;
    let lambda = weights.lambda();
    let d_tri = logit_grad(&post.triphone, triphone_labels, lambda);
    let d_mono = logit_grad(&post.monophone, monophone_labels, 1.0 - lambda);

    let mut grads = params.zeros_like();
    let n_layers = cache.layers.len();
    let last = &cache.layers[n_layers - 1].output;
    grads.triphone.weight = last.t().dot(&d_tri);
    grads.triphone.bias = d_tri.sum_axis(Axis(0));
    grads.monophone.weight = last.t().dot(&d_mono);
    grads.monophone.bias = d_mono.sum_axis(Axis(0));

    let mut d_out: Vec<Array2<f64>> = cache
        .layers
        .iter()
        .map(|l| Array2::zeros(l.output.raw_dim()))
        .collect();
    d_out[n_layers - 1] = d_tri.dot(&params.triphone.weight.t()) + d_mono.dot(&params.monophone.weight.t());
    let mut d_lhuc = None;
    let n_frames = last.nrows() as f64;

    for i in (0..n_layers).rev() {
        let layer = &params.layers[i];
        let c = &cache.layers[i];
        let mut d = std::mem::replace(&mut d_out[i], Array2::zeros((0, 0)));
        if let Some(m) = &c.mask {
            d *= m;
        }
        let lhuc = if i == 0 { cache.lhuc.as_ref() } else { None };
        // Derivative of 2*sigmoid(r) is g * (1 - g/2).
        let dg_dr = |g: &Array1<f64>| g.mapv(|a| a * (1.0 - 0.5 * a));

        if let (Some((_, g)), LhucPlacement::AfterBatchNorm) = (lhuc, cfg.lhuc_placement) {
            let dg = (&d * &c.bn_out).sum_axis(Axis(0));
            d_lhuc = Some(dg * dg_dr(g));
            d *= g;
        }

        let g_layer = &mut grads.layers[i];
        g_layer.gamma = (&d * &c.xhat).sum_axis(Axis(0));
        g_layer.beta = d.sum_axis(Axis(0));
        let dxhat = d * &layer.gamma;
        let mut ds = if cache.train {
            let sum_dx = dxhat.sum_axis(Axis(0));
            let sum_dxx = (&dxhat * &c.xhat).sum_axis(Axis(0));
            (dxhat * n_frames - &sum_dx - &c.xhat * &sum_dxx) * &(&c.inv_std / n_frames)
        } else {
            dxhat * &c.inv_std
        };

        if let (Some((_, g)), LhucPlacement::BeforeBatchNorm) = (lhuc, cfg.lhuc_placement) {
            let dg = (&ds * &c.relu).sum_axis(Axis(0));
            d_lhuc = Some(dg * dg_dr(g));
            ds *= g;
        }

        let mut da = ds;
        ndarray::Zip::from(&mut da)
            .and(&c.pre)
            .for_each(|v, &a| {
                if a <= 0.0 {
                    *v = 0.0
                }
            });
        g_layer.bias = da.sum_axis(Axis(0));
        let d_in = match (&layer.bottleneck, &c.bottleneck_out) {
            (Some(b), Some(z)) => {
                g_layer.weight = z.t().dot(&da);
                let dz = da.dot(&layer.weight.t());
                g_layer.bottleneck = Some(c.input.t().dot(&dz));
                dz.dot(&b.t())
            }
            _ => {
                g_layer.weight = c.input.t().dot(&da);
                da.dot(&layer.weight.t())
            }
        };
        if i > 0 {
            d_out[i - 1] += &d_in;
            for &(from, to) in &cfg.skip_connections {
                if to == i + 1 {
                    d_out[from - 1] += &d_in;
                }
            }
        }
    }
    Ok((grads, d_lhuc))
}
