use ndarray::{Array1, Array2};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::config::{MtlWeights, NetworkConfig};
use super::network::{backward, forward_cached, mtl_loss, Mode};
use super::params::ModelParams;
use crate::error::Result;

/// Magnitudes below this are compared on an absolute rather than relative scale.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckOptions {
    pub seed: u64,
    pub weights: MtlWeights,
    /// Network parameters sampled, in addition to every LHUC entry.
    pub n_params: usize,
    pub step: f64,
    pub n_frames: usize,
    /// Evaluate LHUC at `r = 0` instead of a random point.
    pub lhuc_at_zero: bool,
    /// Use per-batch normalisation statistics instead of the stored ones.
    pub train_batch_norm: bool,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            weights: MtlWeights::default(),
            n_params: 300,
            step: 1e-5,
            n_frames: 8,
            lhuc_at_zero: false,
            train_batch_norm: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub max_lhuc_relative_error: f64,
    pub n_params_checked: usize,
    pub n_lhuc_checked: usize,
    /// Analytic gradient of the whole network at the check point.
    pub analytic: ModelParams,
    pub analytic_lhuc: Array1<f64>,
}

fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(RELATIVE_ERROR_FLOOR)
}

/// Compares the analytic gradient with central differences at a random
/// point, with dropout off.
pub fn gradient_check(config: &NetworkConfig, options: &GradCheckOptions) -> Result<GradCheckReport> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut params = ModelParams::init(config, &mut rng)?;
    for l in &mut params.layers {
        l.bias.mapv_inplace(|_| rng.random_range(-0.3..0.3));
        l.gamma.mapv_inplace(|_| rng.random_range(0.5..1.5));
        l.beta.mapv_inplace(|_| rng.random_range(-0.3..0.3));
        l.running_mean.mapv_inplace(|_| rng.random_range(0.0..0.5));
        l.running_var.mapv_inplace(|_| rng.random_range(0.5..2.0));
    }
    for h in [&mut params.triphone, &mut params.monophone] {
        h.bias.mapv_inplace(|_| rng.random_range(-0.3..0.3));
    }
    let t = options.n_frames.max(2);
    let x = Array2::from_shape_simple_fn((t, config.input_dim), || StandardNormal.sample(&mut rng));
    let tri: Vec<usize> = (0..t).map(|_| rng.random_range(0..config.n_triphone_targets)).collect();
    let mono: Vec<usize> = (0..t).map(|_| rng.random_range(0..config.n_monophone_targets)).collect();
    let r = if options.lhuc_at_zero {
        Array1::zeros(config.hidden_dims[0])
    } else {
        let n = Normal::new(0.0, 0.5).unwrap();
        Array1::from_shape_simple_fn(config.hidden_dims[0], || n.sample(&mut rng))
    };

    let mode = || {
        if options.train_batch_norm {
            Mode::train_without_dropout()
        } else {
            Mode::Eval
        }
    };
    let loss_at = |p: &ModelParams, r: &Array1<f64>| -> Result<f64> {
        let c = forward_cached(p, x.view(), Some(r), mode())?;
        mtl_loss(&c.posteriors, &tri, &mono, options.weights)
    };

    let cache = forward_cached(&params, x.view(), Some(&r), mode())?;
    let (grads, d_lhuc) = backward(&params, &cache, &tri, &mono, options.weights)?;
    let d_lhuc = d_lhuc.expect("LHUC was supplied");

    let sizes: Vec<usize> = params.trainable().iter().map(|s| s.len()).collect();
    let total: usize = sizes.iter().sum();
    let picks = sample(&mut rng, total, options.n_params.min(total)).into_vec();
    let h = options.step;
    let mut max_err: f64 = 0.0;
    for flat in &picks {
        let (mut ti, mut idx) = (0, *flat);
        while idx >= sizes[ti] {
            idx -= sizes[ti];
            ti += 1;
        }
        let mut p = params.clone();
        p.trainable_mut()[ti][idx] += h;
        let up = loss_at(&p, &r)?;
        p.trainable_mut()[ti][idx] -= 2.0 * h;
        let down = loss_at(&p, &r)?;
        let numeric = (up - down) / (2.0 * h);
        let a = grads.trainable()[ti][idx];
        max_err = max_err.max(relative_error(a, numeric));
    }
    let mut max_lhuc: f64 = 0.0;
    for j in 0..r.len() {
        let mut rr = r.clone();
        rr[j] += h;
        let up = loss_at(&params, &rr)?;
        rr[j] -= 2.0 * h;
        let down = loss_at(&params, &rr)?;
        max_lhuc = max_lhuc.max(relative_error(d_lhuc[j], (up - down) / (2.0 * h)));
    }
    Ok(GradCheckReport {
        max_relative_error: max_err.max(max_lhuc),
        max_lhuc_relative_error: max_lhuc,
        n_params_checked: picks.len(),
        n_lhuc_checked: r.len(),
        analytic: grads,
        analytic_lhuc: d_lhuc,
    })
}

#[cfg(test)]
mod tests {
    use super::super::config::LhucPlacement;
    use super::*;

    #[test]
    fn toy_network_passes() {
        let report = gradient_check(&NetworkConfig::toy(12), &GradCheckOptions::default()).unwrap();
        assert!(report.n_params_checked + report.n_lhuc_checked >= 200);
        assert!(report.max_relative_error < 1e-4, "{}", report.max_relative_error);
    }

    #[test]
    fn lhuc_at_identity() {
        let opts = GradCheckOptions {
            lhuc_at_zero: true,
            seed: 1,
            ..Default::default()
        };
        let report = gradient_check(&NetworkConfig::toy(12), &opts).unwrap();
        assert!(report.max_lhuc_relative_error < 1e-4, "{}", report.max_lhuc_relative_error);
    }

    #[test]
    fn other_placement_and_training_statistics() {
        let cfg = NetworkConfig {
            lhuc_placement: LhucPlacement::AfterBatchNorm,
            ..NetworkConfig::toy(12)
        };
        for train_batch_norm in [false, true] {
            let opts = GradCheckOptions {
                seed: 2,
                train_batch_norm,
                ..Default::default()
            };
            let report = gradient_check(&cfg, &opts).unwrap();
            assert!(report.max_relative_error < 1e-4, "{train_batch_norm}: {}", report.max_relative_error);
        }
    }

    #[test]
    fn triphone_only_leaves_monophone_head_untouched() {
        let opts = GradCheckOptions {
            weights: MtlWeights::new(1.0).unwrap(),
            ..Default::default()
        };
        let report = gradient_check(&NetworkConfig::toy(12), &opts).unwrap();
        assert!(report.analytic.monophone.weight.iter().all(|&g| g == 0.0));
        assert!(report.analytic.monophone.bias.iter().all(|&g| g == 0.0));
        assert!(report.max_relative_error < 1e-4);
    }
}
