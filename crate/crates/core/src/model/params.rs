use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::config::NetworkConfig;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenLayer {
    /// `input x bottleneck`, layers 2-6 only.
    pub bottleneck: Option<Array2<f64>>,
    /// `(bottleneck or input) x width`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputHead {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: NetworkConfig,
    pub layers: Vec<HiddenLayer>,
    pub triphone: OutputHead,
    pub monophone: OutputHead,
}

fn he_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    let normal = Normal::new(0.0, (2.0 / rows as f64).sqrt()).unwrap();
    Array2::from_shape_simple_fn((rows, cols), || normal.sample(rng))
}

impl ModelParams {
    /// He-initialised weights, zero biases, identity batch norm.
    pub fn init(config: &NetworkConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let b = config.bottleneck_dim;
        let layers = (1..=config.hidden_dims.len())
            .map(|l| {
                let inp = config.layer_input_dim(l);
                let width = config.hidden_dims[l - 1];
                let (bottleneck, affine_in) = if NetworkConfig::has_bottleneck(l) {
                    (Some(he_matrix(inp, b, rng)), b)
                } else {
                    (None, inp)
                };
                HiddenLayer {
                    bottleneck,
                    weight: he_matrix(affine_in, width, rng),
                    bias: Array1::zeros(width),
                    gamma: Array1::ones(width),
                    beta: Array1::zeros(width),
                    running_mean: Array1::zeros(width),
                    running_var: Array1::ones(width),
                }
            })
            .collect();
        let last = *config.hidden_dims.last().unwrap();
        let head = |n: usize, rng: &mut _| OutputHead {
            weight: he_matrix(last, n, rng),
            bias: Array1::zeros(n),
        };
        let triphone = head(config.n_triphone_targets, rng);
        let monophone = head(config.n_monophone_targets, rng);
        Ok(Self {
            config: config.clone(),
            layers,
            triphone,
            monophone,
        })
    }

    /// Same shapes, every value zero. Used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        let z2 = |a: &Array2<f64>| Array2::zeros(a.raw_dim());
        let z1 = |a: &Array1<f64>| Array1::zeros(a.raw_dim());
        Self {
            config: self.config.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| HiddenLayer {
                    bottleneck: l.bottleneck.as_ref().map(z2),
                    weight: z2(&l.weight),
                    bias: z1(&l.bias),
                    gamma: z1(&l.gamma),
                    beta: z1(&l.beta),
                    running_mean: z1(&l.running_mean),
                    running_var: z1(&l.running_var),
                })
                .collect(),
            triphone: OutputHead {
                weight: z2(&self.triphone.weight),
                bias: z1(&self.triphone.bias),
            },
            monophone: OutputHead {
                weight: z2(&self.monophone.weight),
                bias: z1(&self.monophone.bias),
            },
        }
    }

    /// Trainable tensors in declaration order: per layer bottleneck, weight,
    /// bias, gamma, beta; then triphone and monophone weight and bias.
    pub fn trainable(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for l in &self.layers {
            if let Some(bn) = &l.bottleneck {
                out.push(bn.as_slice().unwrap());
            }
            out.push(l.weight.as_slice().unwrap());
            out.push(l.bias.as_slice().unwrap());
            out.push(l.gamma.as_slice().unwrap());
            out.push(l.beta.as_slice().unwrap());
        }
        for h in [&self.triphone, &self.monophone] {
            out.push(h.weight.as_slice().unwrap());
            out.push(h.bias.as_slice().unwrap());
        }
        out
    }

    pub fn trainable_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for l in &mut self.layers {
            if let Some(bn) = &mut l.bottleneck {
                out.push(bn.as_slice_mut().unwrap());
            }
            out.push(l.weight.as_slice_mut().unwrap());
            out.push(l.bias.as_slice_mut().unwrap());
            out.push(l.gamma.as_slice_mut().unwrap());
            out.push(l.beta.as_slice_mut().unwrap());
        }
        for h in [&mut self.triphone, &mut self.monophone] {
            out.push(h.weight.as_slice_mut().unwrap());
            out.push(h.bias.as_slice_mut().unwrap());
        }
        out
    }

    pub fn n_trainable(&self) -> usize {
        self.trainable().iter().map(|t| t.len()).sum()
    }

    /// Order-sensitive FNV-1a over the bit patterns of every tensor,
    /// running statistics included.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |values: &[f64]| {
            for v in values {
                for b in v.to_bits().to_le_bytes() {
                    h = (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3);
                }
            }
        };
        for t in self.trainable() {
            feed(t);
        }
        for l in &self.layers {
            feed(l.running_mean.as_slice().unwrap());
            feed(l.running_var.as_slice().unwrap());
        }
        h
    }
}
