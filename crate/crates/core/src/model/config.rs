use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const N_HIDDEN: usize = 7;

/// Where the layer-1 LHUC scaling sits relative to batch norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LhucPlacement {
    /// ReLU -> LHUC -> batch norm.
    BeforeBatchNorm,
    /// ReLU -> batch norm -> LHUC.
    AfterBatchNorm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Feature dimension after context splicing.
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub bottleneck_dim: usize,
    pub dropout_rate: f64,
    pub n_triphone_targets: usize,
    pub n_monophone_targets: usize,
    /// 1-based `(from, to)`: output of `from` is added to the input of `to`.
    pub skip_connections: Vec<(usize, usize)>,
    pub lhuc_placement: LhucPlacement,
    pub batch_norm_epsilon: f64,
    /// Weight of the old running statistic in each update.
    pub batch_norm_momentum: f64,
}

impl NetworkConfig {
    /// Toy-scale defaults: 64-wide hidden layers, 16-wide bottlenecks,
    /// 20 triphone and 10 monophone targets.
    pub fn toy(input_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dims: vec![64; N_HIDDEN],
            bottleneck_dim: 16,
            dropout_rate: 0.2,
            n_triphone_targets: 20,
            n_monophone_targets: 10,
            skip_connections: vec![(1, 3), (4, 6)],
            lhuc_placement: LhucPlacement::BeforeBatchNorm,
            batch_norm_epsilon: 1e-5,
            batch_norm_momentum: 0.9,
        }
    }

    /// Full-size layout: 80-dim features over 9 frames, six 2000-wide layers,
    /// a 100-wide seventh, 200-wide bottlenecks.
    pub fn full_scale(n_triphone_targets: usize, n_monophone_targets: usize) -> Self {
        let mut hidden_dims = vec![2000; N_HIDDEN];
        hidden_dims[6] = 100;
        Self {
            input_dim: 80 * 9,
            hidden_dims,
            bottleneck_dim: 200,
            n_triphone_targets,
            n_monophone_targets,
            ..Self::toy(80 * 9)
        }
    }

    /// Layers 2-6 (1-based) project their input through a bottleneck.
    pub fn has_bottleneck(layer: usize) -> bool {
        (2..=6).contains(&layer)
    }

    /// Layers 1-6 (1-based) apply dropout in training.
    pub fn has_dropout(layer: usize) -> bool {
        (1..=6).contains(&layer)
    }

    pub fn layer_input_dim(&self, layer: usize) -> usize {
        if layer == 1 {
            self.input_dim
        } else {
            self.hidden_dims[layer - 2]
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.hidden_dims.len() != N_HIDDEN {
            return bad(format!(
                "expected {N_HIDDEN} hidden layers, got {}",
                self.hidden_dims.len()
            ));
        }
        if self.input_dim == 0 || self.bottleneck_dim == 0 || self.hidden_dims.contains(&0) {
            return bad("layer dimensions must be positive".into());
        }
        if self.n_triphone_targets == 0 || self.n_monophone_targets == 0 {
            return bad("target counts must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout rate {} outside [0, 1)", self.dropout_rate));
        }
        if !(self.batch_norm_epsilon > 0.0) || !(0.0..1.0).contains(&self.batch_norm_momentum) {
            return bad("batch norm epsilon must be positive and momentum in [0, 1)".into());
        }
        for &(from, to) in &self.skip_connections {
            if from < 1 || to > N_HIDDEN || from + 2 > to {
                return bad(format!("skip ({from}, {to}) must satisfy 1 <= from < to - 1 <= 6"));
            }
            if self.hidden_dims[from - 1] != self.hidden_dims[to - 2] {
                return bad(format!(
                    "skip ({from}, {to}) joins widths {} and {}",
                    self.hidden_dims[from - 1],
                    self.hidden_dims[to - 2]
                ));
            }
        }
        Ok(())
    }
}

/// Interpolation weight between the triphone and monophone losses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MtlWeights {
    lambda: f64,
}

impl MtlWeights {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidParams(format!("lambda {lambda} outside [0, 1]")));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Default for MtlWeights {
    /// Equal weight on both tasks.
    fn default() -> Self {
        Self { lambda: 0.5 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        NetworkConfig::toy(36).validate().unwrap();
        NetworkConfig::full_scale(4000, 45).validate().unwrap();
    }

    #[test]
    fn rejects_bad_layouts() {
        let mut c = NetworkConfig::toy(10);
        c.hidden_dims.pop();
        assert!(c.validate().is_err());

        let mut c = NetworkConfig::toy(10);
        c.hidden_dims[1] = 32;
        assert!(c.validate().is_err(), "skip 1->3 needs h1 == h2");

        let mut c = NetworkConfig::toy(10);
        c.skip_connections = vec![(3, 4)];
        assert!(c.validate().is_err());

        let mut c = NetworkConfig::toy(10);
        c.dropout_rate = 1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn lambda_bounds() {
        assert!(MtlWeights::new(-0.1).is_err());
        assert!(MtlWeights::new(1.1).is_err());
        assert_eq!(MtlWeights::default().lambda(), 0.5);
    }
}
