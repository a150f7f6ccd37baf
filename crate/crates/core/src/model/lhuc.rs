use std::collections::BTreeMap;

use ndarray::Array1;

/// LHUC amplitude `2 * sigmoid(r)`, in (0, 2) and exactly 1 at `r = 0`.
pub fn lhuc_scale(r: &Array1<f64>) -> Array1<f64> {
    r.mapv(|v| 2.0 / (1.0 + (-v).exp()))
}

/// Per-speaker LHUC parameters, one entry per layer-1 unit.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LhucTable {
    dim: usize,
    entries: BTreeMap<String, Array1<f64>>,
}

impl LhucTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, speaker: &str) -> Option<&Array1<f64>> {
        self.entries.get(speaker)
    }

    /// Returns the speaker's vector, creating the identity (`r = 0`) if absent.
    pub fn entry(&mut self, speaker: &str) -> &mut Array1<f64> {
        let dim = self.dim;
        self.entries
            .entry(speaker.to_string())
            .or_insert_with(|| Array1::zeros(dim))
    }

    pub fn insert(&mut self, speaker: impl Into<String>, r: Array1<f64>) {
        assert_eq!(r.len(), self.dim, "LHUC vector width");
        self.entries.insert(speaker.into(), r);
    }

    pub fn speakers(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
