use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{FactorSet, Method, MethodParams, Multiplicity};
use crate::error::Result;
use crate::speed::ResamplerParams;
use crate::vtlp::DEFAULT_BOUNDARY_HZ;
use crate::wsola::WsolaParams;

/// Settings for `plan` and `run`, usually loaded from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub method: Method,
    /// Global factor set for dysarthric speech; none skips those jobs.
    #[serde(default)]
    pub dys_multiplicity: Option<Multiplicity>,
    /// Target speakers per control utterance; 0 skips control jobs.
    #[serde(default)]
    pub ctl_multiplicity: usize,
    pub manifest: PathBuf,
    #[serde(default)]
    pub factor_table: Option<PathBuf>,
    #[serde(default)]
    pub plan: Option<PathBuf>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Rate used to turn the millisecond tempo settings into samples.
    #[serde(default = "default_rate")]
    pub sample_rate_hz: u32,
    #[serde(default)]
    pub vtlp: VtlpSection,
    #[serde(default)]
    pub tempo: TempoSection,
    #[serde(default)]
    pub speed: SpeedSection,
}

fn default_workers() -> usize {
    1
}

fn default_rate() -> u32 {
    16000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VtlpSection {
    pub boundary_hz: f64,
}

impl Default for VtlpSection {
    fn default() -> Self {
        Self {
            boundary_hz: DEFAULT_BOUNDARY_HZ,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TempoSection {
    pub frame_ms: f64,
    pub tolerance_ms: f64,
}

impl Default for TempoSection {
    fn default() -> Self {
        Self {
            frame_ms: 32.0,
            tolerance_ms: 8.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedSection {
    pub taps_per_side: usize,
    pub kaiser_beta: f64,
    pub cutoff_scale: f64,
}

impl Default for SpeedSection {
    fn default() -> Self {
        let p = ResamplerParams::default();
        Self {
            taps_per_side: p.taps_per_side,
            kaiser_beta: p.kaiser_beta,
            cutoff_scale: p.cutoff_scale,
        }
    }
}

impl PipelineConfig {
    pub fn method_params(&self) -> Result<MethodParams> {
        Ok(MethodParams {
            vtlp_boundary_hz: self.vtlp.boundary_hz,
            wsola: WsolaParams::from_ms(
                self.sample_rate_hz,
                self.tempo.frame_ms,
                self.tempo.tolerance_ms,
            )?,
            resampler: ResamplerParams {
                taps_per_side: self.speed.taps_per_side,
                kaiser_beta: self.speed.kaiser_beta,
                cutoff_scale: self.speed.cutoff_scale,
            },
            ..MethodParams::default()
        })
    }

    pub fn dys_set(&self) -> Option<FactorSet> {
        self.dys_multiplicity.map(FactorSet::new)
    }

    /// Makes relative paths relative to `base` (normally the config's directory).
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.manifest);
        for p in [&mut self.factor_table, &mut self.plan, &mut self.output_dir]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
    }
}
