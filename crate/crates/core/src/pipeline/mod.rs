//! Corpus-level augmentation: manifests, job planning, parallel execution
//! and duration accounting.

mod config;
mod plan;
mod run;
mod summary;

pub use config::{PipelineConfig, SpeedSection, TempoSection, VtlpSection};
pub use plan::{build_plan, output_id, stable_hash};
pub use run::{apply_method, run_plan, JobFailure, MethodParams, RunReport};
pub use summary::{summarize, Summary};

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Group {
    /// Control (typical) speech.
    #[serde(rename = "CTL")]
    Ctl,
    /// Dysarthric speech.
    #[serde(rename = "DYS")]
    Dys,
}

impl Group {
    /// UASpeech naming: control speaker ids start with `C` (`CF02`, `CM04`).
    pub fn from_uaspeech_speaker(speaker_id: &str) -> Self {
        if speaker_id.starts_with('C') {
            Group::Ctl
        } else {
            Group::Dys
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::Ctl => "CTL",
            Group::Dys => "DYS",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Vtlp,
    Tempo,
    Speed,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Vtlp => "vtlp",
            Method::Tempo => "tempo",
            Method::Speed => "speed",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vtlp" => Ok(Method::Vtlp),
            "tempo" => Ok(Method::Tempo),
            "speed" => Ok(Method::Speed),
            other => Err(Error::InvalidParams(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Multiplicity {
    #[serde(rename = "2x")]
    X2,
    #[serde(rename = "4x")]
    X4,
    #[serde(rename = "6x")]
    X6,
}

impl FromStr for Multiplicity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2x" => Ok(Multiplicity::X2),
            "4x" => Ok(Multiplicity::X4),
            "6x" => Ok(Multiplicity::X6),
            other => Err(Error::InvalidParams(format!(
                "unknown factor set `{other}` (expected 2x, 4x or 6x)"
            ))),
        }
    }
}

pub const FACTORS_2X: [f64; 2] = [0.9, 1.1];
pub const FACTORS_4X: [f64; 4] = [0.9, 0.95, 1.05, 1.1];
pub const FACTORS_6X: [f64; 6] = [0.85, 0.9, 0.95, 1.05, 1.1, 1.15];

/// Global perturbation factors applied to every dysarthric utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSet {
    multiplicity: Multiplicity,
    factors: Vec<f64>,
}

impl FactorSet {
    pub fn new(multiplicity: Multiplicity) -> Self {
        let factors = match multiplicity {
            Multiplicity::X2 => FACTORS_2X.to_vec(),
            Multiplicity::X4 => FACTORS_4X.to_vec(),
            Multiplicity::X6 => FACTORS_6X.to_vec(),
        };
        Self {
            multiplicity,
            factors,
        }
    }

    pub fn multiplicity(&self) -> Multiplicity {
        self.multiplicity
    }

    pub fn factors(&self) -> &[f64] {
        &self.factors
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceRecord {
    pub utterance_id: String,
    pub speaker_id: String,
    pub group: Group,
    pub audio_path: PathBuf,
    /// Seconds.
    pub duration: f64,
    /// Set on augmented records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_speaker: Option<String>,
}

impl UtteranceRecord {
    pub fn new(
        utterance_id: impl Into<String>,
        speaker_id: impl Into<String>,
        group: Group,
        audio_path: impl Into<PathBuf>,
        duration: f64,
    ) -> Self {
        Self {
            utterance_id: utterance_id.into(),
            speaker_id: speaker_id.into(),
            group,
            audio_path: audio_path.into(),
            duration,
            method: None,
            factor: None,
            source_id: None,
            target_speaker: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentJob {
    pub source: UtteranceRecord,
    pub method: Method,
    pub factor: f64,
    /// Target dysarthric speaker for control-to-dysarthric jobs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_speaker: Option<String>,
    pub output_id: String,
}

fn read_json_lines<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::MalformedRecord {
                path: path.to_path_buf(),
                line: i + 1,
                detail: e.to_string(),
            })
        })
        .collect()
}

fn write_json_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("records serialize"));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a JSON-lines manifest. Relative audio paths are resolved against
/// the manifest's directory.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<UtteranceRecord>> {
    let path = path.as_ref();
    let mut records: Vec<UtteranceRecord> = read_json_lines(path)?;
    let base = path.parent().unwrap_or(Path::new(""));
    for (i, r) in records.iter_mut().enumerate() {
        if !(r.duration > 0.0) {
            return Err(Error::MalformedRecord {
                path: path.to_path_buf(),
                line: i + 1,
                detail: format!("duration {} must be positive", r.duration),
            });
        }
        if r.audio_path.is_relative() {
            r.audio_path = base.join(&r.audio_path);
        }
    }
    Ok(records)
}

pub fn write_manifest(path: impl AsRef<Path>, records: &[UtteranceRecord]) -> Result<()> {
    write_json_lines(path.as_ref(), records)
}

pub fn read_plan(path: impl AsRef<Path>) -> Result<Vec<AugmentJob>> {
    read_json_lines(path.as_ref())
}

pub fn write_plan(path: impl AsRef<Path>, plan: &[AugmentJob]) -> Result<()> {
    write_json_lines(path.as_ref(), plan)
}
