use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use speechaug::align::{
    build_factor_table, default_silence_labels, parse_ctm, partition_stats, speaker_stats,
};
use speechaug::model::{
    gradient_check as run_gradient_check, train_sat, GradCheckOptions, LhucMode, MtlWeights,
    NetworkConfig, SyntheticCorpus, SyntheticSpec, TrainOptions,
};
use speechaug::pipeline::{
    build_plan, read_manifest, run_plan, summarize as summarize_records, FactorSet, Method,
    MethodParams, Multiplicity,
};
use speechaug::speed::{speed_perturb as rs_speed, ResamplerParams, SpeedFactor};
use speechaug::vtlp::{vtlp_perturb as rs_vtlp, warp_frequency as rs_warp, WarpSpec, DEFAULT_BOUNDARY_HZ};
use speechaug::wsola::{best_shift as rs_best_shift, tempo_perturb as rs_tempo, TempoFactor, WsolaParams};

create_exception!(speechaug, SpeechAugError, PyException);

fn err(e: speechaug::Error) -> PyErr {
    SpeechAugError::new_err(e.to_string())
}

/// Mono audio with float samples in [-1, 1].
#[pyclass(name = "AudioBuffer", from_py_object)]
#[derive(Clone)]
struct PyAudioBuffer {
    inner: speechaug::AudioBuffer,
}

#[pymethods]
impl PyAudioBuffer {
    #[new]
    fn new(samples: Vec<f64>, sample_rate_hz: u32) -> PyResult<Self> {
        let inner = speechaug::AudioBuffer::new(samples, sample_rate_hz).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn samples(&self) -> Vec<f64> {
        self.inner.samples().to_vec()
    }

    #[getter]
    fn sample_rate_hz(&self) -> u32 {
        self.inner.sample_rate_hz()
    }

    #[getter]
    fn duration_seconds(&self) -> f64 {
        self.inner.duration_seconds()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "AudioBuffer({} samples @ {} Hz)",
            self.inner.len(),
            self.inner.sample_rate_hz()
        )
    }
}

impl From<speechaug::AudioBuffer> for PyAudioBuffer {
    fn from(inner: speechaug::AudioBuffer) -> Self {
        Self { inner }
    }
}

#[pyfunction]
fn read_wav(path: PathBuf) -> PyResult<PyAudioBuffer> {
    speechaug::read_wav(path).map(Into::into).map_err(err)
}

#[pyfunction]
fn write_wav(buffer: &PyAudioBuffer, path: PathBuf) -> PyResult<()> {
    speechaug::write_wav(&buffer.inner, path).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (freq_hz, alpha, nyquist_hz, boundary_hz = DEFAULT_BOUNDARY_HZ))]
fn warp_frequency(freq_hz: f64, alpha: f64, nyquist_hz: f64, boundary_hz: f64) -> PyResult<f64> {
    let spec = WarpSpec::new(alpha, boundary_hz).map_err(err)?;
    rs_warp(freq_hz, &spec, nyquist_hz).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (buffer, alpha, boundary_hz = DEFAULT_BOUNDARY_HZ))]
fn vtlp_perturb(buffer: &PyAudioBuffer, alpha: f64, boundary_hz: f64) -> PyResult<PyAudioBuffer> {
    let spec = WarpSpec::new(alpha, boundary_hz).map_err(err)?;
    rs_vtlp(&buffer.inner, &spec).map(Into::into).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (buffer, factor, frame_ms = 32.0, tolerance_ms = 8.0))]
fn tempo_perturb(
    buffer: &PyAudioBuffer,
    factor: f64,
    frame_ms: f64,
    tolerance_ms: f64,
) -> PyResult<PyAudioBuffer> {
    let params = WsolaParams::from_ms(buffer.inner.sample_rate_hz(), frame_ms, tolerance_ms)
        .map_err(err)?;
    let factor = TempoFactor::new(factor).map_err(err)?;
    rs_tempo(&buffer.inner, factor, &params).map(Into::into).map_err(err)
}

#[pyfunction]
fn speed_perturb(buffer: &PyAudioBuffer, factor: f64) -> PyResult<PyAudioBuffer> {
    let factor = SpeedFactor::new(factor).map_err(err)?;
    rs_speed(&buffer.inner, factor, &ResamplerParams::default())
        .map(Into::into)
        .map_err(err)
}

/// Shift in `[-tolerance, tolerance]` maximising normalised cross-correlation.
#[pyfunction]
fn best_shift(candidate_region: Vec<f64>, reference: Vec<f64>, tolerance: usize) -> PyResult<isize> {
    rs_best_shift(&candidate_region, &reference, tolerance).map_err(err)
}

/// Global perturbation factors for "2x", "4x" or "6x".
#[pyfunction]
fn factor_set(multiplicity: &str) -> PyResult<Vec<f64>> {
    let m: Multiplicity = multiplicity.parse().map_err(err)?;
    Ok(FactorSet::new(m).factors().to_vec())
}

/// Speaker-dependent tempo factors from a CTM file; controls are speakers
/// whose id starts with `control_prefix`.
#[pyfunction]
#[pyo3(signature = (ctm_path, control_prefix = "C"))]
fn factors_from_ctm(ctm_path: PathBuf, control_prefix: &str) -> PyResult<BTreeMap<String, f64>> {
    let segs = parse_ctm(ctm_path).map_err(err)?;
    let stats = speaker_stats(&segs, &default_silence_labels());
    let (ctl, dys) = partition_stats(stats, |s| s.starts_with(control_prefix));
    let table = build_factor_table(&ctl, &dys).map_err(err)?;
    Ok(table.entries)
}

/// Expands a manifest into global jobs for `method` and runs them, returning
/// the number of files written and the failed output ids.
#[pyfunction]
#[pyo3(signature = (manifest_path, method, multiplicity, output_dir, workers = 1))]
fn augment_manifest(
    manifest_path: PathBuf,
    method: &str,
    multiplicity: &str,
    output_dir: PathBuf,
    workers: usize,
) -> PyResult<(usize, Vec<String>)> {
    let manifest = read_manifest(manifest_path).map_err(err)?;
    let method: Method = method.parse().map_err(err)?;
    let set = FactorSet::new(multiplicity.parse().map_err(err)?);
    let plan = build_plan(&manifest, method, Some(&set), None, 0).map_err(err)?;
    let report = run_plan(&plan, &MethodParams::default(), &output_dir, workers).map_err(err)?;
    let failed = report.failures.into_iter().map(|f| f.output_id).collect();
    Ok((report.records.len(), failed))
}

/// Hours per group, per method and in total for a manifest file.
#[pyfunction]
fn summarize(manifest_path: PathBuf) -> PyResult<BTreeMap<String, f64>> {
    let records = read_manifest(manifest_path).map_err(err)?;
    let s = summarize_records(&records);
    let mut out = BTreeMap::from([
        ("total_hours".to_string(), s.total_hours),
        ("original_hours".to_string(), s.original_hours),
        ("augmented_hours".to_string(), s.augmented_hours),
    ]);
    for (g, h) in s.by_group {
        out.insert(format!("group:{g}"), h);
    }
    for (m, h) in s.by_method {
        out.insert(format!("method:{m}"), h);
    }
    Ok(out)
}

/// Maximum relative error between analytic and finite-difference gradients
/// of the toy acoustic model.
#[pyfunction]
#[pyo3(signature = (seed = 0, mtl_lambda = 0.5))]
fn gradient_check(seed: u64, mtl_lambda: f64) -> PyResult<f64> {
    let opts = GradCheckOptions {
        seed,
        weights: MtlWeights::new(mtl_lambda).map_err(err)?,
        ..Default::default()
    };
    run_gradient_check(&NetworkConfig::toy(24), &opts)
        .map(|r| r.max_relative_error)
        .map_err(err)
}

/// Trains the toy model on a seeded two-speaker synthetic corpus and returns
/// the per-epoch training loss.
#[pyfunction]
#[pyo3(signature = (seed = 0, epochs = 5, sat = true))]
fn train_synthetic(seed: u64, epochs: usize, sat: bool) -> PyResult<Vec<f64>> {
    let mut corpus = SyntheticCorpus::new(SyntheticSpec {
        seed,
        ..Default::default()
    });
    let mut batches = Vec::new();
    for speaker in ["A", "B"] {
        let gains = corpus.random_gains(0.7);
        batches.extend(corpus.batches(speaker, &gains, 6));
    }
    let opts = TrainOptions {
        epochs,
        seed,
        lhuc: if sat { LhucMode::Sat } else { LhucMode::Off },
        ..Default::default()
    };
    train_sat(&batches, &NetworkConfig::toy(corpus.input_dim()), &opts)
        .map(|o| o.epoch_losses)
        .map_err(err)
}

#[pymodule]
#[pyo3(name = "speechaug")]
fn speechaug_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SpeechAugError", m.py().get_type::<SpeechAugError>())?;
    m.add_class::<PyAudioBuffer>()?;
    m.add_function(wrap_pyfunction!(read_wav, m)?)?;
    m.add_function(wrap_pyfunction!(write_wav, m)?)?;
    m.add_function(wrap_pyfunction!(warp_frequency, m)?)?;
    m.add_function(wrap_pyfunction!(vtlp_perturb, m)?)?;
    m.add_function(wrap_pyfunction!(tempo_perturb, m)?)?;
    m.add_function(wrap_pyfunction!(speed_perturb, m)?)?;
    m.add_function(wrap_pyfunction!(best_shift, m)?)?;
    m.add_function(wrap_pyfunction!(factor_set, m)?)?;
    m.add_function(wrap_pyfunction!(factors_from_ctm, m)?)?;
    m.add_function(wrap_pyfunction!(augment_manifest, m)?)?;
    m.add_function(wrap_pyfunction!(summarize, m)?)?;
    m.add_function(wrap_pyfunction!(gradient_check, m)?)?;
    m.add_function(wrap_pyfunction!(train_synthetic, m)?)?;
    Ok(())
}
