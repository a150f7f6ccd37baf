use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::{AugmentJob, Method, UtteranceRecord};
use crate::audio::{read_wav, write_wav, AudioBuffer, StftParams};
use crate::error::{Error, Result};
use crate::speed::{speed_perturb, ResamplerParams, SpeedFactor};
use crate::vtlp::{vtlp_perturb_with, WarpSpec, DEFAULT_BOUNDARY_HZ};
use crate::wsola::{tempo_perturb, TempoFactor, WsolaParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodParams {
    pub vtlp_boundary_hz: f64,
    pub vtlp_stft: StftParams,
    pub wsola: WsolaParams,
    pub resampler: ResamplerParams,
}

impl Default for MethodParams {
    fn default() -> Self {
        Self {
            vtlp_boundary_hz: DEFAULT_BOUNDARY_HZ,
            vtlp_stft: StftParams::default(),
            wsola: WsolaParams::default(),
            resampler: ResamplerParams::default(),
        }
    }
}

pub fn apply_method(
    buffer: &AudioBuffer,
    method: Method,
    factor: f64,
    params: &MethodParams,
) -> Result<AudioBuffer> {
    match method {
        Method::Vtlp => vtlp_perturb_with(
            buffer,
            &WarpSpec::new(factor, params.vtlp_boundary_hz)?,
            params.vtlp_stft,
        ),
        Method::Tempo => tempo_perturb(buffer, TempoFactor::new(factor)?, &params.wsola),
        Method::Speed => speed_perturb(buffer, SpeedFactor::new(factor)?, &params.resampler),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JobFailure {
    pub output_id: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    /// Records for the jobs that succeeded, in plan order.
    pub records: Vec<UtteranceRecord>,
    pub failures: Vec<JobFailure>,
}

impl RunReport {
    pub fn is_success(&self) -> bool {
        self.failures.is_empty()
    }
}

fn run_job(job: &AugmentJob, params: &MethodParams, output_dir: &Path) -> Result<UtteranceRecord> {
    let input = read_wav(&job.source.audio_path)?;
    let output = apply_method(&input, job.method, job.factor, params)?;
    let path: PathBuf = output_dir.join(format!("{}.wav", job.output_id));
    write_wav(&output, &path)?;
    Ok(UtteranceRecord {
        utterance_id: job.output_id.clone(),
        speaker_id: job.source.speaker_id.clone(),
        group: job.source.group,
        audio_path: path,
        duration: output.duration_seconds(),
        method: Some(job.method),
        factor: Some(job.factor),
        source_id: Some(job.source.utterance_id.clone()),
        target_speaker: job.target_speaker.clone(),
    })
}

/// Runs every job on a pool of `workers` threads, writing
/// `<output_dir>/<output_id>.wav`.
///
/// Jobs share nothing, so the files are identical for any worker count.
/// A failing job is recorded and the rest of the batch carries on.
pub fn run_plan(
    plan: &[AugmentJob],
    params: &MethodParams,
    output_dir: impl AsRef<Path>,
    workers: usize,
) -> Result<RunReport> {
    let output_dir = output_dir.as_ref();
    fs::create_dir_all(output_dir).map_err(|e| Error::io(output_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParams(format!("worker pool: {e}")))?;

    let results: Vec<Result<UtteranceRecord>> = pool.install(|| {
        plan.par_iter()
            .map(|job| run_job(job, params, output_dir))
            .collect()
    });

    let mut report = RunReport::default();
    for (job, result) in plan.iter().zip(results) {
        match result {
            Ok(record) => report.records.push(record),
            Err(e) => report.failures.push(JobFailure {
                output_id: job.output_id.clone(),
                error: e.to_string(),
            }),
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{Group, UtteranceRecord};
    use crate::test_util::harmonics;

    fn job(src: &Path, method: Method, factor: f64, id: &str) -> AugmentJob {
        AugmentJob {
            source: UtteranceRecord::new("F02_U1", "F02", Group::Dys, src, 1.0),
            method,
            factor,
            target_speaker: None,
            output_id: id.into(),
        }
    }

    #[test]
    fn speed_job_duration() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("src.wav");
        write_wav(&harmonics(150.0, 10, 16000, 16000), &src).unwrap();
        let plan = vec![job(&src, Method::Speed, 1.1, "a__speed1.10")];
        let report = run_plan(&plan, &MethodParams::default(), dir.path().join("out"), 2).unwrap();
        assert!(report.is_success());
        let d = report.records[0].duration;
        assert!((d - 1.0 / 1.1).abs() <= 1.0 / 16000.0);
        assert!(dir.path().join("out/a__speed1.10.wav").exists());
    }

    #[test]
    fn failures_do_not_abort_the_batch() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("src.wav");
        write_wav(&harmonics(150.0, 10, 8000, 16000), &src).unwrap();
        let plan = vec![
            job(&dir.path().join("missing.wav"), Method::Speed, 1.1, "m"),
            job(&src, Method::Speed, 3.0, "bad_factor"),
            job(&src, Method::Vtlp, 0.9, "ok"),
        ];
        let report = run_plan(&plan, &MethodParams::default(), dir.path(), 4).unwrap();
        assert_eq!(report.records.len(), 1);
        assert_eq!(report.records[0].duration, 0.5);
        let failed: Vec<_> = report.failures.iter().map(|f| f.output_id.as_str()).collect();
        assert_eq!(failed, ["m", "bad_factor"]);
        assert!(report.failures[0].error.contains("no such file"));
    }
}
