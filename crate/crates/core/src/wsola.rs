//! Tempo perturbation by waveform-similarity overlap-add (WSOLA).
//!
//! The synthesis hop is fixed at half a frame so the Hann window sums to one,
//! and the analysis hop is `round(synthesis_hop * F)`. `F > 1` shortens the
//! signal (faster speech), `F < 1` lengthens it; in stretch terms
//! `synthesis_hop = beta * analysis_hop` with `beta = 1 / F`. Each analysis
//! block may slide by up to `tolerance` samples so that its head lines up with
//! the natural continuation of the block copied before it.

use crate::audio::{AudioBuffer, WindowKind};
use crate::error::{Error, Result};

pub const MIN_FACTOR: f64 = 0.5;
pub const MAX_FACTOR: f64 = 2.0;

/// Correlations closer than this to the maximum count as ties.
pub const TIE_EPSILON: f64 = 1e-12;
/// Below this energy a segment correlates as 0.
pub const ENERGY_FLOOR: f64 = 1e-12;
/// Floor on the accumulated window before normalization.
pub const WINDOW_SUM_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TempoFactor(f64);

impl TempoFactor {
    pub fn new(factor: f64) -> Result<Self> {
        if !(MIN_FACTOR..=MAX_FACTOR).contains(&factor) {
            return Err(Error::FactorOutOfRange {
                factor,
                min: MIN_FACTOR,
                max: MAX_FACTOR,
            });
        }
        Ok(Self(factor))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Output/input duration ratio.
    pub fn stretch(self) -> f64 {
        1.0 / self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WsolaParams {
    frame_len: usize,
    synthesis_hop: usize,
    tolerance: usize,
    window: WindowKind,
}

impl Default for WsolaParams {
    /// 512-sample Hann frames, 128-sample tolerance (32 ms / 8 ms at 16 kHz).
    fn default() -> Self {
        Self {
            frame_len: 512,
            synthesis_hop: 256,
            tolerance: 128,
            window: WindowKind::Hann,
        }
    }
}

impl WsolaParams {
    pub fn new(frame_len: usize, tolerance: usize) -> Result<Self> {
        if frame_len < 2 || frame_len % 2 != 0 {
            return Err(Error::InvalidParams(format!(
                "WSOLA frame length {frame_len} must be even and at least 2"
            )));
        }
        let synthesis_hop = frame_len / 2;
        if tolerance > synthesis_hop {
            return Err(Error::InvalidParams(format!(
                "tolerance {tolerance} exceeds synthesis hop {synthesis_hop}"
            )));
        }
        Ok(Self {
            frame_len,
            synthesis_hop,
            tolerance,
            window: WindowKind::Hann,
        })
    }

    pub fn from_ms(sample_rate_hz: u32, frame_ms: f64, tolerance_ms: f64) -> Result<Self> {
        let to_samples = |ms: f64| (ms * sample_rate_hz as f64 / 1000.0).round() as usize;
        let mut frame_len = to_samples(frame_ms);
        frame_len += frame_len % 2;
        Self::new(frame_len, to_samples(tolerance_ms))
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn synthesis_hop(&self) -> usize {
        self.synthesis_hop
    }

    pub fn tolerance(&self) -> usize {
        self.tolerance
    }

    pub fn window(&self) -> WindowKind {
        self.window
    }

    pub fn overlap(&self) -> usize {
        self.frame_len - self.synthesis_hop
    }

    pub fn analysis_hop(&self, factor: TempoFactor) -> usize {
        ((self.synthesis_hop as f64 * factor.value()).round() as usize).max(1)
    }
}

/// Normalized cross-correlation; 0 when either side is (nearly) silent.
fn ncc(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut ea, mut eb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        ea += x * x;
        eb += y * y;
    }
    if ea < ENERGY_FLOOR || eb < ENERGY_FLOOR {
        0.0
    } else {
        dot / (ea * eb).sqrt()
    }
}

/// Finds the shift in `[-tolerance, tolerance]` whose candidate block head
/// best matches `reference`.
///
/// Shift `d` compares `candidate_region[tolerance + d ..][..reference.len()]`
/// against `reference`. Scores within [`TIE_EPSILON`] of the best are ties,
/// resolved toward the smallest `|d|` and then toward the negative shift.
pub fn best_shift(candidate_region: &[f64], reference: &[f64], tolerance: usize) -> Result<isize> {
    let needed = reference.len() + 2 * tolerance;
    if reference.is_empty() || candidate_region.len() < needed {
        return Err(Error::ReferenceTooShort {
            len: candidate_region.len().min(reference.len()),
            needed: needed.max(1),
        });
    }
    let tol = tolerance as isize;
    let scores: Vec<(isize, f64)> = (-tol..=tol)
        .map(|d| {
            let start = (tol + d) as usize;
            (d, ncc(&candidate_region[start..start + reference.len()], reference))
        })
        .collect();
    let best = scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let shift = scores
        .iter()
        .filter(|s| s.1 >= best - TIE_EPSILON)
        .map(|s| s.0)
        .min_by_key(|&d| (d.abs(), d))
        .expect("at least one shift");
    Ok(shift)
}

pub fn tempo_perturb(
    buffer: &AudioBuffer,
    factor: TempoFactor,
    params: &WsolaParams,
) -> Result<AudioBuffer> {
    let len = buffer.len();
    let n = params.frame_len;
    if len < n {
        return Err(Error::BufferTooShort { len, frame_len: n });
    }
    let hs = params.synthesis_hop;
    let ha = params.analysis_hop(factor);
    let tol = params.tolerance;
    let overlap = params.overlap();

    let out_len = (len as f64 / factor.value() + 0.5).floor() as usize;
    let n_blocks = out_len.div_ceil(hs) + 1;

    // `tol` zeros in front so every search window starts in bounds.
    let padded_len = (n_blocks - 1) * ha + 2 * tol + n;
    let mut input = vec![0.0; padded_len.max(tol + len)];
    input[tol..tol + len].copy_from_slice(buffer.samples());

    let window = params.window.coefficients(n);
    let acc_len = (n_blocks - 1) * hs + n;
    let mut acc = vec![0.0; acc_len];
    let mut wsum = vec![0.0; acc_len];

    let mut prev = tol;
    for m in 0..n_blocks {
        let pos = if m == 0 {
            tol
        } else {
            let nominal = m * ha + tol;
            let reference = &input[prev + hs..prev + n];
            let region = &input[nominal - tol..nominal + tol + overlap];
            (nominal as isize + best_shift(region, reference, tol)?) as usize
        };
        let out_start = m * hs;
        for r in 0..n {
            acc[out_start + r] += window[r] * input[pos + r];
            wsum[out_start + r] += window[r];
        }
        prev = pos;
    }

    let samples = acc
        .iter()
        .zip(&wsum)
        .take(out_len)
        .map(|(a, w)| a / w.max(WINDOW_SUM_FLOOR))
        .collect();
    Ok(buffer.with_samples(samples))
}
