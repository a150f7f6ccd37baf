//! Vocal tract length perturbation.
//!
//! Output bin `f` of every STFT frame is filled from the input spectrum at
//! `g(f)`, where `g` is the piecewise-linear warp
//!
//! ```text
//! g(f) = alpha * f                                  f <= b
//! g(f) = alpha*b + (nyq - alpha*b) (f - b)/(nyq - b) f >  b,   b = min(B, B/alpha)
//! ```
//!
//! so a component at `f0` in the input reappears at `f0 / alpha` in the
//! output. Magnitudes are interpolated linearly between bins. Phases are
//! propagated frame to frame from each source bin's instantaneous frequency
//! mapped through `g^-1`, which keeps the resynthesised partials coherent
//! across overlapping frames. The frame count and hop are unchanged, so the
//! output has exactly as many samples as the input.

use std::f64::consts::{PI, TAU};

use ndarray::Array2;
use num_complex::Complex64;

use crate::audio::{istft, stft, AudioBuffer, StftParams};
use crate::error::{Error, Result};

pub const MIN_ALPHA: f64 = 0.5;
pub const MAX_ALPHA: f64 = 2.0;
/// Default warp boundary for 16 kHz audio.
pub const DEFAULT_BOUNDARY_HZ: f64 = 4800.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpSpec {
    alpha: f64,
    boundary_hz: f64,
}

impl WarpSpec {
    pub fn new(alpha: f64, boundary_hz: f64) -> Result<Self> {
        if !(MIN_ALPHA..=MAX_ALPHA).contains(&alpha) {
            return Err(Error::InvalidWarp(format!(
                "alpha {alpha} outside [{MIN_ALPHA}, {MAX_ALPHA}]"
            )));
        }
        if !(boundary_hz > 0.0) || !boundary_hz.is_finite() {
            return Err(Error::InvalidWarp(format!(
                "boundary {boundary_hz} Hz must be positive"
            )));
        }
        Ok(Self { alpha, boundary_hz })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn boundary_hz(&self) -> f64 {
        self.boundary_hz
    }

    /// Output frequency up to which the warp is `alpha * f`.
    pub fn breakpoint_hz(&self) -> f64 {
        self.boundary_hz.min(self.boundary_hz / self.alpha)
    }

    fn check_nyquist(&self, nyquist: f64) -> Result<()> {
        if self.boundary_hz >= nyquist {
            return Err(Error::InvalidWarp(format!(
                "boundary {} Hz must lie below Nyquist {nyquist} Hz",
                self.boundary_hz
            )));
        }
        Ok(())
    }

    fn forward(&self, f: f64, nyquist: f64) -> f64 {
        let b = self.breakpoint_hz();
        if f <= b {
            self.alpha * f
        } else {
            let gb = self.alpha * b;
            gb + (nyquist - gb) * (f - b) / (nyquist - b)
        }
    }

    /// Inverse of the warp, extended linearly outside `[0, nyquist]`.
    fn inverse(&self, g: f64, nyquist: f64) -> f64 {
        let b = self.breakpoint_hz();
        let gb = self.alpha * b;
        if g <= gb {
            g / self.alpha
        } else {
            b + (g - gb) * (nyquist - b) / (nyquist - gb)
        }
    }
}

/// Source frequency whose spectral value populates output frequency `f`.
pub fn warp_frequency(f: f64, spec: &WarpSpec, nyquist: f64) -> Result<f64> {
    if !(0.0..=nyquist).contains(&f) {
        return Err(Error::FrequencyOutOfRange { freq: f, nyquist });
    }
    spec.check_nyquist(nyquist)?;
    Ok(spec.forward(f, nyquist))
}

pub fn vtlp_perturb(buffer: &AudioBuffer, spec: &WarpSpec) -> Result<AudioBuffer> {
    vtlp_perturb_with(buffer, spec, StftParams::default())
}

pub fn vtlp_perturb_with(
    buffer: &AudioBuffer,
    spec: &WarpSpec,
    params: StftParams,
) -> Result<AudioBuffer> {
    if buffer.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let nyquist = buffer.nyquist_hz();
    spec.check_nyquist(nyquist)?;

    let analysis = stft(buffer, params)?;
    let n_bins = analysis.n_bins();
    let last = n_bins - 1;
    let bin_hz = analysis.bin_hz(1);
    let rate = buffer.sample_rate_hz() as f64;
    let hop = params.hop as f64;

    // Fractional source bin feeding each output bin.
    let source: Vec<f64> = (0..n_bins)
        .map(|k| (spec.forward(analysis.bin_hz(k), nyquist) / bin_hz).clamp(0.0, last as f64))
        .collect();

    let frames = analysis.frames();
    let mut out = Array2::<Complex64>::zeros(frames.dim());
    let mut out_phase = vec![0.0; n_bins];
    let mut prev_phase = vec![0.0; n_bins];

    for m in 0..analysis.n_frames() {
        let row = frames.row(m);
        let phase: Vec<f64> = row.iter().map(|c| c.arg()).collect();
        for k in 0..n_bins {
            let pos = source[k];
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(last);
            let frac = pos - lo as f64;
            let mag = row[lo].norm() * (1.0 - frac) + row[hi].norm() * frac;

            out_phase[k] = if m == 0 {
                (row[lo] * (1.0 - frac) + row[hi] * frac).arg()
            } else {
                let j = pos.round() as usize;
                let expected = TAU * j as f64 * hop / params.frame_len as f64;
                let deviation = wrap_phase(phase[j] - prev_phase[j] - expected);
                let inst_hz = j as f64 * bin_hz + deviation * rate / (TAU * hop);
                let out_hz = spec.inverse(inst_hz, nyquist);
                (out_phase[k] + TAU * out_hz * hop / rate).rem_euclid(TAU)
            };
            out[[m, k]] = Complex64::from_polar(mag, out_phase[k]);
        }
        prev_phase = phase;
    }

    istft(&analysis.with_frames(out)?)
}

/// Maps an angle into `[-pi, pi)`.
fn wrap_phase(x: f64) -> f64 {
    (x + PI).rem_euclid(TAU) - PI
}
