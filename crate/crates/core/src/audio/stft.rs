use std::f64::consts::PI;

use ndarray::{Array2, ArrayView1};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::AudioBuffer;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    /// Periodic Hann, `0.5 - 0.5 cos(2 pi n / N)`.
    Hann,
    Rectangular,
}

impl WindowKind {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            WindowKind::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
                .collect(),
            WindowKind::Rectangular => vec![1.0; len],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StftParams {
    pub frame_len: usize,
    pub hop: usize,
    pub window: WindowKind,
}

impl Default for StftParams {
    /// 512-sample Hann frames with 75% overlap (32 ms / 8 ms at 16 kHz).
    fn default() -> Self {
        Self {
            frame_len: 512,
            hop: 128,
            window: WindowKind::Hann,
        }
    }
}

impl StftParams {
    fn validate(&self) -> Result<()> {
        if self.frame_len < 2 || !self.frame_len.is_power_of_two() {
            return Err(Error::FrameLenNotPowerOfTwo(self.frame_len));
        }
        if self.hop == 0 || self.hop > self.frame_len || self.frame_len % self.hop != 0 {
            return Err(Error::InvalidHop {
                frame_len: self.frame_len,
                hop: self.hop,
            });
        }
        Ok(())
    }
}

/// Returns true when hop-shifted copies of the window sum to a positive constant.
pub fn satisfies_cola(window: WindowKind, frame_len: usize, hop: usize) -> bool {
    if hop == 0 || frame_len % hop != 0 {
        return false;
    }
    let w = window.coefficients(frame_len);
    let sums: Vec<f64> = (0..hop)
        .map(|n| w.iter().skip(n).step_by(hop).sum())
        .collect();
    let max = sums.iter().cloned().fold(f64::MIN, f64::max);
    let min = sums.iter().cloned().fold(f64::MAX, f64::min);
    min > 0.0 && (max - min) <= 1e-9 * max
}

/// One-sided complex STFT with centered frames.
///
/// Frame `m` is centered on sample `m * hop`, so a signal of `len` samples
/// yields exactly `ceil(len / hop)` frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    frames: Array2<Complex64>,
    params: StftParams,
    sample_rate_hz: u32,
    signal_len: usize,
}

impl Spectrogram {
    pub fn frames(&self) -> &Array2<Complex64> {
        &self.frames
    }

    pub fn frame(&self, m: usize) -> ArrayView1<'_, Complex64> {
        self.frames.row(m)
    }

    pub fn params(&self) -> StftParams {
        self.params
    }

    pub fn frame_len(&self) -> usize {
        self.params.frame_len
    }

    pub fn hop(&self) -> usize {
        self.params.hop
    }

    pub fn window(&self) -> WindowKind {
        self.params.window
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    /// Length of the analysed signal; `istft` trims to it.
    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    pub fn n_frames(&self) -> usize {
        self.frames.nrows()
    }

    pub fn n_bins(&self) -> usize {
        self.frames.ncols()
    }

    pub fn bin_hz(&self, k: usize) -> f64 {
        k as f64 * self.sample_rate_hz as f64 / self.params.frame_len as f64
    }

    /// Replaces the frame data, keeping the analysis metadata.
    pub fn with_frames(&self, frames: Array2<Complex64>) -> Result<Self> {
        if frames.dim() != self.frames.dim() {
            return Err(Error::ShapeMismatch(format!(
                "spectrogram frames {:?}, expected {:?}",
                frames.dim(),
                self.frames.dim()
            )));
        }
        Ok(Self {
            frames,
            ..self.clone()
        })
    }
}

pub fn stft(buffer: &AudioBuffer, params: StftParams) -> Result<Spectrogram> {
    params.validate()?;
    let n = params.frame_len;
    let len = buffer.len();
    let n_frames = len.div_ceil(params.hop);
    let n_bins = n / 2 + 1;
    let window = params.window.coefficients(n);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let x = buffer.samples();

    let mut frames = Array2::<Complex64>::zeros((n_frames, n_bins));
    let mut scratch = vec![Complex64::default(); n];
    for (m, mut row) in frames.rows_mut().into_iter().enumerate() {
        let start = (m * params.hop) as isize - (n / 2) as isize;
        for (r, slot) in scratch.iter_mut().enumerate() {
            let idx = start + r as isize;
            let s = if idx >= 0 && (idx as usize) < len {
                x[idx as usize]
            } else {
                0.0
            };
            *slot = Complex64::new(s * window[r], 0.0);
        }
        fft.process(&mut scratch);
        for (dst, src) in row.iter_mut().zip(&scratch[..n_bins]) {
            *dst = *src;
        }
    }

    Ok(Spectrogram {
        frames,
        params,
        sample_rate_hz: buffer.sample_rate_hz(),
        signal_len: len,
    })
}

/// Weighted overlap-add resynthesis normalized by the summed squared window.
pub fn istft(spec: &Spectrogram) -> Result<AudioBuffer> {
    let params = spec.params;
    params.validate()?;
    if !satisfies_cola(params.window, params.frame_len, params.hop) {
        return Err(Error::NotCola {
            window: params.window,
            frame_len: params.frame_len,
            hop: params.hop,
        });
    }
    let n = params.frame_len;
    let half = n / 2;
    let len = spec.signal_len;
    let window = params.window.coefficients(n);
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n);

    let mut out = vec![0.0; len];
    let mut norm = vec![0.0; len];
    let mut full = vec![Complex64::default(); n];
    for (m, row) in spec.frames.rows().into_iter().enumerate() {
        full[..=half].copy_from_slice(row.as_slice().expect("row-major frames"));
        for k in 1..half {
            full[n - k] = full[k].conj();
        }
        ifft.process(&mut full);
        let start = (m * params.hop) as isize - half as isize;
        for r in 0..n {
            let idx = start + r as isize;
            if idx < 0 || idx as usize >= len {
                continue;
            }
            let w = window[r];
            out[idx as usize] += w * full[r].re / n as f64;
            norm[idx as usize] += w * w;
        }
    }
    for (y, w2) in out.iter_mut().zip(&norm) {
        *y = if *w2 > 1e-12 { *y / w2 } else { 0.0 };
    }
    AudioBuffer::new(out, spec.sample_rate_hz)
}
