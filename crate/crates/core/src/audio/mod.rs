//! Mono waveform container, WAV I/O and the STFT engine shared by the
//! perturbations.

mod stft;
mod wav;

pub use stft::{istft, satisfies_cola, stft, Spectrogram, StftParams, WindowKind};
pub use wav::{read_wav, write_wav};

use crate::error::{Error, Result};

/// Mono samples at a fixed rate. Amplitudes are nominally in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::InvalidSampleRate);
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    pub fn nyquist_hz(&self) -> f64 {
        self.sample_rate_hz as f64 / 2.0
    }

    /// Same rate, new samples.
    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Self {
        Self {
            samples,
            sample_rate_hz: self.sample_rate_hz,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate_rejected() {
        assert!(matches!(
            AudioBuffer::new(vec![0.0], 0),
            Err(Error::InvalidSampleRate)
        ));
    }

    #[test]
    fn duration_is_len_over_rate() {
        let b = AudioBuffer::new(vec![0.0; 24000], 16000).unwrap();
        assert_eq!(b.duration_seconds(), 1.5);
        assert_eq!(b.nyquist_hz(), 8000.0);
    }
}
