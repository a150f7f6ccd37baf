//! Signal generators and measurement helpers for unit tests.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::FftPlanner;
use num_complex::Complex64;

use crate::audio::AudioBuffer;

pub fn white_noise(len: usize, rate: u32, seed: u64) -> AudioBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 0.2).unwrap();
    AudioBuffer::new((0..len).map(|_| normal.sample(&mut rng)).collect(), rate).unwrap()
}

pub fn sine(freq: f64, len: usize, rate: u32) -> AudioBuffer {
    AudioBuffer::new(
        (0..len)
            .map(|i| 0.5 * (2.0 * PI * freq * i as f64 / rate as f64).sin())
            .collect(),
        rate,
    )
    .unwrap()
}

/// Harmonic series with a falling spectral envelope.
pub fn harmonics(f0: f64, n: usize, len: usize, rate: u32) -> AudioBuffer {
    AudioBuffer::new(
        (0..len)
            .map(|i| {
                let t = i as f64 / rate as f64;
                (1..=n)
                    .map(|h| 0.3 / h as f64 * (2.0 * PI * f0 * h as f64 * t + 0.7 * h as f64).sin())
                    .sum()
            })
            .collect(),
        rate,
    )
    .unwrap()
}

pub fn rel_rms(actual: &[f64], expected: &[f64]) -> f64 {
    let err: f64 = actual.iter().zip(expected).map(|(a, b)| (a - b).powi(2)).sum();
    let norm: f64 = expected.iter().map(|b| b * b).sum();
    (err / norm).sqrt()
}

/// Peak of a Hann-windowed FFT zero-padded to one-second resolution.
pub fn dominant_hz(x: &[f64], rate: u32) -> f64 {
    let n = (rate as usize).max(x.len()).next_power_of_two();
    let mut buf: Vec<Complex64> = x
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let w = 0.5 - 0.5 * (2.0 * PI * i as f64 / x.len() as f64).cos();
            Complex64::new(s * w, 0.0)
        })
        .collect();
    buf.resize(n, Complex64::default());
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let peak = (1..n / 2)
        .max_by(|&a, &b| buf[a].norm().total_cmp(&buf[b].norm()))
        .unwrap();
    peak as f64 * rate as f64 / n as f64
}
