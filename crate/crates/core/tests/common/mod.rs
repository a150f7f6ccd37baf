#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use speechaug::AudioBuffer;

pub fn tone(freq: f64, len: usize, rate: u32) -> AudioBuffer {
    let s = (0..len)
        .map(|i| 0.5 * (2.0 * PI * freq * i as f64 / rate as f64).sin())
        .collect();
    AudioBuffer::new(s, rate).unwrap()
}

/// Five harmonics with 1/k amplitudes, so the fundamental dominates.
pub fn harmonic(f0: f64, len: usize, rate: u32) -> AudioBuffer {
    let s = (0..len)
        .map(|i| {
            let t = i as f64 / rate as f64;
            (1..=5)
                .map(|k| 0.3 / k as f64 * (2.0 * PI * k as f64 * f0 * t).sin())
                .sum()
        })
        .collect();
    AudioBuffer::new(s, rate).unwrap()
}

/// Voiced-speech stand-in: a drifting-f0 harmonic source shaped by two
/// resonances, plus breath noise, under a 4 Hz syllabic envelope.
pub fn speech_like(len: usize, rate: u32, seed: u64) -> AudioBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fs = rate as f64;
    let f0_base = rng.random_range(100.0..220.0);
    let formants = [
        rng.random_range(0.03..0.06) * fs,
        rng.random_range(0.08..0.15) * fs,
    ];
    let syllable_hz = rng.random_range(3.0..5.0);
    let mut phase = 0.0;
    let mut out = Vec::with_capacity(len);
    let mut noise_lp = 0.0;
    for i in 0..len {
        let t = i as f64 / fs;
        let f0 = f0_base * (1.0 + 0.05 * (2.0 * PI * 0.7 * t).sin());
        phase += 2.0 * PI * f0 / fs;
        let mut v = 0.0;
        let mut k = 1.0;
        while k * f0 < 0.45 * fs {
            let f = k * f0;
            let gain: f64 = formants
                .iter()
                .map(|&fc| 1.0 / (1.0 + ((f - fc) / (0.02 * fs)).powi(2)))
                .sum();
            v += gain / k.sqrt() * (k * phase).sin();
            k += 1.0;
        }
        noise_lp = 0.7 * noise_lp + 0.3 * rng.random_range(-1.0..1.0);
        let env = 0.55 + 0.45 * (2.0 * PI * syllable_hz * t).sin();
        out.push(env * (0.12 * v + 0.03 * noise_lp));
    }
    AudioBuffer::new(out, rate).unwrap()
}

/// The centred `n` samples of `x` (all of `x` if shorter).
pub fn interior(x: &[f64], n: usize) -> &[f64] {
    if x.len() <= n {
        return x;
    }
    let start = (x.len() - n) / 2;
    &x[start..start + n]
}

fn power_spectrum(x: &[f64], window: &[f64], padded: usize) -> Vec<f64> {
    let mut buf: Vec<Complex64> = x
        .iter()
        .zip(window)
        .map(|(&v, &w)| Complex64::new(v * w, 0.0))
        .collect();
    buf.resize(padded, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(padded).process(&mut buf);
    buf[..padded / 2 + 1].iter().map(|c| c.norm_sqr()).collect()
}

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Frequency of the strongest spectral peak, refined by a parabola through
/// the log-power of the top bin and its neighbours (8x zero padding).
pub fn peak_hz(x: &[f64], rate: u32) -> f64 {
    let padded = (8 * x.len()).next_power_of_two();
    let p = power_spectrum(x, &hann(x.len()), padded);
    let k = (1..p.len() - 1)
        .max_by(|&a, &b| p[a].total_cmp(&p[b]))
        .unwrap();
    let (a, b, c) = (p[k - 1].ln(), p[k].ln(), p[k + 1].ln());
    let offset = 0.5 * (a - c) / (a - 2.0 * b + c);
    (k as f64 + offset) * rate as f64 / padded as f64
}

/// Power-weighted mean frequency.
pub fn centroid_hz(x: &[f64], rate: u32) -> f64 {
    let padded = x.len().next_power_of_two();
    let p = power_spectrum(x, &hann(x.len()), padded);
    let hz = rate as f64 / padded as f64;
    let num: f64 = p.iter().enumerate().map(|(k, v)| k as f64 * hz * v).sum();
    num / p.iter().sum::<f64>()
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    for k in 1..200 {
        term *= (x / (2.0 * k as f64)).powi(2);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Unpadded power spectrum in dB under a Kaiser window, with the bin width.
pub fn kaiser_spectrum_db(x: &[f64], rate: u32, beta: f64) -> (Vec<f64>, f64) {
    let n = x.len();
    let w: Vec<f64> = (0..n)
        .map(|i| {
            let r = 2.0 * i as f64 / (n - 1) as f64 - 1.0;
            bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / bessel_i0(beta)
        })
        .collect();
    let p = power_spectrum(x, &w, n);
    let db = p.iter().map(|v| 10.0 * (v + 1e-300).log10()).collect();
    (db, rate as f64 / n as f64)
}

pub fn rel_rms(actual: &[f64], expected: &[f64]) -> f64 {
    let err: f64 = actual.iter().zip(expected).map(|(a, b)| (a - b).powi(2)).sum();
    let base: f64 = expected.iter().map(|b| b * b).sum();
    (err / base).sqrt()
}

pub fn white_noise(len: usize, rate: u32, seed: u64) -> AudioBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = (0..len).map(|_| rng.random_range(-0.5..0.5)).collect();
    AudioBuffer::new(s, rate).unwrap()
}
