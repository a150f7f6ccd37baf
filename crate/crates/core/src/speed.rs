//! Speed perturbation: `y(t) = x(alpha t)` by band-limited resampling.
//!
//! Output sample `n` interpolates the input at position `n * alpha` with a
//! Kaiser-windowed sinc. When `alpha > 1` the kernel also low-passes at
//! `cutoff_scale / alpha` of Nyquist so content pushed above Nyquist does not
//! fold back. The nominal sample rate is left untouched, which is what turns
//! a resampling into a change of speed: duration scales by `1/alpha` and
//! every frequency by `alpha`. Waveform amplitude is not rescaled.

use std::f64::consts::PI;

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

pub const MIN_FACTOR: f64 = 0.5;
pub const MAX_FACTOR: f64 = 2.0;

/// Kernel table resolution, points per input sample.
const OVERSAMPLE: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedFactor(f64);

impl SpeedFactor {
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
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResamplerParams {
    pub taps_per_side: usize,
    pub kaiser_beta: f64,
    pub cutoff_scale: f64,
}

impl Default for ResamplerParams {
    fn default() -> Self {
        Self {
            taps_per_side: 32,
            kaiser_beta: 12.0,
            cutoff_scale: 0.95,
        }
    }
}

impl ResamplerParams {
    fn validate(&self) -> Result<()> {
        if self.taps_per_side < 8 {
            return Err(Error::InvalidParams(format!(
                "taps_per_side {} must be at least 8",
                self.taps_per_side
            )));
        }
        if !(self.cutoff_scale > 0.0 && self.cutoff_scale <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "cutoff_scale {} must lie in (0, 1]",
                self.cutoff_scale
            )));
        }
        if !(self.kaiser_beta >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "kaiser_beta {} must be non-negative",
                self.kaiser_beta
            )));
        }
        Ok(())
    }
}

/// `round(len / alpha)` with halves rounded up.
pub fn output_len(input_len: usize, factor: SpeedFactor) -> usize {
    (input_len as f64 / factor.value() + 0.5).floor() as usize
}

/// Modified Bessel function of the first kind, order zero.
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Tabulated one-sided kernel over distances `[0, half_width]` input samples.
struct Kernel {
    table: Vec<f64>,
    half_width: f64,
}

impl Kernel {
    fn new(params: &ResamplerParams, cutoff: f64) -> Self {
        let half_width = params.taps_per_side as f64 / cutoff;
        let n = (half_width * OVERSAMPLE as f64).ceil() as usize + 2;
        let norm = bessel_i0(params.kaiser_beta);
        let table = (0..n)
            .map(|i| {
                let d = i as f64 / OVERSAMPLE as f64;
                let u = d / half_width;
                if u >= 1.0 {
                    0.0
                } else {
                    let w = bessel_i0(params.kaiser_beta * (1.0 - u * u).sqrt()) / norm;
                    cutoff * sinc(cutoff * d) * w
                }
            })
            .collect();
        Self { table, half_width }
    }

    fn at(&self, d: f64) -> f64 {
        let pos = d.abs() * OVERSAMPLE as f64;
        let i = pos.floor() as usize;
        if i + 1 >= self.table.len() {
            return 0.0;
        }
        let frac = pos - i as f64;
        self.table[i] * (1.0 - frac) + self.table[i + 1] * frac
    }
}

pub fn speed_perturb(
    buffer: &AudioBuffer,
    factor: SpeedFactor,
    params: &ResamplerParams,
) -> Result<AudioBuffer> {
    if buffer.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    params.validate()?;
    let alpha = factor.value();
    let cutoff = if alpha > 1.0 {
        params.cutoff_scale / alpha
    } else {
        1.0
    };
    let kernel = Kernel::new(params, cutoff);
    let x = buffer.samples();
    let last = x.len() as isize - 1;

    let samples = (0..output_len(x.len(), factor))
        .map(|n| {
            let t = n as f64 * alpha;
            let lo = ((t - kernel.half_width).ceil() as isize).max(0);
            let hi = ((t + kernel.half_width).floor() as isize).min(last);
            (lo..=hi)
                .map(|k| x[k as usize] * kernel.at(t - k as f64))
                .sum()
        })
        .collect();
    Ok(buffer.with_samples(samples))
}
