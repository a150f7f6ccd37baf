//! Speech data augmentation for disordered-speech recognition.
//!
//! Three perturbations over [`audio::AudioBuffer`]:
//! - [`vtlp`]: frequency-axis warping, duration preserved;
//! - [`wsola`]: tempo change by waveform-similarity overlap-add, pitch preserved;
//! - [`speed`]: band-limited resampling, duration and pitch both change.
//!
//! [`align`] turns phone alignments into per-speaker factors, [`pipeline`]
//! expands a corpus manifest into augmentation jobs and runs them, and
//! [`model`] is a small hybrid DNN with multi-task loss and LHUC adaptation.

pub mod align;
pub mod audio;
pub mod error;
pub mod model;
pub mod pipeline;
pub mod speed;
pub mod vtlp;
pub mod wsola;

#[cfg(test)]
mod test_util;

pub use audio::{read_wav, write_wav, AudioBuffer};
pub use error::{Error, Result};
