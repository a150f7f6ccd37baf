use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: no such file", path.display())]
    FileNotFound { path: PathBuf },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: unsupported WAV encoding ({detail})", path.display())]
    UnsupportedCodec { path: PathBuf, detail: String },

    #[error("{}: malformed WAV file ({detail})", path.display())]
    MalformedWav { path: PathBuf, detail: String },

    #[error("{}: audio contains no samples", path.display())]
    EmptyAudio { path: PathBuf },

    #[error("sample rate must be positive")]
    InvalidSampleRate,

    #[error("buffer is empty")]
    EmptyBuffer,

    #[error("frame length {0} is not a power of two")]
    FrameLenNotPowerOfTwo(usize),

    #[error("hop {hop} is invalid for frame length {frame_len}")]
    InvalidHop { frame_len: usize, hop: usize },

    #[error("{window:?} window with frame length {frame_len} and hop {hop} is not constant overlap-add")]
    NotCola {
        window: crate::audio::WindowKind,
        frame_len: usize,
        hop: usize,
    },

    #[error("invalid warp: {0}")]
    InvalidWarp(String),

    #[error("frequency {freq} Hz outside [0, {nyquist}] Hz")]
    FrequencyOutOfRange { freq: f64, nyquist: f64 },

    #[error("factor {factor} outside [{min}, {max}]")]
    FactorOutOfRange { factor: f64, min: f64, max: f64 },

    #[error("buffer of {len} samples is shorter than one frame ({frame_len})")]
    BufferTooShort { len: usize, frame_len: usize },

    #[error("correlation reference has {len} samples, need {needed}")]
    ReferenceTooShort { len: usize, needed: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("{}:{line}: {detail}", path.display())]
    MalformedCtm {
        path: PathBuf,
        line: usize,
        detail: String,
    },

    #[error("{}:{line}: duration {duration} is not positive", path.display())]
    InvalidDuration {
        path: PathBuf,
        line: usize,
        duration: f64,
    },

    #[error("control speaker set is empty")]
    NoControlSpeakers,

    #[error("dysarthric speaker set is empty")]
    NoDysarthricSpeakers,

    #[error("unknown speaker `{0}`")]
    UnknownSpeaker(String),

    #[error("duplicate output id `{0}`")]
    DuplicateOutputId(String),

    #[error("{}:{line}: {detail}", path.display())]
    MalformedRecord {
        path: PathBuf,
        line: usize,
        detail: String,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid network config: {0}")]
    InvalidConfig(String),

    #[error("no LHUC vector for speaker `{0}`")]
    MissingLhuc(String),

    #[error("no batches to train on")]
    EmptyStream,

    #[error("no utterances to adapt on")]
    NoAdaptationData,

    #[error("model file: {0}")]
    ModelFormat(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound { path }
        } else {
            Error::Io { path, source }
        }
    }
}
