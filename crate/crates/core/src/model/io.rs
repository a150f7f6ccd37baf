use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::config::{LhucPlacement, NetworkConfig, N_HIDDEN};
use super::params::{HiddenLayer, ModelParams, OutputHead};
use crate::error::{Error, Result};

pub const MODEL_MAGIC: [u8; 8] = *b"SPAUGDNN";
pub const MODEL_VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::ModelFormat(format!("{v} does not fit in u32")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn put_tensor(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

/// Layout: magic, version (u32), config echo, then every tensor as raw
/// little-endian f64. Per layer: bottleneck (layers 2-6), weight, bias,
/// gamma, beta, running mean, running variance; then the triphone and
/// monophone heads, weight before bias.
pub fn write_params(params: &ModelParams, mut w: impl Write) -> Result<()> {
    let c = &params.config;
    let mut out = Vec::new();
    out.extend_from_slice(&MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    put_u32(&mut out, c.input_dim)?;
    for &h in &c.hidden_dims {
        put_u32(&mut out, h)?;
    }
    put_u32(&mut out, c.bottleneck_dim)?;
    put_u32(&mut out, c.n_triphone_targets)?;
    put_u32(&mut out, c.n_monophone_targets)?;
    out.extend_from_slice(&c.dropout_rate.to_le_bytes());
    out.extend_from_slice(&c.batch_norm_epsilon.to_le_bytes());
    out.extend_from_slice(&c.batch_norm_momentum.to_le_bytes());
    out.push(match c.lhuc_placement {
        LhucPlacement::BeforeBatchNorm => 0,
        LhucPlacement::AfterBatchNorm => 1,
    });
    put_u32(&mut out, c.skip_connections.len())?;
    for &(a, b) in &c.skip_connections {
        put_u32(&mut out, a)?;
        put_u32(&mut out, b)?;
    }
    for l in &params.layers {
        if let Some(b) = &l.bottleneck {
            put_tensor(&mut out, b.as_slice().unwrap());
        }
        for t in [&l.weight.as_slice().unwrap()[..], l.bias.as_slice().unwrap()] {
            put_tensor(&mut out, t);
        }
        for t in [&l.gamma, &l.beta, &l.running_mean, &l.running_var] {
            put_tensor(&mut out, t.as_slice().unwrap());
        }
    }
    for h in [&params.triphone, &params.monophone] {
        put_tensor(&mut out, h.weight.as_slice().unwrap());
        put_tensor(&mut out, h.bias.as_slice().unwrap());
    }
    w.write_all(&out).map_err(|e| Error::ModelFormat(e.to_string()))
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::ModelFormat(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn vec(&mut self, n: usize) -> Result<Array1<f64>> {
        (0..n).map(|_| self.f64()).collect::<Result<Vec<_>>>().map(Array1::from)
    }

    fn mat(&mut self, rows: usize, cols: usize) -> Result<Array2<f64>> {
        let v = self.vec(rows * cols)?;
        Ok(v.into_shape_with_order((rows, cols)).unwrap())
    }
}

pub fn read_params(mut r: impl Read) -> Result<ModelParams> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)
        .map_err(|e| Error::ModelFormat(e.to_string()))?;
    let mut c = Cursor { buf: &buf, pos: 0 };
    if c.take(8)? != MODEL_MAGIC {
        return Err(Error::ModelFormat("bad magic".into()));
    }
    let version = c.u32()? as u32;
    if version != MODEL_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported version {version}, expected {MODEL_VERSION}"
        )));
    }
    let input_dim = c.u32()?;
    let hidden_dims = (0..N_HIDDEN).map(|_| c.u32()).collect::<Result<Vec<_>>>()?;
    let bottleneck_dim = c.u32()?;
    let n_triphone_targets = c.u32()?;
    let n_monophone_targets = c.u32()?;
    let dropout_rate = c.f64()?;
    let batch_norm_epsilon = c.f64()?;
    let batch_norm_momentum = c.f64()?;
    let lhuc_placement = match c.take(1)?[0] {
        0 => LhucPlacement::BeforeBatchNorm,
        1 => LhucPlacement::AfterBatchNorm,
        v => return Err(Error::ModelFormat(format!("unknown LHUC placement {v}"))),
    };
    let n_skips = c.u32()?;
    if n_skips > N_HIDDEN * N_HIDDEN {
        return Err(Error::ModelFormat(format!("{n_skips} skip connections")));
    }
    let skip_connections = (0..n_skips)
        .map(|_| Ok((c.u32()?, c.u32()?)))
        .collect::<Result<Vec<_>>>()?;
    let config = NetworkConfig {
        input_dim,
        hidden_dims,
        bottleneck_dim,
        dropout_rate,
        n_triphone_targets,
        n_monophone_targets,
        skip_connections,
        lhuc_placement,
        batch_norm_epsilon,
        batch_norm_momentum,
    };
    config
        .validate()
        .map_err(|e| Error::ModelFormat(format!("stored config invalid: {e}")))?;
    // Reject headers whose tensors could not possibly fit before allocating.
    let expected = n_values(&config);
    if expected.saturating_mul(8) != buf.len() - c.pos {
        return Err(Error::ModelFormat(format!(
            "expected {} bytes of tensors, found {}",
            expected.saturating_mul(8),
            buf.len() - c.pos
        )));
    }

    let mut layers = Vec::with_capacity(N_HIDDEN);
    for l in 1..=N_HIDDEN {
        let inp = config.layer_input_dim(l);
        let width = config.hidden_dims[l - 1];
        let (bottleneck, affine_in) = if NetworkConfig::has_bottleneck(l) {
            (Some(c.mat(inp, bottleneck_dim)?), bottleneck_dim)
        } else {
            (None, inp)
        };
        layers.push(HiddenLayer {
            bottleneck,
            weight: c.mat(affine_in, width)?,
            bias: c.vec(width)?,
            gamma: c.vec(width)?,
            beta: c.vec(width)?,
            running_mean: c.vec(width)?,
            running_var: c.vec(width)?,
        });
    }
    let last = config.hidden_dims[N_HIDDEN - 1];
    let mut head = |n| -> Result<OutputHead> {
        Ok(OutputHead {
            weight: c.mat(last, n)?,
            bias: c.vec(n)?,
        })
    };
    let triphone = head(n_triphone_targets)?;
    let monophone = head(n_monophone_targets)?;
    Ok(ModelParams {
        config,
        layers,
        triphone,
        monophone,
    })
}

fn n_values(c: &NetworkConfig) -> usize {
    let mut n = 0usize;
    for l in 1..=N_HIDDEN {
        let inp = c.layer_input_dim(l);
        let w = c.hidden_dims[l - 1];
        let affine_in = if NetworkConfig::has_bottleneck(l) {
            n = n.saturating_add(inp.saturating_mul(c.bottleneck_dim));
            c.bottleneck_dim
        } else {
            inp
        };
        n = n.saturating_add(affine_in.saturating_mul(w)).saturating_add(5 * w);
    }
    let last = c.hidden_dims[N_HIDDEN - 1];
    for k in [c.n_triphone_targets, c.n_monophone_targets] {
        n = n.saturating_add((last + 1).saturating_mul(k));
    }
    n
}

pub fn save_params(params: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    write_params(params, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_params(path: impl AsRef<Path>) -> Result<ModelParams> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_params(BufReader::new(f))
}
