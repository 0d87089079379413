//! Versioned little-endian binary encoding of layers and networks.
//!
//! Layout of a layer block:
//!
//! ```text
//! u32 layer_count
//! per layer: u32 fan_in, u32 fan_out, u8 activation, u8 frozen,
//!            f64 weights (row-major, fan_in × fan_out), f64 bias (fan_out)
//! ```
//!
//! A network file is `NETWORK_MAGIC`, `u32 version`, then one layer block.
//! Parameters are written as raw IEEE-754 bits, so decoding is bit-exact.

use std::io::{Read, Write};

use ndarray::{Array1, Array2};

use super::{Activation, Layer, Network};
use crate::{Error, Result};

pub const NETWORK_MAGIC: &[u8; 8] = b"CGNET\0\0\0";
const NETWORK_VERSION: u32 = 1;

/// Sanity bound on any single dimension read from disk.
const MAX_DIM: u32 = 1 << 24;

pub(crate) fn write_u32<W: Write>(w: &mut W, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub(crate) fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(truncated)?;
    Ok(u32::from_le_bytes(buf))
}

pub(crate) fn read_bytes<R: Read>(r: &mut R, n: usize) -> Result<Vec<u8>> {
    if n > (MAX_DIM as usize) {
        return Err(Error::Format(format!("implausible field length {n}")));
    }
    let mut buf = vec![0u8; n];
    r.read_exact(&mut buf).map_err(truncated)?;
    Ok(buf)
}

fn read_u8<R: Read>(r: &mut R) -> Result<u8> {
    let mut buf = [0u8; 1];
    r.read_exact(&mut buf).map_err(truncated)?;
    Ok(buf[0])
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; n * 8];
    r.read_exact(&mut bytes).map_err(truncated)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub(crate) fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("unexpected end of data".into())
    } else {
        Error::Io(e)
    }
}

pub fn write_layers<W: Write>(w: &mut W, layers: &[Layer]) -> Result<()> {
    write_u32(w, layers.len() as u32)?;
    for layer in layers {
        write_u32(w, layer.fan_in() as u32)?;
        write_u32(w, layer.fan_out() as u32)?;
        w.write_all(&[layer.activation().code(), layer.is_frozen() as u8])?;
        for v in layer.weights().iter() {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in layer.bias().iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_layers<R: Read>(r: &mut R) -> Result<Vec<Layer>> {
    let count = read_u32(r)?;
    if count > MAX_DIM {
        return Err(Error::Format(format!("implausible layer count {count}")));
    }
    let mut layers = Vec::with_capacity(count as usize);
    for k in 0..count {
        let fan_in = read_u32(r)?;
        let fan_out = read_u32(r)?;
        if fan_in == 0 || fan_out == 0 || fan_in > MAX_DIM || fan_out > MAX_DIM {
            return Err(Error::Format(format!("layer {k} has invalid shape {fan_in}x{fan_out}")));
        }
        let activation = Activation::from_code(read_u8(r)?)
            .ok_or_else(|| Error::Format(format!("layer {k} has unknown activation")))?;
        let frozen = match read_u8(r)? {
            0 => false,
            1 => true,
            other => return Err(Error::Format(format!("layer {k} has frozen flag {other}"))),
        };
        let (fan_in, fan_out) = (fan_in as usize, fan_out as usize);
        let weights = Array2::from_shape_vec((fan_in, fan_out), read_f64s(r, fan_in * fan_out)?)
            .map_err(|e| Error::Format(e.to_string()))?;
        let bias = Array1::from(read_f64s(r, fan_out)?);
        let mut layer = Layer::new(weights, bias, activation)?;
        layer.set_frozen(frozen);
        layers.push(layer);
    }
    Ok(layers)
}

pub fn encode_network(net: &Network) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + net.parameter_count() * 8);
    out.extend_from_slice(NETWORK_MAGIC);
    out.extend_from_slice(&NETWORK_VERSION.to_le_bytes());
    write_layers(&mut out, net.layers()).expect("writing to a Vec cannot fail");
    out
}

pub fn decode_network(mut bytes: &[u8]) -> Result<Network> {
    let mut magic = [0u8; 8];
    bytes.read_exact(&mut magic).map_err(truncated)?;
    if &magic != NETWORK_MAGIC {
        return Err(Error::Format("not a network file".into()));
    }
    let version = read_u32(&mut bytes)?;
    if version != NETWORK_VERSION {
        return Err(Error::Format(format!("unsupported network version {version}")));
    }
    let layers = read_layers(&mut bytes)?;
    if !bytes.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes", bytes.len())));
    }
    Network::from_layers(layers).map_err(|e| Error::Format(e.to_string()))
}
