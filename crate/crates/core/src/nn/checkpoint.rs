//! `CATN` weight checkpoints.
//!
//! Layout (little-endian):
//!
//! ```text
//! "CATN"            4 bytes
//! version           u32 (= 1)
//! layer count       u32
//! per layer:
//!   activation tag  u8   (0 = identity, 1 = relu)
//!   rows            u32
//!   cols            u32
//!   weights         rows·cols × f64, row-major
//!   biases          rows × f64
//! ```

use std::path::Path;

use super::network::{Activation, Dense, Network};
use super::tensor::Tensor2;
use crate::error::{Error, Result};
use crate::io::{write_atomic, Reader};

pub const MAGIC: &[u8; 4] = b"CATN";
pub const VERSION: u32 = 1;

pub fn encode(net: &Network) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(net.layers().len() as u32).to_le_bytes());
    for layer in net.layers() {
        out.push(match layer.activation {
            Activation::Identity => 0,
            Activation::Relu => 1,
        });
        out.extend_from_slice(&(layer.weight.rows() as u32).to_le_bytes());
        out.extend_from_slice(&(layer.weight.cols() as u32).to_le_bytes());
        for v in layer.weight.data().iter().chain(&layer.bias) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Network> {
    let mut r = Reader::new(bytes);
    let magic = r.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::Format(format!(
            "bad checkpoint magic {magic:?}, expected \"CATN\""
        )));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let count = r.u32("layer count")? as usize;
    let mut layers = Vec::with_capacity(count);
    for i in 0..count {
        let activation = match r.u8("activation tag")? {
            0 => Activation::Identity,
            1 => Activation::Relu,
            t => return Err(Error::Format(format!("layer {i}: unknown activation tag {t}"))),
        };
        let rows = r.u32("rows")? as usize;
        let cols = r.u32("cols")? as usize;
        let weight = Tensor2::from_vec(rows, cols, r.f64s(rows * cols, "weights")?)?;
        let bias = r.f64s(rows, "biases")?;
        layers.push(Dense::new(weight, bias, activation)?);
    }
    if !r.is_empty() {
        return Err(Error::Format(format!(
            "{} trailing bytes after checkpoint",
            r.remaining()
        )));
    }
    Network::from_layers(layers)
}

pub fn save(net: &Network, path: &Path) -> Result<()> {
    write_atomic(path, &encode(net))
}

pub fn load(path: &Path) -> Result<Network> {
    decode(&std::fs::read(path)?)
}
