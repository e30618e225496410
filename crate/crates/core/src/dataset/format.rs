//! `CATD` dataset files.
//!
//! Layout (little-endian):
//!
//! ```text
//! "CATD"              4 bytes
//! version             u32 (= 1)
//! num_classes         u32
//! modality count      u8
//! per modality: dim   u32
//! sample count        u64
//! per sample:
//!   id                u64
//!   label             u32
//!   group             u32
//!   per modality:     dim × f64
//! ```

use std::path::Path;

use super::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::io::{write_atomic, Reader};

pub const MAGIC: &[u8; 4] = b"CATD";
pub const VERSION: u32 = 1;

pub fn encode(dataset: &Dataset) -> Vec<u8> {
    let dims = dataset.modality_dims();
    let record = 16 + 8 * dims.iter().sum::<usize>();
    let mut out = Vec::with_capacity(21 + 4 * dims.len() + record * dataset.samples().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&dataset.num_classes().to_le_bytes());
    out.push(dims.len() as u8);
    for &d in dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&(dataset.samples().len() as u64).to_le_bytes());
    for s in dataset.samples() {
        out.extend_from_slice(&s.id.to_le_bytes());
        out.extend_from_slice(&s.label.to_le_bytes());
        out.extend_from_slice(&s.group.to_le_bytes());
        for v in s.modalities.iter().flatten() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Dataset> {
    let mut r = Reader::new(bytes);
    let magic = r.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::Format(format!("bad dataset magic {magic:?}, expected \"CATD\"")));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported dataset version {version}")));
    }
    let num_classes = r.u32("num_classes")?;
    let modality_count = r.u8("modality count")? as usize;
    let dims = (0..modality_count)
        .map(|_| r.u32("modality dim").map(|d| d as usize))
        .collect::<Result<Vec<_>>>()?;
    let count = r.u64("sample count")?;

    let record = 16u64 + 8 * dims.iter().map(|&d| d as u64).sum::<u64>();
    let expected = (bytes.len() - r.remaining()) as u64 + count.saturating_mul(record);
    let found = bytes.len() as u64;
    if found < expected {
        return Err(Error::Truncated { expected, found });
    }
    if found > expected {
        return Err(Error::Format(format!(
            "{} trailing bytes after {count} samples",
            found - expected
        )));
    }

    let mut samples = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let id = r.u64("id")?;
        let label = r.u32("label")?;
        let group = r.u32("group")?;
        let modalities = dims
            .iter()
            .map(|&d| r.f64s(d, "modality vector"))
            .collect::<Result<Vec<_>>>()?;
        samples.push(Sample {
            id,
            label,
            group,
            modalities,
        });
    }
    Dataset::new(num_classes, dims, samples)
}

pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    write_atomic(path, &encode(dataset))
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    decode(&std::fs::read(path)?)
}
