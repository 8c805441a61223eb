//! Checkpoint container: a JSON header followed by a flat binary payload.
//!
//! File layout:
//!
//! ```text
//! bytes 0..8    magic "GSCKPT01"
//! bytes 8..16   header length H, u64 little-endian
//! bytes 16..16+H  JSON header (UTF-8)
//! rest          payload: the f64 arrays declared by the header, in
//!               declaration order, little-endian
//! ```
//!
//! The header declares each network (name + layer sizes) and each
//! optimizer (name + config + step + moment length); the payload holds
//! network parameters in [`Mlp::flatten`] order, then for each optimizer
//! its first- and second-moment arrays. Floats are stored as raw bits, so
//! round-trips are bit-exact. `meta` is an arbitrary JSON value for the
//! caller's bookkeeping (seeds, step counters, training state).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::{AdamConfig, AdamState, Mlp, NnError};

const MAGIC: &[u8; 8] = b"GSCKPT01";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed header: {0}")]
    MalformedHeader(#[from] serde_json::Error),
    #[error("payload truncated or oversized")]
    PayloadSize,
    #[error("network error: {0}")]
    Nn(#[from] NnError),
}

#[derive(Debug, Serialize, Deserialize)]
struct NetworkDesc {
    name: String,
    layer_sizes: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct OptimizerDesc {
    name: String,
    cfg: AdamConfig,
    step: u64,
    moment_len: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    version: u32,
    networks: Vec<NetworkDesc>,
    optimizers: Vec<OptimizerDesc>,
    meta: serde_json::Value,
}

/// Deserialized checkpoint contents.
#[derive(Debug)]
pub struct Checkpoint {
    pub networks: Vec<(String, Mlp)>,
    pub optimizers: Vec<(String, AdamState)>,
    pub meta: serde_json::Value,
}

impl Checkpoint {
    pub fn network(&self, name: &str) -> Option<&Mlp> {
        self.networks
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
    }

    pub fn optimizer(&self, name: &str) -> Option<&AdamState> {
        self.optimizers
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s)
    }
}

fn write_f64s<W: Write>(w: &mut W, values: &[f64]) -> std::io::Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_f64s<R: Read>(r: &mut R, count: usize) -> Result<Vec<f64>, CheckpointError> {
    let mut buf = vec![0u8; count * 8];
    r.read_exact(&mut buf)
        .map_err(|_| CheckpointError::PayloadSize)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn write_checkpoint(
    path: &Path,
    networks: &[(&str, &Mlp)],
    optimizers: &[(&str, &AdamState)],
    meta: serde_json::Value,
) -> Result<(), CheckpointError> {
    let header = Header {
        version: VERSION,
        networks: networks
            .iter()
            .map(|(name, mlp)| NetworkDesc {
                name: name.to_string(),
                layer_sizes: mlp.sizes().to_vec(),
            })
            .collect(),
        optimizers: optimizers
            .iter()
            .map(|(name, st)| OptimizerDesc {
                name: name.to_string(),
                cfg: st.cfg,
                step: st.step,
                moment_len: st.moments().0.len(),
            })
            .collect(),
        meta,
    };
    let header_bytes = serde_json::to_vec(&header)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(header_bytes.len() as u64).to_le_bytes())?;
    w.write_all(&header_bytes)?;
    for (_, mlp) in networks {
        write_f64s(&mut w, &mlp.flatten())?;
    }
    for (_, st) in optimizers {
        let (m, v) = st.moments();
        write_f64s(&mut w, m)?;
        write_f64s(&mut w, v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let mut len_bytes = [0u8; 8];
    r.read_exact(&mut len_bytes)?;
    let header_len = u64::from_le_bytes(len_bytes) as usize;
    let mut header_bytes = vec![0u8; header_len];
    r.read_exact(&mut header_bytes)?;
    let header: Header = serde_json::from_slice(&header_bytes)?;
    if header.version != VERSION {
        return Err(CheckpointError::UnsupportedVersion(header.version));
    }

    let mut networks = Vec::with_capacity(header.networks.len());
    for desc in &header.networks {
        let mut mlp = Mlp::zeros(&desc.layer_sizes)?;
        let flat = read_f64s(&mut r, mlp.param_count())?;
        mlp.unflatten(&flat)?;
        networks.push((desc.name.clone(), mlp));
    }
    let mut optimizers = Vec::with_capacity(header.optimizers.len());
    for desc in &header.optimizers {
        let m = read_f64s(&mut r, desc.moment_len)?;
        let v = read_f64s(&mut r, desc.moment_len)?;
        optimizers.push((
            desc.name.clone(),
            AdamState::from_parts(desc.cfg, desc.step, m, v)?,
        ));
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(CheckpointError::PayloadSize);
    }
    Ok(Checkpoint {
        networks,
        optimizers,
        meta: header.meta,
    })
}
