//! "QPCK" checkpoint format shared by both models and the Scrub
//! teacher/student handoff.
//!
//! Layout (little-endian): magic "QPCK", u16 version, u8 model kind
//! (0 qnn / 1 mlp), u8 shape length, shape entries as u32 (qnn: n_qubits,
//! depth; mlp: input_dim, hidden dims...), u32 parameter count, then the
//! f64 parameters.

use crate::error::{Error, Result};
use crate::model::ModelKind;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const QPCK_MAGIC: &[u8; 4] = b"QPCK";
const QPCK_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model_kind: ModelKind,
    pub shape: Vec<u32>,
    pub params: Vec<f64>,
}

pub fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(QPCK_MAGIC)?;
    w.write_all(&QPCK_VERSION.to_le_bytes())?;
    w.write_all(&[match ckpt.model_kind {
        ModelKind::Qnn => 0u8,
        ModelKind::Mlp => 1u8,
    }])?;
    w.write_all(&[ckpt.shape.len() as u8])?;
    for s in &ckpt.shape {
        w.write_all(&s.to_le_bytes())?;
    }
    w.write_all(&(ckpt.params.len() as u32).to_le_bytes())?;
    for p in &ckpt.params {
        w.write_all(&p.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut r = BufReader::new(File::open(path)?);
    let err = |offset: u64, reason: String| Error::Ingestion {
        file: path.display().to_string(),
        offset,
        reason,
    };
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != QPCK_MAGIC {
        return Err(err(0, format!("bad checkpoint magic {magic:?}, expected \"QPCK\"")));
    }
    let mut b2 = [0u8; 2];
    r.read_exact(&mut b2)?;
    let version = u16::from_le_bytes(b2);
    if version != QPCK_VERSION {
        return Err(err(4, format!("unsupported checkpoint version {version}")));
    }
    let mut b1 = [0u8; 1];
    r.read_exact(&mut b1)?;
    let model_kind = match b1[0] {
        0 => ModelKind::Qnn,
        1 => ModelKind::Mlp,
        t => return Err(err(6, format!("bad model kind tag {t}"))),
    };
    r.read_exact(&mut b1)?;
    let shape_len = b1[0] as usize;
    let mut shape = Vec::with_capacity(shape_len);
    let mut b4 = [0u8; 4];
    for _ in 0..shape_len {
        r.read_exact(&mut b4)?;
        shape.push(u32::from_le_bytes(b4));
    }
    r.read_exact(&mut b4)?;
    let count = u32::from_le_bytes(b4) as usize;
    let mut params = Vec::with_capacity(count);
    let mut b8 = [0u8; 8];
    for _ in 0..count {
        r.read_exact(&mut b8)?;
        params.push(f64::from_le_bytes(b8));
    }
    Ok(Checkpoint {
        model_kind,
        shape,
        params,
    })
}
