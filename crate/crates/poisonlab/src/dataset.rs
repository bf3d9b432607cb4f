//! Labeled datasets: feature vectors, binary labels, stable sample ids, and
//! per-sample corruption flags. Features are complex for the XXZ task and
//! real for MNIST; every feature vector is L2-normalized.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureVec {
    Complex(Vec<Complex64>),
    Real(Vec<f64>),
}

impl FeatureVec {
    pub fn len(&self) -> usize {
        match self {
            FeatureVec::Complex(v) => v.len(),
            FeatureVec::Real(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn norm(&self) -> f64 {
        match self {
            FeatureVec::Complex(v) => v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt(),
            FeatureVec::Real(v) => v.iter().map(|a| a * a).sum::<f64>().sqrt(),
        }
    }

    /// View as complex amplitudes (real vectors get zero imaginary parts).
    pub fn to_complex(&self) -> Vec<Complex64> {
        match self {
            FeatureVec::Complex(v) => v.clone(),
            FeatureVec::Real(v) => v.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionTag {
    Train,
    Validation,
}

/// Feature vectors + binary labels + stable ids + corruption flags.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub features: Vec<FeatureVec>,
    pub labels: Vec<u8>,
    pub sample_ids: Vec<u64>,
    pub partition_tag: PartitionTag,
    pub corrupted_mask: Vec<bool>,
    /// Per-sample scalar metadata (anisotropy Δ for XXZ samples, NaN otherwise).
    pub meta: Vec<f64>,
}

impl LabeledDataset {
    pub fn new(
        features: Vec<FeatureVec>,
        labels: Vec<u8>,
        sample_ids: Vec<u64>,
        partition_tag: PartitionTag,
        meta: Vec<f64>,
    ) -> Result<Self> {
        if features.len() != labels.len() || features.len() != sample_ids.len() {
            return Err(Error::structural(
                "features, labels and sample ids must have equal length",
            ));
        }
        let n = features.len();
        Ok(LabeledDataset {
            corrupted_mask: vec![false; n],
            features,
            labels,
            sample_ids,
            partition_tag,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Subset by positional indices, preserving ids and flags.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            sample_ids: indices.iter().map(|&i| self.sample_ids[i]).collect(),
            partition_tag: self.partition_tag,
            corrupted_mask: indices.iter().map(|&i| self.corrupted_mask[i]).collect(),
            meta: indices.iter().map(|&i| self.meta[i]).collect(),
        }
    }
}

const QPLD_MAGIC: &[u8; 4] = b"QPLD";
const QPLD_VERSION: u16 = 1;

/// Write the versioned little-endian "QPLD" dataset cache.
///
/// Layout: magic "QPLD", u16 version, u8 feature kind (0 complex / 1 real),
/// u8 partition tag, u32 sample count, u32 feature dim, then per sample:
/// u64 id, u8 label, u8 corrupted flag, f64 meta, and dim amplitudes
/// (f64 re, f64 im pairs for complex; single f64 for real).
pub fn write_cache(path: &Path, ds: &LabeledDataset) -> Result<()> {
    let kind = match ds.features.first() {
        Some(FeatureVec::Real(_)) => 1u8,
        _ => 0u8,
    };
    let dim = ds.features.first().map_or(0, |f| f.len()) as u32;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(QPLD_MAGIC)?;
    w.write_all(&QPLD_VERSION.to_le_bytes())?;
    w.write_all(&[kind])?;
    w.write_all(&[match ds.partition_tag {
        PartitionTag::Train => 0u8,
        PartitionTag::Validation => 1u8,
    }])?;
    w.write_all(&(ds.len() as u32).to_le_bytes())?;
    w.write_all(&dim.to_le_bytes())?;
    for i in 0..ds.len() {
        w.write_all(&ds.sample_ids[i].to_le_bytes())?;
        w.write_all(&[ds.labels[i]])?;
        w.write_all(&[ds.corrupted_mask[i] as u8])?;
        w.write_all(&ds.meta[i].to_le_bytes())?;
        match &ds.features[i] {
            FeatureVec::Complex(v) => {
                for a in v {
                    w.write_all(&a.re.to_le_bytes())?;
                    w.write_all(&a.im.to_le_bytes())?;
                }
            }
            FeatureVec::Real(v) => {
                for x in v {
                    w.write_all(&x.to_le_bytes())?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_cache(path: &Path) -> Result<LabeledDataset> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != QPLD_MAGIC {
        return Err(Error::Ingestion {
            file: path.display().to_string(),
            offset: 0,
            reason: format!("bad cache magic {magic:?}, expected \"QPLD\""),
        });
    }
    let version = read_u16(&mut r)?;
    if version != QPLD_VERSION {
        return Err(Error::Ingestion {
            file: path.display().to_string(),
            offset: 4,
            reason: format!("unsupported cache version {version}"),
        });
    }
    let kind = read_u8(&mut r)?;
    let tag = match read_u8(&mut r)? {
        0 => PartitionTag::Train,
        1 => PartitionTag::Validation,
        t => {
            return Err(Error::Ingestion {
                file: path.display().to_string(),
                offset: 7,
                reason: format!("bad partition tag {t}"),
            })
        }
    };
    let count = read_u32(&mut r)? as usize;
    let dim = read_u32(&mut r)? as usize;
    let mut ds = LabeledDataset {
        features: Vec::with_capacity(count),
        labels: Vec::with_capacity(count),
        sample_ids: Vec::with_capacity(count),
        partition_tag: tag,
        corrupted_mask: Vec::with_capacity(count),
        meta: Vec::with_capacity(count),
    };
    for _ in 0..count {
        ds.sample_ids.push(read_u64(&mut r)?);
        ds.labels.push(read_u8(&mut r)?);
        ds.corrupted_mask.push(read_u8(&mut r)? != 0);
        ds.meta.push(read_f64(&mut r)?);
        if kind == 0 {
            let mut v = Vec::with_capacity(dim);
            for _ in 0..dim {
                let re = read_f64(&mut r)?;
                let im = read_f64(&mut r)?;
                v.push(Complex64::new(re, im));
            }
            ds.features.push(FeatureVec::Complex(v));
        } else {
            let mut v = Vec::with_capacity(dim);
            for _ in 0..dim {
                v.push(read_f64(&mut r)?);
            }
            ds.features.push(FeatureVec::Real(v));
        }
    }
    Ok(ds)
}

fn read_u8(r: &mut impl Read) -> Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}
fn read_u16(r: &mut impl Read) -> Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}
fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}
fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}
fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
