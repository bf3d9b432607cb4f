//! IDX-format MNIST reader and the 1-vs-9 binary task builder.
//!
//! Accepts raw or gzip-compressed IDX files. Pixels are scaled to [0, 1],
//! flattened to 784, zero-padded to 1024 and L2-normalized, so both models
//! consume the identical preprocessed vector.

use crate::dataset::{FeatureVec, LabeledDataset, PartitionTag};
use crate::error::{Error, Result};
use crate::rng::Rng64;
use flate2::read::GzDecoder;
use std::fs::File;
use std::io::Read;
use std::path::Path;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;
pub const PADDED_DIM: usize = 1024;

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut raw = Vec::new();
    File::open(path)
        .map_err(|e| Error::Ingestion {
            file: path.display().to_string(),
            offset: 0,
            reason: e.to_string(),
        })?
        .read_to_end(&mut raw)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..])
            .read_to_end(&mut out)
            .map_err(|e| Error::Ingestion {
                file: path.display().to_string(),
                offset: 0,
                reason: format!("gzip decode failed: {e}"),
            })?;
        return Ok(out);
    }
    Ok(raw)
}

fn be_u32(buf: &[u8], offset: usize, path: &Path) -> Result<u32> {
    buf.get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Ingestion {
            file: path.display().to_string(),
            offset: offset as u64,
            reason: "truncated header".into(),
        })
}

/// Parse an IDX image file into (count, rows, cols, pixel bytes).
pub fn read_idx_images(path: &Path) -> Result<(usize, usize, usize, Vec<u8>)> {
    let buf = read_all(path)?;
    let magic = be_u32(&buf, 0, path)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Ingestion {
            file: path.display().to_string(),
            offset: 0,
            reason: format!("bad image magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}"),
        });
    }
    let count = be_u32(&buf, 4, path)? as usize;
    let rows = be_u32(&buf, 8, path)? as usize;
    let cols = be_u32(&buf, 12, path)? as usize;
    let expected = 16 + count * rows * cols;
    if buf.len() < expected {
        return Err(Error::Ingestion {
            file: path.display().to_string(),
            offset: buf.len() as u64,
            reason: format!("truncated image data: {} bytes, expected {expected}", buf.len()),
        });
    }
    Ok((count, rows, cols, buf[16..expected].to_vec()))
}

/// Parse an IDX label file.
pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let buf = read_all(path)?;
    let magic = be_u32(&buf, 0, path)?;
    if magic != LABELS_MAGIC {
        return Err(Error::Ingestion {
            file: path.display().to_string(),
            offset: 0,
            reason: format!("bad label magic {magic:#010x}, expected {LABELS_MAGIC:#010x}"),
        });
    }
    let count = be_u32(&buf, 4, path)? as usize;
    let expected = 8 + count;
    if buf.len() < expected {
        return Err(Error::Ingestion {
            file: path.display().to_string(),
            offset: buf.len() as u64,
            reason: format!("truncated label data: {} bytes, expected {expected}", buf.len()),
        });
    }
    Ok(buf[8..expected].to_vec())
}

fn preprocess(pixels: &[u8]) -> Vec<f64> {
    let mut v: Vec<f64> = pixels.iter().map(|&p| p as f64 / 255.0).collect();
    v.resize(PADDED_DIM, 0.0);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    v
}

/// Build the binary digit task: `train_per_class` images of each digit for
/// training and `val_total` disjoint images of the two digits for validation.
/// digits.0 → label 0, digits.1 → label 1. Selection is seeded and
/// deterministic; sample ids are source-file indices.
pub fn load_mnist_pair(
    images_path: &Path,
    labels_path: &Path,
    digits: (u8, u8),
    train_per_class: usize,
    val_total: usize,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    let (count, rows, cols, pixels) = read_idx_images(images_path)?;
    let labels = read_idx_labels(labels_path)?;
    if labels.len() != count {
        return Err(Error::Ingestion {
            file: labels_path.display().to_string(),
            offset: 4,
            reason: format!("label count {} != image count {count}", labels.len()),
        });
    }
    let img_size = rows * cols;

    let mut pools: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        if l == digits.0 {
            pools[0].push(i);
        } else if l == digits.1 {
            pools[1].push(i);
        }
    }
    for (cls, pool) in pools.iter().enumerate() {
        if pool.len() < train_per_class {
            let digit = if cls == 0 { digits.0 } else { digits.1 };
            return Err(Error::Ingestion {
                file: labels_path.display().to_string(),
                offset: 0,
                reason: format!(
                    "insufficient samples of digit {digit}: {} available, {train_per_class} needed",
                    pool.len()
                ),
            });
        }
    }

    let mut rng = Rng64::derive(seed, 0x6d6e697374);
    let mut train_idx: Vec<(usize, u8)> = Vec::new();
    let mut rest: Vec<(usize, u8)> = Vec::new();
    for (cls, pool) in pools.iter().enumerate() {
        let mut pool = pool.clone();
        rng.shuffle(&mut pool);
        for (j, &src) in pool.iter().enumerate() {
            if j < train_per_class {
                train_idx.push((src, cls as u8));
            } else {
                rest.push((src, cls as u8));
            }
        }
    }
    if rest.len() < val_total {
        return Err(Error::Ingestion {
            file: labels_path.display().to_string(),
            offset: 0,
            reason: format!(
                "insufficient validation samples: {} left after training selection, {val_total} needed",
                rest.len()
            ),
        });
    }
    rng.shuffle(&mut rest);
    rest.truncate(val_total);

    let build = |rows_sel: &[(usize, u8)], tag: PartitionTag| -> Result<LabeledDataset> {
        let mut features = Vec::with_capacity(rows_sel.len());
        let mut labels = Vec::with_capacity(rows_sel.len());
        let mut ids = Vec::with_capacity(rows_sel.len());
        for &(src, cls) in rows_sel {
            features.push(FeatureVec::Real(preprocess(
                &pixels[src * img_size..(src + 1) * img_size],
            )));
            labels.push(cls);
            ids.push(src as u64);
        }
        let n = rows_sel.len();
        LabeledDataset::new(features, labels, ids, tag, vec![f64::NAN; n])
    };

    Ok((
        build(&train_idx, PartitionTag::Train)?,
        build(&rest, PartitionTag::Validation)?,
    ))
}
