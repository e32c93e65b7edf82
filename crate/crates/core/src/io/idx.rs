//! IDX binary files: a big-endian magic (`0x00000803` for 3-D image
//! arrays, `0x00000801` for label vectors), one big-endian `u32` per
//! dimension, then raw unsigned bytes.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

/// Images as columns, pixels scaled to `[0, 1]` and vectorized row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct IdxImages {
    pub images: DMatrix<f64>,
    pub labels: Vec<u8>,
    pub rows: usize,
    pub cols: usize,
}

impl IdxImages {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

fn be_u32(bytes: &[u8], at: usize, what: &str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::TruncatedFile(format!("{what} header")))
}

fn check_magic(bytes: &[u8], expected: u32, what: &str) -> Result<()> {
    let found = be_u32(bytes, 0, what)?;
    if found != expected {
        return Err(Error::BadMagic { expected, found });
    }
    Ok(())
}

/// Returns `(count, rows, cols, pixels)`, pixels as `count × rows × cols`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, usize, &[u8])> {
    check_magic(bytes, IMAGE_MAGIC, "image")?;
    let count = be_u32(bytes, 4, "image")? as usize;
    let rows = be_u32(bytes, 8, "image")? as usize;
    let cols = be_u32(bytes, 12, "image")? as usize;
    let need = count * rows * cols;
    let body = &bytes[16..];
    if body.len() < need {
        return Err(Error::TruncatedFile(format!(
            "image data has {} bytes, header promises {need}",
            body.len()
        )));
    }
    Ok((count, rows, cols, &body[..need]))
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<&[u8]> {
    check_magic(bytes, LABEL_MAGIC, "label")?;
    let count = be_u32(bytes, 4, "label")? as usize;
    let body = &bytes[8..];
    if body.len() < count {
        return Err(Error::TruncatedFile(format!(
            "label data has {} bytes, header promises {count}",
            body.len()
        )));
    }
    Ok(&body[..count])
}

pub fn idx_from_bytes(image_bytes: &[u8], label_bytes: &[u8]) -> Result<IdxImages> {
    let (count, rows, cols, pixels) = parse_idx_images(image_bytes)?;
    let labels = parse_idx_labels(label_bytes)?;
    if labels.len() != count {
        return Err(Error::DimensionMismatch(format!(
            "{count} images but {} labels",
            labels.len()
        )));
    }
    let images =
        DMatrix::from_iterator(rows * cols, count, pixels.iter().map(|&p| p as f64 / 255.0));
    Ok(IdxImages {
        images,
        labels: labels.to_vec(),
        rows,
        cols,
    })
}

pub fn load_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<IdxImages> {
    let read = |p: &Path| fs::read(p).map_err(|e| Error::io(p, e));
    idx_from_bytes(&read(images.as_ref())?, &read(labels.as_ref())?)
}

/// Serializes images (one per column, values in `[0, 1]`) and labels.
pub fn encode_idx(
    images: &DMatrix<f64>,
    rows: usize,
    cols: usize,
    labels: &[u8],
) -> (Vec<u8>, Vec<u8>) {
    let mut img = Vec::with_capacity(16 + images.len());
    img.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    for d in [images.ncols(), rows, cols] {
        img.extend_from_slice(&(d as u32).to_be_bytes());
    }
    img.extend(
        images
            .iter()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8),
    );
    let mut lab = Vec::with_capacity(8 + labels.len());
    lab.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    lab.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    lab.extend_from_slice(labels);
    (img, lab)
}
