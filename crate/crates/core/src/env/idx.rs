//! IDX (MNIST) reader.
//!
//! Images: magic `0x00000803`, then big-endian `u32` count, rows, cols, then
//! `count * rows * cols` unsigned bytes. Labels: magic `0x00000801`, then
//! `u32` count, then `count` bytes.

use std::path::Path;

use super::digits::{DigitBank, CLASS_COUNT, DIGIT_SIDE};
use crate::error::{Error, Result};
use crate::numeric::RealVector;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Parse {
            offset,
            message: "truncated header".into(),
        })
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<()> {
    let magic = read_u32(bytes, 0)?;
    if magic != expected {
        return Err(Error::Parse {
            offset: 0,
            message: format!("unexpected magic 0x{magic:08x}, expected 0x{expected:08x}"),
        });
    }
    Ok(())
}

/// Raw image tensor: `(rows, cols, pixels)` with pixels in file order.
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    check_magic(bytes, IMAGES_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    let rows = read_u32(bytes, 8)? as usize;
    let cols = read_u32(bytes, 12)? as usize;
    let len = count * rows * cols;
    let body = &bytes[16..];
    if body.len() < len {
        return Err(Error::Parse {
            offset: 16 + body.len(),
            message: format!("truncated image data: expected {len} bytes, found {}", body.len()),
        });
    }
    Ok((rows, cols, body[..len].to_vec()))
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    check_magic(bytes, LABELS_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    let body = &bytes[8..];
    if body.len() < count {
        return Err(Error::Parse {
            offset: 8 + body.len(),
            message: format!("truncated label data: expected {count} bytes, found {}", body.len()),
        });
    }
    Ok(body[..count].to_vec())
}

/// Parses an image/label file pair into a bank, scaling pixels by 1/255.
pub fn parse_idx(images: &[u8], labels: &[u8]) -> Result<DigitBank> {
    let (rows, cols, pixels) = parse_idx_images(images)?;
    if rows != DIGIT_SIDE || cols != DIGIT_SIDE {
        return Err(Error::Parse {
            offset: 8,
            message: format!("expected {DIGIT_SIDE}x{DIGIT_SIDE} images, found {rows}x{cols}"),
        });
    }
    let labels = parse_idx_labels(labels)?;
    let count = pixels.len() / (rows * cols);
    if labels.len() != count {
        return Err(Error::Parse {
            offset: 4,
            message: format!("label count {} does not match image count {count}", labels.len()),
        });
    }
    let mut classes: Vec<Vec<RealVector>> = vec![Vec::new(); CLASS_COUNT];
    for (i, (img, &label)) in pixels.chunks_exact(rows * cols).zip(&labels).enumerate() {
        let label = label as usize;
        if label >= CLASS_COUNT {
            return Err(Error::Parse {
                offset: 8 + i,
                message: format!("label {label} outside 0..{CLASS_COUNT}"),
            });
        }
        let values = img.iter().map(|&b| b as f64 / 255.0).collect();
        classes[label].push(RealVector::from_trusted(values));
    }
    DigitBank::new(classes)
}

pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<DigitBank> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();
    let images = std::fs::read(images_path).map_err(|e| Error::io(images_path, e))?;
    let labels = std::fs::read(labels_path).map_err(|e| Error::io(labels_path, e))?;
    parse_idx(&images, &labels)
}

pub fn encode_idx_images(rows: usize, cols: usize, pixels: &[u8]) -> Vec<u8> {
    let count = pixels.len() / (rows * cols);
    let mut out = Vec::with_capacity(16 + pixels.len());
    out.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    for v in [count, rows, cols] {
        out.extend_from_slice(&(v as u32).to_be_bytes());
    }
    out.extend_from_slice(pixels);
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
