//! IDX binary ingestion and emission (the MNIST container format).
//!
//! All sizes are big-endian u32. Image files carry magic 2051 and three
//! dimensions (count, rows, cols); label files carry magic 2049 and one
//! dimension. Pixels are bytes scaled to [0, 1] on load.

use std::path::Path;

use crate::dataset::{Dataset, Example};
use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 2051;
pub const LABELS_MAGIC: u32 = 2049;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    name: &'a str,
}

impl<'a> Cursor<'a> {
    fn u32_be(&mut self) -> Result<u32> {
        if self.pos + 4 > self.bytes.len() {
            return Err(Error::format(format!("{}: truncated header", self.name)));
        }
        let raw: [u8; 4] = self.bytes[self.pos..self.pos + 4].try_into().unwrap();
        self.pos += 4;
        Ok(u32::from_be_bytes(raw))
    }

    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        if self.pos + len > self.bytes.len() {
            return Err(Error::format(format!(
                "{}: truncated body, wanted {len} bytes at offset {}",
                self.name, self.pos
            )));
        }
        let out = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::format(format!(
                "{}: {} trailing bytes",
                self.name,
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

/// Parse raw IDX image bytes into per-image pixel vectors in [0, 1].
pub fn parse_idx_images(bytes: &[u8]) -> Result<Vec<Vec<f64>>> {
    let mut cur = Cursor {
        bytes,
        pos: 0,
        name: "images",
    };
    let magic = cur.u32_be()?;
    if magic != IMAGES_MAGIC {
        return Err(Error::format(format!(
            "images: magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}"
        )));
    }
    let count = cur.u32_be()? as usize;
    let rows = cur.u32_be()? as usize;
    let cols = cur.u32_be()? as usize;
    let dim = rows * cols;
    let mut images = Vec::with_capacity(count);
    for _ in 0..count {
        let raw = cur.take(dim)?;
        images.push(raw.iter().map(|&b| b as f64 / 255.0).collect());
    }
    cur.finish()?;
    Ok(images)
}

/// Parse raw IDX label bytes into class ids.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<usize>> {
    let mut cur = Cursor {
        bytes,
        pos: 0,
        name: "labels",
    };
    let magic = cur.u32_be()?;
    if magic != LABELS_MAGIC {
        return Err(Error::format(format!(
            "labels: magic {magic:#010x}, expected {LABELS_MAGIC:#010x}"
        )));
    }
    let count = cur.u32_be()? as usize;
    let raw = cur.take(count)?;
    let labels = raw.iter().map(|&b| b as usize).collect();
    cur.finish()?;
    Ok(labels)
}

fn pair_to_dataset(images: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Dataset> {
    if images.len() != labels.len() {
        return Err(Error::Consistency(format!(
            "{} images but {} labels",
            images.len(),
            labels.len()
        )));
    }
    // Degenerate single-class files still load: a classification dataset
    // needs at least two classes, so the count is floored at 2.
    let class_count = labels.iter().map(|&c| c + 1).max().unwrap_or(0).max(2);
    let examples = images
        .into_iter()
        .zip(labels)
        .map(|(features, class)| Example::class(features, class))
        .collect();
    Dataset::classification(examples, class_count)
}

/// Load an image/label file pair into a classification dataset.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let images = parse_idx_images(&std::fs::read(images_path)?)?;
    let labels = parse_idx_labels(&std::fs::read(labels_path)?)?;
    pair_to_dataset(images, labels)
}

/// Serialize a classification dataset to IDX image bytes. Features must lie
/// in [0, 1] and fill a rows x cols grid.
pub fn idx_image_bytes(data: &Dataset, rows: usize, cols: usize) -> Result<Vec<u8>> {
    if rows * cols != data.dim() {
        return Err(Error::contract(format!(
            "{rows}x{cols} grid does not match feature dimension {}",
            data.dim()
        )));
    }
    if data.len() > u32::MAX as usize || rows > u32::MAX as usize || cols > u32::MAX as usize {
        return Err(Error::sizing("dataset too large for IDX headers".to_string()));
    }
    let mut bytes = Vec::with_capacity(16 + data.len() * data.dim());
    bytes.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    bytes.extend_from_slice(&(data.len() as u32).to_be_bytes());
    bytes.extend_from_slice(&(rows as u32).to_be_bytes());
    bytes.extend_from_slice(&(cols as u32).to_be_bytes());
    for ex in data.examples() {
        for &v in &ex.features {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::contract(format!("pixel value {v} outside [0, 1]")));
            }
            bytes.push((v * 255.0).round() as u8);
        }
    }
    Ok(bytes)
}

/// Serialize a classification dataset to IDX label bytes.
pub fn idx_label_bytes(data: &Dataset) -> Result<Vec<u8>> {
    let mut bytes = Vec::with_capacity(8 + data.len());
    bytes.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    bytes.extend_from_slice(&(data.len() as u32).to_be_bytes());
    for ex in data.examples() {
        match ex.label {
            crate::dataset::Label::Class(c) => {
                if c > u8::MAX as usize {
                    return Err(Error::contract(format!("class id {c} does not fit a byte")));
                }
                bytes.push(c as u8);
            }
            _ => return Err(Error::contract("IDX labels require classification data".to_string())),
        }
    }
    Ok(bytes)
}

/// Write the image/label pair for a classification dataset.
pub fn write_idx(
    data: &Dataset,
    rows: usize,
    cols: usize,
    images_path: &Path,
    labels_path: &Path,
) -> Result<()> {
    let images = idx_image_bytes(data, rows, cols)?;
    let labels = idx_label_bytes(data)?;
    std::fs::write(images_path, images)?;
    std::fs::write(labels_path, labels)?;
    Ok(())
}
