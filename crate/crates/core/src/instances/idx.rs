//! IDX image and label files (big-endian headers, unsigned byte payloads).

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Images flattened row-major, pixel bytes scaled to `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct IdxImages {
    pub rows: usize,
    pub cols: usize,
    /// `count x (rows * cols)`.
    pub points: Array2<f64>,
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32> {
    let chunk = bytes.get(at..at + 4).ok_or(Error::TruncatedFile {
        needed: at + 4,
        found: bytes.len(),
    })?;
    Ok(u32::from_be_bytes(chunk.try_into().expect("four bytes")))
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<()> {
    let found = read_u32(bytes, 0)?;
    if found != expected {
        return Err(Error::BadMagic { expected, found });
    }
    Ok(())
}

fn payload(bytes: &[u8], header: usize, len: usize) -> Result<&[u8]> {
    let needed = header + len;
    if bytes.len() < needed {
        return Err(Error::TruncatedFile {
            needed,
            found: bytes.len(),
        });
    }
    Ok(&bytes[header..needed])
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    check_magic(bytes, IDX_IMAGES_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    let rows = read_u32(bytes, 8)? as usize;
    let cols = read_u32(bytes, 12)? as usize;
    let dim = rows * cols;
    let body = payload(bytes, 16, count * dim)?;
    let points = Array2::from_shape_vec((count, dim), body.iter().map(|&b| b as f64 / 255.0).collect())
        .map_err(|e| Error::BadParams(e.to_string()))?;
    Ok(IdxImages { rows, cols, points })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    check_magic(bytes, IDX_LABELS_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    Ok(payload(bytes, 8, count)?.to_vec())
}

pub fn load_idx_images(path: impl AsRef<Path>) -> Result<IdxImages> {
    parse_idx_images(&fs::read(path)?)
}

pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    parse_idx_labels(&fs::read(path)?)
}

/// Loads an image file and its label file, checking that the counts agree.
pub fn load_idx_dataset(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<(IdxImages, Vec<u8>)> {
    let img = load_idx_images(images)?;
    let lab = load_idx_labels(labels)?;
    if img.points.nrows() != lab.len() {
        return Err(Error::CountMismatch(img.points.nrows(), lab.len()));
    }
    Ok((img, lab))
}

/// Writes images whose pixels are multiples of `1/255` in `[0, 1]`; other
/// values are rounded to the nearest representable byte.
pub fn write_idx_images(path: impl AsRef<Path>, images: &IdxImages) -> Result<()> {
    let dim = images.rows * images.cols;
    if images.points.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: images.points.ncols(),
        });
    }
    let mut out = Vec::with_capacity(16 + images.points.len());
    out.extend(IDX_IMAGES_MAGIC.to_be_bytes());
    for v in [images.points.nrows(), images.rows, images.cols] {
        out.extend(to_u32(v)?.to_be_bytes());
    }
    out.extend(images.points.iter().map(|&x| (x * 255.0).round().clamp(0.0, 255.0) as u8));
    fs::write(path, out)?;
    Ok(())
}

pub fn write_idx_labels(path: impl AsRef<Path>, labels: &[u8]) -> Result<()> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend(IDX_LABELS_MAGIC.to_be_bytes());
    out.extend(to_u32(labels.len())?.to_be_bytes());
    out.extend_from_slice(labels);
    fs::write(path, out)?;
    Ok(())
}

fn to_u32(v: usize) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::BadParams(format!("{v} does not fit in a 32-bit header field")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_image_file() {
        let bytes = [0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0xFF];
        let img = parse_idx_images(&bytes).unwrap();
        assert_eq!(img.points.dim(), (1, 1));
        assert_eq!(img.points[[0, 0]], 1.0);
    }

    #[test]
    fn wrong_magic() {
        let bytes = [0, 0, 8, 2, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0xFF];
        assert!(matches!(
            parse_idx_images(&bytes),
            Err(Error::BadMagic {
                expected: 0x803,
                found: 0x802
            })
        ));
    }

    #[test]
    fn truncated_body() {
        let bytes = [0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0, 1, 0xFF];
        assert!(matches!(
            parse_idx_images(&bytes),
            Err(Error::TruncatedFile { needed: 18, found: 17 })
        ));
        assert!(matches!(parse_idx_images(&[0, 0]), Err(Error::TruncatedFile { .. })));
    }

    #[test]
    fn labels() {
        assert_eq!(parse_idx_labels(&[0, 0, 8, 1, 0, 0, 0, 2, 7, 3]).unwrap(), vec![7, 3]);
        assert!(matches!(parse_idx_labels(&[0, 0, 8, 3, 0, 0, 0, 0]), Err(Error::BadMagic { .. })));
    }
}
