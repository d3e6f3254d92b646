//! MNIST IDX files.
//!
//! An IDX file is a big-endian magic `0x0000TTDD` (element type `TT`, rank
//! `DD`), `DD` big-endian u32 dimension sizes, then the payload. Only
//! unsigned-byte vectors (`0x00000801`) and 3-D arrays (`0x00000803`) are
//! accepted, which covers the label and image files.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;

pub const IMAGE_SIDE: usize = 28;
pub const IMAGE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;
pub const NUM_CLASSES: usize = 10;

const MAGIC_U8_VECTOR: u32 = 0x0000_0801;
const MAGIC_U8_CUBE: u32 = 0x0000_0803;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IdxError {
    #[error("bad IDX magic {0:#010x}: leading bytes must be zero")]
    BadMagic(u32),
    #[error("unsupported element type or rank (magic {0:#010x}); expected 0x00000801 or 0x00000803")]
    UnsupportedElementType(u32),
    #[error("truncated IDX file: header needs {needed} bytes, have {have}")]
    TruncatedHeader { needed: usize, have: usize },
    #[error("IDX payload is {have} bytes, dimensions require {needed}")]
    PayloadLength { needed: usize, have: usize },
    #[error("IDX dimensions {0:?} overflow the addressable size")]
    DimensionOverflow(Vec<u32>),
}

/// An unsigned-byte tensor read from an IDX file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxTensor {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

pub fn parse_idx(bytes: &[u8]) -> Result<IdxTensor, IdxError> {
    if bytes.len() < 4 {
        return Err(IdxError::TruncatedHeader { needed: 4, have: bytes.len() });
    }
    let magic = u32::from_be_bytes(bytes[0..4].try_into().expect("4 bytes"));
    if magic >> 16 != 0 {
        return Err(IdxError::BadMagic(magic));
    }
    let rank = match magic {
        MAGIC_U8_VECTOR => 1,
        MAGIC_U8_CUBE => 3,
        other => return Err(IdxError::UnsupportedElementType(other)),
    };
    let header = 4 + 4 * rank;
    if bytes.len() < header {
        return Err(IdxError::TruncatedHeader { needed: header, have: bytes.len() });
    }
    let raw: Vec<u32> = bytes[4..header]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes(c.try_into().expect("4 bytes")))
        .collect();
    let total = raw
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
        .filter(|&t| t <= isize::MAX as usize)
        .ok_or_else(|| IdxError::DimensionOverflow(raw.clone()))?;
    let payload = &bytes[header..];
    if payload.len() != total {
        return Err(IdxError::PayloadLength { needed: total, have: payload.len() });
    }
    Ok(IdxTensor {
        dims: raw.iter().map(|&d| d as usize).collect(),
        data: payload.to_vec(),
    })
}

/// Inverse of [`parse_idx`] for rank 1 or 3.
pub fn serialize_idx(t: &IdxTensor) -> Vec<u8> {
    let magic = match t.dims.len() {
        1 => MAGIC_U8_VECTOR,
        3 => MAGIC_U8_CUBE,
        r => panic!("IDX serialization supports rank 1 or 3, got {r}"),
    };
    let mut out = Vec::with_capacity(4 + 4 * t.dims.len() + t.data.len());
    out.extend_from_slice(&magic.to_be_bytes());
    for &d in &t.dims {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    out.extend_from_slice(&t.data);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn prefix(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "t10k",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("missing MNIST file: none of {0:?} exists")]
    MissingFile(Vec<PathBuf>),
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing {path}: {source}")]
    Idx { path: PathBuf, source: IdxError },
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("image files must be N×28×28, got {0:?}")]
    ImageShape(Vec<usize>),
    #[error("label files must be one-dimensional, got {0:?}")]
    LabelShape(Vec<usize>),
    #[error("label {label} at index {index} is not a digit")]
    BadLabel { index: usize, label: u8 },
}

/// Images scaled to [0, 1] and their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Row-major `[n, 784]`.
    pub images: Vec<f64>,
    pub labels: Vec<u8>,
    pub split: Split,
}

impl Dataset {
    pub fn from_idx(images: &IdxTensor, labels: &IdxTensor, split: Split) -> Result<Self, DataError> {
        if images.dims.len() != 3 || images.dims[1] != IMAGE_SIDE || images.dims[2] != IMAGE_SIDE {
            return Err(DataError::ImageShape(images.dims.clone()));
        }
        if labels.dims.len() != 1 {
            return Err(DataError::LabelShape(labels.dims.clone()));
        }
        if images.dims[0] != labels.dims[0] {
            return Err(DataError::CountMismatch { images: images.dims[0], labels: labels.dims[0] });
        }
        if let Some((index, &label)) = labels.data.iter().enumerate().find(|(_, &l)| l as usize >= NUM_CLASSES) {
            return Err(DataError::BadLabel { index, label });
        }
        Ok(Self {
            images: images.data.iter().map(|&p| p as f64 / 255.0).collect(),
            labels: labels.data.clone(),
            split,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[f64] {
        &self.images[i * IMAGE_PIXELS..(i + 1) * IMAGE_PIXELS]
    }

    /// First `n` examples (all if `n` exceeds the size).
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            images: self.images[..n * IMAGE_PIXELS].to_vec(),
            labels: self.labels[..n].to_vec(),
            split: self.split,
        }
    }
}

fn candidates(dir: &Path, split: Split, kind: &str) -> Vec<PathBuf> {
    let p = split.prefix();
    let rank = if kind == "images" { "idx3" } else { "idx1" };
    let stems = [format!("{p}-{kind}-{rank}-ubyte"), format!("{p}-{kind}.{rank}-ubyte")];
    stems
        .iter()
        .flat_map(|s| [dir.join(s), dir.join(format!("{s}.gz"))])
        .collect()
}

fn read_idx_file(dir: &Path, split: Split, kind: &str) -> Result<IdxTensor, DataError> {
    let options = candidates(dir, split, kind);
    let path = options.iter().find(|p| p.is_file()).cloned().ok_or(DataError::MissingFile(options))?;
    let io = |source| DataError::Io { path: path.clone(), source };
    let raw = fs::read(&path).map_err(io)?;
    let bytes = if path.extension().is_some_and(|e| e == "gz") {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice()).read_to_end(&mut out).map_err(io)?;
        out
    } else {
        raw
    };
    parse_idx(&bytes).map_err(|source| DataError::Idx { path, source })
}

/// Loads one split from `dir`, accepting the canonical file names with or
/// without a `.gz` suffix.
pub fn load_dataset(dir: &Path, split: Split) -> Result<Dataset, DataError> {
    let images = read_idx_file(dir, split, "images")?;
    let labels = read_idx_file(dir, split, "labels")?;
    Dataset::from_idx(&images, &labels, split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_hand_built_cube() {
        let mut bytes = vec![0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2];
        bytes.extend(0u8..8);
        let t = parse_idx(&bytes).unwrap();
        assert_eq!(t.dims, vec![2, 2, 2]);
        // [[0,1],[2,3]], [[4,5],[6,7]] in row-major order
        assert_eq!(t.data, (0u8..8).collect::<Vec<_>>());
        assert_eq!(t.data[1 * 4 + 0 * 2 + 1], 5);
    }

    #[test]
    fn rejects_unsupported_and_malformed() {
        let two_d = [0, 0, 8, 2, 0, 0, 0, 1, 0, 0, 0, 1, 9];
        let e = parse_idx(&two_d).unwrap_err();
        assert_eq!(e, IdxError::UnsupportedElementType(0x0000_0802));
        assert!(e.to_string().contains("unsupported element type"));
        assert!(matches!(parse_idx(&[1, 0, 8, 1, 0, 0, 0, 0]), Err(IdxError::BadMagic(_))));
        assert!(matches!(parse_idx(&[0, 0, 8]), Err(IdxError::TruncatedHeader { .. })));
        assert!(matches!(parse_idx(&[0, 0, 8, 3, 0, 0, 0, 1]), Err(IdxError::TruncatedHeader { .. })));
        assert!(matches!(
            parse_idx(&[0, 0, 8, 1, 0, 0, 0, 3, 1, 2]),
            Err(IdxError::PayloadLength { needed: 3, have: 2 })
        ));
        let huge = [0, 0, 8, 3, 255, 255, 255, 255, 255, 255, 255, 255, 255, 255, 255, 255];
        assert!(matches!(parse_idx(&huge), Err(IdxError::DimensionOverflow(_))));
    }

    #[test]
    fn dataset_checks() {
        let images = IdxTensor { dims: vec![2, 28, 28], data: vec![255; 2 * 784] };
        let labels = IdxTensor { dims: vec![2], data: vec![3, 9] };
        let d = Dataset::from_idx(&images, &labels, Split::Test).unwrap();
        assert_eq!(d.len(), 2);
        assert!(d.images.iter().all(|&p| p == 1.0));
        let short = IdxTensor { dims: vec![1], data: vec![3] };
        assert!(matches!(
            Dataset::from_idx(&images, &short, Split::Test),
            Err(DataError::CountMismatch { images: 2, labels: 1 })
        ));
        let bad = IdxTensor { dims: vec![2], data: vec![3, 10] };
        assert!(matches!(Dataset::from_idx(&images, &bad, Split::Test), Err(DataError::BadLabel { index: 1, .. })));
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(n in 0usize..4, a in 0usize..5, b in 0usize..5, cube in any::<bool>(), seed in any::<u8>()) {
            let dims = if cube { vec![n, a, b] } else { vec![n * a] };
            let len: usize = dims.iter().product();
            let data: Vec<u8> = (0..len).map(|i| (i as u8).wrapping_mul(31).wrapping_add(seed)).collect();
            let t = IdxTensor { dims, data };
            prop_assert_eq!(parse_idx(&serialize_idx(&t)).unwrap(), t);
        }
    }
}
