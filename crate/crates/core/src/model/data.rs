//! IDX dataset loading.
//!
//! Reads the standard uncompressed IDX distribution files: big-endian magic,
//! dimension sizes, then raw u8 payload. Image samples are normalized by 255
//! on load.

use std::fs;
use std::path::Path;

use byteorder::{BigEndian, ByteOrder};

use crate::error::{Error, Result};
use crate::grid::Grid;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

/// Load an `idx3-ubyte` image file into grids with values in [0, 1].
pub fn load_idx_images(path: impl AsRef<Path>) -> Result<Vec<Grid>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 16 {
        return Err(Error::format("IDX", path, "file shorter than header"));
    }
    let magic = BigEndian::read_u32(&bytes[0..4]);
    if magic != IMAGES_MAGIC {
        return Err(Error::format(
            "IDX",
            path,
            format!("bad image magic {magic:#010x}"),
        ));
    }
    let count = BigEndian::read_u32(&bytes[4..8]) as usize;
    let rows = BigEndian::read_u32(&bytes[8..12]) as usize;
    let cols = BigEndian::read_u32(&bytes[12..16]) as usize;
    let expected = 16 + count * rows * cols;
    if bytes.len() != expected {
        return Err(Error::format(
            "IDX",
            path,
            format!("expected {expected} bytes, found {}", bytes.len()),
        ));
    }
    let mut images = Vec::with_capacity(count);
    for i in 0..count {
        let start = 16 + i * rows * cols;
        let values = bytes[start..start + rows * cols]
            .iter()
            .map(|b| *b as f64 / 255.0)
            .collect();
        images.push(Grid::from_values(rows, cols, values)?);
    }
    Ok(images)
}

/// Load an `idx1-ubyte` label file.
pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 8 {
        return Err(Error::format("IDX", path, "file shorter than header"));
    }
    let magic = BigEndian::read_u32(&bytes[0..4]);
    if magic != LABELS_MAGIC {
        return Err(Error::format(
            "IDX",
            path,
            format!("bad label magic {magic:#010x}"),
        ));
    }
    let count = BigEndian::read_u32(&bytes[4..8]) as usize;
    if bytes.len() != 8 + count {
        return Err(Error::format(
            "IDX",
            path,
            format!("expected {} bytes, found {}", 8 + count, bytes.len()),
        ));
    }
    Ok(bytes[8..].iter().map(|b| *b as usize).collect())
}

/// A labeled image collection.
#[derive(Debug, Clone)]
pub struct Dataset {
    images: Vec<Grid>,
    labels: Vec<usize>,
    num_classes: usize,
}

impl Dataset {
    pub fn new(images: Vec<Grid>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if images.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if images.len() != labels.len() {
            return Err(Error::InvalidConfig(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        for &label in &labels {
            if label >= num_classes {
                return Err(Error::InvalidLabel { label, num_classes });
            }
        }
        Ok(Dataset {
            images,
            labels,
            num_classes,
        })
    }

    pub fn from_idx(
        images_path: impl AsRef<Path>,
        labels_path: impl AsRef<Path>,
        num_classes: usize,
    ) -> Result<Self> {
        let images = load_idx_images(images_path)?;
        let labels = load_idx_labels(labels_path)?;
        Dataset::new(images, labels, num_classes)
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn image(&self, i: usize) -> &Grid {
        &self.images[i]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn images(&self) -> &[Grid] {
        &self.images
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// New dataset holding the first `n` samples (or all, if fewer).
    pub fn take(&self, n: usize) -> Result<Dataset> {
        let n = n.min(self.len());
        Dataset::new(
            self.images[..n].to_vec(),
            self.labels[..n].to_vec(),
            self.num_classes,
        )
    }

    /// Split off the trailing `n` samples: returns (head, tail).
    pub fn split_tail(&self, n: usize) -> Result<(Dataset, Dataset)> {
        if n == 0 || n >= self.len() {
            return Err(Error::InvalidConfig(format!(
                "cannot split {n} samples off a dataset of {}",
                self.len()
            )));
        }
        let at = self.len() - n;
        let head = Dataset::new(
            self.images[..at].to_vec(),
            self.labels[..at].to_vec(),
            self.num_classes,
        )?;
        let tail = Dataset::new(
            self.images[at..].to_vec(),
            self.labels[at..].to_vec(),
            self.num_classes,
        )?;
        Ok((head, tail))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;
    use tempfile::tempdir;

    pub(crate) fn write_idx_images(path: &Path, images: &[Vec<u8>], rows: usize, cols: usize) {
        let mut f = fs::File::create(path).unwrap();
        f.write_all(&IMAGES_MAGIC.to_be_bytes()).unwrap();
        f.write_all(&(images.len() as u32).to_be_bytes()).unwrap();
        f.write_all(&(rows as u32).to_be_bytes()).unwrap();
        f.write_all(&(cols as u32).to_be_bytes()).unwrap();
        for img in images {
            assert_eq!(img.len(), rows * cols);
            f.write_all(img).unwrap();
        }
    }

    pub(crate) fn write_idx_labels(path: &Path, labels: &[u8]) {
        let mut f = fs::File::create(path).unwrap();
        f.write_all(&LABELS_MAGIC.to_be_bytes()).unwrap();
        f.write_all(&(labels.len() as u32).to_be_bytes()).unwrap();
        f.write_all(labels).unwrap();
    }

    #[test]
    fn idx_round_trip() {
        let dir = tempdir().unwrap();
        let img_path = dir.path().join("imgs");
        let lbl_path = dir.path().join("lbls");
        write_idx_images(&img_path, &[vec![0, 128, 255, 51], vec![1, 2, 3, 4]], 2, 2);
        write_idx_labels(&lbl_path, &[3, 7]);
        let ds = Dataset::from_idx(&img_path, &lbl_path, 10).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.label(1), 7);
        assert_eq!(ds.image(0).get(0, 1), 128.0 / 255.0);
        assert_eq!(ds.image(0).get(1, 0), 1.0);
    }

    #[test]
    fn idx_rejects_bad_magic_and_truncation() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad");
        fs::write(&path, [0u8; 20]).unwrap();
        assert!(load_idx_images(&path).is_err());

        let img_path = dir.path().join("trunc");
        write_idx_images(&img_path, &[vec![0; 4]], 2, 2);
        let mut bytes = fs::read(&img_path).unwrap();
        bytes.truncate(bytes.len() - 1);
        fs::write(&img_path, bytes).unwrap();
        assert!(load_idx_images(&img_path).is_err());
    }

    #[test]
    fn dataset_rejects_label_out_of_range() {
        let images = vec![Grid::zeros(2, 2)];
        assert!(Dataset::new(images, vec![4], 3).is_err());
    }
}
