//! Labeled test sets: CSV text and the MNIST IDX binary pair.

use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("row {row}: {msg}")]
    Csv { row: usize, msg: String },
    #[error("bad IDX file: {0}")]
    Idx(String),
    #[error("dataset is empty")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// 0-based position in the dataset.
    pub id: usize,
    pub label: i64,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Csv,
    Idx,
}

fn read(path: &Path) -> Result<Vec<u8>, DatasetError> {
    std::fs::read(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// One sample per row: an integer label, then the features. Features must
/// lie in `range` when one is given.
pub fn parse_csv(text: &[u8], range: Option<(f64, f64)>) -> Result<Vec<Sample>, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text);
    let mut out: Vec<Sample> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 1;
        let rec = rec.map_err(|e| DatasetError::Csv {
            row,
            msg: e.to_string(),
        })?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        let bad = |msg: String| DatasetError::Csv { row, msg };
        let label: i64 = rec[0]
            .parse()
            .map_err(|_| bad(format!("label '{}' is not an integer", &rec[0])))?;
        let features = rec
            .iter()
            .skip(1)
            .map(|f| match f.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(bad(format!("'{f}' is not a finite number"))),
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if let Some(first) = out.first() {
            if features.len() != first.features.len() {
                return Err(bad(format!(
                    "{} features, previous rows have {}",
                    features.len(),
                    first.features.len()
                )));
            }
        }
        if let Some((lo, hi)) = range {
            if let Some(v) = features.iter().find(|v| **v < lo || **v > hi) {
                return Err(bad(format!("feature {v} outside [{lo}, {hi}]")));
            }
        }
        out.push(Sample {
            id: out.len(),
            label,
            features,
        });
    }
    if out.is_empty() {
        return Err(DatasetError::Empty);
    }
    Ok(out)
}

pub fn load_csv(
    path: impl AsRef<Path>,
    range: Option<(f64, f64)>,
) -> Result<Vec<Sample>, DatasetError> {
    parse_csv(&read(path.as_ref())?, range)
}

fn be_u32(b: &[u8], at: usize) -> Result<u32, DatasetError> {
    b.get(at..at + 4)
        .map(|s| u32::from_be_bytes([s[0], s[1], s[2], s[3]]))
        .ok_or_else(|| DatasetError::Idx("truncated header".into()))
}

/// Decodes an images file (magic `0x00000803`) and a labels file (magic
/// `0x00000801`). Pixels are scaled to `[0, 1]` by `1/255`.
pub fn parse_idx(images: &[u8], labels: &[u8]) -> Result<Vec<Sample>, DatasetError> {
    let magic = be_u32(images, 0)?;
    if magic != 0x0000_0803 {
        return Err(DatasetError::Idx(format!(
            "image magic {magic:#010x}, expected 0x00000803"
        )));
    }
    let magic = be_u32(labels, 0)?;
    if magic != 0x0000_0801 {
        return Err(DatasetError::Idx(format!(
            "label magic {magic:#010x}, expected 0x00000801"
        )));
    }
    let count = be_u32(images, 4)? as usize;
    let rows = be_u32(images, 8)? as usize;
    let cols = be_u32(images, 12)? as usize;
    let n_labels = be_u32(labels, 4)? as usize;
    if count != n_labels {
        return Err(DatasetError::Idx(format!(
            "{count} images but {n_labels} labels"
        )));
    }
    let size = rows
        .checked_mul(cols)
        .and_then(|d| d.checked_mul(count).map(|t| (d, t)));
    let Some((dim, total)) = size else {
        return Err(DatasetError::Idx("header dimensions overflow".into()));
    };
    let pixels = &images[16..];
    let lab = &labels[8..];
    if pixels.len() != total || lab.len() != count {
        return Err(DatasetError::Idx(
            "payload size does not match header".into(),
        ));
    }
    if count == 0 {
        return Err(DatasetError::Empty);
    }
    Ok(pixels
        .chunks_exact(dim.max(1))
        .zip(lab)
        .enumerate()
        .map(|(id, (px, &l))| Sample {
            id,
            label: i64::from(l),
            features: px.iter().map(|&p| f64::from(p) / 255.0).collect(),
        })
        .collect())
}

/// Guesses the labels file next to an images file
/// (`t10k-images-idx3-ubyte` → `t10k-labels-idx1-ubyte`).
pub fn idx_labels_path(images: &Path) -> Option<PathBuf> {
    let name = images.file_name()?.to_str()?;
    let guess = name.replace("images", "labels").replace("idx3", "idx1");
    (guess != name).then(|| images.with_file_name(guess))
}

pub fn load_idx(
    images: impl AsRef<Path>,
    labels: impl AsRef<Path>,
) -> Result<Vec<Sample>, DatasetError> {
    parse_idx(&read(images.as_ref())?, &read(labels.as_ref())?)
}
