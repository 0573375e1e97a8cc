//! Dataset loading, train/validation splitting and the corruption operators
//! used for denoising and imputation experiments.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// IDX magic for a 3-D unsigned-byte tensor (images × rows × columns).
pub const IDX3_UBYTE: u32 = 0x0000_0803;
/// IDX magic for a 2-D unsigned-byte tensor (instances × features).
pub const IDX2_UBYTE: u32 = 0x0000_0802;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImageShape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl ImageShape {
    pub fn len(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl std::fmt::Display for ImageShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.height, self.width, self.channels)
    }
}

impl std::str::FromStr for ImageShape {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let dims: Vec<usize> = s
            .split('x')
            .map(|d| d.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| format!("bad image shape '{s}' (expected HxW or HxWxC)"))?;
        match dims[..] {
            [height, width] => Ok(ImageShape {
                height,
                width,
                channels: 1,
            }),
            [height, width, channels] => Ok(ImageShape {
                height,
                width,
                channels,
            }),
            _ => Err(format!("bad image shape '{s}' (expected HxW or HxWxC)")),
        }
    }
}

/// Row-major feature matrix with every value in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    rows: usize,
    n_features: usize,
    pub train_idx: Vec<usize>,
    pub valid_idx: Vec<usize>,
    /// Layout of each row when it is an image; channels are stored planar.
    pub image_shape: Option<ImageShape>,
}

impl Dataset {
    /// Builds a dataset from row-major values, all assigned to training.
    pub fn from_rows(features: Vec<f64>, n_features: usize) -> Result<Self> {
        if n_features == 0 || features.is_empty() || !features.len().is_multiple_of(n_features) {
            return Err(Error::InvalidConfig(format!(
                "{} values cannot form rows of {n_features} features",
                features.len()
            )));
        }
        if let Some(v) = features.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidConfig(format!("feature value {v} outside [0, 1]")));
        }
        let rows = features.len() / n_features;
        Ok(Dataset {
            features,
            rows,
            n_features,
            train_idx: (0..rows).collect(),
            valid_idx: Vec::new(),
            image_shape: None,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + Clone {
        self.features.chunks_exact(self.n_features)
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    /// Uniformly random partition with ⌊ratio · rows⌋ training rows.
    pub fn split<R: Rng + ?Sized>(mut self, ratio: f64, rng: &mut R) -> Result<Self> {
        if !(0.0..=1.0).contains(&ratio) {
            return Err(Error::InvalidConfig(format!("split ratio {ratio} outside [0, 1]")));
        }
        let mut idx: Vec<usize> = (0..self.rows).collect();
        idx.shuffle(rng);
        let n_train = (ratio * self.rows as f64).floor() as usize;
        self.valid_idx = idx.split_off(n_train);
        self.train_idx = idx;
        Ok(self)
    }
}

/// Loads either format, picking IDX when the file starts with an IDX
/// unsigned-byte magic number and CSV otherwise.
pub fn load(path: &Path, has_label_column: bool) -> Result<Dataset> {
    let bytes = fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    if bytes.len() >= 4 && bytes[0] == 0 && bytes[1] == 0 && bytes[2] == 0x08 {
        parse_idx(path, &bytes)
    } else {
        let text = String::from_utf8(bytes).map_err(|_| Error::data(path, "not UTF-8 text or IDX"))?;
        parse_csv(path, &text, has_label_column)
    }
}

/// Loads a comma-separated numeric file. A first line containing any
/// non-numeric cell is treated as a header. With `has_label_column` the last
/// column is dropped. Values are mapped into [0, 1]: data already in range
/// passes through, non-negative data is divided by its global maximum and
/// data with negatives is min-max scaled.
pub fn load_csv(path: &Path, has_label_column: bool) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse_csv(path, &text, has_label_column)
}

fn parse_csv(path: &Path, text: &str, has_label_column: bool) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    let mut width = None;
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::data(path, e.to_string()))?;
        let row = record.position().map_or(k + 1, |p| p.line() as usize);
        if k == 0 && record.iter().any(|c| c.parse::<f64>().is_err()) {
            continue;
        }
        let cells = record.len() - usize::from(has_label_column && !record.is_empty());
        match width {
            None => width = Some(cells),
            Some(w) if w != cells => {
                return Err(Error::Parse {
                    path: path.into(),
                    row,
                    column: cells.min(w) + 1,
                    message: format!("expected {w} feature columns, found {cells}"),
                })
            }
            _ => {}
        }
        for (col, cell) in record.iter().take(cells).enumerate() {
            let bad = |message: String| Error::Parse {
                path: path.into(),
                row,
                column: col + 1,
                message,
            };
            let v: f64 = cell.parse().map_err(|_| bad(format!("'{cell}' is not a number")))?;
            if !v.is_finite() {
                return Err(bad("non-finite value".into()));
            }
            values.push(v);
        }
    }
    let n = match width {
        Some(w) if w > 0 && !values.is_empty() => w,
        _ => return Err(Error::data(path, "no data rows")),
    };
    scale_unit(&mut values);
    Dataset::from_rows(values, n).map_err(|e| Error::data(path, e.to_string()))
}

fn scale_unit(values: &mut [f64]) {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min >= 0.0 && max <= 1.0 {
        return;
    }
    if min >= 0.0 {
        values.iter_mut().for_each(|v| *v /= max);
    } else {
        let span = max - min;
        values.iter_mut().for_each(|v| *v = (*v - min) / span);
    }
}

/// Loads an IDX unsigned-byte tensor (3-D images or 2-D rows), scaling
/// every byte by 1/255.
pub fn load_idx(path: &Path) -> Result<Dataset> {
    let bytes = fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse_idx(path, &bytes)
}

fn parse_idx(path: &Path, bytes: &[u8]) -> Result<Dataset> {
    let word = |k: usize| -> Result<usize> {
        bytes
            .get(4 * k..4 * k + 4)
            .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]) as usize)
            .ok_or_else(|| Error::data(path, "truncated IDX header"))
    };
    let magic = word(0)? as u32;
    let (rows, shape) = match magic {
        IDX3_UBYTE => {
            let (n, h, w) = (word(1)?, word(2)?, word(3)?);
            (
                n,
                Some(ImageShape {
                    height: h,
                    width: w,
                    channels: 1,
                }),
            )
        }
        IDX2_UBYTE => (word(1)?, None),
        other => return Err(Error::data(path, format!("unsupported IDX magic 0x{other:08x}"))),
    };
    let header = if shape.is_some() { 16 } else { 12 };
    let n_features = match shape {
        Some(s) => s.len(),
        None => word(2)?,
    };
    let expected = rows
        .checked_mul(n_features)
        .and_then(|v| v.checked_add(header))
        .ok_or_else(|| Error::data(path, "IDX dimensions overflow"))?;
    if bytes.len() != expected {
        return Err(Error::data(
            path,
            format!("IDX payload holds {} bytes, header implies {}", bytes.len(), expected),
        ));
    }
    let values: Vec<f64> = bytes[header..].iter().map(|&b| b as f64 / 255.0).collect();
    let mut ds = Dataset::from_rows(values, n_features).map_err(|e| Error::data(path, e.to_string()))?;
    ds.image_shape = shape;
    Ok(ds)
}

/// Sets round(fraction · n) distinct positions to 0 or 1 with equal
/// probability.
pub fn salt_pepper<R: Rng + ?Sized>(x: &[f64], fraction: f64, rng: &mut R) -> Vec<f64> {
    let mut out = x.to_vec();
    let count = ((fraction.clamp(0.0, 1.0) * x.len() as f64).round() as usize).min(x.len());
    for i in rand::seq::index::sample(rng, x.len(), count) {
        out[i] = if rng.random::<bool>() { 1.0 } else { 0.0 };
    }
    out
}

/// Side-length range of a cutout rectangle, as fractions of the image side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoutSpec {
    pub min_frac: f64,
    pub max_frac: f64,
}

impl Default for CutoutSpec {
    fn default() -> Self {
        CutoutSpec {
            min_frac: 0.25,
            max_frac: 0.5,
        }
    }
}

/// Zeroes a random axis-aligned rectangle (across every channel).
pub fn cutout<R: Rng + ?Sized>(
    x: &[f64],
    shape: Option<ImageShape>,
    spec: CutoutSpec,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let shape = shape.ok_or(Error::MissingImageShape)?;
    if shape.len() != x.len() {
        return Err(Error::Dimension {
            expected: shape.len(),
            found: x.len(),
        });
    }
    let side = |n: usize, rng: &mut R| -> usize {
        let lo = (spec.min_frac * n as f64).round() as usize;
        let hi = ((spec.max_frac * n as f64).round() as usize).max(lo).min(n);
        rng.random_range(lo..=hi)
    };
    let h = side(shape.height, rng);
    let w = side(shape.width, rng);
    let top = rng.random_range(0..=shape.height - h);
    let left = rng.random_range(0..=shape.width - w);
    Ok(cutout_rect(x, shape, top, left, h, w))
}

/// Zeroes the rectangle with corner (top, left) and size h × w.
pub fn cutout_rect(x: &[f64], shape: ImageShape, top: usize, left: usize, h: usize, w: usize) -> Vec<f64> {
    let mut out = x.to_vec();
    let plane = shape.height * shape.width;
    for c in 0..shape.channels {
        for r in top..(top + h).min(shape.height) {
            for col in left..(left + w).min(shape.width) {
                out[c * plane + r * shape.width + col] = 0.0;
            }
        }
    }
    out
}
