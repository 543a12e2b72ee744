//! Regression and classification datasets for the activation study.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Regression,
    Classification,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub target: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
    pub task: Task,
}

impl Dataset {
    pub fn input_dim(&self) -> usize {
        self.train.first().or(self.test.first()).map_or(0, |s| s.features.len())
    }

    pub fn output_dim(&self) -> usize {
        self.train.first().or(self.test.first()).map_or(0, |s| s.target.len())
    }
}

pub const FUNCTION_POINTS: usize = 600;
pub const FUNCTION_TRAIN: usize = 420;
pub const FUNCTION_RANGE: (f64, f64) = (-3.0, 3.0);

pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn split_seeded(mut samples: Vec<Sample>, n_train: usize, seed: u64) -> (Vec<Sample>, Vec<Sample>) {
    samples.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = samples.split_off(n_train.min(samples.len()));
    (samples, test)
}

fn function_dataset(name: &str, f: fn(f64) -> f64, seed: u64) -> Dataset {
    let (lo, hi) = FUNCTION_RANGE;
    let step = (hi - lo) / (FUNCTION_POINTS - 1) as f64;
    let samples = (0..FUNCTION_POINTS)
        .map(|i| {
            let x = lo + step * i as f64;
            Sample { features: vec![x], target: vec![f(x)] }
        })
        .collect();
    let (train, test) = split_seeded(samples, FUNCTION_TRAIN, seed);
    Dataset { name: name.into(), train, test, task: Task::Regression }
}

/// 600 evenly spaced points of `sin(x)/x` on [-3, 3], split 420/180 by `seed`.
pub fn make_sinc_dataset(seed: u64) -> Dataset {
    function_dataset("sinc", sinc, seed)
}

/// Same grid and split as [`make_sinc_dataset`] with the logistic sigmoid.
pub fn make_sigmoid_dataset(seed: u64) -> Dataset {
    function_dataset("sigmoid", logistic, seed)
}

fn one_hot(class: usize, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[class] = 1.0;
    v
}

// ---------------------------------------------------------------- MNIST

pub const MNIST_TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const MNIST_TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const MNIST_TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const MNIST_TEST_LABELS: &str = "t10k-labels-idx1-ubyte";
pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;
pub const MNIST_DEFAULT_TRAIN_PER_CLASS: usize = 500;

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn format_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Format { path: path.to_path_buf(), msg: msg.into() }
}

fn be_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_be_bytes(bytes[at..at + 4].try_into().unwrap())
}

/// Parsed IDX image file: `count` images of `rows x cols` bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct IdxImages {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn count(&self) -> usize {
        self.pixels.len() / (self.rows * self.cols).max(1)
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let n = self.rows * self.cols;
        &self.pixels[i * n..(i + 1) * n]
    }
}

pub fn parse_idx_images(bytes: &[u8], path: &Path) -> Result<IdxImages> {
    if bytes.len() < 16 {
        return Err(format_err(path, "truncated IDX header"));
    }
    let magic = be_u32(bytes, 0);
    if magic != IDX_IMAGES_MAGIC {
        return Err(format_err(path, format!("image magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}")));
    }
    let (count, rows, cols) = (be_u32(bytes, 4) as usize, be_u32(bytes, 8) as usize, be_u32(bytes, 12) as usize);
    let body = &bytes[16..];
    if body.len() != count * rows * cols {
        return Err(format_err(
            path,
            format!("header declares {count}x{rows}x{cols} pixels, file holds {}", body.len()),
        ));
    }
    Ok(IdxImages { rows, cols, pixels: body.to_vec() })
}

pub fn parse_idx_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    if bytes.len() < 8 {
        return Err(format_err(path, "truncated IDX header"));
    }
    let magic = be_u32(bytes, 0);
    if magic != IDX_LABELS_MAGIC {
        return Err(format_err(path, format!("label magic {magic:#010x}, expected {IDX_LABELS_MAGIC:#010x}")));
    }
    let count = be_u32(bytes, 4) as usize;
    let body = &bytes[8..];
    if body.len() != count {
        return Err(format_err(path, format!("header declares {count} labels, file holds {}", body.len())));
    }
    if let Some(bad) = body.iter().find(|&&l| l > 9) {
        return Err(format_err(path, format!("label {bad} outside 0..=9")));
    }
    Ok(body.to_vec())
}

fn mnist_split(dir: &Path, images: &str, labels: &str, per_class: usize) -> Result<Vec<Sample>> {
    let ipath = dir.join(images);
    let lpath = dir.join(labels);
    let imgs = parse_idx_images(&read_file(&ipath)?, &ipath)?;
    let lbls = parse_idx_labels(&read_file(&lpath)?, &lpath)?;
    if imgs.count() != lbls.len() {
        return Err(format_err(&lpath, format!("{} labels for {} images", lbls.len(), imgs.count())));
    }
    let mut taken = [0usize; 10];
    let mut out = Vec::new();
    for (i, &label) in lbls.iter().enumerate() {
        let c = label as usize;
        if per_class > 0 && taken[c] >= per_class {
            continue;
        }
        taken[c] += 1;
        let features = imgs.image(i).iter().map(|&p| p as f64 / 255.0).collect();
        out.push(Sample { features, target: one_hot(c, 10) });
    }
    Ok(out)
}

/// Loads the four standard IDX files from `dir`. A non-zero
/// `subset_per_class` keeps the first that many training images of each
/// digit and a fifth as many test images; zero keeps both full sets.
pub fn load_mnist(dir: impl AsRef<Path>, subset_per_class: usize) -> Result<Dataset> {
    let dir = dir.as_ref();
    let test_per_class = if subset_per_class == 0 { 0 } else { subset_per_class.div_ceil(5) };
    let train = mnist_split(dir, MNIST_TRAIN_IMAGES, MNIST_TRAIN_LABELS, subset_per_class)?;
    let test = mnist_split(dir, MNIST_TEST_IMAGES, MNIST_TEST_LABELS, test_per_class)?;
    Ok(Dataset { name: "mnist".into(), train, test, task: Task::Classification })
}

// --------------------------------------------------------------- Cancer

pub const CANCER_FILE: &str = "breast-cancer-wisconsin.data";
pub const CANCER_FEATURES: usize = 9;
pub const CANCER_TRAIN_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPolicy {
    /// Replace each `?` with the median of its column.
    #[default]
    ImputeMedian,
    DropRow,
}

pub fn load_cancer(path: impl AsRef<Path>, split_seed: u64) -> Result<Dataset> {
    load_cancer_with(path, split_seed, MissingPolicy::default())
}

/// Parses UCI breast-cancer records `id, 9 attributes in 1..=10, class 2|4`.
/// Attributes map to `(v - 1) / 9`; classes become a 2-way one-hot.
pub fn load_cancer_with(path: impl AsRef<Path>, split_seed: u64, policy: MissingPolicy) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let mut rows: Vec<([Option<f64>; CANCER_FEATURES], usize)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let at = |msg: String| format_err(path, format!("line {}: {msg}", lineno + 1));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != CANCER_FEATURES + 2 {
            return Err(at(format!("{} fields, expected {}", fields.len(), CANCER_FEATURES + 2)));
        }
        let mut attrs = [None; CANCER_FEATURES];
        for (slot, field) in attrs.iter_mut().zip(&fields[1..=CANCER_FEATURES]) {
            if *field == "?" {
                continue;
            }
            let v: f64 = field.parse().map_err(|_| at(format!("attribute {field:?} is not numeric")))?;
            if !(1.0..=10.0).contains(&v) {
                return Err(at(format!("attribute {v} outside 1..=10")));
            }
            *slot = Some((v - 1.0) / 9.0);
        }
        let class = match fields[CANCER_FEATURES + 1] {
            "2" => 0,
            "4" => 1,
            other => return Err(at(format!("class {other:?}, expected 2 or 4"))),
        };
        rows.push((attrs, class));
    }

    let incomplete = rows.iter().filter(|(a, _)| a.iter().any(Option::is_none)).count();
    if incomplete > 0 {
        log::info!("{}: {incomplete} records with missing attributes ({policy:?})", path.display());
    }
    let medians: Vec<f64> = (0..CANCER_FEATURES)
        .map(|k| {
            let mut col: Vec<f64> = rows.iter().filter_map(|(a, _)| a[k]).collect();
            col.sort_by(f64::total_cmp);
            match col.len() {
                0 => 0.0,
                n if n % 2 == 1 => col[n / 2],
                n => 0.5 * (col[n / 2 - 1] + col[n / 2]),
            }
        })
        .collect();

    let samples: Vec<Sample> = rows
        .into_iter()
        .filter(|(a, _)| policy == MissingPolicy::ImputeMedian || a.iter().all(Option::is_some))
        .map(|(a, class)| Sample {
            features: a.iter().zip(&medians).map(|(v, m)| v.unwrap_or(*m)).collect(),
            target: one_hot(class, 2),
        })
        .collect();
    if samples.is_empty() {
        return Err(format_err(path, "no usable records"));
    }
    let n_train = (samples.len() as f64 * CANCER_TRAIN_FRACTION).round() as usize;
    let (train, test) = split_seeded(samples, n_train, split_seed);
    Ok(Dataset { name: "cancer".into(), train, test, task: Task::Classification })
}

pub fn cancer_path(dir: &Path) -> PathBuf {
    dir.join(CANCER_FILE)
}
