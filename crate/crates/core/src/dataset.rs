//! Dataset ingestion, stratified splitting and train-only standardization.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Bytes per CIFAR-10 binary record: one label byte and 3x32x32 pixels.
pub const CIFAR_RECORD_BYTES: usize = 1 + CIFAR_PIXELS;
const CIFAR_PIXELS: usize = 3 * 32 * 32;

pub const CIFAR10_CLASSES: [&str; 10] =
    ["airplane", "automobile", "bird", "cat", "deer", "dog", "frog", "horse", "ship", "truck"];

/// Standard deviations below this are treated as zero and replaced by 1.0.
const MIN_STD: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed file: {0}")]
    MalformedFile(String),
    #[error("invalid label {label} in record {record}")]
    InvalidLabel { record: usize, label: u32 },
    #[error("parse error at row {row}, column {column:?}: {message}")]
    Parse { row: usize, column: String, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("dataset has no samples")]
    EmptyDataset,
    #[error("dataset has a single class ({0:?}); at least two are required")]
    SingleClass(String),
    #[error("class {class} ({name}) has {count} samples; at least 2 are needed to split")]
    UnsplittableClass { class: usize, name: String, count: usize },
    #[error("class {class} ({name}) has {count} samples, fewer than the {needed} requested")]
    TooFewSamples { class: usize, name: String, count: usize, needed: usize },
    #[error("test fraction {0} outside (0, 1)")]
    InvalidFraction(f64),
    #[error("invalid dataset: {0}")]
    Invariant(String),
}

/// Labeled samples; `features` has shape `[N, ...]` and `labels[i] < K`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset<T: Scalar> {
    pub name: String,
    pub features: Tensor<T>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

impl<T: Scalar> LabeledDataset<T> {
    /// Checks shape/label consistency and `K >= 2`. Class coverage is checked
    /// where it matters (CSV inference and splitting), since fixed-vocabulary
    /// formats such as CIFAR may legitimately hold a subset of classes.
    pub fn new(
        name: impl Into<String>,
        features: Tensor<T>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self, DatasetError> {
        if labels.is_empty() {
            return Err(DatasetError::EmptyDataset);
        }
        if features.batch() != labels.len() {
            return Err(DatasetError::Invariant(format!(
                "{} feature rows but {} labels",
                features.batch(),
                labels.len()
            )));
        }
        if class_names.len() < 2 {
            return Err(DatasetError::SingleClass(class_names.first().cloned().unwrap_or_default()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(DatasetError::Invariant(format!("label {bad} outside [0, {})", class_names.len())));
        }
        Ok(Self { name: name.into(), features, labels, class_names })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Per-sample shape, e.g. `[3, 32, 32]` or `[D]`.
    pub fn sample_shape(&self) -> &[usize] {
        &self.features.shape()[1..]
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Indices of each class, in ascending order.
    fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut by_class = vec![Vec::new(); self.num_classes()];
        for (i, &l) in self.labels.iter().enumerate() {
            by_class[l].push(i);
        }
        by_class
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            name: self.name.clone(),
            features: self.features.gather_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }
}

/// Per-channel mean and standard deviation. The channel axis is axis 1 of
/// the feature tensor (the colour plane for images, the column for tables).
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormalizationStats {
    pub fn compute<T: Scalar>(features: &Tensor<T>) -> Self {
        let (n, c) = (features.batch(), features.shape().get(1).copied().unwrap_or(1));
        let inner = features.row_len() / c.max(1);
        let count = (n * inner) as f64;
        let mut mean = vec![0.0; c];
        for row in features.data().chunks_exact(features.row_len()) {
            for (ch, plane) in row.chunks_exact(inner).enumerate() {
                mean[ch] += plane.iter().map(|v| v.as_f64()).sum::<f64>();
            }
        }
        mean.iter_mut().for_each(|m| *m /= count);
        let mut var = vec![0.0; c];
        for row in features.data().chunks_exact(features.row_len()) {
            for (ch, plane) in row.chunks_exact(inner).enumerate() {
                var[ch] += plane.iter().map(|v| (v.as_f64() - mean[ch]).powi(2)).sum::<f64>();
            }
        }
        let std = var
            .iter()
            .map(|v| {
                let s = (v / count).sqrt();
                if s < MIN_STD {
                    1.0
                } else {
                    s
                }
            })
            .collect();
        Self { mean, std }
    }

    /// `(x - mean) / std` per channel, in place.
    pub fn apply<T: Scalar>(&self, features: &mut Tensor<T>) {
        let row_len = features.row_len();
        let inner = row_len / self.mean.len().max(1);
        for row in features.data_mut().chunks_exact_mut(row_len) {
            for (ch, plane) in row.chunks_exact_mut(inner).enumerate() {
                let (m, s) = (self.mean[ch], self.std[ch]);
                for v in plane {
                    *v = T::of((v.as_f64() - m) / s);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit<T: Scalar> {
    pub train: LabeledDataset<T>,
    pub test: LabeledDataset<T>,
    pub normalization_stats: NormalizationStats,
    /// Positions in the source dataset, ascending.
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

impl<T: Scalar> DatasetSplit<T> {
    pub fn num_classes(&self) -> usize {
        self.train.num_classes()
    }

    pub fn input_shape(&self) -> &[usize] {
        self.train.sample_shape()
    }
}

/// Parses CIFAR-10 binary batch bytes. Pixels are scaled to `[0, 1]`.
pub fn parse_cifar_binary<T: Scalar>(bytes: &[u8], name: &str) -> Result<LabeledDataset<T>, DatasetError> {
    if bytes.is_empty() || !bytes.len().is_multiple_of(CIFAR_RECORD_BYTES) {
        return Err(DatasetError::MalformedFile(format!(
            "{} bytes is not a positive multiple of the {CIFAR_RECORD_BYTES}-byte record size",
            bytes.len()
        )));
    }
    let n = bytes.len() / CIFAR_RECORD_BYTES;
    let mut labels = Vec::with_capacity(n);
    let mut pixels = Vec::with_capacity(n * CIFAR_PIXELS);
    let scale = T::of(1.0 / 255.0);
    for (record, chunk) in bytes.chunks_exact(CIFAR_RECORD_BYTES).enumerate() {
        let label = chunk[0];
        if label as usize >= CIFAR10_CLASSES.len() {
            return Err(DatasetError::InvalidLabel { record, label: label as u32 });
        }
        labels.push(label as usize);
        pixels.extend(chunk[1..].iter().map(|&b| T::of(b as f64) * scale));
    }
    let features = Tensor::new(vec![n, 3, 32, 32], pixels).map_err(|e| DatasetError::Invariant(e.to_string()))?;
    LabeledDataset::new(name, features, labels, CIFAR10_CLASSES.iter().map(|s| s.to_string()).collect())
}

pub fn load_cifar_binary<T: Scalar>(path: impl AsRef<Path>) -> Result<LabeledDataset<T>, DatasetError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| DatasetError::Io { path: path.display().to_string(), source })?;
    parse_cifar_binary(&bytes, &dataset_name(path))
}

/// Inverse of [`parse_cifar_binary`] for datasets holding unnormalized pixels.
pub fn to_cifar_binary<T: Scalar>(ds: &LabeledDataset<T>) -> Result<Vec<u8>, DatasetError> {
    if ds.sample_shape() != [3, 32, 32] {
        return Err(DatasetError::Invariant(format!("sample shape {:?} is not [3, 32, 32]", ds.sample_shape())));
    }
    let mut out = Vec::with_capacity(ds.len() * CIFAR_RECORD_BYTES);
    for (i, &label) in ds.labels.iter().enumerate() {
        out.push(u8::try_from(label).map_err(|_| DatasetError::InvalidLabel { record: i, label: label as u32 })?);
        for &v in ds.features.row(i) {
            let byte = (v.as_f64() * 255.0).round();
            if !(0.0..=255.0).contains(&byte) {
                return Err(DatasetError::Invariant(format!("pixel value {v} outside [0, 1]")));
            }
            out.push(byte as u8);
        }
    }
    Ok(out)
}

/// Loads a headered CSV. All columns but `label_column` must be numeric.
///
/// Labels that all parse as integers are ordered numerically; any other labels
/// are indexed in order of first appearance.
pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, label_column: &str) -> Result<LabeledDataset<T>, DatasetError> {
    let path = path.as_ref();
    let io_err = |source| DatasetError::Io { path: path.display().to_string(), source };
    let text = fs::read_to_string(path).map_err(io_err)?;
    parse_csv(&text, label_column, &dataset_name(path))
}

pub fn parse_csv<T: Scalar>(text: &str, label_column: &str, name: &str) -> Result<LabeledDataset<T>, DatasetError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| DatasetError::MalformedFile(e.to_string()))?.clone();
    let label_at = headers
        .iter()
        .position(|h| h.trim() == label_column)
        .ok_or_else(|| DatasetError::Schema(format!("label column {label_column:?} not found in header")))?;
    let feature_cols: Vec<usize> = (0..headers.len()).filter(|&c| c != label_at).collect();
    if feature_cols.is_empty() {
        return Err(DatasetError::Schema("no feature columns".into()));
    }

    let mut raw_labels = Vec::new();
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // Row numbers are 1-based file lines; the header is line 1.
        let row = i + 2;
        let record = record.map_err(|e| DatasetError::MalformedFile(format!("row {row}: {e}")))?;
        for &c in &feature_cols {
            let cell = record.get(c).unwrap_or("").trim();
            let v: f64 = cell.parse().map_err(|_| DatasetError::Parse {
                row,
                column: headers[c].to_string(),
                message: format!("{cell:?} is not a number"),
            })?;
            values.push(T::of(v));
        }
        raw_labels.push(record.get(label_at).unwrap_or("").trim().to_string());
    }
    if raw_labels.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }

    let mut class_names: Vec<String> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for l in &raw_labels {
        if !index.contains_key(l.as_str()) {
            index.insert(l, class_names.len());
            class_names.push(l.clone());
        }
    }
    let numeric: Option<Vec<i64>> = class_names.iter().map(|c| c.parse().ok()).collect();
    if let Some(nums) = numeric {
        let mut order: Vec<usize> = (0..class_names.len()).collect();
        order.sort_by_key(|&i| nums[i]);
        let sorted: Vec<String> = order.iter().map(|&i| class_names[i].clone()).collect();
        index = sorted.iter().enumerate().map(|(k, c)| (c.as_str(), k)).collect();
        class_names = sorted.clone();
        let labels: Vec<usize> = raw_labels.iter().map(|l| index[l.as_str()]).collect();
        return finish_csv(name, values, feature_cols.len(), labels, class_names);
    }
    let labels: Vec<usize> = raw_labels.iter().map(|l| index[l.as_str()]).collect();
    finish_csv(name, values, feature_cols.len(), labels, class_names)
}

fn finish_csv<T: Scalar>(
    name: &str,
    values: Vec<T>,
    width: usize,
    labels: Vec<usize>,
    class_names: Vec<String>,
) -> Result<LabeledDataset<T>, DatasetError> {
    if class_names.len() < 2 {
        return Err(DatasetError::SingleClass(class_names[0].clone()));
    }
    let features =
        Tensor::new(vec![labels.len(), width], values).map_err(|e| DatasetError::Invariant(e.to_string()))?;
    LabeledDataset::new(name, features, labels, class_names)
}

fn dataset_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "dataset".into())
}

/// `round(x)` with halves rounded up.
fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Number of test samples drawn from a class of `n` samples.
pub fn stratified_test_count(n: usize, test_fraction: f64) -> usize {
    round_half_up(n as f64 * test_fraction).clamp(1, n - 1)
}

/// Per-class shuffled partition into train and test.
///
/// Class `k` contributes `round(n_k * test_fraction)` test samples, clamped
/// to `[1, n_k - 1]`. Normalization statistics come from the train part.
pub fn stratified_split<T: Scalar>(
    ds: &LabeledDataset<T>,
    test_fraction: f64,
    seed: u64,
) -> Result<DatasetSplit<T>, DatasetError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DatasetError::InvalidFraction(test_fraction));
    }
    let by_class = ds.class_indices();
    if let Some((class, members)) = by_class.iter().enumerate().find(|(_, m)| m.len() < 2) {
        return Err(DatasetError::UnsplittableClass {
            class,
            name: ds.class_names[class].clone(),
            count: members.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::with_capacity(ds.len());
    let mut test_idx = Vec::new();
    for mut members in by_class {
        members.shuffle(&mut rng);
        let t = stratified_test_count(members.len(), test_fraction);
        test_idx.extend_from_slice(&members[..t]);
        train_idx.extend_from_slice(&members[t..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();

    let train = ds.subset(&train_idx);
    let test = ds.subset(&test_idx);
    let normalization_stats = NormalizationStats::compute(&train.features);
    Ok(DatasetSplit { train, test, normalization_stats, train_indices: train_idx, test_indices: test_idx })
}

/// Draws about `total` samples keeping class proportions, e.g. to work on a
/// slice of a large batch file. Every class keeps at least 2 samples when it
/// has them.
pub fn stratified_subsample<T: Scalar>(
    ds: &LabeledDataset<T>,
    total: usize,
    seed: u64,
) -> Result<LabeledDataset<T>, DatasetError> {
    if total == 0 {
        return Err(DatasetError::EmptyDataset);
    }
    if total >= ds.len() {
        return Ok(ds.clone());
    }
    let fraction = total as f64 / ds.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = Vec::with_capacity(total);
    for mut members in ds.class_indices() {
        members.shuffle(&mut rng);
        let n = members.len();
        let k = round_half_up(n as f64 * fraction).clamp(n.min(2), n);
        keep.extend_from_slice(&members[..k]);
    }
    keep.sort_unstable();
    Ok(ds.subset(&keep))
}

/// Keeps exactly `per_class` samples of every class, drawn without
/// replacement. Classes with no samples stay empty.
pub fn balanced_subsample<T: Scalar>(
    ds: &LabeledDataset<T>,
    per_class: usize,
    seed: u64,
) -> Result<LabeledDataset<T>, DatasetError> {
    if per_class == 0 {
        return Err(DatasetError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = Vec::with_capacity(per_class * ds.num_classes());
    for (class, mut members) in ds.class_indices().into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < per_class {
            return Err(DatasetError::TooFewSamples {
                class,
                name: ds.class_names[class].clone(),
                count: members.len(),
                needed: per_class,
            });
        }
        members.shuffle(&mut rng);
        keep.extend_from_slice(&members[..per_class]);
    }
    keep.sort_unstable();
    Ok(ds.subset(&keep))
}

/// Standardizes train and test with statistics recomputed from `split.train`.
pub fn normalize<T: Scalar>(mut split: DatasetSplit<T>) -> DatasetSplit<T> {
    let stats = NormalizationStats::compute(&split.train.features);
    stats.apply(&mut split.train.features);
    stats.apply(&mut split.test.features);
    split.normalization_stats = stats;
    split
}
