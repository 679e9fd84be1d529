//! Labelled tabular data: CSV ingestion, z-score scaling and train/val/test
//! splits.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_for, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal,
    Outlier,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Outlier => "outlier",
        }
    }
}

/// Samples with normal/outlier labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    samples: Vec<Vec<f64>>,
    labels: Vec<Label>,
    feature_names: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassBalance {
    pub normal: usize,
    pub outlier: usize,
    pub outlier_fraction: f64,
}

impl LabeledDataset {
    pub fn new(samples: Vec<Vec<f64>>, labels: Vec<Label>, feature_names: Option<Vec<String>>) -> Result<Self> {
        if samples.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: samples.len(),
                found: labels.len(),
            });
        }
        if let Some(first) = samples.first() {
            if let Some(bad) = samples.iter().find(|s| s.len() != first.len()) {
                return Err(Error::DimensionMismatch {
                    expected: first.len(),
                    found: bad.len(),
                });
            }
            if let Some(names) = &feature_names {
                if names.len() != first.len() {
                    return Err(Error::DimensionMismatch {
                        expected: first.len(),
                        found: names.len(),
                    });
                }
            }
        }
        Ok(LabeledDataset {
            samples,
            labels,
            feature_names,
        })
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn class_balance(&self) -> ClassBalance {
        let outlier = self.labels.iter().filter(|&&l| l == Label::Outlier).count();
        ClassBalance {
            normal: self.len() - outlier,
            outlier,
            outlier_fraction: if self.is_empty() {
                0.0
            } else {
                outlier as f64 / self.len() as f64
            },
        }
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        LabeledDataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    fn with_samples(&self, samples: Vec<Vec<f64>>) -> Self {
        LabeledDataset {
            samples,
            labels: self.labels.clone(),
            feature_names: self.feature_names.clone(),
        }
    }
}

/// Where and how to read a labelled CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsvSource {
    pub path: PathBuf,
    /// Header name of the label column, or its zero-based index.
    pub label_column: String,
    /// Label value marking an outlier.
    pub outlier_label: String,
    /// When set, any label that is neither this nor `outlier_label` is an error.
    pub normal_label: Option<String>,
    pub delimiter: char,
}

impl Default for CsvSource {
    fn default() -> Self {
        CsvSource {
            path: PathBuf::new(),
            label_column: "label".into(),
            outlier_label: "1".into(),
            normal_label: None,
            delimiter: ',',
        }
    }
}

/// Reads a delimited file with a header row. Every column except the label
/// column must be numeric. Errors name the 1-based data row (header excluded)
/// and the offending column.
pub fn load_csv(source: &CsvSource) -> Result<LabeledDataset> {
    let path_str = source.path.display().to_string();
    let ingest = |row: usize, column: &str, message: String| Error::Ingestion {
        path: path_str.clone(),
        row,
        column: column.to_string(),
        message,
    };
    if !source.delimiter.is_ascii() {
        return Err(Error::invalid("delimiter must be an ASCII character"));
    }
    let file = std::fs::File::open(&source.path).map_err(|e| ingest(0, "", format!("cannot open file: {e}")))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(source.delimiter as u8)
        .trim(csv::Trim::All)
        .from_reader(file);

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| ingest(0, "", format!("cannot read header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let label_idx = headers
        .iter()
        .position(|h| h == &source.label_column)
        .or_else(|| source.label_column.parse::<usize>().ok().filter(|&i| i < headers.len()))
        .ok_or_else(|| {
            ingest(
                0,
                &source.label_column,
                format!("label column not found among {headers:?}"),
            )
        })?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut samples = Vec::new();
    let mut labels = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let row = k + 1;
        let record = record.map_err(|e| ingest(row, "", e.to_string()))?;
        if record.len() != headers.len() {
            return Err(ingest(
                row,
                "",
                format!("expected {} fields, found {}", headers.len(), record.len()),
            ));
        }
        let mut sample = Vec::with_capacity(feature_names.len());
        for (i, cell) in record.iter().enumerate() {
            if i == label_idx {
                continue;
            }
            let value: f64 = cell
                .parse()
                .map_err(|_| ingest(row, &headers[i], format!("non-numeric value {cell:?}")))?;
            if !value.is_finite() {
                return Err(ingest(row, &headers[i], format!("non-finite value {cell:?}")));
            }
            sample.push(value);
        }
        let raw = &record[label_idx];
        let label = if raw == source.outlier_label {
            Label::Outlier
        } else {
            match &source.normal_label {
                Some(normal) if raw != normal => {
                    return Err(ingest(
                        row,
                        &headers[label_idx],
                        format!(
                            "unknown label {raw:?} (expected {:?} or {normal:?})",
                            source.outlier_label
                        ),
                    ))
                }
                _ => Label::Normal,
            }
        };
        samples.push(sample);
        labels.push(label);
    }
    if samples.is_empty() {
        return Err(ingest(0, "", "file has no data rows".into()));
    }
    LabeledDataset::new(samples, labels, Some(feature_names))
}

/// Convenience wrapper around [`load_csv`].
pub fn load_csv_path(path: impl AsRef<Path>, label_column: &str, outlier_label: &str) -> Result<LabeledDataset> {
    load_csv(&CsvSource {
        path: path.as_ref().to_path_buf(),
        label_column: label_column.into(),
        outlier_label: outlier_label.into(),
        ..CsvSource::default()
    })
}

/// Per-feature z-score parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Scaler {
    /// Fits mean and population standard deviation per feature. Constant
    /// features keep scale 1 so they are only centered.
    pub fn fit(dataset: &LabeledDataset) -> Self {
        let dim = dataset.dim();
        let n = dataset.len().max(1) as f64;
        let mut mean = vec![0.0; dim];
        for s in dataset.samples() {
            for (m, &x) in mean.iter_mut().zip(s) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for s in dataset.samples() {
            for ((v, &x), &m) in var.iter_mut().zip(s).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|v| {
                let sd = (v / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Scaler { mean, scale }
    }

    pub fn transform_sample(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((&x, &m), &s)| (x - m) / s)
            .collect()
    }

    pub fn transform(&self, dataset: &LabeledDataset) -> Result<LabeledDataset> {
        if dataset.dim() != self.mean.len() && !dataset.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                found: dataset.dim(),
            });
        }
        Ok(dataset.with_samples(dataset.samples().iter().map(|s| self.transform_sample(s)).collect()))
    }
}

/// Fits a [`Scaler`] on `dataset` and returns the scaled copy with it.
pub fn standardize(dataset: &LabeledDataset) -> (LabeledDataset, Scaler) {
    let scaler = Scaler::fit(dataset);
    let scaled = scaler.transform(dataset).expect("scaler fitted on the same dataset");
    (scaled, scaler)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub stratified: bool,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_frac: 0.6,
            val_frac: 0.2,
            test_frac: 0.2,
            stratified: true,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let fracs = [self.train_frac, self.val_frac, self.test_frac];
        if fracs.iter().any(|&f| !(f > 0.0)) {
            return Err(Error::invalid("split fractions must be positive"));
        }
        let sum: f64 = fracs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("split fractions sum to {sum}, not 1")));
        }
        Ok(())
    }
}

/// Row indices of each partition, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Partitions row indices. In stratified mode each class is shuffled and cut
/// separately (counts rounded to nearest for train and val, remainder to
/// test), so every partition keeps the class proportions.
pub fn split_indices(dataset: &LabeledDataset, spec: &SplitSpec) -> Result<SplitIndices> {
    spec.validate()?;
    let groups: Vec<(Option<Label>, Vec<usize>)> = if spec.stratified {
        [Label::Normal, Label::Outlier]
            .into_iter()
            .map(|l| {
                let idx = (0..dataset.len()).filter(|&i| dataset.labels()[i] == l).collect();
                (Some(l), idx)
            })
            .collect()
    } else {
        vec![(None, (0..dataset.len()).collect())]
    };

    let mut rng = rng_for(spec.seed, Stream::Split);
    let mut out = SplitIndices {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for (label, mut idx) in groups {
        let n = idx.len();
        let n_train = ((spec.train_frac * n as f64).round() as usize).min(n);
        let n_val = ((spec.val_frac * n as f64).round() as usize).min(n - n_train);
        let n_test = n - n_train - n_val;
        if n_train == 0 || n_val == 0 || n_test == 0 {
            let what = label.map_or("the dataset".to_string(), |l| format!("class {}", l.as_str()));
            return Err(Error::invalid(format!(
                "cannot split {what} of {n} samples into non-empty partitions \
                 ({n_train}/{n_val}/{n_test})"
            )));
        }
        idx.shuffle(&mut rng);
        out.train.extend_from_slice(&idx[..n_train]);
        out.val.extend_from_slice(&idx[n_train..n_train + n_val]);
        out.test.extend_from_slice(&idx[n_train + n_val..]);
    }
    out.train.sort_unstable();
    out.val.sort_unstable();
    out.test.sort_unstable();
    Ok(out)
}

/// Splits into (train, val, test) datasets.
pub fn split(dataset: &LabeledDataset, spec: &SplitSpec) -> Result<(LabeledDataset, LabeledDataset, LabeledDataset)> {
    let idx = split_indices(dataset, spec)?;
    Ok((
        dataset.subset(&idx.train),
        dataset.subset(&idx.val),
        dataset.subset(&idx.test),
    ))
}
