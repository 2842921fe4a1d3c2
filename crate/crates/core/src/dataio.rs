//! Dataset ingestion: LIBSVM text, feature normalization, subsampling and
//! synthetic generators with known structure.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// Dense design matrix (row-major) with one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    n: usize,
    d: usize,
    features: Vec<f64>,
    labels: Vec<f64>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        d: usize,
        features: Vec<f64>,
        labels: Vec<f64>,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 || d == 0 {
            return Err(Error::invalid(format!(
                "dataset must be non-empty, got n={n}, d={d}"
            )));
        }
        if features.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                got: features.len(),
            });
        }
        if features.iter().chain(labels.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("dataset contains non-finite values"));
        }
        Ok(Dataset {
            name: name.into(),
            n,
            d,
            features,
            labels,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    #[inline]
    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn is_binary(&self) -> bool {
        self.labels.iter().all(|&y| y == 0.0 || y == 1.0)
    }

    /// Maps a two-valued label set to `{0, 1}` (smallest label becomes 0).
    /// Labels already in `{0, 1}` are left untouched.
    pub fn binarized(&self) -> Result<Dataset> {
        if self.is_binary() {
            return Ok(self.clone());
        }
        let mut distinct: Vec<f64> = Vec::new();
        for &y in &self.labels {
            if !distinct.contains(&y) {
                distinct.push(y);
                if distinct.len() > 2 {
                    return Err(Error::invalid(format!(
                        "dataset '{}' has more than two distinct labels",
                        self.name
                    )));
                }
            }
        }
        let low = distinct.iter().cloned().fold(f64::INFINITY, f64::min);
        let labels = self
            .labels
            .iter()
            .map(|&y| if y == low { 0.0 } else { 1.0 })
            .collect();
        Ok(Dataset {
            labels,
            ..self.clone()
        })
    }

    fn select(&self, rows: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(rows.len() * self.d);
        let mut labels = Vec::with_capacity(rows.len());
        for &i in rows {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            name: self.name.clone(),
            n: rows.len(),
            d: self.d,
            features,
            labels,
        }
    }
}

/// Parses LIBSVM text (`label idx:val idx:val ...`, 1-based strictly increasing
/// indices). Blank lines and `#` comments are skipped. Labels are kept raw.
pub fn parse_libsvm<R: BufRead>(reader: R, expected_d: Option<usize>) -> Result<Dataset> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut max_index = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let content = match line.find('#') {
            Some(pos) => &line[..pos],
            None => &line[..],
        };
        let mut tokens = content.split_whitespace();
        let Some(label_tok) = tokens.next() else {
            continue;
        };
        let parse_err = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        let label: f64 = label_tok
            .parse()
            .map_err(|_| parse_err(format!("invalid label '{label_tok}'")))?;
        if !label.is_finite() {
            return Err(parse_err(format!("non-finite label '{label_tok}'")));
        }
        let mut pairs = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(format!("expected idx:val, got '{tok}'")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(format!("invalid feature index '{idx}'")))?;
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(format!("invalid feature value '{val}'")))?;
            if idx == 0 {
                return Err(parse_err("feature indices start at 1".into()));
            }
            if idx <= last {
                return Err(parse_err(format!(
                    "index {idx} does not increase (previous {last})"
                )));
            }
            if let Some(d) = expected_d {
                if idx > d {
                    return Err(parse_err(format!("index {idx} exceeds dimension {d}")));
                }
            }
            if !val.is_finite() {
                return Err(parse_err(format!("non-finite feature value '{val}'")));
            }
            last = idx;
            pairs.push((idx, val));
        }
        max_index = max_index.max(last);
        rows.push(pairs);
        labels.push(label);
    }

    let d = expected_d.unwrap_or(max_index);
    if rows.is_empty() {
        return Err(Error::invalid("no records found"));
    }
    if d == 0 {
        return Err(Error::invalid(
            "records carry no features and no dimension was given",
        ));
    }
    let mut features = vec![0.0; rows.len() * d];
    for (i, pairs) in rows.iter().enumerate() {
        for &(idx, val) in pairs {
            features[i * d + idx - 1] = val;
        }
    }
    Dataset::new("libsvm", d, features, labels)
}

/// Reads a LIBSVM file, transparently decompressing `.gz` paths.
pub fn load_libsvm(path: impl AsRef<Path>, expected_d: Option<usize>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let gz = path.extension().is_some_and(|e| e == "gz");
    let ds = if gz {
        parse_libsvm(BufReader::new(GzDecoder::new(file)), expected_d)?
    } else {
        parse_libsvm(BufReader::new(file), expected_d)?
    };
    let mut name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "libsvm".into());
    if let Some(stripped) = name.strip_suffix(".gz") {
        name = stripped.to_string();
    }
    Ok(ds.with_name(name))
}

/// Writes the dataset as LIBSVM text, omitting zero entries.
pub fn write_libsvm<W: Write>(ds: &Dataset, mut out: W) -> Result<()> {
    for i in 0..ds.n() {
        write!(out, "{}", ds.label(i))?;
        for (j, &v) in ds.row(i).iter().enumerate() {
            if v != 0.0 {
                write!(out, " {}:{}", j + 1, v)?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    None,
    /// Each row divided by `max(1, ‖row‖)`.
    ScaleUnit,
    /// Per-column zero mean and unit standard deviation.
    Standardize,
}

const STD_FLOOR: f64 = 1e-12;

pub fn normalize_features(ds: &Dataset, mode: Normalization) -> Result<Dataset> {
    let (n, d) = (ds.n(), ds.d());
    let mut features = ds.features.clone();
    match mode {
        Normalization::None => {}
        Normalization::ScaleUnit => {
            for row in features.chunks_mut(d) {
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                let s = norm.max(1.0);
                row.iter_mut().for_each(|v| *v /= s);
            }
        }
        Normalization::Standardize => {
            if n < 2 {
                return Err(Error::invalid("standardization needs at least two rows"));
            }
            for j in 0..d {
                let mean = (0..n).map(|i| features[i * d + j]).sum::<f64>() / n as f64;
                let var = (0..n)
                    .map(|i| (features[i * d + j] - mean).powi(2))
                    .sum::<f64>()
                    / n as f64;
                let std = var.sqrt().max(STD_FLOOR);
                for i in 0..n {
                    features[i * d + j] = (features[i * d + j] - mean) / std;
                }
            }
        }
    }
    Ok(Dataset {
        features,
        ..ds.clone()
    })
}

/// Uniform subsample of `m` rows without replacement.
pub fn subsample(ds: &Dataset, seed: u64, m: usize) -> Result<Dataset> {
    if m == 0 || m > ds.n() {
        return Err(Error::invalid(format!(
            "subsample size {m} must lie in 1..={}",
            ds.n()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = index::sample(&mut rng, ds.n(), m).into_vec();
    Ok(ds.select(&rows))
}

fn planted_weights(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect::<Vec<f64>>()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Gaussian features (scaled by `1/√d`) with `{0,1}` labels drawn from a planted
/// logistic model.
pub fn synthetic_classification(seed: u64, n: usize, d: usize) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = planted_weights(&mut rng, d, 2.0);
    let scale = 1.0 / (d as f64).sqrt();
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..d)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let z: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum();
        labels.push(if rng.random::<f64>() < sigmoid(z) {
            1.0
        } else {
            0.0
        });
        features.extend(row);
    }
    Dataset::new("synthetic-classification", d, features, labels)
}

/// Linear model with gaussian noise plus a fraction of gross outliers.
pub fn synthetic_regression(seed: u64, n: usize, d: usize) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = planted_weights(&mut rng, d, 1.0);
    let scale = 1.0 / (d as f64).sqrt();
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..d)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let z: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum();
        let noise: f64 = StandardNormal.sample(&mut rng);
        let outlier = if rng.random::<f64>() < 0.1 {
            rng.random_range(-10.0..10.0)
        } else {
            0.0
        };
        labels.push(z + 0.1 * noise + outlier);
        features.extend(row);
    }
    Dataset::new("synthetic-regression", d, features, labels)
}

/// Sparse binary features shaped like a9a (`d = 123`, about 14 active features
/// per row, one per categorical group) with labels from a planted logistic model.
pub fn a9a_like(seed: u64, n: usize) -> Result<Dataset> {
    // group sizes of the one-hot encoded census attributes; they sum to 123
    const GROUPS: [usize; 14] = [5, 8, 16, 16, 7, 14, 6, 5, 2, 3, 3, 3, 14, 21];
    let d: usize = GROUPS.iter().sum();
    debug_assert_eq!(d, 123);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = planted_weights(&mut rng, d, 0.8);
    // skewed category frequencies within each group
    let popularity: Vec<f64> = (0..d)
        .map(|_| rng.random_range(0.05..1.0f64).powi(3))
        .collect();
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = vec![0.0; d];
        let mut offset = 0;
        for &g in GROUPS.iter() {
            let weights = &popularity[offset..offset + g];
            let total: f64 = weights.iter().sum();
            let mut u = rng.random::<f64>() * total;
            let mut pick = g - 1;
            for (k, &p) in weights.iter().enumerate() {
                if u < p {
                    pick = k;
                    break;
                }
                u -= p;
            }
            row[offset + pick] = 1.0;
            offset += g;
        }
        let z: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - 1.0;
        labels.push(if rng.random::<f64>() < sigmoid(z) {
            1.0
        } else {
            0.0
        });
        features.extend(row);
    }
    Dataset::new("a9a-like", d, features, labels)
}
