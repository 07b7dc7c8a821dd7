//! In-memory regression data, CSV ingestion and random train/test splits.

use std::borrow::Cow;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Dense feature matrix (row-major) plus a target vector.
///
/// All values are finite and there is at least one row and one column.
#[derive(Debug, Clone)]
pub struct Dataset {
    features: Vec<f64>,
    targets: Vec<f64>,
    n_features: usize,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    /// Builds a dataset from a row-major buffer of `targets.len() * n_features` values.
    pub fn from_flat(features: Vec<f64>, n_features: usize, targets: Vec<f64>) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::InvalidData("dataset needs at least one feature".into()));
        }
        if targets.is_empty() {
            return Err(Error::InvalidData("dataset needs at least one row".into()));
        }
        if features.len() != targets.len() * n_features {
            return Err(Error::InvalidData(format!(
                "feature buffer holds {} values, expected {} rows x {} features",
                features.len(),
                targets.len(),
                n_features
            )));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite feature value at row {}, column {}",
                pos / n_features,
                pos % n_features
            )));
        }
        if let Some(row) = targets.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite target at row {row}")));
        }
        Ok(Dataset {
            features,
            targets,
            n_features,
            feature_names: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], targets: Vec<f64>) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if rows.len() != targets.len() {
            return Err(Error::InvalidData(format!(
                "{} feature rows but {} targets",
                rows.len(),
                targets.len()
            )));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != m) {
            return Err(Error::InvalidData(format!(
                "row {i} has {} features, expected {m}",
                rows[i].len()
            )));
        }
        Self::from_flat(rows.concat(), m, targets)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_features {
            return Err(Error::InvalidData(format!(
                "{} feature names for {} features",
                names.len(),
                self.n_features
            )));
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    #[inline]
    pub fn n_samples(&self) -> usize {
        self.targets.len()
    }

    #[inline]
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.n_features)
    }

    #[inline]
    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn features_flat(&self) -> &[f64] {
        &self.features
    }

    /// Column-major copy of the feature matrix, one vector per feature.
    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.n_features)
            .map(|j| self.rows().map(|r| r[j]).collect())
            .collect()
    }

    /// Feature names, defaulting to `x0, x1, ...` when none were given.
    pub fn feature_names(&self) -> Cow<'_, [String]> {
        match &self.feature_names {
            Some(names) => Cow::Borrowed(names),
            None => Cow::Owned((0..self.n_features).map(|j| format!("x{j}")).collect()),
        }
    }

    /// Rows selected by `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        let mut targets = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            targets.push(self.targets[i]);
        }
        Dataset {
            features,
            targets,
            n_features: self.n_features,
            feature_names: self.feature_names.clone(),
        }
    }

    /// Same inputs, different targets (e.g. residuals).
    pub fn with_targets(&self, targets: Vec<f64>) -> Result<Dataset> {
        if targets.len() != self.n_samples() {
            return Err(Error::InvalidData(format!(
                "{} targets for {} rows",
                targets.len(),
                self.n_samples()
            )));
        }
        if targets.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite target".into()));
        }
        Ok(Dataset {
            features: self.features.clone(),
            targets,
            n_features: self.n_features,
            feature_names: self.feature_names.clone(),
        })
    }
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.n_features == other.n_features
            && self.features == other.features
            && self.targets == other.targets
            && self.feature_names() == other.feature_names()
    }
}

/// Which CSV column holds the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetColumn {
    Name(String),
    Index(usize),
}

impl TargetColumn {
    fn resolve(&self, headers: &[String]) -> Result<usize> {
        match self {
            TargetColumn::Name(name) => headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::InvalidData(format!("target column {name:?} not found"))),
            TargetColumn::Index(i) => {
                // a header literally named "3" wins over position 3
                if let Some(p) = headers.iter().position(|h| *h == i.to_string()) {
                    return Ok(p);
                }
                if *i < headers.len() {
                    Ok(*i)
                } else {
                    Err(Error::InvalidData(format!(
                        "target column index {i} out of range for {} columns",
                        headers.len()
                    )))
                }
            }
        }
    }
}

impl FromStr for TargetColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => TargetColumn::Index(i),
            Err(_) => TargetColumn::Name(s.to_string()),
        })
    }
}

impl From<&str> for TargetColumn {
    fn from(s: &str) -> Self {
        s.parse().unwrap()
    }
}

impl From<usize> for TargetColumn {
    fn from(i: usize) -> Self {
        TargetColumn::Index(i)
    }
}

/// Loads a headed CSV file; `target` becomes the target vector and every
/// other column a feature, in file order.
pub fn load_csv(path: impl AsRef<Path>, target: impl Into<TargetColumn>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, target)
}

pub fn read_csv<R: Read>(reader: R, target: impl Into<TargetColumn>) -> Result<Dataset> {
    let (headers, cells) = read_table(reader)?;
    if headers.len() < 2 {
        return Err(Error::InvalidData(
            "need at least one feature column and a target column".into(),
        ));
    }
    let target_idx = target.into().resolve(&headers)?;
    let width = headers.len();
    let mut features = Vec::with_capacity(cells.len());
    let mut targets = Vec::with_capacity(cells.len() / width);
    for (i, &v) in cells.iter().enumerate() {
        if i % width == target_idx {
            targets.push(v);
        } else {
            features.push(v);
        }
    }
    let names = headers
        .into_iter()
        .enumerate()
        .filter(|&(c, _)| c != target_idx)
        .map(|(_, h)| h)
        .collect();
    Dataset::from_flat(features, width - 1, targets)?.with_feature_names(names)
}

/// Reads a headed CSV of inputs only, for prediction. If `drop` is given
/// that column is skipped. Returns the kept header names and the rows.
pub fn read_features_csv<R: Read>(
    reader: R,
    drop: Option<TargetColumn>,
) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let (headers, cells) = read_table(reader)?;
    let skip = drop.map(|t| t.resolve(&headers)).transpose()?;
    let width = headers.len();
    let names: Vec<String> = headers
        .into_iter()
        .enumerate()
        .filter(|&(c, _)| Some(c) != skip)
        .map(|(_, h)| h)
        .collect();
    if names.is_empty() {
        return Err(Error::InvalidData("no feature columns".into()));
    }
    let rows = cells
        .chunks(width)
        .map(|r| {
            r.iter()
                .enumerate()
                .filter(|&(c, _)| Some(c) != skip)
                .map(|(_, &v)| v)
                .collect()
        })
        .collect();
    Ok((names, rows))
}

/// Header plus all cells row-major, every cell a finite real.
fn read_table<R: Read>(reader: R) -> Result<(Vec<String>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut cells = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        // line 1 is the header
        let row = r + 2;
        if record.len() != headers.len() {
            return Err(Error::Cell {
                row,
                column: "*".into(),
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for (c, cell) in record.iter().enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| Error::Cell {
                row,
                column: headers[c].clone(),
                message: format!("cannot parse {cell:?} as a real"),
            })?;
            if !value.is_finite() {
                return Err(Error::Cell {
                    row,
                    column: headers[c].clone(),
                    message: format!("non-finite value {cell:?}"),
                });
            }
            cells.push(value);
        }
    }
    if cells.is_empty() {
        return Err(Error::InvalidData("CSV has a header but no rows".into()));
    }
    Ok((headers, cells))
}

/// Column name used for the target when writing.
pub fn target_header(d: &Dataset) -> String {
    let names = d.feature_names();
    let mut name = String::from("y");
    while names.iter().any(|n| *n == name) {
        name.push('_');
    }
    name
}

/// Writes features followed by the target column (see [`target_header`]).
/// Reals use shortest round-trip formatting, so reading back with the last
/// column as target reproduces the dataset bit for bit.
pub fn write_csv<W: Write>(d: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let mut header: Vec<String> = d.feature_names().into_owned();
    header.push(target_header(d));
    wtr.write_record(&header)?;
    let mut record = Vec::with_capacity(d.n_features() + 1);
    for (row, y) in d.rows().zip(d.targets()) {
        record.clear();
        record.extend(row.iter().map(|v| format!("{v:?}")));
        record.push(format!("{y:?}"));
        wtr.write_record(&record)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn save_csv(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(d, std::io::BufWriter::new(file))
}

/// One random train/test partition.
#[derive(Debug, Clone)]
pub struct TrainTestSplit {
    pub train: Dataset,
    pub test: Dataset,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub repeat_index: usize,
}

/// Number of training rows for a dataset of `n` rows: `floor(3n/4)`.
pub fn train_size(n: usize) -> usize {
    3 * n / 4
}

/// Uniform random partition into `floor(3n/4)` training and the remaining
/// test rows. Rows keep their original relative order inside each part.
pub fn split_train_test(d: &Dataset, rng: &mut SeededRng) -> Result<TrainTestSplit> {
    let n = d.n_samples();
    if n < 4 {
        return Err(Error::InvalidData(format!(
            "train/test split needs at least 4 rows, got {n}"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let n_train = train_size(n);
    let mut train_indices = perm[..n_train].to_vec();
    let mut test_indices = perm[n_train..].to_vec();
    train_indices.sort_unstable();
    test_indices.sort_unstable();
    Ok(TrainTestSplit {
        train: d.subset(&train_indices),
        test: d.subset(&test_indices),
        train_indices,
        test_indices,
        repeat_index: 0,
    })
}
