//! Encoded datasets, CSV ingestion and train/test splitting.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::schema::{ColumnSpec, Kind, Role, Schema, Task};
use crate::error::{Error, Result};
use crate::nn::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitTag {
    Full,
    Train,
    Test,
}

/// Row-aligned covariates `x`, sensitive attributes `a` and outcome `y`.
///
/// Continuous covariate/sensitive columns are standardized with the stats
/// frozen in `schema`; categorical columns are one-hot. A binary outcome is
/// stored as its category index (0 or 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: Schema,
    pub x: Matrix,
    pub a: Matrix,
    pub y: Vec<f64>,
    pub split: SplitTag,
}

impl Dataset {
    pub fn new(schema: Schema, x: Matrix, a: Matrix, y: Vec<f64>, split: SplitTag) -> Result<Self> {
        let d = Self { schema, x, a, y, split };
        d.validate()?;
        Ok(d)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn task(&self) -> Task {
        self.schema.task()
    }

    /// Checks row alignment, encoded widths and one-hot blocks.
    pub fn validate(&self) -> Result<()> {
        self.schema.validate()?;
        let n = self.y.len();
        if self.x.rows() != n || self.a.rows() != n {
            return Err(Error::shape(format!(
                "rows misaligned: x {}, a {}, y {n}",
                self.x.rows(),
                self.a.rows()
            )));
        }
        if self.x.cols() != self.schema.x_width() || self.a.cols() != self.schema.a_width() {
            return Err(Error::shape("encoded widths do not match the schema"));
        }
        for (m, blocks) in [
            (&self.x, self.schema.covariate_blocks()),
            (&self.a, self.schema.sensitive_blocks()),
        ] {
            for b in blocks.iter().filter(|b| b.kind == Kind::Categorical) {
                for r in 0..n {
                    let s: f64 = m.row(r)[b.start..b.start + b.width].iter().sum();
                    if (s - 1.0).abs() > 1e-9 {
                        return Err(Error::Input(format!(
                            "one-hot block `{}` sums to {s} on row {r}",
                            b.name
                        )));
                    }
                }
            }
        }
        if self.task() == Task::Classification && self.y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Input("binary outcome must be coded 0/1".into()));
        }
        if !self.x.is_finite() || !self.a.is_finite() || self.y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("dataset contains non-finite values".into()));
        }
        Ok(())
    }

    /// Rows `idx` in the given order.
    pub fn select(&self, idx: &[usize], split: SplitTag) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            x: self.x.select_rows(idx),
            a: self.a.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            split,
        }
    }

    /// Same rows and sensitive attributes with replaced covariates/outcome
    /// (the transformed dataset).
    pub fn with_transformed(&self, x: Matrix, y: Vec<f64>) -> Result<Dataset> {
        Dataset::new(self.schema.clone(), x, self.a.clone(), y, self.split)
    }

    /// Group index per row from the categorical sensitive columns; several
    /// columns combine as a mixed-radix index in schema order.
    pub fn sensitive_groups(&self) -> Result<Vec<usize>> {
        sensitive_groups(&self.schema, &self.a)
    }

    pub fn group_count(&self) -> usize {
        self.schema
            .role_columns(Role::Sensitive)
            .map(ColumnSpec::width)
            .product()
    }

    /// Outcome as a one-column matrix (0/1 for classification).
    pub fn y_matrix(&self) -> Matrix {
        Matrix::column_vector(&self.y)
    }
}

pub fn sensitive_groups(schema: &Schema, a: &Matrix) -> Result<Vec<usize>> {
    let blocks = schema.sensitive_blocks();
    if blocks.iter().any(|b| b.kind != Kind::Categorical) {
        return Err(Error::Input(
            "group labels need categorical sensitive attributes".into(),
        ));
    }
    Ok((0..a.rows())
        .map(|r| {
            blocks.iter().fold(0, |acc, b| {
                let row = &a.row(r)[b.start..b.start + b.width];
                let level = row.iter().position(|&v| v == 1.0).unwrap_or(0);
                acc * b.width + level
            })
        })
        .collect())
}

/// Reads a CSV file (header row, RFC-4180 quoting) using `schema_path`.
/// Continuous columns are standardized with stats fitted on this file unless
/// the schema already carries frozen stats.
pub fn load_csv(path: impl AsRef<Path>, schema_path: impl AsRef<Path>) -> Result<Dataset> {
    let schema = Schema::load(schema_path)?;
    load_csv_with_schema(path, &schema)
}

pub fn load_csv_with_schema(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    let load_err = |row: Option<usize>, column: Option<&str>, reason: String| Error::Load {
        path: path.to_path_buf(),
        row,
        column: column.map(str::to_string),
        reason,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| load_err(None, None, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| load_err(None, None, e.to_string()))?
        .clone();
    let positions: Vec<usize> = schema
        .columns
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h.trim() == c.name)
                .ok_or_else(|| load_err(None, Some(&c.name), "column missing from header".into()))
        })
        .collect::<Result<_>>()?;

    let lookups: Vec<HashMap<&str, usize>> = schema
        .columns
        .iter()
        .map(|c| c.categories.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect())
        .collect();

    // raw[c] holds either the parsed number or the category index
    let mut raw: Vec<Vec<f64>> = vec![Vec::new(); schema.columns.len()];
    for (r, record) in reader.records().enumerate() {
        let row_no = r + 2; // 1-based, after the header
        let record = record.map_err(|e| load_err(Some(row_no), None, e.to_string()))?;
        for (ci, c) in schema.columns.iter().enumerate() {
            let cell = record
                .get(positions[ci])
                .ok_or_else(|| load_err(Some(row_no), Some(&c.name), "missing cell".into()))?
                .trim();
            let v = match c.kind {
                Kind::Continuous => {
                    let v: f64 = cell.parse().map_err(|_| {
                        load_err(
                            Some(row_no),
                            Some(&c.name),
                            format!("cannot parse `{cell}` as a number"),
                        )
                    })?;
                    if !v.is_finite() {
                        return Err(load_err(Some(row_no), Some(&c.name), "non-finite value".into()));
                    }
                    v
                }
                Kind::Categorical => *lookups[ci]
                    .get(cell)
                    .ok_or_else(|| load_err(Some(row_no), Some(&c.name), format!("unseen category `{cell}`")))?
                    as f64,
            };
            raw[ci].push(v);
        }
    }
    let mut schema = schema.clone();
    fit_missing_stats(&mut schema, &raw);
    encode(schema, &raw, SplitTag::Full)
}

fn column_stats(values: &[f64]) -> (f64, f64) {
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    (mean, if sd > 0.0 { sd } else { 1.0 })
}

fn fit_missing_stats(schema: &mut Schema, raw: &[Vec<f64>]) {
    for (c, values) in schema.columns.iter_mut().zip(raw) {
        if c.scales() && (c.mean.is_none() || c.std.is_none()) {
            let (m, s) = column_stats(values);
            c.mean = Some(m);
            c.std = Some(s);
        }
    }
}

/// Encodes per-column raw values (numbers or category indices).
pub(crate) fn encode(schema: Schema, raw: &[Vec<f64>], split: SplitTag) -> Result<Dataset> {
    let n = raw.first().map_or(0, Vec::len);
    let mut x = Matrix::zeros(n, schema.x_width());
    let mut a = Matrix::zeros(n, schema.a_width());
    let mut y = vec![0.0; n];
    let (mut xo, mut ao) = (0, 0);
    for (c, values) in schema.columns.iter().zip(raw) {
        let (target, off) = match c.role {
            Role::Covariate => (&mut x, &mut xo),
            Role::Sensitive => (&mut a, &mut ao),
            Role::Outcome => {
                y.copy_from_slice(values);
                continue;
            }
        };
        match c.kind {
            Kind::Continuous => {
                let (m, s) = c.stats();
                for (r, v) in values.iter().enumerate() {
                    target.set(r, *off, (v - m) / s);
                }
            }
            Kind::Categorical => {
                for (r, v) in values.iter().enumerate() {
                    target.set(r, *off + *v as usize, 1.0);
                }
            }
        }
        *off += c.width();
    }
    Dataset::new(schema, x, a, y, split)
}

/// Inverse of the encoding: per-column raw values.
pub(crate) fn decode(d: &Dataset) -> Vec<Vec<f64>> {
    let (mut xo, mut ao) = (0, 0);
    d.schema
        .columns
        .iter()
        .map(|c| {
            let (m, off) = match c.role {
                Role::Covariate => (&d.x, &mut xo),
                Role::Sensitive => (&d.a, &mut ao),
                Role::Outcome => return d.y.clone(),
            };
            let col: Vec<f64> = match c.kind {
                Kind::Continuous => {
                    let (mean, sd) = c.stats();
                    (0..d.len()).map(|r| m.get(r, *off) * sd + mean).collect()
                }
                Kind::Categorical => (0..d.len())
                    .map(|r| {
                        let block = &m.row(r)[*off..*off + c.width()];
                        argmax(block) as f64
                    })
                    .collect(),
            };
            *off += c.width();
            col
        })
        .collect()
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Writes the dataset in its original units (categories by name).
pub fn write_csv(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(d.schema.columns.iter().map(|c| c.name.as_str()))?;
    let cols = decode(d);
    for r in 0..d.len() {
        let record: Vec<String> = d
            .schema
            .columns
            .iter()
            .zip(&cols)
            .map(|(c, col)| match c.kind {
                Kind::Continuous => format!("{}", col[r]),
                Kind::Categorical => c.categories[col[r] as usize].clone(),
            })
            .collect();
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Seeded random split; `test_fraction` of the rows go to the test part.
/// Standardization stats are refitted on the training rows and frozen for both parts.
pub fn split(d: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train_idx, test_idx) = split_indices(d.len(), test_fraction, seed)?;
    Ok(split_by_indices(d, &train_idx, &test_idx))
}

pub fn split_indices(n: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::param("fraction", format!("{test_fraction} not in (0, 1)")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = (n as f64 * test_fraction).round() as usize;
    let test = idx[..n_test].to_vec();
    let train = idx[n_test..].to_vec();
    Ok((train, test))
}

pub fn split_by_indices(d: &Dataset, train_idx: &[usize], test_idx: &[usize]) -> (Dataset, Dataset) {
    let raw = decode(d);
    let pick =
        |idx: &[usize]| -> Vec<Vec<f64>> { raw.iter().map(|col| idx.iter().map(|&i| col[i]).collect()).collect() };
    let (train_raw, test_raw) = (pick(train_idx), pick(test_idx));
    let mut schema = d.schema.clone();
    for c in schema.columns.iter_mut() {
        c.mean = None;
        c.std = None;
    }
    fit_missing_stats(&mut schema, &train_raw);
    let train = encode(schema.clone(), &train_raw, SplitTag::Train).expect("re-encoding valid data");
    let test = encode(schema, &test_raw, SplitTag::Test).expect("re-encoding valid data");
    (train, test)
}
