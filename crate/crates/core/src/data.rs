//! Samples and datasets, including delimited-text ingestion.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

/// An ordered collection of at least two finite observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::precondition(format!(
                "a sample needs at least 2 observations, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite observation {bad}")));
        }
        Ok(Sample { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Negate every observation.
    pub fn negated(&self) -> Sample {
        Sample {
            values: self.values.iter().map(|v| -v).collect(),
        }
    }

    /// Add `delta` to every observation.
    pub fn shifted(&self, delta: f64) -> Sample {
        Sample {
            values: self.values.iter().map(|v| v + delta).collect(),
        }
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl TryFrom<Vec<f64>> for Sample {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Sample::new(values)
    }
}

/// A named numeric column.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

/// Units with a response and optional covariates, one row per unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    response: Column,
    covariates: Vec<Column>,
}

impl Dataset {
    pub fn new(response: Column, covariates: Vec<Column>) -> Result<Self> {
        let n = response.values.len();
        if n < 2 {
            return Err(Error::precondition(format!(
                "dataset needs n >= 2 rows, got {n}"
            )));
        }
        for col in std::iter::once(&response).chain(&covariates) {
            if col.values.len() != n {
                return Err(Error::Data(format!(
                    "column `{}` has {} rows, expected {n}",
                    col.name,
                    col.values.len()
                )));
            }
            if col.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!(
                    "column `{}` has non-finite values",
                    col.name
                )));
            }
        }
        Ok(Dataset {
            response,
            covariates,
        })
    }

    /// One-sample data: a response column and nothing else.
    pub fn one_sample(name: &str, values: Vec<f64>) -> Result<Self> {
        Dataset::new(
            Column {
                name: name.to_string(),
                values,
            },
            Vec::new(),
        )
    }

    pub fn n(&self) -> usize {
        self.response.values.len()
    }

    pub fn response(&self) -> &[f64] {
        &self.response.values
    }

    pub fn response_name(&self) -> &str {
        &self.response.name
    }

    pub fn covariates(&self) -> &[Column] {
        &self.covariates
    }

    pub fn covariate(&self, name: &str) -> Option<&Column> {
        self.covariates.iter().find(|c| c.name == name)
    }

    pub(crate) fn response_mut(&mut self) -> &mut Vec<f64> {
        &mut self.response.values
    }

    pub(crate) fn covariate_mut(&mut self, idx: usize) -> &mut Vec<f64> {
        &mut self.covariates[idx].values
    }

    /// Rows `idx[0], idx[1], ...` of this dataset, in that order.
    pub(crate) fn select_rows(&self, idx: &[usize]) -> Dataset {
        let pick = |col: &Column| Column {
            name: col.name.clone(),
            values: idx.iter().map(|&i| col.values[i]).collect(),
        };
        Dataset {
            response: pick(&self.response),
            covariates: self.covariates.iter().map(pick).collect(),
        }
    }

    /// The response as a [`Sample`].
    pub fn sample(&self) -> Result<Sample> {
        Sample::new(self.response.values.clone())
    }

    /// Read a headered, comma-separated file. `response` names the response
    /// column; every other column becomes a covariate. With `response = None`
    /// the file must have exactly one column.
    pub fn from_csv_path(path: impl AsRef<Path>, response: Option<&str>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
        Dataset::from_csv_reader(file, response)
    }

    pub fn from_csv_reader<R: Read>(reader: R, response: Option<&str>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Data(format!("cannot read header: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        let resp_idx = match response {
            Some(name) => headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingColumn(name.to_string()))?,
            None if headers.len() == 1 => 0,
            None => {
                return Err(Error::precondition(format!(
                    "file has {} columns; name the response column",
                    headers.len()
                )))
            }
        };
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
        for (line, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Data(format!("row {}: {e}", line + 1)))?;
            if record.len() != headers.len() {
                return Err(Error::Data(format!(
                    "row {} has {} fields, expected {}",
                    line + 1,
                    record.len(),
                    headers.len()
                )));
            }
            for (j, field) in record.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| {
                    Error::Data(format!(
                        "row {}, column `{}`: not a number: {field:?}",
                        line + 1,
                        headers[j]
                    ))
                })?;
                cols[j].push(v);
            }
        }
        let mut response_col = None;
        let mut covariates = Vec::new();
        for (j, (name, values)) in headers.into_iter().zip(cols).enumerate() {
            let col = Column { name, values };
            if j == resp_idx {
                response_col = Some(col);
            } else {
                covariates.push(col);
            }
        }
        Dataset::new(
            response_col.expect("response index is in range"),
            covariates,
        )
    }
}

impl From<Sample> for Dataset {
    fn from(s: Sample) -> Self {
        Dataset {
            response: Column {
                name: "x".to_string(),
                values: s.into_values(),
            },
            covariates: Vec::new(),
        }
    }
}
