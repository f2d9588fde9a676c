use std::io::{Read, Write};

use thiserror::Error;

use crate::scalar::{Matrix, Scalar};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset needs at least one sample, got 0")]
    NoSamples,
    #[error("dataset needs at least two variables, got {0}")]
    TooFewVariables(usize),
    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("{0} column names for {1} columns")]
    NameCount(usize, usize),
    #[error("row {row} out of range for {rows} samples")]
    RowOutOfRange { row: usize, rows: usize },
    #[error("CSV line {line}, column {column}: {message}")]
    Malformed {
        line: u64,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// `n × N` sample matrix; column order is the temporal order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    values: Matrix<T>,
    column_names: Vec<String>,
}

impl<T: Scalar> Dataset<T> {
    /// Validates shape and finiteness. Columns are named `X1..XN`.
    pub fn new(values: Matrix<T>) -> Result<Self, DatasetError> {
        let names = (1..=values.cols()).map(|v| format!("X{v}")).collect();
        Self::with_names(values, names)
    }

    pub fn with_names(values: Matrix<T>, column_names: Vec<String>) -> Result<Self, DatasetError> {
        if values.rows() == 0 {
            return Err(DatasetError::NoSamples);
        }
        if values.cols() < 2 {
            return Err(DatasetError::TooFewVariables(values.cols()));
        }
        if column_names.len() != values.cols() {
            return Err(DatasetError::NameCount(column_names.len(), values.cols()));
        }
        if let Some(pos) = values.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(DatasetError::NonFinite {
                row: pos / values.cols(),
                column: pos % values.cols(),
            });
        }
        Ok(Self {
            values,
            column_names,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.values.rows()
    }

    pub fn n_vars(&self) -> usize {
        self.values.cols()
    }

    pub fn values(&self) -> &Matrix<T> {
        &self.values
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    /// Keeps the listed rows in order.
    pub fn select_rows(&self, keep: &[usize]) -> Result<Self, DatasetError> {
        let rows = self.n_samples();
        if let Some(&row) = keep.iter().find(|&&r| r >= rows) {
            return Err(DatasetError::RowOutOfRange { row, rows });
        }
        Self::with_names(self.values.select_rows(keep), self.column_names.clone())
    }

    /// Reads a header row of column names followed by one sample per row.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, DatasetError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let names: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_owned()).collect();
        let n = names.len();
        let mut data = Vec::new();
        let mut rows = 0;
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != n {
                return Err(DatasetError::Malformed {
                    line,
                    column: record.len().min(n) + 1,
                    message: format!("expected {n} fields, found {}", record.len()),
                });
            }
            for (c, field) in record.iter().enumerate() {
                let parsed: f64 = field.trim().parse().map_err(|e| DatasetError::Malformed {
                    line,
                    column: c + 1,
                    message: format!("cannot parse {field:?} as a number: {e}"),
                })?;
                if !parsed.is_finite() {
                    return Err(DatasetError::Malformed {
                        line,
                        column: c + 1,
                        message: format!("non-finite value {field:?}"),
                    });
                }
                data.push(T::of(parsed));
            }
            rows += 1;
        }
        Self::with_names(Matrix::from_row_major(rows, n, data), names)
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<(), DatasetError> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(&self.column_names)?;
        let mut buf = Vec::with_capacity(self.n_vars());
        for r in 0..self.n_samples() {
            buf.clear();
            buf.extend(self.values.row(r).iter().map(|v| v.to_string()));
            wtr.write_record(&buf)?;
        }
        wtr.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}
