//! Observation data model, CSV ingestion and lagged sample construction.
//!
//! A [`TimeSeriesDataset`] is a T×N table (rows are time steps, columns are
//! variables). Every conditional-independence test consumes a
//! [`LaggedSampleArrays`] built against one shared window: with maximum lag
//! `tau_max`, the rows used are target times `tau_max..T`, so all tests of a
//! run see the same `n = T - tau_max` samples.

use std::cmp::Ordering;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset {
    names: Vec<String>,
    /// Column-major storage, one `Vec` of length T per variable.
    columns: Vec<Vec<f64>>,
    standardized: bool,
}

impl TimeSeriesDataset {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::Contract(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        if columns.is_empty() {
            return Err(Error::Contract("dataset has no variables".into()));
        }
        let t = columns[0].len();
        for (c, col) in columns.iter().enumerate() {
            if col.len() != t {
                return Err(Error::Contract(format!(
                    "column '{}' has {} rows, expected {t}",
                    names[c],
                    col.len()
                )));
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::MissingData { row, column: c });
            }
        }
        Ok(Self {
            names,
            columns,
            standardized: false,
        })
    }

    /// Builds a dataset with default names `X0..X{N-1}`.
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let names = (0..columns.len()).map(|i| format!("X{i}")).collect();
        Self::new(names, columns)
    }

    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let n = names.len();
        let mut columns = vec![Vec::with_capacity(rows.len()); n];
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Parse {
                    row: r + 1,
                    column: row.len().min(n),
                    message: format!("expected {n} fields, found {}", row.len()),
                });
            }
            for (c, v) in row.iter().enumerate() {
                columns[c].push(*v);
            }
        }
        Self::new(names, columns)
    }

    /// Number of time steps.
    pub fn len_t(&self) -> usize {
        self.columns[0].len()
    }

    /// Number of variables.
    pub fn n_vars(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, var: usize) -> &[f64] {
        &self.columns[var]
    }

    pub fn value(&self, t: usize, var: usize) -> f64 {
        self.columns[var][t]
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    /// Zero mean and unit sample standard deviation (n - 1 denominator) per column.
    pub fn standardize(&self) -> Result<Self> {
        let mut columns = self.columns.clone();
        for (c, col) in columns.iter_mut().enumerate() {
            if !stats::standardize(col) {
                return Err(Error::DegenerateVariance {
                    name: self.names[c].clone(),
                });
            }
        }
        Ok(Self {
            names: self.names.clone(),
            columns,
            standardized: true,
        })
    }

    /// Applies `f` to every column, producing a dataset of possibly different length.
    pub fn map_columns(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Self> {
        let columns = self.columns.iter().map(|c| f(c)).collect();
        Self::new(self.names.clone(), columns)
    }

    pub fn read_csv<R: Read>(reader: R, standardize: bool) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Parse {
            row: 0,
            column: 0,
            message: e.to_string(),
        })?;
        let names: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();
        if names.is_empty() || names.iter().all(|n| n.is_empty()) {
            return Err(Error::Parse {
                row: 0,
                column: 0,
                message: "missing header row".into(),
            });
        }
        let mut columns = vec![Vec::new(); names.len()];
        for (r, rec) in rdr.records().enumerate() {
            let row = r + 1;
            let rec = rec.map_err(|e| Error::Parse {
                row,
                column: 0,
                message: e.to_string(),
            })?;
            if rec.len() < names.len() {
                return Err(Error::MissingData { row, column: rec.len() });
            }
            if rec.len() > names.len() {
                return Err(Error::Parse {
                    row,
                    column: names.len(),
                    message: format!("expected {} fields, found {}", names.len(), rec.len()),
                });
            }
            for (c, field) in rec.iter().enumerate() {
                let field = field.trim();
                if field.is_empty() || field.eq_ignore_ascii_case("nan") || field.eq_ignore_ascii_case("na") {
                    return Err(Error::MissingData { row, column: c });
                }
                let v: f64 = field.parse().map_err(|_| Error::Parse {
                    row,
                    column: c,
                    message: format!("'{field}' is not a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        row,
                        column: c,
                        message: format!("'{field}' is not finite"),
                    });
                }
                columns[c].push(v);
            }
        }
        if columns[0].is_empty() {
            return Err(Error::Parse {
                row: 1,
                column: 0,
                message: "no data rows".into(),
            });
        }
        let ds = Self::new(names, columns)?;
        if standardize {
            ds.standardize()
        } else {
            Ok(ds)
        }
    }

    pub fn load_csv(path: impl AsRef<Path>, standardize: bool) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file), standardize)
    }

    /// Writes shortest round-trip decimal representations, so reloading is bit-exact.
    pub fn write_csv_to<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| Error::Contract(format!("csv write failed: {e}"));
        w.write_record(&self.names).map_err(csv_err)?;
        let mut buf = Vec::with_capacity(self.n_vars());
        for t in 0..self.len_t() {
            buf.clear();
            buf.extend(self.columns.iter().map(|c| format!("{}", c[t])));
            w.write_record(&buf).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(std::io::BufWriter::new(file))
    }
}

/// One lagged variable `X^var_{t-lag}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LaggedVariable {
    pub var: usize,
    pub lag: usize,
}

impl LaggedVariable {
    pub const fn new(var: usize, lag: usize) -> Self {
        Self { var, lag }
    }

    pub const fn shifted(self, by: usize) -> Self {
        Self {
            var: self.var,
            lag: self.lag + by,
        }
    }
}

/// Ascending by `(lag, var)`.
impl Ord for LaggedVariable {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.lag, self.var).cmp(&(other.lag, other.var))
    }
}

impl PartialOrd for LaggedVariable {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for LaggedVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "X{}(t-{})", self.var, self.lag)
    }
}

/// Time-aligned samples for one test `X ⊥ Y | Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaggedSampleArrays {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Conditioning columns, each of length `n`.
    pub z: Vec<Vec<f64>>,
}

impl LaggedSampleArrays {
    pub fn new(x: Vec<f64>, y: Vec<f64>, z: Vec<Vec<f64>>) -> Result<Self> {
        let n = x.len();
        if y.len() != n || z.iter().any(|c| c.len() != n) {
            return Err(Error::Contract("sample arrays have unequal lengths".into()));
        }
        Ok(Self { x, y, z })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn dim_z(&self) -> usize {
        self.z.len()
    }

    /// Copy with x, y and every z column standardized over the window.
    pub(crate) fn standardized(&self) -> Result<Self> {
        let mut out = self.clone();
        if !stats::standardize(&mut out.x) {
            return Err(Error::Degenerate("x has zero variance in the test window".into()));
        }
        if !stats::standardize(&mut out.y) {
            return Err(Error::Degenerate("y has zero variance in the test window".into()));
        }
        for c in &mut out.z {
            // A constant conditioner carries no information; centering it is enough.
            if !stats::standardize(c) {
                c.iter_mut().for_each(|v| *v = 0.0);
            }
        }
        Ok(out)
    }
}

/// Materializes `x`, `y` and `conds` on the shared window `tau_max..T`.
///
/// Row `k` corresponds to target time `t = tau_max + k`; the entry for a
/// lagged variable `(var, lag)` is `values[t - lag, var]`.
pub fn build_lagged_arrays(
    ds: &TimeSeriesDataset,
    x: LaggedVariable,
    y: LaggedVariable,
    conds: &[LaggedVariable],
    tau_max: usize,
) -> Result<LaggedSampleArrays> {
    for v in std::iter::once(&x).chain(std::iter::once(&y)).chain(conds) {
        if v.lag > tau_max {
            return Err(Error::Contract(format!(
                "{v} has lag {} beyond tau_max = {tau_max}",
                v.lag
            )));
        }
        if v.var >= ds.n_vars() {
            return Err(Error::Contract(format!(
                "{v} refers to a variable outside 0..{}",
                ds.n_vars()
            )));
        }
    }
    let t_len = ds.len_t();
    let n = t_len.saturating_sub(tau_max);
    let required = conds.len() + 3;
    if n < required {
        return Err(Error::InsufficientSamples { n, required });
    }
    let slice = |v: &LaggedVariable| -> Vec<f64> {
        let start = tau_max - v.lag;
        ds.column(v.var)[start..start + n].to_vec()
    };
    Ok(LaggedSampleArrays {
        x: slice(&x),
        y: slice(&y),
        z: conds.iter().map(slice).collect(),
    })
}
