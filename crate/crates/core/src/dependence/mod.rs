//! Rank-based dependence measures and pairwise distance matrices.

mod hoeffding;
mod kendall;
mod ranks;

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub use hoeffding::hoeffding_d;
pub use kendall::{
    empirical_kendall_distribution, independence_deviation, integrate_squared_combination,
    kendall_dist_distance, kendall_scores, kendall_tau, KendallDistribution,
};
pub use ranks::average_ranks;

/// Raw data: `n` rows of `d` named columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

fn check_columns(names: &[String], columns: &[Vec<f64>]) -> Result<()> {
    if names.len() != columns.len() {
        return Err(Error::LengthMismatch(names.len(), columns.len()));
    }
    let n = columns.first().map_or(0, Vec::len);
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidData("columns have different lengths".into()));
    }
    if n < 3 {
        return Err(Error::InvalidData(format!("need at least 3 rows, got {n}")));
    }
    if columns.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("non-finite value".into()));
    }
    let mut seen = std::collections::HashSet::new();
    for name in names {
        if name.is_empty() || !seen.insert(name.as_str()) {
            return Err(Error::InvalidData(format!("empty or duplicate column name `{name}`")));
        }
    }
    Ok(())
}

impl Dataset {
    pub fn from_columns(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        check_columns(&names, &columns)?;
        Ok(Dataset { names, columns })
    }

    /// Reads a comma-separated file whose first row holds the column names.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let names: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut columns = vec![Vec::new(); names.len()];
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != names.len() {
                return Err(Error::InvalidData(format!(
                    "row {} has {} fields, expected {}",
                    row + 2,
                    record.len(),
                    names.len()
                )));
            }
            for (col, field) in record.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| {
                    Error::InvalidData(format!("row {} column `{}`: `{field}` is not a number", row + 2, names[col]))
                })?;
                columns[col].push(v);
            }
        }
        Self::from_columns(names, columns)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn n(&self) -> usize {
        self.columns[0].len()
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    /// Writes the data as CSV with a header row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.names)?;
        for i in 0..self.n() {
            w.write_record(self.columns.iter().map(|c| format!("{}", c[i])))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Column-wise normalized ranks `rank / (n + 1)`, strictly inside (0, 1).
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoObservations {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl PseudoObservations {
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn n(&self) -> usize {
        self.columns[0].len()
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select(&self, cols: &[usize]) -> PseudoObservations {
        PseudoObservations {
            names: cols.iter().map(|&c| self.names[c].clone()).collect(),
            columns: cols.iter().map(|&c| self.columns[c].clone()).collect(),
        }
    }
}

pub fn pseudo_observations(data: &Dataset) -> PseudoObservations {
    let scale = 1.0 / (data.n() as f64 + 1.0);
    PseudoObservations {
        names: data.names.clone(),
        columns: data
            .columns
            .iter()
            .map(|c| average_ranks(c).into_iter().map(|r| r * scale).collect())
            .collect(),
    }
}

impl Dataset {
    pub fn pseudo_observations(&self) -> PseudoObservations {
        pseudo_observations(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DependenceKind {
    /// `1 - tau`.
    KendallTau,
    /// Maximal Hoeffding D at this sample size minus the estimate.
    HoeffdingD,
    /// Rescaled deviation of the empirical Kendall distribution from the
    /// independence one; 0 for the most dependent pair, 1 for independence.
    KendallIndependence,
}

impl DependenceKind {
    pub fn name(self) -> &'static str {
        match self {
            DependenceKind::KendallTau => "kt",
            DependenceKind::HoeffdingD => "hD",
            DependenceKind::KendallIndependence => "kind",
        }
    }
}

impl fmt::Display for DependenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DependenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kt" => Ok(DependenceKind::KendallTau),
            "hd" => Ok(DependenceKind::HoeffdingD),
            "kind" => Ok(DependenceKind::KendallIndependence),
            _ => Err(Error::InvalidParameter(format!("unknown dependence kind `{s}`"))),
        }
    }
}

/// Symmetric matrix of pairwise distances with zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct DependenceMatrix {
    names: Vec<String>,
    values: Vec<f64>,
    kind: Option<DependenceKind>,
}

impl DependenceMatrix {
    /// Generic distance matrix from rows; checked for symmetry and finiteness.
    pub fn from_rows(names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = names.len();
        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidData("matrix is not square".into()));
        }
        let m = DependenceMatrix {
            names,
            values: rows.into_iter().flatten().collect(),
            kind: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        for i in 0..d {
            for j in 0..d {
                let v = self.get(i, j);
                if !v.is_finite() {
                    return Err(Error::InvalidData(format!("entry ({i},{j}) is not finite")));
                }
                if (v - self.get(j, i)).abs() > 1e-12 * (1.0 + v.abs()) {
                    return Err(Error::InvalidData(format!("matrix is not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn kind(&self) -> Option<DependenceKind> {
        self.kind
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.names.len() + j]
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![String::new()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for i in 0..self.dim() {
            let mut row = vec![self.names[i].clone()];
            row.extend((0..self.dim()).map(|j| format!("{}", self.get(i, j))));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Pairwise dependence distances between the columns of `u`.
pub fn dependence_matrix(u: &PseudoObservations, kind: DependenceKind) -> Result<DependenceMatrix> {
    let d = u.dim();
    let n = u.n();
    let mut raw = vec![0.0; d * d];
    for i in 0..d {
        for j in i + 1..d {
            let (x, y) = (u.column(i), u.column(j));
            let v = match kind {
                DependenceKind::KendallTau => 1.0 - kendall_tau(x, y)?,
                DependenceKind::HoeffdingD => hoeffding_d(x, y)?,
                DependenceKind::KendallIndependence => independence_deviation(x, y)?,
            };
            raw[i * d + j] = v;
            raw[j * d + i] = v;
        }
    }
    match kind {
        DependenceKind::KendallTau => {}
        DependenceKind::HoeffdingD => {
            let ramp: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let d_max = hoeffding_d(&ramp, &ramp)?;
            for i in 0..d {
                for j in 0..d {
                    if i != j {
                        raw[i * d + j] = d_max - raw[i * d + j];
                    }
                }
            }
        }
        DependenceKind::KendallIndependence => {
            let max = raw.iter().cloned().fold(0.0, f64::max);
            for i in 0..d {
                for j in 0..d {
                    if i != j {
                        raw[i * d + j] = if max > 0.0 { (max - raw[i * d + j]) / max } else { 0.0 };
                    }
                }
            }
        }
    }
    Ok(DependenceMatrix {
        names: u.names.clone(),
        values: raw,
        kind: Some(kind),
    })
}
