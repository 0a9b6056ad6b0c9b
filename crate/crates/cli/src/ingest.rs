//! CSV ingestion and export.
//!
//! Header row required, comma separated, `.` decimal point, no locale
//! handling. Row order is preserved.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use empbridge_core::{Dataset, Matrix};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("CSV parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("non-numeric field {value:?} at row {row}, column {column:?}")]
    NonNumericField {
        row: usize,
        column: String,
        value: String,
    },

    #[error("duplicate column name {0:?} in header")]
    DuplicateColumn(String),

    #[error("unknown column {0:?}")]
    UnknownColumn(String),

    #[error("column {0:?} is used more than once")]
    ColumnReused(String),

    #[error(transparent)]
    Dataset(#[from] empbridge_core::Error),
}

/// Which CSV columns make up the dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub response: String,
    /// Ordering column, or `None` when rows arrive pre-ordered.
    pub order_by: Option<String>,
    /// Explicit covariate list, or `None` for every column except the
    /// response.
    pub covariates: Option<Vec<String>>,
}

/// A numeric table read from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    /// Row-major values.
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Result<usize, IngestError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::UnknownColumn(name.to_string()))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }
}

pub fn read_table_from<R: Read>(reader: R) -> Result<Table, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| IngestError::Parse {
            row: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let mut seen = HashSet::new();
    for h in &header {
        if !seen.insert(h.as_str()) {
            return Err(IngestError::DuplicateColumn(h.clone()));
        }
    }

    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        // data rows are numbered from 2 (the header is row 1)
        let row = i + 2;
        let rec = rec.map_err(|e| IngestError::Parse {
            row,
            message: e.to_string(),
        })?;
        let values = rec
            .iter()
            .zip(&header)
            .map(|(field, column)| {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| IngestError::NonNumericField {
                        row,
                        column: column.clone(),
                        value: field.to_string(),
                    })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(values);
    }
    Ok(Table { header, rows })
}

pub fn read_table(path: &Path) -> Result<Table, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_table_from(file)
}

/// How the resulting dataset should be ordered by the test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering {
    Preordered,
    /// The ordering column is an external key outside the design.
    ExternalKey,
    /// The ordering column is covariate `j` of the design.
    Covariate(usize),
}

/// Maps table columns onto a dataset.
///
/// With `covariates = None` every column but the response is a covariate,
/// including the ordering column. An explicit covariate list that omits the
/// ordering column makes it an external key.
pub fn to_dataset(table: &Table, map: &ColumnMap) -> Result<(Dataset, Ordering), IngestError> {
    let resp = table.column_index(&map.response)?;
    let order = map
        .order_by
        .as_deref()
        .map(|c| table.column_index(c))
        .transpose()?;

    let cov_idx: Vec<usize> = match &map.covariates {
        None => (0..table.header.len()).filter(|&j| j != resp).collect(),
        Some(names) => {
            let mut idx = Vec::with_capacity(names.len());
            for name in names {
                let j = table.column_index(name)?;
                if j == resp || idx.contains(&j) {
                    return Err(IngestError::ColumnReused(name.clone()));
                }
                idx.push(j);
            }
            idx
        }
    };
    if order == Some(resp) {
        return Err(IngestError::ColumnReused(map.response.clone()));
    }

    let n = table.rows.len();
    let m = cov_idx.len();
    let flat = table
        .rows
        .iter()
        .flat_map(|r| cov_idx.iter().map(move |&j| r[j]))
        .collect();
    let x = Matrix::new(n, m, flat)?;
    let y = table.column(resp);
    let key = order.map(|j| table.column(j));
    let ordering = match order {
        None => Ordering::Preordered,
        Some(j) => match cov_idx.iter().position(|&c| c == j) {
            Some(pos) => Ordering::Covariate(pos),
            None => Ordering::ExternalKey,
        },
    };
    Ok((Dataset::new(key, x, y)?, ordering))
}

pub fn ingest_csv(path: &Path, map: &ColumnMap) -> Result<(Dataset, Ordering), IngestError> {
    to_dataset(&read_table(path)?, map)
}

/// Writes a dataset as CSV with columns `key` (if present), `x1..xm`, `y`.
/// Values use the shortest representation that parses back exactly.
pub fn write_dataset_csv<W: Write>(ds: &Dataset, w: W) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = Vec::new();
    if ds.order_key().is_some() {
        header.push("key".to_string());
    }
    header.extend((1..=ds.m()).map(|j| format!("x{j}")));
    header.push("y".to_string());
    wtr.write_record(&header)?;
    for i in 0..ds.n() {
        let mut rec = Vec::with_capacity(header.len());
        if let Some(k) = ds.order_key() {
            rec.push(k[i].to_string());
        }
        rec.extend(ds.x().row(i).iter().map(f64::to_string));
        rec.push(ds.y()[i].to_string());
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(order_by: Option<&str>, covariates: Option<&[&str]>) -> ColumnMap {
        ColumnMap {
            response: "y".into(),
            order_by: order_by.map(str::to_string),
            covariates: covariates.map(|c| c.iter().map(|s| s.to_string()).collect()),
        }
    }

    #[test]
    fn smoke() {
        let t = read_table_from("x,y\n1,2\n3,4\n2,5\n".as_bytes()).unwrap();
        let (ds, ord) = to_dataset(&t, &map(Some("x"), None)).unwrap();
        assert_eq!((ds.n(), ds.m()), (3, 1));
        assert_eq!(ord, Ordering::Covariate(0));
        assert_eq!(ds.order_key().unwrap(), &[1.0, 3.0, 2.0]);
    }

    #[test]
    fn explicit_covariates_make_external_key() {
        let t = read_table_from("u,x,y\n0.3,1,2\n0.1,3,4\n0.2,2,5\n".as_bytes()).unwrap();
        let (ds, ord) = to_dataset(&t, &map(Some("u"), Some(&["x"]))).unwrap();
        assert_eq!(ord, Ordering::ExternalKey);
        assert_eq!(ds.m(), 1);
        assert_eq!(ds.x().column(0), vec![1.0, 3.0, 2.0]);

        let (_, ord) = to_dataset(&t, &map(None, Some(&["x"]))).unwrap();
        assert_eq!(ord, Ordering::Preordered);
    }

    #[test]
    fn nan_field_is_rejected_with_location() {
        let err = read_table_from("x,y\n1,2\n3,NaN\n".as_bytes()).unwrap_err();
        match err {
            IngestError::NonNumericField { row, column, .. } => {
                assert_eq!(row, 3);
                assert_eq!(column, "y");
            }
            e => panic!("unexpected {e}"),
        }
        assert!(matches!(
            read_table_from("x,y\n1,abc\n".as_bytes()),
            Err(IngestError::NonNumericField { .. })
        ));
    }

    #[test]
    fn duplicate_header() {
        assert!(matches!(
            read_table_from("x,x,y\n1,2,3\n".as_bytes()),
            Err(IngestError::DuplicateColumn(c)) if c == "x"
        ));
    }

    #[test]
    fn ragged_row_is_a_parse_error() {
        assert!(matches!(
            read_table_from("x,y\n1,2\n3\n".as_bytes()),
            Err(IngestError::Parse { row: 3, .. })
        ));
    }

    #[test]
    fn unknown_and_reused_columns() {
        let t = read_table_from("x,y\n1,2\n3,4\n2,5\n".as_bytes()).unwrap();
        assert!(matches!(
            to_dataset(&t, &map(Some("z"), None)),
            Err(IngestError::UnknownColumn(_))
        ));
        assert!(matches!(
            to_dataset(&t, &map(None, Some(&["x", "y"]))),
            Err(IngestError::ColumnReused(_))
        ));
    }
}
