//! Numeric CSV tables.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use rectboost_core::{Dataset, Task};

use crate::error::{Error, Result};

/// A CSV file with a header row and numeric cells only.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_table(path: impl AsRef<Path>) -> Result<Table> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_table_from(file, path)
}

/// `source` only labels error messages.
pub fn read_table_from<R: Read>(reader: R, source: impl Into<PathBuf>) -> Result<Table> {
    let source = source.into();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::csv(&source, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(Error::Format(format!("{}: missing header row", source.display())));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::csv(&source, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let mut row = Vec::with_capacity(headers.len());
        for (cell, column) in record.iter().zip(&headers) {
            let value = cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                Error::BadCell {
                    path: source.clone(),
                    line,
                    column: column.clone(),
                    value: cell.to_owned(),
                }
            })?;
            row.push(value);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Format(format!("{}: no data rows", source.display())));
    }
    Ok(Table { headers, rows })
}

impl Table {
    /// Resolves a column given by name, or by zero-based index when no
    /// column carries that name.
    pub fn column_index(&self, spec: &str) -> Result<usize> {
        if let Some(j) = self.headers.iter().position(|h| h == spec) {
            return Ok(j);
        }
        match spec.parse::<usize>() {
            Ok(j) if j < self.headers.len() => Ok(j),
            _ => Err(Error::Usage(format!(
                "no column '{spec}' (columns: {})",
                self.headers.join(", ")
            ))),
        }
    }

    /// Splits off the target column; every other column becomes a feature.
    pub fn into_dataset(self, target: &str, task: Task) -> Result<Dataset> {
        let t = self.column_index(target)?;
        if self.headers.len() < 2 {
            return Err(Error::Format("need at least one feature column besides the target".into()));
        }
        let names: Vec<String> =
            self.headers.iter().enumerate().filter(|&(j, _)| j != t).map(|(_, h)| h.clone()).collect();
        let d = names.len();
        let mut features = Vec::with_capacity(self.rows.len() * d);
        let mut targets = Vec::with_capacity(self.rows.len());
        for row in self.rows {
            for (j, v) in row.into_iter().enumerate() {
                if j == t {
                    targets.push(v);
                } else {
                    features.push(v);
                }
            }
        }
        Ok(Dataset::new(features, d, targets, names, task)?)
    }

    /// Feature rows in the order of `names`, matched by header. Falls back to
    /// positional columns when the headers do not match but the width does.
    pub fn select_features(&self, names: &[String]) -> Result<Vec<Vec<f64>>> {
        let by_name: Option<Vec<usize>> =
            names.iter().map(|n| self.headers.iter().position(|h| h == n)).collect();
        let columns = match by_name {
            Some(c) => c,
            None if self.headers.len() == names.len() => {
                log::warn!("column names differ from the model's; using columns by position");
                (0..names.len()).collect()
            }
            None => {
                return Err(Error::Format(format!(
                    "data has columns [{}] but the model expects [{}]",
                    self.headers.join(", "),
                    names.join(", ")
                )));
            }
        };
        Ok(self.rows.iter().map(|r| columns.iter().map(|&j| r[j]).collect()).collect())
    }

    /// The column named `target`, or `None` when absent.
    pub fn column(&self, target: &str) -> Option<Vec<f64>> {
        let j = self.headers.iter().position(|h| h == target)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

/// Destination given by an optional `--out` flag.
pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| Error::io(p, e))?;
            Ok(Box::new(io::BufWriter::new(f)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

/// Writes a header and rows. Floats use the shortest representation that
/// reads back to the same value.
pub fn write_rows<S: AsRef<str>>(
    out: &mut dyn Write,
    headers: &[S],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(headers.iter().map(AsRef::as_ref))?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()
}

/// Features followed by a `y` column.
pub fn write_dataset(out: &mut dyn Write, ds: &Dataset) -> io::Result<()> {
    let mut headers: Vec<&str> = ds.feature_names().iter().map(String::as_str).collect();
    headers.push("y");
    let rows = (0..ds.n_rows()).map(|i| {
        let mut r: Vec<String> = ds.row(i).iter().map(f64::to_string).collect();
        r.push(ds.target(i).to_string());
        r
    });
    write_rows(out, &headers, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(text: &str) -> Result<Table> {
        read_table_from(text.as_bytes(), "mem.csv")
    }

    #[test]
    fn parses_numeric_csv() {
        let t = table("a,b,y\n1,2,3\n4, 5 ,6\n").unwrap();
        assert_eq!(t.headers, ["a", "b", "y"]);
        assert_eq!(t.rows, [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
    }

    #[test]
    fn reports_bad_cells_with_position() {
        let err = table("a,y\n1,2\nfoo,3\n").unwrap_err().to_string();
        assert!(err.contains("line 3") && err.contains("'a'") && err.contains("foo"), "{err}");
        assert!(table("a,y\n1,nan\n").is_err());
        assert!(table("a,y\n").is_err());
        assert!(table("a,y\n1,2,3\n").is_err());
    }

    #[test]
    fn target_by_name_or_index() {
        let t = table("a,y,b\n1,2,3\n4,5,6\n").unwrap();
        assert_eq!(t.column_index("y").unwrap(), 1);
        assert_eq!(t.column_index("2").unwrap(), 2);
        assert!(t.column_index("7").is_err());
        let ds = t.into_dataset("y", Task::Regression).unwrap();
        assert_eq!(ds.feature_names(), ["a", "b"]);
        assert_eq!(ds.row(1), [4.0, 6.0]);
        assert_eq!(ds.targets(), [2.0, 5.0]);
    }

    #[test]
    fn selects_model_columns() {
        let t = table("b,a,y\n1,2,3\n").unwrap();
        let names = vec!["a".to_owned(), "b".to_owned()];
        assert_eq!(t.select_features(&names).unwrap(), [[2.0, 1.0]]);
        let positional = table("p,q\n1,2\n").unwrap();
        assert_eq!(positional.select_features(&names).unwrap(), [[1.0, 2.0]]);
        assert!(table("p\n1\n").unwrap().select_features(&names).is_err());
    }

    #[test]
    fn dataset_round_trip() {
        let ds = rectboost_core::synthetic::gen_two_moons(10, 0.1, 3).unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &ds).unwrap();
        let back = read_table_from(buf.as_slice(), "mem")
            .unwrap()
            .into_dataset("y", Task::BinaryClassification)
            .unwrap();
        assert_eq!(back.targets(), ds.targets());
        for i in 0..ds.n_rows() {
            assert_eq!(back.row(i), ds.row(i));
        }
    }
}
