//! CSV input: datasets with named label columns, and seed files.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::types::{Dataset, SeedSet};

/// A dataset together with the names of its feature and label columns.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedDataset {
    pub data: Dataset,
    pub feature_names: Vec<String>,
    pub label_names: Vec<String>,
}

fn data_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Data {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Reads a headed numeric CSV. Label columns become `Y`; every other column
/// becomes a feature, in file order.
pub fn load_csv(path: &Path, label_columns: &[String]) -> Result<NamedDataset> {
    if label_columns.is_empty() {
        return Err(data_error(path, "no label columns given"));
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data_error(path, e.to_string()))?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();

    let mut label_idx = Vec::with_capacity(label_columns.len());
    for name in label_columns {
        let idx = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| data_error(path, format!("label column '{name}' not in header")))?;
        if label_idx.contains(&idx) {
            return Err(data_error(path, format!("label column '{name}' given twice")));
        }
        label_idx.push(idx);
    }
    let feature_idx: Vec<usize> = (0..headers.len()).filter(|i| !label_idx.contains(i)).collect();
    if feature_idx.is_empty() {
        return Err(data_error(path, "no feature columns left after removing labels"));
    }

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut rows = 0;
    for (k, record) in reader.records().enumerate() {
        // Header is line 1, so data row k sits on line k + 2.
        let line = k + 2;
        let record = record.map_err(|e| data_error(path, format!("row {line}: {e}")))?;
        let parse = |i: usize| -> Result<f64> {
            let cell = record.get(i).unwrap_or("");
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(data_error(
                    path,
                    format!("row {line}, column '{}': cannot parse '{cell}' as a number", headers[i]),
                )),
            }
        };
        for &i in &feature_idx {
            xs.push(parse(i)?);
        }
        for &i in &label_idx {
            ys.push(parse(i)?);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(data_error(path, "no data rows"));
    }
    let x = DMatrix::from_row_slice(rows, feature_idx.len(), &xs);
    let y = DMatrix::from_row_slice(rows, label_idx.len(), &ys);
    Ok(NamedDataset {
        data: Dataset::new(x, y)?,
        feature_names: feature_idx.iter().map(|&i| headers[i].clone()).collect(),
        label_names: label_idx.iter().map(|&i| headers[i].clone()).collect(),
    })
}

#[derive(serde::Deserialize)]
struct SeedRow {
    x_row: usize,
    y_row: usize,
}

/// Reads an `x_row,y_row` CSV and validates it against `n` rows.
pub fn load_seeds(path: &Path, n: usize) -> Result<SeedSet> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data_error(path, e.to_string()))?;
    let mut pairs = Vec::new();
    for (k, row) in reader.deserialize::<SeedRow>().enumerate() {
        let row = row.map_err(|e| data_error(path, format!("row {}: {e}", k + 2)))?;
        pairs.push((row.x_row, row.y_row));
    }
    SeedSet::new(&pairs, n).map_err(|e| data_error(path, e.to_string()))
}

/// Writes seeds in the format read by [`load_seeds`].
pub fn write_seeds(path: &Path, seeds: &SeedSet) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x_row", "y_row"])?;
    for (x, y) in seeds.pairs() {
        w.write_record([x.to_string(), y.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reads_features_and_labels() {
        let f = file("a,b,y\n1,2,3\n4,5,6\n7,8,9\n");
        let d = load_csv(f.path(), &["y".into()]).unwrap();
        assert_eq!(d.data.x().shape(), (3, 2));
        assert_eq!(d.data.y().shape(), (3, 1));
        assert_eq!(d.data.x()[(2, 1)], 8.0);
        assert_eq!(d.data.y()[(1, 0)], 6.0);
        assert_eq!(d.feature_names, ["a", "b"]);
    }

    #[test]
    fn label_in_the_middle_keeps_feature_order() {
        let f = file("a,y,b\n1,2,3\n");
        let d = load_csv(f.path(), &["y".into()]).unwrap();
        assert_eq!(d.data.x().row(0).iter().copied().collect::<Vec<_>>(), [1.0, 3.0]);
    }

    #[test]
    fn blank_cell_names_the_row() {
        let f = file("a,b,y\n1,2,3\n4,,6\n");
        let err = load_csv(f.path(), &["y".into()]).unwrap_err().to_string();
        assert!(err.contains("row 3"), "{err}");
        assert!(err.contains("'b'"), "{err}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let f = file("a,b,y\n");
        assert!(load_csv(f.path(), &["y".into()]).is_err());
        let f = file("a,y\n1,x\n");
        assert!(load_csv(f.path(), &["y".into()]).is_err());
        let f = file("a,y\n1,2\n");
        assert!(load_csv(f.path(), &["z".into()]).is_err());
        assert!(load_csv(Path::new("/nonexistent/file.csv"), &["y".into()]).is_err());
    }

    #[test]
    fn seeds_round_trip() {
        let seeds = SeedSet::new(&[(0, 2), (3, 1)], 5).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_seeds(f.path(), &seeds).unwrap();
        assert_eq!(load_seeds(f.path(), 5).unwrap(), seeds);
        assert!(load_seeds(f.path(), 3).is_err());
        let dup = file("x_row,y_row\n0,1\n0,2\n");
        assert!(load_seeds(dup.path(), 5).is_err());
    }
}
