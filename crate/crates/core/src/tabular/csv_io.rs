use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use super::{format_number, Column, Result, Table, TabularError};

/// Reads a headed CSV file. A column is numeric when every non-empty cell
/// parses as a number; empty cells are missing.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Table> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(TabularError::FileMissing(path.to_path_buf()));
    }
    let file = File::open(path)?;
    if file.metadata()?.len() == 0 {
        return Err(TabularError::EmptyFile(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(BufReader::new(file));
    let names: Vec<String> =
        reader.headers()?.iter().map(|h| h.trim().trim_start_matches('\u{feff}').to_string()).collect();
    if names.is_empty() || (names.len() == 1 && names[0].is_empty()) {
        return Err(TabularError::EmptyFile(path.to_path_buf()));
    }
    let n_cols = names.len();
    let mut raw: Vec<Vec<Option<String>>> = vec![Vec::new(); n_cols];
    for record in reader.records() {
        let record = record?;
        if record.len() != n_cols {
            let line = record.position().map_or(0, |p| p.line());
            return Err(TabularError::RaggedRow { line, expected: n_cols, found: record.len() });
        }
        for (c, field) in record.iter().enumerate() {
            let field = field.trim();
            raw[c].push((!field.is_empty()).then(|| field.to_string()));
        }
    }
    let columns = raw.into_iter().map(infer_column).collect();
    Table::new(names, columns)
}

fn infer_column(cells: Vec<Option<String>>) -> Column {
    let parsed: Option<Vec<f64>> = cells
        .iter()
        .map(|c| match c {
            None => Some(f64::NAN),
            Some(s) => s.parse::<f64>().ok(),
        })
        .collect();
    match parsed {
        Some(v) => Column::Numeric(v),
        None => Column::Text(cells),
    }
}

pub fn write_csv(table: &Table, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut writer = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    writer.write_record(table.column_names())?;
    let mut record: Vec<String> = Vec::with_capacity(table.n_cols());
    for r in 0..table.n_rows() {
        record.clear();
        for col in table.columns() {
            record.push(match col {
                Column::Numeric(v) if v[r].is_nan() => String::new(),
                Column::Numeric(v) => format_number(v[r]),
                Column::Text(v) => v[r].clone().unwrap_or_default(),
            });
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    writer.into_inner().map_err(|e| e.into_error())?.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::Value;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn numeric_and_text_columns_inferred() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "x,y,z\n1,a,\n2.5,b,3\n,c,4\n");
        let t = load_csv(&p).unwrap();
        assert_eq!(t.shape(), (3, 3));
        assert!(t.column("x").unwrap().is_numeric());
        assert!(!t.column("y").unwrap().is_numeric());
        assert_eq!(t.value(2, 0), Value::Missing);
        assert_eq!(t.value(0, 2), Value::Missing);
    }

    #[test]
    fn header_only_gives_zero_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "h.csv", "a,b,c\n");
        assert_eq!(load_csv(&p).unwrap().shape(), (0, 3));
    }

    #[test]
    fn ragged_row_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "r.csv", "a,b\n1,2\n3\n");
        match load_csv(&p).unwrap_err() {
            TabularError::RaggedRow { line, expected, found } => {
                assert_eq!((line, expected, found), (3, 2, 1));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn missing_and_empty_files() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_csv(dir.path().join("nope.csv")).unwrap_err(), TabularError::FileMissing(_)));
        let p = write(&dir, "e.csv", "");
        assert!(matches!(load_csv(&p).unwrap_err(), TabularError::EmptyFile(_)));
    }

    #[test]
    fn write_then_load_preserves_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "x,y\n0.1,\"q,r\"\n,s\n");
        let t = load_csv(&p).unwrap();
        let out = dir.path().join("b.csv");
        write_csv(&t, &out).unwrap();
        assert_eq!(load_csv(&out).unwrap(), t);
    }
}
