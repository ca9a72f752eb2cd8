//! Tabular output.
//!
//! CSV files start with a `# config: {...}` line echoing the resolved
//! configuration, then one header row. Floats are written with 17
//! significant digits so they parse back bit-for-bit. JSON output holds the
//! same data as `{"config": ..., "columns": [...], "rows": [[...], ...]}`.

use serde_json::{json, Value};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::Format;
use crate::error::CliError;

const CONFIG_PREFIX: &str = "# config: ";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }

    fn parse(field: &str) -> Cell {
        if field.is_empty() {
            Cell::Empty
        } else if let Ok(v) = field.parse::<i64>() {
            Cell::Int(v)
        } else if let Ok(v) = field.parse::<f64>() {
            Cell::Float(v)
        } else {
            Cell::Text(field.to_owned())
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(v) => Some(*v as f64),
            Cell::Float(v) => Some(*v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub config: Option<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            config: None,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_config(mut self, echo: String) -> Self {
        self.config = Some(echo);
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = String::new();
                if let Some(cfg) = &self.config {
                    out.push_str(CONFIG_PREFIX);
                    out.push_str(cfg);
                    out.push('\n');
                }
                out.push_str(&self.columns.join(","));
                out.push('\n');
                for row in &self.rows {
                    let fields: Vec<String> = row.iter().map(Cell::csv).collect();
                    out.push_str(&fields.join(","));
                    out.push('\n');
                }
                out
            }
            Format::Json => {
                let config = self
                    .config
                    .as_deref()
                    .map(|c| serde_json::from_str::<Value>(c).expect("config echo is JSON"))
                    .unwrap_or(Value::Null);
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
                    .collect();
                let doc = json!({ "config": config, "columns": self.columns, "rows": rows });
                let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
                s.push('\n');
                s
            }
        }
    }
}

/// Writes through a temporary sibling and renames, so a failed write never
/// leaves a partial file at `path`.
pub fn write_table(table: &Table, format: Format, path: &Path) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let tmp: PathBuf = path.with_extension(format!("{}.partial", format.extension()));
    let result = fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(table.render(format).as_bytes())?;
            f.sync_all()
        })
        .and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(io(e));
    }
    Ok(())
}

/// Reads a CSV produced by [`write_table`].
pub fn read_csv(path: &Path) -> Result<Table, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines().peekable();
    let config = lines
        .peek()
        .and_then(|l| l.strip_prefix(CONFIG_PREFIX))
        .map(str::to_owned);
    if config.is_some() {
        lines.next();
    }
    let header = lines
        .next()
        .ok_or_else(|| CliError::Io(format!("{}: missing header row", path.display())))?;
    let columns = header.split(',').map(str::to_owned).collect();
    let rows = lines
        .map(|l| l.split(',').map(Cell::parse).collect())
        .collect();
    Ok(Table {
        config,
        columns,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_table(&Table::new(&["a", "b"]), Format::Csv, &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "a,b\n");
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = Table::new(&["i", "x", "note", "opt"]).with_config(r#"{"k":1}"#.into());
        let values = [
            0.1,
            1.0 / 3.0,
            -2.5e-300,
            6.02214076e23,
            std::f64::consts::PI,
            0.0,
        ];
        for (i, &v) in values.iter().enumerate() {
            t.push(vec![
                Cell::Int(i as i64),
                v.into(),
                "ok".into(),
                None.into(),
            ]);
        }
        write_table(&t, Format::Csv, &path).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back, t);
        for (row, &v) in back.rows.iter().zip(&values) {
            assert_eq!(row[1].as_f64().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn json_mirrors_schema() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        let mut t = Table::new(&["x", "y"]).with_config(r#"{"k":1}"#.into());
        t.push(vec![0.25.into(), Cell::Empty]);
        write_table(&t, Format::Json, &path).unwrap();
        let v: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(v["config"]["k"], 1);
        assert_eq!(v["columns"], json!(["x", "y"]));
        assert_eq!(v["rows"], json!([[0.25, null]]));
    }

    #[test]
    fn failed_write_leaves_nothing_behind() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("t.csv");
        assert!(matches!(
            write_table(&Table::new(&["a"]), Format::Csv, &path),
            Err(CliError::Io(_))
        ));
        assert!(!path.exists());
        assert!(!dir.path().join("missing").exists());
    }
}
