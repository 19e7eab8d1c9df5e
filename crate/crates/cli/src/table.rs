//! Result rows and their CSV form.

use std::io::Write;
use std::path::Path;

use crate::CliError;

pub const STATUSES: [&str; 4] = ["ok", "eig-failure", "divergence", "singular-coefficient"];

/// Lossless decimal form: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => fmt_f64(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            Cell::Text(s) => s.parse().ok(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Row {
    pub cells: Vec<(String, Cell)>,
}

impl Row {
    pub fn set(&mut self, key: &str, value: Cell) -> &mut Self {
        match self.cells.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.cells.push((key.to_string(), value)),
        }
        self
    }

    pub fn num(&mut self, key: &str, v: f64) -> &mut Self {
        self.set(key, Cell::Num(v))
    }

    pub fn int(&mut self, key: &str, v: i64) -> &mut Self {
        self.set(key, Cell::Int(v))
    }

    pub fn text(&mut self, key: &str, v: impl Into<String>) -> &mut Self {
        self.set(key, Cell::Text(v.into()))
    }

    pub fn get(&self, key: &str) -> Option<&Cell> {
        self.cells.iter().find(|(k, _)| k == key).map(|(_, c)| c)
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(Cell::as_f64)
    }

    pub fn get_text(&self, key: &str) -> Option<String> {
        self.get(key).map(Cell::render)
    }

    pub fn status(&self) -> String {
        self.get_text("status").unwrap_or_else(|| "ok".into())
    }

    pub fn is_ok(&self) -> bool {
        self.status() == "ok"
    }
}

/// Column union in first-seen order.
pub fn header(rows: &[Row]) -> Vec<String> {
    let mut cols: Vec<String> = Vec::new();
    for r in rows {
        for (k, _) in &r.cells {
            if !cols.contains(k) {
                cols.push(k.clone());
            }
        }
    }
    cols
}

/// Writes `# ` prefixed provenance lines, then the table.
pub fn write_csv(path: &Path, provenance: &str, rows: &[Row]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    for line in provenance.lines() {
        writeln!(file, "# {line}").map_err(io)?;
    }
    let cols = header(rows);
    let mut w = csv::Writer::from_writer(file);
    let csv_err = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    w.write_record(&cols).map_err(csv_err)?;
    for r in rows {
        let rec: Vec<String> = cols.iter().map(|c| r.get(c).map(Cell::render).unwrap_or_default()).collect();
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

/// Reads a table written by [`write_csv`]; every cell comes back as text.
pub fn read_csv(path: &Path) -> Result<Vec<Row>, CliError> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let cols: Vec<String> = r
        .headers()
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut row = Row::default();
        for (c, v) in cols.iter().zip(rec.iter()) {
            if !v.is_empty() {
                row.text(c, v);
            }
        }
        rows.push(row);
    }
    Ok(rows)
}
