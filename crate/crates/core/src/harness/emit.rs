use std::io::Write;
use std::path::Path;

use serde_json::{Map, Number, Value};

use super::config::{LogBase, OutputFormat};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
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

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// `Info` columns hold a log-scale quantity in nats; they get a `_nats` or
/// `_bits` suffix and are converted on output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Plain,
    Info,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<(String, Unit)>,
    pub rows: Vec<Vec<Cell>>,
    pub meta: Vec<(String, Unit, Cell)>,
}

impl Table {
    pub fn new(columns: &[(&str, Unit)]) -> Self {
        Self {
            columns: columns.iter().map(|(n, u)| (n.to_string(), *u)).collect(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn meta(&mut self, key: &str, unit: Unit, value: impl Into<Cell>) {
        self.meta.push((key.to_string(), unit, value.into()));
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|(n, _)| n == name)
    }

    /// Column values as floats (integers widened), in nats.
    pub fn float_column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match &r[i] {
                    Cell::Float(v) => *v,
                    Cell::Int(v) => *v as f64,
                    Cell::Bool(b) => f64::from(u8::from(*b)),
                    Cell::Text(_) => f64::NAN,
                })
                .collect(),
        )
    }

    pub fn meta_value(&self, key: &str) -> Option<&Cell> {
        self.meta.iter().find(|(k, _, _)| k == key).map(|(_, _, v)| v)
    }

    fn header(&self, base: LogBase) -> Vec<String> {
        self.columns.iter().map(|(n, u)| name_in(n, *u, base)).collect()
    }
}

fn name_in(name: &str, unit: Unit, base: LogBase) -> String {
    match unit {
        Unit::Plain => name.to_string(),
        Unit::Info => format!("{name}_{}", base.suffix()),
    }
}

fn convert(cell: &Cell, unit: Unit, base: LogBase) -> Cell {
    match (cell, unit) {
        (Cell::Float(v), Unit::Info) => Cell::Float(base.convert(*v)),
        _ => cell.clone(),
    }
}

/// 17 significant digits; `inf`, `-inf`, `NaN` for non-finite values.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn text(cell: &Cell) -> String {
    match cell {
        Cell::Float(v) => format_float(*v),
        Cell::Int(v) => v.to_string(),
        Cell::Bool(b) => b.to_string(),
        Cell::Text(s) => s.clone(),
    }
}

fn json(cell: &Cell) -> Value {
    match cell {
        Cell::Float(v) => Number::from_f64(*v).map_or_else(|| Value::String(format!("{v}")), Value::Number),
        Cell::Int(v) => Value::from(*v),
        Cell::Bool(b) => Value::Bool(*b),
        Cell::Text(s) => Value::String(s.clone()),
    }
}

/// The `log_base` entry always names the base actually rendered.
fn meta_cell(key: &str, cell: &Cell, unit: Unit, base: LogBase) -> Cell {
    if key == "log_base" {
        Cell::Text(base.suffix().to_string())
    } else {
        convert(cell, unit, base)
    }
}

/// `#`-prefixed `key: value` metadata lines, then the header, then rows.
pub fn render_csv(table: &Table, base: LogBase) -> Result<String> {
    let mut out = String::new();
    for (k, u, v) in &table.meta {
        let v = text(&meta_cell(k, v, *u, base)).replace(['\n', '\r'], " ");
        out.push_str(&format!("# {}: {}\n", name_in(k, *u, base), v));
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io {
        path: "<memory>".into(),
        message: e.to_string(),
    };
    w.write_record(table.header(base)).map_err(csv_err)?;
    for row in &table.rows {
        let rec: Vec<String> = row
            .iter()
            .zip(&table.columns)
            .map(|(c, (_, u))| text(&convert(c, *u, base)))
            .collect();
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io {
        path: "<memory>".into(),
        message: e.to_string(),
    })?;
    out.push_str(&String::from_utf8(bytes).expect("csv output is UTF-8"));
    Ok(out)
}

/// `{"meta": {...}, "rows": [{...}, ...]}` with columns in table order.
pub fn render_json(table: &Table, base: LogBase) -> Result<String> {
    let mut meta = Map::new();
    for (k, u, v) in &table.meta {
        meta.insert(name_in(k, *u, base), json(&meta_cell(k, v, *u, base)));
    }
    let header = table.header(base);
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| {
            let mut o = Map::new();
            for ((h, c), (_, u)) in header.iter().zip(r).zip(&table.columns) {
                o.insert(h.clone(), json(&convert(c, *u, base)));
            }
            Value::Object(o)
        })
        .collect();
    let mut root = Map::new();
    root.insert("meta".into(), Value::Object(meta));
    root.insert("rows".into(), Value::Array(rows));
    let mut s = serde_json::to_string_pretty(&Value::Object(root)).map_err(|e| Error::Io {
        path: "<memory>".into(),
        message: e.to_string(),
    })?;
    s.push('\n');
    Ok(s)
}

pub fn render(table: &Table, format: OutputFormat, base: LogBase) -> Result<String> {
    match format {
        OutputFormat::Csv => render_csv(table, base),
        OutputFormat::Json => render_json(table, base),
    }
}

pub fn emit(table: &Table, format: OutputFormat, base: LogBase, path: &Path) -> Result<()> {
    let body = render(table, format, base)?;
    let io = |e: std::io::Error| Error::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(body.as_bytes()).map_err(io)?;
    f.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(&[("n", Unit::Plain), ("rate", Unit::Info), ("note", Unit::Plain)]);
        t.meta("seed", Unit::Plain, 7u64);
        t.meta("h", Unit::Info, 0.5);
        t.push(vec![1usize.into(), 0.1.into(), "a,b".into()]);
        t.push(vec![2usize.into(), f64::NEG_INFINITY.into(), "c".into()]);
        t
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new(&[("n", Unit::Plain), ("x", Unit::Info)]);
        assert_eq!(render_csv(&t, LogBase::Nats).unwrap(), "n,x_nats\r\n");
    }

    #[test]
    fn csv_layout_and_quoting() {
        let s = render_csv(&sample(), LogBase::Bits).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# seed: 7");
        assert!(lines[1].starts_with("# h_bits: "));
        assert_eq!(lines[2], "n,rate_bits,note");
        assert!(lines[3].ends_with(",\"a,b\""));
        assert_eq!(lines[4], "2,-inf,c");
    }

    #[test]
    fn floats_roundtrip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 123456.789e10, f64::MIN_POSITIVE, -2.5e-7] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_float(f64::INFINITY).parse::<f64>().unwrap(), f64::INFINITY);
    }

    #[test]
    fn json_shape() {
        let s = render_json(&sample(), LogBase::Nats).unwrap();
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["meta"]["seed"], 7);
        assert_eq!(v["rows"][0]["rate_nats"].as_f64().unwrap(), 0.1);
        assert_eq!(v["rows"][1]["rate_nats"], "-inf");
        let keys: Vec<&String> = v["rows"][0].as_object().unwrap().keys().collect();
        assert_eq!(keys, ["n", "rate_nats", "note"]);
    }
}
