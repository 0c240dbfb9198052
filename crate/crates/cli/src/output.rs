//! Result files: one or more named tables, written as CSV (with the scenario
//! as a leading comment block) or as a JSON mirror of the same content.

use std::fmt::Write as _;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Float(f64),
    Int(i64),
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

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    /// Floats carry 17 significant digits, enough to round-trip any `f64`.
    fn to_csv(&self) -> String {
        match self {
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => {
                format!("\"{}\"", s.replace('"', "\"\""))
            }
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_owned(),
            columns: columns.iter().map(|c| (*c).to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_columns(name: &str, columns: Vec<String>) -> Self {
        Table {
            name: name.to_owned(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width must match table {}",
            self.name
        );
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Output {
    pub program: String,
    pub version: String,
    pub command: String,
    /// The scenario in the config-file schema.
    pub config: String,
    pub tables: Vec<Table>,
}

impl Output {
    pub fn new(command: &str, config: String, tables: Vec<Table>) -> Self {
        Output {
            program: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.to_owned(),
            config,
            tables,
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("output is plain data");
                s.push('\n');
                s
            }
        }
    }

    fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# {} {}", self.program, self.version).unwrap();
        writeln!(out, "# command: {}", self.command).unwrap();
        writeln!(out, "# config:").unwrap();
        for line in self.config.lines() {
            if line.is_empty() {
                writeln!(out, "#").unwrap();
            } else {
                writeln!(out, "#   {line}").unwrap();
            }
        }
        for (i, table) in self.tables.iter().enumerate() {
            if i > 0 {
                out.push_str("\n\n");
            }
            writeln!(out, "# table: {}", table.name).unwrap();
            writeln!(out, "{}", table.columns.join(",")).unwrap();
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(Cell::to_csv).collect();
                writeln!(out, "{}", cells.join(",")).unwrap();
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = Table::new("demo", &["phi", "k", "label"]);
        t.push(vec![0.1.into(), 3usize.into(), "a,b".into()]);
        let out = Output::new(
            "moments",
            "seed = 1\n\n[lo]\nr = 2.0\n".into(),
            vec![t.clone(), t],
        );
        let csv = out.render(Format::Csv);
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# click-homodyne-cli "));
        assert_eq!(lines[3], "#   seed = 1");
        assert_eq!(lines[4], "#");
        assert!(csv.contains("# table: demo\nphi,k,label\n1.0000000000000001e-1,3,\"a,b\"\n"));
        assert_eq!(csv.matches("# table: demo").count(), 2);
        let parsed: f64 = "1.0000000000000001e-1".parse().unwrap();
        assert_eq!(parsed, 0.1);
    }

    #[test]
    fn json_mirror() {
        let mut t = Table::new("demo", &["x"]);
        t.push(vec![Cell::Float(-2.5)]);
        let out = Output::new("clicks", String::new(), vec![t]);
        let v: serde_json::Value = serde_json::from_str(&out.render(Format::Json)).unwrap();
        assert_eq!(v["tables"][0]["rows"][0][0], -2.5);
        assert_eq!(v["command"], "clicks");
    }
}
