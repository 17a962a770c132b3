//! CSV tables and JSON documents.

use std::io::Write;
use std::path::Path;

use crate::config::Format;
use crate::CliError;

#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Trailing `# ...` lines.
    pub notes: Vec<String>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            ..Table::default()
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

pub struct Report {
    pub tables: Vec<Table>,
    pub json: serde_json::Value,
}

/// Shortest round-trip decimal, switching to exponent form outside
/// `[1e-4, 1e15)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render_csv(tables: &[Table]) -> String {
    let mut out = String::new();
    for (k, t) in tables.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        let line = |cells: &[String]| {
            cells
                .iter()
                .map(|c| csv_field(c))
                .collect::<Vec<_>>()
                .join(",")
        };
        out.push_str(&line(&t.header));
        out.push('\n');
        for r in &t.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        for n in &t.notes {
            out.push_str("# ");
            out.push_str(n);
            out.push('\n');
        }
    }
    out
}

pub fn emit(report: &Report, format: Format, out: Option<&Path>) -> Result<(), CliError> {
    let text = match format {
        Format::Csv => render_csv(&report.tables),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report.json)
                .map_err(|e| CliError::io(e.to_string()))?;
            s.push('\n');
            s
        }
    };
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::io(e.to_string()))
        }
    }
}
