//! Deterministic CSV assembly: 17 significant digits, '.' decimal
//! separator, '\n' line endings. Identical inputs produce identical
//! bytes.

use std::io::Write;
use std::path::Path;

/// One value, 17 significant digits in scientific notation.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV document: one header, data rows, trailing comment lines.
#[derive(Debug, Default)]
pub struct Csv {
    pub header: String,
    pub rows: Vec<String>,
    pub footers: Vec<String>,
}

impl Csv {
    pub fn new(header: impl Into<String>) -> Self {
        Self {
            header: header.into(),
            rows: Vec::new(),
            footers: Vec::new(),
        }
    }

    pub fn render(&self) -> String {
        let mut text = String::with_capacity(32 * (self.rows.len() + 2));
        text.push_str(&self.header);
        text.push('\n');
        for row in &self.rows {
            text.push_str(row);
            text.push('\n');
        }
        for footer in &self.footers {
            text.push_str(footer);
            text.push('\n');
        }
        text
    }

    pub fn write_to(&self, path: &Path) -> std::io::Result<()> {
        let file = std::fs::File::create(path)?;
        let mut writer = std::io::BufWriter::new(file);
        writer.write_all(self.render().as_bytes())?;
        writer.flush()
    }
}
