#![allow(dead_code)]

//! Shared helpers for the black-box CLI tests: binary invocation and a
//! round-trip CSV reader that checks header/row arity.

use std::path::Path;
use std::process::{Command, Output};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_oudec"))
}

pub fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn assert_exit(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "expected exit {code}; stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
}

/// Parsed CSV: header fields, numeric rows, trailing comment lines.
pub struct ParsedCsv {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub footers: Vec<String>,
}

impl ParsedCsv {
    pub fn column(&self, name: &str) -> usize {
        self.header
            .iter()
            .position(|h| h == name)
            .unwrap_or_else(|| panic!("column {name} in {:?}", self.header))
    }
}

/// Round-trip reader: every data row must match the header arity and
/// parse as finite floats; comments are only allowed at the tail.
pub fn read_csv(path: &Path) -> ParsedCsv {
    let text = std::fs::read_to_string(path).expect("csv exists");
    assert!(
        !text.contains('\r'),
        "CSV must use plain newline endings"
    );
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .expect("non-empty csv")
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    let mut footers = Vec::new();
    for line in lines {
        if line.starts_with('#') {
            footers.push(line.to_string());
            continue;
        }
        assert!(
            footers.is_empty(),
            "data row after a comment footer: {line:?}"
        );
        let row: Vec<f64> = line
            .split(',')
            .map(|cell| {
                let v: f64 = cell.parse().unwrap_or_else(|_| panic!("bad cell {cell:?}"));
                assert!(v.is_finite(), "non-finite cell {cell:?}");
                v
            })
            .collect();
        assert_eq!(row.len(), header.len(), "row arity mismatch: {line:?}");
        rows.push(row);
    }
    ParsedCsv {
        header,
        rows,
        footers,
    }
}
