//! CSV report tables with a `#`-prefixed metadata preamble.

use std::fs;
use std::path::Path;

use crate::error::{CliError, CliResult};

pub const VERSION: &str = concat!("dmorrey ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    meta: Vec<(String, String)>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// Shortest decimal that reads back to the same `f64`, exponent form for
/// very small or large magnitudes.
pub fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

impl ReportTable {
    /// A table whose metadata starts with the command line and ends with the
    /// toolkit version.
    pub fn new(command: &str, columns: &[&str]) -> Self {
        Self {
            meta: vec![("command".into(), command.into())],
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.meta.push((key.into(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width must match the header"
        );
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str(&format!("# version: {VERSION}\n"));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        out.push_str(
            &String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 fields"),
        );
        out
    }

    /// Write to `path`, or to stdout when `path` is `None`.
    pub fn emit(&self, path: Option<&Path>) -> CliResult<()> {
        match path {
            Some(p) => fs::write(p, self.to_csv()).map_err(|source| CliError::Io {
                context: format!("writing {}", p.display()),
                source,
            }),
            None => {
                print!("{}", self.to_csv());
                Ok(())
            }
        }
    }
}
