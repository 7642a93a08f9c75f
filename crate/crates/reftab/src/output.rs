//! CSV tables.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

/// One CSV table. Floats are written in shortest round-trip form.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Distinguishes tables of a multi-table run (usually the variant).
    pub name: Option<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { name: None, header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Parsed numeric column; blank cells become `None`.
    pub fn floats(&self, name: &str) -> Vec<Option<f64>> {
        let Some(c) = self.column(name) else { return Vec::new() };
        self.rows.iter().map(|r| r[c].parse().ok()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }
}

/// Where each table of a run ends up: `out` itself for a single table,
/// `out` with `_<name>` appended to the stem otherwise.
pub fn output_paths(out: &Path, tables: &[Table]) -> Vec<PathBuf> {
    if tables.len() == 1 {
        return vec![out.to_path_buf()];
    }
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = out.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    tables
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let tag = t.name.clone().unwrap_or_else(|| i.to_string());
            let tag: String = tag.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
            out.with_file_name(format!("{stem}_{}{ext}", tag.trim_end_matches('_')))
        })
        .collect()
}

pub fn write_tables(out: Option<&Path>, tables: &[Table]) -> io::Result<()> {
    match out {
        Some(path) => {
            for (t, p) in tables.iter().zip(output_paths(path, tables)) {
                fs::write(p, t.to_csv())?;
            }
            Ok(())
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            for t in tables {
                if tables.len() > 1 {
                    if let Some(n) = &t.name {
                        writeln!(lock, "# {n}")?;
                    }
                }
                lock.write_all(t.to_csv().as_bytes())?;
            }
            Ok(())
        }
    }
}
