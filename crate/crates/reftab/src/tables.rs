//! Plain-text simplex quadrature tables.
//!
//! A table file holds one or more rules. Each starts with a header line
//!
//! ```text
//! simplex <dim> degree <q> npoints <k>
//! ```
//!
//! followed by `k` lines of `dim + 1` numbers: the point coordinates on the
//! unit reference simplex, then the weight. Anything after `#` is ignored.

use std::fs;
use std::path::{Path, PathBuf};

use reftab_core::quadrature::{verify_exactness, Provenance, QuadratureError};
use reftab_core::{DenseMatrix, QuadratureRegistry, QuadratureRule};

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("rule starting at line {line}: {source}")]
    Rejected {
        line: usize,
        #[source]
        source: QuadratureError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<TableError>,
    },
}

impl TableError {
    /// The quadrature verification failure behind this error, if any.
    pub fn rejection(&self) -> Option<&QuadratureError> {
        match self {
            TableError::Rejected { source, .. } => Some(source),
            TableError::InFile { source, .. } => source.rejection(),
            _ => None,
        }
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> TableError {
    TableError::Parse { line, msg: msg.into() }
}

fn parse_header(line: usize, words: &[&str]) -> Result<(usize, usize, usize), TableError> {
    let [kw_s, dim, kw_d, degree, kw_n, npoints] = words else {
        return Err(parse_err(line, "expected `simplex <dim> degree <q> npoints <k>`"));
    };
    if (*kw_s, *kw_d, *kw_n) != ("simplex", "degree", "npoints") {
        return Err(parse_err(line, "expected `simplex <dim> degree <q> npoints <k>`"));
    }
    let num = |s: &str, what: &str| s.parse::<usize>().map_err(|_| parse_err(line, format!("bad {what} {s:?}")));
    Ok((num(dim, "dimension")?, num(degree, "degree")?, num(npoints, "point count")?))
}

/// Parse every rule in `text` and verify each one's declared exactness.
pub fn parse_tables(text: &str) -> Result<Vec<QuadratureRule>, TableError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut rules = Vec::new();
    while let Some((start, header)) = lines.next() {
        let words: Vec<&str> = header.split_whitespace().collect();
        let (dim, degree, npoints) = parse_header(start, &words)?;
        if !(1..=3).contains(&dim) {
            return Err(parse_err(start, format!("unsupported simplex dimension {dim}")));
        }
        let mut pts = DenseMatrix::zeros(npoints, dim);
        let mut weights = Vec::with_capacity(npoints);
        for p in 0..npoints {
            let (ln, row) = lines.next().ok_or_else(|| parse_err(start, format!("expected {npoints} points, found {p}")))?;
            let vals: Vec<f64> = row
                .split_whitespace()
                .map(|w| w.parse::<f64>().map_err(|_| parse_err(ln, format!("bad number {w:?}"))))
                .collect::<Result<_, _>>()?;
            if vals.len() != dim + 1 {
                return Err(parse_err(ln, format!("expected {} numbers, found {}", dim + 1, vals.len())));
            }
            pts.row_mut(p).copy_from_slice(&vals[..dim]);
            weights.push(vals[dim]);
        }
        let rule = QuadratureRule::new(dim, pts, weights, degree, Provenance::Tabulated)
            .map_err(|source| TableError::Rejected { line: start, source })?;
        verify_exactness(&rule).map_err(|source| TableError::Rejected { line: start, source })?;
        rules.push(rule);
    }
    Ok(rules)
}

/// Render rules in the table format, round-trippable through [`parse_tables`].
pub fn format_table(rules: &[QuadratureRule]) -> String {
    let mut out = String::new();
    for r in rules {
        out.push_str(&format!("simplex {} degree {} npoints {}\n", r.dim, r.degree, r.len()));
        for p in 0..r.len() {
            let mut fields: Vec<String> = r.point(p).iter().map(|x| format!("{x:?}")).collect();
            fields.push(format!("{:?}", r.weights[p]));
            out.push_str(&fields.join(" "));
            out.push('\n');
        }
    }
    out
}

pub fn load_file(path: &Path) -> Result<Vec<QuadratureRule>, TableError> {
    let text = fs::read_to_string(path).map_err(|source| TableError::Io { path: path.to_path_buf(), source })?;
    parse_tables(&text).map_err(|e| TableError::InFile { path: path.to_path_buf(), source: Box::new(e) })
}

/// Load every regular file in `dir` (sorted by name) into a registry that
/// already holds the built-in rules.
pub fn load_directory(dir: &Path) -> Result<QuadratureRegistry, TableError> {
    let io = |source| TableError::Io { path: dir.to_path_buf(), source };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io)?;
    paths.retain(|p| p.is_file());
    paths.sort();
    let mut reg = QuadratureRegistry::builtin();
    for p in paths {
        for rule in load_file(&p)? {
            reg.register(rule).map_err(|source| TableError::InFile {
                path: p.clone(),
                source: Box::new(TableError::Rejected { line: 0, source }),
            })?;
        }
    }
    Ok(reg)
}
