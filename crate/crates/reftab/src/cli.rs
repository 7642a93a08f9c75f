//! Argument parsing and experiment dispatch.

use std::fs;
use std::io;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use reftab_core::elements::ElementSpec;
use reftab_core::{DenseMatrix, DofVariant, ElementFamily, NodeVariant, QuadratureRegistry};

use crate::experiments::{self, ExperimentError};
use crate::output::{write_tables, Table};
use crate::rng::DEFAULT_SEED;
use crate::tables::{load_directory, TableError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Conditioning,
    InterpError,
    DivPreservation,
    Convergence,
    QuadCount,
    Fdm,
    Tabulate,
    Timing,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariantList(pub Vec<String>);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeshSize(pub [usize; 3]);

#[derive(Debug, Parser)]
#[command(name = "reftab", version, about = "Reference finite element experiments, written as CSV")]
pub struct Cli {
    #[arg(long, value_enum)]
    pub experiment: Experiment,
    /// Cell dimension (1, 2 or 3).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Degree or inclusive range, e.g. `4` or `1..20`.
    #[arg(long, value_parser = parse_degrees)]
    pub degree: Option<RangeInclusive<usize>>,
    /// Comma-separated variants; `integral(a..b)` expands to each degree.
    #[arg(long, value_parser = parse_variants)]
    pub variant: Option<VariantList>,
    /// Boxes per direction, `nx[,ny[,nz]]`.
    #[arg(long, value_parser = parse_mesh)]
    pub mesh: Option<MeshSize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory of quadrature table files.
    #[arg(long)]
    pub quad_tables: Option<PathBuf>,
    /// Full-size meshes and the extra refinement level.
    #[arg(long)]
    pub deep: bool,
    /// Element family for `tabulate`, `timing` and `convergence`.
    #[arg(long, value_parser = parse_family)]
    pub element: Option<ElementFamily>,
    /// Points file for `tabulate`: one point per line.
    #[arg(long)]
    pub points: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl AppError {
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Experiment(ExperimentError::Numerical(_)) => 2,
            _ => 1,
        }
    }
}

pub fn parse_degrees(s: &str) -> Result<RangeInclusive<usize>, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad degree {t:?}"));
    let r = match s.split_once("..") {
        Some((a, b)) => num(a)?..=num(b.strip_prefix('=').unwrap_or(b))?,
        None => {
            let d = num(s)?;
            d..=d
        }
    };
    if r.is_empty() {
        return Err(format!("empty degree range {s:?}"));
    }
    Ok(r)
}

pub fn parse_variants(s: &str) -> Result<VariantList, String> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut item = String::new();
    for ch in s.chars().chain(std::iter::once(',')) {
        match ch {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            _ => {}
        }
        if ch == ',' && depth == 0 {
            let v = item.trim().to_ascii_lowercase();
            item.clear();
            if v.is_empty() {
                continue;
            }
            match v.strip_prefix("integral(").and_then(|r| r.strip_suffix(')')).filter(|r| r.contains("..")) {
                Some(range) => out.extend(parse_degrees(range)?.map(|q| format!("integral({q})"))),
                None => out.push(v),
            }
        } else {
            item.push(ch);
        }
    }
    if out.is_empty() {
        return Err("empty variant list".into());
    }
    Ok(VariantList(out))
}

pub fn parse_mesh(s: &str) -> Result<MeshSize, String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|_| format!("bad mesh size {p:?}")))
        .collect::<Result<_, _>>()?;
    if parts.is_empty() || parts.len() > 3 || parts.contains(&0) {
        return Err(format!("mesh must be nx[,ny[,nz]] with positive sizes, got {s:?}"));
    }
    let nx = parts[0];
    Ok(MeshSize([nx, *parts.get(1).unwrap_or(&nx), *parts.get(2).unwrap_or(&nx)]))
}

fn parse_family(s: &str) -> Result<ElementFamily, String> {
    s.parse().map_err(|e: reftab_core::ElementError| e.to_string())
}

/// Whitespace- or comma-separated coordinates, one point per line.
pub fn parse_points(text: &str) -> Result<DenseMatrix, String> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|w| !w.is_empty())
            .map(|w| w.parse::<f64>().map_err(|_| format!("line {}: bad number {w:?}", i + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        if rows.first().is_some_and(|r| r.len() != row.len()) {
            return Err(format!("line {}: expected {} coordinates", i + 1, rows[0].len()));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err("no points".into());
    }
    Ok(DenseMatrix::from_rows(&rows))
}

/// Fully resolved parameters of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub dim: usize,
    pub degrees: RangeInclusive<usize>,
    pub variants: Vec<String>,
    pub mesh: [usize; 3],
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub quad_tables: Option<PathBuf>,
    pub deep: bool,
    pub element: ElementFamily,
    pub points: Option<PathBuf>,
}

fn default_dim(e: Experiment) -> usize {
    match e {
        Experiment::DivPreservation | Experiment::Convergence | Experiment::Timing => 3,
        _ => 2,
    }
}

impl ExperimentConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, AppError> {
        use Experiment::*;
        let e = cli.experiment;
        let dim = cli.dim.unwrap_or(default_dim(e));
        if !(1..=3).contains(&dim) {
            return Err(AppError::Usage(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        if matches!(e, DivPreservation | Convergence) && dim != 3 {
            return Err(AppError::Usage(format!("{e:?} runs on tetrahedra only")));
        }
        let element = cli.element.unwrap_or(if e == Convergence { ElementFamily::RaviartThomas } else { ElementFamily::Lagrange });
        let degrees = cli.degree.unwrap_or(match e {
            Conditioning | InterpError if dim == 3 => 1..=15,
            Conditioning | InterpError | QuadCount => 1..=20,
            Convergence => 2..=2,
            Fdm => 2..=24,
            Tabulate => 3..=3,
            Timing => 1..=10,
            DivPreservation => 2..=2,
        });
        if matches!(e, Convergence | Tabulate) && degrees.start() != degrees.end() {
            return Err(AppError::Usage(format!("{e:?} takes a single degree")));
        }
        let variants = match cli.variant {
            Some(v) => v.0,
            None => match e {
                Conditioning => vec!["equispaced".into(), "spectral".into()],
                DivPreservation => parse_variants("point,integral(0..6)").expect("valid default").0,
                Convergence => vec!["integral(0)".into(), "point".into()],
                _ if element.is_vector() => vec!["integral(0)".into()],
                _ => vec!["equispaced".into()],
            },
        };
        let mesh = cli.mesh.map(|m| m.0).unwrap_or(if cli.deep { [8; 3] } else { [2; 3] });
        Ok(ExperimentConfig {
            experiment: e,
            dim,
            degrees,
            variants,
            mesh,
            seed: cli.seed,
            out: cli.out,
            quad_tables: cli.quad_tables,
            deep: cli.deep,
            element,
            points: cli.points,
        })
    }

    fn node_variants(&self) -> Result<Vec<NodeVariant>, AppError> {
        self.variants.iter().map(|v| v.parse().map_err(|_| AppError::Usage(format!("unknown node variant {v:?}")))).collect()
    }

    fn dof_variants(&self) -> Result<Vec<DofVariant>, AppError> {
        self.variants.iter().map(|v| v.parse().map_err(|_| AppError::Usage(format!("unknown DOF variant {v:?}")))).collect()
    }

    fn element_spec(&self, degree: usize) -> Result<ElementSpec, AppError> {
        let v = self.variants.first().map(String::as_str).unwrap_or("equispaced");
        ElementSpec::new(self.element, self.dim, degree).with_variant(v).map_err(|e| AppError::Usage(e.to_string()))
    }
}

fn read(path: &Path) -> Result<String, AppError> {
    fs::read_to_string(path).map_err(|source| AppError::Io { path: path.to_path_buf(), source })
}

/// Run one experiment and return its tables.
pub fn execute(cfg: &ExperimentConfig) -> Result<Vec<Table>, AppError> {
    let registry = match &cfg.quad_tables {
        Some(dir) => load_directory(dir)?,
        None => QuadratureRegistry::builtin(),
    };
    let d = cfg.degrees.clone();
    let tables = match cfg.experiment {
        Experiment::Conditioning => cfg
            .node_variants()?
            .into_iter()
            .map(|v| experiments::conditioning(cfg.dim, d.clone(), v, cfg.seed))
            .collect::<Result<_, _>>()?,
        Experiment::InterpError => vec![experiments::interp_error(cfg.dim, d)?],
        Experiment::DivPreservation => vec![experiments::div_preservation(cfg.mesh, &cfg.dof_variants()?, &registry)?],
        Experiment::Convergence => {
            let refs = if cfg.deep { 0..=3 } else { 0..=2 };
            cfg.dof_variants()?
                .into_iter()
                .map(|v| experiments::convergence(cfg.element, *d.start(), v, refs.clone(), &registry))
                .collect::<Result<_, _>>()?
        }
        Experiment::QuadCount => vec![experiments::quad_count(cfg.dim, d, &registry)?],
        Experiment::Fdm => vec![experiments::fdm(d)?],
        Experiment::Tabulate => {
            let pts = cfg.points.as_deref().map(read).transpose()?.map(|t| parse_points(&t)).transpose().map_err(AppError::Usage)?;
            vec![experiments::tabulate(&cfg.element_spec(*d.start())?, pts.as_ref(), &registry)?]
        }
        Experiment::Timing => vec![experiments::timing(&cfg.element_spec(*d.start())?, d, &registry)?],
    };
    Ok(tables)
}

/// Run a parsed command line and write its tables.
pub fn run(cli: Cli) -> Result<(), AppError> {
    let cfg = ExperimentConfig::from_cli(cli)?;
    let tables = execute(&cfg)?;
    write_tables(cfg.out.as_deref(), &tables).map_err(|source| AppError::Io {
        path: cfg.out.clone().unwrap_or_else(|| PathBuf::from("<stdout>")),
        source,
    })
}
