//! CSV emission of diagnostics and snapshots, and the run manifest.
//!
//! Floats are written with Rust's shortest round-trip formatting, so parsing
//! a file back reproduces every value bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::SimulationConfig;
use crate::diagnostics::{blob_eval, blob_on_grid, DiagnosticsRecord};
use crate::ensemble::ParticleEnsemble;
use crate::error::{Error, Result};
use crate::grid::QuadratureGrid;
use crate::kernel::{Mollifier, Vec3};

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn row(out: &mut String, fields: impl IntoIterator<Item = String>) {
    let mut first = true;
    for f in fields {
        if !first {
            out.push(',');
        }
        out.push_str(&f);
        first = false;
    }
    out.push('\n');
}

fn float(x: f64) -> String {
    format!("{x:?}")
}

pub fn diagnostics_header(dim: usize) -> String {
    let mut cols = vec!["step".to_string(), "time".into(), "mass".into()];
    cols.extend((1..=dim).map(|s| format!("mom_{s}")));
    cols.extend(
        ["energy", "entropy", "rel_entropy", "dissipation", "min_dist", "escaped"]
            .iter()
            .map(|s| s.to_string()),
    );
    cols.join(",")
}

/// Diagnostics as CSV text.
pub fn diagnostics_csv(records: &[DiagnosticsRecord]) -> Result<String> {
    let Some(first) = records.first() else {
        return Err(Error::InvalidInput("no diagnostics records to write".into()));
    };
    let dim = first.momentum.len();
    let mut out = diagnostics_header(dim);
    out.push('\n');
    for r in records {
        if r.momentum.len() != dim {
            return Err(Error::InvalidInput("records disagree on the dimension".into()));
        }
        let mut f = vec![r.step.to_string(), float(r.time), float(r.mass)];
        f.extend(r.momentum.iter().map(|&m| float(m)));
        f.extend([r.energy, r.entropy, r.relative_entropy, r.dissipation, r.min_pair_distance].map(float));
        f.push(r.escaped_count.to_string());
        row(&mut out, f);
    }
    Ok(out)
}

pub fn write_diagnostics(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    write_file(path, &diagnostics_csv(records)?)
}

/// Parses text produced by [`diagnostics_csv`].
pub fn parse_diagnostics(text: &str) -> Result<Vec<DiagnosticsRecord>> {
    let bad = |line: usize, what: &str| Error::InvalidInput(format!("diagnostics line {line}: {what}"));
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad(1, "missing header"))?;
    let ncol = header.split(',').count();
    let dim = ncol.checked_sub(9).ok_or_else(|| bad(1, "too few columns"))?;
    if header != diagnostics_header(dim) {
        return Err(bad(1, "unexpected header"));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != ncol {
                return Err(bad(i + 2, "wrong number of columns"));
            }
            let f = |k: usize| cols[k].parse::<f64>().map_err(|_| bad(i + 2, "bad number"));
            let u = |k: usize| cols[k].parse::<usize>().map_err(|_| bad(i + 2, "bad integer"));
            Ok(DiagnosticsRecord {
                step: u(0)?,
                time: f(1)?,
                mass: f(2)?,
                momentum: (0..dim).map(|s| f(3 + s)).collect::<Result<_>>()?,
                energy: f(3 + dim)?,
                entropy: f(4 + dim)?,
                relative_entropy: f(5 + dim)?,
                dissipation: f(6 + dim)?,
                min_pair_distance: f(7 + dim)?,
                escaped_count: u(8 + dim)?,
            })
        })
        .collect()
}

pub fn read_diagnostics(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_diagnostics(&text)
}

fn axis_names(dim: usize, prefix: &str) -> Vec<String> {
    (1..=dim).map(|s| format!("{prefix}{s}")).collect()
}

pub fn particles_csv(ens: &ParticleEnsemble) -> String {
    let dim = ens.dim();
    let mut out = String::new();
    row(&mut out, std::iter::once("w".to_string()).chain(axis_names(dim, "v_")));
    for (v, w) in ens.velocities().iter().zip(ens.weights()) {
        row(&mut out, std::iter::once(float(*w)).chain(v[..dim].iter().map(|&x| float(x))));
    }
    out
}

pub fn blob_csv(grid: &QuadratureGrid, values: &[f64]) -> String {
    let dim = grid.dim();
    let mut out = String::new();
    row(&mut out, axis_names(dim, "v_").into_iter().chain(std::iter::once("f".to_string())));
    for (l, f) in values.iter().enumerate() {
        let c = grid.center(l);
        row(&mut out, c[..dim].iter().map(|&x| float(x)).chain(std::iter::once(float(*f))));
    }
    out
}

/// Points `a_m e_s` for every grid node `a_m` and axis `s`: the axis lines
/// through the origin.
pub fn slice_points(grid: &QuadratureGrid) -> Vec<(usize, Vec3)> {
    let mut pts = Vec::new();
    for s in 0..grid.dim() {
        for &a in grid.axis() {
            let mut p = [0.0; 3];
            p[s] = a;
            pts.push((s, p));
        }
    }
    pts
}

/// Blob values along the axis slices, as `(axis, coordinate, value)`.
pub fn blob_slices(ens: &ParticleEnsemble, grid: &QuadratureGrid, m: &Mollifier) -> Vec<(usize, f64, f64)> {
    let pts = slice_points(grid);
    let coords: Vec<Vec3> = pts.iter().map(|(_, p)| *p).collect();
    let values = blob_eval(ens, m, &coords);
    pts.iter()
        .zip(values)
        .map(|((s, p), f)| (*s, p[*s], f))
        .collect()
}

pub fn slices_csv(slices: &[(usize, f64, f64)]) -> String {
    let mut out = String::from("axis,v,f\n");
    for (s, v, f) in slices {
        row(&mut out, [(s + 1).to_string(), float(*v), float(*f)]);
    }
    out
}

/// Paths of the three files of one snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotFiles {
    pub particles: PathBuf,
    pub blob: PathBuf,
    pub slices: PathBuf,
}

/// Writes `snapshot_<step>_{particles,blob,slices}.csv` into `dir`.
pub fn write_snapshot(
    dir: &Path,
    step: usize,
    ens: &ParticleEnsemble,
    grid: &QuadratureGrid,
    m: &Mollifier,
) -> Result<SnapshotFiles> {
    let name = |kind: &str| dir.join(format!("snapshot_{step:06}_{kind}.csv"));
    let files = SnapshotFiles {
        particles: name("particles"),
        blob: name("blob"),
        slices: name("slices"),
    };
    write_file(&files.particles, &particles_csv(ens))?;
    write_file(&files.blob, &blob_csv(grid, &blob_on_grid(ens, grid, m)))?;
    write_file(&files.slices, &slices_csv(&blob_slices(ens, grid, m)))?;
    Ok(files)
}

/// Record of one run: the resolved configuration, the code version, timing
/// and every file written. Timing is omitted in deterministic mode so that
/// reruns produce identical output directories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub engine: String,
    pub started_unix: Option<f64>,
    pub wall_seconds: Option<f64>,
    pub files: Vec<String>,
    pub config: SimulationConfig,
}

impl RunManifest {
    pub fn new(config: &SimulationConfig) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            engine: config.engine().name().to_string(),
            started_unix: None,
            wall_seconds: None,
            files: Vec::new(),
            config: *config,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_toml())
    }
}

/// Reads back a manifest written by [`RunManifest::write`].
pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))
}

/// Column-aligned plain-text table.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &mut dyn Iterator<Item = &str>| {
        let cells: Vec<String> = cells.zip(&width).map(|(c, w)| format!("{c:>w$}")).collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    };
    line(&mut out, &mut header.iter().copied());
    for r in rows {
        line(&mut out, &mut r.iter().map(|s| s.as_str()));
    }
    out
}
