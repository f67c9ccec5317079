//! File formats: field CSV and binary dumps, trajectory, energy and profile
//! CSVs, JSON documents.

use std::fs;
use std::path::{Path, PathBuf};

use pmwell_core::evolve::TrajectoryRecord;
use pmwell_core::variational::WellProfile;
use pmwell_core::{EnergyReport, Field, Grid};
use serde::Serialize;

use crate::error::{LabError, Result};

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> LabError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => LabError::io(path, io),
        other => LabError::Serialize(format!("{}: {other:?}", path.display())),
    }
}

fn finish(path: &Path, mut w: csv::Writer<fs::File>) -> Result<()> {
    w.flush().map_err(|e| LabError::io(path, e))
}

/// One row per node: coordinates, then the value.
pub fn write_field_csv(path: &Path, field: &Field) -> Result<()> {
    let g = field.grid();
    let mut w = csv_writer(path)?;
    let header: &[&str] = if g.dim() == 1 { &["x", "value"] } else { &["x", "y", "value"] };
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for (k, v) in field.values().iter().enumerate() {
        let c = g.coords(k);
        let mut row: Vec<String> = c[..g.dim()].iter().map(|x| x.to_string()).collect();
        row.push(v.to_string());
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    finish(path, w)
}

/// Little-endian dump: `dim`, `n_cells`, `extents`, then every node value.
pub fn field_to_bytes(field: &Field) -> Vec<u8> {
    let g = field.grid();
    let mut out = Vec::with_capacity(8 * (1 + 2 * g.dim() + g.node_count()));
    out.extend_from_slice(&(g.dim() as u64).to_le_bytes());
    for n in g.n_cells() {
        out.extend_from_slice(&(*n as u64).to_le_bytes());
    }
    for l in g.extents() {
        out.extend_from_slice(&l.to_le_bytes());
    }
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn field_from_bytes(bytes: &[u8]) -> Result<Field> {
    let bad = |m: &str| LabError::Serialize(format!("field dump: {m}"));
    let word = |i: usize| -> Result<[u8; 8]> {
        bytes
            .get(8 * i..8 * i + 8)
            .and_then(|s| s.try_into().ok())
            .ok_or_else(|| bad("truncated"))
    };
    let dim = u64::from_le_bytes(word(0)?) as usize;
    if !(1..=2).contains(&dim) {
        return Err(bad("dimension must be 1 or 2"));
    }
    let mut n_cells = Vec::with_capacity(dim);
    let mut extents = Vec::with_capacity(dim);
    for i in 0..dim {
        n_cells.push(u64::from_le_bytes(word(1 + i)?) as usize);
        extents.push(f64::from_le_bytes(word(1 + dim + i)?));
    }
    let grid = Grid::new(dim, &extents, &n_cells).map_err(|e| bad(&e.to_string()))?;
    let head = 1 + 2 * dim;
    if bytes.len() != 8 * (head + grid.node_count()) {
        return Err(bad("payload length does not match the header"));
    }
    let values = (0..grid.node_count())
        .map(|k| word(head + k).map(f64::from_le_bytes))
        .collect::<Result<Vec<_>>>()?;
    Ok(Field::from_values(&grid, values)?)
}

pub fn write_field_bin(path: &Path, field: &Field) -> Result<()> {
    fs::write(path, field_to_bytes(field)).map_err(|e| LabError::io(path, e))
}

pub fn read_field_bin(path: &Path) -> Result<Field> {
    field_from_bytes(&fs::read(path).map_err(|e| LabError::io(path, e))?)
}

pub const ENERGY_HEADER: [&str; 7] = ["t", "J", "I", "grad_pm_norm", "source_pairing", "potential", "mass_m1"];

pub fn energy_row(t: f64, r: &EnergyReport) -> [String; 7] {
    [t, r.j, r.i, r.grad_pm_norm, r.source_pairing, r.potential, r.mass_m1].map(|x| x.to_string())
}

pub fn write_energy_csv(path: &Path, times: &[f64], reports: &[EnergyReport]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(ENERGY_HEADER).map_err(|e| csv_error(path, e))?;
    for (t, r) in times.iter().zip(reports) {
        w.write_record(energy_row(*t, r)).map_err(|e| csv_error(path, e))?;
    }
    finish(path, w)
}

/// Columns `t, J, I, dissipation, L{m+1}_norm, Ep, M, dt, outcome`, with
/// `M(t) = int_0^t int u^(m+1)` and `Ep = M(t) + big_m`. The outcome label
/// sits on the last row only.
pub fn write_trajectory_csv(path: &Path, traj: &TrajectoryRecord, big_m: f64) -> Result<()> {
    let mut w = csv_writer(path)?;
    let norm_col = format!("L{}_norm", traj.m + 1.0);
    w.write_record(["t", "J", "I", "dissipation", &norm_col, "Ep", "M", "dt", "outcome"])
        .map_err(|e| csv_error(path, e))?;
    let norms = traj.norms();
    let n = traj.len();
    for k in 0..n {
        let r = &traj.reports[k];
        let mi = traj.mass_integral[k];
        let flag = if k + 1 == n { traj.outcome.label() } else { "" };
        let row = [
            traj.times[k].to_string(),
            r.j.to_string(),
            r.i.to_string(),
            traj.dissipation[k].to_string(),
            norms[k].to_string(),
            (mi + big_m).to_string(),
            mi.to_string(),
            traj.dts[k].to_string(),
            flag.to_string(),
        ];
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    finish(path, w)
}

/// Columns `delta, d, r, a, lower_bound, converged`.
pub fn write_well_profile_csv(path: &Path, profile: &WellProfile) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["delta", "d", "r", "a", "lower_bound", "converged"])
        .map_err(|e| csv_error(path, e))?;
    for k in 0..profile.delta_grid.len() {
        let row = [
            profile.delta_grid[k].to_string(),
            profile.d_values[k].to_string(),
            profile.r_values[k].to_string(),
            profile.a_values[k].to_string(),
            profile.lower_bounds[k].to_string(),
            profile.converged[k].to_string(),
        ];
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    finish(path, w)
}

/// Header plus string rows; used by sweeps and tables.
pub fn write_rows_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_error(path, e))?;
    }
    finish(path, w)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| LabError::Serialize(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?).map_err(|e| LabError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| LabError::io(path, e))
}

/// Output directory plus the artifacts written into it, in write order.
#[derive(Debug)]
pub struct OutDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| LabError::io(root, e))?;
        Ok(OutDir {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Path for `name`, recorded as an artifact.
    pub fn artifact(&mut self, name: &str) -> PathBuf {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        self.root.join(name)
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }
}
