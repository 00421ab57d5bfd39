//! File formats: CSV series, JSON certificates, OBJ meshes and plain-text
//! radial fields, written atomically.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use starflow_core::grid::{GridMode, SphereGrid};
use starflow_core::monitors::{Certificate, MonitorSeries};
use thiserror::Error;

pub const CSV_HEADER: &str =
    "t,max_dt_rho,min_rho,max_rho,max_grad_rho,min_kappa,max_kappa,residual,min_F,cone_margin,max_H";

/// Longitudes used to revolve an axisymmetric meridian for mesh export.
pub const REVOLVED_LONGITUDES: usize = 64;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("cannot read field file {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: expected `theta phi rho`")]
    Syntax { path: PathBuf, line: usize },
    #[error("{path}: {found} values for a grid of {expected} nodes")]
    Count { path: PathBuf, expected: usize, found: usize },
    #[error("{path}: entry {index} at ({theta}, {phi}) does not match the grid node")]
    Position { path: PathBuf, index: usize, theta: f64, phi: f64 },
}

/// One `theta phi rho` line per node, in node order.
pub fn field_text(grid: &SphereGrid, rho: &[f64]) -> String {
    let mut s = String::from("# theta phi rho\n");
    for (n, r) in grid.nodes().iter().zip(rho) {
        let _ = writeln!(s, "{} {} {}", n.theta, n.phi, r);
    }
    s
}

/// Reads a field written by [`field_text`] for the same grid.
pub fn read_field(path: &Path, grid: &SphereGrid) -> Result<Vec<f64>, FieldError> {
    let text = fs::read_to_string(path)
        .map_err(|source| FieldError::Io { path: path.to_path_buf(), source })?;
    let mut values = Vec::with_capacity(grid.len());
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
        let nums = match nums {
            Ok(v) if v.len() == 3 => v,
            _ => return Err(FieldError::Syntax { path: path.to_path_buf(), line: i + 1 }),
        };
        let index = values.len();
        if let Some(node) = grid.nodes().get(index) {
            if (node.theta - nums[0]).abs() > 1e-9 || (node.phi - nums[1]).abs() > 1e-9 {
                return Err(FieldError::Position {
                    path: path.to_path_buf(),
                    index,
                    theta: nums[0],
                    phi: nums[1],
                });
            }
        }
        values.push(nums[2]);
    }
    if values.len() != grid.len() {
        return Err(FieldError::Count {
            path: path.to_path_buf(),
            expected: grid.len(),
            found: values.len(),
        });
    }
    Ok(values)
}

pub fn series_csv(series: &MonitorSeries) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for p in &series.snapshots {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            p.t,
            p.max_dt_rho,
            p.min_rho,
            p.max_rho,
            p.max_grad_rho,
            p.min_kappa,
            p.max_kappa,
            p.residual,
            p.min_f,
            p.cone_margin,
            p.max_h
        );
    }
    s
}

fn number(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

pub fn certificate_value(c: &Certificate) -> Value {
    let constants: Map<String, Value> =
        c.constants.iter().map(|(k, v)| (k.to_string(), number(*v))).collect();
    json!({
        "pass": c.pass,
        "constants": constants,
        "worst_margin": number(c.worst_margin),
        "worst_time": number(c.worst_time),
    })
}

/// One object per certificate, keyed by name.
pub fn certificates_json(certs: &[Certificate]) -> String {
    let map: Map<String, Value> =
        certs.iter().map(|c| (c.name.to_string(), certificate_value(c))).collect();
    let mut s = serde_json::to_string_pretty(&Value::Object(map)).expect("serializable");
    s.push('\n');
    s
}

/// Wavefront OBJ of the surface `ρ(x)·x`. Quads between neighbouring
/// nodes are split into two triangles, the seam is closed in longitude and
/// each polar ring is closed by a fan. Axisymmetric fields are revolved.
pub fn obj_mesh(grid: &SphereGrid, rho: &[f64]) -> String {
    let (rows, cols) = match grid.mode() {
        GridMode::Full => (grid.n_theta(), grid.n_phi()),
        GridMode::Axisymmetric => (grid.n_theta(), REVOLVED_LONGITUDES),
    };
    let mut s = String::from("# radial surface\n");
    for j in 0..rows {
        for i in 0..cols {
            let (x, r) = match grid.mode() {
                GridMode::Full => {
                    let k = grid.index(j, i);
                    (grid.nodes()[k].x, rho[k])
                }
                GridMode::Axisymmetric => {
                    let theta = grid.nodes()[j].theta;
                    let phi = 2.0 * std::f64::consts::PI * i as f64 / cols as f64;
                    let (st, ct) = theta.sin_cos();
                    let (sp, cp) = phi.sin_cos();
                    ([st * cp, st * sp, ct], rho[j])
                }
            };
            let _ = writeln!(s, "v {} {} {}", r * x[0], r * x[1], r * x[2]);
        }
    }
    let v = |j: usize, i: usize| j * cols + (i % cols) + 1;
    for j in 0..rows - 1 {
        for i in 0..cols {
            let (a, b, c, d) = (v(j, i), v(j, i + 1), v(j + 1, i), v(j + 1, i + 1));
            let _ = writeln!(s, "f {a} {c} {d}");
            let _ = writeln!(s, "f {a} {d} {b}");
        }
    }
    for i in 1..cols - 1 {
        let _ = writeln!(s, "f {} {} {}", v(0, 0), v(0, i + 1), v(0, i));
        let last = rows - 1;
        let _ = writeln!(s, "f {} {} {}", v(last, 0), v(last, i), v(last, i + 1));
    }
    s
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}
