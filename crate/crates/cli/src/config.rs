//! Run configuration: flat `key = value` lines with dotted section
//! prefixes and `#` comments.
//!
//! ```text
//! grid.mode = axisymmetric
//! grid.n_theta = 256
//! curvature.kind = sigma_k
//! curvature.k = 1
//! prescribed.p = 2
//! radii.r1 = 0.8
//! radii.r2 = 1.0
//! initial.kind = constant
//! initial.radius = 0.8
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use starflow_core::flow::{FlowConfig, Integrator, Recording};
use starflow_core::grid::{GridMode, SphereGrid};
use starflow_core::prescribed::{Angular, PrescribedSpec, TabulatedProfile};
use starflow_core::symfunc::CurvatureSpec;
use starflow_core::Vec3;
use thiserror::Error;

use crate::formats;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{0}` given twice")]
    Duplicate(String),
    #[error("invalid value for `{key}`: {msg}")]
    Value { key: String, msg: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("{0}")]
    Field(#[from] formats::FieldError),
    #[error(transparent)]
    Core(#[from] starflow_core::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurvatureKind {
    SigmaK,
    InvSigmaK,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialSpec {
    Constant { radius: f64 },
    File(PathBuf),
    /// `ρ₀ = radius · (1 + amplitude · c·x)`.
    Perturbed { radius: f64, amplitude: f64, angular: Vec3 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub series: String,
    pub certificates: String,
    pub field: String,
    pub mesh_prefix: String,
    pub snapshot_times: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
    pub grid_mode: GridMode,
    pub n_theta: usize,
    pub n_phi: usize,
    pub curvature_kind: CurvatureKind,
    pub k: u32,
    pub alpha: f64,
    pub p: f64,
    pub epsilon: f64,
    pub angular: Vec3,
    pub angular_file: Option<PathBuf>,
    pub r1: f64,
    pub r2: f64,
    pub initial: InitialSpec,
    pub flow: FlowConfig,
    pub output: OutputConfig,
}

const KEYS: &[&str] = &[
    "grid.mode",
    "grid.n_theta",
    "grid.n_phi",
    "curvature.kind",
    "curvature.k",
    "curvature.alpha",
    "prescribed.p",
    "prescribed.epsilon",
    "prescribed.angular",
    "prescribed.angular_file",
    "radii.r1",
    "radii.r2",
    "initial.kind",
    "initial.radius",
    "initial.amplitude",
    "initial.angular",
    "initial.file",
    "flow.safety",
    "flow.integrator",
    "flow.tol_residual",
    "flow.t_max",
    "flow.max_steps",
    "flow.monitor_stride",
    "output.dir",
    "output.series",
    "output.certificates",
    "output.field",
    "output.mesh_prefix",
    "output.snapshot_times",
];

struct Table(BTreeMap<String, String>);

impl Table {
    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|e| ConfigError::Value {
                key: key.to_string(),
                msg: e.to_string(),
            }),
        }
    }

    fn or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    fn required<T: std::str::FromStr>(&self, key: &'static str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.parse(key)?.ok_or(ConfigError::Missing(key))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(v) = self.raw(key) else { return Ok(None) };
        parse_list(v)
            .map(Some)
            .map_err(|msg| ConfigError::Value { key: key.to_string(), msg })
    }

    fn vec3(&self, key: &str, default: Vec3) -> Result<Vec3, ConfigError> {
        match self.list(key)? {
            None => Ok(default),
            Some(v) if v.len() == 3 => Ok([v[0], v[1], v[2]]),
            Some(v) => Err(ConfigError::Value {
                key: key.to_string(),
                msg: format!("expected 3 numbers, found {}", v.len()),
            }),
        }
    }
}

/// Numbers separated by commas and/or whitespace.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect()
}

fn bad(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Value { key: key.to_string(), msg: msg.into() }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax { line: i + 1, msg: "expected `key = value`".into() });
            };
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey(key.to_string()));
            }
            if map.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(ConfigError::Duplicate(key.to_string()));
            }
        }
        let t = Table(map);

        let grid_mode = match t.raw("grid.mode").unwrap_or("full") {
            "full" => GridMode::Full,
            "axisymmetric" => GridMode::Axisymmetric,
            other => return Err(bad("grid.mode", format!("`{other}` is not full or axisymmetric"))),
        };
        let curvature_kind = match t.raw("curvature.kind").unwrap_or("sigma_k") {
            "sigma_k" => CurvatureKind::SigmaK,
            "inv_sigma_k" => CurvatureKind::InvSigmaK,
            other => return Err(bad("curvature.kind", format!("`{other}` is not sigma_k or inv_sigma_k"))),
        };
        let integrator = match t.raw("flow.integrator").unwrap_or("rk2") {
            "euler" => Integrator::Euler,
            "rk2" => Integrator::Rk2,
            "rk4" => Integrator::Rk4,
            other => return Err(bad("flow.integrator", format!("`{other}` is not euler, rk2 or rk4"))),
        };
        let resolve = |p: &str| -> PathBuf {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base_dir.join(p)
            }
        };

        let initial = match t.raw("initial.kind").unwrap_or("constant") {
            "constant" => InitialSpec::Constant { radius: t.required("initial.radius")? },
            "file" => InitialSpec::File(resolve(
                t.raw("initial.file").ok_or(ConfigError::Missing("initial.file"))?,
            )),
            "perturbed" => InitialSpec::Perturbed {
                radius: t.required("initial.radius")?,
                amplitude: t.required("initial.amplitude")?,
                angular: t.vec3("initial.angular", [0.0, 0.0, 1.0])?,
            },
            other => {
                return Err(bad("initial.kind", format!("`{other}` is not constant, file or perturbed")))
            }
        };

        let defaults = FlowConfig::default();
        let flow = FlowConfig {
            safety: t.or("flow.safety", defaults.safety)?,
            integrator,
            tol_residual: t.or("flow.tol_residual", defaults.tol_residual)?,
            t_max: t.or("flow.t_max", defaults.t_max)?,
            max_steps: t.or("flow.max_steps", defaults.max_steps)?,
            monitor_stride: t.or("flow.monitor_stride", defaults.monitor_stride)?,
            record: Recording::None,
            checkpoints: Vec::new(),
        };
        flow.validate()?;

        let output = OutputConfig {
            dir: resolve(t.raw("output.dir").unwrap_or("out")),
            series: t.raw("output.series").unwrap_or("series.csv").to_string(),
            certificates: t.raw("output.certificates").unwrap_or("certificates.json").to_string(),
            field: t.raw("output.field").unwrap_or("final_field.txt").to_string(),
            mesh_prefix: t.raw("output.mesh_prefix").unwrap_or("surface").to_string(),
            snapshot_times: t.list("output.snapshot_times")?.unwrap_or_default(),
        };

        let cfg = RunConfig {
            base_dir: base_dir.to_path_buf(),
            grid_mode,
            n_theta: t.or("grid.n_theta", 64)?,
            n_phi: t.or("grid.n_phi", 128)?,
            curvature_kind,
            k: t.or("curvature.k", 1)?,
            alpha: t.or("curvature.alpha", 1.0)?,
            p: t.or("prescribed.p", 2.0)?,
            epsilon: t.or("prescribed.epsilon", 0.0)?,
            angular: t.vec3("prescribed.angular", [0.0, 0.0, 1.0])?,
            angular_file: t.raw("prescribed.angular_file").map(resolve),
            r1: t.required("radii.r1")?,
            r2: t.required("radii.r2")?,
            initial,
            flow,
            output,
        };
        if !(cfg.r1 > 0.0 && cfg.r1 <= cfg.r2) {
            return Err(bad("radii.r1", "need 0 < r1 <= r2"));
        }
        if let InitialSpec::Constant { radius } | InitialSpec::Perturbed { radius, .. } = cfg.initial {
            if !(radius > 0.0) {
                return Err(bad("initial.radius", "must be positive"));
            }
        }
        if cfg.output.snapshot_times.iter().any(|t| !(*t >= 0.0)) {
            return Err(bad("output.snapshot_times", "times must be non-negative"));
        }
        Ok(cfg)
    }

    pub fn grid(&self) -> Result<SphereGrid, ConfigError> {
        Ok(SphereGrid::new(self.grid_mode, self.n_theta, self.n_phi)?)
    }

    pub fn curvature(&self) -> Result<CurvatureSpec, ConfigError> {
        let base = match self.curvature_kind {
            CurvatureKind::SigmaK => CurvatureSpec::sigma_k(self.k)?,
            CurvatureKind::InvSigmaK => CurvatureSpec::inv_sigma_k(self.k)?,
        };
        if self.alpha == 1.0 {
            Ok(base)
        } else {
            Ok(CurvatureSpec::power_scaled(base, self.alpha)?)
        }
    }

    pub fn prescribed(&self, grid: &SphereGrid) -> Result<PrescribedSpec, ConfigError> {
        let angular = match &self.angular_file {
            None => Angular::Linear(self.angular),
            Some(path) => {
                let values = formats::read_field(path, grid)?;
                Angular::Tabulated(Box::new(TabulatedProfile { grid: grid.clone(), values }))
            }
        };
        Ok(PrescribedSpec::new(self.p, self.epsilon, angular)?)
    }

    /// Initial radial function on `grid`.
    pub fn initial_rho(&self, grid: &SphereGrid) -> Result<Vec<f64>, ConfigError> {
        let rho = match &self.initial {
            InitialSpec::Constant { radius } => vec![*radius; grid.len()],
            InitialSpec::File(path) => formats::read_field(path, grid)?,
            InitialSpec::Perturbed { radius, amplitude, angular } => grid.field_from_fn(|n| {
                let y = angular[0] * n.x[0] + angular[1] * n.x[1] + angular[2] * n.x[2];
                radius * (1.0 + amplitude * y)
            }),
        };
        if let Some((i, v)) = rho.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(starflow_core::Error::NonPositiveRadius { node: Some(i), rho: *v }.into());
        }
        Ok(rho)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "\
# logistic sphere
grid.mode = axisymmetric
grid.n_theta = 32
curvature.kind = sigma_k
curvature.k = 1
prescribed.p = 2
radii.r1 = 0.8
radii.r2 = 1.0   # trailing comment
initial.kind = constant
initial.radius = 0.8
flow.integrator = rk4
output.snapshot_times = 0.5, 1
";

    #[test]
    fn parses_basic_config() {
        let c = RunConfig::parse(BASIC, Path::new("/tmp")).unwrap();
        assert_eq!(c.grid_mode, GridMode::Axisymmetric);
        assert_eq!(c.n_theta, 32);
        assert_eq!(c.flow.integrator, Integrator::Rk4);
        assert_eq!(c.initial, InitialSpec::Constant { radius: 0.8 });
        assert_eq!(c.output.snapshot_times, vec![0.5, 1.0]);
        assert_eq!(c.output.dir, PathBuf::from("/tmp/out"));
        assert_eq!(c.curvature().unwrap(), CurvatureSpec::sigma_k(1).unwrap());
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        let e = RunConfig::parse("grid.bogus = 1\nradii.r1=1\nradii.r2=1", Path::new("."));
        assert!(matches!(e, Err(ConfigError::UnknownKey(_))));
        let e = RunConfig::parse("grid.mode full", Path::new("."));
        assert!(matches!(e, Err(ConfigError::Syntax { line: 1, .. })));
        let e = RunConfig::parse("initial.radius = 1\nradii.r1 = x\nradii.r2 = 1", Path::new("."));
        assert!(matches!(e, Err(ConfigError::Value { .. })));
        let e = RunConfig::parse("initial.radius = 1\nradii.r1 = 1", Path::new("."));
        assert!(matches!(e, Err(ConfigError::Missing("radii.r2"))));
        let e = RunConfig::parse("radii.r1 = 1\nradii.r1 = 2", Path::new("."));
        assert!(matches!(e, Err(ConfigError::Duplicate(_))));
    }

    #[test]
    fn power_scaled_from_alpha() {
        let text = format!("{BASIC}curvature.alpha = 2\n");
        let c = RunConfig::parse(&text, Path::new(".")).unwrap();
        assert_eq!(c.curvature().unwrap().degree(), 2.0);
    }

    #[test]
    fn perturbed_initial_field() {
        let text = BASIC.replace(
            "initial.kind = constant",
            "initial.kind = perturbed\ninitial.amplitude = 0.1\ninitial.angular = 0 0 1",
        );
        let c = RunConfig::parse(&text, Path::new(".")).unwrap();
        let g = c.grid().unwrap();
        let rho = c.initial_rho(&g).unwrap();
        let x = g.nodes()[0].x;
        assert!((rho[0] - 0.8 * (1.0 + 0.1 * x[2])).abs() < 1e-15);
    }
}
