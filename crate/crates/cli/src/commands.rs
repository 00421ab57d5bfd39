//! Subcommand implementations. Each returns an exit code and a printable
//! report; `solve` also hands back the run itself.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use starflow_core::flow::{check_initial, evolve, FlowReport, InitialVerdict, Recording, Termination};
use starflow_core::grid::SphereGrid;
use starflow_core::monitors::{
    cert_bounds, cert_curvature, cert_decay, cert_gradient, cert_residual, Certificate,
};
use starflow_core::prescribed::{default_scan_grid, AdmissibilityReport, STRICT_TOL};
use starflow_core::shape::shape_state;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::formats;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CONE: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] starflow_core::Error),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Config(_) => EXIT_CONFIG,
            CommandError::Write { .. } => EXIT_CHECK_FAILED,
            CommandError::Core(starflow_core::Error::ConeViolation { .. }) => EXIT_CONE,
            CommandError::Core(_) => EXIT_CONFIG,
        }
    }
}

pub struct Outcome {
    pub code: i32,
    pub report: String,
}

fn write(path: &Path, text: &str, files: &mut Vec<PathBuf>) -> Result<(), CommandError> {
    formats::write_atomic(path, text)
        .map_err(|source| CommandError::Write { path: path.to_path_buf(), source })?;
    files.push(path.to_path_buf());
    Ok(())
}

fn fmt_admissibility(out: &mut String, a: &AdmissibilityReport) {
    let _ = writeln!(out, "admissibility: {}", if a.pass { "pass" } else { "FAIL" });
    let _ = writeln!(out, "  r1 = {}, r2 = {}, annulus [{}, {}]", a.r1, a.r2, a.big_r1, a.big_r2);
    let _ = writeln!(out, "  min d/drho(rho^-k f) = {:.6e}", a.min_mono);
    let _ = writeln!(
        out,
        "  barrier margins: inner {:.6e}, outer {:.6e}",
        a.barriers.inner_margin, a.barriers.outer_margin
    );
    let _ = writeln!(out, "  delta0 = {:.6e}", a.delta0);
    let _ = writeln!(out, "  sup|grad f| = {:.6e}, C2 norm = {:.6e}", a.c0_grad, a.c2_norm);
}

fn fmt_initial(out: &mut String, v: &InitialVerdict) {
    let _ = writeln!(out, "initial data: {}", if v.pass { "pass" } else { "FAIL" });
    if v.large_degree() {
        let _ = writeln!(out, "  degree {} > 1: 0 <= -(1/F - f)|grad X0|/|X0| <= k R1/((k+1) R2) min f", v.k);
        let _ = writeln!(out, "  |grad X0| taken as sqrt(trace g)");
        let _ = writeln!(out, "  lhs = {:.6e}, rhs = {:.6e}, max(1/F - f) = {:.6e}", v.lhs, v.rhs, v.max_speed);
    } else {
        let _ = writeln!(out, "  degree {} <= 1: 1/F - f >= 0", v.k);
        let _ = writeln!(out, "  min(1/F - f) = {:.6e}", v.min_speed);
    }
    let _ = writeln!(out, "  d/dt rho at t = 0 in [{:.6e}, {:.6e}]", v.min_operator, v.max_operator);
}

pub fn admissibility_certificate(a: &AdmissibilityReport) -> Certificate {
    Certificate {
        name: "admissibility",
        pass: a.pass,
        constants: vec![
            ("r1", a.r1),
            ("r2", a.r2),
            ("R1", a.big_r1),
            ("R2", a.big_r2),
            ("min_mono", a.min_mono),
            ("inner_margin", a.barriers.inner_margin),
            ("outer_margin", a.barriers.outer_margin),
            ("delta0", a.delta0),
            ("c0_grad", a.c0_grad),
            ("c2_norm", a.c2_norm),
            ("min_f", a.min_f),
        ],
        worst_margin: a
            .min_mono
            .min(a.delta0)
            .min(a.barriers.inner_margin)
            .min(a.barriers.outer_margin),
        worst_time: 0.0,
    }
}

pub fn initial_certificate(v: &InitialVerdict) -> Certificate {
    let worst_margin = if v.large_degree() {
        (v.rhs - v.lhs).min(-v.max_speed)
    } else {
        v.min_speed
    };
    Certificate {
        name: "initial_data",
        pass: v.pass,
        constants: vec![
            ("k", v.k),
            ("R1", v.big_r1),
            ("R2", v.big_r2),
            ("min_speed", v.min_speed),
            ("max_speed", v.max_speed),
            ("min_operator", v.min_operator),
            ("max_operator", v.max_operator),
            ("lhs", v.lhs),
            ("rhs", v.rhs),
        ],
        worst_margin,
        worst_time: 0.0,
    }
}

fn rho_range(rho: &[f64]) -> (f64, f64) {
    rho.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)))
}

pub fn check_f(cfg: &RunConfig) -> Result<Outcome, CommandError> {
    let grid = cfg.grid()?;
    let spec = cfg.curvature()?;
    let f = cfg.prescribed(&grid)?;
    let rep = f.admissibility(spec.degree(), cfg.r1, cfg.r2, (cfg.r1, cfg.r2), &default_scan_grid());
    let mut report = String::new();
    fmt_admissibility(&mut report, &rep);
    Ok(Outcome { code: if rep.pass { EXIT_OK } else { EXIT_CHECK_FAILED }, report })
}

pub fn check_init(cfg: &RunConfig) -> Result<Outcome, CommandError> {
    let grid = cfg.grid()?;
    let spec = cfg.curvature()?;
    let f = cfg.prescribed(&grid)?;
    let rho0 = cfg.initial_rho(&grid)?;
    let u0: Vec<f64> = rho0.iter().map(|v| v.ln()).collect();
    let v = match check_initial(&grid, &u0, &spec, &f, cfg.r1, cfg.r2, &default_scan_grid()) {
        Ok(v) => v,
        Err(e @ starflow_core::Error::ConeViolation { .. }) => {
            return Ok(Outcome { code: EXIT_CHECK_FAILED, report: format!("initial data: FAIL\n  {e}\n") })
        }
        Err(e) => return Err(e.into()),
    };
    let mut report = String::new();
    fmt_initial(&mut report, &v);
    Ok(Outcome { code: if v.pass { EXIT_OK } else { EXIT_CHECK_FAILED }, report })
}

#[derive(Clone, Debug, Default)]
pub struct SolveOptions {
    pub force: bool,
    pub out_dir: Option<PathBuf>,
    pub snapshot_times: Option<Vec<f64>>,
}

pub struct SolveOutcome {
    pub code: i32,
    pub report: String,
    pub admissibility: AdmissibilityReport,
    pub initial: Option<InitialVerdict>,
    pub flow: Option<FlowReport>,
    pub certificates: Vec<Certificate>,
    pub files: Vec<PathBuf>,
}

fn require_positive_delta0(mut c: Certificate, delta0: f64) -> Certificate {
    if !(delta0 >= STRICT_TOL) {
        c.pass = false;
    }
    c
}

fn mesh_name(prefix: &str, t: f64) -> String {
    format!("{prefix}_t{t}.obj")
}

pub fn solve(cfg: &RunConfig, opts: &SolveOptions) -> Result<SolveOutcome, CommandError> {
    let grid = cfg.grid()?;
    let spec = cfg.curvature()?;
    let f = cfg.prescribed(&grid)?;
    let rho0 = cfg.initial_rho(&grid)?;
    let u0: Vec<f64> = rho0.iter().map(|v| v.ln()).collect();
    let k = spec.degree();
    let scan = default_scan_grid();
    let range0 = rho_range(&rho0);
    let out_dir = opts.out_dir.clone().unwrap_or_else(|| cfg.output.dir.clone());
    let snapshot_times = opts.snapshot_times.clone().unwrap_or_else(|| cfg.output.snapshot_times.clone());

    let adm = f.admissibility(k, cfg.r1, cfg.r2, range0, &scan);
    let initial = check_initial(&grid, &u0, &spec, &f, cfg.r1, cfg.r2, &scan);
    let mut report = String::new();
    fmt_admissibility(&mut report, &adm);
    let initial = match initial {
        Ok(v) => {
            fmt_initial(&mut report, &v);
            Some(v)
        }
        Err(e @ starflow_core::Error::ConeViolation { .. }) => {
            let _ = writeln!(report, "initial data: FAIL\n  {e}");
            None
        }
        Err(e) => return Err(e.into()),
    };
    let admissible = adm.pass && initial.is_some_and(|v| v.pass);
    let mut outcome = SolveOutcome {
        code: EXIT_CONFIG,
        report,
        admissibility: adm,
        initial,
        flow: None,
        certificates: Vec::new(),
        files: Vec::new(),
    };
    if !admissible && !opts.force {
        let _ = writeln!(outcome.report, "inadmissible input; rerun with --force to evolve anyway");
        return Ok(outcome);
    }

    let mut flow_cfg = cfg.flow.clone();
    flow_cfg.checkpoints = snapshot_times.clone();
    flow_cfg.record = if snapshot_times.is_empty() { Recording::None } else { Recording::Checkpoints };
    let run = evolve(&grid, &u0, &spec, &f, &flow_cfg)?;
    let series = &run.series;

    let mut certs = vec![admissibility_certificate(&adm)];
    if let Some(v) = &initial {
        certs.push(initial_certificate(v));
    }
    if let (Some(first), Some(last)) = (series.first(), series.last()) {
        let (big_r1, big_r2) = (adm.big_r1, adm.big_r2);
        let shape0 = shape_state(&grid, &rho0)?;
        certs.push(cert_bounds(series, range0, cfg.r1, cfg.r2));
        certs.push(require_positive_delta0(
            cert_decay(series, adm.delta0, big_r1, big_r2, k, first.max_dt_rho),
            adm.delta0,
        ));
        certs.push(require_positive_delta0(
            cert_gradient(series, adm.c0_grad, big_r2, adm.delta0, first.max_h),
            adm.delta0,
        ));
        certs.push(require_positive_delta0(
            cert_curvature(series, &shape0, adm.c2_norm, adm.delta0, big_r2),
            adm.delta0,
        ));
        let tol = flow_cfg.tol_residual * last.max_rho / last.min_support;
        certs.push(cert_residual(series, tol));
    }
    let all_pass = certs.iter().all(|c| c.pass);

    let mut files = Vec::new();
    write(&out_dir.join(&cfg.output.series), &formats::series_csv(series), &mut files)?;
    write(&out_dir.join(&cfg.output.certificates), &formats::certificates_json(&certs), &mut files)?;
    write(&out_dir.join(&cfg.output.field), &formats::field_text(&grid, &run.state.rho()), &mut files)?;
    for frame in &run.trajectory {
        if snapshot_times.contains(&frame.t) {
            let rho: Vec<f64> = frame.u.iter().map(|v| v.exp()).collect();
            let path = out_dir.join(mesh_name(&cfg.output.mesh_prefix, frame.t));
            write(&path, &formats::obj_mesh(&grid, &rho), &mut files)?;
        }
    }

    let report = &mut outcome.report;
    let last = series.last();
    let _ = writeln!(
        report,
        "run: {:?} after {} steps at t = {}",
        run.termination, run.state.step, run.state.t
    );
    if let Some(s) = last {
        let _ = writeln!(
            report,
            "  final max|d/dt rho| = {:.3e}, residual = {:.3e}, rho in [{:.9}, {:.9}]",
            s.max_dt_rho, s.residual, s.min_rho, s.max_rho
        );
    }
    for c in &certs {
        let _ = writeln!(
            report,
            "certificate {:<16} {}  worst margin {:.3e} at t = {}",
            c.name,
            if c.pass { "pass" } else { "FAIL" },
            c.worst_margin,
            c.worst_time
        );
    }
    outcome.code = match run.termination {
        Termination::Converged if all_pass => EXIT_OK,
        Termination::Converged => EXIT_CHECK_FAILED,
        Termination::ConeViolation { node, kappa } => {
            let n = &grid.nodes()[node];
            let _ = writeln!(
                report,
                "cone violation at node {node} (theta = {}, phi = {}): kappa = ({}, {})",
                n.theta, n.phi, kappa[0], kappa[1]
            );
            if let Some(field) = &run.offending_field {
                let rho: Vec<f64> = field.iter().map(|v| v.exp()).collect();
                let path = out_dir.join("postmortem_field.txt");
                write(&path, &formats::field_text(&grid, &rho), &mut files)?;
            }
            EXIT_CONE
        }
        Termination::Horizon | Termination::StepLimit => EXIT_NOT_CONVERGED,
    };
    outcome.certificates = certs;
    outcome.files = files;
    outcome.flow = Some(run);
    Ok(outcome)
}

/// Writes an OBJ mesh of `field` (or of the initial data) to `out_dir`.
pub fn export(cfg: &RunConfig, field: Option<&Path>, out_dir: Option<&Path>) -> Result<Outcome, CommandError> {
    let grid: SphereGrid = cfg.grid()?;
    let rho = match field {
        Some(path) => formats::read_field(path, &grid).map_err(ConfigError::from)?,
        None => cfg.initial_rho(&grid)?,
    };
    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.dir.clone());
    let path = dir.join(format!("{}.obj", cfg.output.mesh_prefix));
    let mut files = Vec::new();
    write(&path, &formats::obj_mesh(&grid, &rho), &mut files)?;
    Ok(Outcome { code: EXIT_OK, report: format!("wrote {}\n", path.display()) })
}
