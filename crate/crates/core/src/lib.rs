//! Curvature flow of starshaped surfaces in ℝ³, reduced to a parabolic
//! equation for the logarithm of the radial function on the unit sphere.
//!
//! The crate is `no_std` with `alloc`. File formats, configuration and the
//! command line live in the companion `starflow-cli` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod flow;
pub mod grid;
pub mod linalg;
pub mod monitors;
pub mod prescribed;
pub mod shape;
pub mod symfunc;

pub use error::{Error, Result};
pub use flow::{
    check_initial, evolve, stable_dt, track_material_points, velocity, FlowConfig, FlowReport,
    FlowState, InitialVerdict, Integrator, Recording, Termination,
};
pub use grid::{GridMode, SphereGrid};
pub use linalg::{Sym2, Vec2, Vec3};
pub use monitors::{Certificate, MonitorSeries, Snapshot};
pub use prescribed::{AdmissibilityReport, Angular, PrescribedSpec};
pub use shape::{shape_state, ShapeState};
pub use symfunc::{CurvatureSpec, StructureReport};
