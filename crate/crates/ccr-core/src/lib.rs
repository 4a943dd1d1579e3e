//! Pose prediction for cable-driven continuum robots (CCRs) with
//! arbitrary cable routing.
//!
//! A CCR is an elastic backbone carrying equally spaced spacer discs;
//! pulling cables routed through the disc holes bends it. This crate
//! predicts the deformed backbone with two independent models and the
//! machinery to cross-validate them:
//!
//! - [`fourbar`]: a purely kinematic model that discretizes the backbone
//!   into spatial four-bar linkages and minimizes the squared coupler
//!   angles segment by segment, driven by a total cable-length reduction.
//! - [`cosserat`]: a static Cosserat rod model driven by cable tensions,
//!   integrated with fixed-step RK4 and solved by damped-Newton shooting
//!   on the tip force/moment balance.
//! - [`workspace`]: the tension-to-shortening bridge between the two
//!   models, per-disc comparison reports, and workspace point clouds over
//!   actuation sweeps.
//!
//! Geometry, routings, cable paths and solved poses live in [`robot`],
//! [`routing`] and [`curve`]. All quantities are SI internally; file
//! schemas use the millimetre/gram/percent units of the lab bench.
//!
//! All types are immutable after construction and safe to share across
//! threads; independent solves can run in parallel without coordination.

pub mod cosserat;
pub mod curve;
pub mod error;
pub mod fourbar;
pub mod optim;
pub mod robot;
pub mod routing;
pub mod spline;
pub mod workspace;

pub use curve::{cable_length, BackboneCurve, CurveSample, StrainSample};
pub use error::{Error, Result};
pub use robot::{build_spec, MaterialStiffness, RobotConfigFile, RobotSpec, STANDARD_GRAVITY};
pub use routing::{build_cable_path, CablePath, CableRouting, RoutingFile};
