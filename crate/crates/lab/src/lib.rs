//! Floating-point verification lab: quadrature cross-checks, chart-atlas integration,
//! symmetric-orbit shooting and twist counting.

pub mod atlas;
pub mod dd;
pub mod error;
pub mod ode;
pub mod quad;
pub mod shooting;

pub use atlas::{
    integrate, ChartAtlas, ChartId, Event, EventKind, IntegrationOptions, Model, OrbitTrace, Plane, WatchedPlane,
};
pub use error::{LabError, Result};
pub use ode::Tolerances;
pub use quad::{check_system, quadrature_check, DerivativeCheck, QuadratureReport};
pub use shooting::{
    check_periodic_side, default_bracket, find_symmetric_periodic_orbit, seed_on_center_manifold, twist_count,
    PeriodicOrbit, PeriodicOrbitResult, ShootingOptions, TwistReport,
};
