//! Charged-particle orbits in strong static magnetic fields and their
//! guiding-centre limit.
//!
//! The equation of motion is normalised as `ẍ = ω ẋ × B(x)` with `|B| ~ 1`
//! and `|v| ~ 1`, so `ω` is the inverse of the dimensionless Larmor radius.
//! Full orbits ([`orbit`]) are compared against zeroth- and first-order
//! guiding-centre solutions ([`guiding_center`]) over sweeps in `ω`
//! ([`convergence`]).

pub mod convergence;
pub mod diagnostics;
pub mod error;
pub mod field_models;
pub mod guiding_center;
pub mod identities;
pub mod orbit;
pub mod series;
pub mod vec3;

pub use error::{Error, Result};
pub use field_models::{BuiltinModel, Domain, FieldModel, FieldSample, ModelParams, ResidualStats};
pub use guiding_center::{GCParams, GCState, GCTrajectory, GcOrder, InitMode};
pub use orbit::{OrbitConfig, ParticleState, Scheme, Trajectory};
pub use series::PositionTrack;
pub use vec3::{Mat3, Vec3};
