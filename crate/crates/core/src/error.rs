use crate::vec3::Vec3;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("model `{model}`: point ({}, {}, {}) lies outside the validity domain", .point.x, .point.y, .point.z)]
    Domain { model: String, point: Vec3 },

    #[error("model `{model}`: field strength {magnitude:e} below singular threshold")]
    SingularField { model: String, magnitude: f64 },

    #[error("model `{model}` does not support {what}")]
    Unsupported { model: String, what: &'static str },

    #[error("orbit left the domain of `{model}` at t = {exit_time}")]
    Truncated { model: String, exit_time: f64 },

    #[error("integration failed at t = {time}: {reason}")]
    IntegrationFailure { time: f64, reason: String },

    #[error("degenerate pitch at t = {time}: perpendicular velocity vanishes")]
    DegeneratePitch { time: f64 },

    #[error("trajectory does not cover [{from}, {to}]")]
    Coverage { from: f64, to: f64 },

    #[error("sweep failed at omega = {omega}: {source}")]
    Sweep {
        omega: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("order fit needs at least 3 positive errors, got {usable}")]
    Fit { usable: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for failures of the numerics (domain exits, invariant violations)
    /// as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Domain { .. }
            | Error::SingularField { .. }
            | Error::Truncated { .. }
            | Error::IntegrationFailure { .. }
            | Error::DegeneratePitch { .. }
            | Error::Coverage { .. }
            | Error::Fit { .. } => true,
            Error::Sweep { source, .. } => source.is_numerical(),
            Error::Unsupported { .. } | Error::InvalidArgument(_) => false,
        }
    }
}
