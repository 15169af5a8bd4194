use thiserror::Error;

/// Errors produced by the flow-field pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("point ({x:.3}, {y:.3}) is outside the frenet capture range ({distance:.3} m > {capture:.3} m)")]
    OutOfCapture {
        x: f64,
        y: f64,
        distance: f64,
        capture: f64,
    },

    #[error("direction set has no dominant direction (resultant norm {0:e})")]
    DegenerateDirection(f64),

    #[error("malformed record for vehicle {id}: {reason}")]
    MalformedRecord { id: String, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no traces survived filtering")]
    EmptyInput,

    #[error("no field cell meets the support threshold")]
    EmptyField,

    #[error("no path found for channel {channel}")]
    NoPath { channel: u32 },

    #[error("reference path too short: {length:.3} m < {required:.3} m")]
    TooShort { length: f64, required: f64 },

    #[error("no supported cells in the band around station s = {station:.3} m")]
    EmptyStation { station: f64 },

    #[error("no admissible reference for channel {channel}")]
    NoReference { channel: u32 },

    #[error("QP solver hit its iteration cap ({iterations}) with KKT residual {residual:e}")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
