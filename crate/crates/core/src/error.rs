use thiserror::Error;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("angle {name}={value} outside [-pi/2, pi/2)")]
    AngleOutOfRange { name: &'static str, value: f64 },

    #[error("array dimensions must be positive, got {nx}x{ny}")]
    EmptyArray { nx: usize, ny: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dictionary grid {gx}x{gy} smaller than array {nx}x{ny}")]
    GridTooSmall {
        gx: usize,
        gy: usize,
        nx: usize,
        ny: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is singular to working precision (condition number {condition:.3e})")]
    Singular { condition: f64 },

    #[error("NMSE undefined: reference channel is identically zero")]
    ZeroReference,

    #[error("failed to parse config: {0}")]
    ConfigParse(#[from] toml::de::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
