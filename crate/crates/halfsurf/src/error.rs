//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("invalid surface: {0}")]
    InvalidSurface(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("search budget exhausted: {0}")]
    Budget(String),

    #[error("collision at t = {t}: obstructed by slit tip ({x}, {y})")]
    Collision { t: f64, x: f64, y: f64 },

    #[error("unsupported geometry: {0}")]
    Unsupported(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("reparametrization obstructed: {0}")]
    Obstruction(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
