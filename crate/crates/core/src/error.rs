//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by mesh handling, geometry, assembly and solves.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("non-manifold mesh: {0}")]
    NonManifold(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("invalid curved element {elem}: nonlinearity constant C_K = {c_k} >= 1")]
    InvalidCurvedElement { elem: usize, c_k: f64 },

    #[error("degenerate geometry map: det DF = {det}")]
    DegenerateMap { det: f64 },

    #[error("degenerate face: |gamma'| = {metric}")]
    DegenerateFace { metric: f64 },

    #[error("unsupported quadrature degree {0} (max 20)")]
    UnsupportedDegree(usize),

    #[error("matrix is not SPD: nonpositive diagonal entry at row {row}")]
    NotSpd { row: usize },

    #[error("solver did not converge: best relative residual {residual} after {iterations} iterations")]
    ConvergenceFailure { residual: f64, iterations: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
