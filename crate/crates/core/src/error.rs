use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("cell {cell}: degenerate fan triangle {triangle} (signed area {area:e})")]
    DegenerateCell { cell: usize, triangle: usize, area: f64 },

    #[error("cell {0}: element not star-shaped (no admissible star center found)")]
    NotStarShaped(usize),

    #[error("mesh validation failed: {0}")]
    Validation(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("quadrature of exactness {have} is too weak; at least {need} is required")]
    WeakQuadrature { have: usize, need: usize },

    #[error("basis construction failed on cell {cell}: Gram matrix not SPD (raise quadrature exactness to >= {need})")]
    GramFactorization { cell: usize, need: usize },

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("singular local system on cell {0}")]
    SingularLocal(usize),

    #[error("rigid-motion consistency violated on cell {cell}: residual {residual:e}")]
    RigidMotion { cell: usize, residual: f64 },

    #[error("linear solve failed: {0}")]
    Solve(String),

    #[error("rate fit failed: {0}")]
    Fit(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
