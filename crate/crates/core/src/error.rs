use thiserror::Error;

/// Errors raised by the density, sampling and comparison routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid box dimensions {0:?}: every side must be positive and finite")]
    InvalidBox([f64; 3]),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("input density is not normalized (mass {mass:.6})")]
    Unnormalized { mass: f64 },

    #[error("density has zero mass")]
    ZeroMass,

    #[error("requested domain misses {missed:.4} of the mass (limit {limit:.4})")]
    DomainMissesMass { missed: f64, limit: f64 },

    #[error("negative support: {0}")]
    NegativeSupport(String),

    #[error("singular input: {0}")]
    Singular(String),

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("exit location {coords:?} lies outside the face bounds {bounds:?}")]
    ExitOutOfBounds { coords: [f64; 2], bounds: [f64; 2] },

    #[error("incompatible binning: {0}")]
    IncompatibleBins(String),

    #[error("histogram is empty")]
    EmptyHistogram,

    #[error("exit cell contains no samples")]
    EmptyCell,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
