use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error(
        "virtual release point of receiver {from} lies inside receiver {to} \
         (distance {distance} um <= radius {radius} um)"
    )]
    ReleasePointInsideTarget {
        from: usize,
        to: usize,
        distance: f64,
        radius: f64,
    },

    #[error("series expansion outside its region of convergence (c12*c21 = {product} >= 1)")]
    RocViolation { product: f64 },

    #[error("operation needs {expected} receivers, topology has {found}")]
    ReceiverCount { expected: &'static str, found: usize },

    #[error("receiver index {index} out of range for {count} receivers")]
    ReceiverIndex { index: usize, count: usize },

    #[error("time grids differ: {0}")]
    GridMismatch(String),

    #[error("cannot extrapolate: target horizon {target} s exceeds source horizon {available} s")]
    Extrapolation { target: f64, available: f64 },

    #[error("receiver {0} recorded no hits")]
    NoHits(usize),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
