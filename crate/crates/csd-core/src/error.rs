use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum CsdError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("point outside domain: {axis} = {value} not in [{min}, {max}]")]
    OutOfDomain {
        axis: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("circle of radius {radius} around ({cx}, {cy}) leaves the grid")]
    CircleOutsideGrid { cx: f64, cy: f64, radius: f64 },

    #[error("unsupported order {order}: {reason}")]
    UnsupportedOrder { order: f64, reason: String },

    #[error("unsupported argument {name} = {value}: {reason}")]
    UnsupportedArgument {
        name: &'static str,
        value: f64,
        reason: String,
    },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("ambiguous loop: {enclosed} nodes within radius {radius} of ({cx}, {cy}); circulation is only loop-invariant around a single node")]
    AmbiguousLoop {
        cx: f64,
        cy: f64,
        radius: f64,
        enclosed: usize,
    },

    #[error("numerical blow-up at t = {t}, grid point ({i}, {j}) in {field}")]
    Blowup {
        t: f64,
        i: usize,
        j: usize,
        field: &'static str,
    },

    #[error("oracle integrity: norm drift {drift:.3e} exceeds budget {budget:.3e} at t = {t}")]
    OracleIntegrity { t: f64, drift: f64, budget: f64 },

    #[error("snapshot format: {0}")]
    SnapshotFormat(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CsdError>;
