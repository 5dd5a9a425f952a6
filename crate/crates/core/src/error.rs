use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid kernel parameters: {0}")]
    InvalidKernel(String),

    #[error("domain is empty")]
    EmptyDomain,

    #[error("domain touches the computational box boundary (copy {copy}, cell {cell})")]
    TouchesBoundary { copy: usize, cell: usize },

    #[error("field support does not match the form's active set")]
    SupportMismatch,

    #[error("field is identically zero")]
    ZeroField,

    #[error("cell sets overlap at active cell {0}")]
    Overlap(usize),

    #[error("requested {requested} eigenpairs but only {available} active cells")]
    TooManyEigenpairs { requested: usize, available: usize },

    #[error("negative value {value} at copy {copy}, cell {cell}")]
    NegativeValue { copy: usize, cell: usize, value: f64 },

    #[error("volume {volume} exceeds the admissible box volume {capacity}")]
    VolumeTooLarge { volume: f64, capacity: f64 },

    #[error("shift leaves the computational box")]
    ShiftOutOfBox,

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("radius {0} out of range")]
    RadiusOutOfRange(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed form dump: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
