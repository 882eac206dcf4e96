use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("capacity exceeded: {what} needs {requested}, budget is {budget}")]
    Capacity {
        what: &'static str,
        requested: usize,
        budget: usize,
    },
    #[error("the sampled field contains no particle")]
    EmptyField,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("time {t} is outside the recorded range [0, {final_time}]")]
    OutOfRange { t: f64, final_time: f64 },
    #[error("degenerate fit window: {0}")]
    DegenerateWindow(String),
    #[error("non-positive velocity {value} at density {density}")]
    NonPositiveVelocity { density: f64, value: f64 },
    #[error("boxes overlap")]
    Overlap,
    #[error("no constants in the scanned range dominate the grid")]
    Infeasible,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
