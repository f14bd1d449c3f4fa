use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("wavenumber k = 0 is excluded")]
    ZeroWavenumber,
    #[error("potential failed validation: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("resonant configuration: |qL - 1/2| = {0:e}")]
    Resonant(f64),
    #[error("closed form denominator vanishes")]
    Singular,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("fixed-point iteration did not converge in {0} iterations")]
    NoConvergence(usize),
    #[error("P_c routes disagree: relative discrepancy {0:.3e}")]
    ProjectionMismatch(f64),
    #[error("blow-up detected at t = {0}")]
    BlowUp(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("ODE integration failed: {0}")]
    Ode(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
