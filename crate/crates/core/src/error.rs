use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grids do not match")]
    GridMismatch,

    #[error("ball (center {center:?}, radius {radius}) is not inside the grid box")]
    BallOutsideGrid { center: [f64; 3], radius: f64 },

    #[error("scale {r} is below the grid floor {floor}")]
    ScaleBelowGrid { r: f64, floor: f64 },

    #[error("domain is empty")]
    EmptyDomain,

    #[error("solver did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("data field `{0}` has no analytic derivatives of the requested order")]
    MissingDerivatives(String),

    #[error("state is not harmonic on its positivity set (residual {0:.3e})")]
    NotHarmonic(f64),

    #[error("domain vanished during descent at step {0}")]
    StepCollapse(usize),

    #[error("no descent after {halvings} step halvings at step {step}")]
    NoDescent { step: usize, halvings: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input rather than a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::GridMismatch
                | Error::BallOutsideGrid { .. }
                | Error::ScaleBelowGrid { .. }
                | Error::Config(_)
                | Error::MissingDerivatives(_)
        )
    }
}
