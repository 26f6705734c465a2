use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

/// Failures raised by the field operations, the integrator and the diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Grid parameters are unusable (too few points, non-positive period).
    InvalidGrid(String),
    /// Two fields that must share a grid do not, or a buffer has the wrong length.
    ShapeMismatch(String),
    /// A field value is NaN or infinite.
    NonFinite { index: usize },
    /// The slice metric failed a leading-minor test at this grid point.
    NonPositiveDefinite { index: usize },
    /// The lapse (or gauge density) is not strictly positive at this grid point.
    NonPositiveLapse { index: usize },
    /// A Runge-Kutta stage produced an invalid state. Stages 1-4 are the stage
    /// inputs (stage 1 is the incoming state), 5 is the combined update.
    StepFailed { stage: usize, cause: Box<Error> },
    /// The CFL step fell below the configured floor.
    DtUnderflow { dt: f64, floor: f64 },
    /// The localized domain shrank to nothing; `remaining` is the unclamped radius.
    DomainCrushed { remaining: f64 },
    /// A ball scale wraps around the torus.
    ScaleTooLarge { scale: f64, limit: f64 },
    /// Perturbation amplitude outside the near-flat regime.
    AmplitudeTooLarge { amplitude: f64, limit: f64 },
    /// Kasner exponents or gauge density violate their constraints.
    InvalidKasner(String),
    /// Any other parameter outside its admissible range.
    InvalidParameter(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidGrid(msg) => write!(f, "invalid grid: {msg}"),
            Error::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            Error::NonFinite { index } => write!(f, "non-finite value at grid point {index}"),
            Error::NonPositiveDefinite { index } => {
                write!(f, "metric not positive definite at grid point {index}")
            }
            Error::NonPositiveLapse { index } => {
                write!(f, "lapse not positive at grid point {index}")
            }
            Error::StepFailed { stage, cause } => write!(f, "RK4 stage {stage} failed: {cause}"),
            Error::DtUnderflow { dt, floor } => {
                write!(f, "time step {dt:e} below floor {floor:e}")
            }
            Error::DomainCrushed { remaining } => {
                write!(f, "domain crushed (radius would be {remaining:e})")
            }
            Error::ScaleTooLarge { scale, limit } => {
                write!(f, "scale {scale} exceeds wrap limit {limit}")
            }
            Error::AmplitudeTooLarge { amplitude, limit } => {
                write!(f, "amplitude {amplitude:e} exceeds {limit:e}")
            }
            Error::InvalidKasner(msg) => write!(f, "invalid Kasner parameters: {msg}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
