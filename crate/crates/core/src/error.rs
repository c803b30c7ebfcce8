use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("mode k = {k} outside the resolved range |k| < {limit}")]
    ModeOutOfRange { k: i64, limit: i64 },

    #[error("field has zero norm")]
    ZeroNorm,

    #[error("perturbation size epsilon is zero; the streaming frame is undefined")]
    ZeroEpsilon,

    #[error("step index must be at least 1 for the operator identity")]
    ZeroStep,

    #[error("local time {t_local} outside the step interval [0, {h})")]
    TimeOutsideStep { t_local: f64, h: f64 },

    #[error("time {t} is not on the step grid of h = {h}")]
    OffGrid { t: f64, h: f64 },

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("blow-up at step {step} (t = {time}): {what} = {value:e} exceeds ceiling {ceiling:e}")]
    BlowUp {
        step: u64,
        time: f64,
        what: String,
        value: f64,
        ceiling: f64,
    },

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("nonpositive value {value:e} at t = {t} in fit window")]
    NonPositive { t: f64, value: f64 },

    #[error("norm H^{s}_{nu} was not recorded in this trajectory")]
    MissingNorm { s: u32, nu: f64 },

    #[error("Im(tau) = {0} > 0: the half-line transform is only defined for Im(tau) <= 0")]
    UpperHalfPlane(f64),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("winding number {0} is not an integer within 0.1; contour under-resolved")]
    WindingNotInteger(f64),

    #[error("secant iteration did not converge in {iterations} iterations (last |D| = {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("1 - K̂ has no root: the kernel vanishes identically")]
    NoRoot,

    #[error("root tau = {re} + {im}i lies in Im <= 0 although the state passed the Penrose check")]
    InconsistentRoot { re: f64, im: f64 },

    #[error("ill-posed Volterra discretization: |1 - dt K(0)/2| = {0:e}")]
    IllPosed(f64),

    #[error("|1 - K̂(tau)| = {modulus:e} < kappa0 = {kappa0} at tau = {tau}")]
    PenroseViolation { tau: f64, modulus: f64, kappa0: f64 },

    #[error("Fourier-domain solve needs the kernel transform K̂")]
    MissingTransform,
}

impl Error {
    /// Failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::BlowUp { .. }
                | Error::Quadrature(_)
                | Error::WindingNotInteger(_)
                | Error::NoConvergence { .. }
                | Error::NoRoot
                | Error::InconsistentRoot { .. }
                | Error::IllPosed(_)
                | Error::PenroseViolation { .. }
        )
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
