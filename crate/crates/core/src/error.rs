use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("support function is not differentiable at h = 0")]
    NonDifferentiable,

    #[error("abnormal covector: h = 0 gives H = 0, only normal extremals are supported")]
    AbnormalCovector,

    #[error("invalid control body: {}", .0.join("; "))]
    InvalidBody(Vec<String>),

    #[error("operation requires k = 3 generators, got k = {0}")]
    UnsupportedRank(usize),

    #[error("invariant drift {drift:e} exceeded bound {bound:e} at t = {time}")]
    DriftExceeded { time: f64, drift: f64, bound: f64 },

    #[error("no return to the initial covector before t_max = {t_max}")]
    HorizonExhausted { t_max: f64 },

    #[error("step size underflow at t = {time} (h = {step:e})")]
    StepSizeUnderflow { time: f64, step: f64 },

    #[error("maximum number of steps ({0}) exceeded")]
    TooManySteps(usize),
}

impl Error {
    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DriftExceeded { .. }
                | Error::HorizonExhausted { .. }
                | Error::StepSizeUnderflow { .. }
                | Error::TooManySteps(_)
        )
    }
}
