use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("frequency offset {offset_hz} Hz aliases at sample rate {sample_rate_hz} Hz")]
    Aliasing { offset_hz: f64, sample_rate_hz: f64 },

    #[error("rate ratio {0} has no rational form with denominator <= 1e6")]
    IrrationalRatio(f64),

    #[error("target rate {target_hz} Hz is below the occupied bandwidth {occupied_hz} Hz")]
    Undersampled { target_hz: f64, occupied_hz: f64 },

    #[error("signal has zero power")]
    ZeroPower,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("OVSF code (sf={sf_a}, index={index_a}) conflicts with (sf={sf_b}, index={index_b})")]
    CodeTreeConflict {
        sf_a: usize,
        index_a: usize,
        sf_b: usize,
        index_b: usize,
    },

    #[error("covariance matrix is rank deficient")]
    RankDeficient,

    #[error("delay of {delay_s} s exceeds buffer duration {duration_s} s")]
    DelayTooLong { delay_s: f64, duration_s: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
