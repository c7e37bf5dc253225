use thiserror::Error;

/// Errors raised by the modeling, simulation, and identification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("steady-state system is numerically singular{}", match .f_hz {
        Some(f) => format!(" at f = {f} Hz"),
        None => String::new(),
    })]
    SingularSystem { f_hz: Option<f64> },

    #[error("coupled inductor matrix is degenerate (L_t*L_r - M^2 <= 0)")]
    DegenerateCoupling,

    #[error("integration diverged at t = {t} s")]
    Diverged { t: f64 },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("sample rate {sample_rate} Hz is not an integer multiple of 4 per cycle at f = {f} Hz")]
    RateMismatch { sample_rate: f64, f: f64 },

    #[error("phase undefined for zero vector")]
    UndefinedPhase,

    #[error("negative radicand {radicand} in mutual inductance extraction")]
    NegativeRadicand { radicand: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
