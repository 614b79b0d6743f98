//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("mismatch: {0}")]
    Mismatch(String),

    #[error("matrix is numerically singular")]
    Singular,

    #[error("shift {lambda} too close to spectrum (condition estimate {cond:.3e})")]
    ShiftNearSpectrum { lambda: f64, cond: f64 },

    #[error("singular shifted system at lambda = {lambda}")]
    SingularShift { lambda: f64 },

    #[error(
        "mass matrix not positive definite (inconsistent or noisy data): \
         eigenvalue ratio {ratio:.3e} below floor {floor:.3e}"
    )]
    MassNotSpd { ratio: f64, floor: f64 },

    #[error("matrix numerically rank-deficient in symmetric square root")]
    RankDeficient,

    #[error("block Lanczos breakdown at step {step}")]
    LanczosBreakdown { step: usize },

    #[error("empty linear system")]
    EmptySystem,

    #[error("svd did not converge")]
    SvdFailed,

    #[error("negative coefficient values in medium (min {min:.3e}); use allowing_negative to override")]
    NegativeCoefficient { min: f64 },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Tag an error with the pipeline stage it surfaced in.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
