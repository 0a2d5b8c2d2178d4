use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no decay rate tabulated for coherence order {order} (table covers |n| <= {max})")]
    DecayOrderOutOfRange { order: i64, max: usize },

    #[error("CFL condition violated: c*dt/dz = {courant:.6} > 1")]
    Cfl { courant: f64 },

    #[error("field layout mismatch: {0}")]
    ShapeMismatch(String),

    #[error("integration diverged (non-finite field) at t = {time:.6}")]
    Diverged { time: f64 },

    #[error("integration window [{lo}, {hi}] exceeds the grid domain [{z_min}, {z_max}]")]
    WindowOutsideDomain {
        lo: f64,
        hi: f64,
        z_min: f64,
        z_max: f64,
    },

    #[error("no resolvable forward pulse: {0}")]
    NoForwardPulse(String),

    #[error("pole: denominator vanishes at {0}")]
    Pole(String),

    #[error("singular linear system (pivot ratio estimate {estimate:.3e})")]
    SingularSystem { estimate: f64 },

    #[error("{0}")]
    Config(#[from] crate::io::ConfigError),

    #[error("{context}: {source}")]
    Io {
        context: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(context: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
