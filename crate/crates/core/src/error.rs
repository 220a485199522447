use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("wavelength {wavelength_nm} nm outside Sellmeier validity range [{min_nm}, {max_nm}] nm")]
    OutOfRange {
        wavelength_nm: f64,
        min_nm: f64,
        max_nm: f64,
    },

    #[error(
        "phase matching impossible: residual k_p - k_s - k_i is {lower:.6e} rad/m at theta=0 and {upper:.6e} rad/m at theta=pi/2"
    )]
    NoPhaseMatch { lower: f64, upper: f64 },

    #[error("grid of {rows}x{cols} needs {required} bytes, memory budget is {budget} bytes")]
    Resource {
        rows: usize,
        cols: usize,
        required: usize,
        budget: usize,
    },

    #[error("degenerate distribution: {0}")]
    DegenerateDistribution(String),

    #[error("degenerate marginal: signal variance is zero, linear inference undefined")]
    DegenerateMarginal,

    #[error("usage error: {0}")]
    Usage(String),

    #[error("invalid parameter: {0}")]
    Invalid(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error("sweep aborted at swept value {value}: {source}")]
    Sweep {
        value: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures that stem from a numerically degenerate result.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NoPhaseMatch { .. } | Error::DegenerateDistribution(_) | Error::DegenerateMarginal => true,
            Error::Sweep { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub fn is_resource(&self) -> bool {
        match self {
            Error::Resource { .. } => true,
            Error::Sweep { source, .. } => source.is_resource(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
