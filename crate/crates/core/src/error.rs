use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// `D = b + ((c-1)/2)^2` is negative; the indicial roots are complex.
    #[error("negative discriminant D = {0}")]
    NegativeDiscriminant(f64),

    #[error("homogeneity index {q} lies outside the generation window ({lo}, {hi})")]
    OutsideGenerationWindow { q: f64, lo: f64, hi: f64 },

    /// The radial measure `|y|^m dy` on R^M is not locally finite.
    #[error("invalid measure: M + m = {0} must be positive")]
    InvalidMeasure(f64),

    /// A Hardy-type operator is unbounded for the requested parameters.
    #[error("operator is unbounded: {0}")]
    Unbounded(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    /// Operator coefficients do not admit the requested realization.
    #[error("parameters not admissible: {0}")]
    Admissibility(String),

    #[error("quadrature did not converge at y = {node} (error estimate {error:e})")]
    QuadratureFailure { node: f64, error: f64 },

    #[error("empty grid")]
    EmptyGrid,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("envelope fit failed: {0}")]
    FitFailure(String),

    /// lambda = 0 while the zero Fourier mode of the data does not vanish.
    #[error("singular frequency: zero mode of the data has norm {0:e}")]
    SingularFrequency(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
