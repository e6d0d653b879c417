use thiserror::Error;

/// Errors reported by state constructors, linear algebra and reconstruction.
///
/// Messages name the violated invariant so CLI users see what actually
/// failed rather than a generic "bad input".
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {0} not supported (expected one of 2, 4, 16)")]
    Dimension(usize),

    #[error("dimension mismatch: {0}x{0} vs {1}x{1}")]
    DimensionMismatch(usize, usize),

    #[error("tensor product dimension {0} exceeds the supported maximum 16")]
    TensorTooLarge(usize),

    #[error("invalid partial-trace selector {selector:?} for dimension {dim}")]
    BadSelector { dim: usize, selector: Vec<usize> },

    #[error("matrix violates hermiticity: |m - m^dag| = {defect:.3e} exceeds 1e-10")]
    NotHermitian { defect: f64 },

    #[error("state violates unit-trace invariant: trace = {trace:.12} (tolerance 1e-10)")]
    BadTrace { trace: f64 },

    #[error("state violates positivity: min eigenvalue {min_eig:.3e} below -1e-10")]
    NotPositive { min_eig: f64 },

    #[error("parameter {name} = {value} outside its domain [{lo}, {hi}]")]
    ParamRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("X-state coherence |{name}| = {value:.6} exceeds its positivity bound {bound:.6}")]
    CoherenceBound {
        name: &'static str,
        value: f64,
        bound: f64,
    },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
