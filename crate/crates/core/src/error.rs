use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("radius {r} outside the domain [0, {outer}]")]
    Domain { r: f64, outer: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("non-finite density value f({r}) = {value}")]
    Evaluation { r: f64, value: f64 },

    #[error("quadrature did not converge on [{a}, {b}] (error estimate {estimate:e})")]
    Quadrature { a: f64, b: f64, estimate: f64 },

    #[error("could not bracket the Clairaut constant for target angle {target}; scanned {} samples", profile.len())]
    Bracket {
        target: f64,
        /// (parameter, swept angle) samples of the scan.
        profile: Vec<(f64, f64)>,
    },

    #[error("degenerate region: {0}")]
    ZeroRegion(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    /// A non-chord-arc curve reached the isoperimetric threshold; carries the curve as JSON.
    #[error("curve with ratio {ratio} at or above threshold {threshold}: {curve}")]
    Violation { ratio: f64, threshold: f64, curve: String },

    #[error("degenerate triangle {0} in the mesh")]
    Mesh(usize),

    #[error("point {0:?} lies on the branch cut")]
    BranchCut((f64, f64)),

    #[error("conformal map iteration failed after {iterations} steps (residuals {history:?})")]
    Convergence { iterations: usize, history: Vec<f64> },
}

pub type Result<T> = std::result::Result<T, Error>;
