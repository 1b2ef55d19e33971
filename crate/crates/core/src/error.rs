//! Crate-wide error type.

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Error, Debug)]
pub enum Error {
    #[error("Fock dimension must be at least 2, got {dim}")]
    DimensionTooSmall { dim: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("photon number {index} outside truncated basis of dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian: max |A - A^dag| = {deviation:.3e} exceeds {limit:.1e}")]
    NonHermitian { deviation: f64, limit: f64 },

    #[error("density matrix trace {trace:.12} outside (0, 1 + 1e-10]")]
    InvalidTrace { trace: f64 },

    #[error("density matrix not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("truncated basis too small: tail mass {tail:.3e} exceeds {limit:.1e}")]
    TailMass { tail: f64, limit: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("quasiprobability order parameter must satisfy s < 1, got {s}")]
    InvalidS { s: f64 },

    #[error("trace drift {drift:.3e} at t = {time:.6} exceeds tolerance {tolerance:.1e} (dt too large or basis too small)")]
    TraceDrift { time: f64, drift: f64, tolerance: f64 },

    #[error("no usable polarization-phase crossing within horizon {horizon:.6} (protocol inapplicable at these rates)")]
    NoCrossing { horizon: f64 },

    #[error("superposition angle theta = {theta} outside (0, {max}] required for the small-angle inversion")]
    ThetaOutOfRange { theta: f64, max: f64 },

    #[error("imaginary residue {residue:.3e} exceeds {limit:.1e}; input is effectively non-Hermitian")]
    ImaginaryResidue { residue: f64, limit: f64 },

    #[error("Jacobi eigenvalue sweep failed to converge after {sweeps} sweeps")]
    JacobiNoConvergence { sweeps: usize },

    #[error("at grid point ({re}, {im}): {source}")]
    AtGridPoint {
        re: f64,
        im: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
