//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A triangular factor has a diagonal entry at or below the rank
    /// threshold; the channel draw is unusable and should be redrawn.
    #[error("matrix is numerically rank deficient (|pivot| = {pivot:e})")]
    RankDeficient { pivot: f64 },

    /// The Gram-matrix solve inside the pseudo-inverse hit a pivot below
    /// 1e-14.
    #[error("gram matrix solve failed (pivot = {pivot:e})")]
    Singular { pivot: f64 },

    /// The Jacobi eigen-iteration did not converge within its sweep cap.
    #[error("singular value iteration exceeded {max_sweeps} sweeps")]
    ConvergenceFailure { max_sweeps: usize },

    /// Channel matrix with zero Frobenius norm; CSI error scaling is
    /// undefined.
    #[error("degenerate channel: zero Frobenius norm")]
    DegenerateChannel,

    /// Bit vector length is not a multiple of the per-dimension bit width.
    #[error("bit vector length {got} is not divisible by {divisor}")]
    LengthMismatch { got: usize, divisor: usize },

    /// Exhaustive search over T^K candidates would exceed the guard limit.
    #[error("search space of {size} candidates exceeds the exhaustive-search guard")]
    SearchSpaceTooLarge { size: u128 },

    /// A closed-form node count does not fit in 64 bits.
    #[error("complexity count overflows 64-bit integer arithmetic")]
    Overflow,

    /// The Neumann expansion precondition (spectral norm of H^-1 B below
    /// one) does not hold.
    #[error("Neumann expansion inapplicable: estimated spectral norm {norm}")]
    InapplicableExpansion { norm: f64 },

    /// Requested an operation tally for a phase that was not instrumented.
    #[error("operation counters were not enabled for the requested phase")]
    CountersDisabled,

    /// Simulation configuration failed validation.
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
