use alloc::boxed::Box;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("a {rows}x{cols} grid with spacing {spacing} does not fit in a region of size {region}")]
    GridDoesNotFit {
        rows: usize,
        cols: usize,
        spacing: f64,
        region: f64,
    },
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("channel vector is identically zero")]
    ZeroChannel,
    #[error("trace must be positive, got {0:e}")]
    NonPositiveTrace(f64),
    #[error("SDP is infeasible: {0}")]
    Infeasible(&'static str),
    #[error(
        "SDP solver stopped after {iterations} iterations without converging \
         (gap {gap:e}, primal residual {primal:e}, dual residual {dual:e})"
    )]
    SolverNotConverged {
        iterations: usize,
        gap: f64,
        primal: f64,
        dual: f64,
    },
    #[error("tau = {0:e} is too small to recover the weights")]
    DegenerateTau(f64),
    #[error("input positions are infeasible: {0}")]
    InfeasiblePositions(&'static str),
    #[error("no relay power left for the receive stage (P_tot - noise power = {0:e})")]
    NoPowerSlack(f64),
    #[error("antenna index {index} out of range for {len} antennas")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("SNR must be nonnegative, got {0}")]
    NegativeSnr(f64),
    #[error("alternating optimization failed at iteration {iteration}: {source}")]
    AoStep { iteration: usize, source: Box<Error> },
}
