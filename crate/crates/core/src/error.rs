use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by precondition checks across the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Grid construction parameters rejected.
    InvalidGrid(&'static str),
    /// Derivative multi-index outside `1 ≤ |order| ≤ 3`.
    InvalidOrder([u8; 2]),
    /// A region or ball with no grid nodes.
    EmptyRegion,
    /// A ball or region does not fit inside the grid with the required margin.
    RegionOutsideGrid,
    /// Two fields were sampled on different grids.
    GridMismatch,
    /// A NaN or infinite input where finite values are required.
    NonFinite(&'static str),
    /// A phase value reached `|Θ| ≥ π`.
    PhaseRange { value: f64 },
    /// A phase violates the discrete `DΘ = 0 on {Θ = 0}` witness.
    ZeroSetGradient { gradient: f64, tolerance: f64 },
    /// Negative values handed to the interpolation check.
    NegativeField { value: f64 },
    /// Input to an estimate check was not a solution to the required accuracy.
    Unsolved { residual: f64, tolerance: f64 },
    /// Scalar argument outside the documented domain.
    Domain(&'static str),
    /// Constant ledger could not be built or failed validation.
    Ledger(&'static str),
    /// A cutoff profile failed its structural checks.
    Cutoff(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidGrid(msg) => write!(f, "invalid grid: {msg}"),
            Error::InvalidOrder(o) => write!(f, "unsupported derivative order ({}, {})", o[0], o[1]),
            Error::EmptyRegion => f.write_str("region contains no grid nodes"),
            Error::RegionOutsideGrid => f.write_str("region does not fit inside the grid interior"),
            Error::GridMismatch => f.write_str("fields live on different grids"),
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::PhaseRange { value } => write!(f, "phase value {value} outside (-pi, pi)"),
            Error::ZeroSetGradient { gradient, tolerance } => write!(
                f,
                "phase gradient {gradient:e} exceeds {tolerance:e} on the zero set"
            ),
            Error::NegativeField { value } => write!(f, "field takes negative value {value}"),
            Error::Unsolved { residual, tolerance } => {
                write!(f, "residual {residual:e} above solved tolerance {tolerance:e}")
            }
            Error::Domain(msg) => write!(f, "argument out of domain: {msg}"),
            Error::Ledger(msg) => write!(f, "constant ledger: {msg}"),
            Error::Cutoff(msg) => write!(f, "cutoff construction: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
