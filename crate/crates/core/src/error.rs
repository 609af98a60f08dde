//! Error type shared by all modules.

use alloc::string::String;
use core::fmt;

/// Errors surfaced by the public operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Jets over different numbers of variables were combined.
    DimensionMismatch { left: usize, right: usize },
    /// Jets with different truncation cutoffs were combined.
    CutoffMismatch { left: u32, right: u32 },
    /// `jet_exp` was called with a non-nilpotent argument.
    NonNilpotentExponent,
    /// Series inversion with a non-invertible leading coefficient.
    NonInvertibleSeries,
    /// Division by a non-invertible ring element.
    NonInvertibleScalar,
    /// The metric matrix is singular at the queried point.
    SingularMetric { point: String },
    /// A computation to order ħ^K needs deeper jets than the context holds.
    BudgetExceeded { needed: u32, have: u32 },
    /// The operation needs jets at shifted points, which a fixed-point jet
    /// table cannot provide.
    JetTableUnsupported { op: &'static str },
    /// A coordinate change with vanishing derivative at the base point.
    DegenerateChart,
    /// Input data violates Hermitian symmetry.
    NotHermitian { entry: String },
    /// Input data is malformed (bad multi-index length, zero denominator, ...).
    InvalidData { what: String },
    /// The module only supports complex dimension one.
    DimensionUnsupported { n: usize, op: &'static str },
    /// Internal truncation caps of the contour engine were exceeded.
    PoleCapExceeded { pole: i32, cap: i32 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { left, right } => {
                write!(f, "dimension mismatch: {left} vs {right}")
            }
            Error::CutoffMismatch { left, right } => {
                write!(f, "jet cutoff mismatch: {left} vs {right}")
            }
            Error::NonNilpotentExponent => {
                write!(f, "jet_exp needs a zero constant term; factor it out first")
            }
            Error::NonInvertibleSeries => {
                write!(f, "series has a non-invertible leading coefficient")
            }
            Error::NonInvertibleScalar => write!(f, "division by a non-invertible ring element"),
            Error::SingularMetric { point } => {
                write!(f, "metric matrix is singular at point {point}")
            }
            Error::BudgetExceeded { needed, have } => {
                write!(f, "jet depth budget exceeded: need order {needed}, have {have}")
            }
            Error::JetTableUnsupported { op } => {
                write!(
                    f,
                    "operation `{op}` needs jets at shifted points; use a closed-form model \
                     instead of a fixed-point jet table"
                )
            }
            Error::DegenerateChart => {
                write!(f, "coordinate change has vanishing derivative at the base point")
            }
            Error::NotHermitian { entry } => {
                write!(f, "jet table violates Hermitian symmetry at {entry}")
            }
            Error::InvalidData { what } => write!(f, "invalid input data: {what}"),
            Error::DimensionUnsupported { n, op } => {
                write!(f, "operation `{op}` supports n=1 only, got n={n}")
            }
            Error::PoleCapExceeded { pole, cap } => {
                write!(f, "contour engine pole order {pole} exceeds cap {cap}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
