use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::data::SettingPair;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Requested embedded dataset does not exist.
    UnknownDataset { name: String },
    /// A table with zero trials, or data that cannot carry a correlation.
    DegenerateData { setting: SettingPair },
    /// Argument outside the domain of a distribution function.
    Domain { what: &'static str, value: f64 },
    /// Parameters reconstruct a negative (or non-finite) probability.
    InfeasibleParams { cell: usize, value: f64 },
    /// Probability vector violates no-signalling beyond tolerance.
    SignallingViolated { residual: f64 },
    /// More than one one-sided CHSH inequality is violated at the
    /// unconstrained fit.
    UnsupportedGeometry { violated: Vec<usize> },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnknownDataset { name } => {
                write!(f, "unknown dataset `{name}`; valid names: ")?;
                for (i, n) in crate::data::EMBEDDED_NAMES.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    f.write_str(n)?;
                }
                Ok(())
            }
            Error::DegenerateData { setting } => {
                write!(f, "degenerate data: table for setting pair {setting} has no trials")
            }
            Error::Domain { what, value } => write!(f, "{what} outside domain: {value}"),
            Error::InfeasibleParams { cell, value } => {
                write!(f, "infeasible parameters: probability {value:e} at cell {cell}")
            }
            Error::SignallingViolated { residual } => write!(
                f,
                "probabilities violate no-signalling (residual {residual:e}); project first"
            ),
            Error::UnsupportedGeometry { violated } => {
                write!(f, "more than one one-sided CHSH inequality violated: {violated:?}")
            }
        }
    }
}

impl core::error::Error for Error {}
