use std::fmt;

use crate::shooting::ModeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid density profile: {0}")]
    InvalidProfile(String),

    #[error("non-finite radial state at step {step} (k' = {kprime})")]
    NonFinite { step: usize, kprime: f64 },

    #[error("order {order}: found {found} of {wanted} roots below k'a = {kappa_max}")]
    NotEnoughRoots {
        order: u32,
        wanted: usize,
        found: usize,
        kappa_max: f64,
    },

    #[error(
        "mode {mode}: root has {observed} interior nodes after {refinements} scan refinements"
    )]
    NodeCountMismatch {
        mode: ModeId,
        observed: usize,
        refinements: u32,
    },

    #[error("no sign change of J_{order} found below x = {limit} while seeking zero #{index}")]
    ZeroNotBracketed { order: u32, index: u32, limit: f64 },

    #[error("base mode {0} is not in the spectrum")]
    MissingBaseMode(ModeId),

    #[error("mode {mode}: {source}")]
    Mode {
        mode: ModeId,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Format(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl fmt::Display) -> Self {
        Error::InvalidArgument(msg.to_string())
    }

    pub(crate) fn at_mode(self, mode: ModeId) -> Self {
        match self {
            e @ Error::Mode { .. } => e,
            e @ Error::NodeCountMismatch { .. } => e,
            e => Error::Mode {
                mode,
                source: Box::new(e),
            },
        }
    }

    /// True when the failure came from the eigenvalue search rather than from
    /// bad input.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::NonFinite { .. }
            | Error::NotEnoughRoots { .. }
            | Error::NodeCountMismatch { .. }
            | Error::ZeroNotBracketed { .. } => true,
            Error::Mode { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}
