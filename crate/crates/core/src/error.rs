use thiserror::Error;

/// Violation of a thermodynamic state invariant.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum StateError {
    #[error("negative density {0}")]
    NegativeDensity(f64),
    #[error("negative pressure {0}")]
    NegativePressure(f64),
}

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid state in a specific cell, the solver breakdown signal.
    #[error("{source} in cell ({i}, {j})")]
    Cell {
        i: usize,
        j: usize,
        #[source]
        source: StateError,
    },
    #[error(transparent)]
    State(#[from] StateError),
    #[error("stage {stage}: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),
    #[error("invalid boundary specification: {0}")]
    InvalidBoundary(String),
    #[error("invalid Butcher tableau: {0}")]
    InvalidTableau(String),
    #[error("degenerate multistep history: repeated or unordered times")]
    DegenerateHistory,
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True when the error is a state-positivity failure, possibly wrapped in
    /// integrator stage context.
    pub fn is_breakdown(&self) -> bool {
        match self {
            Error::Cell { .. } | Error::State(_) => true,
            Error::Stage { source, .. } => source.is_breakdown(),
            _ => false,
        }
    }

    /// Cell index of a breakdown, if one is attached.
    pub fn breakdown_cell(&self) -> Option<(usize, usize)> {
        match self {
            Error::Cell { i, j, .. } => Some((*i, *j)),
            Error::Stage { source, .. } => source.breakdown_cell(),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
