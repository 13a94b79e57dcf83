use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure taxonomy shared by the whole crate.
///
/// `Contract` covers precondition violations, `Sizing` covers requests that
/// exceed the available data, `Numerical` covers linear-algebra breakdowns,
/// and `Convergence` carries the final KKT violation of a stalled solver.
/// `Trial`, `Model`, and `Cell` wrap an inner error with the coordinates of
/// the Monte Carlo trial, grid entry, or sweep cell that produced it.
#[derive(Clone, Debug, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("sizing error: {0}")]
    Sizing(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no convergence after {passes} passes, max KKT violation {violation:.3e}")]
    Convergence { passes: usize, violation: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("trial {index}: {source}")]
    Trial {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("model {index}: {source}")]
    Model {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("cell (p_index={p_index}, model={model}, replication={replication}): {source}")]
    Cell {
        p_index: usize,
        model: usize,
        replication: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(std::sync::Arc<std::io::Error>),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(std::sync::Arc::new(e))
    }
}

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn sizing(msg: impl Into<String>) -> Self {
        Error::Sizing(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub fn in_trial(self, index: usize) -> Self {
        Error::Trial {
            index,
            source: Box::new(self),
        }
    }

    pub fn in_model(self, index: usize) -> Self {
        Error::Model {
            index,
            source: Box::new(self),
        }
    }

    pub fn in_cell(self, p_index: usize, model: usize, replication: usize) -> Self {
        Error::Cell {
            p_index,
            model,
            replication,
            source: Box::new(self),
        }
    }
}
