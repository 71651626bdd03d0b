use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {operand}: expected {expected}, found {found}")]
    DimensionMismatch {
        operand: &'static str,
        expected: String,
        found: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("coefficient {index} has modulus {modulus} which violates the {mode} constraint")]
    InfeasibleCoefficient {
        index: usize,
        modulus: f64,
        mode: &'static str,
    },

    /// A first-order solver ran out of iterations. Carries the last iterate.
    #[error("{solver} did not converge in {iterations} iterations (residual {residual:.3e})")]
    NotConverged {
        solver: &'static str,
        iterations: usize,
        residual: f64,
        last_iterate: Vec<(f64, f64)>,
    },

    #[error("semidefinite program is infeasible: {0}")]
    Infeasible(String),

    #[error("numerical failure in {0}")]
    Numerical(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn dims(operand: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            operand,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
