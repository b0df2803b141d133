use thiserror::Error;

/// Errors raised by mesh construction, refinement and the finite-element pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid domain: {0}")]
    Domain(String),

    #[error("invalid grading: {0}")]
    Grading(String),

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("element {id}: {msg}")]
    Element { id: usize, msg: String },

    #[error("mesh is not conforming: {0}")]
    Conformity(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("conjugate gradients did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("eigenvalue iteration did not converge after {sweeps} sweeps (last change {change:e})")]
    EigenDiverged { sweeps: usize, change: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }

    pub fn context(self, ctx: impl Into<String>) -> Self {
        Error::Context { context: ctx.into(), source: Box::new(self) }
    }

    /// True for errors caused by numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::SolverDiverged { .. } | Error::EigenDiverged { .. } | Error::Numerical(_) => true,
            Error::Context { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
