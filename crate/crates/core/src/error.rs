use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("slow value u = {u} outside admissible range [0, {u_max}]")]
    Domain { u: f64, u_max: f64 },

    /// A constructed object violates one of its invariants.
    #[error("{what} invariant violated: {detail}")]
    Invariant { what: &'static str, detail: String },

    #[error("periodic solver did not converge after {cycles} cycles (last residual {residual:e}){}", step_suffix(.step))]
    NonConvergence {
        cycles: usize,
        residual: f64,
        /// Macro step at which the micro solve failed, when known.
        step: Option<usize>,
    },

    #[error("slow variable exhausted the admissible domain{} (value {value}, u_max {u_max})", step_suffix(.step))]
    DomainExhausted {
        step: Option<usize>,
        value: f64,
        u_max: f64,
    },

    #[error("slow integrator produced a negative value {value}{}", step_suffix(.step))]
    IntegratorFailure { step: Option<usize>, value: f64 },

    #[error("full resolution refused: {projected_steps:e} fast steps projected (limit {limit:e})")]
    InfeasibleCost { projected_steps: f64, limit: f64 },

    #[error("degenerate fit design: {0}")]
    DegenerateDesign(String),

    #[error("fit did not converge after {iterations} iterations (residual norm {residual_norm:e})")]
    FitFailed {
        iterations: usize,
        residual_norm: f64,
        best: Box<crate::study::FitResult>,
    },

    /// `path` is a key path such as `system.modes[0].decay`, or the
    /// config source when the file itself could not be parsed.
    #[error("config error at `{path}`{}: {message}", line_suffix(.line))]
    Config {
        path: String,
        line: Option<usize>,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn step_suffix(step: &Option<usize>) -> String {
    step.map(|n| format!(" at step {n}")).unwrap_or_default()
}

fn line_suffix(line: &Option<usize>) -> String {
    line.map(|n| format!(" (line {n})")).unwrap_or_default()
}

impl Error {
    pub(crate) fn invariant(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Invariant {
            what,
            detail: detail.into(),
        }
    }

    pub(crate) fn config(path: impl Into<String>, line: Option<usize>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
