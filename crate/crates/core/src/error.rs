use thiserror::Error;

/// Library-wide error type.
///
/// Variants are grouped by what a caller should do about them: reject the
/// input, report an unsolvable problem, report a singular operator, or treat
/// the run as an internal failure.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed JSON. Position is byte-oriented (line, column) as reported
    /// by the parser.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// Structurally invalid network or problem data.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// The directed graph is not strongly connected.
    #[error("network is not strongly connected ({0} strongly connected components)")]
    NotStronglyConnected(usize),

    /// A field function is missing values on vertices the operation needs.
    #[error("support mismatch: no value for vertex index {missing} ({context})")]
    SupportMismatch { missing: usize, context: String },

    /// Operation needs a non-empty interior (or other non-empty subset).
    #[error("{0}")]
    EmptySubset(String),

    /// Parameter outside the admissible range (resolvent location, subset
    /// bounds, probability vectors, ...).
    #[error("bad parameter: {0}")]
    BadParameter(String),

    /// A solvability condition on the data fails (charge balance, Neumann
    /// compatibility, bi-Laplace Neumann condition, plate condition).
    #[error("{what} violated: residual {residual:.3e}")]
    Unsolvable { what: &'static str, residual: f64 },

    /// A hypothesis on coefficients fails (potential admissibility, Robin
    /// coefficient admissibility).
    #[error("{what}: {detail}")]
    Hypothesis { what: &'static str, detail: String },

    /// A kernel or block that the problem needs is singular.
    #[error("singular operator {what} (condition estimate {condition:.3e}, min pivot {min_pivot:.3e})")]
    Singular {
        what: String,
        condition: f64,
        min_pivot: f64,
    },

    /// Internal re-verification of a computed solution failed. This is a
    /// defect in the solver or a pathologically conditioned instance, not a
    /// property of the input data.
    #[error("internal residual check failed for {what}: residual {residual:.3e} exceeds {tolerance:.3e}")]
    ResidualCheck {
        what: String,
        residual: f64,
        tolerance: f64,
    },

    /// Stationary distribution could not be certified.
    #[error("stationary distribution failed verification: residual {residual:.3e}")]
    Stationary { residual: f64 },

    /// Random walk exceeded the per-trajectory step cap.
    #[error("trajectory exceeded step cap of {cap} steps")]
    StepCap { cap: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
