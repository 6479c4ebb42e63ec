use thiserror::Error;

/// Failure to parse a metric component expression.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown symbol `{name}` at byte {offset}")]
    UnknownSymbol { name: String, offset: usize },
}

/// Domain error raised while evaluating an expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("logarithm of a nonpositive number")]
    LogNonPositive,
    #[error("square root of a negative number")]
    SqrtNegative,
    #[error("power with negative base and non-integer exponent")]
    PowDomain,
    #[error("tangent evaluated at a pole")]
    TanPole,
    #[error("non-finite value")]
    NonFinite,
    #[error("point has {got} coordinates, expression expects {expected}")]
    Dimension { expected: usize, got: usize },
}

/// Invalid manifold configuration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Format(String),
    #[error("component {name}: {source}")]
    Expr {
        name: String,
        #[source]
        source: ParseError,
    },
    #[error("metric table is not symmetric: {0}")]
    Asymmetric(String),
    #[error("metric is degenerate at {point:?}")]
    Degenerate { point: Vec<f64> },
    #[error("declared signature ({pos},{neg}) but found ({found_pos},{found_neg}) at {point:?}")]
    Signature {
        pos: usize,
        neg: usize,
        found_pos: usize,
        found_neg: usize,
        point: Vec<f64>,
    },
    #[error("invalid domain: {0}")]
    Domain(String),
    #[error("no sample point of the lattice lies inside the domain")]
    EmptyDomain,
}

/// Pointwise geometry failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("point {0:?} lies outside the chart domain")]
    OutOfDomain(Vec<f64>),
    #[error("metric matrix is singular or ill-conditioned (condition number {cond:.3e})")]
    SingularMetric { cond: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("tangent vectors are based at different points")]
    BaseMismatch,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("causal classification requires a Lorentzian metric")]
    NotLorentzian,
}

/// Errors from the lifting and connection solvers (input validation).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LiftError {
    #[error("seed does not map to the path start: |E(v0) - gamma(0)| = {residual:.3e}")]
    SeedMismatch { residual: f64 },
    #[error("path is not regular: zero velocity at t = {t}")]
    Irregular { t: f64 },
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("path is not causal: {0}")]
    NotCausal(String),
    #[error("lift left the causal cone at sample {index}: {detail}")]
    ConeViolation { index: usize, detail: String },
    #[error("seed endpoints do not match the requested points")]
    EndpointMismatch,
    #[error("curve shortening left the chart domain")]
    ShorteningDiverged,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("exponential map failed at the base point: {0}")]
    Flow(String),
}
