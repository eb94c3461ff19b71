use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("chart mismatch")]
    ChartMismatch,
    #[error("orientation mismatch")]
    OrientationMismatch,
    #[error("point outside graph domain: |t| = {norm:e} > {radius:e}")]
    OutOfDomain { norm: f64, radius: f64 },
    #[error("too few samples: {got} < {need}")]
    TooFewSamples { got: usize, need: usize },
    #[error("fit residual {residual:e} above tolerance {tol:e}")]
    FitResidual { residual: f64, tol: f64 },
    #[error("lip exceeded: measured {measured:e} > declared {declared:e}")]
    LipExceeded { measured: f64, declared: f64 },
    #[error("offset exceeded: measured {measured:e} > declared {declared:e}")]
    OffsetExceeded { measured: f64, declared: f64 },
    #[error("underresolved: last coefficient {last:e} vs max {max:e}")]
    Underresolved { last: f64, max: f64 },
    #[error("intersection escapes the graph domains")]
    IntersectionEscapes,
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("singular matrix")]
    Singular,
    #[error("graph fold at abscissa {0:e}")]
    GraphFold(f64),
    #[error("hypotheses violated: {0}")]
    HypothesesViolated(String),
    #[error("inclusion residual {0:e}")]
    InclusionResidual(f64),
    #[error("frames too far: transformed lip bound {lip:e} > {target:e}")]
    FramesTooFar { lip: f64, target: f64 },
    #[error("translation {norm:e} exceeds limit {limit:e}")]
    TranslationTooLarge { norm: f64, limit: f64 },
    #[error("domain too small: {got:e} < {need:e}")]
    DomainTooSmall { got: f64, need: f64 },
    #[error("splitting degenerate at index {index}: angle {angle:e}")]
    SplittingDegenerate { index: i64, angle: f64 },
    #[error("no spectral gap")]
    NoGap,
    #[error("lyapunov norm overflow at index {index}; try a window shorter than {suggested}")]
    LyapunovOverflow { index: i64, suggested: usize },
    #[error("chart collapse near indeterminacy at index {0}")]
    ChartCollapse(i64),
    #[error("orbit enters indeterminacy neighbourhood at index {0}")]
    Indeterminacy(i64),
    #[error("orbit diverges at index {0}")]
    Divergence(i64),
    #[error("too many singular steps: {singular} of {steps}")]
    TooManySingular { singular: usize, steps: usize },
    #[error("window too short: {got} < {need}")]
    WindowTooShort { got: usize, need: usize },
    #[error("index {0} outside window")]
    IndexOutOfWindow(i64),
    #[error("no recurrence at this eta/n range")]
    NoRecurrence,
    #[error("not certified: {0}")]
    NotCertified(String),
    #[error("budget failed: {0}")]
    Budget(String),
    #[error("unknown system kind `{0}`")]
    UnknownSystem(String),
    #[error("self-test failed: {0}")]
    SelfTest(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("{context}: {source}")]
    Context { context: String, source: Box<Error> },
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Error {
        Error::Context { context: context.into(), source: Box::new(self) }
    }

    /// The innermost error, with contexts stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
