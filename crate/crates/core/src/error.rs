use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum KernelError {
    #[error("division by an expression that is zero")]
    DivisionByZero,
    #[error("division by a sum is not representable: {0}")]
    NonMonomialDenominator(String),
    #[error("arbitrary function `{inner}` nested inside `{outer}` is not supported")]
    NestedArbitraryFunction { outer: String, inner: String },
    #[error("undeclared variable: {0}")]
    UndeclaredVariable(String),
    #[error("reduction did not terminate after {sweeps} sweeps; chain: {chain}")]
    ReductionDiverged { sweeps: usize, chain: String },
    #[error("function `{name}` takes {expected} arguments, found {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid rule for `{0}`: {1}")]
    InvalidTemplate(String, String),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ProblemError {
    #[error("equation {equation}: not in solved form, the right-hand side contains {jet} (a leading derivative or one of its consequences)")]
    NotSolvedForm { equation: usize, jet: String },
    #[error("leading derivative {0} is used by more than one equation")]
    DuplicateLeading(String),
    #[error("ansatz is empty")]
    EmptyAnsatz,
    #[error("multiplier set has {found} components for {expected} equations")]
    MultiplierCount { expected: usize, found: usize },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SolveError {
    #[error("determining equations are nonlinear in the unknown coefficients")]
    NonlinearInUnknowns,
    #[error("multiplier candidate failed re-verification: {0}")]
    VerificationFailed(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FluxError {
    #[error("the divergence expression does not vanish at U = 0 (term {0})")]
    NonvanishingAtZero(String),
    #[error("divergent integral over lambda (term {0}); try another base point such as u = x")]
    DivergentIntegral(String),
    #[error("arbitrary function `{0}` present; this method needs explicit functions")]
    ArbitraryFunctionPresent(String),
    #[error("no flux in the ansatz; residual {residual}")]
    NoSolutionInAnsatz { residual: String },
    #[error("expression is not scaling-homogeneous: {0}")]
    NonHomogeneous(String),
    #[error("unsupported base point: {0}")]
    UnsupportedBasePoint(String),
    #[error("verification failed: residual {0}")]
    VerificationFailed(String),
    #[error("lambda dependence is not polynomial: {0}")]
    NonPolynomialLambda(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

impl FluxError {
    /// Variant name, for machine-readable diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            FluxError::NonvanishingAtZero(_) => "NonvanishingAtZero",
            FluxError::DivergentIntegral(_) => "DivergentIntegral",
            FluxError::ArbitraryFunctionPresent(_) => "ArbitraryFunctionPresent",
            FluxError::NoSolutionInAnsatz { .. } => "NoSolutionInAnsatz",
            FluxError::NonHomogeneous(_) => "NonHomogeneous",
            FluxError::UnsupportedBasePoint(_) => "UnsupportedBasePoint",
            FluxError::VerificationFailed(_) => "VerificationFailed",
            FluxError::NonPolynomialLambda(_) => "NonPolynomialLambda",
            FluxError::Problem(_) => "Problem",
            FluxError::Kernel(_) => "Kernel",
        }
    }

    /// True when the method does not apply to the input, as opposed to an
    /// internal failure.
    pub fn is_inapplicable(&self) -> bool {
        !matches!(
            self,
            FluxError::VerificationFailed(_) | FluxError::Problem(_) | FluxError::Kernel(_)
        )
    }
}
