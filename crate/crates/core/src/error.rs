use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntervalError {
    #[error("invalid interval bounds [{lo}, {hi}]")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("division by an interval containing zero")]
    DivisionByZeroInterval,
    #[error("negative argument (lower bound {0})")]
    NegativeArgument(f64),
    #[error("box contains zero")]
    ZeroInBox,
    #[error("box meets the branch cut")]
    BranchCutIntersect,
    #[error("denominator 1 + g may vanish")]
    DenominatorVanishes,
    #[error("point lies outside the tail region (Re U = {0} > -{1})")]
    OutsideTail(f64, f64),
    #[error("argument outside the monotone range of the function")]
    OutsideMonotoneRange,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertificateError {
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("gate failed: {0}")]
    GateFailed(String),
    #[error("nonpositive denominator in {0}")]
    DenominatorNonpositive(String),
    #[error("norm exponent must exceed 1 (got {0})")]
    ExponentTooSmall(f64),
    #[error("interval evaluation failed: {0}")]
    Interval(#[from] IntervalError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegratorError {
    #[error("a-priori enclosure could not be validated")]
    EnclosureFailed,
    #[error("step size fell below h_min at t = {0}")]
    StepUnderflow(f64),
    #[error("maximum number of steps exceeded")]
    MaxStepsExceeded,
    #[error("no crossing of the section within the step budget")]
    NoCrossing,
    #[error("domain guard violated at t = {t}: Im U upper bound {im_u_hi} >= -{rho0}")]
    DomainGuardViolated { t: f64, im_u_hi: f64, rho0: f64 },
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("field evaluation failed: {0}")]
    Field(#[from] IntervalError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("quadrature failed: {0}")]
    QuadratureFailed(String),
    #[error(transparent)]
    Interval(#[from] IntervalError),
}

#[derive(Debug, Error)]
pub enum StokesError {
    #[error("initial set not certified: {0}")]
    NotCertified(String),
    #[error("missing run: {0}")]
    MissingRun(String),
    #[error(transparent)]
    Certificate(#[from] CertificateError),
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error(transparent)]
    Interval(#[from] IntervalError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
}
