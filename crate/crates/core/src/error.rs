use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("{quantity} = {value} outside admissible range [{lower}, {upper})")]
    Domain {
        quantity: &'static str,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quadrature did not reach tolerance {tolerance:e} (estimate {estimate}, error {error:e})")]
    Quadrature {
        estimate: f64,
        error: f64,
        tolerance: f64,
    },

    #[error("step size underflow at t = {at} (h = {step:e})")]
    StiffFailure { at: f64, step: f64 },

    #[error("no sign change of the period-map defect for lambda_flux = {lambda_flux}")]
    NoBracket { lambda_flux: f64 },

    #[error("period map jumps instead of crossing zero at lambda_flux = {lambda_flux} (defect {defect:e})")]
    ShootingUnstable { lambda_flux: f64, defect: f64 },

    #[error("mass(lambda) never brackets target {target} (scanned mass range [{mass_lo}, {mass_hi}])")]
    BracketFailure {
        target: f64,
        mass_lo: f64,
        mass_hi: f64,
    },

    #[error("mass(lambda) is not monotone near lambda_flux = {lambda_flux}")]
    NonMonotone { lambda_flux: f64 },

    #[error("root finder did not converge after {iterations} iterations (residual {residual:e})")]
    RootNotConverged { iterations: usize, residual: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonNonconvergence { iterations: usize, residual: f64 },

    #[error("Picard iteration did not converge after {iterations} iterations (residual {residual:e})")]
    PicardNonconvergence { iterations: usize, residual: f64 },

    #[error("singular matrix (pivot {pivot:e} in row {row})")]
    Singular { row: usize, pivot: f64 },

    #[error("continuation stalled at delta = {delta} (residual {residual:e}); last converged delta = {last_delta:?}")]
    ContinuationStall {
        delta: f64,
        residual: f64,
        last_delta: Option<f64>,
    },

    #[error("{kind} hypothesis violated: boundary trace {trace:e} exceeds {tolerance:e}")]
    Hypothesis {
        kind: &'static str,
        trace: f64,
        tolerance: f64,
    },
}

impl Error {
    /// Stable snake_case name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::InvalidInput(_) => "invalid_input",
            Error::Quadrature { .. } => "quadrature",
            Error::StiffFailure { .. } => "stiff_failure",
            Error::NoBracket { .. } => "no_bracket",
            Error::ShootingUnstable { .. } => "shooting_unstable",
            Error::BracketFailure { .. } => "bracket_failure",
            Error::NonMonotone { .. } => "non_monotone",
            Error::RootNotConverged { .. } => "root_not_converged",
            Error::NewtonNonconvergence { .. } => "newton_nonconvergence",
            Error::PicardNonconvergence { .. } => "picard_nonconvergence",
            Error::Singular { .. } => "singular",
            Error::ContinuationStall { .. } => "continuation_stall",
            Error::Hypothesis { .. } => "hypothesis",
        }
    }
}
