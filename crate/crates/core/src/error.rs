use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistError {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("deterministic service has no density")]
    NoDensity,
    #[error("density argument must be non-negative, got {0}")]
    NegativeArgument(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("arrival rate lambda must be positive and finite, got {0}")]
    NonPositiveRate(f64),
    #[error("operation needs gamma service; use the deterministic limit functions instead")]
    DeterministicService,
    #[error("operation needs deterministic service")]
    NotDeterministic,
    #[error("k must be an integer for nopreempt, got {0}")]
    NonIntegerShape(f64),
    #[error("state index {index} outside 0..={k}")]
    IndexOutOfRange { index: usize, k: u64 },
    #[error("MGF argument s={s} outside its domain (s < {bound})")]
    OutOfDomain { s: f64, bound: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("service completion at t={0} with an idle server")]
    IdleCompletion(f64),
    #[error("delivery of gen_time {gen} does not refresh freshest gen_time {freshest}")]
    StaleDelivery { gen: f64, freshest: f64 },
    #[error("delivery at t={at} precedes last event at t={last}")]
    TimeReversal { at: f64, last: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error("chain needs an integer k >= 1, got {0}")]
    InvalidShape(f64),
    #[error("steady-state solve did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("quadrature failed to reach tolerance (error estimate {estimate:e})")]
    Quadrature { estimate: f64 },
    #[error("finite-difference step underflowed at h={0:e}")]
    StepUnderflow(f64),
    #[error("only {accepted} accepted samples (need at least {required})")]
    InsufficientSamples { accepted: usize, required: usize },
}
