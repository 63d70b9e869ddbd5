use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("constraint violated: {0}")]
    Constraint(&'static str),
    #[error("frequency r = 0 is singular for the first-order transform; evolve the DC mode with dc_evolve")]
    ZeroFrequency,
    #[error("degenerate spectrum at r = {r} (min gap {gap:e}); use the dense exponential")]
    Degenerate { r: f64, gap: f64 },
    #[error("root residual {residual:e} exceeds tolerance {tol:e} at r = {r}")]
    RootResidual { r: f64, residual: f64, tol: f64 },
    #[error("unsupported combination: {0}")]
    Unsupported(String),
    #[error("fit window holds {0} samples, at least 8 required")]
    TooFewSamples(usize),
    #[error("nonpositive norm {value} at t = {t}")]
    NonPositiveNorm { t: f64, value: f64 },
    #[error("weighted integral does not converge (tail still {tail:e} after {panels} panels)")]
    DivergentTail { panels: usize, tail: f64 },
    #[error("zero-moment hypothesis violated: |moment| = {0:e}")]
    NonzeroMoment(f64),
    #[error("blow-up detected at t = {0}")]
    BlowUp(f64),
    #[error("exponents must satisfy 1 < p1 < p2 < p3")]
    Ordering,
    #[error("dissipativity violated: c_best = {c_best} at r = {r}")]
    NotDissipative { c_best: f64, r: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
