use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid size {size} along {axis} must be a power of two and at least 4")]
    GridSize { axis: char, size: usize },

    #[error("box length along {axis} must be positive and finite, got {value}")]
    GridLength { axis: char, value: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("expected {expected} values for the grid, got {actual}")]
    FieldLength { expected: usize, actual: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },

    #[error("non-finite field value after step {step}")]
    Divergence { step: u64 },

    #[error("control amplitude {value:e} below the division floor at ({i}, {j})")]
    ControlVanishes { i: usize, j: usize, value: f64 },

    #[error("probe/control ratio {ratio} exceeds the weak-probe limit {limit} at ({i}, {j})")]
    WeakProbeViolation { i: usize, j: usize, ratio: f64, limit: f64 },

    #[error("|xi| below the evaluation floor at masked point ({i}, {j})")]
    MaskViolation { i: usize, j: usize },

    #[error("trap equations have no solution at ({i}, {j}): residual {residual:e}")]
    IncompatibleTraps { i: usize, j: usize, residual: f64 },

    #[error("gauge field |A| = {magnitude} at ({i}, {j}) exceeds the core limit on an occupied point")]
    CoreSingularity { i: usize, j: usize, magnitude: f64 },

    #[error("phase undefined on loop sample {sample}: amplitude below floor")]
    UndefinedPhase { sample: usize },

    #[error("loop invalid: {reason}")]
    InvalidLoop { reason: &'static str },

    #[error("analytic state undefined: {reason}")]
    AnalyticDomain { reason: &'static str },

    #[error("adaptive quadrature did not converge after {intervals} intervals")]
    Quadrature { intervals: usize },

    #[error("requested retarded time {time} precedes the recorded history start {start}")]
    HistoryRange { time: f64, start: f64 },

    #[error("krylov exponential did not converge in {iterations} iterations")]
    Krylov { iterations: usize },
}
