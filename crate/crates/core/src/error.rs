use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("resolution m = {m} is below the minimum {min}")]
    ResolutionTooSmall { m: usize, min: usize },
    #[error("operator would need {nonzeros} nonzeros, cap is {cap}")]
    Capacity { nonzeros: usize, cap: usize },
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("configuration has no displacement for cell {cell:?}")]
    MissingCell { cell: Vec<i64> },
    #[error("displacement {value} in cell {cell:?} lies outside [-{d_max}, {d_max}]")]
    DisplacementOutOfRange { cell: Vec<i64>, value: f64, d_max: f64 },
    #[error("invalid single-site potential: {0}")]
    InvalidSite(String),
    #[error("displacement in cell {cell:?} is not a corner")]
    NonCornerDisplacement { cell: Vec<i64> },
    #[error("eigensolver did not converge after {iterations} iterations (best residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },
    #[error("operator of size {n} exceeds the dense limit {cap}")]
    SizeCap { n: usize, cap: usize },
    #[error("factorization broke down at shift {shift} after {attempts} attempts")]
    Factorization { shift: f64, attempts: usize },
    #[error("excited level {k} is within {gap:e} of the ground level")]
    DegenerateCluster { k: usize, gap: f64 },
    #[error("single-site landscape looks flat: {0}")]
    FlatLandscapeSuspected(String),
    #[error("inconclusive experiment: {0}")]
    Inconclusive(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
