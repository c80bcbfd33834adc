use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {primitive} at argument {arg}")]
    Domain { primitive: &'static str, arg: f64 },
    #[error("domain error in {primitive} at argument {arg}, point {point:?}")]
    DomainAt { primitive: &'static str, arg: f64, point: Vec<f64> },
    #[error("{message} at offset {offset}")]
    Parse { message: String, offset: usize },
    #[error("{source} (expression offset {offset})")]
    AtExpr { offset: usize, source: Box<Error> },
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("cannot contract a degree {q} multivector into a degree {r} form")]
    DegreeUnderflow { q: usize, r: usize },
    #[error("jet order {have} is insufficient, {need} required")]
    InsufficientOrder { need: usize, have: usize },
    #[error("singular {0}")]
    Singular(String),
    #[error("normalization violated: |ι_T ω − 1| = {residual:e} at {point:?}")]
    Normalization { residual: f64, point: Vec<f64> },
    #[error("point {0:?} lies in the excluded singular set")]
    Excluded(Vec<f64>),
    #[error("point {point:?} lies outside U: |H| = {norm:e}")]
    OutsideU { norm: f64, point: Vec<f64> },
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("f' crosses zero near r = {r}")]
    SlopeZero { r: f64 },
    #[error("step size underflow at r = {r}")]
    StepUnderflow { r: f64 },
    #[error("convex hull of the weights contains the origin")]
    HullContainsOrigin,
    #[error("scene: {0}")]
    Scene(String),
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    /// Attaches the evaluation point to a bare domain error.
    pub fn at(self, point: &[f64]) -> Error {
        match self {
            Error::Domain { primitive, arg } => Error::DomainAt { primitive, arg, point: point.to_vec() },
            Error::AtExpr { offset, source } => Error::AtExpr { offset, source: Box::new(source.at(point)) },
            e => e,
        }
    }
}
