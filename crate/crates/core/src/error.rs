use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: {rows} rows, row {row} has {len} entries")]
    NotSquare { rows: usize, row: usize, len: usize },

    #[error("matrix has no rows")]
    Empty,

    #[error("entries ({i},{j}) and ({j},{i}) are not conjugate: asymmetry {asymmetry:e} exceeds {tol:e}")]
    NonHermitian {
        i: usize,
        j: usize,
        asymmetry: f64,
        tol: f64,
    },

    #[error("self-loop weight has imaginary part {im:e}")]
    NonRealSelfLoop { im: f64 },

    #[error("entry ({i},{j}) is not finite")]
    NonFinite { i: usize, j: usize },

    #[error("z = 0 is not a valid argument")]
    ZeroArgument,

    #[error("z + 1/z lies within {tol:e} of coupled eigenvalue {lambda}")]
    AtPole { lambda: f64, tol: f64 },

    #[error("reflection coefficient has a true pole at z = {re} + {im}i")]
    AtTruePole { re: f64, im: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    ConvergenceFailure { what: &'static str, iterations: usize },

    #[error("a = 0 and |b| = 1: reduce the instance before building the rational form")]
    PreconditionViolated,

    #[error("numerator degree {actual} differs from expected {expected}")]
    DegreeMismatch { expected: usize, actual: usize },

    #[error("rational form disagrees with direct evaluation at z = {re} + {im}i (difference {diff:e})")]
    ConsistencyFailure { re: f64, im: f64, diff: f64 },

    #[error("root {re} + {im}i is within {margin:e} of the unit circle")]
    BoundaryAmbiguity { re: f64, im: f64, margin: f64 },

    #[error("bound-state census disagrees: roots give {roots:?}, bisection gives {bisection:?}")]
    OracleDisagreement { roots: Vec<f64>, bisection: Vec<f64> },

    #[error("linear solve is singular at energy {energy}")]
    SingularSolve { energy: f64 },

    #[error("momentum k = {k} is a multiple of pi")]
    DegenerateMomentum { k: f64 },

    #[error("phase refinement exhausted depth {depth} near k = {k}")]
    RefinementExhausted { depth: u32, k: f64 },

    #[error("total phase change {turns} turns is not an integer")]
    NonIntegerWinding { turns: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Errors that flag a numerically ambiguous instance rather than bad input
    /// or a defect.
    pub fn is_ambiguity(&self) -> bool {
        matches!(
            self,
            Error::BoundaryAmbiguity { .. }
                | Error::RefinementExhausted { .. }
                | Error::NonIntegerWinding { .. }
                | Error::OracleDisagreement { .. }
        )
    }
}
