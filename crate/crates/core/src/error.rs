use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh parameters: {0}")]
    InvalidMeshParameters(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("dual cell {cell} is not star-shaped about its primal vertex")]
    DualSelfIntersection { cell: usize },

    #[error("mesh file parse error on line {line}: {msg}")]
    MeshParse { line: usize, msg: String },

    #[error("family {family} is not available on {kind} meshes")]
    IncompatibleFamily { family: String, kind: String },

    #[error("form of degree {got} passed where degree {expected} is required")]
    WrongSpace { expected: usize, got: usize },

    #[error("dimension mismatch in {what}: {left} vs {right}")]
    DimensionMismatch { what: &'static str, left: usize, right: usize },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e}, target {target:.3e})")]
    SolverDiverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
        target: f64,
    },

    #[error("{what} is not positive definite")]
    NotPositiveDefinite { what: &'static str },

    #[error("singular local system")]
    SingularLocalSystem,

    #[error("discrete Hodge star is singular (sigma_min/sigma_max = {ratio:.3e})")]
    SingularHodgeStar { ratio: f64, near_null: Vec<f64> },

    #[error("nonpositive depth {value:.6e} in element {element}")]
    NonPositiveDepth { element: usize, value: f64 },

    #[error("zero-area element {0}")]
    ZeroAreaElement(usize),

    #[error("limiter changed total mass by {relative:.3e} (relative)")]
    MassMismatch { relative: f64 },

    #[error("unknown test case '{0}'")]
    UnknownTestCase(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("time step {step} (t = {time:.6e}): {source}")]
    AtStep {
        step: usize,
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("picard iteration did not converge (residual {0:.3e})")]
    PicardDiverged(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
